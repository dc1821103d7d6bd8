// SPDX-License-Identifier: Apache-2.0
//
// On-disk layout of a dataset directory:
//   annotations.jsonl
//   embeddings.sdgf              vocab x E token table
//   features/<video_id>.dyn.sdgf T x D_raw dynamic stream
//   features/<video_id>.sta.sdgf T x D_raw static stream

#pragma once

#include "sdgan/data_model.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace sdgan {

struct VideoFeatures {
  Eigen::MatrixXd dynamic;
  Eigen::MatrixXd stat;
};

struct Corpus {
  GroundingDataset dataset;
  std::vector<VideoFeatures> features;  // parallel to dataset.videos
  Eigen::MatrixXd embeddings;
};

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
/// Validates that every feature blob has num_clips rows and a common width,
/// and that every token id indexes the embedding table.
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace sdgan
