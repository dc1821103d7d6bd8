// SPDX-License-Identifier: Apache-2.0

#include "sdgan/corpus.hpp"

#include "sdgan/errors.hpp"
#include "sdgan/tensor_io.hpp"

namespace sdgan {

namespace fs = std::filesystem;

namespace {

fs::path feature_path(const fs::path& dir, const std::string& id, const char* stream) {
  return dir / "features" / (id + "." + stream + ".sdgf");
}

}  // namespace

void save_corpus(const Corpus& corpus, const fs::path& dir) {
  if (corpus.features.size() != corpus.dataset.videos.size()) throw std::invalid_argument("feature count mismatch");
  fs::create_directories(dir / "features");
  save_dataset(corpus.dataset, dir / "annotations.jsonl");
  write_blob(dir / "embeddings.sdgf", corpus.embeddings);
  for (std::size_t i = 0; i < corpus.features.size(); ++i) {
    const auto& id = corpus.dataset.videos[i].video_id;
    write_blob(feature_path(dir, id, "dyn"), corpus.features[i].dynamic);
    write_blob(feature_path(dir, id, "sta"), corpus.features[i].stat);
  }
}

Corpus load_corpus(const fs::path& dir) {
  Corpus c;
  c.dataset = load_dataset(dir / "annotations.jsonl");
  c.embeddings = read_blob(dir / "embeddings.sdgf");
  Eigen::Index width = -1;
  for (const auto& v : c.dataset.videos) {
    VideoFeatures f{read_blob(feature_path(dir, v.video_id, "dyn")), read_blob(feature_path(dir, v.video_id, "sta"))};
    for (const auto* m : {&f.dynamic, &f.stat}) {
      if (m->rows() != v.num_clips) {
        throw ValidationError("video '" + v.video_id + "': feature rows " + std::to_string(m->rows()) +
                              " != num_clips " + std::to_string(v.num_clips));
      }
      if (width < 0) width = m->cols();
      if (m->cols() != width) throw ValidationError("video '" + v.video_id + "': inconsistent feature width");
    }
    for (const auto& q : v.queries) {
      for (int t : q.tokens) {
        if (t >= c.embeddings.rows()) {
          throw ValidationError("query '" + q.query_id + "': token " + std::to_string(t) + " outside vocabulary");
        }
      }
    }
    c.features.push_back(std::move(f));
  }
  return c;
}

}  // namespace sdgan
