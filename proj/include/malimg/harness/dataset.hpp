#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "malimg/aug/mixup.hpp"
#include "malimg/nn/tensor.hpp"

namespace malimg::harness {

struct DatasetItem {
  std::string path;
  int label = 0;
};

struct DatasetIndex {
  std::vector<std::string> class_names;
  std::vector<DatasetItem> train, val, test;
  std::vector<int64_t> train_counts;  // per-class, feeds the Eq-style class weights
  int64_t train_total = 0;

  const std::vector<DatasetItem>& split(const std::string& name) const;
};

// Builds the index from either layout:
//   directory tree   <root>/{train,val,test}/<class>/*.png
//   manifest file    one "split,class,path" line per image (relative paths
//                    resolve against the manifest's directory)
// Class names are the sorted train-split class set; every split must contain
// every class with at least one image. Items are sorted by path. Each file
// is checked for the 8-byte PNG signature up front.
DatasetIndex ingest(const std::string& data_root);

// PNG -> flat (channels, size, size) values in [0,1]. Channel-count
// mismatches are adapted (gray replicated / RGB averaged) and flagged via
// `adapted`; other sizes are Lanczos-resized.
std::vector<nn::Scalar> load_image(const std::string& path, int channels, int size,
                                   bool* adapted = nullptr);

// One split decoded up front and held in memory. Desk-scale corpora fit
// easily; a streaming loader is out of scope.
class SplitCache {
 public:
  SplitCache(const std::vector<DatasetItem>& items, int channels, int size);

  const std::vector<nn::Scalar>& image(size_t i) const { return images_[i]; }
  int label(size_t i) const { return labels_[i]; }
  size_t size() const { return images_.size(); }
  int channels() const { return channels_; }
  int side() const { return size_; }
  int adapted_count() const { return adapted_; }

 private:
  std::vector<std::vector<nn::Scalar>> images_;
  std::vector<int> labels_;
  int channels_ = 1;
  int size_ = 0;
  int adapted_ = 0;
};

// (B,K,S,S) images plus (B,C) one-hot labels for the given cache rows.
aug::LabeledBatch make_batch(const SplitCache& cache, std::span<const size_t> rows,
                             int num_classes);

}  // namespace malimg::harness
