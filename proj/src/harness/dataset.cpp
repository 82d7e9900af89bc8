#include "malimg/harness/dataset.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "malimg/binimg/png_io.hpp"
#include "malimg/binimg/resize.hpp"

namespace fs = std::filesystem;

namespace malimg::harness {

const std::vector<DatasetItem>& DatasetIndex::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  fail(Errc::DataError, "unknown split '" + name + "' (expected train/val/test)");
}

namespace {

constexpr std::array<const char*, 3> kSplits{"train", "val", "test"};

void check_png_signature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::UnreadableImage, "cannot open " + path);
  static const std::array<unsigned char, 8> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::array<unsigned char, 8> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  require(in.gcount() == 8 && head == sig, Errc::UnreadableImage,
          path + " is not a PNG file");
}

// split name -> class name -> sorted file paths
using RawIndex = std::map<std::string, std::map<std::string, std::vector<std::string>>>;

RawIndex scan_tree(const fs::path& root) {
  RawIndex raw;
  for (const char* split : kSplits) {
    const fs::path dir = root / split;
    require(fs::is_directory(dir), Errc::MissingSplit, "missing split directory " + dir.string());
    for (const auto& cls : fs::directory_iterator(dir)) {
      if (!cls.is_directory()) continue;
      auto& files = raw[split][cls.path().filename().string()];
      for (const auto& f : fs::directory_iterator(cls.path())) {
        if (f.is_regular_file() && f.path().extension() == ".png") {
          files.push_back(f.path().string());
        }
      }
    }
  }
  return raw;
}

RawIndex scan_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  require(in.good(), Errc::IoError, "cannot open manifest " + manifest.string());
  const fs::path base = manifest.parent_path();
  RawIndex raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string split, cls, path;
    const bool ok = std::getline(ss, split, ',') && std::getline(ss, cls, ',') &&
                    std::getline(ss, path);
    require(ok && !split.empty() && !cls.empty() && !path.empty(), Errc::DataError,
            "manifest line " + std::to_string(lineno) + " is not 'split,class,path'");
    require(std::find_if(kSplits.begin(), kSplits.end(),
                         [&](const char* s) { return split == s; }) != kSplits.end(),
            Errc::MissingSplit, "manifest line " + std::to_string(lineno) + ": bad split '" +
                                    split + "'");
    fs::path p(path);
    if (p.is_relative()) p = base / p;
    raw[split][cls].push_back(p.string());
  }
  for (const char* split : kSplits) {
    require(raw.count(split) > 0, Errc::MissingSplit,
            std::string("manifest lists no '") + split + "' entries");
  }
  return raw;
}

}  // namespace

DatasetIndex ingest(const std::string& data_root) {
  const fs::path root(data_root);
  require(fs::exists(root), Errc::IoError, "data root " + data_root + " does not exist");
  RawIndex raw = fs::is_regular_file(root) ? scan_manifest(root) : scan_tree(root);

  DatasetIndex index;
  for (const auto& [cls, files] : raw["train"]) {
    (void)files;
    index.class_names.push_back(cls);
  }
  require(!index.class_names.empty(), Errc::DataError, "no classes under train split");

  std::set<std::string> seen_paths;
  const std::array<std::vector<DatasetItem>*, 3> targets{&index.train, &index.val, &index.test};
  for (size_t si = 0; si < kSplits.size(); ++si) {
    const char* split = kSplits[si];
    auto& items = *targets[si];
    auto& by_class = raw[split];
    for (size_t c = 0; c < index.class_names.size(); ++c) {
      const std::string& cls = index.class_names[c];
      auto it = by_class.find(cls);
      require(it != by_class.end() && !it->second.empty(), Errc::EmptyClass,
              std::string("class '") + cls + "' has no images in split '" + split + "'");
      for (const std::string& path : it->second) {
        check_png_signature(path);
        require(seen_paths.insert(path).second, Errc::DataError,
                path + " appears in more than one split");
        items.push_back({path, static_cast<int>(c)});
      }
    }
    std::sort(items.begin(), items.end(),
              [](const DatasetItem& a, const DatasetItem& b) { return a.path < b.path; });
  }

  index.train_counts.assign(index.class_names.size(), 0);
  for (const auto& item : index.train) ++index.train_counts[static_cast<size_t>(item.label)];
  index.train_total = static_cast<int64_t>(index.train.size());
  return index;
}

std::vector<nn::Scalar> load_image(const std::string& path, int channels, int size,
                                   bool* adapted) {
  binimg::RawImage raw = binimg::read_png(path);
  binimg::ImageTensor img = binimg::to_tensor(raw, channels, adapted);
  if (img.height != size || img.width != size) {
    img = binimg::lanczos_resize(img, size, size);
  }
  return std::move(img.data);
}

SplitCache::SplitCache(const std::vector<DatasetItem>& items, int channels, int size)
    : channels_(channels), size_(size) {
  images_.reserve(items.size());
  labels_.reserve(items.size());
  for (const auto& item : items) {
    bool adapted = false;
    images_.push_back(load_image(item.path, channels, size, &adapted));
    labels_.push_back(item.label);
    if (adapted) ++adapted_;
  }
}

aug::LabeledBatch make_batch(const SplitCache& cache, std::span<const size_t> rows,
                             int num_classes) {
  require(!rows.empty(), Errc::DataError, "empty batch");
  const int B = static_cast<int>(rows.size());
  const int K = cache.channels();
  const int S = cache.side();
  const size_t plane = static_cast<size_t>(K) * S * S;

  std::vector<nn::Scalar> images(static_cast<size_t>(B) * plane);
  std::vector<nn::Scalar> labels(static_cast<size_t>(B) * num_classes, 0.0);
  for (int b = 0; b < B; ++b) {
    const auto& img = cache.image(rows[static_cast<size_t>(b)]);
    std::copy(img.begin(), img.end(), images.begin() + static_cast<size_t>(b) * plane);
    const int y = cache.label(rows[static_cast<size_t>(b)]);
    require(y >= 0 && y < num_classes, Errc::DataError, "label out of range");
    labels[static_cast<size_t>(b) * num_classes + static_cast<size_t>(y)] = 1.0;
  }
  aug::LabeledBatch batch;
  batch.images = nn::Tensor::from({B, K, S, S}, std::move(images));
  batch.labels = nn::Tensor::from({B, num_classes}, std::move(labels));
  return batch;
}

}  // namespace malimg::harness
