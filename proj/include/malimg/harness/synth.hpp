#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace malimg::harness {

// Synthetic desk-scale corpus: every sample is a structurally valid DEX file
// whose post-header bytes carry a class-specific 2-D sinusoid texture, so the
// images go through the genuine parse -> grid -> (colorize) -> resize path.
struct SynthSpec {
  int num_classes = 5;
  int train_per_class = 200;
  int val_per_class = 40;
  int test_per_class = 40;
  int image_size = 64;
  int channels = 1;
  uint64_t seed = 7;

  void validate() const;
};

// One synthetic DEX byte stream for class `cls`.
std::vector<uint8_t> synth_dex(const SynthSpec& spec, int cls, std::mt19937_64& rng);

// Writes <out_dir>/{train,val,test}/class_<c>/<img>.png through the real
// conversion pipeline. Returns the number of images written.
int generate_corpus(const SynthSpec& spec, const std::string& out_dir);

}  // namespace malimg::harness
