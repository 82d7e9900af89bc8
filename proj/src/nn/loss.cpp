#include "malimg/nn/loss.hpp"

namespace malimg::nn {

ClassWeights ClassWeights::uniform(int num_classes) {
  require(num_classes > 0, Errc::ConfigError, "num_classes must be positive");
  return ClassWeights{std::vector<Scalar>(static_cast<size_t>(num_classes), 1.0)};
}

ClassWeights ClassWeights::from_counts(const std::vector<int64_t>& counts) {
  const auto C = counts.size();
  require(C > 0, Errc::ConfigError, "empty class counts");
  int64_t total = 0;
  for (int64_t n : counts) {
    require(n > 0, Errc::EmptyClass, "class with zero training examples");
    total += n;
  }
  ClassWeights cw;
  cw.w.resize(C);
  for (size_t c = 0; c < C; ++c) {
    cw.w[c] = static_cast<Scalar>(total) / (static_cast<Scalar>(C) * static_cast<Scalar>(counts[c]));
  }
  return cw;
}

void ClassWeights::validate() const {
  require(!w.empty(), Errc::ConfigError, "empty class weights");
  for (Scalar v : w) require(v > 0, Errc::ConfigError, "class weights must be positive");
}

}  // namespace malimg::nn
