#include "rcov/series.hpp"

namespace rcov {

RCovSeries::RCovSeries(std::vector<SpdMatrixd> matrices, std::vector<std::int64_t> labels,
                       std::vector<std::string> assets)
    : matrices_(std::move(matrices)), labels_(std::move(labels)), assets_(std::move(assets)) {
  if (matrices_.empty()) throw SeriesTooShort("series holds no matrices");
  d_ = matrices_.front().dim();
  for (const auto& m : matrices_) {
    if (m.dim() != d_) throw DimensionMismatch("all matrices in a series must share one dimension");
  }
  if (labels_.empty()) {
    labels_.resize(matrices_.size());
    for (size_t t = 0; t < labels_.size(); ++t) labels_[t] = static_cast<std::int64_t>(t);
  }
  if (labels_.size() != matrices_.size()) {
    throw DimensionMismatch("label count " + std::to_string(labels_.size()) +
                            " differs from matrix count " + std::to_string(matrices_.size()));
  }
  for (size_t t = 1; t < labels_.size(); ++t) {
    if (labels_[t] <= labels_[t - 1]) throw DataError("day labels must be strictly increasing");
  }
  if (assets_.empty()) {
    for (Index i = 0; i < d_; ++i) assets_.push_back("A" + std::to_string(i));
  }
  if (static_cast<Index>(assets_.size()) != d_) {
    throw DimensionMismatch("asset count differs from matrix dimension");
  }
}

RCovSeries RCovSeries::slice(Index begin, Index end) const {
  if (begin < 0 || end > size() || begin >= end) {
    throw IndexOutOfRange("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                          ") of a series of length " + std::to_string(size()));
  }
  return RCovSeries({matrices_.begin() + begin, matrices_.begin() + end},
                    {labels_.begin() + begin, labels_.begin() + end}, assets_);
}

}  // namespace rcov
