#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcov/linalg.hpp"

namespace rcov {

/// Time-indexed sequence of d x d SPD matrices with asset and day labels.
class RCovSeries {
 public:
  RCovSeries() = default;

  /// Validates dimensions, SPD-ness and strictly increasing labels. Empty
  /// `labels` become 0..T-1, empty `assets` become A0..A{d-1}.
  RCovSeries(std::vector<SpdMatrixd> matrices, std::vector<std::int64_t> labels = {},
             std::vector<std::string> assets = {});

  Index dim() const { return d_; }
  Index size() const { return static_cast<Index>(matrices_.size()); }
  bool empty() const { return matrices_.empty(); }

  const SpdMatrixd& operator[](Index t) const { return matrices_[static_cast<size_t>(t)]; }
  const std::vector<SpdMatrixd>& matrices() const { return matrices_; }
  const std::vector<std::int64_t>& labels() const { return labels_; }
  const std::vector<std::string>& assets() const { return assets_; }

  /// Contiguous sub-series [begin, end).
  RCovSeries slice(Index begin, Index end) const;

 private:
  Index d_ = 0;
  std::vector<SpdMatrixd> matrices_;
  std::vector<std::int64_t> labels_;
  std::vector<std::string> assets_;
};

/// Half-open index range [begin, end).
struct Range {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
  bool contains(Index t) const { return t >= begin && t < end; }
};

}  // namespace rcov
