#pragma once

#include <string>

#include "rcov/series.hpp"

namespace rcov::cli {

inline constexpr int kDatasetFormatVersion = 1;

/// Writes `<stem>.json` (metadata) and `<stem>.bin` (T*d*d little-endian
/// float64, [t][i][j]) atomically. `json_path` must end in ".json".
void write_dataset(const std::string& json_path, const RCovSeries& series,
                   const std::string& provenance);

/// Reads a dataset written by write_dataset. Throws DataError for a missing
/// file, a bad version, a payload of the wrong length, an asymmetric slice
/// (beyond 1e-9 relative) or a slice that is not positive definite.
RCovSeries read_dataset(const std::string& json_path);

/// Per-day CSV: header "day,<asset>,...", then d rows per day, each starting
/// with the day label followed by one matrix row.
RCovSeries read_matrix_csv(const std::string& path);
std::string to_matrix_csv(const RCovSeries& series);

}  // namespace rcov::cli
