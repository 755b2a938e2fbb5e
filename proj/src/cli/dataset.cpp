#include "rcov/cli/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rcov/errors.hpp"
#include "rcov/io/files.hpp"

namespace rcov::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path payload_path(const fs::path& json_path) {
  fs::path p = json_path;
  return p.replace_extension(".bin");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where + ": '" + s + "' is not a number");
  }
}

}  // namespace

void write_dataset(const std::string& json_path, const RCovSeries& series,
                   const std::string& provenance) {
  const fs::path jp(json_path);
  if (jp.extension() != ".json") throw ConfigError("dataset path must end in .json: " + json_path);
  const Index d = series.dim(), t_len = series.size();
  std::vector<char> payload;
  payload.reserve(static_cast<size_t>(8 * t_len * d * d));
  for (const auto& m : series.matrices())
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) io::put_f64_le(payload, m(i, j));

  json meta;
  meta["format_version"] = kDatasetFormatVersion;
  meta["d"] = d;
  meta["T"] = t_len;
  meta["assets"] = series.assets();
  meta["labels"] = series.labels();
  meta["payload"] = payload_path(jp).filename().string();
  meta["layout"] = "float64-le [t][i][j]";
  meta["provenance"] = provenance;
  io::atomic_write(payload_path(jp).string(), payload);
  io::atomic_write(json_path, meta.dump(2) + "\n");
}

RCovSeries read_dataset(const std::string& json_path) {
  if (!fs::exists(json_path)) throw DataError("dataset not found: " + json_path);
  json meta;
  try {
    meta = json::parse(io::read_text(json_path));
  } catch (const json::exception& e) {
    throw DataError(json_path + ": " + e.what());
  }
  try {
    if (meta.at("format_version").get<int>() != kDatasetFormatVersion)
      throw DataError(json_path + ": unsupported format version");
    const Index d = meta.at("d").get<Index>(), t_len = meta.at("T").get<Index>();
    if (d < 1 || t_len < 1) throw DataError(json_path + ": empty dataset");
    const fs::path bin = fs::path(json_path).parent_path() / meta.at("payload").get<std::string>();
    const auto bytes = io::read_bytes(bin.string());
    if (bytes.size() != static_cast<size_t>(8 * t_len * d * d))
      throw DataError(bin.string() + ": payload holds " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(8 * t_len * d * d));
    std::vector<SpdMatrixd> ms;
    ms.reserve(static_cast<size_t>(t_len));
    const char* p = bytes.data();
    for (Index t = 0; t < t_len; ++t) {
      MatrixXd m(d, d);
      for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j, p += 8) m(i, j) = io::get_f64_le(p);
      const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw DataError(json_path + ": slice " + std::to_string(t) + " is not symmetric");
      try {
        ms.emplace_back(m);
      } catch (const NotPositiveDefinite&) {
        throw DataError(json_path + ": slice " + std::to_string(t) + " is not positive definite");
      }
    }
    return RCovSeries(std::move(ms), meta.value("labels", std::vector<std::int64_t>{}),
                      meta.value("assets", std::vector<std::string>{}));
  } catch (const json::exception& e) {
    throw DataError(json_path + ": " + e.what());
  }
}

RCovSeries read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto header = split_csv(line);
  if (header.size() < 2) throw DataError(path + ": header needs a day column and asset names");
  const std::vector<std::string> assets(header.begin() + 1, header.end());
  const Index d = static_cast<Index>(assets.size());

  std::vector<SpdMatrixd> ms;
  std::vector<std::int64_t> labels;
  MatrixXd cur(d, d);
  Index row = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (static_cast<Index>(cells.size()) != d + 1)
      throw DataError(where + ": expected " + std::to_string(d + 1) + " fields");
    const auto label = static_cast<std::int64_t>(parse_double(cells[0], where));
    if (row == 0) labels.push_back(label);
    else if (label != labels.back()) throw DataError(where + ": day label changes inside a matrix");
    for (Index j = 0; j < d; ++j) cur(row, j) = parse_double(cells[size_t(j + 1)], where);
    if (++row == d) {
      try {
        ms.emplace_back(cur);
      } catch (const NotPositiveDefinite&) {
        throw DataError(where + ": matrix of day " + std::to_string(labels.back()) + " is not positive definite");
      }
      row = 0;
    }
  }
  if (row != 0) throw DataError(path + ": last matrix is incomplete");
  if (ms.empty()) throw DataError(path + ": no matrices");
  return RCovSeries(std::move(ms), std::move(labels), assets);
}

std::string to_matrix_csv(const RCovSeries& series) {
  std::ostringstream os;
  os.precision(17);
  os << "day";
  for (const auto& a : series.assets()) os << ',' << a;
  os << '\n';
  for (Index t = 0; t < series.size(); ++t)
    for (Index i = 0; i < series.dim(); ++i) {
      os << series.labels()[size_t(t)];
      for (Index j = 0; j < series.dim(); ++j) os << ',' << series[t](i, j);
      os << '\n';
    }
  return os.str();
}

}  // namespace rcov::cli
