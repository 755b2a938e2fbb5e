#include "rcov/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <set>
#include <sstream>

#include "rcov/errors.hpp"

namespace rcov::cli {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "data.path",
      "simulation.length", "simulation.burn_in", "simulation.innovation", "simulation.innovations",
      "simulation.dim", "simulation.nu", "simulation.nu1", "simulation.nu2",
      "simulation.embedding_seed", "simulation.static_scale", "simulation.replications",
      "simulation.seed",
      "split.scheme", "split.train", "split.val", "split.test", "split.val_days", "split.test_days",
      "transform.kind",
      "model.preset", "model.layers", "model.lag", "model.lrelu_slope", "model.peephole",
      "train.lr", "train.beta1", "train.beta2", "train.weight_decay", "train.batch_size",
      "train.l1_lambda", "train.loss", "train.huber_delta", "train.huber_mode", "train.max_epochs",
      "train.patience", "train.seed",
      "evaluate.model", "evaluate.checkpoint", "evaluate.lag", "evaluate.order", "evaluate.factors",
      "evaluate.dcaw_p", "evaluate.dcaw_q",
      "baselines.ma_lags", "baselines.var_orders", "baselines.factor_dims", "baselines.dcaw_orders",
      "ablate.transforms", "ablate.losses",
      "compare.models",
      "convert.input", "convert.output",
  };
  return keys;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

Config from_ptree(const pt::ptree& tree) {
  Config c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' must appear inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!known_keys().count(full)) throw ConfigError("unknown config key '" + full + "'");
      c.set(full, trim(value.data()));
    }
  }
  return c;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("'" + key + "' = '" + value + "' is not " + what);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return from_ptree(tree);
}

Config Config::from_string(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return from_ptree(tree);
}

bool Config::has_section(const std::string& section) const {
  const auto it = values_.lower_bound(section + ".");
  return it != values_.end() && it->first.rfind(section + ".", 0) == 0;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::real(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = values_.at(key);
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "a number");
}

Index Config::integer(const std::string& key, Index fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = values_.at(key);
  Index x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return x;
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = values_.at(key);
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return x;
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = values_.at(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string> Config::list(const std::string& key, const std::string& fallback) const {
  std::vector<std::string> out;
  std::istringstream in(str(key, fallback));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Index> Config::int_list(const std::string& key, const std::string& fallback) const {
  std::vector<Index> out;
  for (const auto& item : list(key, fallback)) {
    const auto dash = item.find('-', 1);
    auto parse = [&](const std::string& s) {
      Index x = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      if (ec != std::errc{} || ptr != s.data() + s.size()) bad_value(key, item, "an integer list");
      return x;
    };
    if (dash == std::string::npos) {
      out.push_back(parse(item));
    } else {
      const Index a = parse(trim(item.substr(0, dash))), b = parse(trim(item.substr(dash + 1)));
      if (b < a) bad_value(key, item, "an increasing range");
      for (Index x = a; x <= b; ++x) out.push_back(x);
    }
  }
  if (out.empty()) throw ConfigError("'" + key + "' must not be empty");
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace rcov::cli
