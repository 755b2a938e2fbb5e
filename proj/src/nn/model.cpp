#include "rcov/nn/model.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "rcov/errors.hpp"
#include "rcov/io/files.hpp"
#include "rcov/linalg/random.hpp"

namespace rcov::nn {

namespace {

constexpr char kCheckpointTag[8] = {'R', 'C', 'O', 'V', 'N', 'N', '0', '1'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

Index parse_index(std::string_view s) {
  Index v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v <= 0)
    throw ConfigError("expected a positive integer, got '" + std::string(s) + "'");
  return v;
}

LayerSpec layer(LayerKind kind, Index in, Index out, Index k) {
  LayerSpec l;
  l.kind = kind;
  l.in_channels = in;
  l.out_channels = out;
  l.kh = l.kw = k;
  return l;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::ConvLstm: return "convlstm";
    case LayerKind::ConvLRelu: return "conv";
    case LayerKind::ConvLinear: return "linear";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto k : {LayerKind::ConvLstm, LayerKind::ConvLRelu, LayerKind::ConvLinear})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (lag < 1) throw ConfigError("lag must be >= 1");
  if (dim < 1) throw ConfigError("input dimension must be >= 1");
  if (layers.size() < 2) throw ConfigError("need a ConvLstm layer and a linear output layer");
  if (layers.front().kind != LayerKind::ConvLstm) throw ConfigError("first layer must be convlstm");
  if (layers.front().in_channels != 1) throw ConfigError("first layer takes one input channel");
  if (layers.back().kind != LayerKind::ConvLinear || layers.back().out_channels != 1)
    throw ConfigError("last layer must be linear with one output channel");
  if (!(lrelu_slope >= 0.0)) throw ConfigError("lrelu slope must be non-negative");
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    if (l > 0 && s.kind == LayerKind::ConvLstm) throw ConfigError("only the first layer may be convlstm");
    if (s.kh < 1 || s.kw < 1 || s.kh % 2 == 0 || s.kw % 2 == 0)
      throw ConfigError("kernel sizes must be odd");
    if (s.in_channels < 1 || s.out_channels < 1) throw ConfigError("channel counts must be >= 1");
    if (l > 0 && s.in_channels != layers[l - 1].out_channels)
      throw ConfigError("layer " + std::to_string(l) + " input channels do not match the previous output");
    if (s.peephole && s.kind != LayerKind::ConvLstm) throw ConfigError("peephole applies to convlstm only");
  }
}

ModelSpec ModelSpec::simulation(Index dim, Index lag) {
  return {lag, dim,
          {layer(LayerKind::ConvLstm, 1, 8, 3), layer(LayerKind::ConvLRelu, 8, 16, 3),
           layer(LayerKind::ConvLinear, 16, 1, 1)}};
}

ModelSpec ModelSpec::djia(Index dim, Index lag) {
  return {lag, dim,
          {layer(LayerKind::ConvLstm, 1, 4, 3), layer(LayerKind::ConvLRelu, 4, 8, 3),
           layer(LayerKind::ConvLinear, 8, 1, 1)}};
}

ModelSpec ModelSpec::sp100(Index dim, Index lag) {
  return {lag, dim,
          {layer(LayerKind::ConvLstm, 1, 16, 5), layer(LayerKind::ConvLRelu, 16, 16, 3),
           layer(LayerKind::ConvLRelu, 16, 32, 3), layer(LayerKind::ConvLinear, 32, 1, 5)}};
}

ModelSpec ModelSpec::preset(std::string_view name, Index dim, Index lag) {
  if (name == "simulation") return simulation(dim, lag);
  if (name == "djia") return djia(dim, lag);
  if (name == "sp100") return sp100(dim, lag);
  throw ConfigError("unknown architecture preset '" + std::string(name) + "'");
}

std::string ModelSpec::layers_string() const {
  std::ostringstream os;
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& s = layers[l];
    if (l) os << ',';
    os << to_string(s.kind) << ':' << s.in_channels << ':' << s.out_channels << ':' << s.kh;
    if (s.kw != s.kh) os << 'x' << s.kw;
    if (!s.use_bias) os << ":nobias";
    if (s.peephole) os << ":peephole";
  }
  return os.str();
}

std::vector<LayerSpec> ModelSpec::parse_layers(std::string_view text) {
  std::vector<LayerSpec> out;
  for (auto item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() < 4) throw ConfigError("layer '" + std::string(item) + "' needs kind:in:out:kernel");
    LayerSpec s;
    s.kind = parse_layer_kind(parts[0]);
    s.in_channels = parse_index(parts[1]);
    s.out_channels = parse_index(parts[2]);
    const auto k = split(parts[3], 'x');
    if (k.size() > 2) throw ConfigError("bad kernel '" + std::string(parts[3]) + "'");
    s.kh = parse_index(k[0]);
    s.kw = k.size() == 2 ? parse_index(k[1]) : s.kh;
    for (size_t i = 4; i < parts.size(); ++i) {
      if (parts[i] == "nobias") s.use_bias = false;
      else if (parts[i] == "peephole") s.peephole = true;
      else throw ConfigError("unknown layer flag '" + std::string(parts[i]) + "'");
    }
    out.push_back(s);
  }
  return out;
}

ModelLayout::ModelLayout(const ModelSpec& spec) {
  spec.validate();
  Index off = 0;
  for (const auto& s : spec.layers) {
    LayerBlocks b;
    const Index k2 = s.kh * s.kw;
    if (s.kind == LayerKind::ConvLstm) {
      b.kernel_rows = 4 * s.out_channels;
      b.kernel_cols = (s.in_channels + s.out_channels) * k2;
    } else {
      b.kernel_rows = s.out_channels;
      b.kernel_cols = s.in_channels * k2;
    }
    b.kernel = off;
    off += b.kernel_rows * b.kernel_cols;
    b.bias = off;
    b.bias_size = s.use_bias ? b.kernel_rows : 0;
    off += b.bias_size;
    b.peephole = off;
    if (s.peephole) {
      b.peephole_rows = 3 * s.out_channels;
      b.peephole_cols = spec.cells();
    }
    off += b.peephole_rows * b.peephole_cols;
    blocks_.push_back(b);
  }
  size_ = off;
}

VectorXd ModelLayout::kernel_mask() const {
  VectorXd m = VectorXd::Zero(size_);
  for (const auto& b : blocks_) m.segment(b.kernel, b.kernel_rows * b.kernel_cols).setOnes();
  return m;
}

ParamCount count_params(const ModelSpec& spec) {
  const ModelLayout layout(spec);
  ParamCount c;
  for (size_t l = 0; l < layout.layer_count(); ++l)
    c.weights_only += layout.blocks(l).kernel_rows * layout.blocks(l).kernel_cols;
  c.total = layout.size();
  return c;
}

ModelWeights::ModelWeights(ModelSpec s)
    : spec(std::move(s)), layout(spec), values(VectorXd::Zero(layout.size())) {}

ModelWeights init_weights(const ModelSpec& spec, std::uint64_t seed) {
  ModelWeights w(spec);
  Rng rng(seed);
  auto fill = [&](auto block, Index fan_in) {
    const double bound = std::sqrt(6.0 / double(fan_in));
    for (Index j = 0; j < block.cols(); ++j)
      for (Index i = 0; i < block.rows(); ++i) block(i, j) = bound * (2.0 * rng.uniform() - 1.0);
  };
  for (size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& s = spec.layers[l];
    const Index k2 = s.kh * s.kw;
    auto k = w.kernel(l);
    if (s.kind == LayerKind::ConvLstm) {
      fill(k.leftCols(s.in_channels * k2), s.in_channels * k2);
      fill(k.rightCols(s.out_channels * k2), s.out_channels * k2);
      if (s.use_bias) w.bias(l).segment(s.out_channels, s.out_channels).setOnes();
    } else {
      fill(k, s.in_channels * k2);
    }
  }
  return w;
}

std::uint64_t spec_digest(const ModelSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "lag=" << spec.lag << ";dim=" << spec.dim << ";slope=" << spec.lrelu_slope
     << ";layers=" << spec.layers_string();
  return io::fnv1a(os.str());
}

void save_checkpoint(const std::string& path, const ModelWeights& weights) {
  std::vector<char> bytes(kCheckpointTag, kCheckpointTag + 8);
  io::put_u64_le(bytes, spec_digest(weights.spec));
  io::put_u64_le(bytes, static_cast<std::uint64_t>(weights.values.size()));
  for (Index i = 0; i < weights.values.size(); ++i) io::put_f64_le(bytes, weights.values(i));
  io::atomic_write(path, bytes);
}

ModelWeights load_checkpoint(const std::string& path, const ModelSpec& spec) {
  const auto bytes = io::read_bytes(path);
  if (bytes.size() < 24 || !std::equal(kCheckpointTag, kCheckpointTag + 8, bytes.begin()))
    throw DataError(path + " is not a model checkpoint");
  if (io::get_u64_le(bytes.data() + 8) != spec_digest(spec))
    throw DataError(path + " was written for a different architecture");
  ModelWeights w(spec);
  const auto n = io::get_u64_le(bytes.data() + 16);
  if (n != static_cast<std::uint64_t>(w.values.size()) || bytes.size() != 24 + 8 * n)
    throw DataError(path + " has a truncated or oversized parameter block");
  for (Index i = 0; i < w.values.size(); ++i) w.values(i) = io::get_f64_le(bytes.data() + 24 + 8 * i);
  return w;
}

}  // namespace rcov::nn
