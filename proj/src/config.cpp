#include "rmesn/error.hpp"
#include "rmesn/pipeline.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

namespace rmesn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw InvalidArgument("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                        std::string(expected) + ")");
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a real number");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

std::size_t to_count(std::string_view key, std::string_view v) { return static_cast<std::size_t>(to_u64(key, v)); }

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view v, F&& item) {
  std::vector<T> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto piece = trim(v.substr(0, comma));
    if (!piece.empty()) out.push_back(item(piece));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

SyntheticSpec& synthetic(PipelineConfig& c) {
  if (!c.synthetic) c.synthetic.emplace();
  return *c.synthetic;
}

}  // namespace

std::string_view to_string(ReadoutKind kind) { return kind == ReadoutKind::Ridge ? "ridge" : "mlp"; }

ReadoutKind parse_readout_kind(std::string_view text) {
  if (text == "ridge") return ReadoutKind::Ridge;
  if (text == "mlp") return ReadoutKind::Mlp;
  throw InvalidArgument("unknown readout '" + std::string(text) + "'");
}

void PipelineConfig::validate() const {
  reservoir.validate();
  mlp.validate();
  if (dimred.enabled && (dimred.components < 1 || dimred.components > reservoir.units)) {
    throw InvalidArgument("dimred.components must be in [1, reservoir.units]");
  }
  if (!(model_lambda > 0.0) || !std::isfinite(model_lambda)) throw InvalidArgument("model_lambda must be positive");
  if (!(readout_lambda >= 0.0) || !std::isfinite(readout_lambda)) {
    throw InvalidArgument("readout.lambda must be non-negative");
  }
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  if (folds < 2) throw InvalidArgument("sweep.folds must be at least 2");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw InvalidArgument("split must be in (0, 1)");
}

bool PipelineConfig::uses_projection() const noexcept {
  return dimred.enabled && representation != RepresentationKind::LastState;
}

std::vector<std::uint64_t> PipelineConfig::trial_seeds(std::size_t n_runs) const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < n_runs; ++i) out.push_back(i < seeds.size() ? seeds[i] : seed + i);
  return out;
}

void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
  const auto v = trim(value);
  auto& r = c.reservoir;
  auto& m = c.mlp;
  if (key == "reservoir.units") r.units = to_count(key, v);
  else if (key == "reservoir.spectral_radius") r.spectral_radius = to_real(key, v);
  else if (key == "reservoir.connectivity") r.connectivity = to_real(key, v);
  else if (key == "reservoir.input_scaling") r.input_scaling = to_real(key, v);
  else if (key == "reservoir.noise") r.noise_level = to_real(key, v);
  else if (key == "reservoir.bidirectional") r.bidirectional = to_bool(key, v);
  else if (key == "reservoir.seed") r.seed = to_u64(key, v);
  else if (key == "dimred.enabled") c.dimred.enabled = to_bool(key, v);
  else if (key == "dimred.components") c.dimred.components = to_count(key, v);
  else if (key == "dimred.mode") c.dimred.mode = parse_covariance_mode(v);
  else if (key == "dimred.centered") c.dimred.centered = to_bool(key, v);
  else if (key == "representation") c.representation = parse_representation_kind(v);
  else if (key == "readout") c.readout = parse_readout_kind(v);
  else if (key == "readout.lambda") c.readout_lambda = to_real(key, v);
  else if (key == "model_lambda") c.model_lambda = to_real(key, v);
  else if (key == "normalize") c.normalize = to_bool(key, v);
  else if (key == "mlp.hidden") m.hidden = to_list<std::size_t>(v, [&](auto s) { return to_count(key, s); });
  else if (key == "mlp.activation") m.activation = parse_activation(v);
  else if (key == "mlp.maxout_pieces") m.maxout_pieces = to_count(key, v);
  else if (key == "mlp.dropout") m.dropout = to_real(key, v);
  else if (key == "mlp.l2") m.l2 = to_real(key, v);
  else if (key == "mlp.epochs") m.epochs = to_count(key, v);
  else if (key == "mlp.learning_rate") m.learning_rate = to_real(key, v);
  else if (key == "mlp.beta1") m.beta1 = to_real(key, v);
  else if (key == "mlp.beta2") m.beta2 = to_real(key, v);
  else if (key == "mlp.epsilon") m.epsilon = to_real(key, v);
  else if (key == "mlp.batch_size") m.batch_size = to_count(key, v);
  else if (key == "mlp.seed") m.seed = to_u64(key, v);
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "trials") c.trials = to_count(key, v);
  else if (key == "seeds") c.seeds = to_list<std::uint64_t>(v, [&](auto s) { return to_u64(key, s); });
  else if (key == "data.train") c.train_path = std::string(v);
  else if (key == "data.test") c.test_path = std::string(v);
  else if (key == "data.split") c.split_fraction = to_real(key, v);
  else if (key == "data.synthetic") {
    if (to_bool(key, v)) synthetic(c);
    else c.synthetic.reset();
  }
  else if (key == "synthetic.classes") synthetic(c).classes = to_count(key, v);
  else if (key == "synthetic.per_class") synthetic(c).per_class = to_count(key, v);
  else if (key == "synthetic.length") synthetic(c).length = to_count(key, v);
  else if (key == "synthetic.features") synthetic(c).features = to_count(key, v);
  else if (key == "synthetic.noise") synthetic(c).noise = to_real(key, v);
  else if (key == "synthetic.seed") synthetic(c).seed = to_u64(key, v);
  else if (key == "sweep.folds") c.folds = to_count(key, v);
  else if (key == "sweep.components") {
    c.sweep_components = to_list<std::size_t>(v, [&](auto s) { return to_count(key, s); });
  }
  else throw InvalidArgument("unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(number, "expected 'key = value'");
    const auto key = trim(view.substr(0, eq));
    try {
      set_config_value(config, key, view.substr(eq + 1));
    } catch (const InvalidArgument& e) {
      throw ParseError(number, e.what());
    }
  }
  try {
    config.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(number, e.what());
  }
  return config;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path + "'");
  try {
    return parse_config(in);
  } catch (Error& e) {
    e.add_context(path);
    throw;
  }
}

void write_config(const PipelineConfig& c, std::ostream& out) {
  const auto b = [](bool v) { return v ? "true" : "false"; };
  const auto& r = c.reservoir;
  const auto& m = c.mlp;
  out << "reservoir.units = " << r.units << '\n'
      << "reservoir.spectral_radius = " << fmt(r.spectral_radius) << '\n'
      << "reservoir.connectivity = " << fmt(r.connectivity) << '\n'
      << "reservoir.input_scaling = " << fmt(r.input_scaling) << '\n'
      << "reservoir.noise = " << fmt(r.noise_level) << '\n'
      << "reservoir.bidirectional = " << b(r.bidirectional) << '\n'
      << "reservoir.seed = " << r.seed << '\n'
      << "dimred.enabled = " << b(c.dimred.enabled) << '\n'
      << "dimred.components = " << c.dimred.components << '\n'
      << "dimred.mode = " << to_string(c.dimred.mode) << '\n'
      << "dimred.centered = " << b(c.dimred.centered) << '\n'
      << "representation = " << to_string(c.representation) << '\n'
      << "readout = " << to_string(c.readout) << '\n'
      << "readout.lambda = " << fmt(c.readout_lambda) << '\n'
      << "model_lambda = " << fmt(c.model_lambda) << '\n'
      << "normalize = " << b(c.normalize) << '\n'
      << "mlp.hidden = " << join(m.hidden) << '\n'
      << "mlp.activation = " << to_string(m.activation) << '\n'
      << "mlp.maxout_pieces = " << m.maxout_pieces << '\n'
      << "mlp.dropout = " << fmt(m.dropout) << '\n'
      << "mlp.l2 = " << fmt(m.l2) << '\n'
      << "mlp.epochs = " << m.epochs << '\n'
      << "mlp.learning_rate = " << fmt(m.learning_rate) << '\n'
      << "mlp.beta1 = " << fmt(m.beta1) << '\n'
      << "mlp.beta2 = " << fmt(m.beta2) << '\n'
      << "mlp.epsilon = " << fmt(m.epsilon) << '\n'
      << "mlp.batch_size = " << m.batch_size << '\n'
      << "mlp.seed = " << m.seed << '\n'
      << "seed = " << c.seed << '\n'
      << "trials = " << c.trials << '\n';
  if (!c.seeds.empty()) out << "seeds = " << join(c.seeds) << '\n';
  if (!c.train_path.empty()) out << "data.train = " << c.train_path << '\n';
  if (!c.test_path.empty()) out << "data.test = " << c.test_path << '\n';
  out << "data.split = " << fmt(c.split_fraction) << '\n';
  if (c.synthetic) {
    const auto& s = *c.synthetic;
    out << "data.synthetic = true\n"
        << "synthetic.classes = " << s.classes << '\n'
        << "synthetic.per_class = " << s.per_class << '\n'
        << "synthetic.length = " << s.length << '\n'
        << "synthetic.features = " << s.features << '\n'
        << "synthetic.noise = " << fmt(s.noise) << '\n'
        << "synthetic.seed = " << s.seed << '\n';
  }
  out << "sweep.folds = " << c.folds << '\n'
      << "sweep.components = " << join(c.sweep_components) << '\n';
}

std::string config_to_string(const PipelineConfig& config) {
  std::ostringstream out;
  write_config(config, out);
  return out.str();
}

}  // namespace rmesn
