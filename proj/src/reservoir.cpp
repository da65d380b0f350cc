#include "rmesn/reservoir.hpp"

#include "rmesn/error.hpp"
#include "rmesn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rmesn {

namespace {

constexpr std::size_t kBatch = 32;
constexpr int kMaxResamples = 5;

enum class Direction : std::uint32_t { Forward = 0, Backward = 1 };

std::seed_seq make_seed(std::uint64_t a, std::uint64_t b, std::uint32_t tag) {
  return std::seed_seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                       static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32), tag};
}

struct NoiseStream {
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};
};

NoiseStream make_noise(const ReservoirConfig& cfg, std::uint64_t stream, Direction dir) {
  auto seq = make_seed(cfg.seed, stream, 0x6e6f0000u | static_cast<std::uint32_t>(dir));
  return NoiseStream{std::mt19937_64(seq)};
}

/// Drives B sequences through the reservoir in lock step. `inputs` is laid out
/// as steps x F x B; `store(b, t, state, stride)` receives state b at step t
/// where state[i * stride] is unit i.
template <typename Store>
void drive(const Reservoir& res, std::size_t steps, std::size_t batch,
           const std::vector<double>& inputs, std::vector<NoiseStream>& noise, Store&& store) {
  const std::size_t r = res.units();
  const std::size_t f = res.input_dim();
  const double xi = res.config().noise_level;
  const Matrix& w_in = res.w_in();

  std::vector<double> state(r * batch, 0.0);
  std::vector<double> pre(r * batch);
  for (std::size_t t = 0; t < steps; ++t) {
    res.w_r().multiply(state, pre, batch);
    const double* x = inputs.data() + t * f * batch;
    for (std::size_t i = 0; i < r; ++i) {
      double* p = pre.data() + i * batch;
      for (std::size_t k = 0; k < f; ++k) {
        const double w = w_in(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        const double* xk = x + k * batch;
        for (std::size_t b = 0; b < batch; ++b) p[b] += w * xk[b];
      }
    }
    if (xi > 0.0) {
      for (std::size_t b = 0; b < batch; ++b) {
        auto& s = noise[b];
        for (std::size_t i = 0; i < r; ++i) pre[i * batch + b] += xi * s.normal(s.rng);
      }
    }
    for (std::size_t k = 0; k < state.size(); ++k) state[k] = std::tanh(pre[k]);
    for (std::size_t b = 0; b < batch; ++b) store(b, t, state.data() + b, batch);
  }
}

void check_inputs(const Reservoir& res, const MatrixRef& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != res.input_dim()) {
    throw InvalidArgument("input has " + std::to_string(inputs.cols()) +
                          " variables, reservoir expects " + std::to_string(res.input_dim()));
  }
  if (!inputs.allFinite()) throw InvalidInput("non-finite value in the input series");
}

Matrix run_single(const Reservoir& res, const MatrixRef& inputs, std::uint64_t stream,
                  Direction dir) {
  check_inputs(res, inputs);
  const auto steps = static_cast<std::size_t>(inputs.rows());
  const std::size_t f = res.input_dim();
  std::vector<double> packed(steps * f);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto src = dir == Direction::Forward ? t : steps - 1 - t;
    for (std::size_t k = 0; k < f; ++k) {
      packed[t * f + k] = inputs(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(k));
    }
  }
  std::vector<NoiseStream> noise{make_noise(res.config(), stream, dir)};
  Matrix out(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(res.units()));
  drive(res, steps, 1, packed, noise, [&](std::size_t, std::size_t t, const double* s, std::size_t stride) {
    for (std::size_t i = 0; i < res.units(); ++i) {
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = s[i * stride];
    }
  });
  return out;
}

}  // namespace

void ReservoirConfig::validate() const {
  if (units < 1) throw InvalidArgument("reservoir needs at least one unit");
  if (!(connectivity > 0.0 && connectivity <= 1.0)) {
    throw InvalidArgument("reservoir connectivity must lie in (0, 1]");
  }
  if (!(spectral_radius >= 0.0) || !std::isfinite(spectral_radius)) {
    throw InvalidArgument("spectral radius must be finite and non-negative");
  }
  if (!(input_scaling > 0.0) || !std::isfinite(input_scaling)) {
    throw InvalidArgument("input scaling must be finite and positive");
  }
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    throw InvalidArgument("noise level must be finite and non-negative");
  }
}

Reservoir::Reservoir(ReservoirConfig config, Matrix w_in, SparseMatrix w_r)
    : config_(config), w_in_(std::move(w_in)), w_r_(std::move(w_r)) {
  config_.validate();
  if (static_cast<std::size_t>(w_in_.rows()) != config_.units || w_in_.cols() < 1) {
    throw InvalidArgument("input weights must be units x input_dim");
  }
  if (w_r_.rows() != config_.units || w_r_.cols() != config_.units) {
    throw InvalidArgument("recurrent weights must be units x units");
  }
  if (!w_in_.allFinite()) throw InvalidInput("non-finite input weight");
}

Reservoir build_reservoir(const ReservoirConfig& config, std::size_t input_dim) {
  config.validate();
  if (input_dim < 1) throw InvalidArgument("reservoir input dimension must be at least 1");

  auto seq = make_seed(config.seed, 0, 0x72657300u);
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> in_dist(-config.input_scaling, config.input_scaling);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> weight(-1.0, 1.0);

  const std::size_t r = config.units;
  Matrix w_in(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(input_dim));
  for (Eigen::Index i = 0; i < w_in.rows(); ++i) {
    for (Eigen::Index k = 0; k < w_in.cols(); ++k) w_in(i, k) = in_dist(rng);
  }

  if (config.spectral_radius == 0.0) return Reservoir(config, std::move(w_in), SparseMatrix(r, r));

  for (int attempt = 0; attempt <= kMaxResamples; ++attempt) {
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(static_cast<double>(r * r) * config.connectivity * 1.1) + 1);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        if (unit(rng) < config.connectivity) entries.push_back({i, j, weight(rng)});
      }
    }
    SparseMatrix w_r(r, r, std::move(entries));
    const double measured = spectral_radius(w_r);
    if (measured == 0.0) continue;

    w_r = w_r.scaled(config.spectral_radius / measured);
    const double check = spectral_radius(w_r);
    if (std::abs(check - config.spectral_radius) > 1e-6) {
      throw NumericalError("reservoir rescaling missed the target spectral radius (" +
                           std::to_string(check) + ")");
    }
    return Reservoir(config, std::move(w_in), std::move(w_r));
  }
  throw DegenerateReservoir("recurrent weights have zero spectral radius after " +
                            std::to_string(kMaxResamples) + " resamples");
}

Matrix run_states(const Reservoir& res, const MatrixRef& inputs, std::uint64_t stream) {
  return run_single(res, inputs, stream, Direction::Forward);
}

Matrix run_states_bidirectional(const Reservoir& res, const MatrixRef& inputs,
                                std::uint64_t stream) {
  const Matrix forward = run_single(res, inputs, stream, Direction::Forward);
  const Matrix backward = run_single(res, inputs, stream, Direction::Backward);
  Matrix out(forward.rows(), 2 * forward.cols());
  out << forward, backward;
  return out;
}

StateTensor encode_dataset(const Reservoir& res, const Dataset& ds, std::uint64_t stream_base) {
  if (ds.size() == 0) throw InvalidInput("cannot encode an empty dataset");
  for (const auto& s : ds.samples) {
    if (s.features() != res.input_dim()) {
      throw InvalidArgument("dataset has " + std::to_string(s.features()) +
                            " variables, reservoir expects " + std::to_string(res.input_dim()));
    }
    if (!s.values.allFinite()) throw InvalidInput("non-finite value in the input series");
  }

  const std::size_t n = ds.size();
  const std::size_t steps = ds.t_max();
  const std::size_t r = res.units();
  const std::size_t f = res.input_dim();
  const bool bidir = res.config().bidirectional;

  StateTensor out;
  out.samples = n;
  out.steps = steps;
  out.features = res.state_dim();
  out.bidirectional = bidir;
  out.data.resize(static_cast<Eigen::Index>(n * steps), static_cast<Eigen::Index>(out.features));
  out.lengths.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.lengths[i] = ds.samples[i].length;

  const std::size_t chunks = (n + kBatch - 1) / kBatch;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t first = c * kBatch;
    const std::size_t batch = std::min(kBatch, n - first);
    std::vector<double> packed(steps * f * batch);
    for (const Direction dir : {Direction::Forward, Direction::Backward}) {
      if (dir == Direction::Backward && !bidir) break;
      std::fill(packed.begin(), packed.end(), 0.0);
      std::vector<NoiseStream> noise;
      noise.reserve(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        const Mts& s = ds.samples[first + b];
        const std::size_t len = s.length;
        for (std::size_t t = 0; t < len; ++t) {
          const std::size_t src = dir == Direction::Forward ? t : len - 1 - t;
          for (std::size_t k = 0; k < f; ++k) {
            packed[(t * f + k) * batch + b] =
                s.values(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(k));
          }
        }
        noise.push_back(make_noise(res.config(), stream_base + first + b, dir));
      }
      const std::size_t offset = dir == Direction::Forward ? 0 : r;
      drive(res, steps, batch, packed, noise,
            [&](std::size_t b, std::size_t t, const double* s, std::size_t stride) {
              double* row = out.data.row(static_cast<Eigen::Index>((first + b) * steps + t)).data();
              for (std::size_t i = 0; i < r; ++i) row[offset + i] = s[i * stride];
            });
    }
  });
  return out;
}

}  // namespace rmesn
