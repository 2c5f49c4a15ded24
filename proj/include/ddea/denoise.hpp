#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddea/bitset.hpp"
#include "ddea/ea.hpp"
#include "ddea/graph.hpp"
#include "ddea/rng.hpp"
#include "ddea/solution.hpp"

namespace ddea {

/// Cosine corruption schedule over discrete Bernoulli states. alpha_bar(t) is
/// the probability that a bit survives t forward steps un-resampled;
/// alpha_bar(0) = 1 and alpha_bar(T) ~ 0, strictly decreasing.
struct DenoiseSchedule {
  int t_train = 1000;
  int t_inf = 50;
  double cosine_offset = 0.008;

  void validate() const {
    if (t_train < 1 || t_inf < 1) throw std::invalid_argument("DenoiseSchedule: step counts must be >= 1");
  }

  double alpha_bar(double t) const {
    const double s = cosine_offset;
    auto f = [&](double u) {
      const double c = std::cos((u / t_train + s) / (1.0 + s) * std::numbers::pi / 2.0);
      return c * c;
    };
    return f(t) / f(0.0);
  }

  /// Per-step corruption rate 1 - alpha_bar(t)/alpha_bar(t-1).
  double beta(int t) const { return 1.0 - alpha_bar(t) / alpha_bar(t - 1); }

  /// Cosine-spaced inference grid: t_inf + 1 time points from t_train down to
  /// exactly 0, so inference makes exactly t_inf model calls.
  std::vector<double> inference_times() const {
    std::vector<double> ts(t_inf + 1);
    for (int j = 0; j <= t_inf; ++j) {
      const double c = std::cos(std::numbers::pi * j / (2.0 * t_inf));
      ts[j] = t_train * c * c;
    }
    ts.back() = 0.0;
    return ts;
  }
};

/// Forward corruption: each bit of z0 is kept with probability alpha_bar(t),
/// otherwise resampled Bernoulli(0.5).
inline Bitset forward_noise(const Bitset& z0, int t, const DenoiseSchedule& sched,
                            std::uint64_t seed) {
  if (t < 1 || t > sched.t_train) throw std::invalid_argument("forward_noise: t out of range");
  const double abar = sched.alpha_bar(t);
  Rng rng(derive_seed(seed, Stream::kNoise));
  Bitset out(z0.size());
  for (int i = 0; i < z0.size(); ++i) {
    const bool keep = rng.unit() < abar;
    const bool coin = rng.unit() < 0.5;
    out.assign(i, keep ? z0.test(i) : coin);
  }
  return out;
}

inline constexpr int kFeatureCount = 13;

inline const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "state",          "parent_x",   "parent_y",   "parent_both", "degree_norm",
      "nbr_frac_state", "nbr_frac_x", "nbr_frac_y", "time_sin1",   "time_cos1",
      "time_sin2",      "time_cos2",  "bias"};
  return names;
}

/// Per-vertex feature rows (row-major, n x kFeatureCount): current state bit,
/// parent memberships, normalized degree, neighborhood occupancy fractions,
/// and a two-frequency sinusoidal time embedding.
inline std::vector<double> featurize(const Graph& g, const Bitset& zt, const Solution& x,
                                     const Solution& y, double t, const DenoiseSchedule& sched) {
  const int n = g.num_vertices();
  if (zt.size() != n || x.num_vertices() != n || y.num_vertices() != n)
    throw std::invalid_argument("featurize: length mismatch");
  const double max_deg = std::max(1, g.max_degree());
  const double u = t / sched.t_train;
  const double s1 = std::sin(std::numbers::pi * u), c1 = std::cos(std::numbers::pi * u);
  const double s2 = std::sin(4.0 * std::numbers::pi * u), c2 = std::cos(4.0 * std::numbers::pi * u);

  std::vector<double> rows(static_cast<std::size_t>(n) * kFeatureCount);
  for (int v = 0; v < n; ++v) {
    const auto row = g.neighbors(v);
    const int deg = g.degree(v);
    auto frac = [&](const Bitset& b) {
      if (deg == 0) return 0.0;
      int c = 0;
      auto words = b.words();
      for (std::size_t k = 0; k < words.size(); ++k) c += std::popcount(row[k] & words[k]);
      return static_cast<double>(c) / deg;
    };
    double* f = rows.data() + static_cast<std::size_t>(v) * kFeatureCount;
    f[0] = zt.test(v) ? 1.0 : 0.0;
    f[1] = x.contains(v) ? 1.0 : 0.0;
    f[2] = y.contains(v) ? 1.0 : 0.0;
    f[3] = f[1] * f[2];
    f[4] = deg / max_deg;
    f[5] = frac(zt);
    f[6] = frac(x.bits());
    f[7] = frac(y.bits());
    f[8] = s1;
    f[9] = c1;
    f[10] = s2;
    f[11] = c2;
    f[12] = 1.0;
  }
  return rows;
}

/// Shared per-vertex logistic predictor; vertex-count agnostic by
/// construction.
struct DenoiserModel {
  std::vector<double> weights;  // kFeatureCount entries
  int t_train = 1000;

  static DenoiserModel zeros(int t_train = 1000) {
    DenoiserModel m;
    m.weights.assign(kFeatureCount, 0.0);
    m.t_train = t_train;
    return m;
  }

  double logit(const double* row) const {
    double a = 0.0;
    for (int k = 0; k < kFeatureCount; ++k) a += weights[k] * row[k];
    return a;
  }

  double predict(const double* row) const { return 1.0 / (1.0 + std::exp(-logit(row))); }
};

/// A training triplet resolved against its graph.
struct TrainingTriplet {
  const Graph* graph = nullptr;
  Solution x, y, z_star;
};

/// Frozen mini-batch: features and labels with the noise draw already fixed,
/// so the loss is a deterministic function of the weights.
struct DenoiseBatch {
  std::vector<double> features;  // rows x kFeatureCount
  std::vector<double> labels;    // rows
  std::size_t rows = 0;
};

inline void append_training_rows(DenoiseBatch& batch, const TrainingTriplet& tr,
                                 const DenoiseSchedule& sched, std::uint64_t seed) {
  Rng rng(derive_seed(seed, Stream::kTraining));
  const int t = 1 + static_cast<int>(rng.below(sched.t_train));
  const Bitset zt = forward_noise(tr.z_star.bits(), t, sched, rng());
  std::vector<double> rows = featurize(*tr.graph, zt, tr.x, tr.y, t, sched);
  batch.features.insert(batch.features.end(), rows.begin(), rows.end());
  for (int v = 0; v < tr.graph->num_vertices(); ++v)
    batch.labels.push_back(tr.z_star.contains(v) ? 1.0 : 0.0);
  batch.rows += tr.graph->num_vertices();
}

/// Mean per-vertex binary cross-entropy plus an L2 penalty
/// 0.5 * weight_decay * |w|^2. Gradient written to grad when non-null.
inline double batch_loss(const std::vector<double>& w, const DenoiseBatch& batch,
                         double weight_decay, std::vector<double>* grad = nullptr) {
  if (batch.rows == 0) throw std::invalid_argument("batch_loss: empty batch");
  if (grad) grad->assign(kFeatureCount, 0.0);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const double* f = batch.features.data() + r * kFeatureCount;
    double a = 0.0;
    for (int k = 0; k < kFeatureCount; ++k) a += w[k] * f[k];
    const double label = batch.labels[r];
    // stable log(1 + exp(a)) - label * a
    loss += std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))) - label * a;
    if (grad) {
      const double sg = 1.0 / (1.0 + std::exp(-a));
      const double d = sg - label;
      for (int k = 0; k < kFeatureCount; ++k) (*grad)[k] += d * f[k];
    }
  }
  loss /= static_cast<double>(batch.rows);
  double l2 = 0.0;
  for (int k = 0; k < kFeatureCount; ++k) l2 += w[k] * w[k];
  loss += 0.5 * weight_decay * l2;
  if (grad)
    for (int k = 0; k < kFeatureCount; ++k)
      (*grad)[k] = (*grad)[k] / static_cast<double>(batch.rows) + weight_decay * w[k];
  return loss;
}

struct TrainHyper {
  double lr = 0.0002;
  int epochs = 30;
  int batch = 64;
  double weight_decay = 0.0001;
  std::uint64_t seed = 0;
};

struct TrainResult {
  DenoiserModel model;
  std::vector<double> loss_trace;  // mean loss per epoch
};

/// Imitation training: minimize per-vertex cross-entropy between the model's
/// prediction on noised expert offspring and the expert offspring itself,
/// with the noise level drawn uniformly from [1, t_train]. Plain SGD;
/// deterministic per seed.
inline TrainResult train(const std::vector<TrainingTriplet>& data, const DenoiseSchedule& sched,
                         const TrainHyper& hyper) {
  sched.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (hyper.epochs < 1 || hyper.batch < 1) throw std::invalid_argument("train: bad hyperparameters");

  DenoiserModel model = DenoiserModel::zeros(sched.t_train);
  std::vector<double> grad(kFeatureCount);
  TrainResult result;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  std::uint64_t sample_counter = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(hyper.seed, Stream::kTraining, epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t pos = 0; pos < order.size(); pos += hyper.batch) {
      DenoiseBatch batch;
      const std::size_t end = std::min(order.size(), pos + hyper.batch);
      for (std::size_t i = pos; i < end; ++i)
        append_training_rows(batch, data[order[i]], sched,
                             derive_seed(hyper.seed, Stream::kNoise, sample_counter++));
      const double loss = batch_loss(model.weights, batch, hyper.weight_decay, &grad);
      if (!std::isfinite(loss)) throw std::runtime_error("train: non-finite loss");
      for (int k = 0; k < kFeatureCount; ++k) model.weights[k] -= hyper.lr * grad[k];
      epoch_loss += loss;
      ++batches;
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
  }
  result.model = std::move(model);
  return result;
}

/// Parent-conditioned iterative denoising: start from an i.i.d. Bernoulli(0.5)
/// state and walk the cosine-spaced grid. At each step the model predicts
/// per-vertex target probabilities p_hat; the state is resampled from
/// alpha_bar(s) * p_hat + (1 - alpha_bar(s)) * 0.5. The final probability
/// vector (alpha_bar(0) = 1, hence exactly p_hat) is decoded greedily.
inline Solution denoise_recombine(const Graph& g, const Solution& x, const Solution& y,
                                  const DenoiserModel& model, const DenoiseSchedule& sched,
                                  std::uint64_t seed) {
  sched.validate();
  if (static_cast<int>(model.weights.size()) != kFeatureCount)
    throw std::invalid_argument("denoise_recombine: model weight count mismatch");
  const int n = g.num_vertices();
  Rng rng(derive_seed(seed, Stream::kNoise));
  Bitset state(n);
  for (int i = 0; i < n; ++i) state.assign(i, rng.unit() < 0.5);

  const std::vector<double> grid = sched.inference_times();
  Heatmap probs;
  probs.probs.resize(n);
  for (int j = 0; j < sched.t_inf; ++j) {
    const double t = grid[j];
    const double abar_next = sched.alpha_bar(grid[j + 1]);
    const std::vector<double> rows = featurize(g, state, x, y, t, sched);
    for (int v = 0; v < n; ++v) {
      const double p_hat = model.predict(rows.data() + static_cast<std::size_t>(v) * kFeatureCount);
      probs.probs[v] = abar_next * p_hat + (1.0 - abar_next) * 0.5;
    }
    if (j + 1 == sched.t_inf) break;
    for (int v = 0; v < n; ++v) state.assign(v, rng.unit() < probs.probs[v]);
  }
  return decode(g, probs, derive_seed(seed, Stream::kTieBreak));
}

/// Engine operator: `samples` independent denoised offspring per call.
inline RecombFn make_denoise_recombiner(DenoiserModel model, DenoiseSchedule sched,
                                        int samples = 2) {
  if (samples < 1) throw std::invalid_argument("make_denoise_recombiner: samples must be >= 1");
  return [model = std::move(model), sched, samples](const Graph& g, const Solution& x,
                                                    const Solution& y, std::uint64_t seed) {
    std::vector<Solution> out;
    out.reserve(samples);
    for (int k = 0; k < samples; ++k)
      out.push_back(denoise_recombine(g, x, y, model, sched, derive_seed(seed, Stream::kNoise, k)));
    return out;
  };
}

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  for (int k = 0; k < 2; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
inline void put_f64(std::string& s, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  for (int k = 0; k < 8; ++k) s.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(const std::string& s, const std::string& what) : s_(s), what_(what) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(gather(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(gather(4)); }
  double f64() {
    const std::uint64_t bits = gather(8);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string bytes(std::size_t k) { return std::string(take(k), k); }
  bool done() const { return pos_ == s_.size(); }

 private:
  const char* take(std::size_t k) {
    if (pos_ + k > s_.size()) throw std::runtime_error(what_ + ": truncated input");
    const char* p = s_.data() + pos_;
    pos_ += k;
    return p;
  }
  std::uint64_t gather(std::size_t k) {
    const char* p = take(k);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < k; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  const std::string& s_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr char kModelMagic[4] = {'D', 'N', 'R', 'M'};

inline std::string serialize_model(const DenoiserModel& model) {
  std::string s(kModelMagic, 4);
  s.push_back(static_cast<char>(1));  // version
  detail::put_u32(s, static_cast<std::uint32_t>(model.t_train));
  detail::put_u32(s, kFeatureCount);
  for (const auto& name : feature_names()) {
    detail::put_u16(s, static_cast<std::uint16_t>(name.size()));
    s += name;
  }
  detail::put_u32(s, static_cast<std::uint32_t>(model.weights.size()));
  for (double w : model.weights) detail::put_f64(s, w);
  return s;
}

inline DenoiserModel deserialize_model(const std::string& bytes) {
  detail::ByteReader r(bytes, "deserialize_model");
  if (r.bytes(4) != std::string(kModelMagic, 4))
    throw std::runtime_error("deserialize_model: bad magic");
  if (r.u8() != 1) throw std::runtime_error("deserialize_model: unsupported version");
  DenoiserModel m;
  m.t_train = static_cast<int>(r.u32());
  const std::uint32_t nf = r.u32();
  if (nf != kFeatureCount) throw std::runtime_error("deserialize_model: feature spec mismatch");
  for (const auto& expected : feature_names()) {
    const std::uint16_t len = r.u16();
    if (r.bytes(len) != expected) throw std::runtime_error("deserialize_model: feature spec mismatch");
  }
  const std::uint32_t nw = r.u32();
  if (nw != kFeatureCount) throw std::runtime_error("deserialize_model: weight count mismatch");
  m.weights.resize(nw);
  for (auto& w : m.weights) w = r.f64();
  if (!r.done()) throw std::runtime_error("deserialize_model: trailing bytes");
  return m;
}

inline void save_model_file(const DenoiserModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_model_file: cannot open " + path);
  const std::string s = serialize_model(model);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline DenoiserModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model_file: cannot open " + path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(s);
}

}  // namespace ddea
