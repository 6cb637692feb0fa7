#pragma once

#include <atomic>
#include <mutex>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "stego/adam.hpp"
#include "stego/checkpoint.hpp"
#include "stego/codec.hpp"
#include "stego/losses.hpp"
#include "stego/media.hpp"
#include "stego/metrics.hpp"
#include "stego/networks.hpp"

namespace stego {

// ============================================================================
//  Parallel helper
// ============================================================================

// Runs fn(0..n-1) across up to `threads` workers (0 = hardware concurrency).
// Work items write only to their own index, so results do not depend on the
// thread count; the first exception is rethrown after all workers join.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ============================================================================
//  Configuration and history
// ============================================================================

struct EarlyStopConfig {
  std::size_t window = 1000;          // logged steps per window
  double min_rel_improvement = 1e-4;  // relative windowed-mean improvement

  void validate() const {
    if (window < 2) fail(Error::Kind::config, "early stop: window must be >= 2");
    if (!(min_rel_improvement > 0.0 && min_rel_improvement < 1.0))
      fail(Error::Kind::config,
           "early stop: min_rel_improvement must lie in (0,1)");
  }
};

// Stops once the mean of the last `window` logged losses improves on the
// previous window's mean by less than min_rel_improvement (relative).
// Checks fire at window boundaries, so the earliest stop is at 2*window
// observations.
class EarlyStopRule {
 public:
  explicit EarlyStopRule(EarlyStopConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  bool observe(double loss) {
    losses_.push_back(loss);
    const std::size_t n = losses_.size();
    if (n < 2 * cfg_.window || n % cfg_.window != 0) return false;
    auto mean_of = [&](std::size_t begin) {
      double acc = 0.0;
      for (std::size_t i = begin; i < begin + cfg_.window; ++i)
        acc += losses_[i];
      return acc / static_cast<double>(cfg_.window);
    };
    const double cur = mean_of(n - cfg_.window);
    const double prev = mean_of(n - 2 * cfg_.window);
    if (prev <= 0.0) return true;
    return (prev - cur) / prev < cfg_.min_rel_improvement;
  }

 private:
  EarlyStopConfig cfg_;
  std::vector<double> losses_;
};

struct TrainingConfig {
  int batch_size = 6;
  std::int64_t max_iterations = 800000;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  LossWeights weights{1.0, 1.0};
  std::uint64_t seed = 1;
  EarlyStopConfig early_stop;
  bool early_stop_enabled = true;
  int eval_pairs = 5000;
  int precision = 32;  // 32 or 64
  std::int64_t log_interval = 10;
  int threads = 0;      // 0 = hardware concurrency
  double delta = 0.001; // active-bit tolerance used by evaluation

  void validate() const {
    if (batch_size < 1) fail(Error::Kind::config, "batch_size must be >= 1");
    if (max_iterations < 1)
      fail(Error::Kind::config, "max_iterations must be >= 1");
    if (!(learning_rate > 0.0))
      fail(Error::Kind::config, "learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      fail(Error::Kind::config, "adam betas must lie in (0,1)");
    if (eval_pairs < 1) fail(Error::Kind::config, "eval_pairs must be >= 1");
    if (precision != 32 && precision != 64)
      fail(Error::Kind::config, "precision must be 32 or 64");
    if (log_interval < 1)
      fail(Error::Kind::config, "log_interval must be >= 1");
    weights.validate();
    early_stop.validate();
  }
};

struct HistoryEntry {
  std::int64_t iteration = 0;
  double loss_all = 0.0;
  double loss_mse = 0.0;
  double loss_bce = 0.0;
};

struct TrainingHistory {
  std::vector<HistoryEntry> entries;

  std::string to_csv() const {
    std::string out = "iteration,loss_all,loss_mse,loss_bce\n";
    for (const auto& e : entries) {
      out += std::to_string(e.iteration);
      out += ',';
      out += format_double(e.loss_all);
      out += ',';
      out += format_double(e.loss_mse);
      out += ',';
      out += format_double(e.loss_bce);
      out += '\n';
    }
    return out;
  }

  const HistoryEntry* at_iteration(std::int64_t it) const {
    for (const auto& e : entries)
      if (e.iteration == it) return &e;
    return nullptr;
  }
};

// ============================================================================
//  Pair sampling
// ============================================================================

// Deterministic, position-indexable stream of secret/cover pairs: secrets
// cycle in one seeded shuffle, covers are drawn uniformly with replacement.
// pair(i) is a pure function of (seed, i), which makes resuming from a
// checkpoint trivially exact.
template <typename S>
class PairSampler {
 public:
  PairSampler(std::vector<Tensor<S>> secrets, std::vector<Tensor<S>> covers,
              std::uint64_t seed, std::size_t payload_dims = 0)
      : secrets_(std::move(secrets)),
        covers_(std::move(covers)),
        payload_dims_(payload_dims) {
    if (secrets_.empty())
      fail(Error::Kind::invalid_argument, "pair sampler: no secret images");
    if (covers_.empty())
      fail(Error::Kind::invalid_argument, "pair sampler: no cover images");
    for (const auto& t : secrets_)
      check_same_shape(secrets_.front().shape, t.shape, "sampler secrets");
    for (const auto& t : covers_)
      check_same_shape(covers_.front().shape, t.shape, "sampler covers");
    secret_order_.resize(secrets_.size());
    for (std::size_t i = 0; i < secret_order_.size(); ++i)
      secret_order_[i] = i;
    SplitMix64 rng(substream_seed(seed, 0x5EC));
    for (std::size_t i = secret_order_.size(); i > 1; --i)
      std::swap(secret_order_[i - 1], secret_order_[rng.next_below(i)]);
    cover_seed_ = substream_seed(seed, 0xC07);
  }

  std::pair<const Tensor<S>&, const Tensor<S>&> pair(std::uint64_t i) const {
    const Tensor<S>& sec = secrets_[secret_order_[i % secrets_.size()]];
    const Tensor<S>& cov =
        covers_[indexed_below(cover_seed_, i, covers_.size())];
    return {sec, cov};
  }

  std::size_t secret_count() const { return secrets_.size(); }
  std::size_t cover_count() const { return covers_.size(); }
  std::size_t payload_dims() const { return payload_dims_; }
  const Shape& secret_shape() const { return secrets_.front().shape; }
  const Shape& cover_shape() const { return covers_.front().shape; }

 private:
  std::vector<Tensor<S>> secrets_;
  std::vector<Tensor<S>> covers_;
  std::vector<std::size_t> secret_order_;
  std::uint64_t cover_seed_ = 0;
  std::size_t payload_dims_ = 0;
};

template <typename S>
PairSampler<S> make_sampler(const std::vector<SecretImage>& secrets,
                            const std::vector<RasterImage>& covers,
                            std::uint64_t seed) {
  std::vector<Tensor<S>> sec;
  sec.reserve(secrets.size());
  std::size_t dims = 0;
  for (const auto& s : secrets) {
    sec.push_back(s.template to_tensor<S>());
    dims = std::max(dims, s.payload_dims);
  }
  std::vector<Tensor<S>> cov;
  cov.reserve(covers.size());
  for (const auto& c : covers) cov.push_back(to_tensor<S>(c));
  return PairSampler<S>(std::move(sec), std::move(cov), seed, dims);
}

// ============================================================================
//  Training loop
// ============================================================================

template <typename S>
struct TrainerState {
  std::vector<AdamState<S>> adam;  // aligned with model.named_parameters()
  std::int64_t iteration = 0;
  TrainingHistory history;
};

// Mini-batch gradient descent on the combined objective. Per-pair forward
// and backward passes run on parameter replicas (possibly in parallel); the
// per-pair gradients are reduced in pair order by a single thread and the
// mean fed to Adam, so the result is independent of the thread count.
// Continues from state.iteration when resuming.
template <typename S>
void train(StegoModel<S>& model, const PairSampler<S>& sampler,
           const TrainingConfig& config, TrainerState<S>& state) {
  config.validate();
  check_same_shape(Shape{1, static_cast<std::size_t>(model.config.height),
                         static_cast<std::size_t>(model.config.width)},
                   sampler.secret_shape(), "train secrets");
  check_same_shape(
      Shape{static_cast<std::size_t>(model.config.cover_channels),
            static_cast<std::size_t>(model.config.height),
            static_cast<std::size_t>(model.config.width)},
      sampler.cover_shape(), "train covers");

  auto master = model.named_parameters();
  if (state.adam.empty()) state.adam.resize(master.size());
  if (state.adam.size() != master.size())
    fail(Error::Kind::shape_mismatch,
         "train: optimizer state does not match the model");

  const int m = config.batch_size;
  const auto alpha = static_cast<S>(config.weights.alpha);
  const auto beta = static_cast<S>(config.weights.beta);

  std::vector<StegoModel<S>> replicas;
  std::vector<std::vector<TensorPtr<S>>> replica_params;
  replicas.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    replicas.push_back(model.clone());
    auto named = replicas.back().named_parameters();
    std::vector<TensorPtr<S>> ptrs;
    ptrs.reserve(named.size());
    for (auto& [name, p] : named) ptrs.push_back(p);
    replica_params.push_back(std::move(ptrs));
  }
  std::vector<TensorPtr<S>> master_params;
  master_params.reserve(master.size());
  for (auto& [name, p] : master) master_params.push_back(p);

  EarlyStopRule stopper(config.early_stop);
  for (const auto& e : state.history.entries) stopper.observe(e.loss_all);

  Buffer<S> mse_v(static_cast<std::size_t>(m));
  Buffer<S> bce_v(static_cast<std::size_t>(m));
  Buffer<S> grad_sum;

  for (std::int64_t t = state.iteration + 1; t <= config.max_iterations; ++t) {
    parallel_for(static_cast<std::size_t>(m), config.threads,
                 [&](std::size_t j) {
                   auto& ptrs = replica_params[j];
                   for (std::size_t p = 0; p < ptrs.size(); ++p) {
                     ptrs[p]->data = master_params[p]->data;
                     ptrs[p]->grad.clear();
                   }
                   const auto [sec, cov] = sampler.pair(
                       static_cast<std::uint64_t>(t - 1) * m + j);
                   Graph<S> g;
                   auto sec_p = make_tensor(Tensor<S>(sec));
                   auto cov_p = make_tensor(Tensor<S>(cov));
                   auto out = full_forward(g, replicas[j], sec_p, cov_p);
                   auto mse = cover_loss(g, cov_p, out.container);
                   auto bce = secret_loss(g, sec_p, out.revealed);
                   auto loss = g.weighted_sum(alpha, mse, beta, bce);
                   g.backward(loss);
                   mse_v[j] = mse->data[0];
                   bce_v[j] = bce->data[0];
                 });

    const S inv_m = S(1) / static_cast<S>(m);
    for (std::size_t p = 0; p < master_params.size(); ++p) {
      grad_sum.assign(master_params[p]->data.size(), S(0));
      for (int j = 0; j < m; ++j) {
        const auto& g = replica_params[static_cast<std::size_t>(j)][p]->grad;
        for (std::size_t e = 0; e < g.size(); ++e) grad_sum[e] += g[e];
      }
      for (auto& v : grad_sum) v *= inv_m;
      adam_step<S>(*master_params[p], grad_sum, state.adam[p],
                   static_cast<S>(config.learning_rate),
                   static_cast<S>(config.beta1), static_cast<S>(config.beta2));
    }

    S mse_mean = S(0), bce_mean = S(0);
    for (int j = 0; j < m; ++j) {
      mse_mean += mse_v[static_cast<std::size_t>(j)];
      bce_mean += bce_v[static_cast<std::size_t>(j)];
    }
    mse_mean *= inv_m;
    bce_mean *= inv_m;
    const double loss_all = config.weights.alpha * mse_mean +
                            config.weights.beta * bce_mean;
    if (!std::isfinite(loss_all))
      fail(Error::Kind::invalid_argument,
           "training aborted: non-finite loss at iteration " +
               std::to_string(t));

    state.iteration = t;
    if (t % config.log_interval == 0) {
      state.history.entries.push_back(
          {t, loss_all, static_cast<double>(mse_mean),
           static_cast<double>(bce_mean)});
      if (config.early_stop_enabled && stopper.observe(loss_all)) break;
    }
  }
}

// ============================================================================
//  Evaluation
// ============================================================================

// `forward` maps (secret, cover) to (container, revealed); the stub overload
// below short-circuits the model for oracle checks. Metrics are aggregated
// in pair order, in double precision.
template <typename S, typename Fwd>
MetricsReport evaluate_pairs(Fwd&& forward, const PairSampler<S>& sampler,
                             int n_pairs, double delta, LossWeights weights,
                             int threads = 0) {
  if (n_pairs < 1)
    fail(Error::Kind::invalid_argument, "evaluate: n_pairs must be >= 1");
  weights.validate();
  struct Row {
    double psnr_db, ssim, bacc, mse, bce;
  };
  std::vector<Row> rows(static_cast<std::size_t>(n_pairs));
  parallel_for(static_cast<std::size_t>(n_pairs), threads,
               [&](std::size_t i) {
                 const auto [sec, cov] = sampler.pair(i);
                 const auto [con, rev] = forward(sec, cov);
                 const auto sec_d = cast_tensor<double>(sec);
                 const auto cov_d = cast_tensor<double>(cov);
                 const auto con_d = cast_tensor<double>(con);
                 const auto rev_d = cast_tensor<double>(rev);
                 rows[i] = Row{psnr(cov_d, con_d), ssim(cov_d, con_d),
                               bit_accuracy(sec_d, rev_d, delta),
                               cover_loss(cov_d, con_d),
                               secret_loss(sec_d, rev_d)};
               });
  MetricsReport report;
  report.n_pairs = static_cast<std::size_t>(n_pairs);
  report.alpha = weights.alpha;
  report.beta = weights.beta;
  for (const auto& r : rows) {
    report.psnr_db += r.psnr_db;
    report.ssim += r.ssim;
    report.bacc += r.bacc;
    report.loss_mse += r.mse;
    report.loss_bce += r.bce;
  }
  const double inv = 1.0 / static_cast<double>(n_pairs);
  report.psnr_db *= inv;
  report.ssim *= inv;
  report.bacc *= inv;
  report.loss_mse *= inv;
  report.loss_bce *= inv;
  report.loss_all =
      weights.alpha * report.loss_mse + weights.beta * report.loss_bce;
  const Shape& cs = sampler.cover_shape();
  report.bpp = bpp(sampler.payload_dims(), cs[1], cs[2], cs[0]);
  return report;
}

template <typename S>
MetricsReport evaluate(const StegoModel<S>& model,
                       const PairSampler<S>& sampler, int n_pairs,
                       double delta, LossWeights weights, int threads = 0) {
  return evaluate_pairs(
      [&model](const Tensor<S>& sec, const Tensor<S>& cov) {
        Graph<S> g(false);
        auto out = full_forward(g, model, make_tensor(Tensor<S>(sec)),
                                make_tensor(Tensor<S>(cov)));
        return std::pair<Tensor<S>, Tensor<S>>(*out.container, *out.revealed);
      },
      sampler, n_pairs, delta, weights, threads);
}

// container := cover, revealed := secret. Degenerate reference point:
// infinite PSNR, unit SSIM, unit BACC.
template <typename S>
std::pair<Tensor<S>, Tensor<S>> identity_stub(const Tensor<S>& sec,
                                              const Tensor<S>& cov) {
  return {Tensor<S>(cov), Tensor<S>(sec)};
}

// ============================================================================
//  Alpha sweep
// ============================================================================

struct SweepEntry {
  double alpha = 0.0;
  MetricsReport mean;
  MetricsReport stddev;  // zero when seeds_per_alpha == 1
  int seeds = 1;
};

// Independent run per alpha (and optionally per seed): fresh model, fresh
// sampler, one report row. Per-alpha seeds derive from base_seed + index.
template <typename S>
std::vector<SweepEntry> alpha_sweep(const NetworkConfig& net_config,
                                    const TrainingConfig& base,
                                    const std::vector<SecretImage>& secrets,
                                    const std::vector<RasterImage>& covers,
                                    std::span<const double> alphas,
                                    int seeds_per_alpha = 1) {
  if (alphas.empty())
    fail(Error::Kind::invalid_argument, "alpha sweep: no alpha values");
  if (seeds_per_alpha < 1)
    fail(Error::Kind::invalid_argument, "alpha sweep: seeds must be >= 1");
  std::vector<SweepEntry> entries;
  for (std::size_t idx = 0; idx < alphas.size(); ++idx) {
    std::vector<MetricsReport> reports;
    for (int s = 0; s < seeds_per_alpha; ++s) {
      TrainingConfig cfg = base;
      cfg.weights.alpha = alphas[idx];
      cfg.seed = base.seed + idx + static_cast<std::uint64_t>(s) * 10007;
      auto model = build_model<S>(net_config, cfg.seed);
      auto sampler = make_sampler<S>(secrets, covers, cfg.seed);
      TrainerState<S> state;
      train(model, sampler, cfg, state);
      auto eval_sampler =
          make_sampler<S>(secrets, covers, substream_seed(cfg.seed, 0xE7A1));
      reports.push_back(evaluate(model, eval_sampler, cfg.eval_pairs,
                                 cfg.delta, cfg.weights, cfg.threads));
    }
    SweepEntry entry;
    entry.alpha = alphas[idx];
    entry.seeds = seeds_per_alpha;
    const double inv = 1.0 / static_cast<double>(reports.size());
    auto fold = [&](auto field) {
      double mean = 0.0;
      for (const auto& r : reports) mean += r.*field;
      mean *= inv;
      double var = 0.0;
      for (const auto& r : reports)
        var += (r.*field - mean) * (r.*field - mean);
      return std::pair<double, double>(mean, std::sqrt(var * inv));
    };
    std::tie(entry.mean.bpp, entry.stddev.bpp) = fold(&MetricsReport::bpp);
    std::tie(entry.mean.loss_all, entry.stddev.loss_all) =
        fold(&MetricsReport::loss_all);
    std::tie(entry.mean.loss_mse, entry.stddev.loss_mse) =
        fold(&MetricsReport::loss_mse);
    std::tie(entry.mean.loss_bce, entry.stddev.loss_bce) =
        fold(&MetricsReport::loss_bce);
    std::tie(entry.mean.psnr_db, entry.stddev.psnr_db) =
        fold(&MetricsReport::psnr_db);
    std::tie(entry.mean.ssim, entry.stddev.ssim) = fold(&MetricsReport::ssim);
    std::tie(entry.mean.bacc, entry.stddev.bacc) = fold(&MetricsReport::bacc);
    entry.mean.alpha = alphas[idx];
    entry.mean.beta = base.weights.beta;
    entry.mean.n_pairs = reports.front().n_pairs;
    entries.push_back(std::move(entry));
  }
  return entries;
}

// ============================================================================
//  Checkpointing
// ============================================================================

// Model parameters, optimizer moments, iteration counter and history live in
// one tensor-store file; the network layout (plus the precision mode) rides
// alongside as flat key=value text at <path>.cfg.
template <typename S>
void save_checkpoint(const std::string& path, const StegoModel<S>& model,
                     const TrainerState<S>& state) {
  auto params = model.named_parameters();
  if (!state.adam.empty() && state.adam.size() != params.size())
    fail(Error::Kind::shape_mismatch,
         "save_checkpoint: optimizer state does not match the model");
  TensorFileWriter w(path);
  for (const auto& [name, p] : params) w.add("param/" + name, *p);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    const std::size_t n = p->size();
    std::vector<double> m(n, 0.0), v(n, 0.0);
    if (!state.adam.empty() && !state.adam[i].m.empty())
      for (std::size_t e = 0; e < n; ++e) {
        m[e] = static_cast<double>(state.adam[i].m[e]);
        v[e] = static_cast<double>(state.adam[i].v[e]);
      }
    w.add("adam/m/" + name, p->shape, m.data(), n);
    w.add("adam/v/" + name, p->shape, v.data(), n);
  }
  const double iter = static_cast<double>(state.iteration);
  w.add("meta/iteration", Shape{1}, &iter, 1);
  Tensor<double> hist(Shape{state.history.entries.size(), 4});
  for (std::size_t i = 0; i < state.history.entries.size(); ++i) {
    const auto& e = state.history.entries[i];
    hist.data[i * 4 + 0] = static_cast<double>(e.iteration);
    hist.data[i * 4 + 1] = e.loss_all;
    hist.data[i * 4 + 2] = e.loss_mse;
    hist.data[i * 4 + 3] = e.loss_bce;
  }
  w.add("meta/history", hist);
  w.close();

  write_key_value_file(
      path + ".cfg",
      {{"branch_channels", std::to_string(model.config.branch_channels)},
       {"height", std::to_string(model.config.height)},
       {"width", std::to_string(model.config.width)},
       {"cover_channels", std::to_string(model.config.cover_channels)},
       {"precision", std::is_same_v<S, double> ? "64" : "32"}});
}

inline int checkpoint_precision(const std::string& path) {
  auto kv = parse_key_value_file(path + ".cfg");
  const auto it = kv.find("precision");
  if (it == kv.end()) return 32;
  return std::stoi(it->second);
}

template <typename S>
struct Checkpoint {
  StegoModel<S> model;
  TrainerState<S> state;
};

template <typename S>
Checkpoint<S> load_checkpoint(const std::string& path) {
  const auto kv = parse_key_value_file(path + ".cfg");
  const NetworkConfig config = load_network_config(kv);
  if (const auto it = kv.find("precision"); it != kv.end()) {
    const int want = std::is_same_v<S, double> ? 64 : 32;
    if (std::stoi(it->second) != want)
      fail(Error::Kind::config,
           "load_checkpoint: checkpoint precision " + it->second +
               " does not match the requested " + std::to_string(want));
  }

  auto entries = read_tensor_file(path);
  auto find = [&](const std::string& name) -> Tensor<double>& {
    for (auto& e : entries)
      if (e.name == name) return e.value;
    fail(Error::Kind::format, "load_checkpoint: missing entry " + name);
  };

  Checkpoint<S> out{build_model<S>(config, 0), {}};
  auto params = out.model.named_parameters();
  out.state.adam.resize(params.size());
  const auto iteration =
      static_cast<std::int64_t>(find("meta/iteration").data.at(0));
  std::size_t consumed = 2;  // meta/iteration + meta/history
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params[i];
    Tensor<double>& value = find("param/" + name);
    check_same_shape(p->shape, value.shape, "load_checkpoint");
    for (std::size_t e = 0; e < p->size(); ++e)
      p->data[e] = static_cast<S>(value.data[e]);
    Tensor<double>& m = find("adam/m/" + name);
    Tensor<double>& v = find("adam/v/" + name);
    check_same_shape(p->shape, m.shape, "load_checkpoint adam");
    check_same_shape(p->shape, v.shape, "load_checkpoint adam");
    auto& adam = out.state.adam[i];
    adam.step = static_cast<std::uint64_t>(iteration);
    adam.m.resize(p->size());
    adam.v.resize(p->size());
    for (std::size_t e = 0; e < p->size(); ++e) {
      adam.m[e] = static_cast<S>(m.data[e]);
      adam.v[e] = static_cast<S>(v.data[e]);
    }
    consumed += 3;
  }
  out.state.iteration = iteration;
  const Tensor<double>& hist = find("meta/history");
  if (hist.shape.size() != 2 || hist.shape[1] != 4)
    fail(Error::Kind::format, "load_checkpoint: malformed history");
  for (std::size_t i = 0; i < hist.shape[0]; ++i)
    out.state.history.entries.push_back(
        {static_cast<std::int64_t>(hist.data[i * 4 + 0]),
         hist.data[i * 4 + 1], hist.data[i * 4 + 2], hist.data[i * 4 + 3]});
  if (consumed != entries.size())
    fail(Error::Kind::format,
         "load_checkpoint: unrecognized entries in " + path);
  return out;
}

}  // namespace stego
