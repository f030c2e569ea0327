#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "qcs/core_model.hpp"
#include "qcs/error.hpp"
#include "qcs/random.hpp"

// Batches-until-success statistics. B counts batches of m packets, each
// packet succeeding independently with probability p, until the last w
// batches together hold at least n successes.
namespace qcs::window {

struct WindowSpec {
  int n = 1;
  Window w = Window::infinite();
  double p = 1.0;
  int m = 1;
};

inline WindowSpec make_spec(int n, Window w, double p, int m) {
  if (n < 1) throw Error(ErrorKind::InvalidParameter, "n must be >= 1");
  if (m < 1) throw Error(ErrorKind::InvalidParameter, "m must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidParameter, "p must lie in (0, 1]");
  if (!w.is_infinite() && static_cast<std::int64_t>(w.size()) * m < n) {
    throw Error(ErrorKind::InfeasibleWindow, "w * m < n");
  }
  return WindowSpec{n, w, p, m};
}

inline WindowSpec window_spec(const Scenario& sc) {
  return WindowSpec{sc.request().packets, sc.request().window, sc.success_probability(),
                    sc.batch()};
}

/// Binomial(m, p) pmf; coefficients through log-gamma so large m cannot
/// overflow.
inline std::vector<double> binomial_pmf(int m, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(m) + 1, 0.0);
  if (p >= 1.0) {
    pmf[m] = 1.0;
    return pmf;
  }
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_mfact = std::lgamma(m + 1.0);
  for (int s = 0; s <= m; ++s) {
    const double log_coeff = log_mfact - std::lgamma(s + 1.0) - std::lgamma(m - s + 1.0);
    pmf[s] = std::exp(log_coeff + s * log_p + (m - s) * log_q);
  }
  return pmf;
}

// ---------------------------------------------------------------------------
// Survival curve for the infinite window.

inline constexpr double default_tail_tol = 1e-12;

struct SurvivalCurve {
  std::vector<double> values;   ///< values[b] = Pr[B > b]
  double truncation_tail = 0.0; ///< estimate of sum_{b > b_max} Pr[B > b]

  double mean() const {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }

  /// E[B^2] = sum_b b^2 (S(b-1) - S(b)) = sum_b (2b + 1) S(b).
  double second_moment() const {
    double acc = 0.0;
    for (std::size_t b = 0; b < values.size(); ++b) acc += (2.0 * b + 1.0) * values[b];
    return acc;
  }

  MomentPair moments() const { return {mean(), second_moment()}; }
};

/// Pr[B > b] for the infinite window. Pr[B > b] = Pr[S_1 + ... + S_b < n],
/// evaluated by convolving the distribution of the partial sum truncated at
/// n - 1 (O(b n m) overall) instead of expanding the nested sums.
inline SurvivalCurve survival_inf_multi(const WindowSpec& spec, double tail_tol = default_tail_tol) {
  if (!spec.w.is_infinite()) {
    throw Error(ErrorKind::InvalidParameter, "survival_inf_multi needs an infinite window");
  }
  if (!(spec.p > 0.0 && spec.p < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "survival_inf_multi needs p in (0, 1)");
  }
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "tail_tol must lie in (0, 1)");
  }
  constexpr std::size_t max_points = 50'000'000;

  const std::vector<double> pmf = binomial_pmf(spec.m, spec.p);
  const int n = spec.n;
  std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
  std::vector<double> next(partial.size());
  partial[0] = 1.0;

  SurvivalCurve curve;
  curve.values.push_back(1.0);
  while (curve.values.back() >= tail_tol) {
    if (curve.values.size() >= max_points) {
      throw Error(ErrorKind::NonConvergence, "survival series did not reach tail tolerance");
    }
    double survival = 0.0;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      const int smax = std::min(spec.m, j);
      for (int s = 0; s <= smax; ++s) acc += partial[j - s] * pmf[s];
      next[j] = acc;
      survival += acc;
    }
    partial.swap(next);
    curve.values.push_back(survival);
  }

  // Ratios of successive terms fall towards the one-batch failure
  // probability; the last observed ratio bounds the remaining decay.
  const double last = curve.values.back();
  const double prev = curve.values[curve.values.size() - 2];
  const double ratio = std::clamp(std::max(last / prev, pmf[0]), 0.0, 1.0 - 1e-16);
  curve.truncation_tail = last * ratio / (1.0 - ratio);
  return curve;
}

// ---------------------------------------------------------------------------
// Closed forms.

/// Closed-form or series moments where they exist: p = 1, or an infinite
/// window. Returns nullopt for finite windows with p < 1.
inline std::optional<MomentPair> exact_moments(const WindowSpec& spec) {
  if (spec.p >= 1.0) {
    const double batches = static_cast<double>((spec.n + spec.m - 1) / spec.m);
    return MomentPair{batches, batches * batches};
  }
  if (!spec.w.is_infinite()) return std::nullopt;
  if (spec.m == 1) {
    // Negative binomial on {n, n+1, ...}.
    const double n = spec.n;
    const double p = spec.p;
    return MomentPair{n / p, (n * (1.0 - p) + n * n) / (p * p)};
  }
  return survival_inf_multi(spec).moments();
}

// ---------------------------------------------------------------------------
// Sampling.

inline constexpr std::int64_t sampler_batch_cap = 1'000'000'000;

/// Draws B by direct simulation of batch outcomes. Binomial batch counts come
/// from inverting a precomputed CDF table, so one uniform is spent per batch
/// and a larger p never yields fewer successes for the same uniform.
class BatchSampler {
 public:
  explicit BatchSampler(const WindowSpec& spec) : spec_(spec) {
    const std::vector<double> pmf = binomial_pmf(spec.m, spec.p);
    cdf_.resize(pmf.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < pmf.size(); ++s) {
      acc += pmf[s];
      cdf_[s] = acc;
    }
    cdf_.back() = 1.0;
    if (!spec.w.is_infinite()) ring_.assign(static_cast<std::size_t>(spec.w.size()), 0);
  }

  int draw_batch(RandomStream& rng) const {
    const double u = rng.uniform();
    return static_cast<int>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

  std::int64_t operator()(RandomStream& rng) {
    if (spec_.w.is_infinite()) {
      std::int64_t total = 0;
      for (std::int64_t x = 1; x <= sampler_batch_cap; ++x) {
        total += draw_batch(rng);
        if (total >= spec_.n) return x;
      }
      throw Error(ErrorKind::SamplerOverrun, "no completion within 1e9 batches");
    }
    std::fill(ring_.begin(), ring_.end(), 0);
    const std::size_t w = ring_.size();
    std::int64_t window_sum = 0;
    std::size_t slot = 0;
    for (std::int64_t x = 1; x <= sampler_batch_cap; ++x) {
      const int s = draw_batch(rng);
      window_sum += s - ring_[slot];  // drop the batch leaving the window
      ring_[slot] = s;
      if (++slot == w) slot = 0;
      if (window_sum >= spec_.n) return x;
    }
    throw Error(ErrorKind::SamplerOverrun, "no completion within 1e9 batches");
  }

 private:
  WindowSpec spec_;
  std::vector<double> cdf_;
  std::vector<int> ring_;
};

inline std::int64_t sample_B(const WindowSpec& spec, RandomStream& rng) {
  BatchSampler sampler(spec);
  return sampler(rng);
}

/// Monte Carlo moment estimate with standard errors of both moments and the
/// covariance of the two sample means.
struct MomentEstimate {
  MomentPair moments;
  double se_m1 = 0.0;
  double se_m2 = 0.0;
  double cov_m1_m2 = 0.0;
  std::uint64_t samples = 0;
};

inline constexpr std::size_t sample_chunks = 64;

/// Splits the draws into 64 fixed chunks, chunk c using the stream seeded by
/// derive_seed(seed, c), and reduces in chunk order: the result depends only
/// on (spec, samples, seed), never on the worker count.
inline MomentEstimate sample_moments(const WindowSpec& spec, std::uint64_t samples,
                                     std::uint64_t seed, unsigned workers = worker_count()) {
  if (samples < 2) throw Error(ErrorKind::InvalidParameter, "need at least 2 samples");
  struct Sums {
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  };
  const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(sample_chunks, samples));
  std::vector<Sums> sums(chunks);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const std::uint64_t count = samples / chunks + (c < samples % chunks ? 1 : 0);
        RandomStream rng(derive_seed(seed, c));
        BatchSampler sampler(spec);
        Sums acc;
        for (std::uint64_t i = 0; i < count; ++i) {
          const double b = static_cast<double>(sampler(rng));
          const double b2 = b * b;
          acc.s1 += b;
          acc.s2 += b2;
          acc.s3 += b2 * b;
          acc.s4 += b2 * b2;
        }
        sums[c] = acc;
      },
      workers);

  Sums total;
  for (const Sums& s : sums) {
    total.s1 += s.s1;
    total.s2 += s.s2;
    total.s3 += s.s3;
    total.s4 += s.s4;
  }
  const double N = static_cast<double>(samples);
  MomentEstimate est;
  est.samples = samples;
  est.moments = {total.s1 / N, total.s2 / N};
  const double m1 = est.moments.m1;
  const double m2 = est.moments.m2;
  const double var_b = std::max(0.0, (total.s2 - N * m1 * m1) / (N - 1.0));
  const double var_b2 = std::max(0.0, (total.s4 - N * m2 * m2) / (N - 1.0));
  const double cov = (total.s3 - N * m1 * m2) / (N - 1.0);
  est.se_m1 = std::sqrt(var_b / N);
  est.se_m2 = std::sqrt(var_b2 / N);
  est.cov_m1_m2 = cov / N;
  return est;
}

// ---------------------------------------------------------------------------
// Absorbing Markov chain oracle.

inline constexpr std::size_t dp_state_limit = 5'000'000;
inline constexpr std::size_t dp_direct_limit = 200'000;

struct DpOptions {
  std::size_t state_limit = dp_state_limit;
  /// Chains up to this size use a sparse LU solve, larger ones Gauss-Seidel.
  std::size_t direct_limit = dp_direct_limit;
};

namespace detail {

struct Chain {
  std::size_t size = 0;
  // Transitions between transient states; absorption is the missing mass.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> edges;
};

// States are the success counts of the last w-1 batches (oldest first) for a
// finite window, or the cumulative count for an infinite one. Only states
// whose counts sum to less than n are transient, so each count is < n.
inline Chain build_chain(const WindowSpec& spec, std::size_t state_limit) {
  const std::vector<double> pmf = binomial_pmf(spec.m, spec.p);
  const int n = spec.n;
  if (n > 0xFFFF) throw Error(ErrorKind::StateSpaceTooLarge, "n too large for the window chain");
  const std::size_t hist = spec.w.is_infinite() ? 1 : static_cast<std::size_t>(spec.w.size() - 1);

  std::unordered_map<std::u16string, std::uint32_t> index;
  std::deque<std::u16string> pending;
  std::vector<std::u16string> states;
  const std::u16string start(hist, u'\0');
  index.emplace(start, 0);
  states.push_back(start);
  pending.push_back(start);

  Chain chain;
  std::u16string next;
  while (!pending.empty()) {
    const std::u16string cur = std::move(pending.front());
    pending.pop_front();
    const std::uint32_t from = index.at(cur);
    int held = 0;
    for (char16_t c : cur) held += static_cast<int>(c);
    for (int s = 0; s <= spec.m && held + s < n; ++s) {
      if (pmf[s] == 0.0) continue;
      if (spec.w.is_infinite()) {
        next.assign(1, static_cast<char16_t>(held + s));
      } else if (hist == 0) {
        next.clear();
      } else {
        next.assign(cur.begin() + 1, cur.end());
        next.push_back(static_cast<char16_t>(s));
      }
      auto [it, inserted] = index.emplace(next, static_cast<std::uint32_t>(states.size()));
      if (inserted) {
        if (states.size() >= state_limit) {
          throw Error(ErrorKind::StateSpaceTooLarge,
                      "window chain exceeds " + std::to_string(state_limit) + " states");
        }
        states.push_back(next);
        pending.push_back(next);
      }
      chain.edges.emplace_back(from, it->second, pmf[s]);
    }
  }
  chain.size = states.size();
  return chain;
}

inline MomentPair solve_direct(const Chain& chain) {
  using SpMat = Eigen::SparseMatrix<double>;
  const auto size = static_cast<Eigen::Index>(chain.size);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(chain.edges.size() + chain.size);
  for (Eigen::Index i = 0; i < size; ++i) trip.emplace_back(i, i, 1.0);
  SpMat Q(size, size);
  std::vector<Eigen::Triplet<double>> qtrip;
  qtrip.reserve(chain.edges.size());
  for (const auto& [from, to, prob] : chain.edges) {
    trip.emplace_back(from, to, -prob);
    qtrip.emplace_back(from, to, prob);
  }
  SpMat A(size, size);
  A.setFromTriplets(trip.begin(), trip.end());
  Q.setFromTriplets(qtrip.begin(), qtrip.end());
  A.makeCompressed();

  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorKind::NonConvergence, "sparse LU factorization failed");
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(size);
  const Eigen::VectorXd h = lu.solve(ones);
  const Eigen::VectorXd rhs = ones + 2.0 * (Q * h);
  const Eigen::VectorXd g = lu.solve(rhs);
  return {h[0], g[0]};
}

inline MomentPair solve_iterative(const Chain& chain) {
  // Gauss-Seidel on h = 1 + Q h, then g = 1 + 2 Q h + Q g.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(chain.size);
  for (const auto& [from, to, prob] : chain.edges) rows[from].emplace_back(to, prob);

  auto sweep_until_converged = [&](std::vector<double>& x, const std::vector<double>& rhs) {
    constexpr int max_sweeps = 10'000'000;
    for (int it = 0; it < max_sweeps; ++it) {
      double delta = 0.0;
      double scale = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double acc = rhs[i];
        double self = 0.0;
        for (const auto& [j, prob] : rows[i]) {
          if (j == i) self += prob;
          else acc += prob * x[j];
        }
        const double updated = acc / (1.0 - self);
        delta = std::max(delta, std::abs(updated - x[i]));
        scale = std::max(scale, std::abs(updated));
        x[i] = updated;
      }
      if (delta <= 1e-15 * scale) return;
    }
    throw Error(ErrorKind::NonConvergence, "Gauss-Seidel did not converge");
  };

  std::vector<double> h(chain.size, 0.0);
  sweep_until_converged(h, std::vector<double>(chain.size, 1.0));
  std::vector<double> rhs(chain.size, 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, prob] : rows[i]) rhs[i] += 2.0 * prob * h[j];
  }
  std::vector<double> g(chain.size, 0.0);
  sweep_until_converged(g, rhs);
  return {h[0], g[0]};
}

}  // namespace detail

/// Exact E[B] and E[B^2] from expected hitting times of the absorbing chain
/// over window states. Independent of the closed forms and of the sampler.
inline MomentPair dp_oracle(const WindowSpec& spec, const DpOptions& opts = {}) {
  const detail::Chain chain = detail::build_chain(spec, opts.state_limit);
  return chain.size <= opts.direct_limit ? detail::solve_direct(chain)
                                         : detail::solve_iterative(chain);
}

// ---------------------------------------------------------------------------
// Routing: which method supplies the moments for a given spec.

enum class WindowMethod { ClosedForm, Series, MarkovChain, MonteCarlo };

inline const char* to_string(WindowMethod m) {
  switch (m) {
    case WindowMethod::ClosedForm: return "closed_form";
    case WindowMethod::Series: return "series";
    case WindowMethod::MarkovChain: return "markov_chain";
    case WindowMethod::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

struct WindowMoments {
  MomentPair moments;
  double se_m1 = 0.0;
  double se_m2 = 0.0;
  double cov_m1_m2 = 0.0;
  WindowMethod method = WindowMethod::ClosedForm;
  std::uint64_t samples = 0;

  bool sampled() const noexcept { return method == WindowMethod::MonteCarlo; }
};

struct WindowOptions {
  /// Use the Markov chain instead of sampling for finite windows with p < 1
  /// when the chain fits in dp_state_limit states.
  bool prefer_exact = false;
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 1;
};

/// p = 1 or (w infinite, m = 1): closed form. w infinite, m > 1: survival
/// series. Otherwise Monte Carlo (or the Markov chain if prefer_exact).
inline WindowMoments window_moments(const WindowSpec& spec, const WindowOptions& opts = {}) {
  WindowMoments out;
  if (spec.p >= 1.0 || (spec.w.is_infinite() && spec.m == 1)) {
    out.moments = *exact_moments(spec);
    out.method = WindowMethod::ClosedForm;
    return out;
  }
  if (spec.w.is_infinite()) {
    out.moments = survival_inf_multi(spec).moments();
    out.method = WindowMethod::Series;
    return out;
  }
  if (opts.prefer_exact) {
    try {
      out.moments = dp_oracle(spec);
      out.method = WindowMethod::MarkovChain;
      return out;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::StateSpaceTooLarge) throw;
    }
  }
  const MomentEstimate est = sample_moments(spec, opts.samples, opts.seed);
  out.moments = est.moments;
  out.se_m1 = est.se_m1;
  out.se_m2 = est.se_m2;
  out.cov_m1_m2 = est.cov_m1_m2;
  out.method = WindowMethod::MonteCarlo;
  out.samples = est.samples;
  return out;
}

/// Thread-safe memo of window_moments. Sweeps revisit the same (n, w, p, m)
/// for every user count; values are deterministic, so a racing duplicate
/// computation stores an identical result.
class MomentCache {
 public:
  explicit MomentCache(WindowOptions opts = {}) : opts_(opts) {}

  const WindowOptions& options() const noexcept { return opts_; }

  WindowMoments get(const WindowSpec& spec) {
    const Key key{spec.n, spec.w.is_infinite() ? 0 : spec.w.size(), spec.p, spec.m};
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    WindowMoments value = window_moments(spec, opts_);
    std::lock_guard<std::mutex> lock(mu_);
    memo_.emplace(key, value);
    return value;
  }

 private:
  using Key = std::tuple<int, int, double, int>;
  WindowOptions opts_;
  std::mutex mu_;
  std::map<Key, WindowMoments> memo_;
};

}  // namespace qcs::window
