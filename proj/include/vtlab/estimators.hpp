#pragma once

#include <cmath>
#include <utility>

#include "vtlab/core.hpp"
#include "vtlab/problems.hpp"

namespace vtlab {

// Deterministic estimator: every draw is the exact gradient.
inline Estimator exact_estimator(const ProblemSpec& p) {
  Estimator e;
  e.kind = EstimatorKind::Exact;
  e.sigma2 = 0.0;
  e.true_grad_into = p.grad_into;
  e.draw_into = [g = p.grad_into](const Vec& x, RngStream&, Vec& out) {
    g(x, out);
  };
  return e;
}

// Gradient plus isotropic gaussian noise with E||noise||^2 = sigma2.
inline Estimator gaussian_estimator(const ProblemSpec& p, double sigma2) {
  if (sigma2 < 0.0) throw ConfigError("gaussian estimator: sigma2 < 0");
  Estimator e;
  e.kind = EstimatorKind::Gaussian;
  e.sigma2 = sigma2;
  e.true_grad_into = p.grad_into;
  const double coord_sd = std::sqrt(sigma2 / static_cast<double>(p.dim));
  e.draw_into = [g = p.grad_into, coord_sd](const Vec& x, RngStream& rng,
                                            Vec& out) {
    g(x, out);
    for (double& v : out) v += coord_sd * rng.next_normal();
  };
  return e;
}

// Single-coin sparsification: coordinates up to the progress index pass
// through, later coordinates are scaled by xi/p with xi Bernoulli(p).
inline void bernoulli_sparsify(Vec& g, bool xi, double p, int progress) {
  const double factor = xi ? 1.0 / p : 0.0;
  for (std::size_t j = static_cast<std::size_t>(progress); j < g.size(); ++j)
    g[j] *= factor;
}

inline Vec bernoulli_sparsified_grad(const Vec& x, bool xi, double p,
                                     const Vec& base_grad, int progress) {
  if (!(p > 0.0) || p > 1.0)
    throw ConfigError("bernoulli estimator: p must be in (0, 1]");
  if (progress != progress_index(x))
    throw ConfigError("bernoulli estimator: progress does not match point");
  Vec g = base_grad;
  bernoulli_sparsify(g, xi, p, progress);
  return g;
}

inline Estimator bernoulli_estimator(const ProblemSpec& p, double prob) {
  if (!(prob > 0.0) || prob > 1.0)
    throw ConfigError("bernoulli estimator: p must be in (0, 1]");
  Estimator e;
  e.kind = EstimatorKind::BernoulliSparsified;
  // Variance bound from the two-outcome enumeration; callers that know the
  // gradient sup-norm can tighten it, here we leave the generic form.
  e.sigma2 = std::numeric_limits<double>::infinity();
  e.coin_prob = prob;
  e.true_grad_into = p.grad_into;
  e.draw_into = [g = p.grad_into, prob](const Vec& x, RngStream& rng, Vec& out) {
    const bool xi = rng.next_bernoulli(prob);
    g(x, out);
    bernoulli_sparsify(out, xi, prob, progress_index(x));
  };
  return e;
}

// Exact enumeration of the two Bernoulli outcomes at a point.
// Returns (expected draw, expected squared deviation from the gradient).
inline std::pair<Vec, double> bernoulli_exact_moments(const Vec& grad, double p,
                                                      int progress) {
  Vec success = grad;
  bernoulli_sparsify(success, true, p, progress);
  Vec failure = grad;
  bernoulli_sparsify(failure, false, p, progress);

  Vec mean(grad.size());
  for (std::size_t j = 0; j < grad.size(); ++j)
    mean[j] = p * success[j] + (1.0 - p) * failure[j];

  double second = 0.0;
  {
    const Vec ds = sub(success, grad);
    const Vec df = sub(failure, grad);
    second = p * norm_sq(ds) + (1.0 - p) * norm_sq(df);
  }
  return {mean, second};
}

// Mini-batch sampling with replacement over a logistic-regression dataset.
// batch >= dataset size means the full (exact) gradient.
inline Estimator minibatch_estimator(const Dataset& ds, double reg,
                                     std::size_t batch) {
  if (batch < 1) throw ConfigError("minibatch estimator: batch must be >= 1");
  const std::size_t m = ds.size();
  const ProblemSpec full = logreg_problem(ds, reg);

  Estimator e;
  e.kind = EstimatorKind::Minibatch;
  e.true_grad_into = full.grad_into;
  if (batch >= m) {
    e.sigma2 = 0.0;
    e.draw_into = [g = full.grad_into](const Vec& x, RngStream&, Vec& out) {
      g(x, out);
    };
    return e;
  }

  e.draw_into = [ds, reg, batch, m](const Vec& w, RngStream& rng, Vec& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t s = 0; s < batch; ++s) {
      const std::size_t i = static_cast<std::size_t>(rng.next_index(m));
      detail::logreg_sample_grad_acc(ds, i, w, 1.0 / static_cast<double>(batch),
                                     out);
    }
    axpy(reg, w, out);
  };

  // Data-dependent variance estimate at w = 0: per-sample scatter divided by
  // the batch size. Used only to feed the step-size formulas.
  {
    Vec w0(ds.features.cols, 0.0);
    Vec mean(ds.features.cols, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      detail::logreg_sample_grad_acc(ds, i, w0, 1.0 / static_cast<double>(m),
                                     mean);
    double scatter = 0.0;
    Vec gi(ds.features.cols, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      std::fill(gi.begin(), gi.end(), 0.0);
      detail::logreg_sample_grad_acc(ds, i, w0, 1.0, gi);
      scatter += dist(gi, mean) * dist(gi, mean);
    }
    e.sigma2 = scatter / static_cast<double>(m) / static_cast<double>(batch);
  }
  return e;
}

// Empirical mean of `draws` samples and their mean squared deviation from the
// exact gradient. Draw s uses the stream (worker 0, tag 0, slot s).
inline std::pair<Vec, double> estimator_moments(const Estimator& est,
                                                const Vec& x,
                                                std::uint64_t draws,
                                                std::uint64_t seed) {
  if (draws < 1) throw ConfigError("estimator_moments: draws must be >= 1");
  const RngContract rng{seed};
  const Vec g = est.true_grad(x);
  Vec mean(x.size(), 0.0);
  Vec sample(x.size());
  double second = 0.0;
  for (std::uint64_t s = 0; s < draws; ++s) {
    RngStream stream = rng.draw_stream(0, 0, s);
    est.draw_into(x, stream, sample);
    axpy(1.0, sample, mean);
    second += dist(sample, g) * dist(sample, g);
  }
  scale(mean, 1.0 / static_cast<double>(draws));
  second /= static_cast<double>(draws);
  return {mean, second};
}

}  // namespace vtlab
