#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "tsf/errors.hpp"
#include "tsf/groups.hpp"
#include "tsf/linalg.hpp"
#include "tsf/rng.hpp"
#include "tsf/sigma.hpp"

namespace tsf {

/// Left concentrated Gaussian g = exp(M(xi)) mu with xi ~ N(0, sigma).
/// mu is the group mean / MAP; sigma lives in exponential coordinates.
template <typename G>
struct ConcentratedGaussian {
  typename G::Element mu;
  MatrixXd sigma;
};

/// Tangent distribution with a nonzero mean, the pre-whitening state.
template <typename G>
struct OffsetGaussian {
  typename G::Element mu;
  VectorXd xi_hat;
  MatrixXd sigma;
};

/// Draws one group element from the CG.
template <typename G>
typename G::Element sample(const G& group, const ConcentratedGaussian<G>& cg, RngStream& rng) {
  const MatrixXd l = safe_cholesky(cg.sigma);
  VectorXd z(group.dim());
  rng.fill_normal(z);
  return group.compose(group.exp(l * z), cg.mu);
}

/// Normalized consistency statistic (1/n) <l, Sigma^{-1} l> with
/// l = V(log(g_true mu^{-1})). Expectation 1 for a calibrated filter.
template <typename G>
double chi2(const G& group, const ConcentratedGaussian<G>& cg,
            const typename G::Element& g_true) {
  const VectorXd l = group.log(group.compose(g_true, group.inverse(cg.mu)));
  const VectorXd sol = Eigen::LDLT<MatrixXd>(cg.sigma).solve(l);
  return l.dot(sol) / static_cast<double>(group.dim());
}

struct WhitenOptions {
  double tol = 1e-15;
  int max_iter = 50;
  double lambda = 0.0;
  double first_order_threshold = 1e-6;
};

struct WhitenStats {
  int iterations = 0;
  double final_mean_norm = 0.0;
};

/// Iterative BCH recentring: moves the tangent mean into the group mean.
/// Per iteration the shift is a = xi_hat, the covariance maps through
/// Jbar^{-1}(a), and the new mean is the UT image of xi -> BCH(xi, -a).
/// Below first_order_threshold the first-order mean (exactly zero for
/// a = xi_hat) replaces the UT.
template <typename G>
ConcentratedGaussian<G> whiten(const G& group, const OffsetGaussian<G>& og,
                               const WhitenOptions& opt = {}, WhitenStats* stats = nullptr) {
  typename G::Element mu = og.mu;
  VectorXd xi = og.xi_hat;
  MatrixXd p = og.sigma;
  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    if (xi.norm() <= opt.tol) {
      if (stats) {
        stats->iterations = iter;
        stats->final_mean_norm = xi.norm();
      }
      return {mu, p};
    }
    if (iter == opt.max_iter) break;
    const VectorXd a = xi;
    VectorXd xi_next;
    if (a.norm() < opt.first_order_threshold) {
      xi_next = VectorXd::Zero(xi.size());  // xi - Jbar^{-1}(xi) xi
    } else {
      const SigmaSet set = sigma_points(xi, p, opt.lambda);
      xi_next = VectorXd::Zero(xi.size());
      for (size_t i = 0; i < set.points.size(); ++i) {
        xi_next += set.weights(static_cast<int>(i)) * group.bch(set.points[i], VectorXd(-a));
      }
    }
    const MatrixXd jinv = group.jbar_inv(a);
    p = symmetrize(jinv * p * jinv.transpose());
    mu = group.compose(group.exp(a), mu);
    xi = xi_next;
  }
  throw NoConvergence("whiten: mean norm " + std::to_string(xi.norm()) + " after max_iter");
}

/// Transports a CG on SO(3) x R^3 between two group laws sharing the same
/// manifold point. Law-A sigma points map through
/// log_B(exp_A(s) o_A mu o_B mu_B^{-1}) and are re-moment-matched; the
/// second-order residual mean is dropped.
inline ConcentratedGaussian<BiasGroup> transport_law(const BiasGroup& from, const BiasGroup& to,
                                                     const ConcentratedGaussian<BiasGroup>& cg,
                                                     double lambda = 0.0) {
  const int n = from.dim();
  RotBias mu_b{cg.mu.R, cg.mu.beta, to.law};
  const SigmaSet set = sigma_points(VectorXd::Zero(n), cg.sigma, lambda);
  const RotBias mu_b_inv = to.inverse(mu_b);
  std::vector<VectorXd> mapped(set.points.size());
  for (size_t i = 0; i < set.points.size(); ++i) {
    RotBias g = from.compose(from.exp(set.points[i]), cg.mu);
    g.law = to.law;
    mapped[i] = to.log(to.compose(g, mu_b_inv));
  }
  VectorXd mean = VectorXd::Zero(n);
  for (size_t i = 0; i < mapped.size(); ++i) mean += set.weights(static_cast<int>(i)) * mapped[i];
  MatrixXd cov = MatrixXd::Zero(n, n);
  for (size_t i = 0; i < mapped.size(); ++i) {
    const VectorXd d = mapped[i] - mean;
    cov += set.weights(static_cast<int>(i)) * d * d.transpose();
  }
  return {mu_b, symmetrize(cov)};
}

}  // namespace tsf
