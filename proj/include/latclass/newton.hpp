#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "latclass/em.hpp"
#include "latclass/model.hpp"

namespace latclass {

inline constexpr double kInteriorFloor = 1e-10;

struct NewtonConfig {
  int max_iterations = 500;
  double grad_tol = 1e-8;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  // shift target: largest eigenvalue of H - mu I pushed below -shift_base*|H|
  double shift_base = 1e-10;
  int max_bisections = 60;

  void validate() const {
    if (!(0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1))
      throw std::invalid_argument("need 0 < c1 < c2 < 1");
    if (grad_tol <= 0) throw std::invalid_argument("gradient tolerance must be positive");
  }
};

struct NewtonTraceRow {
  int iteration = 0;
  double loglik = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double shift = 0.0;
};

// Clamp every simplex coordinate at the interior floor and renormalize the
// blocks.
inline ParamPoint clamp_to_interior(const ParamPoint& theta, double floor_val = kInteriorFloor) {
  ParamPoint out = theta;
  auto fix = [&](Eigen::VectorXd v) {
    v = v.cwiseMax(floor_val);
    return Eigen::VectorXd(v / v.sum());
  };
  out.lambda = fix(out.lambda);
  for (auto& m : out.cond)
    for (int h = 0; h < m.cols(); ++h) m.col(h) = fix(m.col(h));
  return out;
}

// Smallest rung of a power-of-two ladder pushing the largest eigenvalue of
// H - mu I to or below -base*|H|. Zero when H already qualifies.
inline double negdef_shift(double eig_max, double eig_abs_max, double base) {
  const double target = base * std::max(eig_abs_max, 1e-30);
  if (eig_max <= -target) return 0.0;
  double mu = target;
  while (eig_max - mu > -target) mu *= 2.0;
  return mu;
}

namespace detail {

// Largest step along delta keeping every simplex coordinate at least
// floor_val. Chart-to-parameter is affine, so each coordinate is linear in
// the step length.
inline double max_feasible_step(const FreeChart& chart, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& delta, double floor_val) {
  const ParamPoint a = chart.to_param(x);
  const ParamPoint b = chart.to_param(x + delta);
  double amax = std::numeric_limits<double>::infinity();
  auto visit = [&](double c0, double c1) {
    const double slope = c1 - c0;
    if (slope < 0.0) amax = std::min(amax, (c0 - floor_val) / (-slope));
  };
  for (int h = 0; h < a.lambda.size(); ++h) visit(a.lambda[h], b.lambda[h]);
  for (std::size_t l = 0; l < a.cond.size(); ++l)
    for (int i = 0; i < a.cond[l].rows(); ++i)
      for (int h = 0; h < a.cond[l].cols(); ++h) visit(a.cond[l](i, h), b.cond[l](i, h));
  return amax;
}

}  // namespace detail

// Modified Newton-Raphson ascent in the free chart: the Hessian is shifted to
// be safely negative definite, the step length satisfies the Wolfe
// conditions, and iterates stay strictly interior.
inline FitResult newton_fit(const ParamPoint& theta0, const ContingencyTable& t,
                            const NewtonConfig& cfg = {},
                            std::vector<NewtonTraceRow>* trace = nullptr) {
  cfg.validate();
  const ModelSpec spec{t.dims(), theta0.classes()};
  if (!theta0.shape_matches(spec)) throw std::invalid_argument("parameter shape mismatch");
  FreeChart chart(spec);

  Eigen::VectorXd x = chart.to_chart(clamp_to_interior(theta0));
  double ll = log_likelihood(chart.to_param(x), t);
  if (!std::isfinite(ll))
    throw std::domain_error("non-finite log-likelihood at the starting point");

  FitResult fr;
  fr.algorithm = "newton";
  const int D = chart.dimension();
  bool converged = false;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    fr.iterations = it;
    const Eigen::VectorXd g = score(chart, x, t);
    const double gn = g.norm();
    if (gn < cfg.grad_tol) {
      converged = true;
      if (trace) trace->push_back({it, ll, gn, 0.0, 0.0});
      break;
    }

    const Eigen::MatrixXd H = hessian(chart, x, t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    const double mu = negdef_shift(es.eigenvalues().maxCoeff(),
                                   es.eigenvalues().cwiseAbs().maxCoeff(), cfg.shift_base);

    Eigen::VectorXd delta =
        (H - mu * Eigen::MatrixXd::Identity(D, D)).ldlt().solve(-g);
    double slope0 = g.dot(delta);
    if (!(slope0 > 0.0) || !delta.allFinite()) {
      delta = g;  // shifted solve lost positivity to rounding: fall back to ascent
      slope0 = g.squaredNorm();
    }

    const double amax = detail::max_feasible_step(chart, x, delta, kInteriorFloor);
    const double acap = 0.99 * amax;
    if (!(acap > 0.0)) break;  // pinned against the boundary

    double alpha = std::min(1.0, acap);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double best_alpha = 0.0, best_ll = ll;
    bool accepted = false;
    for (int b = 0; b < cfg.max_bisections; ++b) {
      const Eigen::VectorXd xa = x + alpha * delta;
      const double lla = log_likelihood(chart.to_param(xa), t);
      if (std::isfinite(lla) && lla > best_ll) {
        best_ll = lla;
        best_alpha = alpha;
      }
      if (!std::isfinite(lla) || lla < ll + cfg.wolfe_c1 * alpha * slope0) {
        hi = alpha;
      } else {
        const double slope_a = score(chart, xa, t).dot(delta);
        if (slope_a > cfg.wolfe_c2 * slope0) {
          lo = alpha;
          if (!std::isfinite(hi)) {
            if (alpha >= 0.999 * acap) {
              accepted = true;  // capped by the simplex boundary, increase holds
              break;
            }
            alpha = std::min(2.0 * alpha, acap);
            continue;
          }
        } else {
          accepted = true;
          break;
        }
      }
      alpha = 0.5 * (lo + hi);
    }
    if (!accepted) {
      if (best_alpha > 0.0) {
        alpha = best_alpha;  // keep the best strictly increasing trial
      } else {
        break;  // line-search failure: no step of any length increases ll
      }
    }

    x += alpha * delta;
    ParamPoint p = chart.to_param(x);
    if (p.min_coordinate() < kInteriorFloor) {
      p = clamp_to_interior(p);
      x = chart.to_chart(p);
    }
    ll = log_likelihood(p, t);
    if (trace) trace->push_back({it, ll, gn, alpha, mu});
  }

  fr.converged = converged;
  fr.theta = chart.to_param(x);
  fr.fitted = accounting_map(fr.theta, spec);
  fr.loglik = log_likelihood_p(fr.fitted, t);
  classify_terminal(spec, t, fr);
  return fr;
}

// Ratio of the largest to smallest singular value of the chart Hessian.
inline double hessian_condition_number(const ParamPoint& theta, const ContingencyTable& t) {
  if (theta.min_coordinate() <= 0.0)
    throw std::domain_error("condition number requires an interior point");
  FreeChart chart(ModelSpec{t.dims(), theta.classes()});
  return condition_number(hessian(chart, chart.to_chart(theta), t));
}

}  // namespace latclass
