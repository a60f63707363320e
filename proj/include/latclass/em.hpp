#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "latclass/derivatives.hpp"
#include "latclass/model.hpp"

namespace latclass {

inline constexpr double kBoundaryEps = 1e-8;       // any coordinate below -> boundary point
inline constexpr double kStationaryGradTol = 1e-6; // gradient norm for a critical point
inline constexpr double kSaddleEigTol = 1e-7;      // positive Hessian eigenvalue -> saddle

struct EMConfig {
  int max_iterations = 10000;
  double rel_tol = 1e-10;    // relative log-likelihood change
  double param_tol = 1e-9;   // secondary guard: max absolute parameter change
  std::uint64_t seed = 0;    // stream seed for random starts

  void validate() const {
    if (rel_tol <= 0 || param_tol <= 0) throw std::invalid_argument("tolerances must be positive");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
  }
};

enum class CriticalKind { interior_max, saddle, boundary, unconverged };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::interior_max: return "interior-max";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::boundary: return "boundary";
    default: return "unconverged";
  }
}

struct FitResult {
  ParamPoint theta;
  ProbTable fitted;
  double loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double gradient_norm = std::numeric_limits<double>::quiet_NaN();
  CriticalKind classification = CriticalKind::unconverged;
  // absent (NaN) for boundary points, where the chart Hessian is undefined
  double hessian_condition = std::numeric_limits<double>::quiet_NaN();
  std::string algorithm = "em";
};

// One E step (posterior class responsibilities per cell) followed by one
// M step (responsibility-weighted marginal re-estimation). Blocks are
// renormalized so the result lies exactly in the parameter space.
inline ParamPoint em_step(const ParamPoint& theta, const ContingencyTable& t) {
  const ModelSpec spec{t.dims(), theta.classes()};
  if (!theta.shape_matches(spec)) throw std::invalid_argument("parameter shape mismatch");
  const int r = spec.classes;
  const int k = spec.order();

  Eigen::VectorXd class_mass = Eigen::VectorXd::Zero(r);
  std::vector<Eigen::MatrixXd> cond_mass;
  cond_mass.reserve(k);
  for (int l = 0; l < k; ++l) cond_mass.push_back(Eigen::MatrixXd::Zero(spec.dims[l], r));

  std::vector<double> term(r);
  CellWalker walk(t.dims());
  for (std::size_t c = 0; c < t.cell_count(); ++c, walk.advance()) {
    const long long n = t.counts()[c];
    if (n == 0) continue;
    const auto& idx = walk.index();
    double p = 0.0;
    for (int h = 0; h < r; ++h) {
      double a = theta.lambda[h];
      for (int l = 0; l < k; ++l) a *= theta.cond[l](idx[l], h);
      term[h] = a;
      p += a;
    }
    if (p <= 0.0)
      throw std::domain_error("zero cell probability against a positive count");
    for (int h = 0; h < r; ++h) {
      const double w = static_cast<double>(n) * term[h] / p;
      class_mass[h] += w;
      for (int l = 0; l < k; ++l) cond_mass[l](idx[l], h) += w;
    }
  }

  ParamPoint out;
  out.lambda = class_mass / class_mass.sum();
  for (int l = 0; l < k; ++l) {
    Eigen::MatrixXd m(spec.dims[l], r);
    for (int h = 0; h < r; ++h) {
      if (class_mass[h] > 0.0) {
        m.col(h) = cond_mass[l].col(h) / cond_mass[l].col(h).sum();
      } else {
        m.col(h) = theta.cond[l].col(h);  // dead class keeps its conditionals
      }
    }
    out.cond.push_back(std::move(m));
  }
  return out;
}

// Gradient/Hessian diagnosis of a terminal point. Boundary points (any
// coordinate within kBoundaryEps of zero) are not differentiated.
inline void classify_terminal(const ModelSpec& spec, const ContingencyTable& t,
                              FitResult& fr) {
  if (fr.theta.min_coordinate() < kBoundaryEps) {
    fr.classification = CriticalKind::boundary;
    fr.gradient_norm = std::numeric_limits<double>::quiet_NaN();
    fr.hessian_condition = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  FreeChart chart(spec);
  const Eigen::VectorXd x = chart.to_chart(fr.theta);
  fr.gradient_norm = score(chart, x, t).norm();
  const Eigen::MatrixXd H = hessian(chart, x, t);
  fr.hessian_condition = condition_number(H);
  if (fr.gradient_norm < kStationaryGradTol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    fr.classification = es.eigenvalues().maxCoeff() > kSaddleEigTol
                            ? CriticalKind::saddle
                            : CriticalKind::interior_max;
  } else {
    fr.classification = CriticalKind::unconverged;
  }
}

// Iterates em_step until the relative log-likelihood change drops below
// cfg.rel_tol (or the parameter change below cfg.param_tol, the secondary
// guard for directions the likelihood cannot see).
inline FitResult em_fit(const ParamPoint& theta0, const ContingencyTable& t,
                        const EMConfig& cfg = {}) {
  cfg.validate();
  const ModelSpec spec{t.dims(), theta0.classes()};
  double ll = log_likelihood(theta0, t);
  if (!std::isfinite(ll))
    throw std::domain_error("non-finite log-likelihood at the starting point");

  ParamPoint theta = theta0;
  FitResult fr;
  fr.algorithm = "em";
  for (int m = 1; m <= cfg.max_iterations; ++m) {
    ParamPoint next = em_step(theta, t);
    const double ll_next = log_likelihood(next, t);
    double dtheta = (next.lambda - theta.lambda).cwiseAbs().maxCoeff();
    for (std::size_t l = 0; l < next.cond.size(); ++l)
      dtheta = std::max(dtheta, (next.cond[l] - theta.cond[l]).cwiseAbs().maxCoeff());
    theta = std::move(next);
    fr.iterations = m;
    const bool ll_done = std::abs(ll_next - ll) <= cfg.rel_tol * (std::abs(ll_next) + 1.0);
    ll = ll_next;
    if (ll_done || dtheta <= cfg.param_tol) {
      fr.converged = true;
      break;
    }
  }
  fr.theta = theta;
  fr.fitted = accounting_map(theta, spec);
  fr.loglik = log_likelihood_p(fr.fitted, t);
  classify_terminal(spec, t, fr);
  return fr;
}

}  // namespace latclass
