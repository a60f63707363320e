#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "latclass/model.hpp"

namespace latclass {

namespace detail {

// Per-cell pieces shared by the score, Hessian and Jacobian: the class
// products A_h = prod_l cond[l](i_l, h), the cell probability, and the
// gradient of the cell probability with respect to the chart coordinates.
struct CellDerivs {
  const FreeChart& chart;
  ParamPoint theta;
  int r, k, D;
  std::vector<double> A;        // A_h for the current cell
  Eigen::VectorXd grad_p;       // d p_cell / d chart
  double p = 0.0;

  CellDerivs(const FreeChart& ch, const Eigen::VectorXd& x)
      : chart(ch),
        theta(ch.to_param(x)),
        r(ch.spec.classes),
        k(ch.spec.order()),
        D(ch.dimension()),
        A(r),
        grad_p(D) {
    if (theta.min_coordinate() <= 0.0)
      throw std::domain_error("derivatives require a strictly interior point");
  }

  void eval(const std::vector<int>& idx) {
    for (int h = 0; h < r; ++h) {
      double a = 1.0;
      for (int l = 0; l < k; ++l) a *= theta.cond[l](idx[l], h);
      A[h] = a;
    }
    p = 0.0;
    for (int h = 0; h < r; ++h) p += theta.lambda[h] * A[h];

    grad_p.setZero();
    for (int h = 0; h + 1 < r; ++h) grad_p[h] = A[h] - A[r - 1];
    for (int l = 0; l < k; ++l) {
      const int dl = chart.spec.dims[l];
      for (int h = 0; h < r; ++h) {
        const double rest = theta.lambda[h] * A[h] / theta.cond[l](idx[l], h);
        const int off = chart.cond_offset(l, h);
        if (idx[l] == dl - 1) {
          for (int i = 0; i + 1 < dl; ++i) grad_p[off + i] = -rest;
        } else {
          grad_p[off + idx[l]] = rest;
        }
      }
    }
  }

  // Adds w * d2 p_cell / d chart^2 into H. The cell probability is
  // multilinear, so second derivatives only couple coordinates of different
  // blocks belonging to the same class (plus the lambda cross terms).
  void accumulate_second(const std::vector<int>& idx, double w, Eigen::MatrixXd& H) const {
    // signed sparse pattern of d m_l(i_l,.) / d chart for one axis
    auto for_each_sign = [&](int l, auto&& fn) {
      const int dl = chart.spec.dims[l];
      if (idx[l] == dl - 1) {
        for (int i = 0; i + 1 < dl; ++i) fn(i, -1.0);
      } else {
        fn(idx[l], 1.0);
      }
    };

    for (int h = 0; h < r; ++h) {
      // lambda x conditional cross terms
      if (r >= 2) {
        const double sign_h = (h + 1 < r) ? 1.0 : -1.0;
        for (int l = 0; l < k; ++l) {
          const double rest = A[h] / theta.cond[l](idx[l], h);
          const int off = chart.cond_offset(l, h);
          for_each_sign(l, [&](int i, double s) {
            const double v = w * sign_h * rest * s;
            if (h + 1 < r) {
              H(h, off + i) += v;
              H(off + i, h) += v;
            } else {
              for (int a = 0; a + 1 < r; ++a) {
                H(a, off + i) += v;
                H(off + i, a) += v;
              }
            }
          });
        }
      }
      // conditional x conditional across distinct axes, same class
      for (int l = 0; l < k; ++l) {
        for (int l2 = l + 1; l2 < k; ++l2) {
          const double rest = theta.lambda[h] * A[h] /
                              (theta.cond[l](idx[l], h) * theta.cond[l2](idx[l2], h));
          const int off1 = chart.cond_offset(l, h);
          const int off2 = chart.cond_offset(l2, h);
          for_each_sign(l, [&](int i, double s) {
            for_each_sign(l2, [&](int i2, double s2) {
              const double v = w * rest * s * s2;
              H(off1 + i, off2 + i2) += v;
              H(off2 + i2, off1 + i) += v;
            });
          });
        }
      }
    }
  }
};

}  // namespace detail

// Gradient of sum_c n_c log p_c(x) with respect to the chart coordinates.
inline Eigen::VectorXd score(const FreeChart& chart, const Eigen::VectorXd& x,
                             const ContingencyTable& t) {
  if (chart.spec.dims != t.dims()) throw std::invalid_argument("dimension mismatch");
  detail::CellDerivs cd(chart, x);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(chart.dimension());
  CellWalker walk(t.dims());
  for (std::size_t c = 0; c < t.cell_count(); ++c, walk.advance()) {
    const long long n = t.counts()[c];
    if (n == 0) continue;
    cd.eval(walk.index());
    g += (static_cast<double>(n) / cd.p) * cd.grad_p;
  }
  return g;
}

// Exact Hessian of the log-likelihood in the chart (symmetric by construction).
inline Eigen::MatrixXd hessian(const FreeChart& chart, const Eigen::VectorXd& x,
                               const ContingencyTable& t) {
  if (chart.spec.dims != t.dims()) throw std::invalid_argument("dimension mismatch");
  detail::CellDerivs cd(chart, x);
  const int D = chart.dimension();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D, D);
  CellWalker walk(t.dims());
  for (std::size_t c = 0; c < t.cell_count(); ++c, walk.advance()) {
    const long long n = t.counts()[c];
    if (n == 0) continue;
    cd.eval(walk.index());
    const double w = static_cast<double>(n);
    // scalar times the outer product, not (scalar*u)*u': keeps H(i,j) == H(j,i)
    H.noalias() -= (w / (cd.p * cd.p)) * (cd.grad_p * cd.grad_p.transpose()).eval();
    cd.accumulate_second(walk.index(), w / cd.p, H);
  }
  return H;
}

// Jacobian of the chart -> probability-simplex composite, with the last cell
// dropped: shape (d - 1) x standard dimension.
inline Eigen::MatrixXd model_jacobian(const FreeChart& chart, const Eigen::VectorXd& x) {
  detail::CellDerivs cd(chart, x);
  const long long d = chart.spec.cell_count();
  Eigen::MatrixXd J(d - 1, chart.dimension());
  CellWalker walk(chart.spec.dims);
  for (long long c = 0; c + 1 < d; ++c, walk.advance()) {
    cd.eval(walk.index());
    J.row(c) = cd.grad_p.transpose();
  }
  return J;
}

// Largest-to-smallest singular value ratio; infinite when the smallest
// singular value underflows to zero.
inline double condition_number(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  const double smax = s[0];
  const double smin = s[s.size() - 1];
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

}  // namespace latclass
