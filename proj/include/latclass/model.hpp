#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "latclass/rng.hpp"
#include "latclass/table.hpp"

namespace latclass {

// Probabilities are clamped at this floor inside logs so that rounding noise
// never produces -inf; an exact structural zero against a positive count
// still does.
inline constexpr double kLogClamp = 1e-300;

struct ModelSpec {
  std::vector<int> dims;  // per-axis category counts, each >= 2
  int classes = 1;        // number of latent classes r >= 1

  int order() const { return static_cast<int>(dims.size()); }

  long long cell_count() const {
    long long d = 1;
    for (int di : dims) d *= di;
    return d;
  }

  // r * sum(d_l - 1) + r - 1: free parameters of the class-conditional model
  int standard_dimension() const {
    int s = 0;
    for (int di : dims) s += di - 1;
    return classes * s + classes - 1;
  }

  int complete_dimension() const { return static_cast<int>(cell_count()) - 1; }

  void validate() const {
    if (dims.empty()) throw std::invalid_argument("model needs at least one axis");
    for (int di : dims)
      if (di < 2) throw std::invalid_argument("axis with fewer than 2 categories");
    if (classes < 1) throw std::invalid_argument("need at least one latent class");
  }

  bool matches(const ContingencyTable& t) const { return dims == t.dims(); }
};

// Mixing weights plus per-class conditional marginals. cond[l] is a
// d_l x r matrix whose column h is the conditional distribution of variable l
// given class h.
struct ParamPoint {
  Eigen::VectorXd lambda;
  std::vector<Eigen::MatrixXd> cond;

  int classes() const { return static_cast<int>(lambda.size()); }

  static ParamPoint uniform(const ModelSpec& spec) {
    ParamPoint p;
    p.lambda = Eigen::VectorXd::Constant(spec.classes, 1.0 / spec.classes);
    for (int di : spec.dims)
      p.cond.push_back(Eigen::MatrixXd::Constant(di, spec.classes, 1.0 / di));
    return p;
  }

  static ParamPoint random(const ModelSpec& spec, Rng& rng) {
    ParamPoint p;
    auto lam = rng.dirichlet(spec.classes);
    p.lambda = Eigen::Map<Eigen::VectorXd>(lam.data(), spec.classes);
    for (int di : spec.dims) {
      Eigen::MatrixXd m(di, spec.classes);
      for (int h = 0; h < spec.classes; ++h) {
        auto col = rng.dirichlet(di);
        m.col(h) = Eigen::Map<Eigen::VectorXd>(col.data(), di);
      }
      p.cond.push_back(std::move(m));
    }
    return p;
  }

  bool shape_matches(const ModelSpec& spec) const {
    if (classes() != spec.classes) return false;
    if (cond.size() != spec.dims.size()) return false;
    for (std::size_t l = 0; l < cond.size(); ++l)
      if (cond[l].rows() != spec.dims[l] || cond[l].cols() != spec.classes) return false;
    return true;
  }

  // max |block sum - 1| over lambda and every conditional column
  double simplex_defect() const {
    double d = std::abs(lambda.sum() - 1.0);
    for (const auto& m : cond)
      for (int h = 0; h < m.cols(); ++h) d = std::max(d, std::abs(m.col(h).sum() - 1.0));
    return d;
  }

  double min_coordinate() const {
    double mn = lambda.minCoeff();
    for (const auto& m : cond) mn = std::min(mn, m.minCoeff());
    return mn;
  }

  void validate(const ModelSpec& spec, double tol = 1e-12) const {
    if (!shape_matches(spec)) throw std::invalid_argument("parameter shape mismatch");
    if (min_coordinate() < -tol) throw std::invalid_argument("negative parameter coordinate");
    if (simplex_defect() > tol) throw std::invalid_argument("simplex block does not sum to 1");
  }

  // relabel latent classes: column h of every block moves to perm[h]
  ParamPoint relabel_classes(const std::vector<int>& perm) const {
    ParamPoint out;
    const int r = classes();
    out.lambda.resize(r);
    for (int h = 0; h < r; ++h) out.lambda[perm[h]] = lambda[h];
    for (const auto& m : cond) {
      Eigen::MatrixXd mm(m.rows(), r);
      for (int h = 0; h < r; ++h) mm.col(perm[h]) = m.col(h);
      out.cond.push_back(std::move(mm));
    }
    return out;
  }

  // permute the categories of axis l (in every class column)
  ParamPoint permute_axis(int l, const std::vector<int>& sigma) const {
    ParamPoint out = *this;
    Eigen::MatrixXd mm(cond[l].rows(), cond[l].cols());
    for (int i = 0; i < cond[l].rows(); ++i) mm.row(i) = cond[l].row(sigma[i]);
    out.cond[l] = mm;
    return out;
  }
};

// Point of the ambient probability simplex, cells in row-major order.
struct ProbTable {
  std::vector<int> dims;
  Eigen::VectorXd p;

  Eigen::MatrixXd as_matrix() const {
    if (dims.size() != 2) throw std::invalid_argument("not a 2-way table");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(p.data(), dims[0], dims[1]);
  }
};

// Walks cells of a dims-shaped array in row-major order, exposing the digits.
class CellWalker {
 public:
  explicit CellWalker(const std::vector<int>& dims)
      : dims_(dims), idx_(dims.size(), 0) {}

  const std::vector<int>& index() const { return idx_; }

  bool advance() {
    for (std::size_t l = dims_.size(); l-- > 0;) {
      if (++idx_[l] < dims_[l]) return true;
      idx_[l] = 0;
    }
    return false;
  }

 private:
  const std::vector<int>& dims_;
  std::vector<int> idx_;
};

// The accounting map: cell (i_1..i_k) gets sum_h lambda_h prod_l cond[l](i_l, h).
// Per-cell class contributions are summed in ascending order so the result is
// bit-for-bit invariant under relabeling of the latent classes.
inline ProbTable accounting_map(const ParamPoint& theta, const ModelSpec& spec) {
  spec.validate();
  if (!theta.shape_matches(spec)) throw std::invalid_argument("parameter shape mismatch");
  const int r = spec.classes;
  const long long d = spec.cell_count();
  ProbTable out;
  out.dims = spec.dims;
  out.p.resize(d);
  std::vector<double> term(r);
  CellWalker walk(spec.dims);
  for (long long c = 0; c < d; ++c) {
    const auto& idx = walk.index();
    for (int h = 0; h < r; ++h) {
      double a = theta.lambda[h];
      for (int l = 0; l < spec.order(); ++l) a *= theta.cond[l](idx[l], h);
      term[h] = a;
    }
    std::sort(term.begin(), term.end());
    double s = 0.0;
    for (double v : term) s += v;
    out.p[c] = s;
    walk.advance();
  }
  return out;
}

// sum_c n_c log p_c. Zero counts contribute nothing even against p = 0;
// a positive count against an exact zero yields -inf.
inline double log_likelihood_p(const ProbTable& p, const ContingencyTable& t) {
  if (p.dims != t.dims()) throw std::invalid_argument("dimension mismatch");
  double ll = 0.0;
  for (std::size_t c = 0; c < t.cell_count(); ++c) {
    const long long n = t.counts()[c];
    if (n == 0) continue;
    if (p.p[c] == 0.0) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(n) * std::log(std::max(p.p[c], kLogClamp));
  }
  return ll;
}

inline double log_likelihood(const ParamPoint& theta, const ContingencyTable& t) {
  ModelSpec spec{t.dims(), theta.classes()};
  return log_likelihood_p(accounting_map(theta, spec), t);
}

// Minimal chart on the interior of the parameter space: the last coordinate
// of every simplex block is dropped. Layout: lambda_0..lambda_{r-2}, then for
// each axis l and class h the first d_l - 1 conditional entries.
struct FreeChart {
  ModelSpec spec;

  explicit FreeChart(ModelSpec s) : spec(std::move(s)) { spec.validate(); }

  int dimension() const { return spec.standard_dimension(); }

  int cond_offset(int l, int h) const {
    int off = spec.classes - 1;
    for (int ll = 0; ll < l; ++ll) off += spec.classes * (spec.dims[ll] - 1);
    return off + h * (spec.dims[l] - 1);
  }

  Eigen::VectorXd to_chart(const ParamPoint& theta) const {
    Eigen::VectorXd x(dimension());
    for (int h = 0; h + 1 < spec.classes; ++h) x[h] = theta.lambda[h];
    for (int l = 0; l < spec.order(); ++l)
      for (int h = 0; h < spec.classes; ++h)
        for (int i = 0; i + 1 < spec.dims[l]; ++i)
          x[cond_offset(l, h) + i] = theta.cond[l](i, h);
    return x;
  }

  ParamPoint to_param(const Eigen::VectorXd& x) const {
    ParamPoint theta;
    const int r = spec.classes;
    theta.lambda.resize(r);
    double lsum = 0.0;
    for (int h = 0; h + 1 < r; ++h) {
      theta.lambda[h] = x[h];
      lsum += x[h];
    }
    theta.lambda[r - 1] = 1.0 - lsum;
    for (int l = 0; l < spec.order(); ++l) {
      Eigen::MatrixXd m(spec.dims[l], r);
      for (int h = 0; h < r; ++h) {
        double s = 0.0;
        for (int i = 0; i + 1 < spec.dims[l]; ++i) {
          m(i, h) = x[cond_offset(l, h) + i];
          s += m(i, h);
        }
        m(spec.dims[l] - 1, h) = 1.0 - s;
      }
      theta.cond.push_back(std::move(m));
    }
    return theta;
  }

  // strictly interior: every stored coordinate and every completion positive
  bool interior(const Eigen::VectorXd& x, double margin = 0.0) const {
    ParamPoint theta = to_param(x);
    return theta.min_coordinate() > margin;
  }
};

}  // namespace latclass
