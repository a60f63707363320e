#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "latclass/em.hpp"
#include "latclass/model.hpp"
#include "latclass/parallel.hpp"
#include "latclass/rng.hpp"

namespace latclass {

struct out_of_domain : std::domain_error {
  using std::domain_error::domain_error;
};

// Reshape a k-way probability tensor into a matrix: rows enumerate the
// multi-indices of the axes in group1 lexicographically, columns those of the
// remaining axes.
inline Eigen::MatrixXd flatten(const ProbTable& p, const std::vector<int>& group1) {
  const int k = static_cast<int>(p.dims.size());
  if (group1.empty()) throw std::invalid_argument("row group must be nonempty");
  std::vector<char> in1(k, 0);
  for (int a : group1) {
    if (a < 0 || a >= k || in1[a]) throw std::invalid_argument("bad axis in bipartition");
    in1[a] = 1;
  }
  std::vector<int> group2;
  for (int a = 0; a < k; ++a)
    if (!in1[a]) group2.push_back(a);
  if (group2.empty()) throw std::invalid_argument("column group must be nonempty");

  long long f1 = 1, f2 = 1;
  for (int a : group1) f1 *= p.dims[a];
  for (int a : group2) f2 *= p.dims[a];

  Eigen::MatrixXd M(f1, f2);
  CellWalker walk(p.dims);
  const long long d = f1 * f2;
  for (long long c = 0; c < d; ++c, walk.advance()) {
    const auto& idx = walk.index();
    long long row = 0, col = 0;
    for (int a : group1) row = row * p.dims[a] + idx[a];
    for (int a : group2) col = col * p.dims[a] + idx[a];
    M(row, col) = p.p[c];
  }
  return M;
}

namespace detail {

template <typename Fn>
void for_each_combination(int n, int m, Fn&& fn) {
  std::vector<int> c(m);
  for (int i = 0; i < m; ++i) c[i] = i;
  for (;;) {
    fn(c);
    int i = m - 1;
    while (i >= 0 && c[i] == n - m + i) --i;
    if (i < 0) return;
    ++c[i];
    for (int j = i + 1; j < m; ++j) c[j] = c[j - 1] + 1;
  }
}

}  // namespace detail

// Largest absolute (r+1)x(r+1) minor of M; zero when the minor size exceeds
// the matrix, making the rank constraint vacuous.
inline double max_minor_residual(const Eigen::MatrixXd& M, int r) {
  const int m = r + 1;
  if (m > std::min(M.rows(), M.cols())) return 0.0;
  double worst = 0.0;
  Eigen::MatrixXd sub(m, m);
  detail::for_each_combination(static_cast<int>(M.rows()), m, [&](const std::vector<int>& rows) {
    detail::for_each_combination(static_cast<int>(M.cols()), m, [&](const std::vector<int>& cols) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) sub(i, j) = M(rows[i], cols[j]);
      worst = std::max(worst, std::abs(sub.determinant()));
    });
  });
  return worst;
}

inline double max_minor_residual(const ProbTable& p, int r) {
  if (p.dims.size() != 2) throw std::invalid_argument("expected a 2-way table");
  return max_minor_residual(p.as_matrix(), r);
}

// ---------------------------------------------------------------------------
// The symmetric 4x4 stationary family.
//
// Holding the class-1 leading coordinates (a11, b11) fixed determines all
// remaining parameters of a two-class stationary point whose fitted table is
// the paired 3/40-2/40 block table. The pre-image of that table is exactly
// this two-parameter family.
// ---------------------------------------------------------------------------

inline double swiss_surface_residual(double a11, double b11, double lambda1) {
  return std::abs(80.0 * lambda1 * a11 * b11 - 20.0 * lambda1 * a11 -
                  20.0 * lambda1 * b11 + 6.0 * lambda1 - 1.0);
}

inline ParamPoint swiss_surface_point(double a11, double b11) {
  const double den = 80.0 * a11 * b11 - 20.0 * a11 - 20.0 * b11 + 6.0;
  if (std::abs(den) < 1e-14) throw out_of_domain("mixing-weight denominator vanishes");
  const double l1 = 1.0 / den;
  const double da = 10.0 * (4.0 * b11 - 1.0);
  const double db = 10.0 * (4.0 * a11 - 1.0);
  if (std::abs(da) < 1e-14 || std::abs(db) < 1e-14)
    throw out_of_domain("class-2 coordinate denominator vanishes");
  const double a12 = (10.0 * b11 - 3.0) / da;
  const double b12 = (10.0 * a11 - 3.0) / db;

  auto paired = [](double top, double bottom) {
    Eigen::VectorXd v(4);
    v << top, top, bottom, bottom;
    return v;
  };

  ParamPoint theta;
  theta.lambda.resize(2);
  theta.lambda << l1, 1.0 - l1;
  Eigen::MatrixXd alpha(4, 2), beta(4, 2);
  alpha.col(0) = paired(a11, 0.5 - a11);
  alpha.col(1) = paired(a12, 0.5 - a12);
  beta.col(0) = paired(b11, 0.5 - b11);
  beta.col(1) = paired(b12, 0.5 - b12);
  theta.cond = {alpha, beta};

  const double eps = 1e-15;
  if (theta.min_coordinate() < -eps || theta.lambda.maxCoeff() > 1.0 + eps ||
      alpha.maxCoeff() > 1.0 + eps || beta.maxCoeff() > 1.0 + eps)
    throw out_of_domain("derived coordinates leave [0,1]");
  return theta;
}

// ---------------------------------------------------------------------------
// Profile log-likelihood grids
// ---------------------------------------------------------------------------

// Leading coordinates of one conditional block held fixed during fitting.
struct PinSpec {
  int axis = 0;
  int cls = 0;
  std::vector<double> prefix;  // pinned leading coordinates of the block

  double prefix_sum() const {
    double s = 0.0;
    for (double v : prefix) s += v;
    return s;
  }

  bool feasible(int block_size, double min_mass = 1e-9) const {
    if (static_cast<int>(prefix.size()) >= block_size) return false;
    for (double v : prefix)
      if (v <= 0.0) return false;
    return prefix_sum() < 1.0 - min_mass;
  }
};

inline void apply_pin(ParamPoint& theta, const PinSpec& pin) {
  auto col = theta.cond[pin.axis].col(pin.cls);
  const int d = static_cast<int>(col.size());
  const int np = static_cast<int>(pin.prefix.size());
  double tail = 0.0;
  for (int i = np; i < d; ++i) tail += col[i];
  const double want = 1.0 - pin.prefix_sum();
  for (int i = 0; i < np; ++i) col[i] = pin.prefix[i];
  for (int i = np; i < d; ++i) col[i] = tail > 0.0 ? col[i] * want / tail : want / (d - np);
}

// EM with a pinned block: the M step re-estimates the free tail of the pinned
// column proportionally and leaves the pinned prefix untouched, which keeps
// the ascent property within the pinned family.
inline ParamPoint em_step_pinned(const ParamPoint& theta, const ContingencyTable& t,
                                 const PinSpec& pin) {
  ParamPoint next = em_step(theta, t);
  apply_pin(next, pin);
  return next;
}

inline double em_fit_pinned(ParamPoint theta, const ContingencyTable& t, const PinSpec& pin,
                            const EMConfig& cfg, ParamPoint* terminal = nullptr) {
  apply_pin(theta, pin);
  double ll = log_likelihood(theta, t);
  if (!std::isfinite(ll)) return ll;
  for (int m = 0; m < cfg.max_iterations; ++m) {
    theta = em_step_pinned(theta, t, pin);
    const double ll_next = log_likelihood(theta, t);
    const bool done = std::abs(ll_next - ll) <= cfg.rel_tol * (std::abs(ll_next) + 1.0);
    ll = ll_next;
    if (done) break;
  }
  if (terminal) *terminal = std::move(theta);
  return ll;
}

struct ProfileGridConfig {
  // the default node set has spacing 1/90 so that the node lattice contains
  // every stationary pin position and the diagonal symmetry lines of the
  // 4x4 problem; off-lattice spacings alias the narrow likelihood ridges
  int resolution = 50;
  double lo = 14.0 / 90.0;
  double hi = 63.0 / 90.0;
  double fixed_value = 0.2;  // pinned third coordinate
  int pin_axis = 0;
  int pin_class = 0;
  int starts = 10;
  std::uint64_t seed = 0;
  EMConfig em{6000, 1e-10, 1e-10, 0};
  int threads = 0;
  // warm-start sweeps: every node is re-solved from its neighbors' terminal
  // parameters, which irons out nodes whose random starts missed the best
  // inner basin
  int refine_passes = 2;
  double min_prominence_rel = 1.5e-3;
};

struct ProfilePeak {
  int i = 0, j = 0;          // node indices (coordinate 1, coordinate 2)
  double c1 = 0.0, c2 = 0.0; // node coordinates
  double value = 0.0;
  double prominence = 0.0;   // drop to the highest saddle toward a higher peak
};

struct ProfileGrid {
  std::vector<double> nodes;  // shared node positions for both coordinates
  Eigen::MatrixXd value;      // value(i, j); NaN where the pin is infeasible
  std::vector<ProfilePeak> peaks;
};

namespace detail {

// Topographic prominence of every node that is the high point of its basin:
// nodes are flooded in descending order, and when two basins meet, the lower
// basin's high point is assigned its drop to the meeting level. The highest
// node of each connected region keeps an infinite prominence.
inline Eigen::MatrixXd node_prominence(const Eigen::MatrixXd& value) {
  const int n = static_cast<int>(value.rows());
  const int m = static_cast<int>(value.cols());
  std::vector<int> order;
  order.reserve(n * m);
  for (int c = 0; c < n * m; ++c)
    if (std::isfinite(value(c / m, c % m))) order.push_back(c);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return value(a / m, a % m) > value(b / m, b % m);
  });

  std::vector<int> parent(n * m, -1), peak_of(n * m, -1);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  Eigen::MatrixXd prom = Eigen::MatrixXd::Zero(n, m);
  for (int u : order) {
    parent[u] = u;
    peak_of[u] = u;
    const int ui = u / m, uj = u % m;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (!di && !dj) continue;
        const int vi = ui + di, vj = uj + dj;
        if (vi < 0 || vi >= n || vj < 0 || vj >= m) continue;
        const int v = vi * m + vj;
        if (parent[v] < 0) continue;  // not flooded yet
        int ru = find(u), rv = find(v);
        if (ru == rv) continue;
        int hi = ru, lo = rv;
        if (value(peak_of[hi] / m, peak_of[hi] % m) <
            value(peak_of[lo] / m, peak_of[lo] % m))
          std::swap(hi, lo);
        const int lp = peak_of[lo];
        prom(lp / m, lp % m) = value(lp / m, lp % m) - value(ui, uj);
        parent[lo] = hi;
      }
  }
  for (int u : order) {
    if (find(u) == u && peak_of[u] >= 0) {
      const int p = peak_of[u];
      prom(p / m, p % m) = std::numeric_limits<double>::infinity();
    }
  }
  return prom;
}

}  // namespace detail

// Nodes with every 8-neighborhood value present are peak candidates; plateaus
// (ties within tie_eps) are merged into one peak per connected component.
// Ridges that run obliquely to the node lattice alias into staircases of
// shallow false summits, so candidates must also clear a prominence floor,
// set relative to the value range so it survives rescaling the counts.
inline std::vector<ProfilePeak> detect_peaks(const std::vector<double>& nodes,
                                             const Eigen::MatrixXd& value,
                                             double min_prominence_rel = 1.5e-3,
                                             double tie_eps = 1e-9) {
  const int n = static_cast<int>(value.rows());
  const int m = static_cast<int>(value.cols());
  auto finite_at = [&](int i, int j) {
    return i >= 0 && i < n && j >= 0 && j < m && std::isfinite(value(i, j));
  };
  std::vector<int> comp(n * m, -1);
  int n_comp = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(value(i, j)) || comp[i * m + j] >= 0) continue;
      // flood fill ties
      std::vector<std::pair<int, int>> stack{{i, j}};
      comp[i * m + j] = n_comp;
      while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        for (int da = -1; da <= 1; ++da)
          for (int db = -1; db <= 1; ++db) {
            const int a2 = a + da, b2 = b + db;
            if ((da == 0 && db == 0) || !finite_at(a2, b2)) continue;
            if (comp[a2 * m + b2] >= 0) continue;
            if (std::abs(value(a2, b2) - value(a, b)) <= tie_eps) {
              comp[a2 * m + b2] = n_comp;
              stack.emplace_back(a2, b2);
            }
          }
      }
      ++n_comp;
    }

  std::vector<char> is_peak(n_comp, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(value(i, j))) continue;
      const int c = comp[i * m + j];
      for (int da = -1; da <= 1 && is_peak[c]; ++da)
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db == 0) continue;
          const int a2 = i + da, b2 = j + db;
          if (!finite_at(a2, b2)) {
            is_peak[c] = 0;  // touches the grid or feasibility boundary
            break;
          }
          if (comp[a2 * m + b2] != c && value(a2, b2) >= value(i, j) - tie_eps) {
            is_peak[c] = 0;
            break;
          }
        }
    }

  const Eigen::MatrixXd prom = detail::node_prominence(value);
  double vmax = -std::numeric_limits<double>::infinity();
  double vmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (std::isfinite(value(i, j))) {
        vmax = std::max(vmax, value(i, j));
        vmin = std::min(vmin, value(i, j));
      }
  const double floor_abs = min_prominence_rel * std::max(vmax - vmin, 0.0);
  std::vector<ProfilePeak> peaks;
  std::vector<char> seen(n_comp, 0);
  std::vector<double> comp_prom(n_comp, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(value(i, j))) continue;
      const int c = comp[i * m + j];
      comp_prom[c] = std::max(comp_prom[c], prom(i, j));
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      if (!std::isfinite(value(i, j))) continue;
      const int c = comp[i * m + j];
      if (is_peak[c] && !seen[c] && comp_prom[c] >= floor_abs) {
        seen[c] = 1;
        peaks.push_back({i, j, nodes[i], nodes[j], value(i, j), comp_prom[c]});
      }
    }
  return peaks;
}

// Profile log-likelihood over a square grid of the two leading coordinates of
// the pinned block, with the third coordinate held at cfg.fixed_value; every
// node is maximized over all remaining parameters by multistart pinned EM.
inline ProfileGrid profile_loglik_grid(const ContingencyTable& t, const ModelSpec& spec,
                                       const ProfileGridConfig& cfg) {
  spec.validate();
  if (spec.order() != 2) throw std::invalid_argument("profile grids expect a 2-way model");
  if (cfg.resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  if (spec.dims[cfg.pin_axis] < 4)
    throw std::invalid_argument("pinned block needs at least 4 categories");

  ProfileGrid grid;
  grid.nodes.resize(cfg.resolution);
  const double step = (cfg.hi - cfg.lo) / (cfg.resolution - 1);
  for (int i = 0; i < cfg.resolution; ++i) grid.nodes[i] = cfg.lo + step * i;
  grid.value = Eigen::MatrixXd::Constant(cfg.resolution, cfg.resolution,
                                         std::numeric_limits<double>::quiet_NaN());

  bool any_feasible = false;
  for (int i = 0; i < cfg.resolution && !any_feasible; ++i)
    for (int j = 0; j < cfg.resolution && !any_feasible; ++j) {
      PinSpec pin{cfg.pin_axis, cfg.pin_class, {grid.nodes[i], grid.nodes[j], cfg.fixed_value}};
      any_feasible = pin.feasible(spec.dims[cfg.pin_axis]);
    }
  if (!any_feasible) throw out_of_domain("no feasible grid node: pins sum past 1");

  const int res = cfg.resolution;
  const std::size_t n_nodes = static_cast<std::size_t>(res) * res;
  std::vector<ParamPoint> terminal(n_nodes);
  auto pin_at = [&](int i, int j) {
    return PinSpec{cfg.pin_axis, cfg.pin_class,
                   {grid.nodes[i], grid.nodes[j], cfg.fixed_value}};
  };

  parallel_for(
      n_nodes,
      [&](std::size_t node) {
        const int i = static_cast<int>(node) / res;
        const int j = static_cast<int>(node) % res;
        PinSpec pin = pin_at(i, j);
        if (!pin.feasible(spec.dims[cfg.pin_axis])) return;
        double best = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < cfg.starts; ++s) {
          Rng rng(stream_seed(cfg.seed, node * 1000003ULL + s));
          ParamPoint theta = ParamPoint::random(spec, rng);
          ParamPoint term;
          const double ll = em_fit_pinned(theta, t, pin, cfg.em, &term);
          if (ll > best) {
            best = ll;
            terminal[node] = std::move(term);
          }
        }
        grid.value(i, j) = best;
      },
      cfg.threads);

  for (int pass = 0; pass < cfg.refine_passes; ++pass) {
    const Eigen::MatrixXd before = grid.value;
    const std::vector<ParamPoint> seeds = terminal;
    parallel_for(
        n_nodes,
        [&](std::size_t node) {
          const int i = static_cast<int>(node) / res;
          const int j = static_cast<int>(node) % res;
          if (!std::isfinite(before(i, j))) return;
          PinSpec pin = pin_at(i, j);
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              if (di == 0 && dj == 0) continue;
              const int a = i + di, b = j + dj;
              if (a < 0 || a >= res || b < 0 || b >= res || !std::isfinite(before(a, b)))
                continue;
              ParamPoint term;
              const double ll =
                  em_fit_pinned(seeds[a * res + b], t, pin, cfg.em, &term);
              if (ll > grid.value(i, j)) {
                grid.value(i, j) = ll;
                terminal[node] = std::move(term);
              }
            }
        },
        cfg.threads);
    double moved = 0.0;
    for (std::size_t c = 0; c < n_nodes; ++c) {
      const double a = before(c / res, c % res), b = grid.value(c / res, c % res);
      if (std::isfinite(a) && std::isfinite(b)) moved = std::max(moved, b - a);
    }
    if (moved < 1e-12) break;
  }

  grid.peaks = detect_peaks(grid.nodes, grid.value, cfg.min_prominence_rel);
  return grid;
}

}  // namespace latclass
