// Acceptance suite: runs the twelve headline checks end to end and prints one
// pass/fail line per criterion. Exits nonzero if any of them fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "latclass/dimension.hpp"
#include "latclass/em.hpp"
#include "latclass/fixtures.hpp"
#include "latclass/geometry.hpp"
#include "latclass/newton.hpp"
#include "latclass/symmetry.hpp"
#include "oracles.hpp"
#include "test_fixtures.hpp"

using namespace latclass;

namespace {

struct Harness {
  int failures = 0;
  std::vector<std::string> notes;
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back(what);
    }
  }

  void finish(int id, const std::string& name, double seconds) {
    std::printf("criterion %02d [%s] %s (%.1fs)\n", id, ok ? "PASS" : "FAIL", name.c_str(),
                seconds);
    for (const auto& n : notes) std::printf("             - %s\n", n.c_str());
    if (!ok) ++failures;
    notes.clear();
    ok = true;
  }
};

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd counts_as_matrix(const CriticalPoint& pt, int n) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(pt.fitted_counts.data(), n, n);
}

bool table_matches(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

double param_distance(const ParamPoint& a, const ParamPoint& b) {
  double d = (a.lambda - b.lambda).cwiseAbs().maxCoeff();
  for (std::size_t l = 0; l < a.cond.size(); ++l)
    d = std::max(d, (a.cond[l] - b.cond[l]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

int main() {
  Harness h;

  // ----------------------------------------------------------------- 1
  {
    auto t0 = std::chrono::steady_clock::now();
    const auto models = dimension_survey_models();
    h.expect(models.size() == 21, "expected 21 survey models");
    for (std::size_t row = 0; row < models.size(); ++row) {
      DimensionReport rep = dimension_report(models[row], 5, 7);
      const auto& want = fixtures_ref::kDimensionSurvey[row];
      h.expect(rep.effective == want.effective && rep.standard == want.standard &&
                   rep.complete == want.complete && rep.deficiency == want.deficiency,
               "row " + std::to_string(row) + " mismatch");
    }
    const double secs = elapsed(t0);
    h.expect(secs < 60.0, "survey took too long");
    h.finish(1, "dimension survey: all 21 rows exact, 5 Jacobian samples", secs);
  }

  // ----------------------------------------------------------------- 2
  CriticalPointSet swiss_set;
  {
    auto t0 = std::chrono::steady_clock::now();
    auto t = fixtures::swiss();
    swiss_set = multistart_explore(t, ModelSpec{{4, 4}, 2}, 500, 20250809);

    std::vector<const CriticalPoint*> global, local;
    for (const auto& pt : swiss_set.points) {
      if (pt.classification != CriticalKind::interior_max) continue;
      if (std::abs(pt.loglik - fixtures_ref::kSwissGlobalLL) < 1e-3) global.push_back(&pt);
      else if (std::abs(pt.loglik - fixtures_ref::kSwissLocalLL) < 1e-3) local.push_back(&pt);
    }
    h.expect(global.size() == 3, "want 3 top maxima, got " + std::to_string(global.size()));
    h.expect(local.size() == 4, "want 4 second maxima, got " + std::to_string(local.size()));
    for (const auto* pt : global) {
      int hits = 0;
      for (const auto& ref : fixtures_ref::swiss_global_tables())
        if (table_matches(counts_as_matrix(*pt, 4), ref, 1e-3)) ++hits;
      h.expect(hits == 1, "top table does not match the catalog");
    }
    for (const auto* pt : local) {
      int hits = 0;
      for (const auto& ref : fixtures_ref::swiss_local_tables())
        if (table_matches(counts_as_matrix(*pt, 4), ref, 1e-3)) ++hits;
      h.expect(hits == 1, "second-level table does not match the catalog");
    }
    h.expect(std::abs(fixtures_ref::kSwissGlobalLL - (-110.0981)) < 1e-3, "top level drifted");
    h.expect(std::abs(fixtures_ref::kSwissLocalLL - (-110.1523)) < 1e-3, "second level drifted");

    // the additive bridge to the multinomial-coefficient convention
    const std::vector<long long> counts(t.counts());
    const double coeff_exact = oracle::log_multinomial_coeff_exact(counts);
    const double coeff_lgamma = oracle::log_multinomial_coeff_lgamma(counts);
    h.expect(std::abs(coeff_exact - coeff_lgamma) < 1e-6, "coefficient oracles disagree");
    h.expect(std::abs(coeff_exact - 89.2906) < 1e-3, "coefficient far from 89.2906");
    h.expect(std::abs(fixtures_ref::kSwissGlobalLL + coeff_exact - (-20.8074)) < 1e-3,
             "bridged top level mismatch");
    h.expect(std::abs(fixtures_ref::kSwissLocalLL + coeff_exact - (-20.8616)) < 1e-3,
             "bridged second level mismatch");
    const double secs = elapsed(t0);
    h.expect(secs < 120.0, "exploration took too long");
    h.finish(2, "4x4 exploration: 3 + 4 maxima, tables and levels as reported", secs);
  }

  // ----------------------------------------------------------------- 3
  {
    auto t0 = std::chrono::steady_clock::now();
    auto t = fixtures::swiss();
    // spot values of the published estimates, from the surface family
    ParamPoint spot = swiss_surface_point(0.3474, 0.3474);
    h.expect(std::abs(spot.lambda[0] - 0.5683) < 2e-3, "lambda_1 spot value");
    h.expect(std::abs(spot.lambda[1] - 0.4317) < 2e-3, "lambda_2 spot value");
    h.expect(std::abs(spot.cond[0](0, 0) - 0.3474) < 2e-3, "alpha_11 spot value");
    h.expect(std::abs(spot.cond[0](2, 0) - 0.1526) < 2e-3, "alpha_31 spot value");
    h.expect(std::abs(spot.cond[0](0, 1) - 0.1217) < 2e-3, "alpha_12 spot value");
    h.expect(std::abs(spot.cond[0](2, 1) - 0.3783) < 2e-3, "alpha_32 spot value");

    // terminal parameters of a top-level run lie on the surface family after
    // relabeling classes and aligning the paired coordinates
    bool family_checked = false;
    for (const auto& pt : swiss_set.points) {
      if (pt.classification != CriticalKind::interior_max ||
          std::abs(pt.loglik - fixtures_ref::kSwissGlobalLL) > 1e-3)
        continue;
      // conjugate the representative onto the {1,2}/{3,4} pairing
      const auto tables = fixtures_ref::swiss_global_tables();
      const std::vector<std::vector<int>> conjs = {
          {0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
      for (int k = 0; k < 3; ++k) {
        if (!table_matches(counts_as_matrix(pt, 4), tables[k], 1e-3)) continue;
        // tables[k] = joint image of tables[0]; conjs[k] maps it back
        ParamPoint aligned =
            pt.representative.permute_axis(0, conjs[k]).permute_axis(1, conjs[k]);
        for (const std::vector<int>& relabel : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
          ParamPoint cand = aligned.relabel_classes(relabel);
          try {
            ParamPoint family = swiss_surface_point(cand.cond[0](0, 0), cand.cond[1](0, 0));
            if (param_distance(cand, family) < 1e-5) family_checked = true;
          } catch (const out_of_domain&) {
          }
        }
      }
    }
    h.expect(family_checked, "no top-level terminal point matched the surface family");
    h.finish(3, "top-level parameters sit on the stationary surface family", elapsed(t0));
  }

  // ----------------------------------------------------------------- 4
  {
    auto t0 = std::chrono::steady_clock::now();
    const ModelSpec spec{{4, 4}, 2};
    double worst_res = 0.0, worst_tab = 0.0;
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        const double a = 0.31 + 0.14 * i / 19.0;
        const double b = 0.31 + 0.14 * j / 19.0;
        ParamPoint theta = swiss_surface_point(a, b);
        worst_res = std::max(worst_res, swiss_surface_residual(a, b, theta.lambda[0]));
        ProbTable p = accounting_map(theta, spec);
        for (int r = 0; r < 4; ++r)
          for (int c = 0; c < 4; ++c) {
            const double want = ((r < 2) == (c < 2)) ? 3.0 / 40 : 2.0 / 40;
            worst_tab = std::max(worst_tab, std::abs(p.p[r * 4 + c] - want));
          }
      }
    }
    h.expect(worst_res < 1e-12, "surface equation residual too large");
    h.expect(worst_tab < 1e-12, "fitted block table error too large");
    h.finish(4, "20x20 surface grid: defining equation and block table exact", elapsed(t0));
  }

  // ----------------------------------------------------------------- 5
  CriticalPointSet six_set;
  {
    auto t0 = std::chrono::steady_clock::now();
    auto t = fixtures::swiss6();
    six_set = multistart_explore(t, ModelSpec{{6, 6}, 2}, 2000, 60606);

    // verified stationary levels of the six cataloged points; the catalog
    // prints -300.2554 for its last displayed table, whose exact value is
    // -300.256553 (the other five printed levels agree with their tables)
    const std::vector<double> verified = {-300.15550845811745, -300.17292458622,
                                          -300.18493320181,    -300.25236580593,
                                          -300.25655346314,    -301.01559083031};
    const std::vector<double> printed = {-300.1555, -300.1729, -300.1856,
                                         -300.2524, -300.2554, -301.0156};
    for (std::size_t k = 0; k < verified.size(); ++k) {
      bool found = false;
      for (const auto& pt : six_set.points)
        if (std::abs(pt.loglik - verified[k]) < 1e-3) found = true;
      h.expect(found, "verified level " + std::to_string(verified[k]) + " not found");
      if (std::abs(verified[k] - printed[k]) > 1e-3) {
        h.notes.push_back("note: printed level " + std::to_string(printed[k]) +
                          " differs from its own table's value " +
                          std::to_string(verified[k]) + "; the verified value is used");
      }
    }
    h.expect(!six_set.points.empty() &&
                 std::abs(six_set.points.front().loglik - (-300.1555)) < 1e-3,
             "maximum is not -300.1555");
    h.finish(5, "6x6 exploration: every cataloged stationary level, MLE on top",
             elapsed(t0));
  }

  // ----------------------------------------------------------------- 6
  CriticalPointSet diag_set;
  {
    auto t0 = std::chrono::steady_clock::now();
    auto t = fixtures::diag1();
    diag_set = multistart_explore(t, ModelSpec{{4, 4}, 2}, 2000, 1728);
    std::vector<const CriticalPoint*> top;
    for (const auto& pt : diag_set.points)
      if (std::abs(pt.loglik - fixtures_ref::kDiag1LL) < 1e-3 &&
          (pt.classification == CriticalKind::interior_max ||
           pt.classification == CriticalKind::boundary))
        top.push_back(&pt);
    h.expect(top.size() == 6, "want 6 top maxima, got " + std::to_string(top.size()));
    for (const auto* pt : top)
      h.expect(joint_permutation_equivalent(counts_as_matrix(*pt, 4),
                                            fixtures_ref::diag1_mle(), 1e-3),
               "a top table is not an image of the 7/4-7/6-7/3 table");
    h.expect(std::abs(fixtures_ref::kDiag1LL - (-77.2927)) < 1e-3, "level drifted");
    h.expect(!diag_set.points.empty() &&
                 std::abs(diag_set.points.front().loglik - fixtures_ref::kDiag1LL) < 1e-3,
             "top of the search is not the reported level");
    h.finish(6, "diagonal-1 table: 6 equivalent maximizers at -77.2927", elapsed(t0));
  }

  // ----------------------------------------------------------------- 7
  CriticalPointSet sturm_set;
  {
    auto t0 = std::chrono::steady_clock::now();
    auto t = fixtures::sturmfels3();
    sturm_set = multistart_explore(t, ModelSpec{{3, 3}, 2}, 500, 314159);
    h.expect(!sturm_set.points.empty(), "no converged run");
    if (!sturm_set.points.empty()) {
      const Eigen::MatrixXd best = counts_as_matrix(sturm_set.points.front(), 3);
      h.expect(table_matches(best, fixtures_ref::sturmfels_mle(), 1e-3),
               "best fitted table mismatch");
    }

    // the same fitted table is reachable with a structurally zero coordinate
    ParamPoint theta0;
    theta0.lambda.resize(2);
    theta0.lambda << 0.45, 0.55;
    Eigen::MatrixXd m(3, 2);
    m << 0.70, 0.0, 0.16, 0.45, 0.14, 0.55;
    theta0.cond = {m, m};
    FitResult boundary_fit = em_fit(theta0, t, EMConfig{40000, 1e-12, 1e-12, 0});
    h.expect(boundary_fit.classification == CriticalKind::boundary,
             "terminal point not classified boundary");
    h.expect(boundary_fit.theta.cond[0](0, 1) == 0.0, "zero coordinate did not persist");
    h.expect(table_matches(
                 Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(
                     boundary_fit.fitted.p.data()) * 25.0,
                 fixtures_ref::sturmfels_mle(), 1e-3),
             "boundary run missed the fitted table");
    h.finish(7, "3x3 table: unique fitted table, boundary pre-image reachable",
             elapsed(t0));
  }

  // ----------------------------------------------------------------- 8
  {
    auto t0 = std::chrono::steady_clock::now();
    auto t = fixtures::influenza();
    const ModelSpec spec{{2, 2, 2, 2}, 2};
    CriticalPointSet set = multistart_explore(t, spec, 50, 2626);
    h.expect(!set.points.empty(), "no converged influenza run");
    if (!set.points.empty()) {
      const auto& best = set.points.front();
      for (int c = 0; c < 16; ++c)
        h.expect(std::abs(best.fitted_counts[c] - fixtures_ref::kInfluenzaFitted[c]) < 0.05,
                 "fitted cell " + std::to_string(c) + " off by more than 0.05");
      // em alone against the newton refinement, from the same start
      Rng rng(stream_seed(2626, 0));
      ParamPoint start = ParamPoint::random(spec, rng);
      FitResult em = em_fit(start, t, EMConfig{100000, 1e-13, 1e-13, 0});
      FitResult nr = newton_fit(em.theta, t);
      h.expect(std::abs(em.loglik - nr.loglik) < 1e-6, "em and newton disagree");
      h.expect(nr.converged, "newton did not converge");
    }
    h.finish(8, "influenza 2^4 fit: all 16 cells within 0.05, em = newton", elapsed(t0));
  }

  // ----------------------------------------------------------------- 9
  {
    auto t0 = std::chrono::steady_clock::now();
    for (int n : {4, 5, 6, 8, 10, 12}) {
      ConjectureReport rep = verify_conjecture(n, 4, 2, 2000, 5150 + n);
      h.expect(rep.verdict, "verdict false for n = " + std::to_string(n));
    }
    const double secs = elapsed(t0);
    h.expect(secs < 600.0, "conjecture sweep took too long");
    h.finish(9, "block-maximizer conjecture verified for n in {4,5,6,8,10,12}", secs);
  }

  // ----------------------------------------------------------------- 10
  {
    auto t0 = std::chrono::steady_clock::now();
    // (a) em monotonicity on 1000 random instances
    int instances = 0;
    bool monotone = true, simplex_ok = true;
    for (std::uint64_t seed = 0; instances < 1000; ++seed) {
      Rng rng(stream_seed(424243, seed));
      std::vector<int> dims;
      const int k = 1 + static_cast<int>(rng.raw() % 3);
      for (int l = 0; l < k; ++l) dims.push_back(2 + static_cast<int>(rng.raw() % 3));
      ModelSpec spec{dims, 1 + static_cast<int>(rng.raw() % 3)};
      std::vector<long long> counts(spec.cell_count());
      long long total = 0;
      for (auto& c : counts) {
        c = static_cast<long long>(rng.raw() % 21);
        total += c;
      }
      if (total == 0) counts[0] = 1;
      ContingencyTable t(spec.dims, counts);
      ParamPoint theta = ParamPoint::random(spec, rng);
      double ll = log_likelihood(theta, t);
      if (!std::isfinite(ll)) continue;
      for (int m = 0; m < 40; ++m) {
        theta = em_step(theta, t);
        const double next = log_likelihood(theta, t);
        if (!(next >= ll - 1e-12)) monotone = false;
        if (theta.simplex_defect() > 1e-12 || theta.min_coordinate() < 0.0)
          simplex_ok = false;
        ll = next;
      }
      ++instances;
    }
    h.expect(monotone, "em decreased the objective");
    h.expect(simplex_ok, "an iterate left the parameter space");

    // (b) analytic derivatives against central differences
    bool grads_ok = true, hessians_ok = true;
    Rng drng(606060);
    const std::vector<std::vector<int>> shapes = {{4, 4}, {2, 2, 2}, {3, 4}, {2, 3, 2}};
    for (int rep = 0; rep < 20; ++rep) {
      const auto& dims = shapes[rep % shapes.size()];
      ModelSpec spec{dims, 1 + static_cast<int>(drng.raw() % 3)};
      FreeChart chart(spec);
      std::vector<long long> counts(spec.cell_count());
      for (auto& c : counts) c = 1 + static_cast<long long>(drng.raw() % 12);
      ContingencyTable t(spec.dims, counts);
      ParamPoint theta = ParamPoint::random(spec, drng);
      auto mix = [](Eigen::VectorXd v) {
        const int n = static_cast<int>(v.size());
        return Eigen::VectorXd(0.7 * v + Eigen::VectorXd::Constant(n, 0.3 / n));
      };
      theta.lambda = mix(theta.lambda);
      for (auto& mcol : theta.cond)
        for (int hcol = 0; hcol < mcol.cols(); ++hcol) mcol.col(hcol) = mix(mcol.col(hcol));
      const Eigen::VectorXd x = chart.to_chart(theta);
      const Eigen::VectorXd g = score(chart, x, t);
      const Eigen::VectorXd g_fd = oracle::fd_gradient(
          [&](const Eigen::VectorXd& y) { return log_likelihood(chart.to_param(y), t); }, x,
          1e-5);
      if ((g - g_fd).norm() > 1e-5 * std::max(1.0, g.norm())) grads_ok = false;
      const Eigen::MatrixXd H = hessian(chart, x, t);
      const Eigen::MatrixXd H_fd = oracle::fd_jacobian(
          [&](const Eigen::VectorXd& y) { return Eigen::VectorXd(score(chart, y, t)); }, x,
          1e-5);
      if ((H - H_fd).norm() > 1e-5 * std::max(1.0, H.norm())) hessians_ok = false;
    }
    h.expect(grads_ok, "a gradient disagreed with central differences");
    h.expect(hessians_ok, "a hessian disagreed with differenced scores");

    // (c) minor residuals of all two-way two-class fitted tables seen so far
    double worst_minor = 0.0;
    for (const CriticalPointSet* set : {&swiss_set, &six_set, &diag_set, &sturm_set})
      for (const auto& pt : set->points)
        worst_minor = std::max(worst_minor, max_minor_residual(pt.fitted, 2));
    h.expect(worst_minor < 1e-10, "a fitted table has a live 3x3 minor");

    // (d) equal margins at the maxima of margin-equal data
    bool margins_ok = true;
    for (const CriticalPointSet* set : {&swiss_set, &six_set, &diag_set})
      for (const auto& pt : set->points) {
        if (pt.classification != CriticalKind::interior_max) continue;
        const int n = set == &six_set ? 6 : 4;
        Eigen::MatrixXd F = counts_as_matrix(pt, n);
        const Eigen::VectorXd rs = F.rowwise().sum(), cs = F.colwise().sum();
        if ((rs.array() - rs.mean()).abs().maxCoeff() > 1e-6 ||
            (cs.array() - cs.mean()).abs().maxCoeff() > 1e-6)
          margins_ok = false;
      }
    h.expect(margins_ok, "a maximum of symmetric data has unequal margins");

    // (e) newton ascent along the accepted steps
    {
      auto t = fixtures::influenza();
      Rng rng(55);
      std::vector<NewtonTraceRow> trace;
      newton_fit(ParamPoint::random(ModelSpec{{2, 2, 2, 2}, 2}, rng), t, {}, &trace);
      std::vector<double> lls;
      for (const auto& row : trace)
        if (row.step != 0.0) lls.push_back(row.loglik);
      bool ascent = lls.size() >= 2 && lls.back() > lls.front();
      for (std::size_t i = 1; i < lls.size(); ++i)
        if (lls[i] < lls[i - 1]) ascent = false;
      h.expect(ascent, "newton accepted a decreasing step");
    }
    h.finish(10, "property suites: monotone em, exact derivatives, minors, margins",
             elapsed(t0));
  }

  // ----------------------------------------------------------------- 11
  {
    auto t0 = std::chrono::steady_clock::now();
    for (const auto& row : fixtures_ref::kBicRows) {
      ModelSpec spec{std::vector<int>(16, 2), 0};
      spec.classes = (row.dim + 1) / 17;
      h.expect(spec.standard_dimension() == row.dim, "dimension mismatch");
      const double value = bic(row.loglik, spec, fixtures_ref::kBicSampleSize);
      h.expect(std::abs(value - row.bic) < 0.02,
               "bic off by " + std::to_string(value - row.bic));
    }
    h.finish(11, "BIC rows r in {2, 3, 20} from the stated likelihoods, N = 21574",
             elapsed(t0));
  }

  // ----------------------------------------------------------------- 12
  {
    auto t0 = std::chrono::steady_clock::now();
    auto t = fixtures::swiss();
    EFDecomposition dec = ef_decompose(fixtures_ref::swiss_saddle_counts() / 40.0);
    ClimbResult res = symmetrize_and_climb(t, dec, {{0, 2}, {1, 3}});
    h.expect(res.trace.size() <= 2, "more than two averaging steps");
    h.expect(std::abs(res.final_loglik - fixtures_ref::kSwissGlobalLL) < 1e-3,
             "did not reach the top level");
    double prev = fixtures_ref::kSwissSaddleLL;
    for (const auto& step : res.trace) {
      h.expect(step.ll_after >= prev - 1e-9, "climb trace decreased");
      prev = step.ll_after;
    }
    h.finish(12, "pair averaging climbs from the saddle to the top in two steps",
             elapsed(t0));
  }

  std::printf("%d of 12 criteria passed\n", 12 - h.failures);
  return h.failures == 0 ? 0 : 1;
}
