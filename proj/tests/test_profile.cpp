#include <catch_amalgamated.hpp>

#include <cmath>

#include "latclass/fixtures.hpp"
#include "latclass/geometry.hpp"
#include "test_fixtures.hpp"

using namespace latclass;
using Catch::Approx;

namespace {

int count_near(const std::vector<ProfilePeak>& peaks, double level, double tol) {
  int k = 0;
  for (const auto& p : peaks)
    if (std::abs(p.value - level) < tol) ++k;
  return k;
}

}  // namespace

TEST_CASE("synthetic grids: peaks, plateaus, prominence") {
  std::vector<double> nodes(7);
  for (int i = 0; i < 7; ++i) nodes[i] = i;

  // one clean bump
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(7, 7);
  v(3, 3) = 1.0;
  auto peaks = detect_peaks(nodes, v);
  REQUIRE(peaks.size() == 1);
  REQUIRE(peaks[0].i == 3);

  // a two-node plateau merges into one peak
  v(3, 4) = 1.0;
  peaks = detect_peaks(nodes, v, 1.5e-3, 1e-9);
  REQUIRE(peaks.size() == 1);

  // two bumps separated by a deep trench
  v.setZero();
  v(1, 1) = 1.0;
  v(5, 5) = 0.8;
  peaks = detect_peaks(nodes, v);
  REQUIRE(peaks.size() == 2);

  // a shallow oblique ridge: crest nodes are never 8-adjacent, so the
  // staircase aliases into low-prominence false summits next to the real one
  v.setZero();
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      v(i, j) = -1e-3 * std::abs(i - 2.0 * j + 4.0) - 5e-4 * std::abs(j - 3.0);
  v(2, 3) += 1.0;  // the genuine summit on the crest
  REQUIRE(detect_peaks(nodes, v, 0.0).size() > 1);   // raw rule sees the alias
  peaks = detect_peaks(nodes, v);
  REQUIRE(peaks.size() == 1);
  REQUIRE(peaks[0].i == 2);
  REQUIRE(peaks[0].j == 3);

  // boundary nodes never count as peaks
  v.setZero();
  v(0, 3) = 2.0;
  REQUIRE(detect_peaks(nodes, v).empty());

  // missing-neighbor (infeasible) nodes disqualify their neighborhood
  v.setZero();
  v(3, 3) = 2.0;
  v(3, 4) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE(detect_peaks(nodes, v).empty());
}

TEST_CASE("the pinned profile grid shows exactly seven peaks") {
  auto t = fixtures::swiss();
  ProfileGridConfig cfg;
  cfg.seed = 13;
  ProfileGrid grid = profile_loglik_grid(t, ModelSpec{{4, 4}, 2}, cfg);

  REQUIRE(grid.peaks.size() == 7);
  REQUIRE(count_near(grid.peaks, fixtures_ref::kSwissGlobalLL, 1e-3) == 3);
  REQUIRE(count_near(grid.peaks, fixtures_ref::kSwissLocalLL, 1e-3) == 4);

  // peak positions: the three top-family pins and the four three-equal pins
  auto has_peak_at = [&](double a, double b) {
    for (const auto& p : grid.peaks)
      if (std::abs(p.c1 - a) < 1e-9 && std::abs(p.c2 - b) < 1e-9) return true;
    return false;
  };
  REQUIRE(has_peak_at(0.3, 0.3));
  REQUIRE(has_peak_at(0.2, 0.3));
  REQUIRE(has_peak_at(0.3, 0.2));
  REQUIRE(has_peak_at(0.2, 0.2));
  REQUIRE(has_peak_at(0.2, 0.4));
  REQUIRE(has_peak_at(0.4, 0.2));
  REQUIRE(has_peak_at(24.0 / 90, 24.0 / 90));
}

TEST_CASE("scaling the table keeps the peak layout and widens the gap") {
  auto base = fixtures::swiss();
  std::vector<long long> big(base.counts());
  for (auto& c : big) c *= 10000;
  ContingencyTable scaled({4, 4}, big);

  ProfileGridConfig cfg;
  cfg.seed = 13;
  ProfileGrid g1 = profile_loglik_grid(base, ModelSpec{{4, 4}, 2}, cfg);
  ProfileGrid g2 = profile_loglik_grid(scaled, ModelSpec{{4, 4}, 2}, cfg);
  REQUIRE(g2.peaks.size() == 7);

  // same locations within one grid cell
  const double h = (cfg.hi - cfg.lo) / (cfg.resolution - 1);
  for (const auto& p : g2.peaks) {
    bool matched = false;
    for (const auto& q : g1.peaks)
      if (std::abs(p.c1 - q.c1) <= h + 1e-12 && std::abs(p.c2 - q.c2) <= h + 1e-12)
        matched = true;
    REQUIRE(matched);
  }

  auto gap = [](const ProfileGrid& g) {
    double best = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    for (const auto& p : g.peaks) best = std::max(best, p.value);
    for (const auto& p : g.peaks)
      if (p.value < best - 1e-9) second = std::max(second, p.value);
    return best - second;
  };
  REQUIRE(gap(g2) > 100.0 * gap(g1));
}

TEST_CASE("the profile stays below the unconstrained maximum") {
  auto t = fixtures::swiss();
  ProfileGridConfig cfg;
  cfg.resolution = 6;
  cfg.lo = 0.15;
  cfg.hi = 0.45;
  cfg.starts = 5;
  ProfileGrid grid = profile_loglik_grid(t, ModelSpec{{4, 4}, 2}, cfg);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (std::isfinite(grid.value(i, j)))
        REQUIRE(grid.value(i, j) <= fixtures_ref::kSwissGlobalLL + 1e-9);
}
