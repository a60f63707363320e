#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <vector>

#include "latclass/derivatives.hpp"
#include "latclass/model.hpp"
#include "latclass/rng.hpp"

namespace latclass {

inline constexpr double kRankTol = 1e-9;  // relative singular-value cutoff

struct DimensionReport {
  ModelSpec spec;
  int standard = 0;
  int complete = 0;
  int expected = 0;
  int effective = 0;
  int deficiency = 0;  // expected - effective
  int samples_used = 0;
  double rank_tolerance = kRankTol;
  // Eq-(5)-style two-way deficiency, r(r-1); only set for 2-way models
  int determinantal_deficiency = 0;
  bool determinantal_valid = false;
};

inline int standard_dimension(const ModelSpec& spec) {
  spec.validate();
  return spec.standard_dimension();
}

inline int expected_dimension(const ModelSpec& spec) {
  spec.validate();
  return std::min(spec.complete_dimension(), spec.standard_dimension());
}

// Numerical rank of the accounting-map Jacobian, maximized over random
// strictly positive parameter points. Rank counts singular values above
// kRankTol times the largest one.
inline int effective_dimension(const ModelSpec& spec, int n_samples, std::uint64_t seed) {
  spec.validate();
  if (n_samples < 1) throw std::invalid_argument("need at least one sample");
  FreeChart chart(spec);
  int best = 0;
  for (int s = 0; s < n_samples; ++s) {
    Rng rng(stream_seed(seed, s));
    ParamPoint theta = ParamPoint::random(spec, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(model_jacobian(chart, chart.to_chart(theta)));
    const auto& sv = svd.singularValues();
    const double cutoff = kRankTol * sv[0];
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > cutoff) ++rank;
    best = std::max(best, rank);
  }
  return best;
}

// Two-way rank-r deficiency r(r-1), valid whenever the determinantal variety
// dimension r(d1+d2) - r^2 - 1 sits at or below both the complete and the
// standard dimension. Vacuous rank constraints (r >= min(d1, d2)) yield 0
// with the valid flag cleared.
inline int two_way_deficiency(int d1, int d2, int r, bool* valid = nullptr) {
  if (d1 < 2 || d2 < 2 || r < 1) throw std::invalid_argument("bad two-way model");
  if (r >= std::min(d1, d2)) {
    if (valid) *valid = false;
    return 0;
  }
  if (valid) *valid = true;
  const long long det_dim = static_cast<long long>(r) * (d1 + d2) - static_cast<long long>(r) * r - 1;
  const long long standard = static_cast<long long>(r) * (d1 - 1 + d2 - 1) + r - 1;
  const long long complete = static_cast<long long>(d1) * d2 - 1;
  if (det_dim <= std::min(standard, complete)) return r * (r - 1);
  return 0;
}

inline DimensionReport dimension_report(const ModelSpec& spec, int n_samples,
                                        std::uint64_t seed) {
  DimensionReport rep;
  rep.spec = spec;
  rep.standard = standard_dimension(spec);
  rep.complete = spec.complete_dimension();
  rep.expected = expected_dimension(spec);
  rep.effective = effective_dimension(spec, n_samples, seed);
  rep.deficiency = rep.expected - rep.effective;
  rep.samples_used = n_samples;
  rep.rank_tolerance = kRankTol;
  if (spec.order() == 2) {
    bool valid = false;
    rep.determinantal_deficiency = two_way_deficiency(spec.dims[0], spec.dims[1],
                                                      spec.classes, &valid);
    rep.determinantal_valid = valid;
  }
  return rep;
}

// The 21 benchmark models of the dimension survey, in presentation order.
inline std::vector<ModelSpec> dimension_survey_models() {
  return {
      {{2, 2}, 2},          {{3, 3}, 2},          {{4, 5}, 3},
      {{2, 2, 2}, 2},       {{2, 2, 2}, 3},       {{2, 2, 2}, 4},
      {{3, 3, 3}, 2},       {{3, 3, 3}, 3},       {{3, 3, 3}, 4},
      {{3, 3, 3}, 5},       {{3, 3, 3}, 6},       {{5, 2, 2}, 3},
      {{4, 2, 2}, 3},       {{3, 3, 2}, 5},       {{6, 3, 2}, 5},
      {{10, 3, 2}, 5},      {{2, 2, 2, 2}, 2},    {{2, 2, 2, 2}, 3},
      {{2, 2, 2, 2}, 4},    {{2, 2, 2, 2}, 5},    {{2, 2, 2, 2}, 6},
  };
}

}  // namespace latclass
