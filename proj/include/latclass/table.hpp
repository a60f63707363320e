#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace latclass {

// Parse failures carry a kind so callers can tell a syntax error from a
// semantic one (negative cell, shape mismatch, degenerate axis).
class parse_error : public std::runtime_error {
 public:
  enum class kind { malformed, negative_count, shape_mismatch, degenerate_axis };

  parse_error(kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
  kind what_kind() const noexcept { return kind_; }

 private:
  kind kind_;
};

// Dense k-way table of nonnegative integer counts, cells in row-major
// (lexicographic multi-index) order. Immutable after construction.
class ContingencyTable {
 public:
  ContingencyTable(std::vector<int> dims, std::vector<long long> counts)
      : dims_(std::move(dims)), counts_(std::move(counts)) {
    if (dims_.empty())
      throw parse_error(parse_error::kind::shape_mismatch, "table needs at least one axis");
    long long cells = 1;
    for (int d : dims_) {
      if (d < 2)
        throw parse_error(parse_error::kind::degenerate_axis,
                          "axis with fewer than 2 categories");
      cells *= d;
    }
    if (cells != static_cast<long long>(counts_.size()))
      throw parse_error(parse_error::kind::shape_mismatch,
                        "dims imply " + std::to_string(cells) + " cells, got " +
                            std::to_string(counts_.size()));
    total_ = 0;
    for (long long c : counts_) {
      if (c < 0)
        throw parse_error(parse_error::kind::negative_count, "negative cell count");
      total_ += c;
    }
    if (total_ <= 0)
      throw parse_error(parse_error::kind::shape_mismatch, "table total must be positive");
  }

  const std::vector<int>& dims() const { return dims_; }
  const std::vector<long long>& counts() const { return counts_; }
  long long total() const { return total_; }
  int order() const { return static_cast<int>(dims_.size()); }
  std::size_t cell_count() const { return counts_.size(); }

  long long at(const std::vector<int>& idx) const { return counts_[flat_index(idx)]; }

  std::size_t flat_index(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (std::size_t l = 0; l < dims_.size(); ++l) f = f * dims_[l] + idx[l];
    return f;
  }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> idx(dims_.size());
    for (std::size_t l = dims_.size(); l-- > 0;) {
      idx[l] = static_cast<int>(flat % dims_[l]);
      flat /= dims_[l];
    }
    return idx;
  }

  bool is_square_two_way() const {
    return dims_.size() == 2 && dims_[0] == dims_[1];
  }

 private:
  std::vector<int> dims_;
  std::vector<long long> counts_;
  long long total_ = 0;
};

// Permutation of the categories of one axis (a bijection on [d_axis]).
struct AxisPermutation {
  int axis = 0;
  std::vector<int> perm;  // perm[i] = image of category i

  bool valid_for(int d) const {
    if (static_cast<int>(perm.size()) != d) return false;
    std::vector<char> seen(d, 0);
    for (int v : perm) {
      if (v < 0 || v >= d || seen[v]) return false;
      seen[v] = 1;
    }
    return true;
  }
};

inline ContingencyTable apply_axis_permutation(const ContingencyTable& t,
                                               const AxisPermutation& ap) {
  const auto& dims = t.dims();
  if (ap.axis < 0 || ap.axis >= t.order())
    throw std::out_of_range("axis out of range");
  if (!ap.valid_for(dims[ap.axis]))
    throw std::invalid_argument("not a permutation of the axis categories");
  std::vector<long long> out(t.cell_count());
  for (std::size_t f = 0; f < t.cell_count(); ++f) {
    auto idx = t.multi_index(f);
    idx[ap.axis] = ap.perm[idx[ap.axis]];
    out[f] = t.counts()[t.flat_index(idx)];
  }
  return ContingencyTable(dims, std::move(out));
}

// Simultaneous row/column permutation of a square 2-way table:
// result(i,j) = t(sigma(i), sigma(j)).
inline ContingencyTable apply_joint_permutation(const ContingencyTable& t,
                                                const std::vector<int>& sigma) {
  if (!t.is_square_two_way())
    throw std::invalid_argument("joint permutation requires a square 2-way table");
  const int n = t.dims()[0];
  AxisPermutation ap{0, sigma};
  if (!ap.valid_for(n)) throw std::invalid_argument("not a permutation of [n]");
  std::vector<long long> out(t.cell_count());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[i * n + j] = t.counts()[sigma[i] * n + sigma[j]];
  return ContingencyTable(t.dims(), std::move(out));
}

// True iff simultaneously swapping rows i,j and columns i,j leaves t unchanged.
inline bool is_exchange_symmetric(const ContingencyTable& t, int i, int j) {
  if (!t.is_square_two_way())
    throw std::invalid_argument("exchange symmetry requires a square 2-way table");
  const int n = t.dims()[0];
  if (i < 0 || i >= n || j < 0 || j >= n) throw std::out_of_range("index out of range");
  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  std::swap(sigma[i], sigma[j]);
  auto permuted = apply_joint_permutation(t, sigma);
  return permuted.counts() == t.counts();
}

}  // namespace latclass
