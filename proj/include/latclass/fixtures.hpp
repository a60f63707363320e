#pragma once

#include <vector>

#include "latclass/table.hpp"

namespace latclass::fixtures {

// 4x4 symmetric table: 4 on the diagonal, 2 off (N = 40)
inline ContingencyTable swiss() {
  std::vector<long long> c(16, 2);
  for (int i = 0; i < 4; ++i) c[i * 4 + i] = 4;
  return ContingencyTable({4, 4}, std::move(c));
}

// 6x6 variant of the same pattern (N = 84)
inline ContingencyTable swiss6() {
  std::vector<long long> c(36, 2);
  for (int i = 0; i < 6; ++i) c[i * 6 + i] = 4;
  return ContingencyTable({6, 6}, std::move(c));
}

// 4x4 with 1 on the diagonal, 2 off (N = 28)
inline ContingencyTable diag1() {
  std::vector<long long> c(16, 2);
  for (int i = 0; i < 4; ++i) c[i * 4 + i] = 1;
  return ContingencyTable({4, 4}, std::move(c));
}

// 3x3 table (5 1 1; 1 6 2; 1 2 6), N = 25
inline ContingencyTable sturmfels3() {
  return ContingencyTable({3, 3}, {5, 1, 1, 1, 6, 2, 1, 2, 6});
}

// influenza infection profiles for four outbreaks, 2^4 cells, N = 263;
// cells in binary order 0000, 0001, ..., 1111
inline ContingencyTable influenza() {
  return ContingencyTable({2, 2, 2, 2},
                          {140, 31, 16, 3, 17, 2, 5, 1, 20, 2, 9, 0, 12, 1, 4, 0});
}

}  // namespace latclass::fixtures
