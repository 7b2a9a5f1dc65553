#pragma once

// Hankel embedding of FIDs and Cadzow low-rank enhancement.

#include <cstddef>

#include <Eigen/Dense>

#include "nmrtv/signal.hpp"

namespace nmrtv {

using ComplexMatrix = Eigen::MatrixXcd;

struct HankelConfig {
  int rank = 1;
  int iterations = 10;
  /// Row count L of the Hankel matrix; 0 selects floor(n/2) + 1.
  std::size_t window = 0;
};

std::size_t default_window(std::size_t n);

/// H[i][j] = fid[i + j], shape L x (n - L + 1). Requires 2 <= L <= n - 1.
ComplexMatrix build_hankel(const Fid& fid, std::size_t window);

/// Averages each anti-diagonal: fid[t] = mean of H[i][j] with i + j = t.
Fid hankel_to_fid(const ComplexMatrix& h);

/// Best rank-r Frobenius approximation by truncated SVD.
ComplexMatrix truncate_rank(const ComplexMatrix& h, int rank);

/// Number of Hankel singular values above gap * sigma_1.
int estimate_rank(const Fid& fid, std::size_t window = 0, double gap = 0.05);

/// `iterations` rounds of embed -> rank-r truncation -> anti-diagonal averaging.
Fid cadzow_denoise(const Fid& fid, const HankelConfig& cfg);

}  // namespace nmrtv
