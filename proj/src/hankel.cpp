#include "nmrtv/hankel.hpp"

#include <algorithm>

#include "nmrtv/errors.hpp"

namespace nmrtv {

std::size_t default_window(std::size_t n) { return n / 2 + 1; }

ComplexMatrix build_hankel(const Fid& fid, std::size_t window) {
  const std::size_t n = fid.size();
  if (window < 2 || window + 1 > n) throw InvalidArgument("build_hankel: window must satisfy 2 <= L <= n-1");
  const auto rows = static_cast<Eigen::Index>(window);
  const auto cols = static_cast<Eigen::Index>(n - window + 1);
  ComplexMatrix h(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) h(i, j) = fid.samples[static_cast<std::size_t>(i + j)];
  return h;
}

Fid hankel_to_fid(const ComplexMatrix& h) {
  if (h.rows() < 1 || h.cols() < 1) throw InvalidArgument("hankel_to_fid: empty matrix");
  const auto length = static_cast<std::size_t>(h.rows() + h.cols() - 1);
  Fid fid;
  fid.samples.assign(length, Complex{});
  std::vector<double> counts(length, 0.0);
  // Running mean, so an anti-diagonal of identical entries reproduces the
  // entry bit for bit.
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      const auto t = static_cast<std::size_t>(i + j);
      counts[t] += 1.0;
      fid.samples[t] += (h(i, j) - fid.samples[t]) / counts[t];
    }
  }
  return fid;
}

ComplexMatrix truncate_rank(const ComplexMatrix& h, int rank) {
  const auto min_dim = std::min(h.rows(), h.cols());
  if (rank < 1 || rank > min_dim) throw InvalidArgument("truncate_rank: rank must be in [1, min(L, M)]");
  if (rank == min_dim) return h;
  Eigen::BDCSVD<ComplexMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto r = static_cast<Eigen::Index>(rank);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).adjoint();
}

int estimate_rank(const Fid& fid, std::size_t window, double gap) {
  if (window == 0) window = default_window(fid.size());
  const auto h = build_hankel(fid, window);
  Eigen::BDCSVD<ComplexMatrix> svd(h);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0)) return 1;
  int count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > gap * s(0)) ++count;
  return std::max(count, 1);
}

Fid cadzow_denoise(const Fid& fid, const HankelConfig& cfg) {
  const std::size_t window = cfg.window == 0 ? default_window(fid.size()) : cfg.window;
  if (cfg.iterations < 1) throw InvalidArgument("cadzow_denoise: iterations must be >= 1");
  if (window < 2 || window + 1 > fid.size()) throw InvalidArgument("cadzow_denoise: window out of range");
  const auto min_dim = static_cast<int>(std::min(window, fid.size() - window + 1));
  if (cfg.rank < 1 || cfg.rank > min_dim)
    throw InvalidArgument("cadzow_denoise: rank exceeds the Hankel matrix dimension");

  Fid current = fid;
  for (int it = 0; it < cfg.iterations; ++it)
    current = hankel_to_fid(truncate_rank(build_hankel(current, window), cfg.rank));
  return current;
}

}  // namespace nmrtv
