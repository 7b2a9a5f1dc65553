#include "nmrtv/tv.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nmrtv/errors.hpp"
#include "nmrtv/metrics.hpp"
#include "nmrtv/parallel.hpp"

namespace nmrtv {

TauGrid::TauGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw InvalidArgument("tau grid is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0)
      throw InvalidArgument("tau grid values must be finite and nonnegative");
    if (i > 0 && !(values_[i] > values_[i - 1]))
      throw InvalidArgument("tau grid must be strictly increasing");
  }
}

TauGrid TauGrid::logarithmic(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw InvalidArgument("bad logarithmic grid bounds");
  std::vector<double> values(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) values[i] = lo * std::exp(step * static_cast<double>(i));
  values.back() = hi;
  return TauGrid(std::move(values));
}

double tv_value(std::span<const double> x) {
  if (x.size() < 2) throw InvalidArgument("tv_value: need at least two samples");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) sum += std::abs(x[i + 1] - x[i]);
  return sum;
}

std::vector<double> tv_prox(std::span<const double> y, TvConfig cfg) {
  const std::size_t n = y.size();
  if (n < 2) throw InvalidArgument("tv_prox: need at least two samples");
  if (!std::isfinite(cfg.tau) || cfg.tau < 0.0) throw InvalidArgument("tv_prox: tau must be finite and >= 0");
  for (double v : y)
    if (!std::isfinite(v)) throw InvalidArgument("tv_prox: non-finite input");

  std::vector<double> theta(y.begin(), y.end());
  if (cfg.tau == 0.0) return theta;
  const double lambda = cfg.tau;

  // The derivative of the forward message is piecewise linear in the value
  // of the current sample. It is stored as a sorted list of knots in
  // [left, right] of a 2n buffer; slope[k] * t + offset[k] is the change in
  // the derivative when crossing knot k. The outermost pieces are tracked
  // separately (first_*, last_*).
  std::vector<double> knot(2 * n), slope(2 * n), offset(2 * n);
  std::vector<double> lower(n - 1), upper(n - 1);

  lower[0] = y[0] - lambda;
  upper[0] = y[0] + lambda;
  std::size_t left = n - 1;
  std::size_t right = n;
  knot[left] = lower[0];
  knot[right] = upper[0];
  slope[left] = 1.0;
  offset[left] = -y[0] + lambda;
  slope[right] = -1.0;
  offset[right] = y[0] + lambda;
  double first_slope = 1.0;
  double first_offset = -y[1] - lambda;
  double last_slope = -1.0;
  double last_offset = y[1] - lambda;

  for (std::size_t k = 1; k + 1 < n; ++k) {
    // Walk up from the left until the derivative exceeds -lambda.
    double lo_slope = first_slope;
    double lo_offset = first_offset;
    std::size_t lo = left;
    for (; lo <= right; ++lo) {
      if (lo_slope * knot[lo] + lo_offset > -lambda) break;
      lo_slope += slope[lo];
      lo_offset += offset[lo];
    }
    // Walk down from the right until the derivative drops below lambda.
    double hi_slope = last_slope;
    double hi_offset = last_offset;
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(right);
    for (; hi >= static_cast<std::ptrdiff_t>(lo); --hi) {
      if (-hi_slope * knot[static_cast<std::size_t>(hi)] - hi_offset < lambda) break;
      hi_slope += slope[static_cast<std::size_t>(hi)];
      hi_offset += offset[static_cast<std::size_t>(hi)];
    }

    lower[k] = (-lambda - lo_offset) / lo_slope;
    left = lo - 1;
    knot[left] = lower[k];
    upper[k] = (lambda + hi_offset) / (-hi_slope);
    right = static_cast<std::size_t>(hi + 1);
    knot[right] = upper[k];

    slope[left] = lo_slope;
    offset[left] = lo_offset + lambda;
    slope[right] = hi_slope;
    offset[right] = hi_offset + lambda;
    first_slope = 1.0;
    first_offset = -y[k + 1] - lambda;
    last_slope = -1.0;
    last_offset = y[k + 1] - lambda;
  }

  // Last sample: zero of the final derivative.
  double lo_slope = first_slope;
  double lo_offset = first_offset;
  for (std::size_t lo = left; lo <= right; ++lo) {
    if (lo_slope * knot[lo] + lo_offset > 0.0) break;
    lo_slope += slope[lo];
    lo_offset += offset[lo];
  }
  theta[n - 1] = -lo_offset / lo_slope;

  // Backtrack: each earlier sample is the next one clamped to its window.
  for (std::size_t k = n - 1; k-- > 0;) {
    const double next = theta[k + 1];
    theta[k] = next > upper[k] ? upper[k] : (next < lower[k] ? lower[k] : next);
  }
  return theta;
}

Spectrum tv_prox(const Spectrum& y, TvConfig cfg) { return Spectrum{tv_prox(std::span<const double>(y.values), cfg)}; }

namespace {

// Index of the maximum score; strict comparison keeps the earliest (smallest
// tau) on ties.
std::size_t argmax_first(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

}  // namespace

TauChoice tune_tau_oracle(const Spectrum& y, const Spectrum& x_clean, const TauGrid& grid,
                          std::size_t threads) {
  if (y.size() != x_clean.size()) throw InvalidArgument("tune_tau_oracle: length mismatch");
  const auto& taus = grid.values();
  std::vector<double> scores(taus.size());
  parallel_for(taus.size(), threads, [&](std::size_t i) {
    const auto denoised = tv_prox(std::span<const double>(y.values), TvConfig{taus[i]});
    scores[i] = snr_db(x_clean.values, denoised);
  });
  const std::size_t best = argmax_first(scores);
  TauChoice choice;
  choice.tau = taus[best];
  choice.snr_db = scores[best];
  choice.denoised = tv_prox(y, TvConfig{choice.tau});
  return choice;
}

double tune_tau_validation(std::span<const SpectrumPair> pairs, const TauGrid& grid, std::size_t threads) {
  if (pairs.empty()) throw InvalidArgument("tune_tau_validation: no validation pairs");
  for (const auto& p : pairs)
    if (p.noisy.size() != p.clean.size()) throw InvalidArgument("tune_tau_validation: length mismatch");
  const auto& taus = grid.values();
  std::vector<double> scores(taus.size());
  parallel_for(taus.size(), threads, [&](std::size_t i) {
    double sum = 0.0;
    for (const auto& p : pairs) {
      const auto denoised = tv_prox(std::span<const double>(p.noisy.values), TvConfig{taus[i]});
      sum += snr_db(p.clean.values, denoised);
    }
    scores[i] = sum / static_cast<double>(pairs.size());
  });
  return taus[argmax_first(scores)];
}

}  // namespace nmrtv
