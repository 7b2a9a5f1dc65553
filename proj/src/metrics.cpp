#include "nmrtv/metrics.hpp"

#include <cmath>
#include <limits>

#include "nmrtv/errors.hpp"

namespace nmrtv {

double snr_db(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) throw InvalidArgument("snr_db: length mismatch");
  double signal = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    signal += reference[i] * reference[i];
    const double d = estimate[i] - reference[i];
    error += d * d;
  }
  if (!(signal > 0.0)) throw InvalidArgument("snr_db: zero reference");
  if (error == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / error);
}

double rmse(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) throw InvalidArgument("rmse: length mismatch");
  if (reference.empty()) throw InvalidArgument("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = estimate[i] - reference[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(reference.size()));
}

double capped_snr(double snr) { return snr > kSnrCapDb ? kSnrCapDb : snr; }

}  // namespace nmrtv
