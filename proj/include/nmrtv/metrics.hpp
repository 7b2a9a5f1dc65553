#pragma once

#include <span>

namespace nmrtv {

/// Value written to CSV/JSON in place of +inf (perfect reconstruction).
inline constexpr double kSnrCapDb = 300.0;

/// 20*log10(|reference| / |estimate - reference|). Returns +inf when the
/// estimate is exact; throws InvalidArgument for a zero reference or a
/// length mismatch.
double snr_db(std::span<const double> reference, std::span<const double> estimate);

/// sqrt(mean((estimate - reference)^2)).
double rmse(std::span<const double> reference, std::span<const double> estimate);

/// Clamps +inf to kSnrCapDb for serialization.
double capped_snr(double snr);

}  // namespace nmrtv
