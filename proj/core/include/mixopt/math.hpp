#pragma once

#include <cmath>

namespace mixopt {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

inline double norm_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrt2);
}

// log Phi(z), stable deep into the left tail where Phi underflows.
// For z < -6 uses the Mills-ratio asymptotic expansion
//   Phi(z) = phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...).
inline double log_norm_cdf(double z) {
    if (z > -6.0) {
        return std::log(norm_cdf(z));
    }
    const double z2 = z * z;
    double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - 0.5 * kLog2Pi - std::log(-z) + std::log(series);
}

// phi(z)/Phi(z), the inverse Mills ratio, stable for very negative z.
inline double norm_hazard(double z) {
    if (z > -6.0) {
        return norm_pdf(z) / norm_cdf(z);
    }
    return std::exp(-0.5 * z * z - 0.5 * kLog2Pi - log_norm_cdf(z));
}

}  // namespace mixopt
