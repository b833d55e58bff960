#ifndef DSC_NORMAL_HPP
#define DSC_NORMAL_HPP

#include <cmath>
#include <limits>

namespace dsc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

/// Inverse standard normal CDF (Acklam's rational approximation with one
/// Halley refinement step; relative error well below 1e-13 on (0,1)).
double normal_quantile(double p);

/// Moments of a standard normal restricted to the cell (lo, hi].
/// mass = P(lo < Z <= hi), mean1 = E[Z; cell]; either bound may be infinite.
struct CellMoments {
    double mass;
    double mean1;
};

inline CellMoments cell_moments(double lo, double hi) {
    const double phi_lo = std::isinf(lo) ? 0.0 : normal_pdf(lo);
    const double phi_hi = std::isinf(hi) ? 0.0 : normal_pdf(hi);
    const double mass = normal_cdf(hi) - normal_cdf(lo);
    return {mass, phi_lo - phi_hi};
}

/// E[(Z - c)^2; lo < Z <= hi] for a standard normal Z.
inline double cell_second_moment_about(double lo, double hi, double c) {
    const double phi_lo = std::isinf(lo) ? 0.0 : normal_pdf(lo);
    const double phi_hi = std::isinf(hi) ? 0.0 : normal_pdf(hi);
    const double mass = normal_cdf(hi) - normal_cdf(lo);
    const double m1 = phi_lo - phi_hi;
    const double lo_phi = std::isinf(lo) ? 0.0 : lo * phi_lo;
    const double hi_phi = std::isinf(hi) ? 0.0 : hi * phi_hi;
    const double m2 = mass + lo_phi - hi_phi; // E[Z^2; cell]
    return m2 - 2.0 * c * m1 + c * c * mass;
}

} // namespace dsc

#endif
