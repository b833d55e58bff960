#ifndef DSC_QUANTIZER_HPP
#define DSC_QUANTIZER_HPP

#include <vector>

namespace dsc {

/// MSE-optimal (Lloyd-Max) scalar quantizer for a Gaussian marginal.
///
/// Boundaries b(0..L) with b(0) = -inf, b(L) = +inf partition the real line
/// into half-open cells; input u lands in cell i iff b(i) < u <= b(i+1).
/// Reconstruction levels are the cell centroids E{U | cell}.
class ScalarQuantizer {
public:
    /// Runs the Lloyd iteration (alternating centroid and midpoint updates,
    /// closed-form truncated-normal moments) from a quantile initialization
    /// until the max level movement drops below 1e-9 or 1e4 sweeps.
    /// `sweep_mse`, when given, records the design MSE after each sweep.
    static ScalarQuantizer design_lloyd_max(double mean, double variance, int levels,
                                            std::vector<double>* sweep_mse = nullptr);

    /// Reconstructs a quantizer from stored state (used by artifact load);
    /// boundaries are the L-1 interior decision levels.
    static ScalarQuantizer from_parts(double mean, double variance,
                                      std::vector<double> levels,
                                      std::vector<double> interior_boundaries);

    int size() const { return static_cast<int>(levels_.size()); }
    double level(int i) const { return levels_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& levels() const { return levels_; }

    /// Full boundary vector of size L+1 including the infinite endpoints.
    const std::vector<double>& boundaries() const { return boundaries_; }
    std::vector<double> interior_boundaries() const;

    double mean() const { return mean_; }
    double variance() const { return variance_; }

    /// Index i with b(i) < u <= b(i+1) (binary search). NaN is rejected.
    int quantize(double u) const;

    /// E{(U - Utilde)^2} by closed-form per-cell Gaussian moments.
    double mse() const;

private:
    ScalarQuantizer() = default;

    std::vector<double> levels_;
    std::vector<double> boundaries_;
    double mean_ = 0.0;
    double variance_ = 1.0;
};

} // namespace dsc

#endif
