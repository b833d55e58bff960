#include "dsc/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "dsc/errors.hpp"
#include "dsc/normal.hpp"

namespace dsc {

namespace {

// Centroid of the standard-normal cell (lo, hi]; falls back to the cell
// midpoint if the mass underflows (cannot happen for the level counts in use).
double cell_centroid(double lo, double hi) {
    const CellMoments m = cell_moments(lo, hi);
    if (m.mass <= 0.0)
        return 0.5 * (lo + hi);
    return m.mean1 / m.mass;
}

} // namespace

ScalarQuantizer ScalarQuantizer::design_lloyd_max(double mean, double variance, int levels,
                                                  std::vector<double>* sweep_mse) {
    if (levels < 1)
        throw NumericalError("design_lloyd_max: need at least one level");
    if (!(variance > 0.0))
        throw NumericalError("design_lloyd_max: variance must be positive");

    const double sigma = std::sqrt(variance);
    const auto n = static_cast<std::size_t>(levels);

    // Work in standard-normal coordinates; scale back at the end.
    std::vector<double> lv(n);
    for (std::size_t i = 0; i < n; ++i)
        lv[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(levels));

    std::vector<double> bd(n + 1);
    bd.front() = -kInf;
    bd.back() = kInf;

    if (levels == 1) {
        lv[0] = 0.0;
    } else {
        const int max_sweeps = 10000;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            for (std::size_t i = 1; i < n; ++i)
                bd[i] = 0.5 * (lv[i - 1] + lv[i]);
            double movement = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double next = cell_centroid(bd[i], bd[i + 1]);
                movement = std::max(movement, std::abs(next - lv[i]));
                lv[i] = next;
            }
            if (sweep_mse) {
                double mse = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    mse += cell_second_moment_about(bd[i], bd[i + 1], lv[i]);
                sweep_mse->push_back(mse * variance);
            }
            if (movement < 1e-9)
                break;
        }
        for (std::size_t i = 1; i < n; ++i)
            bd[i] = 0.5 * (lv[i - 1] + lv[i]);
    }

    ScalarQuantizer q;
    q.mean_ = mean;
    q.variance_ = variance;
    q.levels_.resize(n);
    q.boundaries_.resize(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        q.levels_[i] = mean + sigma * lv[i];
    q.boundaries_.front() = -kInf;
    q.boundaries_.back() = kInf;
    for (std::size_t i = 1; i < n; ++i)
        q.boundaries_[i] = mean + sigma * bd[i];
    return q;
}

ScalarQuantizer ScalarQuantizer::from_parts(double mean, double variance,
                                            std::vector<double> levels,
                                            std::vector<double> interior_boundaries) {
    if (levels.empty())
        throw ValidationError("quantizer: no reconstruction levels");
    if (interior_boundaries.size() + 1 != levels.size())
        throw ValidationError("quantizer: boundary/level count mismatch");
    if (!std::is_sorted(levels.begin(), levels.end()) ||
        std::adjacent_find(levels.begin(), levels.end()) != levels.end())
        throw ValidationError("quantizer: levels not strictly increasing");
    if (!std::is_sorted(interior_boundaries.begin(), interior_boundaries.end()))
        throw ValidationError("quantizer: boundaries not increasing");

    ScalarQuantizer q;
    q.mean_ = mean;
    q.variance_ = variance;
    q.levels_ = std::move(levels);
    q.boundaries_.reserve(q.levels_.size() + 1);
    q.boundaries_.push_back(-kInf);
    q.boundaries_.insert(q.boundaries_.end(), interior_boundaries.begin(),
                         interior_boundaries.end());
    q.boundaries_.push_back(kInf);
    for (std::size_t i = 0; i < q.levels_.size(); ++i) {
        if (!(q.boundaries_[i] < q.levels_[i] && q.levels_[i] <= q.boundaries_[i + 1]))
            throw ValidationError("quantizer: level outside its cell");
    }
    return q;
}

std::vector<double> ScalarQuantizer::interior_boundaries() const {
    return {boundaries_.begin() + 1, boundaries_.end() - 1};
}

int ScalarQuantizer::quantize(double u) const {
    if (std::isnan(u))
        throw NumericalError("quantize: NaN input");
    // First boundary >= u is the right edge of the target cell.
    const auto it = std::lower_bound(boundaries_.begin() + 1, boundaries_.end() - 1, u);
    return static_cast<int>(it - boundaries_.begin()) - 1;
}

double ScalarQuantizer::mse() const {
    const double sigma = std::sqrt(variance_);
    double total = 0.0;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        const double lo = (boundaries_[i] - mean_) / sigma;
        const double hi = (boundaries_[i + 1] - mean_) / sigma;
        const double c = (levels_[i] - mean_) / sigma;
        total += cell_second_moment_about(lo, hi, c);
    }
    return total * variance_;
}

} // namespace dsc
