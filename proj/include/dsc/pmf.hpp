#ifndef DSC_PMF_HPP
#define DSC_PMF_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "dsc/gauss_model.hpp"
#include "dsc/quantizer.hpp"
#include "dsc/tensor.hpp"

namespace dsc {

/// Discrete joint PMF over a tuple of quantizer indices. Entries are
/// strictly positive (additive smoothing) and sum to one.
class JointPmf {
public:
    explicit JointPmf(IndexTensor tensor);

    const IndexTensor& tensor() const { return tensor_; }
    const std::vector<int>& scope() const { return tensor_.scope; }
    const std::vector<int>& shape() const { return tensor_.shape; }
    const std::vector<double>& table() const { return tensor_.values; }

    double at(std::span<const int> multi) const {
        return tensor_.values[tensor_.flat_index(multi)];
    }

    /// Sums out the axes not in `subset`; an empty subset gives the scalar 1.
    JointPmf marginalize(std::span<const int> subset) const;

private:
    IndexTensor tensor_;
};

/// Default cap on dense PMF storage (cells); guards runaway scopes.
inline constexpr std::size_t kDefaultPmfCellCap = 10'000'000;

/// Monte Carlo estimate of p(i_scope): draws `n_samples` correlated source
/// vectors over `scope`, quantizes each coordinate with its source's
/// quantizer, counts tuples, then applies additive smoothing of
/// 1/(n_samples * cells) per cell and renormalizes.
///
/// Samples are drawn in fixed-size batches with per-batch streams derived
/// from `seed`, so the counts are identical for any `threads` value.
JointPmf estimate_joint_pmf(const CovarianceModel& model,
                            const std::vector<ScalarQuantizer>& quantizers_by_source,
                            std::span<const int> scope, std::int64_t n_samples,
                            std::uint64_t seed, int threads = 1,
                            std::size_t cell_cap = kDefaultPmfCellCap);

/// Conditional table p(i_target | i_given) over scope sorted(target+given):
/// each given-slice of the result sums to one over the target axes.
/// Both sets must be disjoint subsets of the pmf scope.
IndexTensor conditional_table(const JointPmf& pmf, std::span<const int> target,
                              std::span<const int> given);

} // namespace dsc

#endif
