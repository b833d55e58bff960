#ifndef DSC_INDEX_ASSIGN_HPP
#define DSC_INDEX_ASSIGN_HPP

#include <array>
#include <span>
#include <vector>

#include "dsc/pmf.hpp"
#include "dsc/quantizer.hpp"

namespace dsc {

/// Surjective map from quantizer indices {0..L-1} onto codewords {0..K-1},
/// stored as a plain lookup vector. Compression happens whenever K < L.
class IndexAssignment {
public:
    static IndexAssignment identity(int size);

    /// Validates surjectivity onto {0..max(map)}.
    static IndexAssignment from_map(std::vector<int> map);

    int input_size() const { return static_cast<int>(map_.size()); }
    int output_size() const { return output_size_; }
    int operator()(int index) const { return map_[static_cast<std::size_t>(index)]; }
    const std::vector<int>& mapping() const { return map_; }

    /// Merges codewords a < b into a, relabeling codewords above b down by
    /// one; the result has K-1 codewords and stays surjective.
    IndexAssignment merged(int a, int b) const;

    /// Preimage sets Q(w), each sorted ascending.
    std::vector<std::vector<int>> preimages() const;

    /// max_w |Q(w)| <= L - K + 1 (holds for every surjective map).
    bool satisfies_preimage_bound() const;

private:
    std::vector<int> map_;
    int output_size_ = 0;
};

struct MergeStep {
    int encoder; // source id
    int a;
    int b;
    double distortion; // d(Psi) = d_q + d_d after the commit
};

/// Joint index-assignment design for one cluster: encoders Omega transmit,
/// targets Psi are estimated from the received codewords.
struct ClusterCodeDesign {
    std::vector<int> encoders;                // Omega, ascending
    std::vector<int> targets;                 // Psi, ascending
    std::vector<IndexAssignment> assignments; // aligned with encoders
    JointPmf pmf;                             // over sorted(Psi u Omega)
    std::vector<ScalarQuantizer> quantizers;  // indexed by source id
    std::vector<MergeStep> history;
};

/// Index-assignment distortion d_d(Psi) = sum_n E{(Uhat_n - Utilde_n)^2}
/// under the design's current assignments, with conditional-mean estimates
/// computed from the (smoothed) design PMF by preimage-restricted
/// marginalization over the codeword tuples.
double distortion_dd(const ClusterCodeDesign& design);

/// (d_q, d_d, d) with d_q(Psi) the summed quantizer MSEs and d = d_q + d_d.
std::array<double, 3> total_distortion(const ClusterCodeDesign& design);

/// Greedy index-reuse descent: starting from one-to-one mappings at L
/// codewords, repeatedly lets each encoder in Omega (ascending) commit the
/// codeword merge minimizing d(Psi), until all encoders are down to
/// k_target codewords. First strictly-better candidate wins ties.
ClusterCodeDesign optimize_index_reuse(const JointPmf& pmf,
                                       const std::vector<ScalarQuantizer>& quantizers,
                                       std::span<const int> omega,
                                       std::span<const int> psi, int input_levels,
                                       int k_target);

/// Monotone step map sending each fine-quantizer cell to the coarse cell
/// its reconstruction level falls into. Lets an encoder transmit at the
/// coarse rate while the decoder keeps the fine index resolution.
IndexAssignment rate_matching_assignment(const ScalarQuantizer& fine,
                                         const ScalarQuantizer& coarse);

} // namespace dsc

#endif
