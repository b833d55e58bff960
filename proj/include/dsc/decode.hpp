#ifndef DSC_DECODE_HPP
#define DSC_DECODE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dsc/artifact.hpp"
#include "dsc/index_assign.hpp"
#include "dsc/pmf.hpp"
#include "dsc/quantizer.hpp"
#include "dsc/tensor.hpp"

namespace dsc {

/// Per-source encoding state used on the decoding side: quantizer alphabet
/// sizes for every source plus index assignments for those that transmit.
struct EncoderBank {
    std::vector<int> alphabet;                               // per source id
    std::vector<std::optional<IndexAssignment>> assignments; // nullopt = untransmitted
};

/// Admissible quantizer indices per source for a received codeword vector:
/// the preimage Q_n(w_n) for transmitting sources, the full alphabet for
/// the rest. `codewords` aligned with source ids (ignored where there is no
/// assignment). Sets are sorted; their product is never materialized.
std::vector<std::vector<int>> preimage_sets(const EncoderBank& bank,
                                            std::span<const int> codewords);

struct ExactPosteriorResult {
    std::vector<double> probs;
    std::int64_t terms = 0; // summation terms touched (complexity accounting)
    bool fallback = false;  // zero total mass -> uniform over feasible indices
};

/// p(i_target = l | w) by preimage-restricted marginalization of the joint
/// PMF: sums p(i) only over the admissible tuples, visiting them in
/// ascending lexicographic order (so sums match a naive full-tensor
/// marginalization term for term).
ExactPosteriorResult exact_posterior(const JointPmf& joint, const EncoderBank& bank,
                                     std::span<const int> codewords, int target);

/// Conditional-mean estimate: sum_l level(l) * posterior(l).
double cme_estimate(std::span<const double> posterior, const ScalarQuantizer& quantizer);

/// Factor graph over the sources of a CCRE; each function node holds the
/// conditional table p(i_A | i_B) of its factor.
class FactorGraph {
public:
    struct Factor {
        std::vector<int> scope; // sorted source ids
        std::vector<int> shape;
        std::vector<std::size_t> strides;
        std::vector<double> values;
    };

    FactorGraph(std::vector<int> alphabet_by_source, std::vector<IndexTensor> tables);

    int n_sources() const { return static_cast<int>(alphabet_.size()); }
    const std::vector<int>& alphabet() const { return alphabet_; }
    const std::vector<Factor>& factors() const { return factors_; }
    const std::vector<std::vector<std::pair<int, int>>>& var_adjacency() const {
        return var_adj_;
    }
    bool cycle_free() const { return cycle_free_; }

private:
    std::vector<int> alphabet_;
    std::vector<Factor> factors_;
    std::vector<std::vector<std::pair<int, int>>> var_adj_; // per var: (factor, position)
    bool cycle_free_ = false;
};

struct SumProductOptions {
    int max_iterations = 50;   // flooding schedule cap
    double tolerance = 1e-8;   // early-stop message change threshold
    bool force_flooding = false;
    std::ostream* trace = nullptr; // per-pass/iteration message dump
};

struct SumProductResult {
    std::vector<std::vector<double>> posteriors; // per source id
    int iterations = 0;                          // 0 under the two-pass schedule
    int zero_mass_fallbacks = 0;
    bool tree_schedule = false;
};

/// Sum-product with the function nodes restricted to the admissible sets of
/// the received codewords. Cycle-free graphs run the exact two-pass
/// (forward-backward) schedule; cyclic graphs run synchronous flooding.
/// Messages are renormalized after every update.
SumProductResult sum_product_decode(const FactorGraph& graph,
                                    const std::vector<std::vector<int>>& allowed,
                                    const SumProductOptions& options = {});

/// Ready-to-run decoder for a design artifact: builds the factor graph and
/// encoder bank once; decode() maps a codeword vector (aligned with the
/// artifact's encoder order) to source estimates.
class Decoder {
public:
    explicit Decoder(const DesignArtifact& artifact);

    struct Output {
        std::vector<double> estimates; // per source id (only index 0 in ceo mode)
        int zero_mass_fallbacks = 0;
    };

    Output decode(std::span<const int> codewords) const;
    const EncoderBank& bank() const { return bank_; }
    const FactorGraph& graph() const { return graph_; }

private:
    const DesignArtifact& artifact_;
    EncoderBank bank_;
    FactorGraph graph_;
};

/// One-shot convenience wrapper around Decoder.
Decoder::Output decode_all(const DesignArtifact& artifact, std::span<const int> codewords);

} // namespace dsc

#endif
