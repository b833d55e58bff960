#ifndef DSC_ARTIFACT_HPP
#define DSC_ARTIFACT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dsc/cluster.hpp"
#include "dsc/config.hpp"
#include "dsc/factorize.hpp"
#include "dsc/index_assign.hpp"
#include "dsc/quantizer.hpp"
#include "dsc/tensor.hpp"

namespace dsc {

inline constexpr int kArtifactSchemaVersion = 1;
inline constexpr const char* kToolVersion = "dsc 1.0.0";

/// Complete description of a designed system: everything the simulator
/// needs to encode and decode without re-running the design stage.
/// Serialized as a single JSON file; floats survive save/load bit-exactly.
struct DesignArtifact {
    int schema_version = kArtifactSchemaVersion;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    ExperimentConfig config;

    int n_sources = 0;              // model dimension (N, or N+1 for ceo)
    bool ceo_mode = false;          // estimate source 0 only
    std::vector<int> encoder_ids;   // transmitting sources, ascending

    std::vector<ScalarQuantizer> quantizers;   // per source id
    std::vector<IndexAssignment> assignments;  // aligned with encoder_ids

    Dendrogram dendrogram;                     // empty for ceo
    std::vector<std::vector<int>> clusters;
    double cluster_kld_bits = 0.0;

    Ccre ccre;
    std::vector<IndexTensor> factor_tables;    // conditionals, aligned with ccre

    /// Merge history of the index-reuse descent(s), concatenated in design
    /// order; encoder ids refer to sources.
    std::vector<MergeStep> design_history;
};

void save_artifact(const DesignArtifact& artifact, const std::string& path);

/// Parses and re-validates every structural invariant (quantizer monotonicity,
/// assignment surjectivity, CCRE conditions, table normalization) before
/// returning; a violation raises ValidationError naming the invariant.
DesignArtifact load_artifact(const std::string& path);

/// The invariant checks shared by load_artifact and the design stage.
void validate_artifact(const DesignArtifact& artifact);

} // namespace dsc

#endif
