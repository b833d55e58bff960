#ifndef DSC_SCENARIOS_HPP
#define DSC_SCENARIOS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dsc/artifact.hpp"
#include "dsc/config.hpp"

namespace dsc {

/// Per-cluster design diagnostics printed by the design stage.
struct ClusterDesignInfo {
    std::vector<int> cluster;
    int resolution = 0; // L used by the cluster's encoders
    double d_q = 0.0;
    double d_d = 0.0;
    double d = 0.0;
};

struct DesignSummary {
    std::vector<ClusterDesignInfo> clusters;
    double cluster_kld_bits = 0.0;
    double factorization_kld_bits = 0.0;
    int factor_count = 0;
};

/// Runs the full design pipeline (model, quantizers, clustering, index
/// reuse, factorization, factor tables) at quantizer resolution
/// `resolution`; resolution == 2^rate yields plain quantization (identity
/// assignments, "dec" mode).
DesignArtifact design_scenario(const ExperimentConfig& config, int resolution,
                               DesignSummary* summary = nullptr);

struct SimulationResult {
    double snr_db = 0.0;
    double signal_energy = 0.0;
    double error_energy = 0.0;
    std::int64_t vectors = 0;
    std::int64_t zero_mass_fallbacks = 0;
};

/// Encodes and decodes `n_vectors` fresh source vectors and accumulates the
/// output SNR (summed over all sources, or over U_0 alone in ceo mode).
/// Decodes run in fixed-size batches with per-batch sample streams, so the
/// result is identical for any thread count.
SimulationResult simulate(const DesignArtifact& artifact, std::int64_t n_vectors,
                          std::uint64_t seed, int threads);

/// 10*log10(signal / error) with the error floored at 1e-12.
double snr_db(double signal_energy, double error_energy);

/// SNR of a reconstruction batch (columns = vectors); throws on empty input.
double batch_snr_db(const Eigen::MatrixXd& u, const Eigen::MatrixXd& u_hat);

struct CandidateResult {
    int resolution = 0;
    double snr_db = 0.0;
    std::int64_t fallbacks = 0;
};

struct ModeResult {
    bool available = false;
    double snr_db = 0.0;
    int resolution = 0; // winning candidate
    std::int64_t fallbacks = 0;
    std::vector<CandidateResult> candidates;
};

struct ExperimentReport {
    ExperimentConfig config;
    ModeResult dec;
    ModeResult ir;
    bool ir_beneficial = false; // N.B. marker when false and ir available
    double wall_seconds = 0.0;
};

/// Dec (plain quantization at 2^rate) plus index reuse from every candidate
/// resolution above 2^rate; the IR entry keeps the best candidate.
ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_field_experiment(const ExperimentConfig& config);
ExperimentReport run_ceo_experiment(const ExperimentConfig& config);

/// Deterministic CSV rows (no timing columns); wall clock appears only in
/// the human-readable table.
std::string report_csv(const ExperimentReport& report);
std::string report_table(const ExperimentReport& report);

/// Quadratic-Gaussian CEO sum-rate bound SNRs quoted for comparison
/// tables; reference constants, not computed by this toolkit.
extern const double kCeoRateDistortionReferenceDb[2][4]; // [lambda 0.1|0.5][R-1]

struct GridReport {
    std::string table;
    std::string csv;
    std::vector<ExperimentReport> runs;
};

/// Field grid: beta in {0.5, 2}, R in 1..4, Dec and IR rows.
GridReport reproduce_table_field(const ExperimentConfig& base);

/// CEO grid: lambda^2 in {0.1, 0.5}, R in 1..4, reference, Dec and IR rows.
GridReport reproduce_table_ceo(const ExperimentConfig& base);

} // namespace dsc

#endif
