// Command-line frontend: design codes, simulate them, inspect artifacts,
// and rerun the full experiment grids.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dsc/artifact.hpp"
#include "dsc/cluster.hpp"
#include "dsc/config.hpp"
#include "dsc/errors.hpp"
#include "dsc/factorize.hpp"
#include "dsc/scenarios.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw dsc::Error("cannot open " + path + " for writing");
    out << content;
    if (!out)
        throw dsc::Error("write failed for " + path);
}

int cmd_design(const std::string& config_path, const std::string& out_path,
               std::int64_t seed_override, int resolution_override) {
    dsc::ExperimentConfig config = dsc::parse_config_file(config_path);
    if (seed_override >= 0)
        config.seed = static_cast<std::uint64_t>(seed_override);
    if (resolution_override > 0)
        config.resolution = resolution_override;
    dsc::validate_config(config);

    dsc::DesignSummary summary;
    const dsc::DesignArtifact artifact =
        dsc::design_scenario(config, config.design_resolution(), &summary);
    dsc::save_artifact(artifact, out_path);

    std::printf("designed %s scenario, N=%d, R=%d, L=%d (%s)\n",
                dsc::to_string(config.kind).c_str(), config.n, config.rate,
                config.design_resolution(),
                config.design_resolution() == config.codeword_count() ? "dec" : "ir");
    std::printf("clusters: %zu", artifact.clusters.size());
    std::printf(" sizes:");
    for (const auto& c : artifact.clusters)
        std::printf(" %zu", c.size());
    std::printf("\n");
    for (const auto& info : summary.clusters) {
        std::printf("  cluster {");
        for (std::size_t i = 0; i < info.cluster.size(); ++i)
            std::printf("%s%d", i ? "," : "", info.cluster[i]);
        std::printf("} L=%d  d_q=%.6f  d_d=%.6f  d=%.6f\n", info.resolution, info.d_q,
                    info.d_d, info.d);
    }
    std::printf("cluster KLD: %.6f bits\n", summary.cluster_kld_bits);
    std::printf("factorization KLD: %.6f bits over %d factors\n",
                summary.factorization_kld_bits, summary.factor_count);
    std::printf("artifact written to %s\n", out_path.c_str());
    return kExitOk;
}

int cmd_simulate(const std::string& artifact_path, std::int64_t samples,
                 std::int64_t seed_override, int threads, const std::string& out_dir,
                 const std::string& format) {
    if (format != "table" && format != "csv")
        throw dsc::ConfigError("simulate: --format must be table or csv");
    const dsc::DesignArtifact artifact = dsc::load_artifact(artifact_path);
    const std::uint64_t seed =
        seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : artifact.seed;
    const std::int64_t n = samples >= 0 ? samples : artifact.config.eval_samples;

    const dsc::SimulationResult sim = dsc::simulate(artifact, n, seed, threads);

    const char* mode =
        artifact.config.design_resolution() == artifact.config.codeword_count() ? "dec" : "ir";
    std::string csv = "scenario,mode,rate,resolution,k,seed,eval_samples,snr_db,fallbacks\n";
    if (n > 0) {
        char row[256];
        std::snprintf(row, sizeof row, "%s,%s,%d,%d,%d,%llu,%lld,%.6f,%lld\n",
                      dsc::to_string(artifact.config.kind).c_str(), mode,
                      artifact.config.rate, artifact.config.design_resolution(),
                      artifact.config.codeword_count(),
                      static_cast<unsigned long long>(seed), static_cast<long long>(n),
                      sim.snr_db, static_cast<long long>(sim.zero_mass_fallbacks));
        csv += row;
    }

    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/report.csv";
    write_file(csv_path, csv);

    if (format == "csv") {
        std::fputs(csv.c_str(), stdout);
    } else if (n > 0) {
        std::printf("%s %s R=%d L=%d: SNR = %.4f dB over %lld vectors (%lld fallbacks)\n",
                    dsc::to_string(artifact.config.kind).c_str(), mode, artifact.config.rate,
                    artifact.config.design_resolution(), sim.snr_db,
                    static_cast<long long>(n),
                    static_cast<long long>(sim.zero_mass_fallbacks));
    } else {
        std::printf("no samples requested; empty report\n");
    }
    if (format == "table")
        std::printf("report written to %s\n", csv_path.c_str());
    return kExitOk;
}

int cmd_inspect(const std::string& artifact_path, const std::string& what) {
    const dsc::DesignArtifact artifact = dsc::load_artifact(artifact_path);
    if (what == "model") {
        // Covariance matrix of the scenario, one CSV row per source.
        const dsc::CovarianceModel model =
            artifact.ceo_mode
                ? dsc::build_ceo_model(artifact.config.n, artifact.config.sigma0_sq,
                                       artifact.config.lambda_sq)
                : dsc::build_field_model(dsc::random_sensor_field(
                      artifact.config.n, artifact.config.beta,
                      artifact.config.placement_seed));
        for (int i = 0; i < model.size(); ++i) {
            for (int j = 0; j < model.size(); ++j)
                std::printf("%s%.17g", j ? "," : "", model.matrix()(i, j));
            std::printf("\n");
        }
    } else if (what == "dendrogram") {
        if (artifact.dendrogram.n_leaves == 0)
            throw dsc::ConfigError("inspect: artifact has no dendrogram (ceo scenario)");
        const dsc::CovarianceModel model = dsc::build_field_model(dsc::random_sensor_field(
            artifact.config.n, artifact.config.beta, artifact.config.placement_seed));
        std::cout << dsc::dendrogram_dot(artifact.dendrogram, model);
    } else if (what == "factorgraph") {
        std::cout << dsc::factor_graph_dot(artifact.ccre);
    } else if (what == "mappings") {
        for (std::size_t e = 0; e < artifact.encoder_ids.size(); ++e) {
            const auto& m = artifact.assignments[e];
            std::printf("encoder %d (L=%d -> K=%d):\n", artifact.encoder_ids[e],
                        m.input_size(), m.output_size());
            for (int i = 0; i < m.input_size(); ++i)
                std::printf("  %3d -> %3d\n", i, m(i));
        }
    } else {
        throw dsc::ConfigError("inspect: unknown target '" + what +
                               "' (expected model|dendrogram|factorgraph|mappings)");
    }
    return kExitOk;
}

int cmd_tables(const std::string& which, const std::string& config_path,
               std::int64_t seed_override, int threads, const std::string& out_dir) {
    dsc::ExperimentConfig base;
    if (!config_path.empty())
        base = dsc::parse_config_file(config_path);
    if (seed_override >= 0)
        base.seed = static_cast<std::uint64_t>(seed_override);
    base.threads = threads;
    base.resolution = 0;

    dsc::GridReport grid;
    if (which == "table1")
        grid = dsc::reproduce_table_field(base);
    else if (which == "table2")
        grid = dsc::reproduce_table_ceo(base);
    else
        throw dsc::ConfigError("reproduce-tables: which must be table1 or table2");

    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/" + which + ".csv", grid.csv);
    std::cout << grid.table;
    std::printf("grid written to %s/%s.csv\n", out_dir.c_str(), which.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed source coding toolkit"};
    app.require_subcommand(1);

    std::string config_path, artifact_path, out_path = "artifact.json";
    std::string out_dir = ".";
    std::string what = "dendrogram";
    std::string which = "table2";
    std::string format = "table";
    std::int64_t seed = -1;
    std::int64_t samples = -1;
    int threads = 1;
    int resolution = 0;

    auto* design = app.add_subcommand("design", "design a code from a scenario config");
    design->add_option("--config", config_path, "scenario config file")->required();
    design->add_option("--out", out_path, "artifact output path");
    design->add_option("--seed", seed, "seed override");
    design->add_option("--resolution", resolution, "quantizer resolution override");

    auto* simulate = app.add_subcommand("simulate", "simulate a designed artifact");
    simulate->add_option("--artifact", artifact_path, "design artifact")->required();
    simulate->add_option("--samples", samples, "evaluation vectors");
    simulate->add_option("--seed", seed, "seed override");
    simulate->add_option("--threads", threads, "worker threads");
    simulate->add_option("--out", out_dir, "output directory");
    simulate->add_option("--format", format, "stdout format: table|csv");

    auto* inspect = app.add_subcommand("inspect", "dump DOT / text views of an artifact");
    inspect->add_option("--artifact", artifact_path, "design artifact")->required();
    inspect->add_option("--what", what, "model|dendrogram|factorgraph|mappings");

    auto* tables = app.add_subcommand("reproduce-tables", "rerun an experiment grid");
    tables->add_option("--which", which, "table1|table2")->required();
    tables->add_option("--config", config_path, "base scenario config");
    tables->add_option("--seed", seed, "seed override");
    tables->add_option("--threads", threads, "worker threads");
    tables->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
        if (design->parsed())
            return cmd_design(config_path, out_path, seed, resolution);
        if (simulate->parsed())
            return cmd_simulate(artifact_path, samples, seed, threads, out_dir, format);
        if (inspect->parsed())
            return cmd_inspect(artifact_path, what);
        if (tables->parsed())
            return cmd_tables(which, config_path, seed, threads, out_dir);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const dsc::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const dsc::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const dsc::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitOk;
}
