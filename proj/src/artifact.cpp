#include "dsc/artifact.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "dsc/errors.hpp"

namespace dsc {

namespace {

using nlohmann::json;

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = to_string(c.kind);
    j["n"] = c.n;
    j["beta"] = c.beta;
    j["placement_seed"] = c.placement_seed;
    j["sigma0_sq"] = c.sigma0_sq;
    j["lambda_sq"] = c.lambda_sq;
    j["u0_resolution"] = c.u0_resolution;
    j["rate"] = c.rate;
    j["resolutions"] = c.resolutions;
    j["resolution"] = c.resolution;
    j["cluster_size"] = c.cluster_cap;
    j["link_a"] = c.link_a;
    j["link_b"] = c.link_b;
    j["design_samples"] = c.design_samples;
    j["eval_samples"] = c.eval_samples;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    const std::string kind = j.at("scenario").get<std::string>();
    if (kind == "field")
        c.kind = ScenarioKind::Field;
    else if (kind == "ceo")
        c.kind = ScenarioKind::Ceo;
    else
        throw ValidationError("artifact: unknown scenario kind " + kind);
    c.n = j.at("n").get<int>();
    c.beta = j.at("beta").get<double>();
    c.placement_seed = j.at("placement_seed").get<std::uint64_t>();
    c.sigma0_sq = j.at("sigma0_sq").get<double>();
    c.lambda_sq = j.at("lambda_sq").get<double>();
    c.u0_resolution = j.at("u0_resolution").get<int>();
    c.rate = j.at("rate").get<int>();
    c.resolutions = j.at("resolutions").get<std::vector<int>>();
    c.resolution = j.at("resolution").get<int>();
    c.cluster_cap = j.at("cluster_size").get<int>();
    c.link_a = j.at("link_a").get<int>();
    c.link_b = j.at("link_b").get<int>();
    c.design_samples = j.at("design_samples").get<std::int64_t>();
    c.eval_samples = j.at("eval_samples").get<std::int64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.at("threads").get<int>();
    return c;
}

json tensor_to_json(const IndexTensor& t) {
    return json{{"scope", t.scope}, {"shape", t.shape}, {"values", t.values}};
}

IndexTensor tensor_from_json(const json& j) {
    IndexTensor t;
    t.scope = j.at("scope").get<std::vector<int>>();
    t.shape = j.at("shape").get<std::vector<int>>();
    t.values = j.at("values").get<std::vector<double>>();
    if (t.scope.size() != t.shape.size() || t.values.size() != t.cell_count())
        throw ValidationError("artifact: factor table with inconsistent dimensions");
    return t;
}

} // namespace

void save_artifact(const DesignArtifact& a, const std::string& path) {
    json j;
    j["schema_version"] = a.schema_version;
    j["tool_version"] = a.tool_version;
    j["seed"] = a.seed;
    j["config"] = config_to_json(a.config);
    j["n_sources"] = a.n_sources;
    j["ceo_mode"] = a.ceo_mode;
    j["encoders"] = a.encoder_ids;

    json quant = json::array();
    for (const auto& q : a.quantizers)
        quant.push_back(json{{"mean", q.mean()},
                             {"variance", q.variance()},
                             {"levels", q.levels()},
                             {"boundaries", q.interior_boundaries()}});
    j["quantizers"] = std::move(quant);

    json maps = json::array();
    for (const auto& m : a.assignments)
        maps.push_back(m.mapping());
    j["assignments"] = std::move(maps);

    json merges = json::array();
    for (const auto& m : a.dendrogram.merges)
        merges.push_back(json{{"left", m.left},
                              {"right", m.right},
                              {"id", m.id},
                              {"delta_bits", m.delta_bits}});
    j["dendrogram"] = json{{"n_leaves", a.dendrogram.n_leaves}, {"merges", std::move(merges)}};

    j["clusters"] = a.clusters;
    j["cluster_kld_bits"] = a.cluster_kld_bits;

    json factors = json::array();
    for (const auto& f : a.ccre.factors)
        factors.push_back(json{{"a", f.a_set}, {"b", f.b_set}});
    j["ccre"] = std::move(factors);

    json tables = json::array();
    for (const auto& t : a.factor_tables)
        tables.push_back(tensor_to_json(t));
    j["factor_tables"] = std::move(tables);

    json history = json::array();
    for (const auto& s : a.design_history)
        history.push_back(json{{"encoder", s.encoder},
                               {"a", s.a},
                               {"b", s.b},
                               {"distortion", s.distortion}});
    j["design_history"] = std::move(history);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("artifact: cannot open " + path + " for writing");
    out << j.dump() << '\n';
    if (!out)
        throw Error("artifact: write failed for " + path);
}

DesignArtifact load_artifact(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("artifact: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("artifact: parse error: ") + e.what());
    }

    DesignArtifact a;
    try {
        a.schema_version = j.at("schema_version").get<int>();
        if (a.schema_version != kArtifactSchemaVersion)
            throw ValidationError("artifact: unsupported schema_version " +
                                  std::to_string(a.schema_version) + ", expected " +
                                  std::to_string(kArtifactSchemaVersion));
        a.tool_version = j.at("tool_version").get<std::string>();
        a.seed = j.at("seed").get<std::uint64_t>();
        a.config = config_from_json(j.at("config"));
        a.n_sources = j.at("n_sources").get<int>();
        a.ceo_mode = j.at("ceo_mode").get<bool>();
        a.encoder_ids = j.at("encoders").get<std::vector<int>>();

        for (const auto& q : j.at("quantizers"))
            a.quantizers.push_back(ScalarQuantizer::from_parts(
                q.at("mean").get<double>(), q.at("variance").get<double>(),
                q.at("levels").get<std::vector<double>>(),
                q.at("boundaries").get<std::vector<double>>()));

        for (const auto& m : j.at("assignments"))
            a.assignments.push_back(IndexAssignment::from_map(m.get<std::vector<int>>()));

        const json& d = j.at("dendrogram");
        a.dendrogram.n_leaves = d.at("n_leaves").get<int>();
        for (const auto& m : d.at("merges"))
            a.dendrogram.merges.push_back({m.at("left").get<int>(), m.at("right").get<int>(),
                                           m.at("id").get<int>(),
                                           m.at("delta_bits").get<double>()});

        a.clusters = j.at("clusters").get<std::vector<std::vector<int>>>();
        a.cluster_kld_bits = j.at("cluster_kld_bits").get<double>();

        for (const auto& f : j.at("ccre"))
            a.ccre.factors.push_back(
                {f.at("a").get<std::vector<int>>(), f.at("b").get<std::vector<int>>()});

        for (const auto& t : j.at("factor_tables"))
            a.factor_tables.push_back(tensor_from_json(t));

        for (const auto& s : j.at("design_history"))
            a.design_history.push_back({s.at("encoder").get<int>(), s.at("a").get<int>(),
                                        s.at("b").get<int>(),
                                        s.at("distortion").get<double>()});
    } catch (const json::exception& e) {
        throw ValidationError(std::string("artifact: malformed document: ") + e.what());
    }

    validate_artifact(a);
    return a;
}

void validate_artifact(const DesignArtifact& a) {
    if (a.n_sources < 1)
        throw ValidationError("artifact: n_sources must be >= 1");
    if (static_cast<int>(a.quantizers.size()) != a.n_sources)
        throw ValidationError("artifact: quantizer count does not match n_sources");
    if (a.assignments.size() != a.encoder_ids.size())
        throw ValidationError("artifact: assignment count does not match encoder count");

    std::set<int> encoder_set;
    for (std::size_t e = 0; e < a.encoder_ids.size(); ++e) {
        const int id = a.encoder_ids[e];
        if (id < 0 || id >= a.n_sources)
            throw ValidationError("artifact: encoder id out of range");
        if (!encoder_set.insert(id).second)
            throw ValidationError("artifact: duplicate encoder id");
        // Mapping domain must match the quantizer alphabet; surjectivity
        // was already enforced by IndexAssignment::from_map.
        if (a.assignments[e].input_size() != a.quantizers[static_cast<std::size_t>(id)].size())
            throw ValidationError("artifact: assignment length does not match quantizer size");
        if (!a.assignments[e].satisfies_preimage_bound())
            throw ValidationError("artifact: assignment violates preimage bound L-K+1");
    }
    if (a.ceo_mode && encoder_set.count(0))
        throw ValidationError("artifact: ceo source 0 must not be an encoder");

    // Clusters partition the encoded sources (all sources in field mode).
    std::set<int> clustered;
    for (const auto& c : a.clusters) {
        if (c.empty())
            throw ValidationError("artifact: empty cluster");
        for (int id : c)
            if (!clustered.insert(id).second)
                throw ValidationError("artifact: clusters overlap");
    }
    const std::set<int> expected = a.ceo_mode
                                       ? encoder_set
                                       : [&] {
                                             std::set<int> all;
                                             for (int i = 0; i < a.n_sources; ++i)
                                                 all.insert(i);
                                             return all;
                                         }();
    if (clustered != expected)
        throw ValidationError("artifact: clusters do not partition the sources");

    validate_ccre(a.ccre, a.n_sources, 0);

    if (a.factor_tables.size() != a.ccre.factors.size())
        throw ValidationError("artifact: factor table count does not match CCRE");
    for (std::size_t m = 0; m < a.factor_tables.size(); ++m) {
        const IndexTensor& t = a.factor_tables[m];
        const std::vector<int> scope = a.ccre.factors[m].scope();
        if (t.scope != scope)
            throw ValidationError("artifact: factor table scope mismatch at factor " +
                                  std::to_string(m));
        for (std::size_t ax = 0; ax < t.scope.size(); ++ax) {
            const int id = t.scope[ax];
            if (t.shape[ax] != a.quantizers[static_cast<std::size_t>(id)].size())
                throw ValidationError("artifact: factor table shape mismatch at factor " +
                                      std::to_string(m));
        }
        for (double v : t.values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("artifact: factor table with negative or non-finite entry");

        // Each conditioning slice must be a normalized distribution.
        const auto& b_set = a.ccre.factors[m].b_set;
        std::vector<std::size_t> b_axes;
        for (int id : b_set)
            b_axes.push_back(static_cast<std::size_t>(t.axis_of(id)));
        std::vector<int> b_shape;
        for (std::size_t ax : b_axes)
            b_shape.push_back(t.shape[ax]);
        std::size_t slice_count = 1;
        for (int s : b_shape)
            slice_count *= static_cast<std::size_t>(s);
        std::vector<double> slice_sum(slice_count, 0.0);
        std::vector<std::size_t> b_strides(b_shape.size(), 1);
        for (std::size_t ax = b_shape.size(); ax-- > 1;)
            b_strides[ax - 1] = b_strides[ax] * static_cast<std::size_t>(b_shape[ax]);
        std::vector<int> multi(t.scope.size(), 0);
        std::size_t flat = 0;
        do {
            std::size_t sflat = 0;
            for (std::size_t k = 0; k < b_axes.size(); ++k)
                sflat += static_cast<std::size_t>(multi[b_axes[k]]) * b_strides[k];
            slice_sum[sflat] += t.values[flat];
            ++flat;
        } while (next_multi_index(multi, t.shape));
        for (double s : slice_sum)
            if (std::abs(s - 1.0) > 1e-6)
                throw ValidationError("artifact: factor table slice not normalized at factor " +
                                      std::to_string(m));
    }
}

} // namespace dsc
