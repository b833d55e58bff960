#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dsc/errors.hpp"
#include "dsc/gauss_model.hpp"
#include "dsc/index_assign.hpp"
#include "dsc/pmf.hpp"
#include "dsc/quantizer.hpp"
#include "dsc/rng.hpp"

using namespace dsc;

namespace {

Eigen::MatrixXd corr2(double rho) {
    Eigen::MatrixXd r(2, 2);
    r << 1.0, rho, rho, 1.0;
    return r;
}

// Brute-force d_d straight from the definition: per-w conditional means by
// scanning the full index tensor once per codeword tuple. Independent of the
// engine's slice/caching machinery.
double naive_dd(const JointPmf& pmf, const std::vector<ScalarQuantizer>& quant,
                const std::vector<int>& omega, const std::vector<int>& psi,
                const std::vector<IndexAssignment>& maps) {
    const IndexTensor& t = pmf.tensor();
    std::vector<int> omega_axes, psi_axes;
    for (int id : omega)
        omega_axes.push_back(t.axis_of(id));
    for (int id : psi)
        psi_axes.push_back(t.axis_of(id));

    std::vector<int> w_shape;
    for (const auto& m : maps)
        w_shape.push_back(m.output_size());

    auto w_flat_of = [&](const std::vector<int>& multi) {
        std::size_t flat = 0;
        for (std::size_t e = 0; e < omega.size(); ++e)
            flat = flat * static_cast<std::size_t>(w_shape[e]) +
                   static_cast<std::size_t>(maps[e](multi[static_cast<std::size_t>(omega_axes[e])]));
        return flat;
    };
    std::size_t w_cells = 1;
    for (int s : w_shape)
        w_cells *= static_cast<std::size_t>(s);

    double total = 0.0;
    for (std::size_t k = 0; k < psi.size(); ++k) {
        const ScalarQuantizer& q = quant[static_cast<std::size_t>(psi[k])];
        // Conditional means per codeword tuple.
        std::vector<double> mass(w_cells, 0.0), mean(w_cells, 0.0);
        std::vector<int> multi(t.scope.size(), 0);
        std::size_t flat = 0;
        do {
            const std::size_t wf = w_flat_of(multi);
            const double p = t.values[flat];
            mass[wf] += p;
            mean[wf] += p * q.level(multi[static_cast<std::size_t>(psi_axes[k])]);
            ++flat;
        } while (next_multi_index(multi, t.shape));
        for (std::size_t w = 0; w < w_cells; ++w)
            mean[w] = mass[w] > 0 ? mean[w] / mass[w] : 0.0;

        std::fill(multi.begin(), multi.end(), 0);
        flat = 0;
        do {
            const double level = q.level(multi[static_cast<std::size_t>(psi_axes[k])]);
            const double err = mean[w_flat_of(multi)] - level;
            total += t.values[flat] * err * err;
            ++flat;
        } while (next_multi_index(multi, t.shape));
    }
    return total;
}

// All surjective maps {0..L-1} -> {0..K-1}.
std::vector<IndexAssignment> all_surjective(int l, int k) {
    std::vector<IndexAssignment> out;
    std::vector<int> map(static_cast<std::size_t>(l), 0);
    for (;;) {
        std::vector<char> hit(static_cast<std::size_t>(k), 0);
        for (int v : map)
            hit[static_cast<std::size_t>(v)] = 1;
        if (std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; }))
            out.push_back(IndexAssignment::from_map(map));
        int pos = l - 1;
        while (pos >= 0 && map[static_cast<std::size_t>(pos)] == k - 1)
            map[static_cast<std::size_t>(pos--)] = 0;
        if (pos < 0)
            break;
        ++map[static_cast<std::size_t>(pos)];
    }
    return out;
}

JointPmf two_source_pmf(double rho, int levels, std::int64_t samples = 400000) {
    const CovarianceModel model(corr2(rho));
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, levels);
    const std::vector<ScalarQuantizer> quant{q, q};
    const std::vector<int> scope{0, 1};
    return estimate_joint_pmf(model, quant, scope, samples, 99);
}

} // namespace

TEST_CASE("merge rule follows the piecewise definition") {
    const IndexAssignment f = IndexAssignment::identity(4);
    const IndexAssignment e = f.merged(1, 3);
    CHECK(e.mapping() == std::vector<int>{0, 1, 2, 1});
    CHECK(e.output_size() == 3);

    const IndexAssignment g = IndexAssignment::identity(2).merged(0, 1);
    CHECK(g.mapping() == std::vector<int>{0, 0});
    CHECK(g.output_size() == 1);
}

TEST_CASE("merge rejects bad codeword pairs") {
    const IndexAssignment f = IndexAssignment::identity(4);
    CHECK_THROWS_AS(f.merged(2, 2), NumericalError);
    CHECK_THROWS_AS(f.merged(3, 1), NumericalError);
    CHECK_THROWS_AS(f.merged(0, 4), NumericalError);
}

TEST_CASE("from_map rejects non-surjective mappings") {
    CHECK_THROWS_AS(IndexAssignment::from_map({0, 2, 2, 0}), ValidationError);
    CHECK_THROWS_AS(IndexAssignment::from_map({1, 1}), ValidationError);
    CHECK_NOTHROW(IndexAssignment::from_map({1, 0, 1}));
}

TEST_CASE("every merge of a surjective map stays surjective (exhaustive L<=5)") {
    for (int l = 2; l <= 5; ++l) {
        for (int k = 2; k <= l; ++k) {
            for (const IndexAssignment& f : all_surjective(l, k)) {
                for (int a = 0; a < k - 1; ++a) {
                    for (int b = a + 1; b < k; ++b) {
                        const IndexAssignment e = f.merged(a, b);
                        CHECK(e.output_size() == k - 1);
                        CHECK(e.satisfies_preimage_bound());
                        std::vector<char> hit(static_cast<std::size_t>(k - 1), 0);
                        for (int i = 0; i < l; ++i)
                            hit[static_cast<std::size_t>(e(i))] = 1;
                        CHECK(std::all_of(hit.begin(), hit.end(),
                                          [](char c) { return c != 0; }));
                    }
                }
            }
        }
    }
}

TEST_CASE("rate-matching assignment is a monotone surjective step map") {
    for (int fine : {4, 8, 16}) {
        for (int coarse : {2, 4}) {
            if (coarse >= fine)
                continue;
            const ScalarQuantizer qf = ScalarQuantizer::design_lloyd_max(0.0, 1.0, fine);
            const ScalarQuantizer qc = ScalarQuantizer::design_lloyd_max(0.0, 1.0, coarse);
            const IndexAssignment m = rate_matching_assignment(qf, qc);
            CHECK(m.input_size() == fine);
            CHECK(m.output_size() == coarse);
            CHECK(m.satisfies_preimage_bound());
            for (int i = 1; i < fine; ++i)
                CHECK(m(i) >= m(i - 1)); // monotone step map
        }
    }
}

TEST_CASE("at one bit the rate-matching map reproduces the coarse quantizer exactly") {
    // Even-level Lloyd-Max designs share the zero boundary, so composing the
    // fine quantizer with the map gives the same bit as quantizing coarse.
    const ScalarQuantizer q2 = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 2);
    for (int fine : {4, 8, 16}) {
        const ScalarQuantizer qf = ScalarQuantizer::design_lloyd_max(0.0, 1.0, fine);
        const IndexAssignment m = rate_matching_assignment(qf, q2);
        GaussianSampler gauss(fine);
        for (int s = 0; s < 20000; ++s) {
            const double u = gauss();
            CHECK(m(qf.quantize(u)) == q2.quantize(u));
        }
    }
}

TEST_CASE("identity assignments give zero d_d") {
    const JointPmf pmf = two_source_pmf(0.9, 4, 100000);
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 4);
    ClusterCodeDesign design{{0, 1},
                             {0, 1},
                             {IndexAssignment::identity(4), IndexAssignment::identity(4)},
                             pmf,
                             {q, q},
                             {}};
    CHECK(distortion_dd(design) == doctest::Approx(0.0).epsilon(1e-9));
    const auto [d_q, d_d, d] = total_distortion(design);
    CHECK(d_q == doctest::Approx(2 * q.mse()));
    CHECK(d == doctest::Approx(d_q + d_d));
}

TEST_CASE("all-to-one assignment collapses the estimate to the prior mean") {
    const JointPmf joint = two_source_pmf(0.5, 4, 200000);
    const JointPmf pmf = joint.marginalize(std::vector<int>{0});
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 4);
    ClusterCodeDesign design{{0},
                             {0},
                             {IndexAssignment::from_map({0, 0, 0, 0})},
                             pmf,
                             {q},
                             {}};
    // d_d should equal the variance of the reconstruction levels under the pmf.
    double mean = 0.0, second = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double p = pmf.table()[static_cast<std::size_t>(i)];
        mean += p * q.level(i);
        second += p * q.level(i) * q.level(i);
    }
    CHECK(distortion_dd(design) == doctest::Approx(second - mean * mean).epsilon(1e-9));
}

TEST_CASE("engine d_d matches the brute-force definition on arbitrary maps") {
    const JointPmf pmf = two_source_pmf(0.95, 4);
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 4);
    const std::vector<ScalarQuantizer> quant{q, q};

    std::mt19937_64 rng(7);
    const auto maps = all_surjective(4, 2);
    for (int trial = 0; trial < 20; ++trial) {
        const IndexAssignment& m0 = maps[rng() % maps.size()];
        const IndexAssignment& m1 = maps[rng() % maps.size()];
        ClusterCodeDesign design{{0, 1}, {0, 1}, {m0, m1}, pmf, quant, {}};
        const double expected = naive_dd(pmf, quant, {0, 1}, {0, 1}, {m0, m1});
        CHECK(distortion_dd(design) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("engine d_d matches brute force with target outside the encoder set") {
    // Three variables; encode {1, 2}, estimate {0} (the ceo shape).
    Eigen::MatrixXd r(3, 3);
    r << 1.0, 0.9, 0.9, 0.9, 1.0, 0.81, 0.9, 0.81, 1.0;
    const CovarianceModel model(r);
    const ScalarQuantizer q8 = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 8);
    const ScalarQuantizer q4 = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 4);
    const std::vector<ScalarQuantizer> quant{q8, q4, q4};
    const std::vector<int> scope{0, 1, 2};
    const JointPmf pmf = estimate_joint_pmf(model, quant, scope, 300000, 11);

    const auto maps = all_surjective(4, 2);
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const IndexAssignment& m1 = maps[rng() % maps.size()];
        const IndexAssignment& m2 = maps[rng() % maps.size()];
        ClusterCodeDesign design{{1, 2}, {0}, {m1, m2}, pmf, quant, {}};
        const double expected = naive_dd(pmf, quant, {1, 2}, {0}, {m1, m2});
        CHECK(distortion_dd(design) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("optimizer with K = L returns the identity design") {
    const JointPmf pmf = two_source_pmf(0.9, 4, 100000);
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 4);
    const ClusterCodeDesign design =
        optimize_index_reuse(pmf, {q, q}, std::vector<int>{0, 1}, std::vector<int>{0, 1},
                             4, 4);
    CHECK(design.history.empty());
    for (const auto& m : design.assignments)
        CHECK(m.mapping() == std::vector<int>{0, 1, 2, 3});
    CHECK(distortion_dd(design) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("greedy lands within 5% of the exhaustive optimum (2 sources, L=4, K=2)") {
    const JointPmf pmf = two_source_pmf(0.95, 4);
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 4);
    const std::vector<ScalarQuantizer> quant{q, q};

    const auto maps = all_surjective(4, 2);
    double best = 1e300;
    for (const IndexAssignment& m0 : maps)
        for (const IndexAssignment& m1 : maps)
            best = std::min(best, naive_dd(pmf, quant, {0, 1}, {0, 1}, {m0, m1}));
    const double d_q = 2 * q.mse();

    const ClusterCodeDesign design =
        optimize_index_reuse(pmf, quant, std::vector<int>{0, 1}, std::vector<int>{0, 1},
                             4, 2);
    const auto [dq, dd, d] = total_distortion(design);
    CHECK(dq == doctest::Approx(d_q));
    CHECK(d <= 1.05 * (d_q + best));
}

TEST_CASE("ceo-style design runs with disjoint target and encoder sets") {
    Eigen::MatrixXd r(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            r(i, j) = i == j ? (i == 0 ? 1.0 : 1.1) : (i == 0 || j == 0 ? 1.0 : 1.0);
    const CovarianceModel model(r);
    const ScalarQuantizer q0 = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 16);
    const ScalarQuantizer qn = ScalarQuantizer::design_lloyd_max(0.0, 1.1, 4);
    std::vector<ScalarQuantizer> quant{q0, qn, qn, qn, qn};
    const std::vector<int> scope{0, 1, 2, 3, 4};
    const JointPmf pmf = estimate_joint_pmf(model, quant, scope, 200000, 5);

    const ClusterCodeDesign design = optimize_index_reuse(
        pmf, quant, std::vector<int>{1, 2, 3, 4}, std::vector<int>{0}, 4, 2);
    CHECK(design.assignments.size() == 4);
    for (const auto& m : design.assignments) {
        CHECK(m.output_size() == 2);
        CHECK(m.satisfies_preimage_bound());
    }
    CHECK(design.history.size() == 8); // 2 merges per encoder
}

TEST_CASE("history distortion is non-decreasing and invariants hold after every merge") {
    const JointPmf pmf = two_source_pmf(0.9, 8, 300000);
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 8);
    const ClusterCodeDesign design =
        optimize_index_reuse(pmf, {q, q}, std::vector<int>{0, 1}, std::vector<int>{0, 1},
                             8, 2);
    REQUIRE(design.history.size() == 12);
    for (std::size_t s = 1; s < design.history.size(); ++s)
        CHECK(design.history[s].distortion >= design.history[s - 1].distortion - 1e-12);

    // Replay the merges and check surjectivity plus the preimage bound.
    std::vector<IndexAssignment> maps(2, IndexAssignment::identity(8));
    for (const MergeStep& step : design.history) {
        const std::size_t e = step.encoder == 0 ? 0 : 1;
        maps[e] = maps[e].merged(step.a, step.b);
        CHECK(maps[e].satisfies_preimage_bound());
    }
    CHECK(maps[0].mapping() == design.assignments[0].mapping());
    CHECK(maps[1].mapping() == design.assignments[1].mapping());
}

TEST_CASE("randomized merge sequences keep surjectivity and the preimage bound") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        const int l = 2 + static_cast<int>(rng() % 15);
        IndexAssignment m = IndexAssignment::identity(l);
        while (m.output_size() > 1) {
            const int k = m.output_size();
            const int a = static_cast<int>(rng() % static_cast<unsigned>(k - 1));
            const int b = a + 1 + static_cast<int>(rng() % static_cast<unsigned>(k - 1 - a));
            m = m.merged(a, b);
            CHECK(m.satisfies_preimage_bound());
            int covered = 0;
            for (const auto& qs : m.preimages()) {
                CHECK(!qs.empty());
                covered += static_cast<int>(qs.size());
            }
            CHECK(covered == l);
        }
    }
}

TEST_CASE("decomposition is exact for a single encoder, any correlation") {
    // With T = {k} the centroid condition makes E[(U-Ut)(Uh-Ut)] vanish, so
    // d_q + d_d equals the end-to-end MSE exactly.
    const CovarianceModel model(corr2(0.0).Identity(1, 1));
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 4);
    const std::vector<ScalarQuantizer> quant{q};
    const JointPmf pmf = estimate_joint_pmf(model, quant, std::vector<int>{0}, 500000, 21);
    const ClusterCodeDesign design =
        optimize_index_reuse(pmf, quant, std::vector<int>{0}, std::vector<int>{0}, 4, 2);
    const auto [d_q, d_d, d] = total_distortion(design);

    // Per-codeword estimates from the design pmf.
    double est[2];
    {
        double mass[2] = {0, 0}, mom[2] = {0, 0};
        for (int i = 0; i < 4; ++i) {
            const std::vector<int> idx{i};
            const int w = design.assignments[0](i);
            mass[w] += pmf.at(idx);
            mom[w] += pmf.at(idx) * q.level(i);
        }
        est[0] = mom[0] / mass[0];
        est[1] = mom[1] / mass[1];
    }
    const int n_eval = 500000;
    GaussianSampler gauss(derive_seed(33, Stream::Test));
    double se_sum = 0.0, se_sq = 0.0;
    for (int s = 0; s < n_eval; ++s) {
        const double u = gauss();
        const double uhat = est[design.assignments[0](q.quantize(u))];
        const double se = (u - uhat) * (u - uhat);
        se_sum += se;
        se_sq += se * se;
    }
    const double mc = se_sum / n_eval;
    const double sigma = std::sqrt((se_sq / n_eval - mc * mc) / n_eval);
    CHECK(std::abs(d - mc) < 3.0 * sigma + 1e-4);
}

TEST_CASE("correlated pair: components match monte carlo, cross term explains the rest") {
    const double rho = 0.95;
    const CovarianceModel model(corr2(rho));
    const ScalarQuantizer q = ScalarQuantizer::design_lloyd_max(0.0, 1.0, 4);
    const std::vector<ScalarQuantizer> quant{q, q};
    const JointPmf pmf =
        estimate_joint_pmf(model, quant, std::vector<int>{0, 1}, 1000000, 17);
    const ClusterCodeDesign design =
        optimize_index_reuse(pmf, quant, std::vector<int>{0, 1}, std::vector<int>{0, 1},
                             4, 2);
    const auto [d_q, d_d, d] = total_distortion(design);

    // Exact-decoder reconstruction over fresh samples: uhat = E[utilde | w]
    // from the design pmf, plus the independent source draw.
    const int n_eval = 200000;
    const Eigen::MatrixXd u = model.sample(derive_seed(31, Stream::Test), n_eval);
    // Precompute per-codeword estimates.
    double est[2][2][2]; // [target][w0][w1]
    {
        double mass[2][2] = {{0, 0}, {0, 0}};
        double mom[2][2][2] = {{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}};
        std::vector<int> idx(2);
        for (int i0 = 0; i0 < 4; ++i0) {
            for (int i1 = 0; i1 < 4; ++i1) {
                idx[0] = i0;
                idx[1] = i1;
                const double p = pmf.at(idx);
                const int w0 = design.assignments[0](i0);
                const int w1 = design.assignments[1](i1);
                mass[w0][w1] += p;
                mom[0][w0][w1] += p * q.level(i0);
                mom[1][w0][w1] += p * q.level(i1);
            }
        }
        for (int t = 0; t < 2; ++t)
            for (int w0 = 0; w0 < 2; ++w0)
                for (int w1 = 0; w1 < 2; ++w1)
                    est[t][w0][w1] = mom[t][w0][w1] / mass[w0][w1];
    }
    double tot = 0.0, qerr = 0.0, derr = 0.0, cross = 0.0;
    for (int s = 0; s < n_eval; ++s) {
        for (int t = 0; t < 2; ++t) {
            const int i0 = q.quantize(u(0, s));
            const int i1 = q.quantize(u(1, s));
            const int w0 = design.assignments[0](i0);
            const int w1 = design.assignments[1](i1);
            const double uu = u(t, s);
            const double ut = q.level(t == 0 ? i0 : i1);
            const double uh = est[t][w0][w1];
            tot += (uu - uh) * (uu - uh);
            qerr += (uu - ut) * (uu - ut);
            derr += (uh - ut) * (uh - ut);
            cross += (ut - uu) * (uh - ut);
        }
    }
    tot /= n_eval;
    qerr /= n_eval;
    derr /= n_eval;
    cross /= n_eval;
    // Both components agree with their Monte Carlo counterparts.
    CHECK(d_q == doctest::Approx(qerr).epsilon(0.01));
    CHECK(d_d == doctest::Approx(derr).epsilon(0.02));
    // The exact end-to-end error carries the cross term on top of d_q + d_d;
    // it does not vanish for correlated sources (the additivity in the
    // analytic split is an independent-sources identity).
    CHECK(tot == doctest::Approx(qerr + derr + 2 * cross).epsilon(1e-9));
    CHECK(std::abs(d - (tot - 2 * cross)) < 0.01);
    CHECK(cross < -0.01); // materially negative at rho = 0.95
}
