#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dsc/cluster.hpp"
#include "dsc/errors.hpp"
#include "dsc/gauss_model.hpp"

using namespace dsc;

namespace {

CovarianceModel model_from(const Eigen::MatrixXd& r) { return CovarianceModel(r); }

CovarianceModel random_field(int n, double beta, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i)
        pts.push_back({unif(rng), unif(rng)});
    return build_field_model(pts, beta);
}

} // namespace

TEST_CASE("delta kld of clusters: singleton, independent pair, correlated pair") {
    Eigen::MatrixXd r(3, 3);
    r << 1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0;
    const CovarianceModel m = model_from(r);
    CHECK(delta_kld_cluster(m, std::vector<int>{0}) == doctest::Approx(0.0));
    CHECK(delta_kld_cluster(m, std::vector<int>{0, 2}) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(delta_kld_cluster(m, std::vector<int>{0, 1}) ==
          doctest::Approx(0.5 * std::log2(0.75)).epsilon(1e-10));
    CHECK(delta_kld_cluster(m, std::vector<int>{0, 1}) ==
          doctest::Approx(-0.2075187).epsilon(1e-5));
    CHECK_THROWS_AS(delta_kld_cluster(m, std::vector<int>{}), NumericalError);
}

TEST_CASE("delta kld of merges: closed form and sign") {
    Eigen::MatrixXd r(2, 2);
    r << 1.0, 0.9, 0.9, 1.0;
    const CovarianceModel m = model_from(r);
    CHECK(delta_kld_merge(m, std::vector<int>{0}, std::vector<int>{1}) ==
          doctest::Approx(0.5 * std::log2(1 - 0.81)).epsilon(1e-10));
    CHECK(delta_kld_merge(m, std::vector<int>{0}, std::vector<int>{1}) ==
          doctest::Approx(-1.19796).epsilon(1e-4));
    CHECK_THROWS_AS(delta_kld_merge(m, std::vector<int>{0}, std::vector<int>{0}),
                    NumericalError);
}

TEST_CASE("merge benefit vanishes for independent blocks") {
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(4, 4);
    r(0, 1) = r(1, 0) = 0.8;
    r(2, 3) = r(3, 2) = 0.7;
    const CovarianceModel m = model_from(r);
    CHECK(delta_kld_merge(m, std::vector<int>{0, 1}, std::vector<int>{2, 3}) ==
          doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("merge benefit is never positive on random fields") {
    std::mt19937_64 rng(3);
    const CovarianceModel m = random_field(8, 1.0, 17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> a, b;
        for (int i = 0; i < 8; ++i) {
            const auto roll = rng() % 3;
            if (roll == 0)
                a.push_back(i);
            else if (roll == 1)
                b.push_back(i);
        }
        if (a.empty() || b.empty())
            continue;
        CHECK(delta_kld_merge(m, a, b) <= 1e-9);
    }
}

TEST_CASE("two-source dendrogram is a single merge") {
    Eigen::MatrixXd r(2, 2);
    r << 1.0, 0.4, 0.4, 1.0;
    const Dendrogram d = build_dendrogram(model_from(r));
    REQUIRE(d.merges.size() == 1);
    CHECK(d.merges[0].left == 0);
    CHECK(d.merges[0].right == 1);
    CHECK(d.merges[0].id == 2);
    CHECK(d.root_id() == 2);
}

TEST_CASE("strongest pair merges first") {
    Eigen::MatrixXd r(3, 3);
    r << 1.0, 0.9, 0.1, 0.9, 1.0, 0.1, 0.1, 0.1, 1.0;
    const Dendrogram d = build_dendrogram(model_from(r));
    REQUIRE(d.merges.size() == 2);
    CHECK(d.merges[0].left == 0);
    CHECK(d.merges[0].right == 1);
}

TEST_CASE("intra-block merges precede any cross-block merge") {
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(6, 6);
    auto link = [&](int i, int j, double rho) { r(i, j) = r(j, i) = rho; };
    link(0, 1, 0.8);
    link(0, 2, 0.7);
    link(1, 2, 0.75);
    link(3, 4, 0.85);
    link(3, 5, 0.65);
    link(4, 5, 0.6);
    const Dendrogram d = build_dendrogram(model_from(r));
    REQUIRE(d.merges.size() == 5);
    // First four merges stay inside the blocks {0,1,2} and {3,4,5}.
    const std::set<int> block_a{0, 1, 2};
    auto side = [&](int leaf) { return block_a.count(leaf) ? 0 : 1; };
    std::vector<int> node_side(11, -1);
    for (int i = 0; i < 6; ++i)
        node_side[static_cast<std::size_t>(i)] = side(i);
    for (int t = 0; t < 4; ++t) {
        const auto& m = d.merges[static_cast<std::size_t>(t)];
        const int ls = node_side[static_cast<std::size_t>(m.left)];
        const int rs = node_side[static_cast<std::size_t>(m.right)];
        CHECK(ls == rs);
        node_side[static_cast<std::size_t>(m.id)] = ls;
    }
}

TEST_CASE("telescoping identity closes the full chain") {
    const CovarianceModel m = random_field(12, 1.0, 23);
    const Dendrogram d = build_dendrogram(m);
    std::vector<int> all(12);
    for (int i = 0; i < 12; ++i)
        all[static_cast<std::size_t>(i)] = i;
    double acc = -delta_kld_cluster(m, all);
    for (const auto& merge : d.merges)
        acc += merge.delta_bits;
    CHECK(std::abs(acc) < 1e-6);
}

TEST_CASE("pruning: whole tree, singletons, size bounds") {
    const CovarianceModel m = random_field(9, 0.7, 31);
    const Dendrogram d = build_dendrogram(m);

    const ClusterPlan whole = prune(d, m, 9);
    REQUIRE(whole.clusters.size() == 1);
    CHECK(whole.clusters[0].size() == 9);
    CHECK(whole.kld_bits == doctest::Approx(0.0).epsilon(1e-9));

    const ClusterPlan single = prune(d, m, 1);
    CHECK(single.clusters.size() == 9);
    std::vector<int> all(9);
    for (int i = 0; i < 9; ++i)
        all[static_cast<std::size_t>(i)] = i;
    CHECK(single.kld_bits == doctest::Approx(-delta_kld_cluster(m, all)).epsilon(1e-9));

    for (int cap = 1; cap <= 9; ++cap) {
        const ClusterPlan plan = prune(d, m, cap);
        std::set<int> seen;
        for (const auto& c : plan.clusters) {
            CHECK(static_cast<int>(c.size()) <= cap);
            CHECK(!c.empty());
            for (int id : c)
                CHECK(seen.insert(id).second);
        }
        CHECK(seen.size() == 9);
        CHECK(plan.kld_bits >= -1e-9);
    }
}

TEST_CASE("looser cap never yields more clusters") {
    const CovarianceModel m = random_field(20, 0.8, 37);
    const Dendrogram d = build_dendrogram(m);
    std::size_t previous = 100;
    for (int cap = 1; cap <= 20; ++cap) {
        const ClusterPlan plan = prune(d, m, cap);
        CHECK(plan.clusters.size() <= previous);
        previous = plan.clusters.size();
    }
}

TEST_CASE("pure-cluster kld is zero only for independent blocks") {
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(4, 4);
    r(0, 1) = r(1, 0) = 0.9;
    r(2, 3) = r(3, 2) = 0.8;
    const CovarianceModel m = model_from(r);
    const Dendrogram d = build_dendrogram(m);
    const ClusterPlan plan = prune(d, m, 2);
    REQUIRE(plan.clusters.size() == 2);
    CHECK(plan.kld_bits == doctest::Approx(0.0).epsilon(1e-9));

    const CovarianceModel coupled = random_field(4, 0.5, 41);
    const ClusterPlan p2 = prune(build_dendrogram(coupled), coupled, 2);
    CHECK(p2.kld_bits > 1e-3);
}

TEST_CASE("dendrogram dot export shows leaves and internal nodes") {
    const CovarianceModel m = random_field(5, 1.0, 43);
    const Dendrogram d = build_dendrogram(m);
    const std::string dot = dendrogram_dot(d, m);
    for (int i = 0; i < 5; ++i)
        CHECK(dot.find("u" + std::to_string(i)) != std::string::npos);
    CHECK(std::count(dot.begin(), dot.end(), '\n') > 10);
    CHECK(dot.find("bit") != std::string::npos);
}

TEST_CASE("single source degenerates gracefully") {
    const CovarianceModel m(Eigen::MatrixXd::Identity(1, 1));
    const Dendrogram d = build_dendrogram(m);
    CHECK(d.merges.empty());
    CHECK(d.root_id() == 0);
    const ClusterPlan plan = prune(d, m, 3);
    REQUIRE(plan.clusters.size() == 1);
    CHECK(plan.clusters[0] == std::vector<int>{0});
}
