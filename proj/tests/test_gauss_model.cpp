#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dsc/errors.hpp"
#include "dsc/gauss_model.hpp"
#include "dsc/rng.hpp"

using namespace dsc;

TEST_CASE("field model: zero distance and beta limits") {
    const std::vector<Point> pts{{0.2, 0.2}, {0.2, 0.2}, {0.7, 0.5}};
    const CovarianceModel m = build_field_model(pts, 1.5);
    CHECK(m.matrix()(0, 1) == doctest::Approx(1.0)); // coincident sensors
    CHECK(m.matrix()(0, 0) == 1.0);

    // beta = 0 gives the all-ones matrix; construction survives via jitter.
    const CovarianceModel ones = build_field_model(pts, 0.0);
    CHECK(ones.matrix()(0, 2) == 1.0);
    CHECK(ones.jitter() > 0.0);
}

TEST_CASE("field model: rho = exp(-beta d)") {
    const std::vector<Point> pts{{0.0, 0.0}, {1.0, 0.0}};
    const CovarianceModel m = build_field_model(pts, 2.0);
    CHECK(m.matrix()(0, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("field model rejects bad input") {
    CHECK_THROWS_AS(build_field_model({}, 1.0), NumericalError);
    CHECK_THROWS_AS(build_field_model({{0.0, std::nan("")}}, 1.0), NumericalError);
    CHECK_THROWS_AS(build_field_model({{0.0, 0.0}}, -1.0), NumericalError);
}

TEST_CASE("ceo model covariance structure") {
    const CovarianceModel m = build_ceo_model(3, 1.0, 0.1);
    CHECK(m.size() == 4);
    CHECK(m.matrix()(0, 0) == doctest::Approx(1.0));
    CHECK(m.matrix()(1, 1) == doctest::Approx(1.1));
    CHECK(m.matrix()(0, 2) == doctest::Approx(1.0));
    CHECK(m.matrix()(1, 3) == doctest::Approx(1.0));
    // Corr(U_n, U_0) = sigma0^2 / sqrt(sigma0^2 (sigma0^2 + lambda^2))
    const double corr = m.matrix()(0, 1) / std::sqrt(m.matrix()(0, 0) * m.matrix()(1, 1));
    CHECK(corr == doctest::Approx(1.0 / std::sqrt(1.1)).epsilon(1e-12));
}

TEST_CASE("ceo model: noise-dominated limit and 2x2 determinant") {
    const CovarianceModel noisy = build_ceo_model(2, 1.0, 1e6);
    const double corr =
        noisy.matrix()(0, 1) / std::sqrt(noisy.matrix()(0, 0) * noisy.matrix()(1, 1));
    CHECK(corr < 1e-2);

    const CovarianceModel small = build_ceo_model(1, 1.0, 0.1);
    CHECK(std::exp(small.log_det_submatrix(std::vector<int>{0, 1})) ==
          doctest::Approx(1.0 * 0.1).epsilon(1e-9));
}

TEST_CASE("ceo model rejects non-positive variances") {
    CHECK_THROWS_AS(build_ceo_model(2, 0.0, 0.1), NumericalError);
    CHECK_THROWS_AS(build_ceo_model(2, 1.0, -0.5), NumericalError);
    CHECK_THROWS_AS(build_ceo_model(0, 1.0, 0.1), NumericalError);
}

TEST_CASE("sampling: batch of zero, determinism, empirical correlation") {
    Eigen::MatrixXd r(2, 2);
    r << 1.0, 0.9, 0.9, 1.0;
    const CovarianceModel m(r);

    CHECK(m.sample(1, 0).cols() == 0);

    const Eigen::MatrixXd a = m.sample(42, 1000);
    const Eigen::MatrixXd b = m.sample(42, 1000);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0); // bit-identical

    const int n = 1000000;
    const Eigen::MatrixXd s = m.sample(7, n);
    const double c01 = (s.row(0).array() * s.row(1).array()).mean();
    CHECK(std::abs(c01 - 0.9) < 0.01);
    CHECK(std::abs(s.row(0).array().square().mean() - 1.0) < 0.01);

    const CovarianceModel id(Eigen::MatrixXd::Identity(2, 2));
    const Eigen::MatrixXd si = id.sample(7, n);
    CHECK(std::abs((si.row(0).array() * si.row(1).array()).mean()) < 0.01);
}

TEST_CASE("sample covariance converges entrywise") {
    const std::vector<Point> pts{{0.1, 0.1}, {0.3, 0.8}, {0.9, 0.2}, {0.5, 0.5}};
    const CovarianceModel m = build_field_model(pts, 1.0);
    const int n = 1000000;
    const Eigen::MatrixXd s = m.sample(15, n);
    const Eigen::MatrixXd cov = s * s.transpose() / n;
    CHECK((cov - m.matrix()).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("log-det: identity, closed-form 2x2, empty set") {
    const CovarianceModel id(Eigen::MatrixXd::Identity(5, 5));
    CHECK(id.log_det_submatrix(std::vector<int>{0, 2, 4}) == doctest::Approx(0.0));
    CHECK(id.log_det_submatrix(std::vector<int>{}) == 0.0);

    Eigen::MatrixXd r(3, 3);
    const double rho = 0.6;
    r << 1, rho, 0, rho, 1, 0, 0, 0, 1;
    const CovarianceModel m(r);
    CHECK(m.log_det_submatrix(std::vector<int>{0, 1}) ==
          doctest::Approx(std::log(1 - rho * rho)).epsilon(1e-12));
}

TEST_CASE("log-det is permutation invariant") {
    const std::vector<Point> pts{{0.1, 0.2}, {0.4, 0.9}, {0.8, 0.3}, {0.2, 0.6}, {0.6, 0.6}};
    const CovarianceModel m = build_field_model(pts, 0.8);
    const double a = m.log_det_submatrix(std::vector<int>{0, 2, 4});
    const double b = m.log_det_submatrix(std::vector<int>{4, 0, 2});
    const double c = m.log_det_submatrix(std::vector<int>{2, 4, 0});
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(a == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("hadamard-fischer: log|R_S| <= log|R_B| + log|R_{S\\B}|") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 5);
        std::vector<Point> pts;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int i = 0; i < n; ++i)
            pts.push_back({unif(rng), unif(rng)});
        const CovarianceModel m = build_field_model(pts, 0.5 + unif(rng) * 2.0);

        std::vector<int> s, b, rest;
        for (int i = 0; i < n; ++i)
            if (rng() % 2)
                s.push_back(i);
        if (s.size() < 2)
            continue;
        for (int i : s)
            (rng() % 2 ? b : rest).push_back(i);
        if (b.empty() || rest.empty())
            continue;
        const double whole = m.log_det_submatrix(s);
        const double parts = m.log_det_submatrix(b) + m.log_det_submatrix(rest);
        CHECK(whole <= parts + 1e-9);
    }
}

TEST_CASE("invalid submatrix indices are rejected") {
    const CovarianceModel id(Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS(id.log_det_submatrix(std::vector<int>{0, 3}), NumericalError);
    CHECK_THROWS_AS(id.log_det_submatrix(std::vector<int>{-1}), NumericalError);
}

TEST_CASE("asymmetric matrices are rejected") {
    Eigen::MatrixXd r(2, 2);
    r << 1.0, 0.5, 0.3, 1.0;
    CHECK_THROWS_AS((void)CovarianceModel{r}, NumericalError);
}

TEST_CASE("random placement stays in the unit square and is seed-stable") {
    const SensorField f1 = random_sensor_field(50, 0.5, 9);
    const SensorField f2 = random_sensor_field(50, 0.5, 9);
    REQUIRE(f1.positions.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(f1.positions[i].x >= 0.0);
        CHECK(f1.positions[i].x < 1.0);
        CHECK(f1.positions[i].y >= 0.0);
        CHECK(f1.positions[i].y < 1.0);
        CHECK(f1.positions[i].x == f2.positions[i].x);
        CHECK(f1.positions[i].y == f2.positions[i].y);
    }
}
