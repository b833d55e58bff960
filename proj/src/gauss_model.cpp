#include "dsc/gauss_model.hpp"

#include <cmath>
#include <string>

#include "dsc/errors.hpp"
#include "dsc/rng.hpp"

namespace dsc {

namespace {

// Cholesky with escalating jitter: 1e-10 * I, x10 per retry, up to 1e-6.
// Returns the lower factor and the jitter actually used.
std::pair<Eigen::MatrixXd, double> jittered_cholesky(const Eigen::MatrixXd& m,
                                                     const char* what) {
    double jitter = 0.0;
    for (;;) {
        Eigen::MatrixXd work = m;
        if (jitter > 0.0)
            work.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(work);
        if (llt.info() == Eigen::Success)
            return {Eigen::MatrixXd(llt.matrixL()), jitter};
        if (jitter == 0.0)
            jitter = 1e-10;
        else if (jitter < 1e-6)
            jitter *= 10.0;
        else
            throw NumericalError(std::string(what) +
                                 ": matrix not positive definite after max jitter 1e-6");
    }
}

} // namespace

CovarianceModel::CovarianceModel(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() < 1 || matrix_.rows() != matrix_.cols())
        throw NumericalError("gauss_model: covariance matrix must be square, N >= 1");
    if (!matrix_.allFinite())
        throw NumericalError("gauss_model: covariance matrix has non-finite entries");
    if (!matrix_.isApprox(matrix_.transpose(), 1e-12))
        throw NumericalError("gauss_model: covariance matrix not symmetric");
    auto [l, jit] = jittered_cholesky(matrix_, "gauss_model");
    chol_ = std::move(l);
    jitter_ = jit;
}

Eigen::MatrixXd CovarianceModel::submatrix(std::span<const int> index_set) const {
    Eigen::MatrixXd sub(index_set.size(), index_set.size());
    for (std::size_t r = 0; r < index_set.size(); ++r) {
        for (std::size_t c = 0; c < index_set.size(); ++c) {
            const int i = index_set[r];
            const int j = index_set[c];
            if (i < 0 || i >= size() || j < 0 || j >= size())
                throw NumericalError("gauss_model: submatrix index out of range");
            sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = matrix_(i, j);
        }
    }
    return sub;
}

double CovarianceModel::log_det_submatrix(std::span<const int> index_set) const {
    if (index_set.empty())
        return 0.0;
    auto [l, jit] = jittered_cholesky(submatrix(index_set), "log_det_submatrix");
    (void)jit;
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i)
        log_det += 2.0 * std::log(l(i, i));
    return log_det;
}

Eigen::MatrixXd CovarianceModel::sample_scope(std::span<const int> scope,
                                              std::uint64_t seed, int count) const {
    if (count < 0)
        throw NumericalError("sample: negative count");
    const auto dim = static_cast<Eigen::Index>(scope.size());
    Eigen::MatrixXd out(dim, count);
    if (count == 0 || dim == 0)
        return out;

    Eigen::MatrixXd factor;
    if (scope.size() == static_cast<std::size_t>(size())) {
        bool identity_scope = true;
        for (std::size_t k = 0; k < scope.size(); ++k)
            identity_scope = identity_scope && scope[k] == static_cast<int>(k);
        if (identity_scope)
            factor = chol_;
    }
    if (factor.size() == 0)
        factor = jittered_cholesky(submatrix(scope), "sample").first;

    GaussianSampler gauss(seed);
    Eigen::VectorXd z(dim);
    for (int s = 0; s < count; ++s) {
        for (Eigen::Index i = 0; i < dim; ++i)
            z(i) = gauss();
        out.col(s) = factor.template triangularView<Eigen::Lower>() * z;
    }
    return out;
}

Eigen::MatrixXd CovarianceModel::sample(std::uint64_t seed, int count) const {
    std::vector<int> all(static_cast<std::size_t>(size()));
    for (int i = 0; i < size(); ++i)
        all[static_cast<std::size_t>(i)] = i;
    return sample_scope(all, seed, count);
}

CovarianceModel build_field_model(const std::vector<Point>& positions, double beta) {
    const auto n = static_cast<Eigen::Index>(positions.size());
    if (n < 1)
        throw NumericalError("build_field_model: need at least one sensor");
    if (!(beta >= 0.0))
        throw NumericalError("build_field_model: beta must be >= 0");
    for (const Point& p : positions)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw NumericalError("build_field_model: non-finite coordinates");

    Eigen::MatrixXd r(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        r(k, k) = 1.0;
        for (Eigen::Index l = k + 1; l < n; ++l) {
            const double dx = positions[static_cast<std::size_t>(k)].x -
                              positions[static_cast<std::size_t>(l)].x;
            const double dy = positions[static_cast<std::size_t>(k)].y -
                              positions[static_cast<std::size_t>(l)].y;
            const double rho = std::exp(-beta * std::sqrt(dx * dx + dy * dy));
            r(k, l) = rho;
            r(l, k) = rho;
        }
    }
    return CovarianceModel(std::move(r));
}

CovarianceModel build_field_model(const SensorField& field) {
    return build_field_model(field.positions, field.beta);
}

SensorField random_sensor_field(int n, double beta, std::uint64_t seed) {
    if (n < 1)
        throw NumericalError("random_sensor_field: need at least one sensor");
    SensorField field;
    field.beta = beta;
    field.positions.reserve(static_cast<std::size_t>(n));
    auto eng = make_engine(derive_seed(seed, Stream::Placement));
    for (int i = 0; i < n; ++i) {
        const double x = uniform01(eng);
        const double y = uniform01(eng);
        field.positions.push_back({x, y});
    }
    return field;
}

CovarianceModel build_ceo_model(int n_encoders, double sigma0_sq, double lambda_sq) {
    if (n_encoders < 1)
        throw NumericalError("build_ceo_model: need at least one encoder");
    if (!(sigma0_sq > 0.0) || !(lambda_sq > 0.0))
        throw NumericalError("build_ceo_model: variances must be positive");
    const Eigen::Index n = n_encoders + 1;
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(n, n, sigma0_sq);
    for (Eigen::Index i = 1; i < n; ++i)
        r(i, i) += lambda_sq;
    return CovarianceModel(std::move(r));
}

} // namespace dsc
