#ifndef DSC_GAUSS_MODEL_HPP
#define DSC_GAUSS_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace dsc {

struct Point {
    double x;
    double y;
};

/// Sensor placement in the unit square plus the exponential correlation
/// decay rate; rho_{k,l} = exp(-beta * dist(p_k, p_l)).
struct SensorField {
    std::vector<Point> positions;
    double beta = 0.0;
};

/// Zero-mean multivariate Gaussian source model, held as a symmetric
/// positive-(semi)definite covariance matrix. Immutable after construction
/// and safe to share read-only across threads.
///
/// Construction factors the matrix once; if the Cholesky fails, a jitter of
/// 1e-10 * I is added and escalated by x10 up to 1e-6 before giving up.
class CovarianceModel {
public:
    explicit CovarianceModel(Eigen::MatrixXd matrix);

    int size() const { return static_cast<int>(matrix_.rows()); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }

    /// Lower-triangular factor of (matrix + jitter * I).
    const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
    double jitter() const { return jitter_; }

    Eigen::MatrixXd submatrix(std::span<const int> index_set) const;

    /// log |R_S| (natural log) via a Cholesky factorization of the
    /// submatrix; the empty set yields 0 (|R_empty| treated as 1).
    double log_det_submatrix(std::span<const int> index_set) const;

    /// Draws `count` vectors of the sources in `scope` (themselves jointly
    /// Gaussian with the corresponding submatrix), one per column.
    Eigen::MatrixXd sample_scope(std::span<const int> scope, std::uint64_t seed,
                                 int count) const;

    /// Full-scope sampling; columns are N(0, R) vectors.
    Eigen::MatrixXd sample(std::uint64_t seed, int count) const;

private:
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd chol_;
    double jitter_ = 0.0;
};

/// Unit-diagonal correlation model for sensors in the unit square.
CovarianceModel build_field_model(const std::vector<Point>& positions, double beta);
CovarianceModel build_field_model(const SensorField& field);

/// Uniform i.i.d. placement of n sensors in the unit square.
SensorField random_sensor_field(int n, double beta, std::uint64_t seed);

/// CEO model over (U_0, U_1, ..., U_N) with U_0 at index 0:
/// U_n = U_0 + W_n, Var(U_0) = sigma0_sq, Var(W_n) = lambda_sq.
CovarianceModel build_ceo_model(int n_encoders, double sigma0_sq, double lambda_sq);

} // namespace dsc

#endif
