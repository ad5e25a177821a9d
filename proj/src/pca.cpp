#include "cne/pca.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace cne {
namespace {

// Scores = centered X projected on top `dims` components, sign-fixed.
Eigen::MatrixXd pca_scores(const DataMatrix& X, std::size_t dims) {
    const auto n = static_cast<Eigen::Index>(X.n);
    const auto D = static_cast<Eigen::Index>(X.D);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(
        X.values.data(), n, D);
    Eigen::MatrixXd centered = M.rowwise() - M.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / std::max<double>(1.0, double(n - 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    // eigenvalues come back ascending; take the top `dims` in descending order
    Eigen::MatrixXd components(D, static_cast<Eigen::Index>(dims));
    for (std::size_t c = 0; c < dims; ++c) {
        Eigen::VectorXd v = solver.eigenvectors().col(D - 1 - static_cast<Eigen::Index>(c));
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0) v = -v;
        components.col(static_cast<Eigen::Index>(c)) = v;
    }
    return centered * components;
}

}  // namespace

DataMatrix pca_reduce(const DataMatrix& X, std::size_t dims) {
    if (dims < 1 || dims > std::min(X.n, X.D))
        throw std::invalid_argument("pca_reduce: dims must lie in [1, min(n, D)]");
    Eigen::MatrixXd scores = pca_scores(X, dims);
    DataMatrix out;
    out.n = X.n;
    out.D = dims;
    out.labels = X.labels;
    out.values.resize(X.n * dims);
    for (std::size_t i = 0; i < X.n; ++i)
        for (std::size_t j = 0; j < dims; ++j)
            out.values[i * dims + j] =
                scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

std::vector<double> pca_init(const DataMatrix& X, std::size_t d, double target_std) {
    if (d < 1 || d > X.D) throw std::invalid_argument("pca_init: d must lie in [1, D]");
    Eigen::MatrixXd scores = pca_scores(X, d);
    // population std of the first column (the scores are already mean zero)
    const double var = scores.col(0).squaredNorm() / static_cast<double>(X.n);
    if (var <= 0.0) throw ValidationError("pca_init: first component has zero variance");
    const double scale = target_std / std::sqrt(var);
    std::vector<double> coords(X.n * d);
    for (std::size_t i = 0; i < X.n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            coords[i * d + j] =
                scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * scale;
    return coords;
}

}  // namespace cne
