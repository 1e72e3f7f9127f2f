#include "crossitr/kernels.hpp"

#include <cmath>

namespace crossitr {

void KernelSpec::validate() const {
    if (kind == KernelKind::gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
        throw ArgumentError("gaussian bandwidth must be positive and finite");
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z) {
    if (x.size() != z.size()) throw ArgumentError("kernel_eval: dimension mismatch");
    spec.validate();
    if (spec.kind == KernelKind::linear) {
        double dot = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) dot += x[j] * z[j];
        return dot;
    }
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - z[j];
        d2 += d * d;
    }
    return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
}

Matrix squared_distances(const Matrix& rows, const Matrix& cols) {
    if (rows.cols() != cols.cols()) throw ArgumentError("squared_distances: dimension mismatch");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajor a = rows;
    const RowMajor b = cols;
    const auto p = a.cols();
    Matrix out(a.rows(), b.rows());
    // Same summation order as kernel_eval.
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double* xi = a.data() + i * p;
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            const double* zj = b.data() + j * p;
            double d2 = 0.0;
            for (Eigen::Index t = 0; t < p; ++t) {
                const double d = xi[t] - zj[t];
                d2 += d * d;
            }
            out(i, j) = d2;
        }
    }
    return out;
}

Matrix gaussian_from_sq_dist(const Matrix& sq_dist, double sigma) {
    KernelSpec::gaussian(sigma).validate();
    const double denom = 2.0 * sigma * sigma;
    return sq_dist.unaryExpr([denom](double d2) { return std::exp(-d2 / denom); });
}

Matrix gram_matrix(const KernelSpec& spec, const Matrix& rows, const Matrix& cols) {
    if (rows.cols() != cols.cols()) throw ArgumentError("gram_matrix: dimension mismatch");
    spec.validate();
    if (spec.kind == KernelKind::linear) return rows * cols.transpose();
    return gaussian_from_sq_dist(squared_distances(rows, cols), spec.bandwidth);
}

Matrix gram_matrix(const KernelSpec& spec, const Matrix& points) {
    Matrix k = gram_matrix(spec, points, points);
    // Exact symmetry; the products above can differ in the last bit.
    for (Eigen::Index i = 0; i < k.rows(); ++i)
        for (Eigen::Index j = i + 1; j < k.cols(); ++j) k(j, i) = k(i, j);
    return k;
}

}  // namespace crossitr
