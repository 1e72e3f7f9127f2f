#pragma once

#include <span>

#include "crossitr/data.hpp"

namespace crossitr {

enum class KernelKind { gaussian, linear };

// Gaussian: k(x, z) = exp(-|x - z|^2 / (2 bandwidth^2)). Linear: <x, z>.
struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double bandwidth = 1.0;

    static KernelSpec gaussian(double sigma) { return {KernelKind::gaussian, sigma}; }
    static KernelSpec linear() { return {KernelKind::linear, 1.0}; }

    void validate() const;
};

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z);

// Entry (i, j) = kernel_eval(spec, rows.row(i), cols.row(j)).
Matrix gram_matrix(const KernelSpec& spec, const Matrix& rows, const Matrix& cols);
Matrix gram_matrix(const KernelSpec& spec, const Matrix& points);

// Pairwise squared Euclidean distances; the Gaussian Gram for any bandwidth
// follows by gaussian_from_sq_dist. Used to sweep bandwidth grids cheaply.
Matrix squared_distances(const Matrix& rows, const Matrix& cols);
Matrix gaussian_from_sq_dist(const Matrix& sq_dist, double sigma);

}  // namespace crossitr
