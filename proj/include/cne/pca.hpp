#pragma once

#include "cne/data_matrix.hpp"

namespace cne {

// Projects rows onto the top `dims` principal components of the
// mean-centered data. Deterministic: eigendecomposition of the D x D
// covariance, components ordered by descending eigenvalue, and each
// component's sign fixed so its largest-magnitude loading is positive.
DataMatrix pca_reduce(const DataMatrix& X, std::size_t dims);

// First d principal components rescaled so that the first embedding
// dimension has standard deviation exactly target_std.
// Throws ValidationError when the first component has zero variance.
std::vector<double> pca_init(const DataMatrix& X, std::size_t d, double target_std);

}  // namespace cne
