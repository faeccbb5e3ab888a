#pragma once

#include <vector>

namespace watvec::testing {

struct EigenDecomposition {
    std::vector<double> values;                // descending
    std::vector<std::vector<double>> vectors;  // vectors[k] matches values[k]
};

// Full symmetric eigendecomposition by cyclic Jacobi rotations; the
// brute-force oracle the 2-component PCA is checked against.
EigenDecomposition jacobi_eigen(std::vector<std::vector<double>> a);

}  // namespace watvec::testing
