#pragma once

#include <vector>

#include "derham/geometry.hpp"

namespace derham {

/// Per-tet admissible weights: eps and mu symmetric positive definite 3x3,
/// nu and kappa positive scalars. Piecewise constant per tet is the canonical
/// representation; it is closed under the pullback of piecewise-affine
/// deformations, which keeps the transformation identities exact.
struct CoefficientSet {
    std::vector<Mat3> eps;
    std::vector<Mat3> mu;
    std::vector<double> nu;
    std::vector<double> kappa;

    int num_tets() const { return static_cast<int>(nu.size()); }

    static CoefficientSet identity(int num_tets);
    static CoefficientSet constant(int num_tets, const Mat3& eps, const Mat3& mu,
                                   double nu, double kappa);

    std::vector<Mat3> mu_inv() const;

    /// Checks the admissibility invariants; throws errc::validation naming
    /// the first offending tet.
    void validate() const;
};

} // namespace derham
