#pragma once

#include <vector>

#include "derham/complex.hpp"
#include "derham/coefficients.hpp"

namespace derham {

/// Derivative weights from the shape-calculus are symmetric but possibly
/// indefinite; `signed_ok` skips the positive-definiteness check for them.
enum class WeightMode { spd, signed_ok };

/// Weighted Whitney mass matrix for q-forms, assembled per tet from exact
/// barycentric monomial integrals (all Whitney products have degree <= 2, so
/// there is no quadrature error). Scalar weights serve q in {0,3}, matrix
/// weights q in {1,2}. Full DOF size; restriction to free DOFs happens at
/// solve time.
SpMat mass_matrix(const TetMesh& mesh, int q, const std::vector<double>& weight,
                  WeightMode mode = WeightMode::spd);
SpMat mass_matrix(const TetMesh& mesh, int q, const std::vector<Mat3>& weight,
                  WeightMode mode = WeightMode::spd);

/// K_level = d_level^T * M_{level+1}(weight) * d_level. Levels 0 and 1 take a
/// matrix weight (eps resp. mu^{-1}), level 2 a scalar weight (kappa).
SpMat stiffness_matrix(const DeRhamComplex& cx, int level, const std::vector<Mat3>& weight,
                       WeightMode mode = WeightMode::spd);
SpMat stiffness_matrix(const DeRhamComplex& cx, int level, const std::vector<double>& weight,
                       WeightMode mode = WeightMode::spd);

} // namespace derham
