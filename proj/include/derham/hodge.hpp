#pragma once

#include "derham/assembly.hpp"

namespace derham {

/// Three-way M1(eps)-orthogonal split of a 1-form DOF vector:
///   x = x_grad + x_harm + x_curl
/// with x_grad in range(G|free), x_harm in the discrete cohomology space, and
/// x_curl in the orthogonal complement of ker(C|free).
struct HodgeSplit {
    Eigen::VectorXd x;
    Eigen::VectorXd x_grad;
    Eigen::VectorXd x_harm;
    Eigen::VectorXd x_curl;
    double norm_x = 0;  // all norms in M1(eps)
    double norm_grad = 0;
    double norm_harm = 0;
    double norm_curl = 0;
    double orthogonality_max = 0;  // largest pairwise inner product over ||x||^2
};

/// dim( ker(C|free) intersect M1(eps)-orthogonal complement of range(G|free) ),
/// computed by rank arithmetic on the incidence matrices (the dimension is
/// topological, so the weight does not enter the count).
int cohomology_dim(const DeRhamComplex& cx, const CoefficientSet& coeffs);

/// M1(eps)-orthonormal basis of the discrete cohomology space on the free
/// 1-form DOFs (full DOF size columns; empty for trivial topology).
Eigen::MatrixXd cohomology_basis(const DeRhamComplex& cx, const CoefficientSet& coeffs);

/// Decomposes x (full edge size, supported on the free DOFs). The gradient
/// part solves G^T M1(eps) G p = G^T M1(eps) x on the free vertex DOFs.
HodgeSplit helmholtz_decompose(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                               const Eigen::VectorXd& x);

} // namespace derham
