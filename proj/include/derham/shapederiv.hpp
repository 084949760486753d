#pragma once

#include "derham/eigensolve.hpp"
#include "derham/transform.hpp"

namespace derham {

struct FdRow {
    double t = 0;
    double lambda_plus = 0;   // tracked eigenvalue at +t
    double lambda_minus = 0;  // tracked eigenvalue at -t
    double central_diff = 0;  // (lambda(+t) - lambda(-t)) / (2 t)
    double abs_err = 0;       // |central_diff - dlambda|
};

/// Directional shape derivative of one simple eigenvalue. The two breakdown
/// terms sum to dlambda exactly. For identity coefficients the Maxwell and
/// dual Laplace reports also carry the symtr-weight form evaluated through
/// the dual eigenvector, asserted to agree with dlambda.
struct ShapeDerivativeReport {
    std::string problem;
    double lambda = 0;
    double dlambda = 0;
    double term_stiffness = 0;  // derivative-weight term on the differentiated field
    double term_mass = 0;       // -lambda * mass-weight term (sign folded in)
    double normalization_residual = 0;
    bool has_identity_form = false;
    double identity_form = 0;
    std::vector<FdRow> fd_table;
};

/// dlambda = (G u)^T M1(deps) (G u) - lambda u^T M0(dnu) u for an eigenpair
/// of the primal Laplace pencil, u normalized in M0(nu). Non-simple
/// eigenvalues and unnormalized inputs raise errors.
ShapeDerivativeReport hadamard_laplace_primal(const DeRhamComplex& cx,
                                              const CoefficientSet& coeffs,
                                              const Eigenpair& pair, const VertexField& psi);

/// dlambda = (C E)^T M2(dmu_inv) (C E) - lambda E^T M1(deps) E for a Maxwell
/// eigenpair, E normalized in M1(eps).
ShapeDerivativeReport hadamard_maxwell(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                                       const Eigenpair& pair, const VertexField& psi);

/// Dual-form derivative from the dual eigenvector H (edge DOFs, normalized
/// in M1(eps)): the divergence term plus lambda times the eps-weight term.
/// Agrees with the primal formula for the matching eigenvalue.
ShapeDerivativeReport hadamard_laplace_dual(const DeRhamComplex& cx,
                                            const CoefficientSet& coeffs,
                                            const Eigenpair& dual_pair,
                                            const VertexField& psi);

/// Central-difference validation sweep. For every t the eigenvalue is
/// computed twice, on the fixed mesh with transported coefficients and on
/// the deformed mesh with the original coefficients; the two spectra must
/// agree to 1e-10 relative (discrete unitary equivalence) or the sweep
/// aborts. The tracked pair is followed across t by maximal mass-weighted
/// overlap with the t = 0 eigenvector, and a cluster collision raises a
/// tracking error. `track` indexes the flattened positive pairs at t = 0.
ShapeDerivativeReport fd_check(Problem problem, const DeRhamComplex& cx,
                               const CoefficientSet& coeffs, const VertexField& psi,
                               const std::vector<double>& t_list, int track,
                               const Tolerances& tol = {}, double rho = 1.0,
                               int threads = 1);

/// Assembled derivative pencil dK, dM of the problem's matrices with respect
/// to the deformation direction.
struct DerivativePencil {
    SpMat dK;
    SpMat dM;
};

DerivativePencil assemble_derivative_pencil(const DeRhamComplex& cx,
                                            const CoefficientSet& coeffs,
                                            const VertexField& psi, Problem problem);

/// x^T (dK - lambda dM) x for an M-normalized eigenpair; equals the Hadamard
/// formula value algebraically.
double hellmann_feynman_form(const DerivativePencil& pencil, const Eigenpair& pair);

} // namespace derham
