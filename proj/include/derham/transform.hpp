#pragma once

#include "derham/complex.hpp"
#include "derham/coefficients.hpp"

namespace derham {

/// Direction field given by one vector per mesh vertex. The piecewise-affine
/// interpolant has a constant Jacobian per tet; `jacobian[t](m,n)` is the
/// derivative of component m along coordinate n, and `divergence[t]` its
/// trace.
struct VertexField {
    std::vector<Vec3> psi;
    std::vector<Mat3> jacobian;
    std::vector<double> divergence;

    static VertexField from_values(const TetMesh& mesh, std::vector<Vec3> values);
    /// psi(x) = x
    static VertexField dilate(const TetMesh& mesh);
    /// psi(x) = direction (constant)
    static VertexField translate(const TetMesh& mesh, const Vec3& direction = Vec3(1, 0, 0));
    /// psi(x) = (x_2, 0, 0)
    static VertexField shear(const TetMesh& mesh);
    /// Deterministic smooth trigonometric field, scaled so the largest
    /// per-tet Jacobian norm is `jacobian_scale`.
    static VertexField random_smooth(const TetMesh& mesh, unsigned seed,
                                     double jacobian_scale = 0.5);

    VertexField scaled(double factor) const;

    /// JSON schema {"psi": [[x,y,z] per vertex]}.
    static VertexField load(const TetMesh& mesh, const std::string& path);
    void save(const std::string& path) const;
};

/// Piecewise-affine deformation given by displaced vertex positions on the
/// reference connectivity. Admissible: det J > 0 on every tet.
struct PwAffineMap {
    int num_vertices = 0;
    int num_tets = 0;
    std::vector<Vec3> displaced_vertices;
    std::vector<Mat3> jacobian;
    std::vector<double> det_jacobian;
    std::vector<Mat3> adj_jacobian;
};

/// Map x -> x + t psi(x). Throws errc::admissibility when any tet inverts,
/// reporting the worst tet and a guaranteed-admissible |t| estimate from the
/// singular values of the direction Jacobians.
PwAffineMap make_map(const TetMesh& mesh, const VertexField& psi, double t);

/// Deformed copy of the mesh (same connectivity, displaced coordinates).
TetMesh deformed_mesh(const TetMesh& reference, const PwAffineMap& map);

/// Matrix sending deformed-mesh Whitney DOF vectors to reference-mesh DOF
/// vectors. For simplicial maps with shared enumeration this is the identity
/// of the degree-q DOF space, returned explicitly so the transport is
/// exercised by callers.
SpMat pullback_dof_map(const TetMesh& reference, int q, const PwAffineMap& map);

/// Transported coefficients on the reference mesh:
///   eps_ref = (det J) J^{-1} eps J^{-T}   (same for mu)
///   nu_ref  = (det J) nu,  kappa_ref = (det J) kappa.
/// SPD is preserved (congruence with positive scaling).
CoefficientSet transform_coefficients(const CoefficientSet& coeffs, const PwAffineMap& map);

/// Directional derivatives of the transported coefficients at the identity,
/// per tet. Coefficients are treated as material (advected with the
/// deformation), so the coefficient fields' own directional derivatives
/// vanish; spatially fixed fields would need user-supplied derivatives and
/// are not covered here.
///   deps    = (div psi) eps - 2 sym(J_psi eps)
///   dmu_inv = -(div psi) mu^{-1} + 2 sym(mu^{-1} J_psi)
///   dnu     = (div psi) nu
///   dnu_inv = -(div psi) / nu
/// Symmetric by construction; possibly indefinite.
struct DerivativeWeights {
    std::vector<Mat3> deps;
    std::vector<Mat3> dmu_inv;
    std::vector<double> dnu;
    std::vector<double> dnu_inv;
};

DerivativeWeights coefficient_derivative(const CoefficientSet& coeffs, const VertexField& psi);

/// Checks dmu_inv = -mu^{-1} dmu mu^{-1} (dmu built like deps with mu) and
/// the scalar analogue dnu_inv = -dnu / nu^2, per tet.
struct InverseIdentityReport {
    double max_matrix_deviation = 0;
    double max_scalar_deviation = 0;
};

InverseIdentityReport inverse_identities_check(const CoefficientSet& coeffs,
                                               const VertexField& psi);

} // namespace derham
