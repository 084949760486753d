#pragma once

#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "derham/mesh.hpp"

namespace derham {

using SpMatI = Eigen::SparseMatrix<int>;
using SpMat = Eigen::SparseMatrix<double>;

enum class Side { t = 0, n = 1 };

/// Discrete de Rham complex on a tagged mesh: signed incidence matrices for
/// grad/curl/div on Whitney forms plus the DOF index sets realizing the
/// essential boundary conditions by elimination.
///
/// G is edges x vertices, C faces x edges, D tets x faces, all with entries
/// in {-1,0,+1} and C*G = 0, D*C = 0 exactly in integer arithmetic. Rows of
/// D carry the orientation sign of the tet's ascending vertex order so the
/// matrices are exactly the derivative maps of the Whitney bases.
///
/// free_dofs(q, side) lists the unconstrained DOFs for degree q: degree 0
/// excludes vertices in the closure of the tagged faces, degree 1 excludes
/// edges in that closure, degree 2 excludes the tagged faces themselves,
/// degree 3 keeps every tet. Vertices and edges on the interface between the
/// two boundary parts belong to both closures.
///
/// Immutable after build; read-shared.
class DeRhamComplex {
public:
    DeRhamComplex(TetMesh mesh, BoundaryPartition partition);

    const TetMesh& mesh() const { return mesh_; }
    const BoundaryPartition& partition() const { return partition_; }

    const SpMatI& grad() const { return d_[0]; }
    const SpMatI& curl() const { return d_[1]; }
    const SpMatI& div() const { return d_[2]; }

    /// Incidence matrix d_q for q in {0,1,2}; out of range -> usage error.
    const SpMatI& derivative_matrix(int q) const;
    /// Same matrix with double entries (assembly convenience).
    const SpMat& derivative_matrix_d(int q) const;

    const std::vector<int>& free_dofs(int q, Side side) const;

    /// Writes G, C, D as `q row col value` coordinate triplets.
    void dump_operators(std::ostream& out) const;

private:
    TetMesh mesh_;
    BoundaryPartition partition_;
    std::array<SpMatI, 3> d_;
    std::array<SpMat, 3> d_double_;
    std::array<std::array<std::vector<int>, 2>, 4> free_;
};

inline DeRhamComplex build_complex(TetMesh mesh, BoundaryPartition partition) {
    return DeRhamComplex(std::move(mesh), std::move(partition));
}

} // namespace derham
