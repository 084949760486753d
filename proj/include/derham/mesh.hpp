#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "derham/geometry.hpp"

namespace derham {

/// Oriented tetrahedral mesh with canonical edge/face enumeration.
///
/// `tets` stores each element in a positively oriented vertex order. The
/// derived `edges` (ascending pairs) and `faces` (ascending triples) tables
/// are sorted lexicographically, so two constructions from the same input
/// produce identical index tables. Edges are oriented low index -> high
/// index, faces by their sorted triple; these orientations fix the signs of
/// the incidence matrices and make the Whitney degree-of-freedom maps under
/// piecewise-affine deformation the identity.
///
/// Immutable after construction; safe to share across threads read-only.
struct TetMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> tets;

    // Derived connectivity.
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> faces;
    std::vector<std::array<int, 4>> tet_sorted;   // vertices ascending
    std::vector<std::array<int, 6>> tet_edges;    // global edge ids, local order kTetEdges
    std::vector<std::array<int, 4>> tet_faces;    // global face ids, local order kTetFaces
    std::vector<std::array<int, 2>> face_tets;    // incident tets, second = -1 on boundary
    std::vector<int> boundary_faces;              // ascending face ids

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }
    int num_faces() const { return static_cast<int>(faces.size()); }
    int num_tets() const { return static_cast<int>(tets.size()); }

    /// Whitney DOF count for form degree q in {0,1,2,3}.
    int dof_count(int q) const;

    TetGeometry geometry(int tet) const {
        const auto& s = tet_sorted[tet];
        return TetGeometry::from_points(vertices[s[0]], vertices[s[1]],
                                        vertices[s[2]], vertices[s[3]]);
    }

    double tet_volume(int tet) const { return geometry(tet).volume; }
    double total_volume() const;

    Vec3 face_centroid(int face) const;
    /// Unit normal of a boundary face pointing away from its incident tet.
    Vec3 boundary_outward_normal(int face) const;

    /// Validates invariants and fills the derived tables. Throws
    /// errc::validation with the offending entity on failure.
    static TetMesh from_arrays(std::vector<Vec3> vertices,
                               std::vector<std::array<int, 4>> tets);
};

/// Two-part boundary tagging. gamma_t holds the essential side, gamma_n the
/// complement within boundary faces; both ascending.
struct BoundaryPartition {
    std::vector<int> gamma_t;
    std::vector<int> gamma_n;
};

/// Structured [0,1]^3 mesh, each of the n^3 cells split into 6 positively
/// oriented tets sharing the main diagonal (Kuhn split). (n+1)^3 vertices,
/// 6 n^3 tets.
TetMesh generate_cube_mesh(int n);

/// Predicate receives the face centroid and the unit outward normal.
using FaceSelector = std::function<bool(const Vec3& centroid, const Vec3& normal)>;

BoundaryPartition tag_boundary(const TetMesh& mesh, const FaceSelector& selector);

/// Builds a partition from explicit face indices (validated against
/// boundary_faces).
BoundaryPartition make_partition(const TetMesh& mesh, std::vector<int> gamma_t);

/// Named selector specs: "all", "none", or a comma-separated union of the
/// axis-plane tokens x0,x1,y0,y1,z0,z1 (e.g. "z0,z1"). Throws errc::usage on
/// unknown tokens.
BoundaryPartition tag_boundary_spec(const TetMesh& mesh, const std::string& spec);

/// JSON schema:
///   {"vertices": [[x,y,z],...], "tets": [[i,j,k,l],...],
///    "gamma_t_faces": [[a,b,c],...]}
/// with 0-based indices; gamma_t faces are matched after sorting the triple.
/// A missing gamma_t_faces key defaults to an empty gamma_t.
struct MeshFile {
    TetMesh mesh;
    BoundaryPartition partition;
};

MeshFile load_mesh(const std::string& path);
void save_mesh(const TetMesh& mesh, const BoundaryPartition& partition,
               const std::string& path);

} // namespace derham
