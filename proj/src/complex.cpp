#include "derham/complex.hpp"

#include <map>
#include <ostream>
#include <set>

#include "derham/errors.hpp"

namespace derham {

namespace {

// Free DOF masks for one boundary side: drop simplices contained in the
// closure of the tagged faces (degree 0 and 1), the tagged faces themselves
// (degree 2), and nothing at degree 3.
std::array<std::vector<int>, 4> side_masks(const TetMesh& mesh,
                                           const std::vector<int>& tagged_faces) {
    std::set<int> verts;
    std::set<std::array<int, 2>> edge_keys;
    for (int f : tagged_faces) {
        const auto& tri = mesh.faces[f];
        for (int v : tri) verts.insert(v);
        edge_keys.insert({tri[0], tri[1]});
        edge_keys.insert({tri[0], tri[2]});
        edge_keys.insert({tri[1], tri[2]});
    }
    std::set<int> tagged(tagged_faces.begin(), tagged_faces.end());

    std::array<std::vector<int>, 4> free;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (!verts.count(v)) free[0].push_back(v);
    for (int e = 0; e < mesh.num_edges(); ++e)
        if (!edge_keys.count(mesh.edges[e])) free[1].push_back(e);
    for (int f = 0; f < mesh.num_faces(); ++f)
        if (!tagged.count(f)) free[2].push_back(f);
    free[3].resize(mesh.num_tets());
    for (int t = 0; t < mesh.num_tets(); ++t) free[3][t] = t;
    return free;
}

} // namespace

DeRhamComplex::DeRhamComplex(TetMesh mesh, BoundaryPartition partition)
    : mesh_(std::move(mesh)), partition_(std::move(partition)) {
    using Triplet = Eigen::Triplet<int>;

    std::vector<Triplet> tg;
    for (int e = 0; e < mesh_.num_edges(); ++e) {
        tg.emplace_back(e, mesh_.edges[e][0], -1);
        tg.emplace_back(e, mesh_.edges[e][1], +1);
    }
    d_[0].resize(mesh_.num_edges(), mesh_.num_vertices());
    d_[0].setFromTriplets(tg.begin(), tg.end());

    std::map<std::array<int, 2>, int> edge_id;
    for (int e = 0; e < mesh_.num_edges(); ++e) edge_id[mesh_.edges[e]] = e;
    std::vector<Triplet> tc;
    for (int f = 0; f < mesh_.num_faces(); ++f) {
        const auto& tri = mesh_.faces[f];  // ascending i < j < k
        tc.emplace_back(f, edge_id.at({tri[0], tri[1]}), +1);
        tc.emplace_back(f, edge_id.at({tri[1], tri[2]}), +1);
        tc.emplace_back(f, edge_id.at({tri[0], tri[2]}), -1);
    }
    d_[1].resize(mesh_.num_faces(), mesh_.num_edges());
    d_[1].setFromTriplets(tc.begin(), tc.end());

    std::vector<Triplet> td;
    for (int t = 0; t < mesh_.num_tets(); ++t) {
        const int sigma = mesh_.geometry(t).sigma > 0 ? 1 : -1;
        for (int m = 0; m < 4; ++m) {
            const int sign = (m % 2 == 0) ? sigma : -sigma;
            td.emplace_back(t, mesh_.tet_faces[t][m], sign);
        }
    }
    d_[2].resize(mesh_.num_tets(), mesh_.num_faces());
    d_[2].setFromTriplets(td.begin(), td.end());

    for (int q = 0; q < 3; ++q) d_double_[q] = d_[q].cast<double>();

    const auto mask_t = side_masks(mesh_, partition_.gamma_t);
    const auto mask_n = side_masks(mesh_, partition_.gamma_n);
    for (int q = 0; q < 4; ++q) {
        free_[q][0] = mask_t[q];
        free_[q][1] = mask_n[q];
    }
}

const SpMatI& DeRhamComplex::derivative_matrix(int q) const {
    if (q < 0 || q > 2)
        fail(errc::usage, "derivative degree must be in 0..2, got " + std::to_string(q));
    return d_[q];
}

const SpMat& DeRhamComplex::derivative_matrix_d(int q) const {
    if (q < 0 || q > 2)
        fail(errc::usage, "derivative degree must be in 0..2, got " + std::to_string(q));
    return d_double_[q];
}

const std::vector<int>& DeRhamComplex::free_dofs(int q, Side side) const {
    if (q < 0 || q > 3)
        fail(errc::usage, "form degree must be in 0..3, got " + std::to_string(q));
    return free_[q][static_cast<int>(side)];
}

void DeRhamComplex::dump_operators(std::ostream& out) const {
    for (int q = 0; q < 3; ++q)
        for (int col = 0; col < d_[q].outerSize(); ++col)
            for (SpMatI::InnerIterator it(d_[q], col); it; ++it)
                out << q << " " << it.row() << " " << it.col() << " " << it.value() << "\n";
}

} // namespace derham
