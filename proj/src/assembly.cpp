#include "derham/assembly.hpp"

#include <Eigen/Eigenvalues>

#include "derham/errors.hpp"

namespace derham {

namespace {

void check_weight(const Mat3& w, int tet, WeightMode mode) {
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if (sym_deviation(w) > 1e-12 * scale)
        fail(errc::validation, "tet " + std::to_string(tet) + ": weight not symmetric");
    if (mode == WeightMode::spd) {
        Eigen::SelfAdjointEigenSolver<Mat3> es(w, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= 0)
            fail(errc::validation, "tet " + std::to_string(tet) + ": weight not positive definite");
    }
}

void check_weight(double w, int tet, WeightMode mode) {
    if (mode == WeightMode::spd && !(w > 0))
        fail(errc::validation, "tet " + std::to_string(tet) + ": weight not positive");
}

template <typename W>
void check_size(const TetMesh& mesh, const std::vector<W>& weight) {
    if (static_cast<int>(weight.size()) != mesh.num_tets())
        fail(errc::usage, "weight array has " + std::to_string(weight.size()) +
                              " entries for " + std::to_string(mesh.num_tets()) + " tets");
}

// integral over the tet of lambda_a * lambda_b = volume * (1 + delta_ab) / 20
double lam2(double volume, int a, int b) { return volume * (a == b ? 2.0 : 1.0) / 20.0; }

using Triplet = Eigen::Triplet<double>;

SpMat from_triplets(int n, std::vector<Triplet>& trip) {
    SpMat m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.prune(0.0);
    return m;
}

} // namespace

SpMat mass_matrix(const TetMesh& mesh, int q, const std::vector<double>& weight,
                  WeightMode mode) {
    if (q != 0 && q != 3)
        fail(errc::usage, "scalar weight requires q in {0,3}, got " + std::to_string(q));
    check_size(mesh, weight);

    std::vector<Triplet> trip;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        check_weight(weight[t], t, mode);
        const TetGeometry geo = mesh.geometry(t);
        if (q == 0) {
            const auto& s = mesh.tet_sorted[t];
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    trip.emplace_back(s[a], s[b], weight[t] * lam2(geo.volume, a, b));
        } else {
            // 3-form basis is the unit-mass density chi_T / |T|.
            trip.emplace_back(t, t, weight[t] / geo.volume);
        }
    }
    return from_triplets(mesh.dof_count(q), trip);
}

SpMat mass_matrix(const TetMesh& mesh, int q, const std::vector<Mat3>& weight,
                  WeightMode mode) {
    if (q != 1 && q != 2)
        fail(errc::usage, "matrix weight requires q in {1,2}, got " + std::to_string(q));
    check_size(mesh, weight);

    std::vector<Triplet> trip;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        check_weight(weight[t], t, mode);
        const TetGeometry geo = mesh.geometry(t);
        const auto& g = geo.g;

        if (q == 1) {
            // int (w W_e) . W_f for edge pairs e=(a,b), f=(c,d):
            // W_e = lambda_a g_b - lambda_b g_a.
            double gw[4][4];
            for (int i = 0; i < 4; ++i) {
                const Vec3 wgi = weight[t] * g[i];
                for (int j = 0; j < 4; ++j) gw[i][j] = wgi.dot(g[j]);
            }
            for (int ei = 0; ei < 6; ++ei) {
                const int a = kTetEdges[ei][0], b = kTetEdges[ei][1];
                for (int ej = 0; ej < 6; ++ej) {
                    const int c = kTetEdges[ej][0], d = kTetEdges[ej][1];
                    const double v = lam2(geo.volume, a, c) * gw[b][d] -
                                     lam2(geo.volume, a, d) * gw[b][c] -
                                     lam2(geo.volume, b, c) * gw[a][d] +
                                     lam2(geo.volume, b, d) * gw[a][c];
                    trip.emplace_back(mesh.tet_edges[t][ei], mesh.tet_edges[t][ej], v);
                }
            }
        } else {
            // W_f = 2 (lambda_a g_b x g_c + lambda_b g_c x g_a + lambda_c g_a x g_b)
            // for face f=(a,b,c); store the (vertex, vector) pairs per face.
            std::array<std::array<Vec3, 3>, 4> fv;
            std::array<std::array<int, 3>, 4> fl;
            for (int fi = 0; fi < 4; ++fi) {
                const int a = kTetFaces[fi][0], b = kTetFaces[fi][1], c = kTetFaces[fi][2];
                fl[fi] = {a, b, c};
                fv[fi] = {g[b].cross(g[c]), g[c].cross(g[a]), g[a].cross(g[b])};
            }
            for (int fi = 0; fi < 4; ++fi)
                for (int fj = 0; fj < 4; ++fj) {
                    double v = 0;
                    for (int i = 0; i < 3; ++i) {
                        const Vec3 wfi = weight[t] * fv[fi][i];
                        for (int j = 0; j < 3; ++j)
                            v += 4.0 * lam2(geo.volume, fl[fi][i], fl[fj][j]) *
                                 wfi.dot(fv[fj][j]);
                    }
                    trip.emplace_back(mesh.tet_faces[t][fi], mesh.tet_faces[t][fj], v);
                }
        }
    }
    return from_triplets(mesh.dof_count(q), trip);
}

SpMat stiffness_matrix(const DeRhamComplex& cx, int level, const std::vector<Mat3>& weight,
                       WeightMode mode) {
    if (level != 0 && level != 1)
        fail(errc::usage, "matrix weight requires level in {0,1}, got " + std::to_string(level));
    const SpMat& d = cx.derivative_matrix_d(level);
    const SpMat m = mass_matrix(cx.mesh(), level + 1, weight, mode);
    return SpMat(d.transpose() * m * d).pruned();
}

SpMat stiffness_matrix(const DeRhamComplex& cx, int level, const std::vector<double>& weight,
                       WeightMode mode) {
    if (level != 2)
        fail(errc::usage, "scalar weight requires level 2, got " + std::to_string(level));
    const SpMat& d = cx.derivative_matrix_d(2);
    const SpMat m = mass_matrix(cx.mesh(), 3, weight, mode);
    return SpMat(d.transpose() * m * d).pruned();
}

} // namespace derham
