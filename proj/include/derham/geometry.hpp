#pragma once

#include <Eigen/Dense>
#include <array>

namespace derham {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Affine geometry of a single tetrahedron, taken over its vertices in
// ascending global order. All Whitney basis evaluations and the incidence
// sign conventions are expressed in this sorted frame, so quantities derived
// here are identical no matter which incident tet computes them.
struct TetGeometry {
    std::array<Vec3, 4> p;  // sorted-order vertex positions
    std::array<Vec3, 4> g;  // barycentric gradients, sum to zero
    double volume;          // unsigned
    double sigma;           // +1 if the sorted order is positively oriented, else -1

    static TetGeometry from_points(const Vec3& p0, const Vec3& p1,
                                   const Vec3& p2, const Vec3& p3) {
        TetGeometry t;
        t.p = {p0, p1, p2, p3};
        Mat3 edge;
        edge.col(0) = p1 - p0;
        edge.col(1) = p2 - p0;
        edge.col(2) = p3 - p0;
        const double det = edge.determinant();
        t.sigma = det >= 0 ? 1.0 : -1.0;
        t.volume = std::abs(det) / 6.0;
        const Mat3 inv = edge.inverse();  // rows are g1, g2, g3
        for (int i = 0; i < 3; ++i) t.g[i + 1] = inv.row(i).transpose();
        t.g[0] = -(t.g[1] + t.g[2] + t.g[3]);
        return t;
    }

    Vec3 centroid() const { return (p[0] + p[1] + p[2] + p[3]) / 4.0; }

    std::array<double, 4> barycentric(const Vec3& x) const {
        std::array<double, 4> lam;
        for (int i = 1; i < 4; ++i) lam[i] = g[i].dot(x - p[0]);
        lam[0] = 1.0 - lam[1] - lam[2] - lam[3];
        return lam;
    }
};

// Local sub-simplex tables in the sorted frame. Edges are the six ascending
// pairs, faces the four triples listed by omitted vertex (the combinatorial
// boundary order).
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges = {{
    {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3},
}};

inline constexpr std::array<std::array<int, 3>, 4> kTetFaces = {{
    {1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2},
}};

inline double sym_deviation(const Mat3& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

inline Mat3 sym_part(const Mat3& m) { return 0.5 * (m + m.transpose()); }

// 2 sym M - (tr M) id, the weight of the identity-coefficient derivative
// formulas.
inline Mat3 symtr(const Mat3& m) {
    return m + m.transpose() - m.trace() * Mat3::Identity();
}

} // namespace derham
