#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "derham/assembly.hpp"
#include "derham/eigensolve.hpp"
#include "derham/errors.hpp"
#include "oracles.hpp"

using namespace derham;

namespace {

TetMesh skewed_tet(std::mt19937& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const Vec3 p0(unit(rng), unit(rng), unit(rng));
    const Vec3 p1 = p0 + Vec3(1.0 + 0.3 * unit(rng), 0.4 * unit(rng), 0.4 * unit(rng));
    const Vec3 p2 = p0 + Vec3(0.4 * unit(rng), 1.0 + 0.3 * unit(rng), 0.4 * unit(rng));
    const Vec3 p3 = p0 + Vec3(0.4 * unit(rng), 0.4 * unit(rng), 1.0 + 0.3 * unit(rng));
    Mat3 edge;
    edge.col(0) = p1 - p0;
    edge.col(1) = p2 - p0;
    edge.col(2) = p3 - p0;
    std::vector<std::array<int, 4>> tets = {{0, 1, 2, 3}};
    if (edge.determinant() < 0) std::swap(tets[0][0], tets[0][1]);
    return TetMesh::from_arrays({p0, p1, p2, p3}, tets);
}

} // namespace

TEST_CASE("vertex mass on a single tet matches the barycentric formula") {
    const TetMesh mesh =
        TetMesh::from_arrays({{0, 0, 0}, {2, 0, 0}, {0, 3, 0}, {0, 0, 1}}, {{0, 1, 2, 3}});
    const double vol = mesh.tet_volume(0);
    const SpMat m0 = mass_matrix(mesh, 0, std::vector<double>{1.0});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(m0.coeff(i, j) ==
                  doctest::Approx(vol * (i == j ? 2.0 : 1.0) / 20.0).epsilon(1e-14));
}

TEST_CASE("volume mass on a single tet is 1/|T|") {
    const TetMesh mesh =
        TetMesh::from_arrays({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2, 3}});
    const SpMat m3 = mass_matrix(mesh, 3, std::vector<double>{1.0});
    CHECK(m3.coeff(0, 0) == doctest::Approx(1.0 / mesh.tet_volume(0)).epsilon(1e-14));
}

TEST_CASE("mass entries agree with the independent quadrature oracle") {
    std::mt19937 rng(7);
    const TetMesh mesh = skewed_tet(rng);
    const TetGeometry geo = mesh.geometry(0);
    const Mat3 eps = oracles::random_spd(rng);
    const double nu = 1.7;

    const SpMat m0 = mass_matrix(mesh, 0, std::vector<double>{nu});
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const double oracle = oracles::integrate_tet(geo.p, [&](const Vec3& x) {
                return nu * oracles::whitney0(geo, a, x) * oracles::whitney0(geo, b, x);
            });
            const int ga = mesh.tet_sorted[0][a], gb = mesh.tet_sorted[0][b];
            CHECK(m0.coeff(ga, gb) == doctest::Approx(oracle).epsilon(1e-13));
        }

    const SpMat m1 = mass_matrix(mesh, 1, std::vector<Mat3>{eps});
    for (int e = 0; e < 6; ++e)
        for (int f = 0; f < 6; ++f) {
            const double oracle = oracles::integrate_tet(geo.p, [&](const Vec3& x) {
                const Vec3 we = oracles::whitney1(geo, kTetEdges[e][0], kTetEdges[e][1], x);
                const Vec3 wf = oracles::whitney1(geo, kTetEdges[f][0], kTetEdges[f][1], x);
                return we.dot(eps * wf);
            });
            CHECK(m1.coeff(mesh.tet_edges[0][e], mesh.tet_edges[0][f]) ==
                  doctest::Approx(oracle).epsilon(1e-13));
        }

    const SpMat m2 = mass_matrix(mesh, 2, std::vector<Mat3>{eps});
    for (int e = 0; e < 4; ++e)
        for (int f = 0; f < 4; ++f) {
            const double oracle = oracles::integrate_tet(geo.p, [&](const Vec3& x) {
                const Vec3 we = oracles::whitney2(geo, kTetFaces[e][0], kTetFaces[e][1],
                                                  kTetFaces[e][2], x);
                const Vec3 wf = oracles::whitney2(geo, kTetFaces[f][0], kTetFaces[f][1],
                                                  kTetFaces[f][2], x);
                return we.dot(eps * wf);
            });
            CHECK(m2.coeff(mesh.tet_faces[0][e], mesh.tet_faces[0][f]) ==
                  doctest::Approx(oracle).epsilon(1e-13));
        }
}

TEST_CASE("assembled mass on a mesh equals the per-tet quadrature sums") {
    std::mt19937 rng(21);
    const TetMesh mesh = generate_cube_mesh(1);
    std::vector<Mat3> eps(mesh.num_tets());
    for (auto& m : eps) m = oracles::random_spd(rng);

    const SpMat m1 = mass_matrix(mesh, 1, eps);
    Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(mesh.num_edges(), mesh.num_edges());
    for (int t = 0; t < mesh.num_tets(); ++t) {
        const TetGeometry geo = mesh.geometry(t);
        for (int e = 0; e < 6; ++e)
            for (int f = 0; f < 6; ++f)
                oracle(mesh.tet_edges[t][e], mesh.tet_edges[t][f]) +=
                    oracles::integrate_tet(geo.p, [&](const Vec3& x) {
                        const Vec3 we =
                            oracles::whitney1(geo, kTetEdges[e][0], kTetEdges[e][1], x);
                        const Vec3 wf =
                            oracles::whitney1(geo, kTetEdges[f][0], kTetEdges[f][1], x);
                        return we.dot(eps[t] * wf);
                    });
    }
    const double scale = oracle.cwiseAbs().maxCoeff();
    CHECK((Eigen::MatrixXd(m1) - oracle).cwiseAbs().maxCoeff() <= 1e-13 * scale);
}

TEST_CASE("weight linearity is exact per entry") {
    const TetMesh mesh = generate_cube_mesh(1);
    std::mt19937 rng(3);
    std::vector<Mat3> w(mesh.num_tets());
    for (auto& m : w) m = oracles::random_spd(rng);
    std::vector<Mat3> w2(mesh.num_tets());
    for (int t = 0; t < mesh.num_tets(); ++t) w2[t] = 2.0 * w[t];

    const Eigen::MatrixXd a = Eigen::MatrixXd(mass_matrix(mesh, 1, w));
    const Eigen::MatrixXd b = Eigen::MatrixXd(mass_matrix(mesh, 1, w2));
    CHECK((b - 2.0 * a).cwiseAbs().maxCoeff() == 0.0);  // scaling by 2 is exact
}

TEST_CASE("mass matrices are positive definite for admissible weights") {
    std::mt19937 rng(11);
    const TetMesh mesh = generate_cube_mesh(2);
    std::vector<Mat3> eps(mesh.num_tets());
    for (auto& m : eps) m = oracles::random_spd(rng);
    const SpMat m1 = mass_matrix(mesh, 1, eps);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x(mesh.num_edges());
        for (int i = 0; i < x.size(); ++i) x[i] = unit(rng);
        CHECK(x.dot(m1 * x) > 0);
    }
}

TEST_CASE("indefinite weight raises an assembly error naming the tet") {
    const TetMesh mesh = generate_cube_mesh(1);
    std::vector<Mat3> eps(mesh.num_tets(), Mat3::Identity());
    eps[2] = -Mat3::Identity();
    try {
        mass_matrix(mesh, 1, eps);
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.code() == errc::validation);
        CHECK(std::string(e.what()).find("tet 2") != std::string::npos);
    }
    // Signed mode accepts the same weight.
    CHECK_NOTHROW(mass_matrix(mesh, 1, eps, WeightMode::signed_ok));
}

TEST_CASE("stiffness kernel contains the previous derivative's range") {
    const TetMesh mesh = generate_cube_mesh(2);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "none"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());

    // K0 times a constant: the gradient of constants vanishes entry by entry.
    const Eigen::VectorXd ones = Eigen::VectorXd::Constant(mesh.num_vertices(), 3.25);
    const Eigen::VectorXd g_ones = cx.derivative_matrix_d(0) * ones;
    CHECK(g_ones.cwiseAbs().maxCoeff() == 0.0);
    const SpMat k0 = stiffness_matrix(cx, 0, coeffs.eps);
    CHECK((k0 * ones).cwiseAbs().maxCoeff() <= 1e-12);

    // K1 annihilates gradients: exact zero along the factored route for
    // integer-valued potentials, rounding-level for the assembled matrix.
    Eigen::VectorXd p(mesh.num_vertices());
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> ints(-6, 6);
    for (int i = 0; i < p.size(); ++i) p[i] = ints(rng);
    const Eigen::VectorXd gp = cx.derivative_matrix_d(0) * p;
    const Eigen::VectorXd cgp = cx.derivative_matrix_d(1) * gp;
    CHECK(cgp.cwiseAbs().maxCoeff() == 0.0);
    const SpMat k1 = stiffness_matrix(cx, 1, coeffs.mu_inv());
    const double scale = Eigen::MatrixXd(k1).cwiseAbs().maxCoeff() * gp.cwiseAbs().maxCoeff();
    CHECK((k1 * gp).cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("coarse Dirichlet pencil value is the hand-derived Rayleigh quotient") {
    // One interior vertex at n=2: lambda = K_cc / M_cc with K_cc = 3 (twelve
    // incident tets with |grad hat|^2 = 4 and twelve with 8, volume 1/48
    // each) and M_cc = V_c/10 = 1/20.
    const TetMesh mesh = generate_cube_mesh(2);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const EigenResult res = laplace_spectrum(cx, coeffs);
    REQUIRE(res.num_distinct() == 1);
    CHECK(res.values[0] == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(res.multiplicities[0] == 1);
}

TEST_CASE("weight argument shape is validated") {
    const TetMesh mesh = generate_cube_mesh(1);
    CHECK_THROWS_AS(mass_matrix(mesh, 1, std::vector<double>(mesh.num_tets(), 1.0)), Error);
    CHECK_THROWS_AS(mass_matrix(mesh, 0, std::vector<Mat3>(mesh.num_tets(), Mat3::Identity())),
                    Error);
    CHECK_THROWS_AS(mass_matrix(mesh, 0, std::vector<double>(3, 1.0)), Error);
}
