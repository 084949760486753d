#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "derham/eigensolve.hpp"
#include "derham/errors.hpp"
#include "oracles.hpp"

using namespace derham;

namespace {

SpMat sparse_diag(const std::vector<double>& d) {
    SpMat m(d.size(), d.size());
    for (size_t i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
    m.makeCompressed();
    return m;
}

std::vector<int> iota(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
}

} // namespace

TEST_CASE("zero stiffness yields a pure kernel") {
    const SpMat k(5, 5);
    const SpMat m = sparse_diag({1, 1, 1, 1, 1});
    const EigenResult res = solve_gevp(k, m, iota(5));
    CHECK(res.kernel_dim == 5);
    CHECK(res.values.empty());
    CHECK(res.total_positive() == 0);
}

TEST_CASE("diagonal pencil values and multiplicities") {
    const SpMat k = sparse_diag({1, 1, 2});
    const SpMat m = sparse_diag({1, 1, 1});
    const EigenResult res = solve_gevp(k, m, iota(3));
    REQUIRE(res.values.size() == 2);
    CHECK(res.values[0] == doctest::Approx(1.0));
    CHECK(res.values[1] == doctest::Approx(2.0));
    CHECK(res.multiplicities[0] == 2);
    CHECK(res.multiplicities[1] == 1);
    CHECK(res.kernel_dim == 0);
}

TEST_CASE("empty free set yields an empty result") {
    const SpMat k = sparse_diag({1.0});
    const EigenResult res = solve_gevp(k, k, {});
    CHECK(res.kernel_dim == 0);
    CHECK(res.values.empty());
}

TEST_CASE("indefinite mass raises a factorization error") {
    const SpMat k = sparse_diag({1, 1});
    const SpMat m = sparse_diag({1, -1});
    CHECK_THROWS_AS(solve_gevp(k, m, iota(2)), Error);
}

TEST_CASE("dirichlet laplacian approaches the separation-of-variables value") {
    const TetMesh mesh = generate_cube_mesh(4);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const EigenResult res = laplace_spectrum(cx, coeffs);
    const double target = oracles::dirichlet_laplace_values(3)[0];
    // Consistent-mass Whitney P1 on the Kuhn split: +26.7% at this h.
    CHECK(std::abs(res.values[0] - target) <= 0.30 * target);
    CHECK(res.multiplicities[0] == 1);
    CHECK(res.kernel_dim == 0);
    CHECK(res.residual_max <= 1e-9);
}

TEST_CASE("neumann laplacian has the constant kernel mode") {
    const TetMesh mesh = generate_cube_mesh(3);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "none"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const EigenResult res = laplace_spectrum(cx, coeffs);
    CHECK(res.kernel_dim == 1);
    REQUIRE(res.kernel_vectors.cols() == 1);
    // The kernel vector spans the constants.
    const Eigen::VectorXd kv = res.kernel_vectors.col(0);
    CHECK((kv.array() - kv.mean()).abs().maxCoeff() <= 1e-8 * std::abs(kv.mean()));
}

TEST_CASE("pencil homogeneity in the weights") {
    const TetMesh mesh = generate_cube_mesh(2);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet one = CoefficientSet::identity(mesh.num_tets());
    const CoefficientSet four = CoefficientSet::constant(
        mesh.num_tets(), 4.0 * Mat3::Identity(), Mat3::Identity(), 1.0, 1.0);
    const EigenResult a = laplace_spectrum(cx, one);
    const EigenResult b = laplace_spectrum(cx, four);
    REQUIRE(a.values.size() == b.values.size());
    for (size_t i = 0; i < a.values.size(); ++i)
        CHECK(b.values[i] == doctest::Approx(4.0 * a.values[i]).epsilon(1e-12));

    const CoefficientSet mu4 = CoefficientSet::constant(
        mesh.num_tets(), Mat3::Identity(), 4.0 * Mat3::Identity(), 1.0, 1.0);
    const EigenResult ma = maxwell_spectrum(cx, one);
    const EigenResult mb = maxwell_spectrum(cx, mu4);
    REQUIRE(ma.values.size() == mb.values.size());
    for (size_t i = 0; i < ma.values.size(); ++i)
        CHECK(mb.values[i] == doctest::Approx(0.25 * ma.values[i]).epsilon(1e-12));
}

TEST_CASE("maxwell cavity value and kernel dimension") {
    const TetMesh mesh = generate_cube_mesh(4);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const EigenResult res = maxwell_spectrum(cx, coeffs);
    const double target = oracles::maxwell_cavity_values(2)[0];
    CHECK(std::abs(res.values[0] - target) <= 0.10 * target);
    CHECK(res.kernel_dim == static_cast<int>(cx.free_dofs(0, Side::t).size()));
    CHECK(res.residual_max <= 1e-9);

    const TetMesh two = generate_cube_mesh(2);
    const DeRhamComplex cx2(two, tag_boundary_spec(two, "all"));
    const EigenResult res2 = maxwell_spectrum(cx2, CoefficientSet::identity(two.num_tets()));
    CHECK(res2.kernel_dim == 1);
}

TEST_CASE("vector laplacian merges the two branches") {
    const TetMesh mesh = generate_cube_mesh(4);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const VectorLaplacianSpectrum spec = vector_laplacian_spectrum(cx, coeffs, 1.0);

    // Maxwell branch leads (near 2 pi^2), laplace branch follows (near 3 pi^2).
    REQUIRE(spec.values.size() >= 2);
    CHECK(spec.values[0].constituents[0].first == Branch::maxwell);
    CHECK(std::abs(spec.values[0].value - 2 * M_PI * M_PI) <= 0.10 * 2 * M_PI * M_PI);
    bool found_laplace = false;
    for (const auto& mv : spec.values) {
        for (const auto& c : mv.constituents)
            if (c.first == Branch::laplace && !found_laplace) {
                CHECK(c.second == doctest::Approx(spec.laplace.values[0]));
                found_laplace = true;
            }
        if (found_laplace) break;
    }
    CHECK(found_laplace);

    // rho scaling multiplies the laplace branch only, bitwise.
    const VectorLaplacianSpectrum tiny = vector_laplacian_spectrum(cx, coeffs, 1e-6);
    for (size_t i = 0; i < tiny.laplace.values.size(); ++i)
        CHECK(tiny.laplace.values[i] == 1e-6 * spec.laplace.values[i]);
    for (size_t i = 0; i < tiny.maxwell.values.size(); ++i)
        CHECK(tiny.maxwell.values[i] == spec.maxwell.values[i]);
}

TEST_CASE("coinciding branch values merge with summed multiplicity") {
    const TetMesh mesh = generate_cube_mesh(2);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const EigenResult lap = laplace_spectrum(cx, coeffs);
    const EigenResult mx = maxwell_spectrum(cx, coeffs);
    // Choose rho so that rho * lambda_{0,1} lands exactly on lambda_{1,1}.
    const double rho = mx.values[0] / lap.values[0];
    const VectorLaplacianSpectrum spec = vector_laplacian_spectrum(cx, coeffs, rho);
    bool merged = false;
    for (const auto& mv : spec.values) {
        bool has_l = false, has_m = false;
        for (const auto& c : mv.constituents) {
            has_l |= c.first == Branch::laplace;
            has_m |= c.first == Branch::maxwell;
        }
        if (has_l && has_m) {
            merged = true;
            CHECK(mv.multiplicity >= 2);
        }
    }
    CHECK(merged);
}

TEST_CASE("dual eigenvectors: normalization, involution, orthonormal clusters") {
    const TetMesh mesh = generate_cube_mesh(3);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const Tolerances tol;

    const EigenResult lap = laplace_spectrum(cx, coeffs);
    const SpMat m0 = laplace_mass(cx, coeffs);
    const SpMat m1 = maxwell_mass(cx, coeffs);

    const Eigenpair pair = lap.pair(0);
    const DualEigenvector dual = dual_eigenvector(cx, coeffs, 0, pair, tol);
    CHECK(dual.norm_residual <= 1e-10);
    CHECK(dual.pencil_residual <= 1e-9);

    // Applying the dual map twice returns the primal vector up to sign.
    const auto& free_v = cx.free_dofs(0, Side::t);
    Eigen::MatrixXd m0ff(free_v.size(), free_v.size());
    for (size_t i = 0; i < free_v.size(); ++i)
        for (size_t j = 0; j < free_v.size(); ++j) m0ff(i, j) = m0.coeff(free_v[i], free_v[j]);
    const Eigen::VectorXd rhs_full = cx.derivative_matrix_d(0).transpose() * (m1 * dual.vector);
    Eigen::VectorXd rhs(free_v.size());
    for (size_t i = 0; i < free_v.size(); ++i) rhs[i] = rhs_full[free_v[i]];
    const Eigen::VectorXd back_f =
        Eigen::LLT<Eigen::MatrixXd>(m0ff).solve(rhs) / std::sqrt(pair.value);
    Eigen::VectorXd back = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (size_t i = 0; i < free_v.size(); ++i) back[free_v[i]] = back_f[i];
    const double sign = back.dot(m0 * pair.vector) > 0 ? 1.0 : -1.0;
    CHECK((back - sign * pair.vector).cwiseAbs().maxCoeff() <= 1e-10);

    // A degenerate cluster maps to an orthonormal dual block.
    int cluster = -1;
    for (int c = 0; c < lap.num_distinct(); ++c)
        if (lap.multiplicities[c] >= 2) {
            cluster = c;
            break;
        }
    REQUIRE(cluster >= 0);
    const int d = lap.multiplicities[cluster];
    Eigen::MatrixXd duals(mesh.num_edges(), d);
    for (int i = 0; i < d; ++i) {
        Eigenpair p{lap.values[cluster], lap.vectors[cluster].col(i), d};
        duals.col(i) = dual_eigenvector(cx, coeffs, 0, p, tol).vector;
    }
    const Eigen::MatrixXd gram = duals.transpose() * m1 * duals;
    CHECK((gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-10);

    // Level-1 dual from a Maxwell pair, normalized in M2(mu^{-1}).
    const EigenResult mx = maxwell_spectrum(cx, coeffs);
    const DualEigenvector dual1 = dual_eigenvector(cx, coeffs, 1, mx.pair(0), tol);
    CHECK(dual1.norm_residual <= 1e-10);
    CHECK(dual1.pencil_residual <= 1e-9);

    CHECK_THROWS_AS(dual_eigenvector(cx, coeffs, 0, Eigenpair{0.0, pair.vector, 1}, tol),
                    Error);
}

TEST_CASE("laplace dual form returns the same values with edge vectors") {
    const TetMesh mesh = generate_cube_mesh(2);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const EigenResult primal = laplace_spectrum(cx, coeffs, LaplaceForm::primal);
    const EigenResult dual = laplace_spectrum(cx, coeffs, LaplaceForm::dual);
    REQUIRE(primal.values.size() == dual.values.size());
    for (size_t i = 0; i < primal.values.size(); ++i)
        CHECK(primal.values[i] == dual.values[i]);
    CHECK(dual.vectors[0].rows() == mesh.num_edges());

    // Explicit dual pencil (M1 G M0^{-1} G^T M1, M1) shares the positive spectrum.
    const SpMat m0 = laplace_mass(cx, coeffs);
    const SpMat m1 = maxwell_mass(cx, coeffs);
    const auto& free_v = cx.free_dofs(0, Side::t);
    const auto& free_e = cx.free_dofs(1, Side::t);
    Eigen::MatrixXd m0ff(free_v.size(), free_v.size());
    for (size_t i = 0; i < free_v.size(); ++i)
        for (size_t j = 0; j < free_v.size(); ++j) m0ff(i, j) = m0.coeff(free_v[i], free_v[j]);
    const Eigen::MatrixXd m1d(m1);
    const Eigen::MatrixXd gd(cx.derivative_matrix_d(0));
    Eigen::MatrixXd g_free(mesh.num_edges(), free_v.size());
    for (size_t j = 0; j < free_v.size(); ++j) g_free.col(j) = gd.col(free_v[j]);
    const Eigen::MatrixXd kd =
        m1d * g_free * m0ff.llt().solve(g_free.transpose() * m1d);
    SpMat kd_sparse = kd.sparseView();
    const EigenResult dual_direct = solve_gevp(kd_sparse, m1, free_e);
    REQUIRE(dual_direct.values.size() >= primal.values.size());
    for (size_t i = 0; i < primal.values.size(); ++i)
        CHECK(std::abs(dual_direct.values[i] - primal.values[i]) <= 1e-9 * primal.values[i]);
}

TEST_CASE("rayleigh quotient properties") {
    const TetMesh mesh = generate_cube_mesh(3);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const SpMat k = laplace_stiffness(cx, coeffs);
    const SpMat m = laplace_mass(cx, coeffs);
    const EigenResult res = solve_gevp(k, m, cx.free_dofs(0, Side::t));

    const Eigenpair pair = res.pair(0);
    CHECK(rayleigh_quotient(k, m, pair.vector) == doctest::Approx(pair.value).epsilon(1e-10));
    CHECK(rayleigh_quotient(k, m, 2.0 * pair.vector) ==
          doctest::Approx(pair.value).epsilon(1e-12));

    // Min property over the free DOFs (the kernel is empty here).
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(mesh.num_vertices());
        for (int v : cx.free_dofs(0, Side::t)) x[v] = unit(rng);
        CHECK(rayleigh_quotient(k, m, x) >= res.values[0] - 1e-10);
    }

    CHECK_THROWS_AS(rayleigh_quotient(k, m, Eigen::VectorXd::Zero(mesh.num_vertices())),
                    Error);
}

TEST_CASE("friedrichs-poincare bound on the kernel complement") {
    const TetMesh mesh = generate_cube_mesh(2);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const SpMat k = maxwell_stiffness(cx, coeffs);
    const SpMat m = maxwell_mass(cx, coeffs);
    const EigenResult res = solve_gevp(k, m, cx.free_dofs(1, Side::t));
    REQUIRE(res.kernel_dim >= 1);

    std::mt19937 rng(23);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(mesh.num_edges());
        for (int e : cx.free_dofs(1, Side::t)) x[e] = unit(rng);
        for (int i = 0; i < res.kernel_dim; ++i) {
            const Eigen::VectorXd kv = res.kernel_vectors.col(i);
            x -= kv * (kv.dot(m * x));
        }
        const double xmx = x.dot(m * x);
        const double xkx = x.dot(k * x);
        CHECK(xmx <= xkx / res.values[0] * (1 + 1e-10) + 1e-14);
    }
}

TEST_CASE("shift-invert path agrees with the dense reference") {
    const TetMesh mesh = generate_cube_mesh(2);
    const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
    const CoefficientSet coeffs = CoefficientSet::identity(mesh.num_tets());
    const SpMat k = maxwell_stiffness(cx, coeffs);
    const SpMat m = maxwell_mass(cx, coeffs);
    const auto& free = cx.free_dofs(1, Side::t);

    const EigenResult dense = solve_gevp(k, m, free);
    const EigenResult si = solve_gevp_shift_invert(k, m, free, 6);
    CHECK(si.kernel_dim == dense.kernel_dim);
    int checked = 0;
    for (int i = 0; i < si.total_positive() && checked < 4; ++i, ++checked)
        CHECK(std::abs(si.flat_value(i) - dense.flat_value(i)) <= 1e-9 * dense.flat_value(i));
    CHECK(checked >= 3);
}

TEST_CASE("residuals stay below tolerance on finer meshes") {
    {
        const TetMesh mesh = generate_cube_mesh(6);
        const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
        const EigenResult res =
            laplace_spectrum(cx, CoefficientSet::identity(mesh.num_tets()));
        CHECK(res.residual_max <= 1e-9);
    }
    {
        const TetMesh mesh = generate_cube_mesh(5);
        const DeRhamComplex cx(mesh, tag_boundary_spec(mesh, "all"));
        const EigenResult res =
            maxwell_spectrum(cx, CoefficientSet::identity(mesh.num_tets()));
        CHECK(res.residual_max <= 1e-9);
    }
}

TEST_CASE("pair lookup validates the index") {
    const SpMat k = sparse_diag({1, 2, 3});
    const SpMat m = sparse_diag({1, 1, 1});
    const EigenResult res = solve_gevp(k, m, iota(3));
    CHECK_THROWS_AS(res.pair(3), Error);
    CHECK(res.pair(2).value == doctest::Approx(3.0));
}
