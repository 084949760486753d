#include "derham/shapederiv.hpp"

#include <Eigen/Cholesky>
#include <future>

#include "derham/errors.hpp"

namespace derham {

namespace {

void require_simple(const Eigenpair& pair) {
    if (pair.multiplicity != 1)
        fail(errc::multiplicity,
             "shape derivative requires a simple eigenvalue; cluster has multiplicity " +
                 std::to_string(pair.multiplicity));
}

double check_normalized(const Eigen::VectorXd& x, const SpMat& mass) {
    const double residual = std::abs(x.dot(mass * x) - 1.0);
    if (residual > 1e-8)
        fail(errc::normalization, "eigenvector not normalized in the mass norm (|x'Mx - 1| = " +
                                      std::to_string(residual) + ")");
    return residual;
}

bool identity_coefficients(const CoefficientSet& coeffs) {
    for (int t = 0; t < coeffs.num_tets(); ++t)
        if (coeffs.eps[t] != Mat3::Identity() || coeffs.mu[t] != Mat3::Identity() ||
            coeffs.nu[t] != 1.0)
            return false;
    return true;
}

std::vector<Mat3> symtr_weights(const VertexField& psi) {
    std::vector<Mat3> w(psi.jacobian.size());
    for (size_t t = 0; t < w.size(); ++t) w[t] = symtr(psi.jacobian[t]);
    return w;
}

struct Pencil {
    SpMat K;
    SpMat M;
};

Pencil base_pencil(const DeRhamComplex& cx, const CoefficientSet& coeffs, Problem problem) {
    switch (problem) {
        case Problem::laplace:
        case Problem::laplace_dual:
            return {laplace_stiffness(cx, coeffs), laplace_mass(cx, coeffs)};
        case Problem::maxwell:
            return {maxwell_stiffness(cx, coeffs), maxwell_mass(cx, coeffs)};
        default:
            fail(errc::usage, "no single pencil for problem '" + problem_name(problem) + "'");
    }
}

const std::vector<int>& base_free(const DeRhamComplex& cx, Problem problem) {
    return problem == Problem::maxwell ? cx.free_dofs(1, Side::t) : cx.free_dofs(0, Side::t);
}

} // namespace

ShapeDerivativeReport hadamard_laplace_primal(const DeRhamComplex& cx,
                                              const CoefficientSet& coeffs,
                                              const Eigenpair& pair, const VertexField& psi) {
    require_simple(pair);
    ShapeDerivativeReport report;
    report.problem = "laplace";
    report.lambda = pair.value;
    report.normalization_residual =
        check_normalized(pair.vector, mass_matrix(cx.mesh(), 0, coeffs.nu));

    const DerivativeWeights dw = coefficient_derivative(coeffs, psi);
    const Eigen::VectorXd grad = cx.derivative_matrix_d(0) * pair.vector;
    const SpMat m1_deps = mass_matrix(cx.mesh(), 1, dw.deps, WeightMode::signed_ok);
    const SpMat m0_dnu = mass_matrix(cx.mesh(), 0, dw.dnu, WeightMode::signed_ok);
    report.term_stiffness = grad.dot(m1_deps * grad);
    report.term_mass = -pair.value * pair.vector.dot(m0_dnu * pair.vector);
    report.dlambda = report.term_stiffness + report.term_mass;
    return report;
}

ShapeDerivativeReport hadamard_maxwell(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                                       const Eigenpair& pair, const VertexField& psi) {
    require_simple(pair);
    ShapeDerivativeReport report;
    report.problem = "maxwell";
    report.lambda = pair.value;
    report.normalization_residual =
        check_normalized(pair.vector, mass_matrix(cx.mesh(), 1, coeffs.eps));

    const DerivativeWeights dw = coefficient_derivative(coeffs, psi);
    const Eigen::VectorXd curl = cx.derivative_matrix_d(1) * pair.vector;
    const SpMat m2_dmu = mass_matrix(cx.mesh(), 2, dw.dmu_inv, WeightMode::signed_ok);
    const SpMat m1_deps = mass_matrix(cx.mesh(), 1, dw.deps, WeightMode::signed_ok);
    report.term_stiffness = curl.dot(m2_dmu * curl);
    report.term_mass = -pair.value * pair.vector.dot(m1_deps * pair.vector);
    report.dlambda = report.term_stiffness + report.term_mass;

    if (identity_coefficients(coeffs)) {
        // symtr-weight form through the dual eigenvector: lambda times
        // <(symtr J) E*, E*> + <(symtr J) E, E>.
        const Eigen::VectorXd dual = curl / std::sqrt(pair.value);
        const std::vector<Mat3> st = symtr_weights(psi);
        const SpMat m2_st = mass_matrix(cx.mesh(), 2, st, WeightMode::signed_ok);
        const SpMat m1_st = mass_matrix(cx.mesh(), 1, st, WeightMode::signed_ok);
        report.identity_form =
            pair.value * (dual.dot(m2_st * dual) + pair.vector.dot(m1_st * pair.vector));
        report.has_identity_form = true;
        const double dev = std::abs(report.identity_form - report.dlambda);
        if (dev > 1e-11 * std::max(std::abs(report.dlambda), pair.value))
            fail(errc::factorization,
                 "identity-coefficient form deviates from the general formula by " +
                     std::to_string(dev));
    }
    return report;
}

ShapeDerivativeReport hadamard_laplace_dual(const DeRhamComplex& cx,
                                            const CoefficientSet& coeffs,
                                            const Eigenpair& dual_pair,
                                            const VertexField& psi) {
    require_simple(dual_pair);
    ShapeDerivativeReport report;
    report.problem = "laplace-dual";
    report.lambda = dual_pair.value;
    const SpMat m1_eps = mass_matrix(cx.mesh(), 1, coeffs.eps);
    report.normalization_residual = check_normalized(dual_pair.vector, m1_eps);

    // p carries the vertex DOFs of the divergence of eps H: p = M0(nu)^{-1}
    // G^T M1(eps) H, which equals sqrt(lambda) times the primal eigenvector.
    const SpMat m0 = mass_matrix(cx.mesh(), 0, coeffs.nu);
    const auto& free_v = cx.free_dofs(0, Side::t);
    Eigen::MatrixXd m0ff(free_v.size(), free_v.size());
    for (size_t i = 0; i < free_v.size(); ++i)
        for (size_t j = 0; j < free_v.size(); ++j) m0ff(i, j) = m0.coeff(free_v[i], free_v[j]);
    const Eigen::VectorXd rhs_full =
        cx.derivative_matrix_d(0).transpose() * (m1_eps * dual_pair.vector);
    Eigen::VectorXd rhs(free_v.size());
    for (size_t i = 0; i < free_v.size(); ++i) rhs[i] = rhs_full[free_v[i]];
    const Eigen::LLT<Eigen::MatrixXd> llt(m0ff);
    if (llt.info() != Eigen::Success)
        fail(errc::factorization, "vertex mass matrix not positive definite");
    const Eigen::VectorXd pf = llt.solve(rhs);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(cx.mesh().num_vertices());
    for (size_t i = 0; i < free_v.size(); ++i) p[free_v[i]] = pf[i];

    const DerivativeWeights dw = coefficient_derivative(coeffs, psi);
    // The divergence term integrates dnu_inv against (div eps H)^2 = (nu p)^2,
    // so the effective vertex weight is dnu_inv * nu^2 = -(div psi) nu.
    std::vector<double> div_weight(coeffs.num_tets());
    for (int t = 0; t < coeffs.num_tets(); ++t)
        div_weight[t] = dw.dnu_inv[t] * coeffs.nu[t] * coeffs.nu[t];
    const SpMat m0_w = mass_matrix(cx.mesh(), 0, div_weight, WeightMode::signed_ok);
    const SpMat m1_deps = mass_matrix(cx.mesh(), 1, dw.deps, WeightMode::signed_ok);

    report.term_stiffness = p.dot(m0_w * p);
    report.term_mass = dual_pair.value * dual_pair.vector.dot(m1_deps * dual_pair.vector);
    report.dlambda = report.term_stiffness + report.term_mass;
    return report;
}

DerivativePencil assemble_derivative_pencil(const DeRhamComplex& cx,
                                            const CoefficientSet& coeffs,
                                            const VertexField& psi, Problem problem) {
    const DerivativeWeights dw = coefficient_derivative(coeffs, psi);
    DerivativePencil p;
    if (problem == Problem::laplace || problem == Problem::laplace_dual) {
        p.dK = stiffness_matrix(cx, 0, dw.deps, WeightMode::signed_ok);
        p.dM = mass_matrix(cx.mesh(), 0, dw.dnu, WeightMode::signed_ok);
    } else if (problem == Problem::maxwell) {
        p.dK = stiffness_matrix(cx, 1, dw.dmu_inv, WeightMode::signed_ok);
        p.dM = mass_matrix(cx.mesh(), 1, dw.deps, WeightMode::signed_ok);
    } else {
        fail(errc::usage, "no derivative pencil for problem '" + problem_name(problem) + "'");
    }
    return p;
}

double hellmann_feynman_form(const DerivativePencil& pencil, const Eigenpair& pair) {
    return pair.vector.dot(pencil.dK * pair.vector) -
           pair.value * pair.vector.dot(pencil.dM * pair.vector);
}

namespace {

// Tracked eigenvalue at one deformation parameter: solve on the fixed mesh
// with transported coefficients, cross-check against the deformed-mesh solve,
// then follow the base eigenvector by mass-weighted overlap.
double tracked_value(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                     const VertexField& psi, double t, Problem problem,
                     const SpMat& overlap_mass, const Eigen::VectorXd& x0,
                     const Tolerances& tol) {
    const PwAffineMap map = make_map(cx.mesh(), psi, t);
    const CoefficientSet moved = transform_coefficients(coeffs, map);
    const Pencil fixed = base_pencil(cx, moved, problem);
    const auto& free = base_free(cx, problem);
    const EigenResult fixed_res = solve_gevp(fixed.K, fixed.M, free, tol);

    const DeRhamComplex deformed(deformed_mesh(cx.mesh(), map), cx.partition());
    const Pencil def = base_pencil(deformed, coeffs, problem);
    const EigenResult def_res = solve_gevp(def.K, def.M, free, tol);

    const int n_check =
        std::min({10, fixed_res.total_positive(), def_res.total_positive()});
    for (int i = 0; i < n_check; ++i) {
        const double a = fixed_res.flat_value(i), b = def_res.flat_value(i);
        if (std::abs(a - b) > 1e-10 * std::abs(a))
            fail(errc::validation, "deformed-mesh and transported-coefficient spectra "
                                   "disagree at position " +
                                       std::to_string(i) + ": " + std::to_string(a) + " vs " +
                                       std::to_string(b));
    }

    int best = -1;
    double best_score = -1;
    for (int i = 0; i < fixed_res.total_positive(); ++i) {
        const Eigenpair cand = fixed_res.pair(i);
        const double denom = std::sqrt(cand.vector.dot(overlap_mass * cand.vector));
        const double score = std::abs(cand.vector.dot(overlap_mass * x0)) / denom;
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    if (best < 0) fail(errc::tracking, "no positive eigenvalues to track at t = " + std::to_string(t));
    const Eigenpair tracked = fixed_res.pair(best);
    if (tracked.multiplicity != 1)
        fail(errc::tracking, "tracked eigenvalue collided with a neighbor at t = " +
                                 std::to_string(t) + " (cluster multiplicity " +
                                 std::to_string(tracked.multiplicity) + ")");
    return tracked.value;
}

} // namespace

ShapeDerivativeReport fd_check(Problem problem, const DeRhamComplex& cx,
                               const CoefficientSet& coeffs, const VertexField& psi,
                               const std::vector<double>& t_list, int track,
                               const Tolerances& tol, double rho, int threads) {
    if (problem == Problem::vector_laplacian) {
        // The tracked merged value belongs to one branch; differentiate there
        // and scale the laplace branch by rho.
        const VectorLaplacianSpectrum merged = vector_laplacian_spectrum(cx, coeffs, rho, tol);
        std::vector<std::pair<Branch, double>> flat;
        for (const auto& mv : merged.values)
            for (const auto& c : mv.constituents) flat.push_back(c);
        if (track < 0 || track >= static_cast<int>(flat.size()))
            fail(errc::usage, "eigen index out of range for the merged spectrum");
        const Branch branch = flat[track].first;
        int within = 0;
        for (int i = 0; i < track; ++i)
            if (flat[i].first == branch) ++within;
        const Problem sub = branch == Branch::laplace ? Problem::laplace : Problem::maxwell;
        ShapeDerivativeReport rep = fd_check(sub, cx, coeffs, psi, t_list, within, tol, 1.0,
                                             threads);
        if (branch == Branch::laplace) {
            const double s = rho;
            rep.lambda *= s;
            rep.dlambda *= s;
            rep.term_stiffness *= s;
            rep.term_mass *= s;
            if (rep.has_identity_form) rep.identity_form *= s;
            for (auto& row : rep.fd_table) {
                row.lambda_plus *= s;
                row.lambda_minus *= s;
                row.central_diff *= s;
                row.abs_err *= s;
            }
        }
        rep.problem = "vector-laplacian";
        return rep;
    }

    const Pencil base = base_pencil(cx, coeffs, problem);
    const auto& free = base_free(cx, problem);
    const EigenResult base_res = solve_gevp(base.K, base.M, free, tol);
    const Eigenpair pair0 = base_res.pair(track);

    ShapeDerivativeReport report;
    switch (problem) {
        case Problem::laplace:
            report = hadamard_laplace_primal(cx, coeffs, pair0, psi);
            break;
        case Problem::laplace_dual: {
            const DualEigenvector dual = dual_eigenvector(cx, coeffs, 0, pair0, tol);
            report = hadamard_laplace_dual(
                cx, coeffs, Eigenpair{pair0.value, dual.vector, pair0.multiplicity}, psi);
            break;
        }
        default:
            report = hadamard_maxwell(cx, coeffs, pair0, psi);
            break;
    }

    const auto eval = [&](double t) {
        return tracked_value(cx, coeffs, psi, t, problem, base.M, pair0.vector, tol);
    };

    std::vector<std::pair<double, double>> lam(t_list.size());
    if (threads > 1) {
        std::vector<std::future<std::pair<double, double>>> futures;
        for (double t : t_list)
            futures.push_back(std::async(std::launch::async, [&eval, t] {
                return std::make_pair(eval(t), eval(-t));
            }));
        for (size_t i = 0; i < futures.size(); ++i) lam[i] = futures[i].get();
    } else {
        for (size_t i = 0; i < t_list.size(); ++i) lam[i] = {eval(t_list[i]), eval(-t_list[i])};
    }

    for (size_t i = 0; i < t_list.size(); ++i) {
        FdRow row;
        row.t = t_list[i];
        row.lambda_plus = lam[i].first;
        row.lambda_minus = lam[i].second;
        row.central_diff = (row.lambda_plus - row.lambda_minus) / (2.0 * row.t);
        row.abs_err = std::abs(row.central_diff - report.dlambda);
        report.fd_table.push_back(row);
    }
    return report;
}

} // namespace derham
