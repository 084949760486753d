#include "derham/eigensolve.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <random>

#include "derham/errors.hpp"

namespace derham {

namespace {

Eigen::MatrixXd restrict_dense(const SpMat& m, const std::vector<int>& rows,
                               const std::vector<int>& cols) {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(rows.size(), cols.size());
    std::vector<int> col_pos(m.cols(), -1);
    for (size_t j = 0; j < cols.size(); ++j) col_pos[cols[j]] = static_cast<int>(j);
    std::vector<int> row_pos(m.rows(), -1);
    for (size_t i = 0; i < rows.size(); ++i) row_pos[rows[i]] = static_cast<int>(i);
    for (int outer = 0; outer < m.outerSize(); ++outer)
        for (SpMat::InnerIterator it(m, outer); it; ++it) {
            const int r = row_pos[it.row()], c = col_pos[it.col()];
            if (r >= 0 && c >= 0) dense(r, c) = it.value();
        }
    return dense;
}

SpMat restrict_sparse(const SpMat& m, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
    std::vector<int> col_pos(m.cols(), -1);
    for (size_t j = 0; j < cols.size(); ++j) col_pos[cols[j]] = static_cast<int>(j);
    std::vector<int> row_pos(m.rows(), -1);
    for (size_t i = 0; i < rows.size(); ++i) row_pos[rows[i]] = static_cast<int>(i);
    std::vector<Eigen::Triplet<double>> trip;
    for (int outer = 0; outer < m.outerSize(); ++outer)
        for (SpMat::InnerIterator it(m, outer); it; ++it) {
            const int r = row_pos[it.row()], c = col_pos[it.col()];
            if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
        }
    SpMat out(rows.size(), cols.size());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

Eigen::VectorXd embed(const Eigen::VectorXd& x, const std::vector<int>& free, int full) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(full);
    for (size_t i = 0; i < free.size(); ++i) y[free[i]] = x[i];
    return y;
}

// Groups ascending eigenvalues (columns of vecs aligned) into the result's
// kernel block and distinct positive clusters.
EigenResult classify(const Eigen::VectorXd& vals, const Eigen::MatrixXd& vecs,
                     const Eigen::MatrixXd& Kf, const Eigen::MatrixXd& Mf,
                     const std::vector<int>& free, int full, const Tolerances& tol) {
    EigenResult res;
    const int n = static_cast<int>(vals.size());
    if (n == 0) return res;
    const double lam_max = vals[n - 1];
    const double zero_thresh = tol.zero_tol * std::max(lam_max, 0.0);

    int k = 0;
    while (k < n && vals[k] <= zero_thresh) ++k;
    res.kernel_dim = k;
    res.kernel_vectors.resize(full, k);
    for (int i = 0; i < k; ++i) res.kernel_vectors.col(i) = embed(vecs.col(i), free, full);

    int start = k;
    while (start < n) {
        int end = start + 1;
        while (end < n && vals[end] - vals[end - 1] <= tol.gap_tol * vals[end]) ++end;
        res.values.push_back(vals[start]);
        res.multiplicities.push_back(end - start);
        Eigen::MatrixXd block(full, end - start);
        for (int i = start; i < end; ++i) {
            block.col(i - start) = embed(vecs.col(i), free, full);
            const Eigen::VectorXd r = Kf * vecs.col(i) - vals[i] * (Mf * vecs.col(i));
            const double xnorm = std::sqrt(vecs.col(i).dot(Mf * vecs.col(i)));
            res.residuals.push_back(r.norm() / xnorm);
        }
        res.vectors.push_back(std::move(block));
        start = end;
    }
    for (double r : res.residuals) res.residual_max = std::max(res.residual_max, r);
    return res;
}

} // namespace

int EigenResult::total_positive() const {
    int n = 0;
    for (int m : multiplicities) n += m;
    return n;
}

double EigenResult::pair_value_(int flat) const {
    int i = flat;
    for (size_t c = 0; c < values.size(); ++c) {
        if (i < multiplicities[c]) return values[c];
        i -= multiplicities[c];
    }
    fail(errc::usage, "eigen index " + std::to_string(flat) + " out of range (have " +
                          std::to_string(total_positive()) + " positive pairs)");
}

Eigenpair EigenResult::pair(int flat) const {
    int i = flat;
    for (size_t c = 0; c < values.size(); ++c) {
        if (i < multiplicities[c])
            return Eigenpair{values[c], vectors[c].col(i), multiplicities[c]};
        i -= multiplicities[c];
    }
    fail(errc::usage, "eigen index " + std::to_string(flat) + " out of range (have " +
                          std::to_string(total_positive()) + " positive pairs)");
}

EigenResult solve_gevp(const SpMat& K, const SpMat& M, const std::vector<int>& free,
                       const Tolerances& tol) {
    if (free.empty()) return EigenResult{};
    const Eigen::MatrixXd Kf = restrict_dense(K, free, free);
    const Eigen::MatrixXd Mf = restrict_dense(M, free, free);

    const Eigen::LLT<Eigen::MatrixXd> llt(Mf);
    if (llt.info() != Eigen::Success)
        fail(errc::factorization, "mass matrix is not positive definite on the free DOFs");

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Kf, Mf);
    if (es.info() != Eigen::Success)
        fail(errc::factorization, "generalized eigensolve failed to converge");

    return classify(es.eigenvalues(), es.eigenvectors(), Kf, Mf, free,
                    static_cast<int>(K.rows()), tol);
}

EigenResult solve_gevp_shift_invert(const SpMat& K, const SpMat& M,
                                    const std::vector<int>& free, int want,
                                    const Tolerances& tol) {
    if (free.empty()) return EigenResult{};
    const SpMat Kf = restrict_sparse(K, free, free);
    const SpMat Mf = restrict_sparse(M, free, free);
    const int n = static_cast<int>(free.size());
    want = std::min(want, n);
    const int block = std::min(n, want + 8);

    // Negative shift keeps the factored matrix positive definite even with a
    // nontrivial kernel; the iteration then targets the smallest eigenvalues.
    double kscale = 0, mscale = 0;
    for (int i = 0; i < n; ++i) {
        kscale += Kf.coeff(i, i);
        mscale += Mf.coeff(i, i);
    }
    const double tau = std::max(kscale / mscale, 1.0) * 1e-2;
    SpMat shifted = Kf + tau * Mf;
    Eigen::SimplicialLLT<SpMat> llt(shifted);
    if (llt.info() != Eigen::Success)
        fail(errc::factorization, "shifted pencil factorization failed");

    std::mt19937 rng(0x5eed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::MatrixXd Q(n, block);
    for (int j = 0; j < block; ++j)
        for (int i = 0; i < n; ++i) Q(i, j) = unit(rng);
    const Eigen::MatrixXd Kd = Eigen::MatrixXd(Kf);
    const Eigen::MatrixXd Md = Eigen::MatrixXd(Mf);

    Eigen::VectorXd prev = Eigen::VectorXd::Constant(want, -1.0);
    Eigen::VectorXd ritz_vals;
    Eigen::MatrixXd ritz_vecs;
    for (int iter = 0; iter < 500; ++iter) {
        Eigen::MatrixXd Z = llt.solve(Md * Q);
        // M-orthonormalize the block.
        Eigen::MatrixXd S = Z.transpose() * Md * Z;
        Eigen::LLT<Eigen::MatrixXd> chol(S);
        if (chol.info() != Eigen::Success) {
            // Block became rank deficient; refresh the trailing directions.
            for (int j = block / 2; j < block; ++j)
                for (int i = 0; i < n; ++i) Z(i, j) = unit(rng);
            S = Z.transpose() * Md * Z;
            chol.compute(S);
            if (chol.info() != Eigen::Success)
                fail(errc::factorization, "subspace iteration lost rank");
        }
        const Eigen::MatrixXd L = chol.matrixL();
        Q = L.triangularView<Eigen::Lower>().solve(Z.transpose()).transpose();

        // Rayleigh-Ritz on the projected pencil.
        const Eigen::MatrixXd Kp = Q.transpose() * Kd * Q;
        const Eigen::MatrixXd Mp = Q.transpose() * Md * Q;
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> small(Kp, Mp);
        ritz_vals = small.eigenvalues();
        ritz_vecs = Q * small.eigenvectors();
        Q = ritz_vecs;

        const Eigen::VectorXd head = ritz_vals.head(want);
        const double change = (head - prev).cwiseAbs().maxCoeff() /
                              std::max(1.0, head.cwiseAbs().maxCoeff());
        prev = head;
        if (change < 1e-14 && iter >= 3) break;
    }

    return classify(ritz_vals.head(want), ritz_vecs.leftCols(want), Kd, Md, free,
                    static_cast<int>(K.rows()), tol);
}

SpMat laplace_stiffness(const DeRhamComplex& cx, const CoefficientSet& coeffs) {
    return stiffness_matrix(cx, 0, coeffs.eps);
}

SpMat laplace_mass(const DeRhamComplex& cx, const CoefficientSet& coeffs) {
    return mass_matrix(cx.mesh(), 0, coeffs.nu);
}

SpMat maxwell_stiffness(const DeRhamComplex& cx, const CoefficientSet& coeffs) {
    return stiffness_matrix(cx, 1, coeffs.mu_inv());
}

SpMat maxwell_mass(const DeRhamComplex& cx, const CoefficientSet& coeffs) {
    return mass_matrix(cx.mesh(), 1, coeffs.eps);
}

EigenResult laplace_spectrum(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                             LaplaceForm form, const Tolerances& tol) {
    EigenResult primal = solve_gevp(laplace_stiffness(cx, coeffs), laplace_mass(cx, coeffs),
                                    cx.free_dofs(0, Side::t), tol);
    if (form == LaplaceForm::primal) return primal;

    // Dual form: identical positive spectrum (the two operators share it);
    // eigenvector blocks become the dual eigenvectors in the edge basis.
    EigenResult dual = primal;
    dual.kernel_vectors.resize(cx.mesh().num_edges(), 0);
    for (int c = 0; c < primal.num_distinct(); ++c) {
        Eigen::MatrixXd block(cx.mesh().num_edges(), primal.multiplicities[c]);
        for (int i = 0; i < primal.multiplicities[c]; ++i) {
            Eigenpair p{primal.values[c], primal.vectors[c].col(i), primal.multiplicities[c]};
            block.col(i) = dual_eigenvector(cx, coeffs, 0, p, tol).vector;
        }
        dual.vectors[c] = std::move(block);
    }
    return dual;
}

EigenResult maxwell_spectrum(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                             const Tolerances& tol) {
    return solve_gevp(maxwell_stiffness(cx, coeffs), maxwell_mass(cx, coeffs),
                      cx.free_dofs(1, Side::t), tol);
}

VectorLaplacianSpectrum vector_laplacian_spectrum(const DeRhamComplex& cx,
                                                  const CoefficientSet& coeffs, double rho,
                                                  const Tolerances& tol) {
    if (!(rho > 0)) fail(errc::usage, "rho must be positive");
    VectorLaplacianSpectrum out;
    out.rho = rho;
    out.laplace = laplace_spectrum(cx, coeffs, LaplaceForm::primal, tol);
    for (auto& v : out.laplace.values) v *= rho;
    out.maxwell = maxwell_spectrum(cx, coeffs, tol);

    std::vector<std::tuple<double, Branch, int>> entries;  // value, branch, multiplicity
    for (int i = 0; i < out.laplace.num_distinct(); ++i)
        entries.emplace_back(out.laplace.values[i], Branch::laplace,
                             out.laplace.multiplicities[i]);
    for (int i = 0; i < out.maxwell.num_distinct(); ++i)
        entries.emplace_back(out.maxwell.values[i], Branch::maxwell,
                             out.maxwell.multiplicities[i]);
    std::sort(entries.begin(), entries.end());

    for (const auto& [value, branch, mult] : entries) {
        if (!out.values.empty() &&
            value - out.values.back().value <= tol.gap_tol * value) {
            auto& merged = out.values.back();
            merged.multiplicity += mult;
            for (int i = 0; i < mult; ++i) merged.constituents.emplace_back(branch, value);
        } else {
            MergedValue merged;
            merged.value = value;
            merged.multiplicity = mult;
            for (int i = 0; i < mult; ++i) merged.constituents.emplace_back(branch, value);
            out.values.push_back(std::move(merged));
        }
    }
    return out;
}

DualEigenvector dual_eigenvector(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                                 int level, const Eigenpair& pair, const Tolerances& tol) {
    if (level != 0 && level != 1)
        fail(errc::usage, "dual eigenvector level must be 0 or 1");
    if (!(pair.value > 0))
        fail(errc::invalid_input, "dual eigenvector requires a positive eigenvalue");

    const SpMat& d = cx.derivative_matrix_d(level);
    DualEigenvector out;
    out.vector = d * pair.vector / std::sqrt(pair.value);

    // Target mass norm and dual-pencil residual.
    const std::vector<int>& free_src = cx.free_dofs(level, Side::t);
    const std::vector<int>& free_tgt = cx.free_dofs(level + 1, Side::t);
    SpMat M_src = level == 0 ? mass_matrix(cx.mesh(), 0, coeffs.nu)
                             : mass_matrix(cx.mesh(), 1, coeffs.eps);
    SpMat M_tgt = level == 0 ? mass_matrix(cx.mesh(), 1, coeffs.eps)
                             : mass_matrix(cx.mesh(), 2, coeffs.mu_inv());

    const double norm = std::sqrt(out.vector.dot(M_tgt * out.vector));
    out.norm_residual = std::abs(norm - 1.0);

    // Dual pencil K' y = lambda M_tgt y with K' = M_tgt d M_src|free^{-1} d^T M_tgt.
    const Eigen::MatrixXd Msrc_f = restrict_dense(M_src, free_src, free_src);
    const Eigen::LLT<Eigen::MatrixXd> llt(Msrc_f);
    if (llt.info() != Eigen::Success)
        fail(errc::factorization, "source mass matrix is not positive definite");
    Eigen::VectorXd w = M_tgt * out.vector;
    Eigen::VectorXd dtw_f(free_src.size());
    const Eigen::VectorXd dtw = d.transpose() * w;
    for (size_t i = 0; i < free_src.size(); ++i) dtw_f[i] = dtw[free_src[i]];
    const Eigen::VectorXd solved = llt.solve(dtw_f);
    Eigen::VectorXd applied = Eigen::VectorXd::Zero(d.cols());
    for (size_t i = 0; i < free_src.size(); ++i) applied[free_src[i]] = solved[i];
    const Eigen::VectorXd Ky = M_tgt * (d * applied);
    Eigen::VectorXd resid = Ky - pair.value * w;
    double rnorm = 0;
    for (int i : free_tgt) rnorm += resid[i] * resid[i];
    out.pencil_residual = std::sqrt(rnorm) / (pair.value * norm);

    if (out.norm_residual > 1e-8)
        fail(errc::factorization, "dual eigenvector norm deviates by " +
                                      std::to_string(out.norm_residual));
    if (out.pencil_residual > 100 * tol.residual_tol)
        fail(errc::factorization, "dual pencil residual " +
                                      std::to_string(out.pencil_residual) + " too large");
    return out;
}

double rayleigh_quotient(const SpMat& K, const SpMat& M, const Eigen::VectorXd& x) {
    const double xmx = x.dot(M * x);
    if (x.norm() == 0 || xmx <= 0)
        fail(errc::invalid_input, "rayleigh quotient of a zero vector");
    return x.dot(K * x) / xmx;
}

std::string problem_name(Problem p) {
    switch (p) {
        case Problem::laplace: return "laplace";
        case Problem::laplace_dual: return "laplace-dual";
        case Problem::maxwell: return "maxwell";
        case Problem::vector_laplacian: return "vector-laplacian";
    }
    return "?";
}

Problem parse_problem(const std::string& name) {
    if (name == "laplace") return Problem::laplace;
    if (name == "laplace-dual") return Problem::laplace_dual;
    if (name == "maxwell") return Problem::maxwell;
    if (name == "vector-laplacian") return Problem::vector_laplacian;
    fail(errc::usage, "unknown problem '" + name + "'");
}

} // namespace derham
