#include "derham/hodge.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "derham/errors.hpp"

namespace derham {

namespace {

Eigen::MatrixXd dense_cols(const SpMatI& m, const std::vector<int>& cols) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), cols.size());
    for (size_t j = 0; j < cols.size(); ++j)
        for (SpMatI::InnerIterator it(m, cols[j]); it; ++it) out(it.row(), j) = it.value();
    return out;
}

int qr_rank(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-10);
    return static_cast<int>(qr.rank());
}

} // namespace

int cohomology_dim(const DeRhamComplex& cx, const CoefficientSet& coeffs) {
    (void)coeffs;  // dimension is independent of the admissible weight
    const auto& free_e = cx.free_dofs(1, Side::t);
    const auto& free_v = cx.free_dofs(0, Side::t);
    const int rank_c = qr_rank(dense_cols(cx.curl(), free_e));
    const int rank_g = qr_rank(dense_cols(cx.grad(), free_v));
    return static_cast<int>(free_e.size()) - rank_c - rank_g;
}

Eigen::MatrixXd cohomology_basis(const DeRhamComplex& cx, const CoefficientSet& coeffs) {
    const auto& free_e = cx.free_dofs(1, Side::t);
    const auto& free_v = cx.free_dofs(0, Side::t);
    const int ne = static_cast<int>(free_e.size());
    const int dim = cohomology_dim(cx, coeffs);
    const int full = cx.mesh().num_edges();
    if (dim == 0) return Eigen::MatrixXd(full, 0);

    const SpMat m1 = mass_matrix(cx.mesh(), 1, coeffs.eps);
    // Stack the kernel conditions: C x = 0 and G^T M1 x = 0 on free DOFs.
    Eigen::MatrixXd c_free = dense_cols(cx.curl(), free_e);
    Eigen::MatrixXd gtm(free_v.size(), ne);
    {
        const Eigen::MatrixXd m1_cols = [&] {
            Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m1.rows(), ne);
            for (int j = 0; j < ne; ++j)
                for (SpMat::InnerIterator it(m1, free_e[j]); it; ++it)
                    out(it.row(), j) = it.value();
            return out;
        }();
        const Eigen::MatrixXd g = dense_cols(cx.grad(), free_v);
        gtm = g.transpose() * m1_cols;
    }
    Eigen::MatrixXd stacked(c_free.rows() + gtm.rows(), ne);
    stacked << c_free, gtm;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
    Eigen::MatrixXd basis_free = svd.matrixV().rightCols(dim);

    // Embed and M1-orthonormalize.
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(full, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < ne; ++i) basis(free_e[i], j) = basis_free(i, j);
    const Eigen::MatrixXd gram = basis.transpose() * m1 * basis;
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        fail(errc::factorization, "cohomology basis Gram matrix not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    return l.triangularView<Eigen::Lower>().solve(basis.transpose()).transpose();
}

HodgeSplit helmholtz_decompose(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                               const Eigen::VectorXd& x) {
    const TetMesh& mesh = cx.mesh();
    if (x.size() != mesh.num_edges())
        fail(errc::invalid_input, "field vector has wrong size");
    {
        std::vector<char> is_free(mesh.num_edges(), 0);
        for (int e : cx.free_dofs(1, Side::t)) is_free[e] = 1;
        for (int e = 0; e < mesh.num_edges(); ++e)
            if (!is_free[e] && x[e] != 0.0)
                fail(errc::invalid_input,
                     "field vector has support on constrained edge " + std::to_string(e));
    }

    const SpMat m1 = mass_matrix(mesh, 1, coeffs.eps);
    const SpMat k0 = stiffness_matrix(cx, 0, coeffs.eps);
    const SpMat& g = cx.derivative_matrix_d(0);

    // Gradient potential; with no essential boundary the constant mode is
    // grounded at the first free vertex (G p is unaffected by the choice).
    std::vector<int> solve_dofs = cx.free_dofs(0, Side::t);
    if (cx.partition().gamma_t.empty() && !solve_dofs.empty())
        solve_dofs.erase(solve_dofs.begin());

    HodgeSplit split;
    split.x = x;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(mesh.num_vertices());
    if (!solve_dofs.empty()) {
        Eigen::MatrixXd kff(solve_dofs.size(), solve_dofs.size());
        for (size_t i = 0; i < solve_dofs.size(); ++i)
            for (size_t j = 0; j < solve_dofs.size(); ++j)
                kff(i, j) = k0.coeff(solve_dofs[i], solve_dofs[j]);
        const Eigen::VectorXd rhs_full = g.transpose() * (m1 * x);
        Eigen::VectorXd rhs(solve_dofs.size());
        for (size_t i = 0; i < solve_dofs.size(); ++i) rhs[i] = rhs_full[solve_dofs[i]];
        const Eigen::LLT<Eigen::MatrixXd> llt(kff);
        if (llt.info() != Eigen::Success)
            fail(errc::factorization, "gradient projection system not positive definite");
        const Eigen::VectorXd pf = llt.solve(rhs);
        for (size_t i = 0; i < solve_dofs.size(); ++i) p[solve_dofs[i]] = pf[i];
    }
    split.x_grad = g * p;

    const Eigen::MatrixXd harm = cohomology_basis(cx, coeffs);
    if (harm.cols() > 0)
        split.x_harm = harm * (harm.transpose() * (m1 * x));
    else
        split.x_harm = Eigen::VectorXd::Zero(mesh.num_edges());

    split.x_curl = x - split.x_grad - split.x_harm;

    const auto m1norm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(m1 * v)); };
    split.norm_x = m1norm(x);
    split.norm_grad = m1norm(split.x_grad);
    split.norm_harm = m1norm(split.x_harm);
    split.norm_curl = m1norm(split.x_curl);

    // Pairwise inner products measured against the total norm, so vanishing
    // components do not inflate the ratio.
    const Eigen::VectorXd* comps[3] = {&split.x_grad, &split.x_harm, &split.x_curl};
    const double total = split.norm_x * split.norm_x;
    for (int i = 0; i < 3 && total > 0; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double ip = std::abs(comps[i]->dot(m1 * (*comps[j]))) / total;
            split.orthogonality_max = std::max(split.orthogonality_max, ip);
        }
    return split;
}

} // namespace derham
