#pragma once

#include <string>
#include <vector>

#include "derham/assembly.hpp"

namespace derham {

struct Tolerances {
    double zero_tol = 1e-8;      // kernel threshold, relative to the largest eigenvalue
    double gap_tol = 1e-6;       // distinct-value grouping gap, relative
    double residual_tol = 1e-9;  // per-pair pencil residual bound
};

enum class Problem { laplace, laplace_dual, maxwell, vector_laplacian };

std::string problem_name(Problem p);
Problem parse_problem(const std::string& name);

/// One eigenpair extracted from a result; `vector` is full DOF size with
/// zeros on constrained entries and is unit in the pencil's mass norm.
/// `multiplicity` is the size of the distinct-value cluster it belongs to.
struct Eigenpair {
    double value = 0;
    Eigen::VectorXd vector;
    int multiplicity = 0;
};

/// Solution of a generalized symmetric pencil restricted to free DOFs.
/// `values` are the distinct positive eigenvalues in strictly ascending
/// order, grouped at the relative gap tolerance; `vectors[i]` holds the
/// mass-orthonormal eigenvector block of values[i] (columns, full DOF size).
/// Eigenvalues below zero_tol relative to the largest one count as kernel.
struct EigenResult {
    std::vector<double> values;
    std::vector<int> multiplicities;
    std::vector<Eigen::MatrixXd> vectors;
    int kernel_dim = 0;
    Eigen::MatrixXd kernel_vectors;
    std::vector<double> residuals;  // per positive pair, flattened cluster order
    double residual_max = 0;

    int num_distinct() const { return static_cast<int>(values.size()); }
    int total_positive() const;
    /// Flattened positive pair (ascending); index out of range -> usage error.
    Eigenpair pair(int flat_index) const;
    double flat_value(int flat_index) const { return pair_value_(flat_index); }

private:
    double pair_value_(int flat_index) const;
};

/// All eigenpairs of (K|free, M|free) by reduction to a standard symmetric
/// problem through the Cholesky factor of M (dense reference path).
EigenResult solve_gevp(const SpMat& K, const SpMat& M, const std::vector<int>& free,
                       const Tolerances& tol = {});

/// Lowest `want` eigenpairs via subspace iteration on the negatively shifted
/// pencil (K + tau*M is positive definite, so kernel modes converge too).
/// Agrees with the dense path to 1e-9 relative.
EigenResult solve_gevp_shift_invert(const SpMat& K, const SpMat& M,
                                    const std::vector<int>& free, int want,
                                    const Tolerances& tol = {});

/// Convenience assemblers for the two pencils of the complex.
SpMat laplace_stiffness(const DeRhamComplex& cx, const CoefficientSet& coeffs);
SpMat laplace_mass(const DeRhamComplex& cx, const CoefficientSet& coeffs);
SpMat maxwell_stiffness(const DeRhamComplex& cx, const CoefficientSet& coeffs);
SpMat maxwell_mass(const DeRhamComplex& cx, const CoefficientSet& coeffs);

enum class LaplaceForm { primal, dual };

/// Positive spectrum of the weighted Laplacian pair. The primal form solves
/// (G^T M1(eps) G, M0(nu)) on the free vertex DOFs; the dual form returns the
/// same values with the eigenvector blocks replaced by the dual eigenvectors
/// (edge DOFs, unit in the M1(eps) norm).
EigenResult laplace_spectrum(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                             LaplaceForm form = LaplaceForm::primal,
                             const Tolerances& tol = {});

/// Positive spectrum of (C^T M2(mu^{-1}) C, M1(eps)) on free edge DOFs. The
/// kernel consists of the discrete gradients plus the cohomology space.
EigenResult maxwell_spectrum(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                             const Tolerances& tol = {});

enum class Branch { laplace, maxwell };

struct MergedValue {
    double value = 0;  // smallest constituent
    int multiplicity = 0;
    std::vector<std::pair<Branch, double>> constituents;
};

/// Spectrum of the generalized vector Laplacian as the merged sorted union
/// rho*{lambda_0,n} u {lambda_1,n} of the two branch solves. Values that
/// coincide within the gap tolerance merge into one entry with summed
/// multiplicity; the constituents keep the exact branch values.
struct VectorLaplacianSpectrum {
    double rho = 1;
    std::vector<MergedValue> values;
    EigenResult laplace;  // values already scaled by rho
    EigenResult maxwell;
};

VectorLaplacianSpectrum vector_laplacian_spectrum(const DeRhamComplex& cx,
                                                  const CoefficientSet& coeffs, double rho,
                                                  const Tolerances& tol = {});

/// y = lambda^{-1/2} d x in the target Whitney basis, the companion
/// eigenvector of the dual operator. Level 0 maps vertex eigenvectors to
/// edge DOFs (target norm M1(eps)); level 1 maps edge eigenvectors to face
/// DOFs (target norm M2(mu^{-1})). Both diagnostics are checked against the
/// tolerances on return.
struct DualEigenvector {
    Eigen::VectorXd vector;
    double norm_residual = 0;    // | ||y||_target - 1 |
    double pencil_residual = 0;  // dual-pencil residual of (lambda, y)
};

DualEigenvector dual_eigenvector(const DeRhamComplex& cx, const CoefficientSet& coeffs,
                                 int level, const Eigenpair& pair,
                                 const Tolerances& tol = {});

/// x^T K x / x^T M x; zero vector -> invalid-input error.
double rayleigh_quotient(const SpMat& K, const SpMat& M, const Eigen::VectorXd& x);

} // namespace derham
