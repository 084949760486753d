#include "derham/coefficients.hpp"

#include <Eigen/Eigenvalues>

#include "derham/errors.hpp"

namespace derham {

CoefficientSet CoefficientSet::identity(int num_tets) {
    return constant(num_tets, Mat3::Identity(), Mat3::Identity(), 1.0, 1.0);
}

CoefficientSet CoefficientSet::constant(int num_tets, const Mat3& eps, const Mat3& mu,
                                        double nu, double kappa) {
    CoefficientSet c;
    c.eps.assign(num_tets, eps);
    c.mu.assign(num_tets, mu);
    c.nu.assign(num_tets, nu);
    c.kappa.assign(num_tets, kappa);
    c.validate();
    return c;
}

std::vector<Mat3> CoefficientSet::mu_inv() const {
    std::vector<Mat3> inv(mu.size());
    for (size_t t = 0; t < mu.size(); ++t) inv[t] = mu[t].inverse();
    return inv;
}

void CoefficientSet::validate() const {
    const size_t nt = nu.size();
    if (eps.size() != nt || mu.size() != nt || kappa.size() != nt)
        fail(errc::validation, "coefficient arrays have inconsistent lengths");
    for (size_t t = 0; t < nt; ++t) {
        for (const auto* m : {&eps[t], &mu[t]}) {
            const double scale = std::max(1.0, m->cwiseAbs().maxCoeff());
            if (sym_deviation(*m) > 1e-12 * scale)
                fail(errc::validation, "tet " + std::to_string(t) + ": weight not symmetric");
            Eigen::SelfAdjointEigenSolver<Mat3> es(*m, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() <= 0)
                fail(errc::validation,
                     "tet " + std::to_string(t) + ": weight not positive definite");
        }
        if (!(nu[t] > 0))
            fail(errc::validation, "tet " + std::to_string(t) + ": nu must be positive");
        if (!(kappa[t] > 0))
            fail(errc::validation, "tet " + std::to_string(t) + ": kappa must be positive");
    }
}

} // namespace derham
