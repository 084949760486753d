#pragma once

#include <string>
#include <vector>

#include "derham/eigensolve.hpp"

namespace derham {

/// Structured configuration mirroring the command-line flags. A config file
/// (INI) can pre-populate any field; explicit flags override it.
struct RunConfig {
    std::string command;

    // Mesh source: generated cube or file.
    int gen_cube = 0;
    std::string mesh_path;
    std::string gamma_t = "all";

    // Coefficients: identity, constant (diagonal scales), or per-tet file.
    std::string coeffs = "identity";
    std::vector<double> eps_diag = {1, 1, 1};
    std::vector<double> mu_diag = {1, 1, 1};
    double nu = 1.0;
    double kappa = 1.0;
    std::string coeffs_path;

    std::string problem = "laplace";
    int count = 5;
    int eigen_index = 0;
    double rho = 1.0;

    std::string psi = "dilate";
    unsigned seed = 1;
    std::vector<double> t_list = {1e-2, 5e-3};
    double t = 0.05;  // equivalence-check deformation parameter

    std::string field = "random";  // helmholtz input field

    Tolerances tol;

    std::string out;
    std::string out_csv;
    std::string dump_ops;  // coordinate-triplet dump of G, C, D
    int threads = 1;

    void validate() const;  // errc::usage with the offending field
};

/// Executes the configured command, writing the JSON/CSV artifacts and a
/// short summary to stdout. Returns the process exit code (0 on success,
/// nonzero error codes per errc; verify returns errc::verify_failed when any
/// check fails).
int run(const RunConfig& config);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// The library's structural invariants as a batch: complex exactness,
/// pullback/equivalence identities, Hodge decomposition, dilation and
/// translation derivatives, Hellmann-Feynman and primal/dual agreement.
std::vector<CheckResult> run_verify_suite(const RunConfig& config);

} // namespace derham
