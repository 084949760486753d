#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "derham/cli.hpp"
#include "derham/errors.hpp"

namespace {

std::vector<double> parse_t_list(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            derham::fail(derham::errc::usage, "bad t value '" + token + "'");
        }
    }
    return out;
}

void add_common(CLI::App* cmd, derham::RunConfig& config) {
    cmd->fallthrough();  // lets the root-level --config appear after the subcommand
    cmd->add_option("--gen-cube", config.gen_cube, "Generate an n-subdivided unit cube mesh");
    cmd->add_option("--mesh", config.mesh_path, "Mesh JSON file");
    cmd->add_option("--gamma-t", config.gamma_t,
                    "Essential boundary selector: all, none, or axis planes like z0 or z0,z1");
    cmd->add_option("--coeffs", config.coeffs, "identity | constant | file");
    cmd->add_option("--eps-diag", config.eps_diag, "Diagonal of eps for --coeffs constant")
        ->expected(3);
    cmd->add_option("--mu-diag", config.mu_diag, "Diagonal of mu for --coeffs constant")
        ->expected(3);
    cmd->add_option("--nu", config.nu, "Scalar nu for --coeffs constant");
    cmd->add_option("--kappa", config.kappa, "Scalar kappa for --coeffs constant");
    cmd->add_option("--coeffs-file", config.coeffs_path, "Per-tet coefficients JSON");
    cmd->add_option("--zero-tol", config.tol.zero_tol, "Kernel threshold (relative)");
    cmd->add_option("--gap-tol", config.tol.gap_tol, "Distinct-value grouping gap (relative)");
    cmd->add_option("--residual-tol", config.tol.residual_tol, "Pencil residual bound");
    cmd->add_option("--seed", config.seed, "Seed for random psi / fields");
    cmd->add_option("--out", config.out, "Output JSON path");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete de Rham complex eigenvalue and shape-derivative toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "INI file with one section per subcommand, keys mirroring the flags");

    derham::RunConfig config;
    if (const char* env = std::getenv("DERHAM_THREADS")) config.threads = std::atoi(env);
    std::string t_spec;

    auto* mesh_gen = app.add_subcommand("mesh-gen", "Generate a cube mesh file");
    mesh_gen->fallthrough();
    mesh_gen->add_option("--n", config.gen_cube, "Subdivisions per side")->required();
    mesh_gen->add_option("--gamma-t", config.gamma_t, "Essential boundary selector");
    mesh_gen->add_option("--out", config.out, "Output mesh path")->required();

    auto* spectrum = app.add_subcommand("spectrum", "Solve an eigenvalue problem");
    add_common(spectrum, config);
    spectrum->add_option("--problem", config.problem,
                         "laplace | laplace-dual | maxwell | vector-laplacian");
    spectrum->add_option("--count", config.count, "Distinct values to report");
    spectrum->add_option("--rho", config.rho, "Vector Laplacian weight");
    spectrum->add_option("--dump-ops", config.dump_ops,
                         "Write G, C, D as coordinate triplets to this path");

    auto* shape = app.add_subcommand("shape-grad", "Hadamard shape derivative of an eigenvalue");
    add_common(shape, config);
    shape->add_option("--problem", config.problem, "laplace | laplace-dual | maxwell | vector-laplacian");
    shape->add_option("--eigen-index", config.eigen_index, "Flattened positive eigenvalue index");
    shape->add_option("--psi", config.psi, "dilate | translate | shear | random | <file>");
    shape->add_option("--rho", config.rho, "Vector Laplacian weight");

    auto* fd = app.add_subcommand("fd-check", "Finite-difference validation of the derivative");
    add_common(fd, config);
    fd->add_option("--problem", config.problem, "laplace | laplace-dual | maxwell | vector-laplacian");
    fd->add_option("--eigen-index", config.eigen_index, "Flattened positive eigenvalue index");
    fd->add_option("--psi", config.psi, "dilate | translate | shear | random | <file>");
    fd->add_option("--t", t_spec, "Comma-separated list of step sizes");
    fd->add_option("--rho", config.rho, "Vector Laplacian weight");
    fd->add_option("--out-csv", config.out_csv, "Plot-ready CSV path");

    auto* equiv = app.add_subcommand("equivalence-check",
                                     "Deformed mesh vs transported coefficients");
    add_common(equiv, config);
    equiv->add_option("--psi", config.psi, "dilate | translate | shear | random | <file>");
    equiv->add_option("--t", config.t, "Deformation parameter");

    auto* helm = app.add_subcommand("helmholtz", "Discrete Helmholtz decomposition");
    add_common(helm, config);
    helm->add_option("--field", config.field, "random | grad | eigen");

    auto* verify = app.add_subcommand("verify", "Run the invariant suite");
    add_common(verify, config);

    CLI11_PARSE(app, argc, argv);

    config.command = app.get_subcommands().front()->get_name();
    if (!t_spec.empty()) config.t_list = parse_t_list(t_spec);

    try {
        return derham::run(config);
    } catch (const derham::Error& e) {
        std::cerr << "error[" << e.code_name() << "]: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
}
