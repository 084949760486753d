#include "derham/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "derham/errors.hpp"
#include "derham/hodge.hpp"
#include "derham/shapederiv.hpp"
#include "json.hpp"

namespace derham {

namespace {

using nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Setup {
    TetMesh mesh;
    BoundaryPartition partition;
    CoefficientSet coeffs;
    bool generated = false;
};

Setup load_setup(const RunConfig& config) {
    Setup s;
    if (config.gen_cube > 0) {
        s.mesh = generate_cube_mesh(config.gen_cube);
        s.partition = tag_boundary_spec(s.mesh, config.gamma_t);
        s.generated = true;
    } else if (!config.mesh_path.empty()) {
        MeshFile file = load_mesh(config.mesh_path);
        s.mesh = std::move(file.mesh);
        // A file's own tagging is kept unless a selector is given explicitly.
        s.partition = config.gamma_t.empty() ? std::move(file.partition)
                                             : tag_boundary_spec(s.mesh, config.gamma_t);
    } else {
        fail(errc::usage, "no mesh source: pass --gen-cube or --mesh");
    }

    const int nt = s.mesh.num_tets();
    if (config.coeffs == "identity") {
        s.coeffs = CoefficientSet::identity(nt);
    } else if (config.coeffs == "constant") {
        Mat3 eps = Mat3::Zero(), mu = Mat3::Zero();
        for (int i = 0; i < 3; ++i) {
            eps(i, i) = config.eps_diag[i];
            mu(i, i) = config.mu_diag[i];
        }
        s.coeffs = CoefficientSet::constant(nt, eps, mu, config.nu, config.kappa);
    } else if (config.coeffs == "file") {
        std::ifstream in(config.coeffs_path);
        if (!in) fail(errc::parse, "cannot open coefficients file '" + config.coeffs_path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            fail(errc::parse, std::string("coefficients file: ") + e.what());
        }
        CoefficientSet c;
        const auto read_mat = [&](const char* key, std::vector<Mat3>& out) {
            if (!j.contains(key)) fail(errc::parse, std::string("coefficients file: missing ") + key);
            for (const auto& rec : j[key]) {
                if (rec.size() != 9) fail(errc::parse, "coefficient matrix needs 9 entries");
                Mat3 m;
                for (int r = 0; r < 3; ++r)
                    for (int cidx = 0; cidx < 3; ++cidx) m(r, cidx) = rec[3 * r + cidx];
                out.push_back(m);
            }
        };
        read_mat("eps", c.eps);
        read_mat("mu", c.mu);
        c.nu = j.value("nu", std::vector<double>(nt, 1.0));
        c.kappa = j.value("kappa", std::vector<double>(nt, 1.0));
        if (c.num_tets() != nt)
            fail(errc::parse, "coefficients file does not match the mesh tet count");
        c.validate();
        s.coeffs = std::move(c);
    } else {
        fail(errc::usage, "coeffs must be identity, constant, or file");
    }
    return s;
}

VertexField make_psi(const RunConfig& config, const TetMesh& mesh) {
    if (config.psi == "dilate") return VertexField::dilate(mesh);
    if (config.psi == "translate") return VertexField::translate(mesh);
    if (config.psi == "shear") return VertexField::shear(mesh);
    if (config.psi == "random") return VertexField::random_smooth(mesh, config.seed);
    return VertexField::load(mesh, config.psi);
}

void write_json(const ordered_json& j, const std::string& path) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) fail(errc::parse, "cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

ordered_json spectrum_json(const std::string& problem, const EigenResult& res, int count) {
    ordered_json j;
    j["problem"] = problem;
    ordered_json values = ordered_json::array();
    ordered_json mult = ordered_json::array();
    for (int i = 0; i < res.num_distinct() && i < count; ++i) {
        values.push_back(res.values[i]);
        mult.push_back(res.multiplicities[i]);
    }
    j["values"] = values;
    j["multiplicities"] = mult;
    j["kernel_dim"] = res.kernel_dim;
    j["residual_max"] = res.residual_max;
    return j;
}

int cmd_mesh_gen(const RunConfig& config) {
    const Setup s = load_setup(config);
    if (config.out.empty()) fail(errc::usage, "mesh-gen requires --out");
    save_mesh(s.mesh, s.partition, config.out);
    std::cout << "mesh: " << s.mesh.num_vertices() << " vertices, " << s.mesh.num_tets()
              << " tets, " << s.partition.gamma_t.size() << " gamma-t faces -> " << config.out
              << "\n";
    return 0;
}

int cmd_spectrum(const RunConfig& config) {
    const Setup s = load_setup(config);
    const DeRhamComplex cx(s.mesh, s.partition);
    if (!config.dump_ops.empty()) {
        std::ofstream out(config.dump_ops);
        if (!out) fail(errc::parse, "cannot write '" + config.dump_ops + "'");
        cx.dump_operators(out);
    }
    const Problem problem = parse_problem(config.problem);

    ordered_json j;
    if (problem == Problem::vector_laplacian) {
        const VectorLaplacianSpectrum merged =
            vector_laplacian_spectrum(cx, s.coeffs, config.rho, config.tol);
        j["problem"] = config.problem;
        j["rho"] = config.rho;
        ordered_json values = ordered_json::array();
        for (int i = 0; i < static_cast<int>(merged.values.size()) && i < config.count; ++i) {
            const auto& mv = merged.values[i];
            ordered_json entry;
            entry["value"] = mv.value;
            entry["multiplicity"] = mv.multiplicity;
            ordered_json sources = ordered_json::array();
            for (const auto& c : mv.constituents)
                sources.push_back(c.first == Branch::laplace ? "laplace" : "maxwell");
            entry["sources"] = sources;
            values.push_back(entry);
        }
        j["values"] = values;
        j["kernel_dim"] =
            merged.laplace.kernel_dim + merged.maxwell.kernel_dim;
        j["residual_max"] =
            std::max(merged.laplace.residual_max, merged.maxwell.residual_max);
    } else {
        EigenResult res;
        if (problem == Problem::maxwell)
            res = maxwell_spectrum(cx, s.coeffs, config.tol);
        else
            res = laplace_spectrum(cx, s.coeffs,
                                   problem == Problem::laplace_dual ? LaplaceForm::dual
                                                                    : LaplaceForm::primal,
                                   config.tol);
        j = spectrum_json(config.problem, res, config.count);
    }
    write_json(j, config.out);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_shape_grad(const RunConfig& config, bool with_fd) {
    const Setup s = load_setup(config);
    const DeRhamComplex cx(s.mesh, s.partition);
    const VertexField psi = make_psi(config, s.mesh);
    const Problem problem = parse_problem(config.problem);
    const std::vector<double> t_list = with_fd ? config.t_list : std::vector<double>{};
    if (with_fd && t_list.empty()) fail(errc::usage, "fd-check requires a nonempty --t list");

    const ShapeDerivativeReport report = fd_check(problem, cx, s.coeffs, psi, t_list,
                                                  config.eigen_index, config.tol, config.rho,
                                                  config.threads);
    ordered_json j;
    j["problem"] = report.problem;
    j["eigen_index"] = config.eigen_index;
    j["psi"] = config.psi;
    j["lambda"] = report.lambda;
    j["dlambda"] = report.dlambda;
    j["term_stiffness"] = report.term_stiffness;
    j["term_mass"] = report.term_mass;
    j["normalization_residual"] = report.normalization_residual;
    if (report.has_identity_form) j["identity_form"] = report.identity_form;
    if (!report.fd_table.empty()) {
        ordered_json table = ordered_json::array();
        for (const auto& row : report.fd_table) {
            ordered_json r;
            r["t"] = row.t;
            r["lambda_t"] = row.lambda_plus;
            r["fd"] = row.central_diff;
            r["abs_err"] = row.abs_err;
            table.push_back(r);
        }
        j["fd_table"] = table;
    }
    write_json(j, config.out);
    if (!config.out_csv.empty()) {
        std::ofstream csv(config.out_csv);
        if (!csv) fail(errc::parse, "cannot write '" + config.out_csv + "'");
        csv << "t,lambda_t,fd,formula,abs_err\n";
        for (const auto& row : report.fd_table)
            csv << fmt(row.t) << "," << fmt(row.lambda_plus) << "," << fmt(row.central_diff)
                << "," << fmt(report.dlambda) << "," << fmt(row.abs_err) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

double rel_entry_diff(const SpMat& a, const SpMat& b) {
    double scale = 0, diff = 0;
    const Eigen::MatrixXd ad(a), bd(b);
    scale = ad.cwiseAbs().maxCoeff();
    diff = (ad - bd).cwiseAbs().maxCoeff();
    return scale > 0 ? diff / scale : diff;
}

int cmd_equivalence(const RunConfig& config) {
    const Setup s = load_setup(config);
    const DeRhamComplex cx(s.mesh, s.partition);
    const VertexField psi = make_psi(config, s.mesh);
    const PwAffineMap map = make_map(s.mesh, psi, config.t);
    const CoefficientSet moved = transform_coefficients(s.coeffs, map);
    const DeRhamComplex deformed(deformed_mesh(s.mesh, map), s.partition);

    const double mass_diff = rel_entry_diff(mass_matrix(deformed.mesh(), 1, s.coeffs.eps),
                                            mass_matrix(s.mesh, 1, moved.eps));

    const EigenResult ref = maxwell_spectrum(cx, moved, config.tol);
    const EigenResult def = maxwell_spectrum(deformed, s.coeffs, config.tol);
    const int n_check = std::min({10, ref.total_positive(), def.total_positive()});
    double value_diff = 0;
    for (int i = 0; i < n_check; ++i)
        value_diff = std::max(value_diff, std::abs(ref.flat_value(i) - def.flat_value(i)) /
                                              ref.flat_value(i));

    ordered_json j;
    j["t"] = config.t;
    j["psi"] = config.psi;
    j["values_checked"] = n_check;
    j["max_rel_value_diff"] = value_diff;
    j["max_rel_mass_diff"] = mass_diff;
    const bool pass = value_diff <= 1e-10 && mass_diff <= 1e-12;
    j["pass"] = pass;
    write_json(j, config.out);
    std::cout << j.dump(2) << "\n";
    return pass ? 0 : static_cast<int>(errc::verify_failed);
}

int cmd_helmholtz(const RunConfig& config) {
    const Setup s = load_setup(config);
    const DeRhamComplex cx(s.mesh, s.partition);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(s.mesh.num_edges());
    const auto& free_e = cx.free_dofs(1, Side::t);
    if (config.field == "random") {
        std::mt19937 rng(config.seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (int e : free_e) x[e] = unit(rng);
    } else if (config.field == "grad") {
        std::mt19937 rng(config.seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        Eigen::VectorXd p = Eigen::VectorXd::Zero(s.mesh.num_vertices());
        for (int v : cx.free_dofs(0, Side::t)) p[v] = unit(rng);
        x = cx.derivative_matrix_d(0) * p;
    } else if (config.field == "eigen") {
        const EigenResult res = maxwell_spectrum(cx, s.coeffs, config.tol);
        if (res.total_positive() == 0) fail(errc::invalid_input, "no Maxwell eigenvector");
        x = res.pair(0).vector;
    } else {
        fail(errc::usage, "field must be random, grad, or eigen");
    }

    const HodgeSplit split = helmholtz_decompose(cx, s.coeffs, x);
    ordered_json j;
    j["field"] = config.field;
    j["norm_x"] = split.norm_x;
    j["norm_grad"] = split.norm_grad;
    j["norm_harm"] = split.norm_harm;
    j["norm_curl"] = split.norm_curl;
    j["orthogonality_max"] = split.orthogonality_max;
    const double lhs = split.norm_x * split.norm_x;
    const double rhs = split.norm_grad * split.norm_grad + split.norm_harm * split.norm_harm +
                       split.norm_curl * split.norm_curl;
    j["pythagoras_rel_err"] = std::abs(lhs - rhs) / std::max(lhs, 1e-300);
    j["cohomology_dim"] = cohomology_dim(cx, s.coeffs);
    write_json(j, config.out);
    std::cout << j.dump(2) << "\n";
    return 0;
}

} // namespace

void RunConfig::validate() const {
    if (!(tol.zero_tol > 0) || !(tol.gap_tol > 0) || !(tol.residual_tol > 0))
        fail(errc::usage, "tolerances must be positive");
    for (double t : t_list)
        if (!(t > 0)) fail(errc::usage, "t list entries must be strictly positive");
    if (gen_cube < 0) fail(errc::usage, "gen-cube must be a positive subdivision count");
    if (count < 1) fail(errc::usage, "count must be >= 1");
    if (eigen_index < 0) fail(errc::usage, "eigen-index must be >= 0");
    if (!(rho > 0)) fail(errc::usage, "rho must be positive");
    if (threads < 1) fail(errc::usage, "threads must be >= 1");
    if (!problem.empty()) parse_problem(problem);
}

std::vector<CheckResult> run_verify_suite(const RunConfig& config) {
    std::vector<CheckResult> checks;
    const auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        checks.push_back({name, pass, detail});
    };

    const Setup s = load_setup(config);
    const DeRhamComplex cx(s.mesh, s.partition);

    {
        const SpMatI cg = cx.curl() * cx.grad();
        const SpMatI dc = cx.div() * cx.curl();
        int nz = 0;
        for (int k = 0; k < cg.outerSize(); ++k)
            for (SpMatI::InnerIterator it(cg, k); it; ++it) nz += it.value() != 0;
        for (int k = 0; k < dc.outerSize(); ++k)
            for (SpMatI::InnerIterator it(dc, k); it; ++it) nz += it.value() != 0;
        add("complex-exactness", nz == 0, "nonzero entries in C*G and D*C: " + std::to_string(nz));
    }

    if (s.generated) {
        const long chi = s.mesh.num_vertices() - s.mesh.num_edges() + s.mesh.num_faces() -
                         s.mesh.num_tets();
        add("euler-characteristic", chi == 1, "V-E+F-T = " + std::to_string(chi));
    }

    {
        bool ok = true;
        for (int f : s.mesh.boundary_faces) {
            const Vec3 n = s.mesh.boundary_outward_normal(f);
            const int t = s.mesh.face_tets[f][0];
            if (n.dot(s.mesh.face_centroid(f) - s.mesh.geometry(t).centroid()) <= 0) ok = false;
        }
        add("boundary-normals", ok, std::to_string(s.mesh.boundary_faces.size()) + " faces");
    }

    {
        const VertexField psi = VertexField::random_smooth(s.mesh, config.seed);
        const PwAffineMap map = make_map(s.mesh, psi, 0.05);
        const CoefficientSet moved = transform_coefficients(s.coeffs, map);
        const TetMesh def = deformed_mesh(s.mesh, map);
        double worst = 0;
        worst = std::max(worst, rel_entry_diff(mass_matrix(def, 0, s.coeffs.nu),
                                               mass_matrix(s.mesh, 0, moved.nu)));
        worst = std::max(worst, rel_entry_diff(mass_matrix(def, 1, s.coeffs.eps),
                                               mass_matrix(s.mesh, 1, moved.eps)));
        worst = std::max(worst, rel_entry_diff(mass_matrix(def, 2, s.coeffs.mu_inv()),
                                               mass_matrix(s.mesh, 2, moved.mu_inv())));
        std::vector<double> kinv(s.mesh.num_tets()), kinv_moved(s.mesh.num_tets());
        for (int t = 0; t < s.mesh.num_tets(); ++t) {
            kinv[t] = 1.0 / s.coeffs.kappa[t];
            kinv_moved[t] = 1.0 / moved.kappa[t];
        }
        worst = std::max(worst, rel_entry_diff(mass_matrix(def, 3, kinv),
                                               mass_matrix(s.mesh, 3, kinv_moved)));
        add("transformation-isometry", worst <= 1e-12,
            "max entrywise relative deviation " + fmt(worst));

        const DeRhamComplex defcx(def, s.partition);
        const auto sparse_equal = [](const SpMatI& a, const SpMatI& b) {
            const SpMatI diff = a - b;
            for (int k = 0; k < diff.outerSize(); ++k)
                for (SpMatI::InnerIterator it(diff, k); it; ++it)
                    if (it.value() != 0) return false;
            return true;
        };
        const bool same = sparse_equal(defcx.grad(), cx.grad()) &&
                          sparse_equal(defcx.curl(), cx.curl()) &&
                          sparse_equal(defcx.div(), cx.div());
        add("pullback-commutation", same, "incidence matrices shared under deformation");
    }

    {
        std::mt19937 rng(config.seed + 7);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(s.mesh.num_edges());
        for (int e : cx.free_dofs(1, Side::t)) x[e] = unit(rng);
        const HodgeSplit split = helmholtz_decompose(cx, s.coeffs, x);
        const double recon = (split.x - split.x_grad - split.x_harm - split.x_curl).norm();
        const double pyth = std::abs(split.norm_x * split.norm_x -
                                     split.norm_grad * split.norm_grad -
                                     split.norm_harm * split.norm_harm -
                                     split.norm_curl * split.norm_curl) /
                            (split.norm_x * split.norm_x);
        add("hodge-orthogonality", split.orthogonality_max <= 1e-10,
            "max pair " + fmt(split.orthogonality_max));
        add("hodge-pythagoras", pyth <= 1e-9 && recon == 0, "relative error " + fmt(pyth));
        add("hodge-cohomology", cohomology_dim(cx, s.coeffs) == 0,
            "dim " + std::to_string(cohomology_dim(cx, s.coeffs)));
    }

    {
        const VertexField dil = VertexField::dilate(s.mesh);
        const VertexField tra = VertexField::translate(s.mesh);
        const EigenResult lap = laplace_spectrum(cx, s.coeffs, LaplaceForm::primal, config.tol);
        int simple = -1;
        for (int i = 0; i < lap.total_positive(); ++i)
            if (lap.pair(i).multiplicity == 1) {
                simple = i;
                break;
            }
        if (simple < 0) {
            add("dilation-laplace", false, "no simple eigenvalue found");
        } else {
            const Eigenpair pair = lap.pair(simple);
            const auto rep = hadamard_laplace_primal(cx, s.coeffs, pair, dil);
            const double dev = std::abs(rep.dlambda / rep.lambda + 2.0);
            add("dilation-laplace", dev <= 1e-10, "dlambda/lambda + 2 = " + fmt(dev));
            const auto rep0 = hadamard_laplace_primal(cx, s.coeffs, pair, tra);
            add("translation-laplace", rep0.dlambda == 0.0, "dlambda = " + fmt(rep0.dlambda));

            const VertexField rnd = VertexField::random_smooth(s.mesh, config.seed + 13);
            const auto repr = hadamard_laplace_primal(cx, s.coeffs, pair, rnd);
            const DerivativePencil dp =
                assemble_derivative_pencil(cx, s.coeffs, rnd, Problem::laplace);
            const double hf = hellmann_feynman_form(dp, pair);
            const double hf_dev = std::abs(hf - repr.dlambda);
            add("hellmann-feynman", hf_dev <= 1e-12 * pair.value,
                "deviation " + fmt(hf_dev) + " vs 1e-12*lambda " + fmt(1e-12 * pair.value));

            const DualEigenvector dual = dual_eigenvector(cx, s.coeffs, 0, pair, config.tol);
            const auto repd = hadamard_laplace_dual(
                cx, s.coeffs, Eigenpair{pair.value, dual.vector, 1}, rnd);
            const double pd = std::abs(repd.dlambda - repr.dlambda) /
                              std::max(std::abs(repr.dlambda), 1e-300);
            add("primal-dual-agreement", pd <= 1e-9, "relative deviation " + fmt(pd));
        }
    }

    {
        // Anisotropic diagonal coefficients split the symmetric clusters so a
        // simple Maxwell eigenvalue exists for the dilation identity.
        Mat3 eps = Mat3::Zero(), mu = Mat3::Zero();
        eps.diagonal() << 1.0, 1.2, 1.5;
        mu.diagonal() << 1.0, 1.1, 1.3;
        const CoefficientSet aniso =
            CoefficientSet::constant(s.mesh.num_tets(), eps, mu, 1.0, 1.0);
        const EigenResult mx = maxwell_spectrum(cx, aniso, config.tol);
        int simple = -1;
        for (int i = 0; i < mx.total_positive(); ++i)
            if (mx.pair(i).multiplicity == 1) {
                simple = i;
                break;
            }
        if (simple < 0) {
            add("dilation-maxwell", false, "no simple eigenvalue found");
        } else {
            const Eigenpair pair = mx.pair(simple);
            const auto rep = hadamard_maxwell(cx, aniso, pair, VertexField::dilate(s.mesh));
            const double dev = std::abs(rep.dlambda / rep.lambda + 2.0);
            add("dilation-maxwell", dev <= 1e-10, "dlambda/lambda + 2 = " + fmt(dev));
            const auto rep0 = hadamard_maxwell(cx, aniso, pair, VertexField::translate(s.mesh));
            add("translation-maxwell", rep0.dlambda == 0.0, "dlambda = " + fmt(rep0.dlambda));
        }
    }

    return checks;
}

int run(const RunConfig& config) {
    config.validate();
    if (config.command == "mesh-gen") return cmd_mesh_gen(config);
    if (config.command == "spectrum") return cmd_spectrum(config);
    if (config.command == "shape-grad") return cmd_shape_grad(config, false);
    if (config.command == "fd-check") return cmd_shape_grad(config, true);
    if (config.command == "equivalence-check") return cmd_equivalence(config);
    if (config.command == "helmholtz") return cmd_helmholtz(config);
    if (config.command == "verify") {
        const std::vector<CheckResult> checks = run_verify_suite(config);
        bool all = true;
        for (const auto& c : checks) {
            std::cout << (c.pass ? "ok   " : "FAIL ") << c.name << ": " << c.detail << "\n";
            all = all && c.pass;
        }
        std::cout << (all ? "verify: all checks passed\n" : "verify: FAILURES\n");
        return all ? 0 : static_cast<int>(errc::verify_failed);
    }
    fail(errc::usage, "unknown command '" + config.command + "'");
}

} // namespace derham
