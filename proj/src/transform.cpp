#include "derham/transform.hpp"

#include <Eigen/SVD>
#include <fstream>
#include <random>

#include "derham/errors.hpp"
#include "json.hpp"

namespace derham {

namespace {

// Per-tet Jacobian of the affine interpolant of vertex values. The sum over
// a >= 1 of (value_a - value_0) g_a^T equals the full sum against all four
// gradients (they add to zero) and keeps constant fields at exactly zero.
std::vector<Mat3> field_jacobians(const TetMesh& mesh, const std::vector<Vec3>& values) {
    std::vector<Mat3> jac(mesh.num_tets());
    for (int t = 0; t < mesh.num_tets(); ++t) {
        const TetGeometry geo = mesh.geometry(t);
        const Vec3& base = values[mesh.tet_sorted[t][0]];
        Mat3 j = Mat3::Zero();
        for (int a = 1; a < 4; ++a)
            j += (values[mesh.tet_sorted[t][a]] - base) * geo.g[a].transpose();
        jac[t] = j;
    }
    return jac;
}

} // namespace

VertexField VertexField::from_values(const TetMesh& mesh, std::vector<Vec3> values) {
    if (static_cast<int>(values.size()) != mesh.num_vertices())
        fail(errc::invalid_input, "direction field has " + std::to_string(values.size()) +
                                      " entries for " + std::to_string(mesh.num_vertices()) +
                                      " vertices");
    for (const auto& v : values)
        if (!v.allFinite()) fail(errc::invalid_input, "direction field has non-finite entries");
    VertexField f;
    f.psi = std::move(values);
    f.jacobian = field_jacobians(mesh, f.psi);
    f.divergence.resize(f.jacobian.size());
    for (size_t t = 0; t < f.jacobian.size(); ++t) f.divergence[t] = f.jacobian[t].trace();
    return f;
}

VertexField VertexField::dilate(const TetMesh& mesh) {
    std::vector<Vec3> v(mesh.vertices.begin(), mesh.vertices.end());
    return from_values(mesh, std::move(v));
}

VertexField VertexField::translate(const TetMesh& mesh, const Vec3& direction) {
    return from_values(mesh, std::vector<Vec3>(mesh.num_vertices(), direction));
}

VertexField VertexField::shear(const TetMesh& mesh) {
    std::vector<Vec3> v(mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i) v[i] = Vec3(mesh.vertices[i].y(), 0, 0);
    return from_values(mesh, std::move(v));
}

VertexField VertexField::random_smooth(const TetMesh& mesh, unsigned seed,
                                       double jacobian_scale) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    // Low-frequency trigonometric field with seeded coefficients.
    std::array<Vec3, 3> amp, phase;
    std::array<Vec3, 3> wave;
    for (int c = 0; c < 3; ++c) {
        amp[c] = Vec3(unit(rng), unit(rng), unit(rng));
        phase[c] = Vec3(unit(rng), unit(rng), unit(rng)) * 3.14;
        wave[c] = Vec3(unit(rng), unit(rng), unit(rng)) * 2.0;
    }
    std::vector<Vec3> v(mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        const Vec3& x = mesh.vertices[i];
        for (int c = 0; c < 3; ++c)
            v[i][c] = amp[c][0] * std::sin(wave[c][0] * x[0] + phase[c][0]) +
                      amp[c][1] * std::sin(wave[c][1] * x[1] + phase[c][1]) +
                      amp[c][2] * std::cos(wave[c][2] * x[2] + phase[c][2]);
    }
    VertexField f = from_values(mesh, std::move(v));
    double jmax = 0;
    for (const auto& j : f.jacobian) jmax = std::max(jmax, j.norm());
    if (jmax > 0) f = f.scaled(jacobian_scale / jmax);
    return f;
}

VertexField VertexField::scaled(double factor) const {
    VertexField f = *this;
    for (auto& v : f.psi) v *= factor;
    for (auto& j : f.jacobian) j *= factor;
    for (auto& d : f.divergence) d *= factor;
    return f;
}

VertexField VertexField::load(const TetMesh& mesh, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::parse, "cannot open psi file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::parse, "psi file '" + path + "': " + e.what());
    }
    if (!j.contains("psi") || !j["psi"].is_array())
        fail(errc::parse, "psi file '" + path + "': missing \"psi\" array");
    std::vector<Vec3> values;
    for (size_t i = 0; i < j["psi"].size(); ++i) {
        const auto& rec = j["psi"][i];
        if (!rec.is_array() || rec.size() != 3)
            fail(errc::parse, "psi record " + std::to_string(i) + ": expected [x,y,z]");
        values.emplace_back(rec[0].get<double>(), rec[1].get<double>(), rec[2].get<double>());
    }
    return from_values(mesh, std::move(values));
}

void VertexField::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["psi"] = nlohmann::json::array();
    for (const auto& v : psi) j["psi"].push_back({v.x(), v.y(), v.z()});
    std::ofstream out(path);
    if (!out) fail(errc::parse, "cannot write psi file '" + path + "'");
    out << j.dump(2) << "\n";
}

PwAffineMap make_map(const TetMesh& mesh, const VertexField& psi, double t) {
    if (static_cast<int>(psi.psi.size()) != mesh.num_vertices())
        fail(errc::invalid_input, "direction field does not match the mesh");
    PwAffineMap map;
    map.num_vertices = mesh.num_vertices();
    map.num_tets = mesh.num_tets();
    map.displaced_vertices.resize(mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i)
        map.displaced_vertices[i] = mesh.vertices[i] + t * psi.psi[i];

    map.jacobian.resize(mesh.num_tets());
    map.det_jacobian.resize(mesh.num_tets());
    map.adj_jacobian.resize(mesh.num_tets());
    int worst = -1;
    double worst_det = std::numeric_limits<double>::infinity();
    for (int k = 0; k < mesh.num_tets(); ++k) {
        map.jacobian[k] = Mat3::Identity() + t * psi.jacobian[k];
        map.det_jacobian[k] = map.jacobian[k].determinant();
        if (map.det_jacobian[k] < worst_det) {
            worst_det = map.det_jacobian[k];
            worst = k;
        }
    }
    if (worst_det <= 0) {
        double jnorm_max = 0;
        for (const auto& j : psi.jacobian) {
            Eigen::JacobiSVD<Mat3> svd(j);
            jnorm_max = std::max(jnorm_max, svd.singularValues()[0]);
        }
        const double t_est = jnorm_max > 0 ? 1.0 / jnorm_max : 0.0;
        fail(errc::admissibility,
             "tet " + std::to_string(worst) + ": det J = " + std::to_string(worst_det) +
                 " at t = " + std::to_string(t) +
                 "; largest admissible |t| estimate: " + std::to_string(t_est));
    }
    for (int k = 0; k < mesh.num_tets(); ++k)
        map.adj_jacobian[k] = map.det_jacobian[k] * map.jacobian[k].inverse();
    return map;
}

TetMesh deformed_mesh(const TetMesh& reference, const PwAffineMap& map) {
    if (map.num_vertices != reference.num_vertices() || map.num_tets != reference.num_tets())
        fail(errc::invalid_input, "map does not match the reference mesh connectivity");
    return TetMesh::from_arrays(map.displaced_vertices, reference.tets);
}

SpMat pullback_dof_map(const TetMesh& reference, int q, const PwAffineMap& map) {
    if (map.num_vertices != reference.num_vertices() || map.num_tets != reference.num_tets())
        fail(errc::invalid_input, "map does not match the reference mesh connectivity");
    const int n = reference.dof_count(q);
    SpMat identity(n, n);
    identity.setIdentity();
    return identity;
}

CoefficientSet transform_coefficients(const CoefficientSet& coeffs, const PwAffineMap& map) {
    if (coeffs.num_tets() != map.num_tets)
        fail(errc::invalid_input, "coefficients do not match the map");
    CoefficientSet out;
    out.eps.resize(map.num_tets);
    out.mu.resize(map.num_tets);
    out.nu.resize(map.num_tets);
    out.kappa.resize(map.num_tets);
    for (int t = 0; t < map.num_tets; ++t) {
        const Mat3 jinv = map.jacobian[t].inverse();
        const double det = map.det_jacobian[t];
        out.eps[t] = det * jinv * coeffs.eps[t] * jinv.transpose();
        out.mu[t] = det * jinv * coeffs.mu[t] * jinv.transpose();
        // Keep the transported matrices exactly symmetric against rounding.
        out.eps[t] = sym_part(out.eps[t]);
        out.mu[t] = sym_part(out.mu[t]);
        out.nu[t] = det * coeffs.nu[t];
        out.kappa[t] = det * coeffs.kappa[t];
    }
    return out;
}

DerivativeWeights coefficient_derivative(const CoefficientSet& coeffs, const VertexField& psi) {
    if (coeffs.num_tets() != static_cast<int>(psi.jacobian.size()))
        fail(errc::invalid_input, "coefficients do not match the direction field");
    const int nt = coeffs.num_tets();
    DerivativeWeights w;
    w.deps.resize(nt);
    w.dmu_inv.resize(nt);
    w.dnu.resize(nt);
    w.dnu_inv.resize(nt);
    for (int t = 0; t < nt; ++t) {
        const Mat3& j = psi.jacobian[t];
        const double div = psi.divergence[t];
        w.deps[t] = div * coeffs.eps[t] - 2.0 * sym_part(j * coeffs.eps[t]);
        const Mat3 mu_inv = coeffs.mu[t].inverse();
        w.dmu_inv[t] = -div * mu_inv + 2.0 * sym_part(mu_inv * j);
        w.deps[t] = sym_part(w.deps[t]);
        w.dmu_inv[t] = sym_part(w.dmu_inv[t]);
        w.dnu[t] = div * coeffs.nu[t];
        w.dnu_inv[t] = -div / coeffs.nu[t];
    }
    return w;
}

InverseIdentityReport inverse_identities_check(const CoefficientSet& coeffs,
                                               const VertexField& psi) {
    const DerivativeWeights w = coefficient_derivative(coeffs, psi);
    InverseIdentityReport report;
    for (int t = 0; t < coeffs.num_tets(); ++t) {
        const Mat3& j = psi.jacobian[t];
        const double div = psi.divergence[t];
        const Mat3 dmu = div * coeffs.mu[t] - 2.0 * sym_part(j * coeffs.mu[t]);
        const Mat3 mu_inv = coeffs.mu[t].inverse();
        const Mat3 dev = w.dmu_inv[t] + mu_inv * dmu * mu_inv;
        report.max_matrix_deviation =
            std::max(report.max_matrix_deviation, dev.cwiseAbs().maxCoeff());
        const double sdev = std::abs(w.dnu_inv[t] + w.dnu[t] / (coeffs.nu[t] * coeffs.nu[t]));
        report.max_scalar_deviation = std::max(report.max_scalar_deviation, sdev);
    }
    return report;
}

} // namespace derham
