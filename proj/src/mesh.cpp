#include "derham/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "derham/errors.hpp"
#include "json.hpp"

namespace derham {

namespace {

double stored_order_det(const std::vector<Vec3>& vertices, const std::array<int, 4>& t) {
    Mat3 edge;
    edge.col(0) = vertices[t[1]] - vertices[t[0]];
    edge.col(1) = vertices[t[2]] - vertices[t[0]];
    edge.col(2) = vertices[t[3]] - vertices[t[0]];
    return edge.determinant();
}

void check_connected(const TetMesh& mesh) {
    const int nv = mesh.num_vertices();
    if (nv == 0) fail(errc::validation, "mesh has no vertices");
    std::vector<int> seen(nv, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    std::vector<std::vector<int>> adj(nv);
    for (const auto& e : mesh.edges) {
        adj[e[0]].push_back(e[1]);
        adj[e[1]].push_back(e[0]);
    }
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
    }
    const long reached = std::count(seen.begin(), seen.end(), 1);
    if (reached != nv)
        fail(errc::validation,
             "mesh is not connected: " + std::to_string(nv - reached) +
                 " vertices unreachable from vertex 0");
}

} // namespace

int TetMesh::dof_count(int q) const {
    switch (q) {
        case 0: return num_vertices();
        case 1: return num_edges();
        case 2: return num_faces();
        case 3: return num_tets();
        default: fail(errc::usage, "form degree must be in 0..3, got " + std::to_string(q));
    }
}

double TetMesh::total_volume() const {
    double v = 0;
    for (int t = 0; t < num_tets(); ++t) v += tet_volume(t);
    return v;
}

Vec3 TetMesh::face_centroid(int face) const {
    const auto& f = faces[face];
    return (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0;
}

Vec3 TetMesh::boundary_outward_normal(int face) const {
    const auto& f = faces[face];
    const int tet = face_tets[face][0];
    if (face_tets[face][1] != -1)
        fail(errc::usage, "face " + std::to_string(face) + " is interior");
    Vec3 n = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
    const Vec3 to_tet = geometry(tet).centroid() - face_centroid(face);
    if (n.dot(to_tet) > 0) n = -n;
    return n.normalized();
}

TetMesh TetMesh::from_arrays(std::vector<Vec3> vertices,
                             std::vector<std::array<int, 4>> tets) {
    TetMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.tets = std::move(tets);
    const int nv = mesh.num_vertices();
    const int nt = mesh.num_tets();

    for (int t = 0; t < nt; ++t) {
        const auto& tet = mesh.tets[t];
        for (int v : tet)
            if (v < 0 || v >= nv)
                fail(errc::validation, "tet " + std::to_string(t) + ": vertex index " +
                                           std::to_string(v) + " out of range");
        std::array<int, 4> s = tet;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end())
            fail(errc::validation, "tet " + std::to_string(t) + ": repeated vertex");
        if (stored_order_det(mesh.vertices, tet) <= 0)
            fail(errc::validation, "tet " + std::to_string(t) + ": non-positive orientation");
        mesh.tet_sorted.push_back(s);
    }

    // Canonical edge/face tables: lexicographically sorted unique simplices.
    std::set<std::array<int, 2>> edge_set;
    std::set<std::array<int, 3>> face_set;
    for (const auto& s : mesh.tet_sorted) {
        for (const auto& le : kTetEdges) edge_set.insert({s[le[0]], s[le[1]]});
        for (const auto& lf : kTetFaces) face_set.insert({s[lf[0]], s[lf[1]], s[lf[2]]});
    }
    mesh.edges.assign(edge_set.begin(), edge_set.end());
    mesh.faces.assign(face_set.begin(), face_set.end());

    std::map<std::array<int, 2>, int> edge_id;
    for (int e = 0; e < mesh.num_edges(); ++e) edge_id[mesh.edges[e]] = e;
    std::map<std::array<int, 3>, int> face_id;
    for (int f = 0; f < mesh.num_faces(); ++f) face_id[mesh.faces[f]] = f;

    mesh.face_tets.assign(mesh.num_faces(), {-1, -1});
    for (int t = 0; t < nt; ++t) {
        const auto& s = mesh.tet_sorted[t];
        std::array<int, 6> te;
        for (int i = 0; i < 6; ++i) te[i] = edge_id.at({s[kTetEdges[i][0]], s[kTetEdges[i][1]]});
        mesh.tet_edges.push_back(te);
        std::array<int, 4> tf;
        for (int i = 0; i < 4; ++i) {
            const int f = face_id.at({s[kTetFaces[i][0]], s[kTetFaces[i][1]], s[kTetFaces[i][2]]});
            tf[i] = f;
            auto& inc = mesh.face_tets[f];
            if (inc[0] == -1)
                inc[0] = t;
            else if (inc[1] == -1)
                inc[1] = t;
            else
                fail(errc::validation,
                     "face " + std::to_string(f) + " incident to more than two tets");
        }
        mesh.tet_faces.push_back(tf);
    }

    for (int f = 0; f < mesh.num_faces(); ++f)
        if (mesh.face_tets[f][1] == -1) mesh.boundary_faces.push_back(f);

    check_connected(mesh);
    return mesh;
}

TetMesh generate_cube_mesh(int n) {
    if (n < 1) fail(errc::usage, "cube subdivisions must be >= 1, got " + std::to_string(n));
    const int m = n + 1;
    std::vector<Vec3> vertices;
    vertices.reserve(static_cast<size_t>(m) * m * m);
    for (int k = 0; k < m; ++k)
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i)
                vertices.emplace_back(double(i) / n, double(j) / n, double(k) / n);
    const auto vid = [m](int i, int j, int k) { return i + m * (j + m * k); };

    // Kuhn split: one tet per permutation of the axis step order, all cells
    // sharing the (0,0,0)->(1,1,1) diagonal so faces conform across cells.
    constexpr std::array<std::array<int, 3>, 6> perms = {{
        {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
    }};
    const auto parity = [](const std::array<int, 3>& p) {
        int inv = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                if (p[a] > p[b]) ++inv;
        return inv % 2;
    };

    std::vector<std::array<int, 4>> tets;
    tets.reserve(static_cast<size_t>(6) * n * n * n);
    for (int ck = 0; ck < n; ++ck)
        for (int cj = 0; cj < n; ++cj)
            for (int ci = 0; ci < n; ++ci)
                for (const auto& p : perms) {
                    std::array<int, 3> c = {ci, cj, ck};
                    std::array<int, 4> path;
                    path[0] = vid(c[0], c[1], c[2]);
                    for (int step = 0; step < 3; ++step) {
                        c[p[step]] += 1;
                        path[step + 1] = vid(c[0], c[1], c[2]);
                    }
                    if (parity(p)) std::swap(path[1], path[2]);
                    tets.push_back(path);
                }
    return TetMesh::from_arrays(std::move(vertices), std::move(tets));
}

BoundaryPartition tag_boundary(const TetMesh& mesh, const FaceSelector& selector) {
    BoundaryPartition part;
    for (int f : mesh.boundary_faces) {
        if (selector(mesh.face_centroid(f), mesh.boundary_outward_normal(f)))
            part.gamma_t.push_back(f);
        else
            part.gamma_n.push_back(f);
    }
    return part;
}

BoundaryPartition make_partition(const TetMesh& mesh, std::vector<int> gamma_t) {
    std::sort(gamma_t.begin(), gamma_t.end());
    gamma_t.erase(std::unique(gamma_t.begin(), gamma_t.end()), gamma_t.end());
    std::set<int> boundary(mesh.boundary_faces.begin(), mesh.boundary_faces.end());
    for (int f : gamma_t)
        if (!boundary.count(f))
            fail(errc::validation, "gamma_t face " + std::to_string(f) + " is not a boundary face");
    BoundaryPartition part;
    part.gamma_t = std::move(gamma_t);
    std::set_difference(mesh.boundary_faces.begin(), mesh.boundary_faces.end(),
                        part.gamma_t.begin(), part.gamma_t.end(),
                        std::back_inserter(part.gamma_n));
    return part;
}

BoundaryPartition tag_boundary_spec(const TetMesh& mesh, const std::string& spec) {
    if (spec == "all") return tag_boundary(mesh, [](const Vec3&, const Vec3&) { return true; });
    if (spec == "none") return tag_boundary(mesh, [](const Vec3&, const Vec3&) { return false; });

    struct Plane {
        int axis;
        double value;
    };
    std::vector<Plane> planes;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.size() != 2 || token[0] < 'x' || token[0] > 'z' ||
            (token[1] != '0' && token[1] != '1'))
            fail(errc::usage, "unknown gamma-t selector token '" + token +
                                  "' (expected all, none, or x0,x1,y0,y1,z0,z1)");
        planes.push_back({token[0] - 'x', token[1] == '0' ? 0.0 : 1.0});
    }
    const double tol = 1e-12;
    return tag_boundary(mesh, [planes, tol](const Vec3& centroid, const Vec3&) {
        for (const auto& p : planes)
            if (std::abs(centroid[p.axis] - p.value) < tol) return true;
        return false;
    });
}

MeshFile load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::parse, "cannot open mesh file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::parse, "mesh file '" + path + "': " + e.what());
    }
    if (!j.contains("vertices") || !j["vertices"].is_array())
        fail(errc::parse, "mesh file '" + path + "': missing \"vertices\" array");
    if (!j.contains("tets") || !j["tets"].is_array())
        fail(errc::parse, "mesh file '" + path + "': missing \"tets\" array");

    std::vector<Vec3> vertices;
    for (size_t i = 0; i < j["vertices"].size(); ++i) {
        const auto& v = j["vertices"][i];
        if (!v.is_array() || v.size() != 3)
            fail(errc::parse, "vertex record " + std::to_string(i) + ": expected [x,y,z]");
        vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    std::vector<std::array<int, 4>> tets;
    for (size_t i = 0; i < j["tets"].size(); ++i) {
        const auto& t = j["tets"][i];
        if (!t.is_array() || t.size() != 4)
            fail(errc::parse, "tet record " + std::to_string(i) + ": expected [i,j,k,l]");
        tets.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>(), t[3].get<int>()});
    }

    MeshFile file;
    file.mesh = TetMesh::from_arrays(std::move(vertices), std::move(tets));

    std::vector<int> gamma_t;
    if (j.contains("gamma_t_faces")) {
        std::map<std::array<int, 3>, int> face_id;
        for (int f = 0; f < file.mesh.num_faces(); ++f) face_id[file.mesh.faces[f]] = f;
        for (size_t i = 0; i < j["gamma_t_faces"].size(); ++i) {
            const auto& rec = j["gamma_t_faces"][i];
            if (!rec.is_array() || rec.size() != 3)
                fail(errc::parse, "gamma_t record " + std::to_string(i) + ": expected [a,b,c]");
            std::array<int, 3> tri = {rec[0].get<int>(), rec[1].get<int>(), rec[2].get<int>()};
            std::sort(tri.begin(), tri.end());
            const auto it = face_id.find(tri);
            if (it == face_id.end())
                fail(errc::parse, "gamma_t record " + std::to_string(i) + ": no such face");
            gamma_t.push_back(it->second);
        }
    }
    file.partition = make_partition(file.mesh, std::move(gamma_t));
    return file;
}

void save_mesh(const TetMesh& mesh, const BoundaryPartition& partition,
               const std::string& path) {
    nlohmann::ordered_json j;
    j["vertices"] = nlohmann::json::array();
    for (const auto& v : mesh.vertices) j["vertices"].push_back({v.x(), v.y(), v.z()});
    j["tets"] = nlohmann::json::array();
    for (const auto& t : mesh.tets) j["tets"].push_back({t[0], t[1], t[2], t[3]});
    j["gamma_t_faces"] = nlohmann::json::array();
    for (int f : partition.gamma_t) {
        const auto& tri = mesh.faces[f];
        j["gamma_t_faces"].push_back({tri[0], tri[1], tri[2]});
    }
    std::ofstream out(path);
    if (!out) fail(errc::parse, "cannot write mesh file '" + path + "'");
    out << j.dump(2) << "\n";
}

const char* errc_name(errc c) {
    switch (c) {
        case errc::usage: return "usage";
        case errc::parse: return "parse";
        case errc::validation: return "validation";
        case errc::admissibility: return "admissibility";
        case errc::factorization: return "factorization";
        case errc::multiplicity: return "multiplicity";
        case errc::normalization: return "normalization";
        case errc::tracking: return "tracking";
        case errc::invalid_input: return "invalid-input";
        case errc::verify_failed: return "verify-failed";
    }
    return "unknown";
}

} // namespace derham
