#pragma once

// JSON input for meshes, local systems and moduli points, and the report
// emitter. Reports are written with 17 significant digits so that equal
// runs give byte-identical files.

#include "parhodge/moduli.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace parhodge::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Emitter

namespace detail {

inline std::string number(double x)
{
    if (!std::isfinite(x)) {
        return "null";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string quoted(const std::string& s) { return Json(s).dump(); }

inline bool is_flat(const Json& j)
{
    for (const auto& x : j) {
        if (x.is_structured()) {
            return false;
        }
    }
    return true;
}

inline void write_json(std::ostream& os, const Json& j, int indent)
{
    const std::string pad(indent + 2, ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            os << (first ? "" : ",\n") << pad << quoted(it.key()) << ": ";
            write_json(os, it.value(), indent + 2);
            first = false;
        }
        os << "\n" << std::string(indent, ' ') << "}";
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        if (is_flat(j)) {
            os << "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                os << (i ? ", " : "");
                write_json(os, j[i], indent);
            }
            os << "]";
            return;
        }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            os << (i ? ",\n" : "") << pad;
            write_json(os, j[i], indent + 2);
        }
        os << "\n" << std::string(indent, ' ') << "]";
        return;
    }
    case Json::value_t::number_float: os << number(j.get<double>()); return;
    default: os << j.dump(); return;
    }
}

inline void write_text(std::ostream& os, const Json& j, const std::string& path)
{
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            write_text(os, it.value(), path.empty() ? it.key() : path + "." + it.key());
        }
        return;
    }
    if (j.is_array() && !j.empty() && j[0].is_array()) {
        os << path << ": [" << j.size() << " x " << j[0].size() << "]\n";
        for (const auto& row : j) {
            os << " ";
            for (const auto& x : row) {
                os << " " << (x.is_number_float() ? number(x.get<double>()) : x.dump());
            }
            os << "\n";
        }
        return;
    }
    if (j.is_array() && !j.empty() && j[0].is_object()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            write_text(os, j[i], path + "[" + std::to_string(i) + "]");
        }
        return;
    }
    os << path << ": ";
    if (j.is_number_float()) {
        os << number(j.get<double>());
    } else if (j.is_string()) {
        os << j.get<std::string>();
    } else if (j.is_array()) {
        os << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
            os << (i ? " " : "") << (j[i].is_number_float() ? number(j[i].get<double>()) : j[i].dump());
        }
        os << "]";
    } else {
        os << j.dump();
    }
    os << "\n";
}

} // namespace detail

inline std::string dump(const Json& j, const std::string& format = "json")
{
    std::ostringstream os;
    if (format == "text") {
        detail::write_text(os, j, "");
    } else {
        detail::write_json(os, j, 0);
        os << "\n";
    }
    return os.str();
}

inline Json matrix_json(const Matrix& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json residuals_json(const std::map<std::string, double>& r)
{
    Json out = Json::object();
    for (const char* key : {"jpar_sq", "omega_invariance", "taming_min_eigenvalue", "condition_sigma_min", "p38_residual"}) {
        const auto it = r.find(key);
        out[key] = it == r.end() ? 0.0 : it->second;
    }
    for (const auto& [k, v] : r) {
        if (!out.contains(k)) {
            out[k] = v;
        }
    }
    return out;
}

inline Json report_json(const parastar::ParabolicStarReport& r)
{
    Json j;
    j["inputs"] = {{"mesh_id", r.mesh_id}, {"metric_hash", r.metric_hash}, {"system_hash", r.system_hash}};
    j["fiber_dim"] = r.fiber_dim;
    j["dim_H1"] = r.dim_h1;
    j["dim_H1_rel"] = r.dim_h1_rel;
    j["dim_H1_bd"] = r.dim_h1_bd;
    j["dim_H1_par"] = r.dim_h1_par;
    j["exactness_check"] = r.exactness_check;
    j["U_basis"] = matrix_json(r.u_basis);
    j["M_U"] = matrix_json(r.m_u);
    j["Omega_U"] = matrix_json(r.omega_u);
    j["G"] = matrix_json(r.g);
    j["R"] = matrix_json(r.r);
    j["J_par"] = matrix_json(r.j_par);
    j["residuals"] = residuals_json(r.residuals);
    Json split = Json::array();
    for (const auto& c : r.component_split) {
        split.push_back(report_json(c));
    }
    j["component_split"] = split;
    return j;
}

// ---------------------------------------------------------------------------
// Input

inline Json parse(const std::string& text, const std::string& what)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::ParseError, what + ": " + e.what());
    }
}

inline Json read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::ParseError, "cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

namespace detail {

template <typename F>
auto guarded(const std::string& what, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const Json::exception& e) {
        fail(ErrorKind::ParseError, what + ": " + e.what());
    }
}

inline Matrix matrix_from(const Json& j, int n)
{
    Matrix m(n, n);
    if (j.size() == static_cast<std::size_t>(n) && j[0].is_array()) {
        for (int r = 0; r < n; ++r) {
            if (j[r].size() != static_cast<std::size_t>(n)) {
                fail(ErrorKind::DimensionMismatch, "matrix row has the wrong length");
            }
            for (int c = 0; c < n; ++c) {
                m(r, c) = j[r][c].get<double>();
            }
        }
    } else if (j.size() == static_cast<std::size_t>(n * n)) {
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                m(r, c) = j[r * n + c].get<double>();
            }
        }
    } else {
        fail(ErrorKind::DimensionMismatch, "matrix must have n rows of n entries or n*n entries");
    }
    return m;
}

} // namespace detail

struct MeshInput {
    surface::SurfaceComplex complex;
    surface::PLMetric metric;
};

/// {"vertices": count or [[x,y,z],...], "triangles": [[i,j,k],...],
///  "edge_lengths": [[i,j,l],...]}; coordinates give the lengths when
/// edge_lengths is absent.
inline MeshInput mesh_from_json(const Json& j, const Tolerance& tol = {})
{
    return detail::guarded("mesh", [&] {
        MeshInput out;
        const Json& verts = j.at("vertices");
        std::vector<Eigen::Vector3d> coords;
        int vcount = 0;
        if (verts.is_number_integer()) {
            vcount = verts.get<int>();
        } else {
            for (const auto& p : verts) {
                if (p.size() != 3) {
                    fail(ErrorKind::DimensionMismatch, "vertex coordinates need 3 entries");
                }
                coords.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
            }
            vcount = static_cast<int>(coords.size());
        }
        std::vector<surface::Triangle> tris;
        for (const auto& t : j.at("triangles")) {
            if (t.size() != 3) {
                fail(ErrorKind::InvalidParameter, "triangles need 3 vertices");
            }
            tris.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
        }
        out.complex = surface::SurfaceComplex::build(vcount, std::move(tris));
        const auto& k = out.complex;
        out.metric.edge_lengths.assign(k.edge_count(), -1.0);
        if (j.contains("edge_lengths")) {
            for (const auto& e : j.at("edge_lengths")) {
                const int idx = k.edge_index(e.at(0).get<int>(), e.at(1).get<int>());
                if (idx < 0) {
                    std::ostringstream os;
                    os << "edge_lengths names (" << e[0] << "," << e[1] << "), which is not an edge";
                    fail(ErrorKind::InvalidParameter, os.str());
                }
                out.metric.edge_lengths[idx] = e.at(2).get<double>();
            }
        } else if (!coords.empty()) {
            for (int e = 0; e < k.edge_count(); ++e) {
                out.metric.edge_lengths[e] = (coords[k.edges()[e][0]] - coords[k.edges()[e][1]]).norm();
            }
        } else {
            fail(ErrorKind::InvalidParameter, "mesh without coordinates needs edge_lengths");
        }
        for (int e = 0; e < k.edge_count(); ++e) {
            if (out.metric.edge_lengths[e] < 0.0) {
                std::ostringstream os;
                os << "edge (" << k.edges()[e][0] << "," << k.edges()[e][1] << ") has no length";
                fail(ErrorKind::InvalidParameter, os.str());
            }
        }
        surface::validate_metric(k, out.metric, tol);
        return out;
    });
}

inline Json mesh_to_json(const surface::SurfaceComplex& k, const surface::PLMetric& h)
{
    Json j;
    j["vertices"] = k.vertex_count();
    Json tris = Json::array();
    for (const auto& t : k.triangles()) {
        tris.push_back({t[0], t[1], t[2]});
    }
    j["triangles"] = tris;
    Json lengths = Json::array();
    for (int e = 0; e < k.edge_count(); ++e) {
        lengths.push_back({k.edges()[e][0], k.edges()[e][1], h.edge_lengths[e]});
    }
    j["edge_lengths"] = lengths;
    return j;
}

/// {"fiber_dim": n, "transports": [{"tail", "head", "matrix"}]} or
/// {"representation": {"images": [...]} | {"quaternions": [...]}}. The
/// representation form needs the generator loops of a builtin surface.
inline localsys::FlatLocalSystem system_from_json(const Json& j, const surface::SurfaceComplex& k,
                                                  const surface::GeneratorLoops* loops, const Tolerance& tol = {})
{
    return detail::guarded("system", [&] {
        if (j.contains("representation")) {
            if (loops == nullptr) {
                fail(ErrorKind::InvalidParameter, "a representation needs a builtin example mesh");
            }
            const Json& rep = j.at("representation");
            std::vector<Matrix> images;
            if (rep.contains("quaternions")) {
                for (const auto& q : rep.at("quaternions")) {
                    images.push_back(localsys::su2_adjoint(
                        {q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>()},
                        tol));
                }
            } else {
                const int n = j.value("fiber_dim", 3);
                for (const auto& m : rep.at("images")) {
                    images.push_back(detail::matrix_from(m, n));
                }
            }
            return localsys::from_representation(k, *loops, images, tol);
        }
        const int n = j.at("fiber_dim").get<int>();
        if (n <= 0) {
            fail(ErrorKind::InvalidParameter, "fiber_dim must be positive");
        }
        std::vector<localsys::OrientedTransport> list;
        for (const auto& t : j.at("transports")) {
            list.push_back({t.at("tail").get<int>(), t.at("head").get<int>(), detail::matrix_from(t.at("matrix"), n)});
        }
        return localsys::from_edge_transports(k, n, list, tol);
    });
}

inline Json system_to_json(const surface::SurfaceComplex& k, const localsys::FlatLocalSystem& f)
{
    Json j;
    j["fiber_dim"] = f.fiber_dim;
    Json list = Json::array();
    for (int e = 0; e < k.edge_count(); ++e) {
        Json t;
        t["tail"] = k.edges()[e][0];
        t["head"] = k.edges()[e][1];
        t["matrix"] = matrix_json(f.transports[e]);
        list.push_back(t);
    }
    j["transports"] = list;
    return j;
}

inline moduli::ModuliPoint point_from_json(const Json& j)
{
    return detail::guarded("point", [&] {
        moduli::ModuliPoint p;
        p.genus = j.at("genus").get<int>();
        p.boundary_count = j.at("boundary_count").get<int>();
        p.subdiv = j.value("subdiv", 1);
        p.seed = j.value("seed", std::uint64_t{0});
        p.boundary_angles = j.value("boundary_angles", std::vector<double>{});
        for (const auto& q : j.at("phi_images")) {
            p.phi_images.push_back({q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                    q.at(3).get<double>()});
        }
        moduli::validate_surface(p.genus, p.boundary_count);
        if (static_cast<int>(p.phi_images.size()) != 2 * p.genus + p.boundary_count) {
            fail(ErrorKind::DimensionMismatch, "phi_images needs 2g + k quaternions");
        }
        if (static_cast<int>(p.boundary_angles.size()) != p.boundary_count) {
            fail(ErrorKind::InvalidAngles, "boundary_angles needs one angle per boundary component");
        }
        const auto [rel, ang] = moduli::point_residuals(p);
        if (rel > 1e-9) {
            std::ostringstream os;
            os << "relation residual " << rel;
            fail(ErrorKind::RelationViolated, os.str());
        }
        if (ang > 1e-6) {
            std::ostringstream os;
            os << "boundary image is off its class by " << ang;
            fail(ErrorKind::InvalidAngles, os.str());
        }
        return p;
    });
}

inline Json point_to_json(const moduli::ModuliPoint& p)
{
    Json j;
    j["genus"] = p.genus;
    j["boundary_count"] = p.boundary_count;
    j["subdiv"] = p.subdiv;
    j["seed"] = p.seed;
    j["boundary_angles"] = p.boundary_angles;
    Json qs = Json::array();
    for (const auto& q : p.phi_images) {
        qs.push_back({q.w, q.x, q.y, q.z});
    }
    j["phi_images"] = qs;
    return j;
}

} // namespace parhodge::io
