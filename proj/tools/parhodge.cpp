// Command line front end: star, moduli, verify, export.

#include "parhodge/parhodge.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace parhodge;
using io::Json;

namespace {

enum Exit { Ok = 0, Validation = 2, Degenerate = 3, Singular = 4, Internal = 5 };

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::SingularPoint: return Singular;
    case ErrorKind::ConditionFailed:
    case ErrorKind::DegenerateInput:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::NoConvergence:
    case ErrorKind::NotSymmetric: return Degenerate;
    default: return Validation;
    }
}

struct Common {
    std::string example;
    std::string mesh_path;
    std::string system_path;
    int m = 0;
    int n = 2;
    int genus = 1;
    int boundary = 1;
    int subdiv = 1;
    int fiber = 1;
    std::string coeffs = "trivial";
    std::uint64_t seed = 0;
    std::optional<double> tolerance;
    std::optional<double> rank_tolerance;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--example", c.example, "builtin surface: torus, annulus, disk, genus_k")
        ->check(CLI::IsMember({"torus", "annulus", "disk", "genus_k"}));
    app->add_option("--mesh", c.mesh_path, "mesh JSON file");
    app->add_option("--system", c.system_path, "local system JSON file");
    app->add_option("--m", c.m, "resolution of the builtin surface");
    app->add_option("--n", c.n, "radial layers of the annulus");
    app->add_option("--genus", c.genus, "genus for genus_k");
    app->add_option("--boundary", c.boundary, "boundary components for genus_k");
    app->add_option("--subdiv", c.subdiv, "subdivision level for genus_k");
    app->add_option("--fiber", c.fiber, "fiber dimension of trivial coefficients");
    app->add_option("--coeffs", c.coeffs, "coefficients for builtin surfaces: trivial or so3")
        ->check(CLI::IsMember({"trivial", "so3"}));
    app->add_option("--seed", c.seed, "seed for random coefficients");
    app->add_option("--tolerance", c.tolerance, "residual tolerance");
    app->add_option("--rank-tolerance", c.rank_tolerance, "rank tolerance");
    app->add_option("--out", c.out, "output file (default stdout)");
    app->add_option("--format", c.format, "json or text")->check(CLI::IsMember({"json", "text"}));
}

Tolerance tolerance(const Common& c)
{
    Tolerance tol;
    if (const char* env = std::getenv("PARHODGE_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end == env || *end != '\0') {
            fail(ErrorKind::InvalidParameter, std::string("PARHODGE_TOL is not a number: ") + env);
        }
        tol.residual_tol = v;
    }
    if (c.tolerance) {
        tol.residual_tol = *c.tolerance;
    }
    if (c.rank_tolerance) {
        tol.rank_tol = *c.rank_tolerance;
    }
    tol.validate();
    return tol;
}

surface::GeneratedSurface builtin(const std::string& name, const Common& c, int m)
{
    if (name == "torus") {
        return surface::torus(m > 0 ? m : 4);
    }
    if (name == "annulus") {
        return surface::annulus(m > 0 ? m : 6, c.n);
    }
    if (name == "disk") {
        return surface::disk(m > 0 ? m : 4);
    }
    return surface::genus_k(c.genus, c.boundary, c.subdiv);
}

struct Input {
    std::string id;
    surface::SurfaceComplex complex;
    surface::PLMetric metric;
    localsys::FlatLocalSystem system;
    std::optional<surface::GeneratorLoops> loops;
};

localsys::FlatLocalSystem builtin_system(const surface::GeneratedSurface& s, const Common& c, const Tolerance& tol)
{
    if (c.coeffs == "so3") {
        std::vector<Matrix> images;
        for (const auto& q : moduli::random_representation(s.loops, c.seed)) {
            images.push_back(localsys::su2_adjoint(q, tol));
        }
        return localsys::from_representation(s.complex, s.loops, images, tol);
    }
    return localsys::trivial_system(s.complex, c.fiber);
}

Input load(const Common& c, const Tolerance& tol, int m)
{
    Input in;
    if (!c.example.empty()) {
        const auto s = builtin(c.example, c, m);
        in.id = s.id;
        in.complex = s.complex;
        in.metric = s.metric;
        in.loops = s.loops;
        in.system = c.system_path.empty() ? builtin_system(s, c, tol)
                                          : io::system_from_json(io::read_file(c.system_path), s.complex, &s.loops, tol);
        return in;
    }
    if (c.mesh_path.empty()) {
        fail(ErrorKind::InvalidParameter, "give --example or --mesh");
    }
    const auto mesh = io::mesh_from_json(io::read_file(c.mesh_path), tol);
    in.id = c.mesh_path;
    in.complex = mesh.complex;
    in.metric = mesh.metric;
    in.system = c.system_path.empty() ? localsys::trivial_system(mesh.complex, c.fiber)
                                      : io::system_from_json(io::read_file(c.system_path), mesh.complex, nullptr, tol);
    return in;
}

void emit(const Common& c, const Json& j)
{
    const std::string text = io::dump(j, c.format);
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) {
        fail(ErrorKind::InvalidParameter, "cannot write " + c.out);
    }
    f << text;
}

// ---------------------------------------------------------------------------

int cmd_star(const Common& c, bool components)
{
    const Tolerance tol = tolerance(c);
    const Input in = load(c, tol, c.m);
    parastar::StarOptions opt;
    opt.mesh_id = in.id;
    parastar::ParabolicStarReport r = parastar::parabolic_star(in.complex, in.metric, in.system, tol, opt);
    bool ok = r.compatible(tol);
    if (components || !in.complex.connected()) {
        const auto split = parastar::disconnected_split(in.complex, in.metric, in.system, tol);
        r.component_split = split.components;
        ok = ok && split.ok;
    }
    emit(c, io::report_json(r));
    if (!ok) {
        std::cerr << "parhodge: compatibility residuals exceed tolerance " << tol.residual_tol << "\n";
        return Degenerate;
    }
    return Ok;
}

int cmd_moduli(const Common& c, const std::string& point_path, const std::vector<double>& sample, bool trivial)
{
    const Tolerance tol = tolerance(c);
    moduli::ModuliPoint p;
    if (!point_path.empty()) {
        p = io::point_from_json(io::read_file(point_path));
    } else {
        if (sample.size() < 2) {
            fail(ErrorKind::InvalidParameter, "--sample needs g k [angles...]");
        }
        const int g = static_cast<int>(sample[0]);
        const int k = static_cast<int>(sample[1]);
        if (g != sample[0] || k != sample[1]) {
            fail(ErrorKind::InvalidParameter, "--sample: g and k must be integers");
        }
        const std::vector<double> angles(sample.begin() + 2, sample.end());
        p = trivial ? moduli::trivial_point(g, k, c.subdiv) : moduli::sample_point(g, k, angles, c.seed, c.subdiv, tol);
    }
    const auto t = moduli::tangent_space(p, tol);
    Json j;
    j["point"] = io::point_to_json(p);
    j["tangent"] = {{"dim_H0", t.dim_h0},
                    {"dim_H1", t.dim_h1},
                    {"dim_H1_par", t.dim_h1_par},
                    {"dim_H1_par_image", t.dim_h1_par_image},
                    {"expected_dim", t.expected_dim},
                    {"omega_rank", t.omega_rank},
                    {"reducible", t.reducible},
                    {"relation_residual", t.relation_residual},
                    {"boundary_angle_residual", t.boundary_angle_residual}};
    if (t.reducible) {
        emit(c, j);
        std::cerr << "parhodge: SingularPoint: representation is reducible (dim H^0 = " << t.dim_h0 << ")\n";
        return Singular;
    }
    const auto s = moduli::moduli_acs(p, nullptr, tol);
    j["goldman_omega"] = io::matrix_json(s.goldman_omega);
    j["acs"] = io::matrix_json(s.acs);
    j["residuals"] = s.residuals;
    j["star"] = io::report_json(s.star);
    emit(c, j);
    const bool ok = s.acs.rows() == 0 || (s.residuals.at("acs_sq") < tol.residual_tol &&
                                          s.residuals.at("goldman_invariance") < tol.residual_tol &&
                                          s.residuals.at("taming_min_eigenvalue") > 0.0);
    return ok ? Ok : Degenerate;
}

// Invariant sweep on one input.
Json sweep_case(const Input& in, const Tolerance& tol, std::uint64_t seed, bool& ok)
{
    const auto& k = in.complex;
    const auto mc = hodge::MetricComplex::build(k, in.metric, in.system, tol);
    const auto& cob = mc.cob();
    const int n = in.system.fiber_dim;
    const int h0 = twisted::cohomology(cob, 0, twisted::Flavor::Absolute, tol).dim;
    const int h1 = twisted::cohomology(cob, 1, twisted::Flavor::Absolute, tol).dim;
    const int h2 = twisted::cohomology(cob, 2, twisted::Flavor::Absolute, tol).dim;
    const auto par = twisted::restriction_and_parabolic(cob, tol);
    const auto hd = hodge::hodge_decomposition(mc);
    const auto star = parastar::star_on_classes(mc, par.parabolic);

    // a random gauge must not change the cohomology or the star's spectrum
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Matrix> gauge;
    for (int v = 0; v < k.vertex_count(); ++v) {
        Matrix a(n, n);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            a.data()[i] = normal(rng);
        }
        Eigen::HouseholderQR<Matrix> qr(a);
        gauge.push_back(qr.householderQ());
    }
    const auto fg = localsys::gauge_transform(k, in.system, gauge);
    const auto mcg = hodge::MetricComplex::build(k, in.metric, fg, tol);
    const auto parg = twisted::restriction_and_parabolic(mcg.cob(), tol);
    const auto starg = parastar::star_on_classes(mcg, parg.parabolic);

    Json j;
    j["mesh_id"] = in.id;
    j["fiber_dim"] = n;
    j["d1d0_residual"] = cob.d1d0_residual;
    j["dims"] = {h0, h1, h2};
    j["euler_characteristic"] = k.euler_characteristic();
    const bool euler = h0 - h1 + h2 == n * k.euler_characteristic();
    j["euler_identity"] = euler;
    j["dim_H1_par"] = par.dim;
    j["parabolic_even"] = par.dim % 2 == 0;
    j["exactness_check"] = par.exactness_check;
    j["decomposition_total"] = hd.dim_total;
    double orth = 0.0;
    for (const auto& [key, v] : hd.orthogonality) {
        orth = std::max(orth, v);
    }
    j["decomposition_orthogonality"] = orth;
    j["identity_neumann"] = hd.refinement.identity_neumann;
    j["identity_dirichlet"] = hd.refinement.identity_dirichlet;
    j["compatibility_residuals"] = io::residuals_json(star.residuals);
    const bool gauge_ok = parg.dim == par.dim && parastar::eigenvalue_defect(starg.j_par) < 1e-8 &&
                          (par.dim == 0 || std::abs(starg.residuals.at("taming_min_eigenvalue") -
                                                    star.residuals.at("taming_min_eigenvalue")) < 1e-8);
    j["gauge_invariance"] = gauge_ok;
    const bool case_ok = cob.d1d0_residual < tol.residual_tol && euler && par.dim % 2 == 0 && par.exactness_check &&
                         hd.dim_total == static_cast<int>(mc.m1().rows()) && orth < tol.residual_tol &&
                         hd.refinement.identity_neumann && hd.refinement.identity_dirichlet &&
                         star.compatible(tol) && gauge_ok;
    j["ok"] = case_ok;
    ok = ok && case_ok;
    return j;
}

Json refinement_row(const Common& c, int m, const Tolerance& tol)
{
    const auto s = builtin(c.example, c, m);
    Input in{s.id, s.complex, s.metric, builtin_system(s, c, tol), s.loops};
    const auto mc = hodge::MetricComplex::build(in.complex, in.metric, in.system, tol);
    const auto gd = hodge::galerkin_diagnostics(mc);
    Json row;
    row["m"] = m;
    row["edges"] = in.complex.edge_count();
    row["jh_skew"] = gd.skew_residual;
    row["jh_sq_harmonic"] = gd.j_sq_harmonic;
    row["jh_sq_ccc"] = gd.j_sq_ccc;
    row["angle_jh_hn_hd"] = gd.angle_jh_n_h_d;
    row["p38_residual"] = gd.projection_commutator;
    // J_h against J_par on the harmonic parabolic representatives
    const auto par = twisted::restriction_and_parabolic(mc.cob(), tol);
    const auto star = parastar::star_on_classes(mc, par.parabolic);
    double gap = 0.0;
    if (star.dim_h1_par > 0) {
        const Matrix jh_u = hodge::galerkin_star(mc) * star.u_basis;
        const Matrix diff = jh_u - star.u_basis * star.j_par;
        gap = std::sqrt(std::max(0.0, singular_values(symmetric_part(diff.transpose() * mc.m1() * diff))[0]) /
                        std::max(1e-300, singular_values(star.m_u)[0]));
    }
    row["jh_vs_jpar"] = gap;
    return row;
}

int cmd_verify(const Common& c, const std::vector<int>& refine)
{
    const Tolerance tol = tolerance(c);
    Json j;
    bool ok = true;
    if (!refine.empty()) {
        if (c.example.empty()) {
            fail(ErrorKind::InvalidParameter, "--refine needs --example");
        }
        Json rows = Json::array();
        for (int m : refine) {
            rows.push_back(refinement_row(c, m, tol));
        }
        j["example"] = c.example;
        j["refinement"] = rows;
        emit(c, j);
        return Ok;
    }
    Json cases = Json::array();
    if (!c.example.empty() || !c.mesh_path.empty()) {
        cases.push_back(sweep_case(load(c, tol, c.m), tol, c.seed, ok));
    } else {
        Common cc = c;
        for (const char* name : {"torus", "annulus", "disk", "genus_k"}) {
            for (const char* coeffs : {"trivial", "so3"}) {
                cc.example = name;
                cc.coeffs = coeffs;
                cc.genus = 1;
                cc.boundary = 1;
                cc.subdiv = 1;
                cases.push_back(sweep_case(load(cc, tol, 0), tol, c.seed, ok));
            }
        }
    }
    j["cases"] = cases;
    j["ok"] = ok;
    emit(c, j);
    return ok ? Ok : Degenerate;
}

int cmd_export(const Common& c, const std::string& mesh_out, const std::string& system_out)
{
    const Tolerance tol = tolerance(c);
    const Input in = load(c, tol, c.m);
    if (!mesh_out.empty()) {
        std::ofstream(mesh_out, std::ios::binary) << io::dump(io::mesh_to_json(in.complex, in.metric));
    }
    if (!system_out.empty()) {
        std::ofstream(system_out, std::ios::binary) << io::dump(io::system_to_json(in.complex, in.system));
    }
    return Ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parabolic Hodge star on twisted surface cohomology"};
    app.require_subcommand(1);

    Common star_opts, moduli_opts, verify_opts, export_opts;
    bool components = false;
    auto* star = app.add_subcommand("star", "compatible complex structure on H^1_par");
    add_common(star, star_opts);
    star->add_flag("--components", components, "add per-component reports");

    std::string point_path;
    std::vector<double> sample;
    bool trivial = false;
    auto* mod = app.add_subcommand("moduli", "tangent space structures at a moduli point");
    add_common(mod, moduli_opts);
    mod->add_option("--point", point_path, "point JSON file");
    mod->add_option("--sample", sample, "g k [angles...]")->expected(2, -1);
    mod->add_flag("--trivial", trivial, "use the trivial representation");

    std::vector<int> refine;
    auto* verify = app.add_subcommand("verify", "invariant sweep or refinement table");
    add_common(verify, verify_opts);
    verify->add_option("--refine", refine, "resolutions for the refinement table")->delimiter(',');

    std::string mesh_out, system_out;
    auto* exp = app.add_subcommand("export", "write a builtin mesh and system as JSON");
    add_common(exp, export_opts);
    exp->add_option("--mesh-out", mesh_out, "mesh JSON path");
    exp->add_option("--system-out", system_out, "system JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Ok : Validation;
    }

    try {
        if (star->parsed()) {
            return cmd_star(star_opts, components);
        }
        if (mod->parsed()) {
            return cmd_moduli(moduli_opts, point_path, sample, trivial);
        }
        if (verify->parsed()) {
            return cmd_verify(verify_opts, refine);
        }
        if (exp->parsed()) {
            return cmd_export(export_opts, mesh_out, system_out);
        }
    } catch (const Error& e) {
        std::cerr << "parhodge: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "parhodge: internal error: " << e.what() << "\n";
        return Internal;
    }
    return Internal;
}
