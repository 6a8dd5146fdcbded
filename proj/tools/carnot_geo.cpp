// carnot_geo: command-line front end for the carnot library.

#include "carnot/carnot.hpp"
#include "carnot/io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>

using namespace carnot;
using io::json;

namespace {

struct Request {
    std::string group, point, covector;
    std::string format = "json";
    double eps = -1.0;
    long budget = 10000;
    std::uint64_t seed = 0;
    int samples = 0;
    double margin = -1.0;
    bool oracle = false;
};

struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

StepTwoGroup load_group_arg(const std::string& arg) {
    if (arg.empty()) throw ValidationError("--group is required");
    const auto first = arg.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && arg[first] == '{') {
        try {
            return io::group_from_json(io::parse_json_text(arg, "group spec"));
        } catch (const json::exception& e) {
            throw ValidationError(std::string("group spec: ") + e.what());
        }
    }
    return io::load_group(arg);
}

GroupElement point_arg(const Request& r, const StepTwoGroup& G) {
    if (r.point.empty()) throw ValidationError("--point is required");
    return io::point_from_json(io::parse_json_text(r.point, "--point"), G);
}

Covector covector_arg(const Request& r, const StepTwoGroup& G) {
    if (r.covector.empty()) throw ValidationError("--covector is required");
    return io::covector_from_json(io::parse_json_text(r.covector, "--covector"), G);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json report_json(const StepTwoGroup& G, const DistanceReport& rep) {
    json j;
    j["dsq"] = rep.dsq;
    j["method"] = rep.method;
    j["classification"] = point_class_name(rep.classification);
    j["evidence_flags"] = {{"converged", rep.converged},
                           {"lower_bound_only", rep.lower_bound_only},
                           {"gm_status", gm_status_name(gm_status(G))},
                           {"hessian_top_eig", rep.hessian_top_eig},
                           {"starts_used", rep.starts_used}};
    j["maximizer"] = io::vec_to_json(rep.maximizer);
    j["covector"] = rep.covector ? io::covector_to_json(*rep.covector) : json(nullptr);
    return j;
}

OracleOptions oracle_options(const Request& r) {
    OracleOptions o;
    o.eps = r.eps;
    o.budget = r.budget;
    o.seed = r.seed;
    o.margin = r.margin;
    return o;
}

json cmd_dist(const Request& r) {
    const StepTwoGroup G = load_group_arg(r.group);
    const GroupElement g = point_arg(r, G);
    if (!r.oracle) return report_json(G, distance(G, g));
    const ShootingResult s = shoot_distance(G, g, oracle_options(r));
    if (!s.found) throw SolverFailure("oracle: no endpoint hit within the budget");
    json j;
    j["dsq"] = s.best_dsq;
    j["method"] = "oracle";
    j["classification"] = nullptr;
    j["evidence_flags"] = {{"upper_bound", true}, {"hits", s.hit_count}, {"attempts", s.attempts}, {"eps", s.eps}};
    j["maximizer"] = nullptr;
    j["covector"] = io::covector_to_json(s.hits.front().covector);
    return j;
}

json cmd_classify(const Request& r) {
    const StepTwoGroup G = load_group_arg(r.group);
    const GroupElement g = point_arg(r, G);
    const DistanceReport rep = distance(G, g);
    json j = report_json(G, rep);
    if (rep.covector && rep.covector->zeta.norm() > 0.0) j["abnormal"] = is_abnormal(G, *rep.covector).abnormal;
    if (G.family == Family::N32) {
        const N32CutClass cc = n32_cut_classify(g.x, g.t);
        j["cut"] = {{"in_cut", cc.in_cut}, {"kind", cc.in_cut ? json(cc.kind) : json(nullptr)}};
    }
    return j;
}

json cmd_geodesic(const Request& r) {
    const StepTwoGroup G = load_group_arg(r.group);
    const Covector c = covector_arg(r, G);
    const GroupElement e = exp_map(G, c);
    json j;
    j["x"] = io::vec_to_json(e.x);
    j["t"] = io::vec_to_json(e.t);
    j["length"] = c.zeta.norm();
    j["abnormal"] = c.zeta.norm() > 0.0 ? json(is_abnormal(G, c).abnormal) : json(nullptr);
    if (r.samples > 0) {
        json path = json::array();
        for (int i = 0; i <= r.samples; ++i) {
            const double s = static_cast<double>(i) / r.samples;
            const GroupElement p = exp_map(G, c, s);
            path.push_back({{"s", s}, {"x", io::vec_to_json(p.x)}, {"t", io::vec_to_json(p.t)}});
        }
        j["path"] = path;
    }
    return j;
}

json cmd_cut_time(const Request& r) {
    const StepTwoGroup G = load_group_arg(r.group);
    Covector c = covector_arg(r, G);
    const double zn = c.zeta.norm();
    if (zn == 0.0) throw ValidationError("cut-time: zeta must be nonzero");
    const bool normalized = std::abs(zn - 1.0) > 1e-12;
    if (normalized) c = {c.zeta / zn, c.theta / zn};
    const CutReport rep = cut_time_gm(G, c);
    json j;
    j["cut_time"] = number_or_null(rep.cut_time);
    j["finite"] = std::isfinite(rep.cut_time);
    j["abnormal"] = rep.abnormal;
    j["pi_subspace_dim"] = rep.pi_subspace_dim;
    j["converged"] = rep.converged;
    j["normalized"] = normalized;
    j["gm_status"] = gm_status_name(gm_status(G));
    j["minimizing_sigma"] = io::vec_to_json(rep.minimizing_sigma);
    return j;
}

json cmd_gm_check(const Request& r) {
    const StepTwoGroup G = load_group_arg(r.group);
    const int samples = r.samples > 0 ? r.samples : 256;
    const GMEvidence ev = gm_sufficient(G, samples, static_cast<unsigned>(r.seed));
    json j;
    j["passes"] = ev.passes;
    j["M_lower_estimate"] = ev.M_lower_estimate;
    j["m"] = G.m();
    j["certified"] = ev.certified;
    j["status"] = gm_status_name(gm_status(G));
    j["samples"] = samples;
    return j;
}

json cmd_shortest(const Request& r) {
    const StepTwoGroup G = load_group_arg(r.group);
    const GroupElement g = point_arg(r, G);
    const int samples = r.samples > 0 ? r.samples : 8;
    json j;
    json covs = json::array();
    if (G.family == Family::N32) {
        const N32CutClass cc = n32_cut_classify(g.x, g.t);
        if (cc.in_cut && (g.x.norm() > 0.0 || g.t.norm() > 0.0)) {
            const N32CutFamily fam = n32_shortest_at_cut(g.x, g.t, samples);
            j["dsq"] = fam.dsq;
            j["kind"] = fam.kind == "abnormal-axis" ? "abnormal_segment" : "circle_family";
            for (const auto& c : fam.samples) covs.push_back(io::covector_to_json(c));
            j["max_residual"] = fam.max_residual;
            j["covectors"] = covs;
            return j;
        }
    }
    const DistanceReport rep = distance(G, g);
    j["dsq"] = rep.dsq;
    if (G.is_ktype() && rep.classification == PointClass::Boundary) {
        const int p0 = static_cast<int>(G.data.cols());
        const auto fam = kbad_geodesics(G, g.x.tail(p0), g.t, 1, samples);
        j["kind"] = fam.size() > 2 ? "circle_family" : "pair";
        for (const auto& c : fam) covs.push_back(io::covector_to_json(c));
    } else if (G.family == Family::CR && rep.classification == PointClass::Boundary) {
        const CRBoundaryFamily fam = cr_boundary_shortest(G.data, g.x, g.t, rep.maximizer);
        j["kind"] = "boundary_family";
        json J = json::array();
        for (int k : fam.J) J.push_back(k);
        j["boundary_blocks"] = J;
        j["moduli_sq"] = io::vec_to_json(fam.moduli);
        j["moduli_nullspace"] = io::mat_to_json(fam.moduli_nullspace.size() ? fam.moduli_nullspace : Mat(0, 0));
        j["free_phases"] = fam.phase_count;
        for (const auto& c : fam.samples) covs.push_back(io::covector_to_json(c));
    } else {
        j["kind"] = rep.classification == PointClass::Origin ? "trivial" : "unique";
        if (rep.covector) covs.push_back(io::covector_to_json(*rep.covector));
    }
    if (covs.empty() && rep.classification != PointClass::Origin)
        throw SolverFailure("shortest: no verified covector for this point");
    j["covectors"] = covs;
    return j;
}

json cmd_region_plot(const Request& r) {
    const auto pts = region_boundary_curves(r.samples > 0 ? r.samples : 200);
    json rows = json::array();
    for (const auto& p : pts) rows.push_back({{"r", p.r}, {"rho", p.rho}, {"curve_id", p.curve_id}});
    return rows;
}

json cmd_oracle_check(const Request& r) {
    const StepTwoGroup G = load_group_arg(r.group);
    json j;
    if (r.point.empty()) {
        const int n = r.samples > 0 ? r.samples : 200;
        const ExpConsistency ec = verify_exp_consistency(G, n, r.seed);
        j["max_ode_deviation"] = ec.max_ode_deviation;
        j["max_generic_deviation"] = ec.max_generic_deviation;
        j["samples"] = ec.samples;
        return j;
    }
    const GroupElement g = point_arg(r, G);
    const DistanceReport rep = distance(G, g);
    const ShootingResult s = shoot_distance(G, g, oracle_options(r));
    j["reference_dsq"] = rep.dsq;
    j["reference_method"] = rep.method;
    j["found"] = s.found;
    j["oracle_dsq"] = number_or_null(s.best_dsq);
    j["abs_diff"] = s.found ? json(std::abs(s.best_dsq - rep.dsq)) : json(nullptr);
    j["hits"] = s.hit_count;
    j["attempts"] = s.attempts;
    j["eps"] = s.eps;
    return j;
}

std::string csv_cell(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    std::string s = v.dump();
    if (v.is_array() || v.is_object()) return "\"" + s + "\"";
    return s;
}

void emit(const json& j, const std::string& format, std::vector<std::string> keys = {}) {
    if (format == "json") {
        std::cout << j.dump() << "\n";
        return;
    }
    // csv: one header line and one row per record
    const json rows = j.is_array() ? j : json::array({j});
    if (rows.empty()) return;
    if (keys.empty())
        for (auto it = rows[0].begin(); it != rows[0].end(); ++it) keys.push_back(it.key());
    for (std::size_t i = 0; i < keys.size(); ++i) std::cout << (i ? "," : "") << keys[i];
    std::cout << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < keys.size(); ++i)
            std::cout << (i ? "," : "") << (row.contains(keys[i]) ? csv_cell(row[keys[i]]) : std::string());
        std::cout << "\n";
    }
}

int fail(const std::string& kind, const std::string& msg, int code) {
    std::cout << json{{"error", {{"kind", kind}, {"message", msg}}}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Sub-Riemannian distances and geodesics on step-two Carnot groups.\n"
        "Points are [[x...],[t...]]. Covectors are [[zeta...],[theta...]]; the geodesic is\n"
        "s -> exp(s (zeta, 2 theta)), so theta is half of the vertical covector.\n"
        "Exit codes: 0 ok, 2 invalid input, 3 solver failure (errors are printed as JSON)."};
    app.require_subcommand(1);
    Request req;
    std::string cmd;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--group", req.group, "group spec: JSON file path or inline JSON object");
        sub->add_option("--point", req.point, "point as JSON [[x...],[t...]]");
        sub->add_option("--covector", req.covector, "covector as JSON [[zeta...],[theta...]]");
        sub->add_option("--eps", req.eps, "oracle hit tolerance (default 1e-6 (1 + |g|))");
        sub->add_option("--budget", req.budget, "oracle number of starts")->check(CLI::PositiveNumber);
        sub->add_option("--seed", req.seed, "random seed");
        sub->add_option("--samples", req.samples, "samples for paths, families, curves or checks");
        sub->add_option("--margin", req.margin, "oracle op-norm search margin: theta bound pi (1 + margin)");
        sub->add_option("--format", req.format, "output format")->check(CLI::IsMember({"json", "csv"}));
        sub->callback([&cmd, sub] { cmd = sub->get_name(); });
        return sub;
    };
    add_common(app.add_subcommand("dist", "squared distance from the origin"))
        ->add_flag("--oracle", req.oracle, "use the shooting oracle instead of the solvers");
    add_common(app.add_subcommand("geodesic", "endpoint (and optional path) of a normal geodesic"));
    add_common(app.add_subcommand("classify", "classification of a point"));
    add_common(app.add_subcommand("cut-time", "cut time of a geodesic (unit speed)"));
    add_common(app.add_subcommand("gm-check", "sufficient condition for the GM property"));
    add_common(app.add_subcommand("shortest", "shortest geodesics to a point"));
    add_common(app.add_subcommand("region-plot", "curves bounding the Xi domain on N(3,2), CSV r,rho,curve_id"));
    add_common(app.add_subcommand("oracle-check", "shooting oracle versus the solvers, or exp-map consistency"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("validation", e.what(), 2);
    }
    if (cmd == "region-plot" && !app.get_subcommand("region-plot")->count("--format")) req.format = "csv";
    try {
        json out;
        if (cmd == "dist") out = cmd_dist(req);
        else if (cmd == "geodesic") out = cmd_geodesic(req);
        else if (cmd == "classify") out = cmd_classify(req);
        else if (cmd == "cut-time") out = cmd_cut_time(req);
        else if (cmd == "gm-check") out = cmd_gm_check(req);
        else if (cmd == "shortest") out = cmd_shortest(req);
        else if (cmd == "region-plot") out = cmd_region_plot(req);
        else out = cmd_oracle_check(req);
        if (cmd == "region-plot")
            emit(out, req.format, {"r", "rho", "curve_id"});
        else
            emit(out, req.format);
    } catch (const ValidationError& e) {
        return fail("validation", e.what(), 2);
    } catch (const DomainError& e) {
        return fail("validation", e.what(), 2);
    } catch (const PoleError& e) {
        return fail("validation", e.what(), 2);
    } catch (const json::exception& e) {
        return fail("validation", e.what(), 2);
    } catch (const SolverError& e) {
        return fail("solver", e.what(), 3);
    } catch (const SolverFailure& e) {
        return fail("solver", e.what(), 3);
    } catch (const std::exception& e) {
        return fail("solver", e.what(), 3);
    }
    return 0;
}
