// wavedisp: dispersion diagrams, group velocities, branch-point traces and
// transient signals for a three-layer acoustic waveguide.
#include <omp.h>

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "wavedisp/branchpoints.hpp"
#include "wavedisp/dispersion.hpp"
#include "wavedisp/errors.hpp"
#include "wavedisp/medium.hpp"
#include "wavedisp/modes.hpp"
#include "wavedisp/transient.hpp"
#include "wavedisp/version.hpp"

using namespace wavedisp;
using json = nlohmann::json;

namespace {

constexpr int kExitNumeric = 1;
constexpr int kExitValidation = 2;

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// FNV-1a over the canonical (17 significant digit) stack parameters.
std::string config_hash(const LayerStack& s) {
    std::ostringstream os;
    os << std::setprecision(17) << s.H1 << ' ' << s.H2 << ' ' << s.H3 << ' ' << s.c1 << ' ' << s.c2 << ' ' << s.c3
       << ' ' << s.rho1 << ' ' << s.rho2 << ' ' << s.rho3;
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : os.str()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return hex64(h);
}

json stack_json(const LayerStack& s) {
    return {{"H1", s.H1}, {"H2", s.H2}, {"H3", s.H3}, {"c1", s.c1},     {"c2", s.c2},
            {"c3", s.c3}, {"rho1", s.rho1}, {"rho2", s.rho2}, {"rho3", s.rho3}};
}

void write_manifest(const std::string& out, const std::string& command, const LayerStack& stack, json params,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["config_hash"] = config_hash(stack);
    m["stack"] = stack_json(stack);
    m["parameters"] = std::move(params);
    m["version"] = kVersion;
    m["outputs"] = outputs;
    std::ofstream f(out + ".manifest.json");
    if (!f) throw Error(ErrorCode::InvalidConfig, "cannot write manifest for " + out);
    f << m.dump(2) << '\n';
}

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

// Slice of a table: the nodes with indices in [begin, end).
BranchTable slice(const BranchTable& t, std::size_t begin, std::size_t end) {
    BranchTable s;
    s.nodes.assign(t.nodes.begin() + begin, t.nodes.begin() + end);
    for (const auto& k : t.K) s.K.emplace_back(k.begin() + begin, k.begin() + end);
    s.labels = t.labels;
    return s;
}

// Roots at i*20 continued down the imaginary axis to i*Omega and then along
// Im omega = Omega out to Re omega = wmax. Returns the table of the
// horizontal part only.
BranchTable horizontal_table(double Omega, double wmax, int branches, double step, const LayerStack& stack,
                             const ContinuationOptions& opt) {
    const cplx omega0(0.0, 20.0);
    const std::vector<cplx> roots = find_roots_at_reference(omega0, 0.0, 80.0, branches, stack);
    std::vector<std::pair<cplx, cplx>> seeds;
    for (const cplx& k : roots) seeds.emplace_back(omega0, k);
    const cplx corner(0.0, Omega);
    const std::vector<cplx> mesh = polyline_nodes({omega0, corner, cplx(wmax, Omega)}, step);
    const BranchTable full = continue_branches(seeds, mesh, stack, opt);
    std::size_t begin = 0;
    while (begin < mesh.size() && mesh[begin] != corner) ++begin;
    return slice(full, begin, mesh.size());
}

struct Common {
    std::string config = "reference";
    std::string out;
    int branches = 19;
};

int cmd_diagram(const Common& c, double Omega, double wmax, double step) {
    const LayerStack stack = load_stack(c.config);
    if (!(Omega >= 0.0)) throw Error(ErrorCode::OutOfRange, "--im-omega must be >= 0");
    if (!(wmax > 0.0)) throw Error(ErrorCode::OutOfRange, "--wmax must be > 0");
    ContinuationOptions opt;
    BranchTable t = horizontal_table(Omega, wmax, c.branches, step, stack, opt);
    if (Omega > 0.0) {
        for (std::size_t b = 0; b < t.branch_count(); ++b) {
            try {
                t.labels[b] = classify_branch(t.nodes, t.K[b], stack);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Unclassified) throw;
            }
        }
    }
    write_branch_csv(t, c.out);
    write_manifest(c.out, "diagram", stack,
                   {{"config", c.config}, {"im_omega", Omega}, {"wmax", wmax}, {"step", step}, {"branches", c.branches}},
                   {c.out});
    return 0;
}

int cmd_gv(const Common& c, double Wmax, double step) {
    const LayerStack stack = load_stack(c.config);
    if (!(Wmax > 0.0)) throw Error(ErrorCode::OutOfRange, "--Wmax must be > 0");
    const BranchTable t = horizontal_table(0.0, std::sqrt(Wmax), c.branches, step, stack, {});
    std::ofstream f(c.out);
    if (!f) throw Error(ErrorCode::InvalidConfig, "cannot write " + c.out);
    f << "W,omega,branch_id,v_gr_fd,v_gr_bilinear,discrepancy,flag\n" << std::setprecision(12);
    for (std::size_t j = 1; j + 1 < t.node_count(); ++j) {
        const double omega = t.nodes[j].real();
        for (std::size_t b = 0; b < t.branch_count(); ++b) {
            const cplx K = t.K[b][j];
            if (!(K.real() > 0.0)) continue;  // evanescent: no group velocity
            f << omega * omega << ',' << omega << ',' << b << ',';
            try {
                const double vf = group_velocity_fd(t, b, j);
                const double vb = group_velocity_bilinear(solve_coefficients_WK(omega * omega, K, stack));
                f << vf << ',' << vb << ',' << std::abs(vf - vb) / std::abs(vb) << ",ok\n";
            } catch (const Error& e) {
                f << ",,," << error_name(e.code()) << '\n';
            }
        }
    }
    write_manifest(c.out, "gv", stack, {{"config", c.config}, {"Wmax", Wmax}, {"step", step}, {"branches", c.branches}},
                   {c.out});
    return 0;
}

json record_json(const BranchPointRecord& r) {
    json j;
    j["id"] = {{"mu", r.id.mu}, {"nu", r.id.nu}, {"m", r.id.m}, {"n", r.id.n}, {"label", r.id.str()}};
    j["sign"] = r.sign;
    j["case"] = r.id.is_case2() ? 2 : 1;
    j["seed"] = {{"W", cjson(r.seed.W)},   {"K", cjson(r.seed.K)},   {"W1", cjson(r.seed.W1)},
                 {"K1", cjson(r.seed.K1)}, {"W2", cjson(r.seed.W2)}, {"K2", cjson(r.seed.K2)}};
    json path = json::array(), traj = json::array();
    for (const auto& [e1, e2] : r.path) path.push_back({e1, e2});
    for (const auto& [th, xi] : r.trajectory) traj.push_back({th.real(), th.imag(), xi.real(), xi.imag()});
    j["path"] = path;
    j["trajectory"] = traj;
    j["complete"] = r.complete;
    if (r.complete) {
        j["final"] = {{"Theta", cjson(r.final_point.first)},
                      {"Xi", cjson(r.final_point.second)},
                      {"omega_star", cjson(r.omega_star())}};
    }
    return j;
}

void trajectory_csv(std::ostream& f, const BranchPointRecord& r) {
    for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
        const cplx w = principal_sqrt(r.trajectory[i].first);
        const auto [e1, e2] = i < r.path.size() ? r.path[i] : std::pair<double, double>{-1.0, -1.0};
        f << r.id.str() << ',' << r.sign << ',' << i << ',' << e1 << ',' << e2 << ',' << w.real() << ','
          << w.imag() << '\n';
    }
    if (r.complete) {
        const cplx w = r.omega_star();
        f << r.id.str() << ',' << r.sign << ',' << r.trajectory.size() << ",inf,inf," << w.real() << ',' << w.imag()
          << '\n';
    }
}

int cmd_trace(const Common& c, int mu, int nu, int m, int n, const PathSpec& spec, const std::string& signs) {
    const LayerStack stack = load_stack(c.config);
    const BranchPointId id = BranchPointId::make(mu, nu, m, n);
    std::vector<int> which;
    if (signs == "both" || signs == "+") which.push_back(+1);
    if (signs == "both" || signs == "-") which.push_back(-1);
    if (which.empty()) throw Error(ErrorCode::OutOfRange, "--sign must be +, - or both");

    json out = json::array();
    std::ostringstream csv;
    csv << "id,sign,node,eps1,eps2,re_omega_star,im_omega_star\n" << std::setprecision(12);
    int status = 0;
    for (int sgn : which) {
        try {
            const BranchPointRecord r = trace_branch_point(id, spec, sgn, stack);
            out.push_back(record_json(r));
            trajectory_csv(csv, r);
        } catch (const TraceFailure& e) {
            json j = record_json(e.partial());
            j["error"] = e.what();
            out.push_back(j);
            trajectory_csv(csv, e.partial());
            std::cerr << "wavedisp: " << e.what() << '\n';
            status = kExitNumeric;
        }
    }
    const std::string jpath = c.out + ".json", cpath = c.out + ".csv";
    std::ofstream(jpath) << out.dump(2) << '\n';
    std::ofstream(cpath) << csv.str();
    write_manifest(c.out, "trace", stack,
                   {{"config", c.config},
                    {"id", id.str()},
                    {"eps0", spec.eps0},
                    {"E", spec.E},
                    {"nodes", spec.nodes},
                    {"offset", spec.offset_case2},
                    {"variant", spec.variant == K2Variant::Corrected ? "corrected" : "as-printed"},
                    {"sign", signs}},
                   {jpath, cpath});
    return status;
}

struct ContourChoice {
    double Omega = 0.0, lo = 0.0, hi = 0.0;
    SpacingPolicy policy{};
};

ContourChoice contour_choice(const std::string& name, const std::string& json_path) {
    ContourChoice c;
    if (name == "a") return c;
    if (name == "b") {
        c.Omega = 1.0;
        c.lo = 3.0;
        c.hi = 26.0;
        return c;
    }
    if (name == "c") {
        c.Omega = 3.0;
        c.lo = 5.0;
        c.hi = 26.0;
        return c;
    }
    if (name != "custom") throw Error(ErrorCode::InvalidConfig, "unknown contour '" + name + "'");
    if (json_path.empty()) throw Error(ErrorCode::InvalidConfig, "--contour custom needs --contour-json");
    std::ifstream f(json_path);
    if (!f) throw Error(ErrorCode::InvalidConfig, "cannot open " + json_path);
    try {
        const json j = json::parse(f);
        c.Omega = j.value("Omega", 0.0);
        if (j.contains("band")) {
            c.lo = j["band"].at(0).get<double>();
            c.hi = j["band"].at(1).get<double>();
        }
        if (j.contains("spacing")) {
            const json& s = j["spacing"];
            c.policy.order = s.value("order", c.policy.order);
            c.policy.points_per_cycle = s.value("points_per_cycle", c.policy.points_per_cycle);
            c.policy.max_panel = s.value("max_panel", c.policy.max_panel);
            c.policy.truncation = s.value("truncation", c.policy.truncation);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("contour JSON: ") + e.what());
    }
    return c;
}

int cmd_synthesize(const Common& c, const std::string& contour, const std::string& contour_json,
                   const std::string& subset_text, double L, const std::string& y0_text, double tmax, double dt) {
    const LayerStack stack = load_stack(c.config);
    ContourChoice cc = contour_choice(contour, contour_json);
    if (!(L >= 0.0)) throw Error(ErrorCode::OutOfRange, "--L must be >= 0");
    if (!(tmax > 0.0)) throw Error(ErrorCode::OutOfRange, "--tmax must be > 0");
    double y0 = stack.H3;
    if (y0_text != "top") {
        try {
            y0 = std::stod(y0_text);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidConfig, "--y0 must be 'top' or a number");
        }
    }
    const BranchSubset subset = BranchSubset::parse(subset_text);
    cc.policy.L = L;
    cc.policy.t_max = tmax;

    const FrequencyContour fc = build_contour(cc.Omega, cc.lo, cc.hi, cc.policy, stack);
    ContourBranches br = track_branches(fc, c.branches, stack);
    classify_on_top(br, fc, stack);
    const std::vector<std::size_t> ids = resolve_subset(subset, br.table);
    Signal s = synthesize(fc, br, ids, L, y0, time_grid(0.0, tmax, dt), stack, cc.policy);
    s.subset = subset_text;
    write_signal_csv(s, c.out);

    json labels = json::array();
    for (BranchLabel l : br.table.labels) labels.push_back(label_name(l));
    write_manifest(c.out, "synthesize", stack,
                   {{"config", c.config},
                    {"contour", contour},
                    {"Omega", cc.Omega},
                    {"band", {cc.lo, cc.hi}},
                    {"panel", fc.panel},
                    {"order", fc.order},
                    {"subset", subset_text},
                    {"branches_used", ids},
                    {"labels", labels},
                    {"L", L},
                    {"y0", y0},
                    {"tmax", tmax},
                    {"dt", dt}},
                   {c.out});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dispersion, branch points and transients of a three-layer acoustic waveguide"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP threads (0: runtime default)")->envname("WAVEDISP_THREADS");
    app.set_version_flag("--version", kVersion);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "stack file or 'reference'");
        sub->add_option("--out", common.out, "output file (prefix for trace)")->required();
        sub->add_option("--branches", common.branches, "number of tracked branches");
    };

    double Omega = 0.0, wmax = 33.0, step = 0.05;
    auto* diagram = app.add_subcommand("diagram", "branch table along Im omega = const");
    add_common(diagram);
    diagram->add_option("--im-omega", Omega, "Im omega of the line");
    diagram->add_option("--wmax", wmax, "largest Re omega");
    diagram->add_option("--step", step, "node spacing in omega");

    double Wmax = 300.0;
    auto* gv = app.add_subcommand("gv", "group velocities by two estimators");
    add_common(gv);
    gv->add_option("--Wmax", Wmax, "largest W = omega^2");
    gv->add_option("--step", step, "node spacing in omega");

    int mu = 1, nu = 2, m = 0, n = 0;
    PathSpec spec;
    std::string signs = "both", variant = "corrected";
    auto* trace = app.add_subcommand("trace", "trace a branch point to eps = infinity");
    add_common(trace);
    trace->add_option("--mu", mu)->required();
    trace->add_option("--nu", nu)->required();
    trace->add_option("--m", m)->required();
    trace->add_option("--n", n)->required();
    trace->add_option("--eps0", spec.eps0, "path offset / first node");
    trace->add_option("--E", spec.E, "last finite eps");
    trace->add_option("--nodes", spec.nodes, "path nodes");
    trace->add_flag("--offset", spec.offset_case2, "(1,3) only: offset path");
    trace->add_option("--sign", signs, "+, - or both");
    trace->add_option("--variant", variant, "second-order K seed: corrected or as-printed")
        ->check(CLI::IsMember({"corrected", "as-printed"}));

    std::string contour = "a", contour_json, subset = "all", y0 = "top";
    double L = 10.0, tmax = 15.0, dt = 0.05;
    auto* synth = app.add_subcommand("synthesize", "transient signal by modal quadrature");
    add_common(synth);
    synth->add_option("--contour", contour, "a, b, c or custom")->check(CLI::IsMember({"a", "b", "c", "custom"}));
    synth->add_option("--contour-json", contour_json, "custom contour: {Omega, band, spacing}");
    synth->add_option("--subset", subset, "all, type23, type3 or comma-separated ids");
    synth->add_option("--L", L, "source-receiver distance");
    synth->add_option("--y0", y0, "'top' or a depth in [0, H3]");
    synth->add_option("--tmax", tmax, "end of the time grid");
    synth->add_option("--dt", dt, "time step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }
    if (threads > 0) omp_set_num_threads(threads);

    try {
        if (*diagram) return cmd_diagram(common, Omega, wmax, step);
        if (*gv) return cmd_gv(common, Wmax, step);
        if (*trace) {
            spec.variant = variant == "corrected" ? K2Variant::Corrected : K2Variant::AsPrinted;
            return cmd_trace(common, mu, nu, m, n, spec, signs);
        }
        if (*synth) return cmd_synthesize(common, contour, contour_json, subset, L, y0, tmax, dt);
    } catch (const Error& e) {
        std::cerr << "wavedisp: " << e.what() << '\n';
        return is_validation_error(e.code()) ? kExitValidation : kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "wavedisp: " << e.what() << '\n';
        return kExitNumeric;
    }
    return 0;
}
