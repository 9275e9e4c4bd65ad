// Batch front end: one JSON config per experiment, results as long-format CSV
// plus a manifest.json. Exit codes: 0 ok, 2 bad config, 3 numeric failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "htev/eigenprocess.hpp"
#include "htev/ensembles.hpp"
#include "htev/errors.hpp"
#include "htev/fixedpoint.hpp"
#include "htev/identities.hpp"
#include "htev/inversion.hpp"
#include "htev/montecarlo.hpp"
#include "htev/philib.hpp"
#include "htev/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace htev;

namespace {

constexpr const char* kVersion = "1.0.0";

// config problems carry the JSON path; the line is looked up in the raw text
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& path, const std::string& what) : std::runtime_error(what), path(path) {}
    std::string path;
};

bool verbose = false;

void say(const std::string& msg) {
    if (verbose) std::cerr << "[htev] " << msg << "\n";
}

int line_of(const std::string& text, const std::string& path) {
    // last path component as a quoted key
    auto slash = path.find_last_of('/');
    std::string key = path.substr(slash == std::string::npos ? 0 : slash + 1);
    if (key.empty() || std::isdigit(static_cast<unsigned char>(key[0]))) {
        if (slash == std::string::npos || slash == 0) return 1;
        return line_of(text, path.substr(0, slash));
    }
    auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos) return 1;
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

// ---- config ----

struct Config {
    json raw;
    std::string command;
    std::uint64_t seed = 0;
    EnsembleSpec spec;
    std::vector<double> s, t, lambda;
    std::vector<cplx> z;
    int n = 0;
    std::vector<int> n_list;
    int R = 1;
    SolverConfig solver;
    EtaSchedule eta;
    InversionOptions inversion;
    LimitCovOptions cov;
    std::string process = "B";
    bool dump_matrix = false;
    std::string out;
    int workers = 1;
};

const json& need(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "/" + key, "missing required key '" + key + "'");
    return j.at(key);
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

int integer(const json& j, const std::string& path, int lo = 0) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    long long v = j.get<long long>();
    if (v < lo || v > 100000000) throw ConfigError(path, "integer out of range");
    return static_cast<int>(v);
}

std::vector<double> num_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(num(j[i], path + "/" + std::to_string(i)));
    return v;
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        if (!ok) throw ConfigError(path + "/" + it.key(), "unknown key '" + it.key() + "'");
    }
}

EnsembleSpec parse_spec(const json& j, std::uint64_t seed) {
    const std::string p = "/ensemble";
    if (!j.is_object()) throw ConfigError(p, "expected an object");
    reject_unknown(j, p, {"kind", "alpha", "sigma", "p", "atoms"});
    const json& k = need(j, "kind", p);
    if (!k.is_string()) throw ConfigError(p + "/kind", "expected a string");
    EnsembleSpec s;
    try {
        s.kind = ensemble_kind_from_string(k.get<std::string>());
    } catch (const ParameterError& e) {
        throw ConfigError(p + "/kind", e.what());
    }
    if (j.contains("alpha")) s.alpha = num(j["alpha"], p + "/alpha");
    if (j.contains("sigma")) s.sigma = num(j["sigma"], p + "/sigma");
    if (j.contains("p")) s.p = num(j["p"], p + "/p");
    if (j.contains("atoms")) {
        const json& a = j["atoms"];
        if (!a.is_array()) throw ConfigError(p + "/atoms", "expected an array of [weight, location]");
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::string ap = p + "/atoms/" + std::to_string(i);
            if (!a[i].is_array() || a[i].size() != 2) throw ConfigError(ap, "expected [weight, location]");
            s.m_atoms.push_back({num(a[i][0], ap), num(a[i][1], ap)});
        }
    }
    s.seed = seed;
    try {
        s.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(p, e.what());
    }
    return s;
}

SolverConfig parse_solver(const json& j) {
    const std::string p = "/solver";
    if (!j.is_object()) throw ConfigError(p, "expected an object");
    reject_unknown(j, p, {"nodes", "panel_order", "phase_per_panel", "truncation", "truncation_eps", "damping",
                          "max_iterations", "tolerance", "anderson_depth", "max_nodes"});
    SolverConfig c;
    if (j.contains("nodes")) c.nodes = integer(j["nodes"], p + "/nodes", 1);
    if (j.contains("panel_order")) c.panel_order = integer(j["panel_order"], p + "/panel_order", 1);
    if (j.contains("phase_per_panel")) c.phase_per_panel = num(j["phase_per_panel"], p + "/phase_per_panel");
    if (j.contains("truncation")) c.truncation = num(j["truncation"], p + "/truncation");
    if (j.contains("truncation_eps")) c.truncation_eps = num(j["truncation_eps"], p + "/truncation_eps");
    if (j.contains("damping")) c.damping = num(j["damping"], p + "/damping");
    if (j.contains("max_iterations")) c.max_iterations = integer(j["max_iterations"], p + "/max_iterations", 1);
    if (j.contains("tolerance")) c.tolerance = num(j["tolerance"], p + "/tolerance");
    if (j.contains("anderson_depth")) c.anderson_depth = integer(j["anderson_depth"], p + "/anderson_depth");
    if (j.contains("max_nodes")) c.max_nodes = integer(j["max_nodes"], p + "/max_nodes", 1);
    try {
        c.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(p, e.what());
    }
    return c;
}

const std::vector<std::string> kCommands = {"sample",         "process",     "mc-cov",       "scaling-scan",
                                            "tightness-check", "limit-cov",  "spectral-cdf", "cov-c",
                                            "verify-identities", "compare"};

Config parse_config(const json& j, const std::string& command_override) {
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    reject_unknown(j, "", {"command", "seed", "ensemble", "grids", "n", "n_list", "R", "solver", "eta", "inversion",
                           "cov_route", "process", "dump_matrix", "out", "workers"});
    Config c;
    c.raw = j;
    if (!command_override.empty()) {
        c.command = command_override;
    } else {
        const json& cmd = need(j, "command", "");
        if (!cmd.is_string()) throw ConfigError("/command", "expected a string");
        c.command = cmd.get<std::string>();
    }
    if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end())
        throw ConfigError("/command", "unknown command '" + c.command + "'");
    const json& seed = need(j, "seed", "");
    if (!seed.is_number_unsigned()) throw ConfigError("/seed", "seed must be a nonnegative integer");
    c.seed = seed.get<std::uint64_t>();

    bool needs_ensemble = c.command != "limit-cov" && c.command != "spectral-cdf" && c.command != "cov-c";
    if (j.contains("ensemble") || needs_ensemble) c.spec = parse_spec(need(j, "ensemble", ""), c.seed);

    if (j.contains("grids")) {
        const json& g = j["grids"];
        if (!g.is_object()) throw ConfigError("/grids", "expected an object");
        reject_unknown(g, "/grids", {"s", "t", "lambda", "z"});
        if (g.contains("s")) c.s = num_list(g["s"], "/grids/s");
        if (g.contains("t")) c.t = num_list(g["t"], "/grids/t");
        if (g.contains("lambda")) c.lambda = num_list(g["lambda"], "/grids/lambda");
        if (g.contains("z")) {
            const json& z = g["z"];
            if (!z.is_array() || z.empty()) throw ConfigError("/grids/z", "expected a nonempty array of [re, im]");
            for (std::size_t i = 0; i < z.size(); ++i) {
                std::string zp = "/grids/z/" + std::to_string(i);
                if (!z[i].is_array() || z[i].size() != 2) throw ConfigError(zp, "expected [re, im]");
                c.z.emplace_back(num(z[i][0], zp), num(z[i][1], zp));
            }
        }
    }
    for (double v : c.s)
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("/grids/s", "s values must lie in [0, 1]");
    for (double v : c.t)
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("/grids/t", "t values must lie in [0, 1]");

    if (j.contains("n")) c.n = integer(j["n"], "/n", 1);
    if (j.contains("n_list")) {
        const json& nl = j["n_list"];
        if (!nl.is_array() || nl.empty()) throw ConfigError("/n_list", "expected a nonempty array");
        for (std::size_t i = 0; i < nl.size(); ++i) c.n_list.push_back(integer(nl[i], "/n_list/" + std::to_string(i), 1));
    }
    if (j.contains("R")) c.R = integer(j["R"], "/R", 1);
    if (j.contains("solver")) c.solver = parse_solver(j["solver"]);
    if (j.contains("eta")) {
        const json& e = j["eta"];
        if (!e.is_object()) throw ConfigError("/eta", "expected an object");
        reject_unknown(e, "/eta", {"etas", "order"});
        if (e.contains("etas")) c.eta.etas = num_list(e["etas"], "/eta/etas");
        if (e.contains("order")) c.eta.order = integer(e["order"], "/eta/order", 1);
        try {
            c.eta.validate();
        } catch (const ParameterError& err) {
            throw ConfigError("/eta", err.what());
        }
    }
    if (j.contains("inversion")) {
        const json& e = j["inversion"];
        if (!e.is_object()) throw ConfigError("/inversion", "expected an object");
        reject_unknown(e, "/inversion", {"path", "tolerance", "vertical_order", "vertical_top"});
        if (e.contains("path")) {
            std::string p = e["path"].is_string() ? e["path"].get<std::string>() : "";
            if (p == "horizontal") c.inversion.path = InversionPath::Horizontal;
            else if (p == "vertical") c.inversion.path = InversionPath::Vertical;
            else throw ConfigError("/inversion/path", "expected \"horizontal\" or \"vertical\"");
        }
        if (e.contains("tolerance")) c.inversion.tolerance = num(e["tolerance"], "/inversion/tolerance");
        if (e.contains("vertical_order")) c.inversion.vertical_order = integer(e["vertical_order"], "/inversion/vertical_order", 1);
        if (e.contains("vertical_top")) c.inversion.vertical_top = num(e["vertical_top"], "/inversion/vertical_top");
    }
    if (j.contains("cov_route")) {
        std::string r = j["cov_route"].is_string() ? j["cov_route"].get<std::string>() : "";
        if (r == "l-functional") c.cov.route = CovRoute::LFunctional;
        else if (r == "exchangeable") c.cov.route = CovRoute::Exchangeable;
        else throw ConfigError("/cov_route", "expected \"l-functional\" or \"exchangeable\"");
    }
    if (j.contains("process")) {
        std::string p = j["process"].is_string() ? j["process"].get<std::string>() : "";
        if (p != "B" && p != "C" && p != "X") throw ConfigError("/process", "expected \"B\", \"C\" or \"X\"");
        c.process = p;
    }
    if (j.contains("dump_matrix")) {
        if (!j["dump_matrix"].is_boolean()) throw ConfigError("/dump_matrix", "expected a boolean");
        c.dump_matrix = j["dump_matrix"].get<bool>();
    }
    if (j.contains("out")) {
        if (!j["out"].is_string()) throw ConfigError("/out", "expected a string");
        c.out = j["out"].get<std::string>();
    }
    if (j.contains("workers")) c.workers = integer(j["workers"], "/workers", 1);

    // per-command requirements
    auto require = [&](bool ok, const std::string& path, const std::string& what) {
        if (!ok) throw ConfigError(path, what);
    };
    const std::string& cmd = c.command;
    if (cmd == "sample" || cmd == "process" || cmd == "mc-cov" || cmd == "tightness-check" || cmd == "compare" ||
        cmd == "verify-identities")
        require(c.n > 0, "/n", "missing required key 'n'");
    if (cmd == "scaling-scan") require(c.n_list.size() >= 2, "/n_list", "need at least two sizes in 'n_list'");
    if (cmd == "process") require(!c.s.empty() && (!c.t.empty() || !c.lambda.empty()), "/grids",
                                  "process needs grids s and t (or lambda)");
    if (cmd == "mc-cov") {
        require(!c.s.empty(), "/grids/s", "missing grid 's'");
        if (c.process == "B") require(!c.t.empty(), "/grids/t", "missing grid 't'");
        if (c.process == "C") require(!c.lambda.empty(), "/grids/lambda", "missing grid 'lambda'");
        if (c.process == "X") require(!c.z.empty(), "/grids/z", "missing grid 'z'");
        require(c.R >= 30, "/R", "R must be at least 30");
    }
    if (cmd == "scaling-scan")
        require(!c.s.empty() && !c.t.empty(), "/grids", "scaling-scan needs grids s and t (first entries are used)");
    if (cmd == "tightness-check") require(c.s.size() >= 2, "/grids/s", "tightness grid 's' needs two points");
    if (cmd == "limit-cov" || cmd == "compare")
        require(!c.s.empty() && !c.z.empty(), "/grids", "need grids s and z");
    if (cmd == "compare") require(c.R >= 30, "/R", "R must be at least 30");
    if (cmd == "spectral-cdf") require(!c.lambda.empty(), "/grids/lambda", "missing grid 'lambda'");
    if (cmd == "cov-c") require(!c.s.empty() && !c.lambda.empty(), "/grids", "need grids s and lambda");
    if (cmd == "verify-identities") require(c.n <= 50, "/n", "identity checks use n <= 50");
    return c;
}

PhiModel model_of(const Config& c) {
    if (c.raw.contains("ensemble")) return PhiModel::from_spec(c.spec);
    throw ConfigError("/ensemble", "missing required key 'ensemble'");
}

// ---- output ----

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

class Csv {
public:
    Csv(const fs::path& p, std::vector<std::string> header) : f_(p, std::ios::binary) {
        if (!f_) throw std::runtime_error("cannot write " + p.string());
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) f_ << (i ? "," : "") << quote(cells[i]);
        f_ << "\r\n";
    }

private:
    std::ofstream f_;
};

struct Run {
    Config cfg;
    fs::path out;
    std::vector<std::string> files;
    json results = json::object();

    Csv csv(const std::string& name, std::vector<std::string> header) {
        files.push_back(name);
        return Csv(out / name, std::move(header));
    }
};

// ---- commands ----

void cmd_sample(Run& r) {
    const Config& c = r.cfg;
    Csv ev = r.csv("eigenvalues.csv", {"replicate", "index", "eigenvalue"});
    for (int rep = 0; rep < c.R; ++rep) {
        SpectralDecomposition d = sample_decomposition(c.spec, c.n, rep);
        for (int j = 0; j < d.n; ++j) ev.row({std::to_string(rep), std::to_string(j + 1), fmt(d.eigenvalues(j))});
        Csv ov = r.csv("overlaps_r" + std::to_string(rep) + ".csv", {"row", "column", "overlap"});
        for (int i = 0; i < d.n; ++i)
            for (int j = 0; j < d.n; ++j) ov.row({std::to_string(i + 1), std::to_string(j + 1), fmt(d.overlaps(i, j))});
        if (c.dump_matrix) {
            SymmetricMatrix m = sample_matrix(c.spec, c.n, rep);
            std::string name = "matrix_r" + std::to_string(rep) + ".csv";
            r.files.push_back(name);
            std::ofstream f(r.out / name, std::ios::binary);
            for (int i = 0; i < m.n(); ++i) {
                for (int j = 0; j < m.n(); ++j) f << (j ? "," : "") << fmt(m.a(i, j));
                f << "\r\n";
            }
        }
    }
}

void cmd_process(Run& r) {
    const Config& c = r.cfg;
    Csv out = r.csv("process.csv", {"replicate", "surface", "s", "x", "value"});
    for (int rep = 0; rep < c.R; ++rep) {
        SpectralDecomposition d = sample_decomposition(c.spec, c.n, rep);
        if (!c.t.empty()) {
            ProcessSurface b = bivariate_process(d, c.s, c.t);
            for (std::size_t i = 0; i < c.s.size(); ++i)
                for (std::size_t j = 0; j < c.t.size(); ++j)
                    out.row({std::to_string(rep), "B", fmt(c.s[i]), fmt(c.t[j]), fmt(b.values(i, j))});
        }
        if (!c.lambda.empty()) {
            ProcessSurface cs = eigenvalue_process(d, c.s, c.lambda);
            for (std::size_t i = 0; i < c.s.size(); ++i)
                for (std::size_t j = 0; j < c.lambda.size(); ++j)
                    out.row({std::to_string(rep), "C", fmt(c.s[i]), fmt(c.lambda[j]), fmt(cs.values(i, j))});
        }
    }
}

std::vector<ProcessPoint> mc_points(const Config& c) {
    std::vector<ProcessPoint> p;
    for (double s : c.s) {
        if (c.process == "B")
            for (double t : c.t) p.push_back(ProcessPoint::bivariate(s, t));
        else if (c.process == "C")
            for (double l : c.lambda) p.push_back(ProcessPoint::eigenvalue(s, l));
        else
            for (cplx z : c.z) p.push_back(ProcessPoint::resolvent(s, z));
    }
    return p;
}

std::vector<std::string> point_cells(const ProcessPoint& p) {
    switch (p.kind) {
        case PointKind::Bivariate: return {"B", fmt(p.s), fmt(p.t), "0"};
        case PointKind::Eigenvalue: return {"C", fmt(p.s), fmt(p.t), "0"};
        default: return {"X", fmt(p.s), fmt(p.z.real()), fmt(p.z.imag())};
    }
}

void cmd_mc_cov(Run& r) {
    const Config& c = r.cfg;
    std::vector<ProcessPoint> pts = mc_points(c);
    CovEstimate e = estimate_cov(c.spec, c.n, c.R, pts, c.workers);
    Csv pc = r.csv("points.csv", {"point", "process", "s", "x", "y", "mean_re", "mean_im"});
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto cells = point_cells(pts[i]);
        pc.row({std::to_string(i), cells[0], cells[1], cells[2], cells[3], fmt(e.mean(i).real()), fmt(e.mean(i).imag())});
    }
    Csv cc = r.csv("covariance.csv", {"i", "j", "moment", "re", "im", "se_re", "se_im"});
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            cc.row({std::to_string(i), std::to_string(j), "E[XY]", fmt(e.cov(i, j).real()), fmt(e.cov(i, j).imag()),
                    fmt(e.se_cov(i, j).real()), fmt(e.se_cov(i, j).imag())});
            cc.row({std::to_string(i), std::to_string(j), "E[X conj Y]", fmt(e.cov_conj(i, j).real()),
                    fmt(e.cov_conj(i, j).imag()), fmt(e.se_cov_conj(i, j).real()), fmt(e.se_cov_conj(i, j).imag())});
        }
    r.results["points"] = pts.size();
    r.results["R"] = e.R;
}

void cmd_scaling(Run& r) {
    const Config& c = r.cfg;
    ScalingReport rep = scaling_scan(c.spec, c.n_list, c.R, c.s.front(), c.t.front(), c.workers);
    Csv out = r.csv("scaling.csv", {"n", "variance", "variance_se"});
    for (std::size_t k = 0; k < rep.n_list.size(); ++k)
        out.row({std::to_string(rep.n_list[k]), fmt(rep.variance[k]), fmt(rep.variance_se[k])});
    r.results["slope"] = rep.slope;
    r.results["slope_se"] = rep.slope_se;
    r.results["ci"] = {rep.ci_low, rep.ci_high};
}

void cmd_tightness(Run& r) {
    const Config& c = r.cfg;
    TightnessReport rep = tightness_check(c.spec, c.n, c.R, c.s, c.workers);
    Csv out = r.csv("tightness.csv", {"s", "s_prime", "t", "t_prime", "fourth_moment", "std_err", "bound", "ratio"});
    for (const auto& e : rep.entries)
        out.row({fmt(e.s), fmt(e.sp), fmt(e.t), fmt(e.tp), fmt(e.fourth_moment), fmt(e.std_err), fmt(e.bound),
                 fmt(e.ratio)});
    r.results["max_ratio"] = rep.max_ratio;
    r.results["pass"] = rep.pass;
}

struct SZ {
    double s;
    cplx z;
};

std::vector<SZ> sz_points(const Config& c) {
    std::vector<SZ> p;
    for (double s : c.s)
        for (cplx z : c.z) p.push_back({s, z});
    return p;
}

void cmd_limit_cov(Run& r) {
    const Config& c = r.cfg;
    PhiModel model = model_of(c);
    auto pts = sz_points(c);
    Csv out = r.csv("limit_cov.csv", {"s", "z_re", "z_im", "s_prime", "zp_re", "zp_im", "re", "im"});
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i; j < pts.size(); ++j) {
            say("limit_cov pair " + std::to_string(i) + "," + std::to_string(j));
            cplx v = limit_cov(model, pts[i].s, pts[i].z, pts[j].s, pts[j].z, c.solver, c.cov);
            out.row({fmt(pts[i].s), fmt(pts[i].z.real()), fmt(pts[i].z.imag()), fmt(pts[j].s), fmt(pts[j].z.real()),
                     fmt(pts[j].z.imag()), fmt(v.real()), fmt(v.imag())});
        }
}

void cmd_spectral_cdf(Run& r) {
    const Config& c = r.cfg;
    SpectralCdf F = spectral_cdf(model_of(c), c.lambda, c.eta, c.solver);
    Csv out = r.csv("spectral_cdf.csv", {"lambda", "raw", "value"});
    for (std::size_t k = 0; k < F.lambda.size(); ++k) out.row({fmt(F.lambda[k]), fmt(F.raw[k]), fmt(F.value[k])});
    PhiSet set = e_phi_set(F.lambda, F.value);
    Csv js = r.csv("jumps.csv", {"lambda", "size"});
    for (const auto& j : set.jumps) js.row({fmt(j.lambda), fmt(j.size)});
    r.results["max_adjustment"] = F.max_adjustment;
    r.results["fit_residual"] = F.fit_residual;
    json iv = json::array();
    for (const auto& i : set.intervals) iv.push_back({i.lo, i.hi});
    r.results["range_intervals"] = iv;
}

void cmd_cov_c(Run& r) {
    const Config& c = r.cfg;
    CovHandle h = limit_cov_handle(model_of(c), c.solver, c.cov);
    InversionOptions io = c.inversion;
    io.path = InversionPath::Vertical;
    std::vector<std::pair<double, double>> pts;
    for (double s : c.s)
        for (double l : c.lambda) pts.push_back({s, l});
    std::vector<std::string> header = {"s", "lambda", "s_prime", "lambda_prime", "value", "fit_residual"};
    for (std::size_t k = 0; k < c.eta.etas.size(); ++k) header.push_back("eta_" + fmt(c.eta.etas[k]));
    Csv out = r.csv("cov_c.csv", header);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i; j < pts.size(); ++j) {
            say("cov-c pair " + std::to_string(i) + "," + std::to_string(j));
            CovCResult v = cov_C_from_H_ex(h, pts[i].first, pts[i].second, pts[j].first, pts[j].second, c.eta, io);
            std::vector<std::string> row = {fmt(pts[i].first), fmt(pts[i].second), fmt(pts[j].first),
                                            fmt(pts[j].second), fmt(v.value), fmt(v.fit_residual)};
            for (double e : v.per_eta) row.push_back(fmt(e));
            out.row(row);
        }
}

void cmd_verify(Run& r) {
    const Config& c = r.cfg;
    CounterRng rng(stream_key(c.seed, 0xC0FFEE));
    double bf = 0, quad = 0, schur = 0;
    int bound_viol = 0, pe_viol = 0, pe_app = 0;
    Csv out = r.csv("identities.csv", {"instance", "n", "c_vs_bof", "quadrature", "schur", "resolvent_bound_ok"});
    for (int inst = 0; inst < c.R; ++inst) {
        int n = 2 + static_cast<int>(rng.below(c.n - 1));
        SymmetricMatrix m = sample_matrix(c.spec, n, inst);
        SpectralDecomposition d = c.spec.kind == EnsembleKind::PermutationBaseline ? from_overlaps(m.a) : decompose(m);
        double s = rng.uniform();
        double lam = d.eigenvalues(0) - 0.5 + (d.eigenvalues(n - 1) - d.eigenvalues(0) + 1.0) * rng.uniform();
        double e1 = std::abs(eigenvalue_value(d, s, lam) - bivariate_value(d, s, empirical_cdf(d, lam)));
        cplx z(2.0 * rng.uniform() - 1.0, 0.1 + rng.uniform());
        double e2 = quadrature_identity_check(d, s, z);
        double e3 = 0;
        bool ok = true;
        if (c.spec.kind != EnsembleKind::PermutationBaseline) {
            Eigen::VectorXd p(n);
            for (int i = 0; i < n; ++i) p(i) = 2.0 * rng.uniform() - 1.0;
            SchurResult sr = schur_trace_delta(m, p, static_cast<int>(rng.below(n)), z);
            e3 = std::abs(sr.lhs - sr.rhs);
            ok = sr.bound_ok;
        }
        bf = std::max(bf, e1);
        quad = std::max(quad, e2);
        schur = std::max(schur, e3);
        bound_viol += !ok;
        out.row({std::to_string(inst), std::to_string(n), fmt(e1), fmt(e2), fmt(e3), ok ? "true" : "false"});
    }
    const double R = product_exp_radius();
    for (int t = 0; t < 1000; ++t) {
        int n = 1 + static_cast<int>(rng.below(100));
        std::vector<cplx> u(1 + rng.below(30));
        for (auto& v : u) v = std::polar(1.2 * R * n * rng.uniform(), 2.0 * M_PI * rng.uniform());
        ProdExpResult pe = prod_exp_gap(u, n);
        pe_app += pe.applicable;
        pe_viol += pe.applicable && !pe.bound_ok;
    }
    bool pass = bf <= 1e-12 && quad <= 1e-9 && schur <= 1e-10 && bound_viol == 0 && pe_viol == 0;
    r.results = {{"max_c_vs_bof", bf},      {"max_quadrature", quad},         {"max_schur", schur},
                 {"resolvent_bound_violations", bound_viol}, {"prod_exp_radius", R},
                 {"prod_exp_applicable", pe_app}, {"prod_exp_violations", pe_viol}, {"pass", pass}};
    if (!pass) throw NumericError("identity check failed; see identities.csv");
}

void cmd_compare(Run& r) {
    const Config& c = r.cfg;
    PhiModel model = model_of(c);
    auto pts = sz_points(c);
    std::vector<ProcessPoint> pp;
    for (const auto& p : pts) pp.push_back(ProcessPoint::resolvent(p.s, p.z));
    CovEstimate e = estimate_cov(c.spec, c.n, c.R, pp, c.workers);
    Csv out = r.csv("compare.csv", {"s", "z_re", "z_im", "s_prime", "zp_re", "zp_im", "partner", "mc_re", "mc_im",
                                    "se", "limit_re", "limit_im", "z_score"});
    double worst = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i; j < pts.size(); ++j)
            for (int conj = 0; conj < 2; ++conj) {
                cplx zp = conj ? std::conj(pts[j].z) : pts[j].z;
                cplx lim = limit_cov(model, pts[i].s, pts[i].z, pts[j].s, zp, c.solver, c.cov);
                cplx mc = conj ? e.cov_conj(i, j) : e.cov(i, j);
                cplx se = conj ? e.se_cov_conj(i, j) : e.se_cov(i, j);
                double sd = std::hypot(se.real(), se.imag());
                double zs = std::abs(mc - lim) / sd;
                worst = std::max(worst, zs);
                out.row({fmt(pts[i].s), fmt(pts[i].z.real()), fmt(pts[i].z.imag()), fmt(pts[j].s), fmt(zp.real()),
                         fmt(zp.imag()), conj ? "conj" : "plain", fmt(mc.real()), fmt(mc.imag()), fmt(sd),
                         fmt(lim.real()), fmt(lim.imag()), fmt(zs)});
            }
    r.results["max_z_score"] = worst;
}

json model_json(const Config& c) {
    json m = json::object();
    if (!c.raw.contains("ensemble")) return m;
    if (c.spec.kind == EnsembleKind::PermutationBaseline) {
        m["kind"] = to_string(c.spec.kind);
        m["note"] = "no limiting Phi; overlaps are permutation matrices";
        return m;
    }
    PhiModel p = PhiModel::from_spec(c.spec);
    m["kind"] = to_string(p.kind);
    if (p.is_levy()) {
        m["alpha"] = p.alpha;
        m["sigma_phi"] = p.sigma;
        m["sigma_phi_source"] = "analytic Gamma(1 - alpha/2) sigma^alpha";
    } else {
        json a = json::array();
        for (const auto& at : p.atoms) a.push_back({at.weight, at.location});
        m["atoms"] = a;
    }
    return m;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eigenvector overlap processes of heavy-tailed random matrices"};
    std::string config_path, out_dir, command;
    int workers_flag = 0;
    app.add_option("command", command, "command (overrides the config's \"command\")")
        ->check(CLI::IsMember(kCommands));
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--workers", workers_flag, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--verbose", verbose, "progress on stderr");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::string text;
    {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) {
            std::cerr << config_path << ": cannot open config\n";
            return 2;
        }
        std::stringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }

    Run run;
    try {
        json j = json::parse(text);
        run.cfg = parse_config(j, command);
    } catch (const json::parse_error& e) {
        // byte offset to line
        std::size_t off = std::min<std::size_t>(e.byte, text.size());
        int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + off, '\n'));
        std::cerr << config_path << ":" << line << ": invalid JSON: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << config_path << ":" << line_of(text, e.path) << ": " << (e.path.empty() ? "/" : e.path) << ": "
                  << e.what() << "\n";
        return 2;
    }
    Config& cfg = run.cfg;
    if (const char* w = std::getenv("HTEV_WORKERS")) {
        int k = std::atoi(w);
        if (k > 0) cfg.workers = k;
    }
    if (workers_flag > 0) cfg.workers = workers_flag;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (cfg.out.empty()) cfg.out = "htev_out";
    run.out = cfg.out;

    auto t0 = std::chrono::steady_clock::now();
    int rc = 0;
    std::string error;
    try {
        fs::create_directories(run.out);
        say(cfg.command + " -> " + run.out.string());
        const std::string& c = cfg.command;
        if (c == "sample") cmd_sample(run);
        else if (c == "process") cmd_process(run);
        else if (c == "mc-cov") cmd_mc_cov(run);
        else if (c == "scaling-scan") cmd_scaling(run);
        else if (c == "tightness-check") cmd_tightness(run);
        else if (c == "limit-cov") cmd_limit_cov(run);
        else if (c == "spectral-cdf") cmd_spectral_cdf(run);
        else if (c == "cov-c") cmd_cov_c(run);
        else if (c == "verify-identities") cmd_verify(run);
        else cmd_compare(run);
    } catch (const ConfigError& e) {
        std::cerr << config_path << ":" << line_of(text, e.path) << ": " << e.path << ": " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        error = e.what();
        rc = 2;
    } catch (const DomainError& e) {
        error = e.what();
        rc = 2;
    } catch (const UnsupportedError& e) {
        error = e.what();
        rc = 2;
    } catch (const SolverError& e) {
        error = std::string(e.what()) + " (last residual " + fmt(e.last_residual) + ", iterations " +
                std::to_string(e.iterations) + ")";
        rc = 3;
    } catch (const std::exception& e) {
        error = e.what();
        rc = 3;
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest;
    manifest["tool"] = "htev_cli";
    manifest["version"] = kVersion;
    manifest["command"] = cfg.command;
    manifest["seed"] = cfg.seed;
    manifest["config"] = cfg.raw;
    manifest["model"] = model_json(cfg);
    manifest["degeneracy_tol"] = kDefaultDegeneracyTol;
    manifest["workers"] = cfg.workers;
    manifest["outputs"] = run.files;
    manifest["results"] = run.results;
    manifest["status"] = rc == 0 ? "ok" : "error";
    if (rc != 0) manifest["error"] = error;
    manifest["finished_utc"] = utc_now();
    manifest["wall_time_s"] = wall;
    try {
        std::ofstream(run.out / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
    } catch (...) {
    }
    if (rc != 0) std::cerr << "error: " << error << "\n";
    return rc;
}
