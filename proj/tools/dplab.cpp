// dplab command-line driver. Every subcommand reads a run config (JSON), writes
// its artifacts under the output directory and prints a one-line summary.
//
// Exit codes: 0 ok, 2 config, 3 not applicable, 4 numeric failure.

#include "dplab/bubbles.hpp"
#include "dplab/classify.hpp"
#include "dplab/constants.hpp"
#include "dplab/errors.hpp"
#include "dplab/params.hpp"
#include "dplab/pohozaev.hpp"
#include "dplab/radial_solver.hpp"
#include "dplab/ray.hpp"
#include "dplab/threshold.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dplab;

namespace {

constexpr int kFormatVersion = 1;
constexpr int kExitOk = 0, kExitConfig = 2, kExitNotApplicable = 3, kExitNumeric = 4;

const std::vector<std::string> kCommands = {"classify",       "beta-star",    "bubble-scan", "ray-max",
                                            "solve-radial",   "pohozaev-check", "nonexistence", "report"};

struct ConfigError : std::runtime_error {
    json violations;
    ConfigError(const std::string& what, json v = json::array()) : std::runtime_error(what), violations(std::move(v)) {}
};

struct Tolerances {
    double beta_agreement = 1e-5;
    double beta_scan_points = 4096;
    double beta_multistarts = 64;
    double bubble_rel_tol = kBubbleRelTol;
    double fit_curvature = 0.03;
    double ode_rel_tol = 1e-10;
    double ode_abs_tol = 1e-14;

    void set(const std::string& name, double v) {
        static const std::map<std::string, double Tolerances::*> fields = {
            {"beta_agreement", &Tolerances::beta_agreement}, {"beta_scan_points", &Tolerances::beta_scan_points},
            {"beta_multistarts", &Tolerances::beta_multistarts}, {"bubble_rel_tol", &Tolerances::bubble_rel_tol},
            {"fit_curvature", &Tolerances::fit_curvature}, {"ode_rel_tol", &Tolerances::ode_rel_tol},
            {"ode_abs_tol", &Tolerances::ode_abs_tol}};
        const auto it = fields.find(name);
        if (it == fields.end()) throw ConfigError("unknown tolerance: " + name);
        if (!(v > 0.0)) throw ConfigError("tolerance must be positive: " + name);
        this->*(it->second) = v;
    }
};

struct RunConfig {
    std::string command;
    ProblemParams params;
    json sweep = json::object();
    json options = json::object();
    fs::path output_dir = "out";
    fs::path base_dir = ".";
    std::size_t seed = 0;
    Tolerances tol;
    unsigned workers = 1;
};

// ---------------------------------------------------------------------------
// Config ingestion
// ---------------------------------------------------------------------------

std::vector<double> number_list(const json& j, const std::string& name) {
    if (!j.is_array() || j.empty()) throw ConfigError("sweep." + name + " must be a nonempty array");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError("sweep." + name + " must contain numbers");
        v.push_back(x.get<double>());
    }
    const bool inc = std::is_sorted(v.begin(), v.end(), std::less<>{});
    const bool dec = std::is_sorted(v.begin(), v.end(), std::greater<>{});
    bool strict = true;
    for (std::size_t i = 1; i < v.size(); ++i) strict = strict && v[i] != v[i - 1];
    if (!(inc || dec) || !strict) throw ConfigError("sweep." + name + " must be strictly monotone");
    return v;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known = {"format_version", "command", "params",    "sweep",
                                                "output_dir",     "seed",    "tolerances", "options"};
    json unknown = json::array();
    for (const auto& [k, _] : j.items()) {
        if (!known.contains(k)) unknown.push_back(k);
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys", unknown);
    if (j.contains("format_version") && j.at("format_version") != kFormatVersion) {
        throw ConfigError("unsupported format_version");
    }
    RunConfig cfg;
    cfg.base_dir = path.parent_path();
    if (j.contains("command")) {
        cfg.command = j.at("command").get<std::string>();
        if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end()) {
            throw ConfigError("unknown command " + cfg.command);
        }
    }
    if (!j.contains("params")) throw ConfigError("config needs params");
    try {
        cfg.params = j.at("params").get<ProblemParams>();
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    if (j.contains("sweep")) {
        cfg.sweep = j.at("sweep");
        if (!cfg.sweep.is_object()) throw ConfigError("sweep must be an object");
        for (const auto& [k, v] : cfg.sweep.items()) {
            if (k != "mu" && k != "b_inf" && k != "eps" && k != "delta") throw ConfigError("unknown sweep axis " + k);
            number_list(v, k);
        }
    }
    if (j.contains("options")) {
        cfg.options = j.at("options");
        if (!cfg.options.is_object()) throw ConfigError("options must be an object");
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
        cfg.seed = j.at("seed").get<std::size_t>();
    }
    if (j.contains("tolerances")) {
        if (!j.at("tolerances").is_object()) throw ConfigError("tolerances must be an object");
        for (const auto& [k, v] : j.at("tolerances").items()) {
            if (!v.is_number()) throw ConfigError("tolerance " + k + " must be numeric");
            cfg.tol.set(k, v.get<double>());
        }
    }
    return cfg;
}

/// Structural checks; `strict` adds q/p < 1 + 1/N and the sign conditions.
void check_params(const ProblemParams& P, bool strict) {
    json v = json::array();
    if (strict) {
        for (const auto& c : validate_structure(P)) v.push_back(c);
    } else {
        if (P.N < 2) v.push_back(non_strict_less("N>=2", 2.0, P.N));
        if (!(P.p > 1.0)) v.push_back(strict_less("p>1", 1.0, P.p));
        if (!(P.p < P.q)) v.push_back(strict_less("p<q", P.p, P.q));
        if (!(P.q < P.N)) v.push_back(strict_less("q<N", P.q, P.N));
        if (!(P.domain_radius > 0.0)) v.push_back(strict_less("domain_radius>0", 0.0, P.domain_radius));
    }
    if (!v.empty()) throw ConfigError("parameter violations", v);
}

template <class T>
T option(const RunConfig& cfg, const std::string& key, T fallback) {
    if (!cfg.options.contains(key)) return fallback;
    try {
        return cfg.options.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("option " + key + " has the wrong type");
    }
}

void check_options(const RunConfig& cfg, const std::set<std::string>& allowed) {
    json unknown = json::array();
    for (const auto& [k, _] : cfg.options.items()) {
        if (!allowed.contains(k)) unknown.push_back(k);
    }
    if (!unknown.empty()) throw ConfigError("unknown options for " + cfg.command, unknown);
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, json j) {
    j["format_version"] = kFormatVersion;
    write_text(path, j.dump(2) + "\n");
}

/// Rows are written per cell, then merged in cell order by one thread.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> numeric_row(std::initializer_list<double> xs) {
    std::vector<std::string> r;
    for (double x : xs) r.push_back(fmt(x));
    return r;
}

void write_csv(const fs::path& path, const CsvTable& t) {
    std::ostringstream os;
    os << "# format_version=" << kFormatVersion << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    write_text(path, os.str());
}

/// gnuplot script plotting the 1-based columns `ys` of a CSV against column `x`.
void write_plot_script(const fs::path& path, const std::string& csv_name, int x, const std::vector<int>& ys,
                       const std::string& logscale) {
    std::ostringstream os;
    os << "# format_version=" << kFormatVersion << "\n";
    os << "set datafile separator ','\nset key autotitle columnhead\n";
    if (!logscale.empty()) os << "set logscale " << logscale << "\n";
    os << "plot ";
    for (std::size_t i = 0; i < ys.size(); ++i) {
        os << (i ? ", \\\n     " : "") << "'" << csv_name << "' using " << x << ":" << ys[i] << " with linespoints";
    }
    os << "\n";
    write_text(path, os.str());
}

template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(m);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Runs `cell(i)` for every cell; each writes cells/<stem>_<i>.csv before the
/// ordered merge into `out`.
CsvTable run_cells(const RunConfig& cfg, const std::string& stem, std::size_t n, std::vector<std::string> columns,
                   const std::function<std::vector<std::vector<std::string>>(std::size_t)>& cell) {
    const fs::path dir = cfg.output_dir / "cells";
    fs::create_directories(dir);
    parallel_for(n, cfg.workers, [&](std::size_t i) {
        CsvTable part{columns, cell(i)};
        write_csv(dir / (stem + "_" + std::to_string(i) + ".csv"), part);
    });
    CsvTable merged{columns, {}};
    for (std::size_t i = 0; i < n; ++i) {
        const fs::path f = dir / (stem + "_" + std::to_string(i) + ".csv");
        std::ifstream in(f);
        std::string line;
        std::getline(in, line); // format line
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            std::vector<std::string> row;
            std::istringstream ls(line);
            std::string cellv;
            while (std::getline(ls, cellv, ',')) row.push_back(cellv);
            merged.rows.push_back(std::move(row));
        }
        fs::remove(f);
    }
    fs::remove(dir);
    return merged;
}

ConstantsTable constants_for(const RunConfig& cfg, const ProblemParams& P) {
    return cached_constants_table(P, cfg.output_dir / "cache");
}

std::vector<double> sweep_or(const RunConfig& cfg, const std::string& axis, std::vector<double> fallback) {
    if (!cfg.sweep.contains(axis)) return fallback;
    return number_list(cfg.sweep.at(axis), axis);
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns an exit code and a one-line summary.
// ---------------------------------------------------------------------------

struct Outcome {
    int code = kExitOk;
    std::string summary;
};

ProblemSelector selector_from(const std::string& s) {
    if (s == "auto") return ProblemSelector::automatic;
    if (s == "power") return ProblemSelector::power;
    if (s == "weighted") return ProblemSelector::weighted;
    throw ConfigError("option problem must be auto, power or weighted");
}

Outcome cmd_classify(const RunConfig& cfg) {
    check_options(cfg, {"problem"});
    check_params(cfg.params, true);
    const auto sel = selector_from(option<std::string>(cfg, "problem", "auto"));
    const auto C = constants_for(cfg, cfg.params);
    const auto tag = classify_existence_case(cfg.params, C.lambda1_p, sel);
    json j = tag;
    j["params"] = cfg.params;
    j["lambda1"] = C.lambda1_p;
    write_json(cfg.output_dir / "classify.json", j);
    return {tag.theorem == ExistenceCase::None ? kExitNotApplicable : kExitOk,
            std::string("classify: ") + to_string(tag.theorem)};
}

Outcome cmd_beta_star(const RunConfig& cfg) {
    check_options(cfg, {"cross_check"});
    check_params(cfg.params, true);
    const auto mus = sweep_or(cfg, "mu", {cfg.params.mu});
    const auto bs = sweep_or(cfg, "b_inf", {cfg.params.b_inf});
    const auto C = constants_for(cfg, cfg.params);
    ThresholdOptions opts;
    opts.seed = cfg.seed;
    opts.agreement_tol = cfg.tol.beta_agreement;
    opts.scan_points = static_cast<std::size_t>(cfg.tol.beta_scan_points);
    opts.multistarts = static_cast<std::size_t>(cfg.tol.beta_multistarts);
    opts.cross_check = option<bool>(cfg, "cross_check", true);
    const std::vector<std::string> cols = {"mu", "b_inf", "beta_star", "X", "Y", "Z", "W",
                                           "bound_15", "bound_16", "method", "cross_check_rel_diff", "axis_attained"};
    const auto table = run_cells(cfg, "beta_star", mus.size() * bs.size(), cols, [&](std::size_t i) {
        ProblemParams P = cfg.params;
        P.mu = mus[i / bs.size()];
        P.b_inf = bs[i % bs.size()];
        const auto r = compute_beta_star(P, C, opts);
        auto row = numeric_row({P.mu, P.b_inf, r.beta_star, r.argmin.X, r.argmin.Y, r.argmin.Z, r.argmin.W, r.bound_15,
                                r.bound_16});
        row.push_back(to_string(r.method));
        row.push_back(fmt(r.cross_check_rel_diff));
        row.push_back(r.axis_attained ? "1" : "0");
        return std::vector<std::vector<std::string>>{row};
    });
    write_csv(cfg.output_dir / "beta_star.csv", table);
    write_plot_script(cfg.output_dir / "beta_star.gp", "beta_star.csv", 2, {3, 9}, "x");
    json j{{"params", cfg.params}, {"constants", C}, {"cells", table.rows.size()}, {"seed", cfg.seed}};
    write_json(cfg.output_dir / "beta_star.json", j);
    return {kExitOk, "beta-star: " + std::to_string(table.rows.size()) + " cells, first beta* = " + table.rows[0][2]};
}

Outcome cmd_bubble_scan(const RunConfig& cfg) {
    check_options(cfg, {"kind", "rho"});
    check_params(cfg.params, false);
    const std::string kind_s = option<std::string>(cfg, "kind", "p");
    if (kind_s != "p" && kind_s != "q") throw ConfigError("option kind must be p or q");
    const BubbleKind kind = kind_s == "p" ? BubbleKind::p_bubble : BubbleKind::q_bubble;
    const double rho = option<double>(cfg, "rho", 1.0);
    const auto eps = sweep_or(cfg, "eps", default_eps_grid());
    const auto deltas = kind == BubbleKind::q_bubble ? sweep_or(cfg, "delta", {1.0}) : std::vector<double>{1.0};
    const ProblemParams& P = cfg.params;
    const double m = kind == BubbleKind::p_bubble ? P.p : P.q;
    const double S = talenti_constant(m, P.N);

    struct Column {
        std::string name;
        std::function<double(const BubbleProfile&)> value;
        std::optional<RateLaw> law;
    };
    std::vector<Column> cols;
    const double tol = cfg.tol.bubble_rel_tol;
    if (kind == BubbleKind::p_bubble) {
        cols.push_back({"grad_p_deficit", [&](const BubbleProfile& b) { return bubble_norm(b, NormRequest::grad_p, tol) - S; },
                        rate_gradient_deficit_p(P)});
        cols.push_back({"L^r", [&](const BubbleProfile& b) { return bubble_norm(b, NormRequest::L_r, tol); },
                        rate_lebesgue_p(P, P.r)});
    } else {
        cols.push_back({"grad_q_deficit", [&](const BubbleProfile& b) { return bubble_norm(b, NormRequest::grad_q, tol) - S; },
                        rate_gradient_deficit_q(P)});
        cols.push_back({"grad_p", [&](const BubbleProfile& b) { return bubble_norm(b, NormRequest::grad_p, tol); },
                        rate_gradient_p_of_q_bubble(P)});
        if (P.s > 0.0) {
            cols.push_back({"L^s", [&](const BubbleProfile& b) { return bubble_norm(b, NormRequest::L_s, tol); },
                            rate_lebesgue_q(P, P.s)});
        }
    }
    std::vector<std::string> names = {"epsilon", "delta"};
    for (const auto& c : cols) names.push_back(c.name);
    const auto wide = run_cells(cfg, "bubble_scan", eps.size() * deltas.size(), names, [&](std::size_t i) {
        const double e = eps[i / deltas.size()], d = deltas[i % deltas.size()];
        const auto b = make_bubble(kind, e, d, rho, P);
        std::vector<std::string> row{fmt(e), fmt(d)};
        for (const auto& c : cols) row.push_back(fmt(c.value(b)));
        return std::vector<std::vector<std::string>>{row};
    });

    // fits need a single delta and at least four eps values
    std::vector<double> fitted(cols.size(), std::numeric_limits<double>::quiet_NaN());
    json fits = json::array();
    if (deltas.size() == 1 && eps.size() >= 4) {
        RateFitOptions fo;
        fo.curvature_tol = cfg.tol.fit_curvature;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            std::vector<double> x, y;
            for (const auto& row : wide.rows) {
                x.push_back(std::stod(row[0]));
                y.push_back(std::stod(row[2 + c]));
            }
            json f{{"column", cols[c].name}, {"theoretical_slope", cols[c].law->exponent},
                   {"theoretical_log_power", cols[c].law->log_power}, {"branch", cols[c].law->branch}};
            try {
                const auto fit = fit_rate(x, y, cols[c].law->exponent, fo);
                fitted[c] = fit.fitted_slope;
                f["fitted_slope"] = fit.fitted_slope;
                f["relative_slope_error"] = fit.relative_slope_error;
                f["log_factor_detected"] = fit.log_factor_detected;
                f["log_power"] = fit.log_power;
            } catch (const DomainError& e) {
                f["fit_error"] = e.what();
            }
            fits.push_back(f);
        }
    }
    CsvTable table{{"epsilon", "delta", "norm_name", "value", "theoretical_rate", "fitted_rate"}, {}};
    for (const auto& row : wide.rows) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            table.rows.push_back({row[0], row[1], cols[c].name, row[2 + c], fmt(cols[c].law->exponent), fmt(fitted[c])});
        }
    }
    write_csv(cfg.output_dir / "bubble_scan.csv", table);
    // plot data: the wide table is easier to draw
    write_csv(cfg.output_dir / "bubble_scan_plot.csv", wide);
    std::vector<int> ycols;
    for (std::size_t c = 0; c < cols.size(); ++c) ycols.push_back(static_cast<int>(c) + 3);
    write_plot_script(cfg.output_dir / "bubble_scan.gp", "bubble_scan_plot.csv", 1, ycols, "xy");
    write_json(cfg.output_dir / "bubble_scan.json",
               json{{"params", P}, {"kind", kind_s}, {"rho", rho}, {"rows", wide.rows.size()}, {"fits", fits}});
    return {kExitOk, "bubble-scan: " + std::to_string(wide.rows.size()) + " rows, " + std::to_string(fits.size()) + " fits"};
}

// The lemma3 ray does not see b_inf, but the level it must stay under does:
// beta*(mu, b_inf) drops below the pure-p level once b_inf is large. Report the
// largest grid b_inf for which the ray maximum at the smallest eps is still below beta*.
json empirical_b_star(const RunConfig& cfg, const ConstantsTable& C,
                      const std::vector<std::pair<double, double>>& eps_margin) {
    if (!(cfg.params.a0 > 0.0)) throw ConfigError("sweep.b_inf with lemma3 needs params.a0 > 0");
    auto bs = sweep_or(cfg, "b_inf", {});
    std::sort(bs.begin(), bs.end());
    const double eps0 = eps_margin.front().first;
    RayVerifyOptions ro;
    ro.rho = option<double>(cfg, "rho", 1.0);
    ro.check_regime = false;
    const double phi = verify_below_threshold(cfg.params, C, {eps0}, RayLemma::lemma3, ro).rows.front().max.phi_max;
    ThresholdOptions opts;
    opts.seed = cfg.seed;
    opts.agreement_tol = cfg.tol.beta_agreement;
    opts.scan_points = static_cast<std::size_t>(cfg.tol.beta_scan_points);
    opts.multistarts = static_cast<std::size_t>(cfg.tol.beta_multistarts);
    const std::vector<std::string> cols = {"b_inf", "beta_star", "phi_max", "margin"};
    const auto table = run_cells(cfg, "b_star", bs.size(), cols, [&](std::size_t i) {
        ProblemParams P = cfg.params;
        P.b_inf = bs[i];
        const double beta = bs[i] > 0.0 ? compute_beta_star(P, C, opts).beta_star
                                         : std::pow(C.S_p, P.N / P.p) / (P.N * std::pow(P.mu, (P.N - P.p) / P.p));
        return std::vector<std::vector<std::string>>{numeric_row({bs[i], beta, phi, beta - phi})};
    });
    write_csv(cfg.output_dir / "b_star.csv", table);
    std::optional<double> b_star;
    for (const auto& row : table.rows) {
        if (!(std::stod(row[3]) > 0.0)) break;
        b_star = std::stod(row[0]);
    }
    return json{{"epsilon", eps0}, {"phi_max", phi}, {"largest_b_inf_below", b_star ? json(*b_star) : json(nullptr)},
                {"grid_max", bs.back()}};
}

Outcome cmd_ray_max(const RunConfig& cfg) {
    check_options(cfg, {"lemma", "rho", "delta", "check_regime"});
    check_params(cfg.params, true);
    const std::string lemma_s = option<std::string>(cfg, "lemma", cfg.params.lambda > 0.0 ? "lemma3" : "lemma4");
    if (lemma_s != "lemma3" && lemma_s != "lemma4") throw ConfigError("option lemma must be lemma3 or lemma4");
    const RayLemma which = lemma_s == "lemma3" ? RayLemma::lemma3 : RayLemma::lemma4;
    RayVerifyOptions ro;
    ro.rho = option<double>(cfg, "rho", 1.0);
    ro.check_regime = option<bool>(cfg, "check_regime", true);
    if (cfg.options.contains("delta")) ro.delta = option<double>(cfg, "delta", 1.0);
    const auto eps = sweep_or(cfg, "eps", log_grid(1e-1, 1e-3, 5));
    const auto C = constants_for(cfg, cfg.params);
    const std::vector<std::string> cols = {"epsilon", "delta", "t_max", "phi_max", "threshold", "margin", "relative_margin"};
    double threshold = 0.0, kappa = 0.0;
    std::mutex m;
    const auto table = run_cells(cfg, "ray_max", eps.size(), cols, [&](std::size_t i) {
        const auto rep = verify_below_threshold(cfg.params, C, {eps[i]}, which, ro);
        {
            std::lock_guard lock(m);
            threshold = rep.threshold;
            kappa = rep.kappa;
        }
        const auto& r = rep.rows.front();
        return std::vector<std::vector<std::string>>{numeric_row({r.epsilon, r.delta, r.max.t_max, r.max.phi_max,
                                                                  r.max.threshold, r.max.margin, r.max.relative_margin})};
    });
    write_csv(cfg.output_dir / "ray_max.csv", table);
    write_plot_script(cfg.output_dir / "ray_max.gp", "ray_max.csv", 1, {4, 5}, "x");
    std::optional<double> strict_from;
    std::vector<std::pair<double, double>> sorted; // (eps, margin)
    for (const auto& row : table.rows) sorted.emplace_back(std::stod(row[0]), std::stod(row[5]));
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [e, margin] : sorted) {
        if (!(margin > 0.0)) break;
        strict_from = e;
    }
    json j{{"params", cfg.params}, {"lemma", lemma_s}, {"threshold", threshold}, {"kappa", kappa},
           {"strict_from_eps", strict_from ? json(*strict_from) : json(nullptr)}};
    if (which == RayLemma::lemma3 && cfg.sweep.contains("b_inf")) j["b_star"] = empirical_b_star(cfg, C, sorted);
    write_json(cfg.output_dir / "ray_max.json", j);
    return {kExitOk, "ray-max: " + lemma_s + " threshold " + fmt(threshold) + ", " + std::to_string(table.rows.size()) + " rows"};
}

CoefficientField coefficient_from(const RunConfig& cfg) {
    if (!cfg.options.contains("coefficient")) return CoefficientField::constant(cfg.params.a0);
    try {
        return cfg.options.at("coefficient").get<CoefficientField>();
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("coefficient: ") + e.what());
    }
}

SourceTerm source_from(const RunConfig& cfg) {
    if (!cfg.options.contains("source")) return SourceTerm::torsion();
    try {
        return cfg.options.at("source").get<SourceTerm>();
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("source: ") + e.what());
    }
}

Outcome cmd_solve_radial(const RunConfig& cfg) {
    check_options(cfg, {"coefficient", "source", "grid_size"});
    check_params(cfg.params, false);
    const auto a = coefficient_from(cfg);
    const auto f = source_from(cfg);
    const auto n = option<std::size_t>(cfg, "grid_size", 1024);
    if (n < 256) throw ConfigError("grid_size must be at least 256");
    RadialSolverOptions so;
    so.rel_tol = cfg.tol.ode_rel_tol;
    so.abs_tol = cfg.tol.ode_abs_tol;
    const auto res = solve_radial_bvp(cfg.params, a, f, n, so);
    json j{{"params", cfg.params}, {"coefficient", a}, {"source", f}, {"grid_size", n}};
    if (res.status == ShootingStatus::no_sign_change) {
        j["status"] = "no_sign_change";
        write_json(cfg.output_dir / "solve_radial.json", j);
        return {kExitNotApplicable, "solve-radial: no sign change in the shooting bracket"};
    }
    {
        std::ofstream out(cfg.output_dir / "solution.csv", std::ios::binary);
        write_solution_csv(out, res.solution);
    }
    write_plot_script(cfg.output_dir / "solution.gp", "solution.csv", 1, {2, 3}, "");
    j["status"] = "solved";
    j["shooting_value"] = res.solution.shooting_value;
    j["residual"] = res.solution.residual;
    j["boundary_value"] = res.boundary_value;
    j["bisections"] = res.bisections;
    write_json(cfg.output_dir / "solve_radial.json", j);
    return {kExitOk, "solve-radial: u(0) = " + fmt(res.solution.shooting_value) + ", residual " + fmt(res.solution.residual)};
}

Outcome cmd_pohozaev(const RunConfig& cfg) {
    check_options(cfg, {"coefficient", "source", "solution"});
    check_params(cfg.params, false);
    if (!cfg.options.contains("solution")) throw ConfigError("pohozaev-check needs options.solution (CSV path)");
    fs::path sp = option<std::string>(cfg, "solution", "");
    if (sp.is_relative() && !fs::exists(sp)) sp = cfg.base_dir / sp;
    std::ifstream in(sp);
    if (!in) throw ConfigError("cannot read solution " + sp.string());
    RadialSolution sol;
    try {
        sol = read_solution_csv(in);
    } catch (const PreconditionError& e) {
        throw ConfigError(e.what());
    }
    const auto a = coefficient_from(cfg);
    const auto f = source_from(cfg);
    PohozaevReport rep;
    try {
        rep = evaluate_identity(sol, cfg.params, a, f);
    } catch (const PreconditionError& e) {
        write_json(cfg.output_dir / "pohozaev.json", json{{"refused", e.what()}});
        return {kExitNotApplicable, std::string("pohozaev-check: refused: ") + e.what()};
    }
    json j = rep;
    j["params"] = cfg.params;
    write_json(cfg.output_dir / "pohozaev.json", j);
    return {kExitOk, "pohozaev-check: lhs " + fmt(rep.lhs_total) + " rhs " + fmt(rep.rhs) + " residual_rel " + fmt(rep.residual_rel)};
}

SmallCase small_case_from(const std::string& s) {
    if (s == "auto") return SmallCase::automatic;
    if (s == "i") return SmallCase::i;
    if (s == "ii") return SmallCase::ii;
    if (s == "iii") return SmallCase::iii;
    throw ConfigError("small.case must be auto, i, ii or iii");
}

Outcome cmd_nonexistence(const RunConfig& cfg) {
    check_options(cfg, {"strictly_starshaped", "small"});
    check_params(cfg.params, false);
    const bool star = option<bool>(cfg, "strictly_starshaped", true);
    const auto C = constants_for(cfg, cfg.params);
    const auto v = nonexistence_verdict(cfg.params, C, star);
    json j{{"params", cfg.params}, {"verdict", v}};
    bool applicable = v.applicable;
    if (cfg.options.contains("small")) {
        const json& s = cfg.options.at("small");
        if (!s.is_object()) throw ConfigError("options.small must be an object");
        std::optional<double> gamma;
        if (s.contains("gamma")) gamma = s.at("gamma").get<double>();
        EmbeddingConstants emb;
        if (s.contains("embedding_constants")) emb = s.at("embedding_constants").get<EmbeddingConstants>();
        const auto which = small_case_from(s.value("case", std::string("auto")));
        try {
            const auto cert = small_norm_certificate(cfg.params, C, gamma, emb, which);
            j["small"] = cert;
            applicable = true;
        } catch (const PreconditionError& e) {
            j["small"] = json{{"applicable", false}, {"reason", e.what()}};
        }
    }
    write_json(cfg.output_dir / "nonexistence.json", j);
    std::string summary = std::string("nonexistence: ") + (v.applicable ? to_string(v.which) : "no global case");
    if (j.contains("small") && j["small"].contains("kappa")) {
        summary += ", " + j["small"]["case"].get<std::string>() + " kappa " + fmt(j["small"]["kappa"].get<double>());
    }
    return {applicable ? kExitOk : kExitNotApplicable, summary};
}

Outcome cmd_report(const RunConfig& cfg) {
    check_options(cfg, {});
    check_params(cfg.params, true);
    const ProblemParams& P = cfg.params;
    const auto C = constants_for(cfg, P);
    json j{{"params", P}, {"constants", C}, {"p_star", p_star(P)}, {"q_star", q_star(P)}};
    j["classification"] = classify_existence_case(P, C.lambda1_p);
    if (P.N * (P.q - 1.0) - (P.N - 1.0) * P.p > 0.0) {
        const auto w = kappa_window(P);
        j["kappa_window"] = {{"kappa_low", w.kappa_low}, {"kappa_high", w.kappa_high}, {"nonempty", w.nonempty}};
    }
    if (P.mu > 0.0 || P.b_inf > 0.0) {
        ThresholdOptions opts;
        opts.seed = cfg.seed;
        const auto r = compute_beta_star(P, C, opts);
        j["beta_star"] = {{"value", r.beta_star}, {"method", to_string(r.method)},
                          {"cross_check_rel_diff", r.cross_check_rel_diff}};
    }
    j["nonexistence"] = nonexistence_verdict(P, C, true);
    write_json(cfg.output_dir / "report.json", j);
    return {kExitOk, std::string("report: ") + to_string(classify_existence_case(P, C.lambda1_p).theorem)};
}

Outcome dispatch(const RunConfig& cfg) {
    if (cfg.command == "classify") return cmd_classify(cfg);
    if (cfg.command == "beta-star") return cmd_beta_star(cfg);
    if (cfg.command == "bubble-scan") return cmd_bubble_scan(cfg);
    if (cfg.command == "ray-max") return cmd_ray_max(cfg);
    if (cfg.command == "solve-radial") return cmd_solve_radial(cfg);
    if (cfg.command == "pohozaev-check") return cmd_pohozaev(cfg);
    if (cfg.command == "nonexistence") return cmd_nonexistence(cfg);
    if (cfg.command == "report") return cmd_report(cfg);
    throw ConfigError("no command given");
}

int fail(const fs::path& out_dir, int code, const std::string& kind, const std::string& what, json extra = json::object()) {
    json j = std::move(extra);
    j["error"] = kind;
    j["message"] = what;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!ec) {
        try {
            write_json(out_dir / "error.json", j);
        } catch (...) {
        }
    }
    j["format_version"] = kFormatVersion;
    std::cerr << j.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dplab: double phase critical problem laboratory"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::size_t> seed;
    unsigned workers = 1;
    std::vector<std::string> tols;
    for (const auto& name : kCommands) {
        auto* sub = app.add_subcommand(name, "run the " + name + " step");
        sub->add_option("--config", config_path, "run config JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("--seed", seed, "seed for multi-start sequences");
        sub->add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);
        sub->add_option("--tol", tols, "tolerance override name=value")->take_all();
    }
    auto* run = app.add_subcommand("run", "run the command named in the config");
    run->add_option("--config", config_path, "run config JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "seed");
    run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    run->add_option("--tol", tols, "tolerance override name=value")->take_all();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    fs::path out = out_dir.empty() ? fs::path("out") : fs::path(out_dir);
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        if (sub != "run") {
            if (!cfg.command.empty() && cfg.command != sub) {
                throw ConfigError("config command " + cfg.command + " does not match subcommand " + sub);
            }
            cfg.command = sub;
        }
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        out = cfg.output_dir;
        if (seed) cfg.seed = *seed;
        cfg.workers = workers;
        for (const auto& t : tols) {
            const auto eq = t.find('=');
            if (eq == std::string::npos) throw ConfigError("--tol expects name=value: " + t);
            double v = 0.0;
            try {
                v = std::stod(t.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("--tol value not numeric: " + t);
            }
            cfg.tol.set(t.substr(0, eq), v);
        }
        fs::create_directories(cfg.output_dir);
        const auto res = dispatch(cfg);
        std::cout << res.summary << "\n";
        return res.code;
    } catch (const ConfigError& e) {
        return fail(out, kExitConfig, "config", e.what(), json{{"violations", e.violations}});
    } catch (const json::exception& e) {
        return fail(out, kExitConfig, "config", e.what());
    } catch (const PreconditionError& e) {
        return fail(out, kExitConfig, "precondition", e.what());
    } catch (const DomainError& e) {
        return fail(out, kExitConfig, "domain", e.what());
    } catch (const NumericError& e) {
        return fail(out, kExitNumeric, "numeric", e.what(), json{{"achieved", e.achieved()}});
    } catch (const std::exception& e) {
        return fail(out, kExitNumeric, "numeric", e.what());
    }
}
