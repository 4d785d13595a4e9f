// chaoslab: command-line front end. Every subcommand prints a JSON report on stdout
// (and writes it plus any CSV into --out). Exit codes: 0 ok, 2 bad input, 3 numerical failure.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chaoslab/breuer.hpp"
#include "chaoslab/edgeworth.hpp"
#include "chaoslab/io.hpp"
#include "chaoslab/majorizing.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/second_chaos_matrix.hpp"
#include "chaoslab/sheet.hpp"
#include "chaoslab/toeplitz.hpp"

using namespace chaoslab;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Global {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out = ".";
    bool quiet = false;
};

std::vector<double> parse_doubles(const std::string& s, const std::string& field) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ConfigError(field, "cannot parse '" + cell + "' as a number");
        }
    }
    if (v.empty()) throw ConfigError(field, "empty list");
    return v;
}

// "64..1024" doubles from 64 to 1024; "10,20,50" is taken literally
std::vector<int> parse_horizons(const std::string& s, const std::string& field) {
    std::vector<int> v;
    const auto dots = s.find("..");
    if (dots != std::string::npos) {
        const auto lo = parse_doubles(s.substr(0, dots), field), hi = parse_doubles(s.substr(dots + 2), field);
        if (lo.size() != 1 || hi.size() != 1 || lo[0] < 2 || hi[0] < lo[0])
            throw ConfigError(field, "range must look like 64..1024");
        for (double t = lo[0]; t <= hi[0] * (1 + 1e-12); t *= 2) v.push_back(static_cast<int>(std::llround(t)));
        return v;
    }
    for (double t : parse_doubles(s, field)) {
        if (t != std::floor(t) || t < 2) throw ConfigError(field, "horizons must be integers >= 2");
        v.push_back(static_cast<int>(t));
    }
    return v;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

// g selector: "sin", "cos", or {"type": "trig", "a": [..], "phi": x} / {"type": "damped_monomial", "beta": [..], "w": x}
TestFunction g_from_json(const Json& j, int d, const std::string& where = "g") {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "sin") return TestFunction::trig(Vec::Ones(d), -std::numbers::pi / 2);
        if (name == "cos") return TestFunction::trig(Vec::Ones(d), 0.0);
        throw ConfigError(where, "unknown test function '" + name + "' (sin|cos or an object)");
    }
    if (!j.is_object() || !j.contains("type")) throw ConfigError(where, "needs a \"type\"");
    const std::string type = j.at("type").get<std::string>();
    auto numbers = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(where + "." + key, "missing array");
        std::vector<double> v;
        for (const auto& x : j.at(key)) {
            if (!x.is_number()) throw ConfigError(where + "." + key, "entries must be numbers");
            v.push_back(x.get<double>());
        }
        if (static_cast<int>(v.size()) != d)
            throw ConfigError(where + "." + key, "needs " + std::to_string(d) + " entries");
        return v;
    };
    if (type == "trig") return TestFunction::trig(to_vec(numbers("a")), j.value("phi", 0.0));
    if (type == "damped_monomial") {
        std::vector<int> beta;
        for (double b : numbers("beta")) {
            if (b < 0 || b != std::floor(b)) throw ConfigError(where + ".beta", "entries must be nonnegative integers");
            beta.push_back(static_cast<int>(b));
        }
        return TestFunction::damped_monomial(MultiIndex(beta), j.value("w", 3.0));
    }
    throw ConfigError(where + ".type", "unknown type '" + type + "' (trig|damped_monomial)");
}

Json cumulants_json(const CumulantSet& k) {
    Json out = Json::array();
    for (const auto& [a, v] : k.values) {
        Json row{{"alpha", a.e}, {"value", v}};
        if (k.se.count(a)) row["se"] = k.se.at(a);
        out.push_back(row);
    }
    return out;
}

Json slope_json(const Slope& s) { return Json{{"slope", s.slope}, {"se", s.se}}; }

Json fit_columns(const RateTable& t) {
    Json out = Json::object();
    if (t.rows.size() < 4) return out;
    const std::pair<const char*, double RateRow::*> cols[] = {
        {"delta_gamma", &RateRow::delta_gamma}, {"delta_c", &RateRow::delta_c},     {"phi", &RateRow::phi},
        {"raw_gap", &RateRow::raw_gap},         {"corrected_gap", &RateRow::corrected_gap}};
    for (const auto& [name, col] : cols) {
        try {
            out[name] = slope_json(rate_fit(t, col));
        } catch (const std::domain_error&) {
            out[name] = nullptr;  // zero or NaN entries
        }
    }
    return out;
}

Json base_report(const Global& g, const std::string& command) {
    return Json{{"command", command},
                {"version", kVersion},
                {"compiler", __VERSION__},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"seed", g.seed},
                {"threads", resolve_threads(g.threads)}};
}

void emit(const Global& g, const std::string& name, const Json& report) {
    std::filesystem::create_directories(g.out);
    write_text_file(g.out + "/" + name + ".json", report.dump(2) + "\n");
    if (!g.quiet) std::cout << report.dump(2) << "\n";
}

Json load_config(const std::string& path) {
    if (path.empty()) throw ConfigError("--config", "required");
    return read_json_file(path);
}

MCConfig mc_config(const Global& g, std::uint64_t samples) {
    MCConfig mc;
    mc.samples = samples;
    mc.seed = g.seed;
    mc.threads = g.threads;
    return mc;
}

// ------------------------------------------------------------------ subcommands

Json cmd_contract(const Global& g, const std::string& config) {
    Json rep = base_report(g, "contract");
    SymKernel f, h;
    int r = 1;
    if (config.empty()) {
        // the 2x2 example: diag(1,-1) against the swap matrix on 2 sectors
        Mat A(2, 2), B(2, 2);
        A << 1, 0, 0, -1;
        B << 0, 1, 1, 0;
        f = StepKernelMatrix(A).to_kernel();
        h = StepKernelMatrix(B).to_kernel();
        rep["input"] = "built-in step kernels diag(1,-1), [[0,1],[1,0]] with N=2";
    } else {
        const Json j = load_config(config);
        std::vector<std::string> warn;
        f = kernel_from_json(j.at("f"), "f", &warn);
        h = kernel_from_json(j.contains("g") ? j.at("g") : j.at("f"), "g", &warn);
        if (j.contains("r")) {
            if (!j.at("r").is_number_integer()) throw ConfigError("r", "must be an integer");
            r = j.at("r").get<int>();
        }
        if (f.dim() != h.dim()) throw ConfigError("g.dim", "must match f.dim");
        if (r < 0 || r > std::min(f.order(), h.order())) throw ConfigError("r", "must be in [0, min(p, q)]");
        rep["input"] = j;
        rep["warnings"] = warn;
    }
    const Kernel c = contract(f, h, r);
    const SymKernel s = symmetrize(c);
    rep["r"] = r;
    rep["contraction_norm2"] = c.norm2();
    rep["symmetrized_norm2"] = s.norm2();
    rep["contraction"] = kernel_to_json(c);
    rep["symmetrized"] = kernel_to_json(s);
    return rep;
}

Json cmd_cumulants(const Global& g, const std::string& config, int order) {
    const Json j = load_config(config);
    std::vector<std::string> warn;
    const ChaosVector F = chaos_vector_from_json(j.contains("vector") ? j.at("vector") : j, &warn);
    if (order < 2 || order > 6) throw ConfigError("--order", "must be in 2..6");
    Json rep = base_report(g, "cumulants");
    rep["warnings"] = warn;
    const int d = F.d();
    CumulantSet k(d, order);
    for (int o = 1; o <= order; ++o)
        for (const auto& a : multi_indices(d, o)) k.set(a, o == 1 ? F.components[a.labels()[0]].mean() : joint_cumulant(F, a));
    rep["cumulants"] = cumulants_json(k);
    const Mat C = chaos_covariance(F);
    rep["covariance"] = matrix_to_json(C);
    if (F.pure()) {
        Mat vg(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) vg(a, b) = var_gamma(F, a, b);
        rep["var_gamma"] = matrix_to_json(vg);
    } else {
        rep["var_gamma"] = nullptr;  // only defined for pure components
    }
    if (j.contains("target_covariance")) {
        const DiscrepancyReport dr = discrepancy(F, GaussianSpec(matrix_from_json(j.at("target_covariance"), "target_covariance")));
        rep["delta_gamma"] = dr.delta_gamma;
        rep["delta_c"] = dr.delta_c;
        rep["phi"] = dr.phi;
    }
    return rep;
}

Json cmd_edgeworth(const Global& g, const std::string& config, std::uint64_t samples) {
    const Json j = load_config(config);
    std::vector<std::string> warn;
    const ChaosVector F = chaos_vector_from_json(j.at("vector"), &warn);
    const int d = F.d();
    const TestFunction fn = g_from_json(j.contains("g") ? j.at("g") : Json("sin"), d);
    const Mat C = j.contains("target_covariance") ? matrix_from_json(j.at("target_covariance"), "target_covariance")
                                                  : chaos_covariance(F);
    if (C.rows() != d) throw ConfigError("target_covariance", "dimension must match the vector");
    const GaussianSpec Z(C);
    CumulantSet k(d, 3);
    for (int o = 1; o <= 3; ++o)
        for (const auto& a : multi_indices(d, o)) k.set(a, o == 1 ? F.components[a.labels()[0]].mean() : joint_cumulant(F, a));
    const EdgeworthTerms t = edgeworth3_terms(k, Z, fn);
    Json rep = base_report(g, "edgeworth");
    rep["warnings"] = warn;
    rep["g"] = fn.name;
    rep["cumulants"] = cumulants_json(k);
    rep["egz"] = t.base;
    rep["terms"] = {t.first, t.second, t.third};
    rep["e3"] = t.total();
    if (samples > 0) {
        const Estimate e = estimate_expectation(F, fn, mc_config(g, samples));
        rep["samples"] = samples;
        rep["mean_g"] = {{"mean", e.mean}, {"se", e.se}};
        rep["raw_gap"] = e.mean - t.base;
        rep["corrected_gap"] = e.mean - t.total();
    }
    return rep;
}

Json cmd_fourth_moment(const Global& g, const std::string& config) {
    const Json j = load_config(config);
    if (!j.contains("sequence") || !j.at("sequence").is_array() || j.at("sequence").empty())
        throw ConfigError("sequence", "must be a nonempty array of vectors");
    std::vector<ChaosVector> seq;
    std::vector<std::string> warn;
    for (const auto& v : j.at("sequence")) seq.push_back(chaos_vector_from_json(v, &warn));
    const auto diag = fourth_moment_diagnostics(seq);
    bool pure = true;
    for (const auto& F : seq) pure = pure && F.pure();
    Json rep = base_report(g, "fourth-moment");
    rep["warnings"] = warn;
    Json rows = Json::array();
    for (std::size_t n = 0; n < seq.size(); ++n) {
        Json comps = Json::array();
        for (const auto& r : diag[n])
            comps.push_back({{"component", r.component},
                             {"kappa4", r.kappa4},
                             {"contraction_norms", r.contraction_norms},
                             {"var_gamma", r.var_gamma}});
        rows.push_back({{"index", n}, {"components", comps}});
    }
    rep["diagnostics"] = rows;
    if (pure) {
        const auto conds = contraction_conditions(seq, g.threads);
        Json cond = Json::array();
        for (const auto& r : conds)
            cond.push_back({{"contraction_sum", r.contraction_sum},
                            {"sym_ratio", r.sym_ratio},
                            {"majorizing_ratio", r.majorizing_ratio},
                            {"hypotheses", r.hypotheses}});
        rep["contraction_conditions"] = cond;
    }
    return rep;
}

Json cmd_majorizing(const Global& g, const std::string& config) {
    const Json j = load_config(config);
    std::vector<std::string> warn;
    const SymKernel fi = kernel_from_json(j.at("fi"), "fi", &warn);
    const SymKernel fj = j.contains("fj") ? kernel_from_json(j.at("fj"), "fj", &warn) : fi;
    auto get_int = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_number_integer()) throw ConfigError(key, "missing integer");
        return j.at(key).get<int>();
    };
    const int r = get_int("r"), s = get_int("s");
    if (fi.dim() != fj.dim()) throw ConfigError("fj.dim", "must match fi.dim");
    if (r < 1 || r > std::min(fi.order(), fj.order()) - (fi.order() == fj.order() ? 1 : 0))
        throw ConfigError("r", "out of range for these orders");
    if (s < 1 || s > fi.order() + fj.order() - 2 * r - 1) throw ConfigError("s", "out of range for these orders");
    const SplittingReport sr = majorizing_bound_check(fi, fj, r, s);
    Json rep = base_report(g, "majorizing");
    rep["warnings"] = warn;
    rep["g"] = sr.g;
    rep["g8"] = sr.g8;
    rep["found"] = sr.found;
    rep["split_i"] = sr.split_i;
    rep["split_j"] = sr.split_j;
    rep["bound"] = sr.bound;
    rep["best_bound"] = sr.best_bound;
    rep["candidates"] = sr.candidates;
    Json m = Json::array();
    for (const SymKernel* f : {&fi, &fj})
        for (int m2 = 0; m2 <= f->order() - r; ++m2)
            m.push_back({{"order", f->order()}, {"m", m2}, {"value", majorizing_integral({*f, r, m2})}});
    rep["majorizing_integrals"] = m;
    return rep;
}

Json sheet_report(const Global& g, int l, const std::vector<double>& shape, const std::vector<double>& scales,
                  const TestFunction& fn, std::uint64_t samples, const SheetGrid& grid) {
    const SheetReport sr = sheet_rates(l, shape, scales, fn, mc_config(g, samples), grid);
    std::filesystem::create_directories(g.out);
    write_text_file(g.out + "/sheet_rates.csv", sr.table.to_csv());
    Json rep = base_report(g, "sheet");
    rep["l"] = l;
    rep["shape"] = shape;
    rep["samples"] = samples;
    rep["g"] = fn.name;
    rep["grid"] = {{"h", grid.h}, {"horizon_factor", grid.horizon_factor}, {"max_points", grid.max_points}};
    Json rows = Json::array();
    for (std::size_t i = 0; i < sr.results.size(); ++i) {
        const SheetResult& r = sr.results[i];
        std::vector<double> eps;
        for (double a : shape) eps.push_back(a * sr.scales[i]);
        rows.push_back({{"scale", sr.scales[i]},
                        {"epsilons", eps},
                        {"seed", splitmix64(g.seed + i)},
                        {"cumulants", cumulants_json(r.cumulants)},
                        {"covariance", matrix_to_json(r.covariance)},
                        {"egz", r.egz},
                        {"e3", r.e3},
                        {"mean_g", r.mean_g},
                        {"ratio", r.ratio},
                        {"ratio_se", r.ratio_se}});
    }
    rep["scales"] = rows;
    rep["slopes"] = fit_columns(sr.table);
    rep["csv"] = g.out + "/sheet_rates.csv";
    return rep;
}

Json toeplitz_report(const Global& g, const ToeplitzSpec& base, const std::vector<double>& horizons,
                     const std::vector<MultiIndex>& alphas) {
    std::string csv = "T,alpha,value,value_half,limit,min_order,max_order\n";
    Json rep = base_report(g, "toeplitz");
    rep["f"] = base.f.name;
    Json hs = Json::array();
    for (const auto& h : base.h) hs.push_back(h.name);
    rep["h"] = hs;
    rep["step"] = base.step;
    Json rows = Json::array();
    for (const auto& a : alphas) {
        std::vector<double> Ts, gaps;
        const double lim = toeplitz_limit(base, a);
        for (double T : horizons) {
            ToeplitzSpec s = base;
            s.T = T;
            s.validate();
            const ToeplitzCumulant k = toeplitz_cumulant(s, a);
            // kappa_n T^{n/2-1} -> limit
            const double scaled = k.value * std::pow(T, a.order() / 2.0 - 1);
            char buf[256];
            std::snprintf(buf, sizeof buf, "%.12g,%s,%.12e,%.12e,%.12e,%.12e,%.12e\n", T, a.str().c_str(), scaled,
                          k.value_half * std::pow(T, a.order() / 2.0 - 1), lim,
                          k.min_order * std::pow(T, a.order() / 2.0 - 1),
                          k.max_order * std::pow(T, a.order() / 2.0 - 1));
            csv += buf;
            rows.push_back({{"T", T}, {"alpha", a.e}, {"cumulant", k.value}, {"scaled", scaled}, {"limit", lim},
                            {"spread", k.spread()}});
            Ts.push_back(T);
            gaps.push_back(std::abs(scaled - lim));
        }
        if (Ts.size() >= 4) {
            try {
                rep["limit_gap_slope"][a.str()] = slope_json(rate_fit(Ts, gaps));
            } catch (const std::domain_error&) {
                rep["limit_gap_slope"][a.str()] = nullptr;
            }
        }
    }
    rep["rows"] = rows;
    std::filesystem::create_directories(g.out);
    write_text_file(g.out + "/toeplitz.csv", csv);
    rep["csv"] = g.out + "/toeplitz.csv";
    return rep;
}

Json breuer_report(const Global& g, const BreuerMajorSpec& spec, const std::vector<int>& horizons,
                   const TestFunction& fn, std::uint64_t samples) {
    const BreuerReport br = breuer_experiment(spec, horizons, fn, mc_config(g, samples));
    std::filesystem::create_directories(g.out);
    write_text_file(g.out + "/breuer_rates.csv", br.table.to_csv());
    Json rep = base_report(g, "breuer");
    rep["H"] = spec.H;
    rep["orders"] = spec.orders;
    rep["step"] = spec.step;
    rep["samples"] = samples;
    rep["g"] = fn.name;
    Json rows = Json::array();
    for (const auto& s : br.scales) {
        Json row{{"T", s.T},
                 {"seed", splitmix64(g.seed + static_cast<std::uint64_t>(s.T))},
                 {"covariance", matrix_to_json(s.covariance)},
                 {"limit_covariance", matrix_to_json(s.limit)},
                 {"delta_gamma", s.delta_gamma},
                 {"delta_c", s.delta_c},
                 {"phi", s.phi},
                 {"cumulants", cumulants_json(s.cumulants)},
                 {"egz", s.egz},
                 {"e3", s.e3}};
        if (samples > 0) row["mean_g"] = {{"mean", s.mean_g.mean}, {"se", s.mean_g.se}};
        rows.push_back(row);
    }
    rep["scales"] = rows;
    rep["slopes"] = fit_columns(br.table);
    rep["csv"] = g.out + "/breuer_rates.csv";
    return rep;
}

std::vector<EvenFunction> even_list(const std::string& names, double param) {
    std::vector<EvenFunction> v;
    std::stringstream ss(names);
    std::string n;
    while (std::getline(ss, n, ',')) {
        try {
            v.push_back(EvenFunction::by_name(n, param));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("h", e.what());
        }
    }
    if (v.empty()) throw ConfigError("h", "empty list");
    return v;
}

// Experiment config: {"family": "sheet"|"toeplitz"|"breuer"|"custom-kernels", ...}
Json run_experiment(Global g, const Json& j) {
    if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
        throw ConfigError("family", "missing (sheet|toeplitz|breuer|custom-kernels)");
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed", "must be a nonnegative integer");
        g.seed = j.at("seed").get<std::uint64_t>();
    }
    auto samples = [&](std::uint64_t def) -> std::uint64_t {
        if (!j.contains("samples")) return def;
        if (!j.at("samples").is_number_unsigned()) throw ConfigError("samples", "must be a nonnegative integer");
        return j.at("samples").get<std::uint64_t>();
    };
    auto doubles = [&](const char* key, std::vector<double> def) {
        if (!j.contains(key)) return def;
        if (!j.at(key).is_array()) throw ConfigError(key, "must be an array of numbers");
        std::vector<double> v;
        for (const auto& x : j.at(key)) {
            if (!x.is_number()) throw ConfigError(key, "must be an array of numbers");
            v.push_back(x.get<double>());
        }
        return v;
    };
    const std::string family = j.at("family").get<std::string>();
    if (family == "sheet") {
        const int l = j.value("l", 1);
        if (l < 1 || l > 2) throw ConfigError("l", "must be 1 or 2");
        const auto shape = doubles("shape", {1.0, 0.5});
        const auto scales = doubles("scales", {0.4, 0.2, 0.1, 0.05});
        for (double x : shape)
            if (!(x > 0)) throw ConfigError("shape", "entries must be positive");
        for (double x : scales)
            if (!(x > 0)) throw ConfigError("scales", "entries must be positive");
        SheetGrid grid;
        grid.h = j.value("h", grid.h);
        grid.horizon_factor = j.value("horizon_factor", grid.horizon_factor);
        if (!(grid.h > 0)) throw ConfigError("h", "must be positive");
        const TestFunction fn = g_from_json(j.contains("g") ? j.at("g") : Json("sin"), static_cast<int>(shape.size()));
        return sheet_report(g, l, shape, scales, fn, samples(1000000), grid);
    }
    if (family == "toeplitz") {
        ToeplitzSpec s;
        s.f = EvenFunction::by_name(j.value("f", std::string("gaussian")), j.value("f_param", 1.0));
        s.h = even_list(j.value("h", std::string("cauchy")), j.value("h_param", 1.0));
        s.step = j.value("step", 0.25);
        const auto Ts = doubles("T", {8, 16, 32, 64});
        std::vector<MultiIndex> alphas;
        if (j.contains("alphas")) {
            for (const auto& a : j.at("alphas")) {
                std::vector<int> e = a.get<std::vector<int>>();
                if (static_cast<int>(e.size()) != static_cast<int>(s.h.size()))
                    throw ConfigError("alphas", "each alpha needs one entry per h");
                alphas.emplace_back(e);
            }
        } else {
            for (int n = 2; n <= 3; ++n) alphas.push_back(MultiIndex::from_labels(static_cast<int>(s.h.size()), std::vector<int>(n, 0)));
        }
        return toeplitz_report(g, s, Ts, alphas);
    }
    if (family == "breuer") {
        BreuerMajorSpec spec;
        spec.H = j.value("H", 0.3);
        spec.orders = j.value("q", std::vector<int>{2});
        spec.step = j.value("step", 1.0);
        std::vector<int> Ts;
        for (double t : doubles("T", {64, 128, 256, 512, 1024})) Ts.push_back(static_cast<int>(t));
        try {
            spec.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("breuer", e.what());
        }
        const TestFunction fn = g_from_json(j.contains("g") ? j.at("g") : Json("sin"), static_cast<int>(spec.orders.size()));
        return breuer_report(g, spec, Ts, fn, samples(1000000));
    }
    if (family == "custom-kernels") {
        // {"sequence": [{"scale": s, "vector": {...}}, ...], "target_covariance": [[..]], "g": ...}
        if (!j.contains("sequence") || !j.at("sequence").is_array() || j.at("sequence").empty())
            throw ConfigError("sequence", "must be a nonempty array");
        std::vector<std::string> warn;
        RateTable table;
        Json rows = Json::array();
        const std::uint64_t n = samples(100000);
        for (std::size_t i = 0; i < j.at("sequence").size(); ++i) {
            const Json& e = j.at("sequence")[i];
            const std::string w = "sequence[" + std::to_string(i) + "]";
            if (!e.contains("scale") || !e.at("scale").is_number()) throw ConfigError(w + ".scale", "missing number");
            const ChaosVector F = chaos_vector_from_json(e.at("vector"), &warn);
            const int d = F.d();
            const Mat C = j.contains("target_covariance")
                              ? matrix_from_json(j.at("target_covariance"), "target_covariance")
                              : chaos_covariance(F);
            if (C.rows() != d) throw ConfigError("target_covariance", "dimension must match the vectors");
            const GaussianSpec Z(C);
            const TestFunction fn = g_from_json(j.contains("g") ? j.at("g") : Json("sin"), d);
            const DiscrepancyReport dr = discrepancy(F, Z);
            CumulantSet k(d, 3);
            for (int o = 1; o <= 3; ++o)
                for (const auto& a : multi_indices(d, o))
                    k.set(a, o == 1 ? F.components[a.labels()[0]].mean() : joint_cumulant(F, a));
            RateRow row;
            row.scale = e.at("scale").get<double>();
            row.delta_gamma = dr.delta_gamma;
            row.delta_c = dr.delta_c;
            row.phi = dr.phi;
            const double egz = gaussian_expectation(fn, MultiIndex::zero(d), Z), e3 = edgeworth3(k, Z, fn);
            Json r{{"scale", row.scale}, {"cumulants", cumulants_json(k)}, {"egz", egz}, {"e3", e3}};
            if (n > 0) {
                MCConfig mc = mc_config(g, n);
                mc.seed = splitmix64(g.seed + i);
                const Estimate est = estimate_expectation(F, fn, mc);
                row.raw_gap = est.mean - egz;
                row.corrected_gap = est.mean - e3;
                row.raw_gap_se = row.corrected_gap_se = est.se;
                r["mean_g"] = {{"mean", est.mean}, {"se", est.se}};
            } else {
                row.raw_gap = row.raw_gap_se = row.corrected_gap = row.corrected_gap_se = std::nan("");
            }
            table.rows.push_back(row);
            rows.push_back(r);
        }
        table.sort();
        std::filesystem::create_directories(g.out);
        write_text_file(g.out + "/custom_rates.csv", table.to_csv());
        Json rep = base_report(g, "custom-kernels");
        rep["warnings"] = warn;
        rep["scales"] = rows;
        rep["slopes"] = fit_columns(table);
        rep["csv"] = g.out + "/custom_rates.csv";
        return rep;
    }
    throw ConfigError("family", "unknown family '" + family + "' (sheet|toeplitz|breuer|custom-kernels)");
}

Json cmd_rates(const Global& g, const std::string& config, const std::string& csv) {
    if (!config.empty()) {
        Json rep = run_experiment(g, load_config(config));
        rep["config"] = config;
        return rep;
    }
    if (csv.empty()) throw ConfigError("rates", "give --config (run an experiment) or --csv (fit a table)");
    std::ifstream in(csv);
    if (!in) throw ConfigError(csv, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    RateTable t;
    try {
        t = RateTable::from_csv(ss.str());
    } catch (const std::exception& e) {
        throw ConfigError(csv, e.what());
    }
    if (t.rows.size() < 4) throw ConfigError(csv, "need at least four rows to fit slopes");
    Json rep = base_report(g, "rates");
    rep["csv"] = csv;
    rep["rows"] = t.rows.size();
    rep["slopes"] = fit_columns(t);
    int worse = 0;
    for (const auto& r : t.rows)
        if (std::abs(r.corrected_gap) > std::abs(r.raw_gap) + 2 * std::max(r.raw_gap_se, r.corrected_gap_se)) ++worse;
    rep["rows_where_correction_hurts"] = worse;
    return rep;
}

// Exact identities only; runs in a few seconds.
Json cmd_selftest(const Global& g, bool& ok) {
    Json rep = base_report(g, "selftest");
    Json checks = Json::array();
    ok = true;
    auto check = [&](const std::string& name, double err, double tol) {
        const bool pass = err <= tol;
        ok = ok && pass;
        checks.push_back({{"name", name}, {"error", err}, {"tolerance", tol}, {"pass", pass}});
    };
    std::mt19937_64 rng(g.seed);
    std::normal_distribution<double> nd;
    auto rsym = [&](int n) {
        Mat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = nd(rng);
        return A;
    };
    {
        Mat A(2, 2), B(2, 2);
        A << 1, 0, 0, -1;
        B << 0, 1, 1, 0;
        const MContraction c = m_contract(StepKernelMatrix(A), StepKernelMatrix(B));
        check("2x2 contraction norms", std::max(std::abs(m_norm2(c.contraction, 2) - 0.125), m_norm2(c.symmetrized, 2)),
              1e-12);
    }
    {
        double err = 0;
        for (int rep = 0; rep < 20; ++rep) {
            const Mat A1 = rsym(4), A2 = rsym(4);
            const ChaosVector F = ChaosVector::from_kernels({from_matrix(A1), from_matrix(A2)});
            const double t = 8 * (A1 * A1 * A2).trace();
            err = std::max(err, std::abs(joint_cumulant(F, MultiIndex(std::vector<int>{2, 1})) - t) / (1 + std::abs(t)));
            const double v = 4 * ((A1 * A2 * A1 * A2).trace() + (A1 * A1 * A2 * A2).trace());
            err = std::max(err, std::abs(var_gamma(F, 0, 1) - v) / (1 + std::abs(v)));
        }
        check("second-chaos cumulants and Var Gamma vs traces", err, 1e-10);
    }
    {
        double err = 0;
        for (int N : {2, 5, 9}) {
            const StepKernelMatrix A(rsym(N));
            for (int m = 2; m <= 6; ++m) {
                const double t = trace_cumulant(A, m);
                err = std::max(err, std::abs(eigen_cumulant(A, m) - t) / (1 + std::abs(t)));
            }
        }
        check("trace vs eigenvalue cumulants", err, 1e-10);
    }
    {
        double err = 0;
        for (auto e : std::vector<std::vector<double>>{{0.5}, {0.5, 0.1}, {0.1, 0.5, 0.5}, {0.3, 0.2, 0.9}}) {
            const double c = sheet_constant(e);
            err = std::max({err, std::abs(sheet_constant(e, SheetMode::Simplex) - c) / c,
                            std::abs(sheet_constant(e, SheetMode::Quadrature) - c) / c});
        }
        check("sheet constants: closed, simplex, quadrature", err, 1e-6);
    }
    {
        Mat c(2, 2);
        c << 1.3, 0.4, 0.4, 0.8;
        const GaussianSpec Z(c);
        Vec a(2);
        a << 0.7, -0.2;
        const TestFunction fn = TestFunction::trig(a, 0.3);
        double err = 0;
        for (int i = 0; i < 2; ++i) {
            for (int n = 0; n <= 2; ++n)
                for (const auto& al : multi_indices(2, n)) {
                    auto [l, r] = ibp_hermite(fn, i, al, Z);
                    err = std::max(err, std::abs(l - r));
                }
            auto [l, r] = ibp_covariance(fn, i, Z);
            err = std::max(err, std::abs(l - r));
        }
        check("Gaussian integration by parts", err, 1e-10);
        Vec x(2);
        x << 0.4, -0.9;
        check("Stein equation residual", std::abs(stein_residual(fn, Z, x)), 1e-8);
        double uerr = 0;
        for (const auto& al : multi_indices(2, 2)) {
            const double lhs = gauss_expect([&](const Vec& y) { return u_transform(fn, Z, y, al); }, Z, 16);
            uerr = std::max(uerr, std::abs(lhs - gaussian_expectation(fn, al, Z) / 2));
        }
        check("E d_a U(Z) = E d_a g(Z) / |a|", uerr, 1e-8);
    }
    {
        double err = 0;
        for (int rep = 0; rep < 5; ++rep) {
            Kernel k(3, 3);
            for (auto& v : k.coeffs()) v = nd(rng);
            const SymKernel f = symmetrize(k);
            for (int r = 1; r <= 2; ++r) {
                const double c4 = std::pow(contract(f, f, r).norm2(), 2);
                err = std::max(err, std::abs(majorizing_integral({f, r, 0}) - c4) / (1 + c4));
                err = std::max(err, std::abs(majorizing_integral({f, r, 3 - r}) - c4) / (1 + c4));
            }
        }
        check("majorizing integrals at the endpoints", err, 1e-10);
    }
    {
        BreuerMajorSpec spec;
        spec.orders = {2, 3};
        spec.T = 10;
        const BreuerBuild b = breuer_build(spec);
        const ChaosEvaluator e2(b.F[0]), e3(b.F[1]);
        double err = 0;
        for (int rep = 0; rep < 5; ++rep) {
            Vec xi(10);
            for (auto& v : xi) v = nd(rng);
            double out[2];
            breuer_pathwise(spec, b.basis.whitener(), xi.data(), out);
            err = std::max({err, std::abs(out[0] - e2(xi)), std::abs(out[1] - e3(xi))});
        }
        err = std::max(err, (chaos_covariance(b.F) - breuer_covariance(spec)).norm());
        check("Breuer-Major pathwise vs chaos evaluation", err, 1e-9);
    }
    rep["checks"] = checks;
    rep["pass"] = ok;
    return rep;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chaoslab: cumulants, contractions and Edgeworth-type expansions on Wiener chaos"};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--seed", g.seed, "base seed");
    app.add_option("--threads", g.threads, "worker threads (default: CHAOSLAB_THREADS or all cores)");
    app.add_option("--out", g.out, "directory for reports and CSV files");
    app.add_flag("--quiet", g.quiet, "do not echo the JSON report");

    std::string config, csv, horizons_s = "64..1024", orders_s = "2", shape_s = "1,0.5", scales_s = "0.4,0.2,0.1,0.05";
    std::string f_name = "gaussian", h_names = "cauchy", T_s = "8,16,32,64", alphas_s = "2,3", g_name = "sin";
    std::uint64_t samples = 1000000, edge_samples = 100000;
    int order = 4, l = 1;
    double H = 0.3, step = 1.0, tstep = 0.25, f_param = 1.0, h_param = 1.0, grid_h = 0.5;

    auto* contract_cmd = app.add_subcommand("contract", "contraction norms of two kernels (JSON config)");
    contract_cmd->add_option("--config", config, "{\"f\": kernel, \"g\": kernel, \"r\": int}");
    auto* cum_cmd = app.add_subcommand("cumulants", "exact joint cumulants, covariance and Var Gamma");
    cum_cmd->add_option("--config", config, "chaos vector JSON")->required();
    cum_cmd->add_option("--order", order, "highest cumulant order (2..6)");
    auto* edge_cmd = app.add_subcommand("edgeworth", "third-order expansion, optionally against Monte Carlo");
    edge_cmd->add_option("--config", config, "{\"vector\": ..., \"g\": ..., \"target_covariance\": ...}")->required();
    edge_cmd->add_option("--samples", edge_samples, "Monte Carlo samples (0 to skip)");
    auto* fm_cmd = app.add_subcommand("fourth-moment", "fourth-moment and contraction diagnostics along a sequence");
    fm_cmd->add_option("--config", config, "{\"sequence\": [vector, ...]}")->required();
    auto* maj_cmd = app.add_subcommand("majorizing", "majorizing integrals and splitting search");
    maj_cmd->add_option("--config", config, "{\"fi\": kernel, \"fj\": kernel, \"r\": int, \"s\": int}")->required();
    auto* sheet_cmd = app.add_subcommand("sheet", "exploding sheet family rate table");
    sheet_cmd->add_option("--l", l, "sheet parameter dimension (1 or 2)");
    sheet_cmd->add_option("--shape", shape_s, "epsilon ratios per component");
    sheet_cmd->add_option("--scales", scales_s, "scales multiplying the shape");
    sheet_cmd->add_option("--samples", samples, "Monte Carlo samples per scale");
    sheet_cmd->add_option("--grid-step", grid_h, "grid step");
    sheet_cmd->add_option("--g", g_name, "sin|cos");
    auto* toe_cmd = app.add_subcommand("toeplitz", "Toeplitz trace cumulants against their limit");
    toe_cmd->add_option("--f", f_name, "spectral density: gaussian|cauchy|exponential");
    toe_cmd->add_option("--f-param", f_param, "width or rate of f");
    toe_cmd->add_option("--hs", h_names, "comma list of test functions, one per component");
    toe_cmd->add_option("--h-param", h_param, "width or rate of the h's");
    toe_cmd->add_option("--T", T_s, "horizons");
    toe_cmd->add_option("--step", tstep, "grid step");
    toe_cmd->add_option("--orders", alphas_s, "cumulant orders of the first component");
    auto* br_cmd = app.add_subcommand("breuer", "Breuer-Major rate table for fractional Gaussian noise");
    br_cmd->add_option("--H", H, "Hurst index in (0, 1/2)");
    br_cmd->add_option("--q", orders_s, "Hermite ranks, one per component");
    br_cmd->add_option("--T", horizons_s, "horizons, 64..1024 (doubling) or a comma list");
    br_cmd->add_option("--step", step, "increment length");
    br_cmd->add_option("--samples", samples, "Monte Carlo samples per horizon");
    br_cmd->add_option("--g", g_name, "sin|cos");
    auto* rates_cmd = app.add_subcommand("rates", "run an experiment config, or fit slopes of a rate CSV");
    rates_cmd->add_option("--config", config, "experiment JSON");
    rates_cmd->add_option("--csv", csv, "existing rate table");
    auto* self_cmd = app.add_subcommand("selftest", "exact-identity checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        Json rep;
        std::string name;
        int rc = 0;
        if (*contract_cmd) {
            rep = cmd_contract(g, config), name = "contract";
        } else if (*cum_cmd) {
            rep = cmd_cumulants(g, config, order), name = "cumulants";
        } else if (*edge_cmd) {
            rep = cmd_edgeworth(g, config, edge_samples), name = "edgeworth";
        } else if (*fm_cmd) {
            rep = cmd_fourth_moment(g, config), name = "fourth_moment";
        } else if (*maj_cmd) {
            rep = cmd_majorizing(g, config), name = "majorizing";
        } else if (*sheet_cmd) {
            const auto shape = parse_doubles(shape_s, "--shape");
            if (l < 1 || l > 2) throw ConfigError("--l", "must be 1 or 2");
            SheetGrid grid;
            grid.h = grid_h;
            rep = sheet_report(g, l, shape, parse_doubles(scales_s, "--scales"),
                               g_from_json(Json(g_name), static_cast<int>(shape.size()), "--g"), samples, grid);
            name = "sheet";
        } else if (*toe_cmd) {
            ToeplitzSpec s;
            try {
                s.f = EvenFunction::by_name(f_name, f_param);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("--f", e.what());
            }
            s.h = even_list(h_names, h_param);
            s.step = tstep;
            std::vector<MultiIndex> alphas;
            for (double n : parse_doubles(alphas_s, "--orders")) {
                if (n < 1 || n > 4 || n != std::floor(n)) throw ConfigError("--orders", "orders must be 1..4");
                alphas.push_back(MultiIndex::from_labels(static_cast<int>(s.h.size()), std::vector<int>(static_cast<int>(n), 0)));
            }
            rep = toeplitz_report(g, s, parse_doubles(T_s, "--T"), alphas), name = "toeplitz";
        } else if (*br_cmd) {
            BreuerMajorSpec spec;
            spec.H = H;
            spec.step = step;
            spec.orders.clear();
            for (double q : parse_doubles(orders_s, "--q")) spec.orders.push_back(static_cast<int>(q));
            try {
                spec.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError("--H/--q/--step", e.what());
            }
            rep = breuer_report(g, spec, parse_horizons(horizons_s, "--T"),
                                g_from_json(Json(g_name), static_cast<int>(spec.orders.size()), "--g"), samples);
            name = "breuer";
        } else if (*rates_cmd) {
            rep = cmd_rates(g, config, csv), name = "rates";
        } else if (*self_cmd) {
            bool ok = false;
            rep = cmd_selftest(g, ok), name = "selftest";
            rc = ok ? 0 : 3;
        }
        emit(g, name, rep);
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::length_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
