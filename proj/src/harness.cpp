#include "sbspec/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sbspec/errors.hpp"

namespace sbspec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

const std::vector<std::pair<Mode, std::string>>& mode_names() {
    static const std::vector<std::pair<Mode, std::string>> names{
        {Mode::ResonantSet, "resonant-set"}, {Mode::Perturbed, "perturbed-spectrum"},
        {Mode::Limit, "limit-spectrum"},     {Mode::Correctors, "correctors"},
        {Mode::Converge, "converge"},        {Mode::DivergenceProbe, "divergence-probe"}};
    return names;
}

[[noreturn]] void bad(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad(path, "must be finite");
    return v;
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) bad(path, "expected an integer");
    return j.get<int>();
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
    if (!j.is_array()) bad(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::pair<double, double> get_window(const json& j, const std::string& path) {
    auto v = get_numbers(j, path);
    if (v.size() != 2 || !(v[0] < v[1])) bad(path, "expected [lo, hi] with lo < hi");
    return {v[0], v[1]};
}

ShapeFunction get_shape(const json& j, const std::string& path) {
    try {
        if (j.is_string()) {
            if (j.get<std::string>() == "zero") return ShapeFunction::zero();
            bad(path, "unknown shape name '" + j.get<std::string>() + "'");
        }
        if (j.is_array()) return make_bump_shape(std::span<const double>(get_numbers(j, path)));
        if (!j.is_object()) bad(path, "expected \"zero\", a coefficient array or {coefficients, derivative}");
        for (const auto& [k, v] : j.items())
            if (k != "coefficients" && k != "derivative") bad(path + "." + k, "unknown key");
        if (!j.contains("coefficients")) bad(path + ".coefficients", "missing");
        const auto c = get_numbers(j["coefficients"], path + ".coefficients");
        const int d = j.contains("derivative") ? get_int(j["derivative"], path + ".derivative") : 0;
        if (d < 0) bad(path + ".derivative", "must be nonnegative");
        return make_bump_shape(std::span<const double>(c), d);
    } catch (const InvalidShapeError& e) {
        bad(path, e.what());
    }
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
            bad(path.empty() ? k : path + "." + k, "unknown key");
    }
}

Problem parse_problem(const json& j, std::optional<ResonancePick>& pick) {
    if (!j.is_object()) bad("problem", "expected an object");
    check_keys(j, "problem", {"interval", "U", "alpha", "beta", "gamma1", "gamma2", "shapes", "boundary"});
    Problem p;
    if (j.contains("interval")) {
        auto [a, b] = get_window(j["interval"], "problem.interval");
        p.a = a;
        p.b = b;
        if (!(a < 0.0 && b > 0.0)) bad("problem.interval", "must contain 0 in its interior");
    }
    if (j.contains("U")) p.U = get_numbers(j["U"], "problem.U");
    if (j.contains("alpha")) {
        const json& a = j["alpha"];
        if (a.is_object()) {
            check_keys(a, "problem.alpha", {"resonance", "window"});
            ResonancePick r;
            if (!a.contains("resonance")) bad("problem.alpha.resonance", "missing");
            r.index = get_int(a["resonance"], "problem.alpha.resonance");
            if (r.index < 0) bad("problem.alpha.resonance", "must be nonnegative");
            if (!a.contains("window")) bad("problem.alpha.window", "missing");
            std::tie(r.lo, r.hi) = get_window(a["window"], "problem.alpha.window");
            pick = r;
        } else {
            p.alpha = get_number(a, "problem.alpha");
        }
    }
    if (j.contains("beta")) p.beta = get_number(j["beta"], "problem.beta");
    if (j.contains("gamma1")) p.gamma1 = get_number(j["gamma1"], "problem.gamma1");
    if (j.contains("gamma2")) p.gamma2 = get_number(j["gamma2"], "problem.gamma2");
    if (j.contains("shapes")) {
        const json& s = j["shapes"];
        if (!s.is_object()) bad("problem.shapes", "expected an object");
        check_keys(s, "problem.shapes", {"Psi", "Phi", "Upsilon1", "Upsilon2"});
        if (s.contains("Psi")) p.Psi = get_shape(s["Psi"], "problem.shapes.Psi");
        if (s.contains("Phi")) p.Phi = get_shape(s["Phi"], "problem.shapes.Phi");
        if (s.contains("Upsilon1")) p.Upsilon1 = get_shape(s["Upsilon1"], "problem.shapes.Upsilon1");
        if (s.contains("Upsilon2")) p.Upsilon2 = get_shape(s["Upsilon2"], "problem.shapes.Upsilon2");
    }
    if (j.contains("boundary")) {
        const json& b = j["boundary"];
        if (!b.is_object()) bad("problem.boundary", "expected an object");
        check_keys(b, "problem.boundary", {"left", "right"});
        for (const char* side : {"left", "right"}) {
            if (!b.contains(side)) continue;
            const std::string path = std::string("problem.boundary.") + side;
            if (!b[side].is_string()) bad(path, "expected a string");
            try {
                (side[0] == 'l' ? p.left : p.right) = parse_boundary_kind(b[side].get<std::string>());
            } catch (const ConfigError& e) {
                bad(path, e.what());
            }
        }
    }
    return p;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
}

class Csv {
public:
    explicit Csv(std::initializer_list<std::string> header) {
        out_ << "# schema_version=" << kSchemaVersion << "\n";
        bool first = true;
        for (const auto& h : header) {
            out_ << (first ? "" : ",") << h;
            first = false;
        }
        out_ << "\n";
    }
    Csv& row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
        return *this;
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

template <class F>
auto stage(const std::string& label, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(label + ": " + e.what());
    }
}

SpectrumOptions spectrum_options(const ExperimentConfig& cfg) {
    SpectrumOptions o;
    o.ode = cfg.ode;
    o.multiplicity_tol = cfg.multiplicity_tol;
    return o;
}

ResonanceOptions resonance_options(const ExperimentConfig& cfg) {
    ResonanceOptions o;
    o.ode = cfg.ode;
    return o;
}

json resonance_json(const ResonanceData& r) {
    return {{"alpha", r.alpha},
            {"multiplicity", r.multiplicity},
            {"nondegenerate", r.nondegenerate},
            {"theta", std::isfinite(r.theta) ? json(r.theta) : json(nullptr)},
            {"determinant", r.determinant}};
}

Problem with_alpha(const ExperimentConfig& cfg) {
    Problem p = cfg.problem;
    if (!cfg.alpha_pick) return p;
    const auto& pick = *cfg.alpha_pick;
    auto scan = resonant_set(p.Psi, pick.lo, pick.hi, 1000, resonance_options(cfg));
    std::vector<ResonanceData> good;
    for (const auto& r : scan.resonances)
        if (r.alpha != 0.0 && r.nondegenerate) good.push_back(r);
    std::stable_sort(good.begin(), good.end(),
                     [](const ResonanceData& x, const ResonanceData& y) { return std::abs(x.alpha) < std::abs(y.alpha); });
    if (pick.index >= static_cast<int>(good.size()))
        throw ConfigError("problem.alpha.resonance: only " + std::to_string(good.size()) +
                          " nondegenerate resonances in the window");
    p.alpha = good[pick.index].alpha;
    return p;
}

struct Fits {
    json j = json::object();
    std::vector<std::string> warnings;
};

void add_fit(Fits& f, const std::string& name, const std::vector<std::pair<double, double>>& rows) {
    try {
        auto r = fit_rate(rows);
        f.j[name] = {{"slope", r.slope}, {"intercept", r.intercept}, {"r2", r.r2}, {"points", r.used}};
        for (const auto& w : r.warnings) f.warnings.push_back(name + ": " + w);
    } catch (const DomainError& e) {
        f.j[name] = nullptr;
        f.warnings.push_back(name + ": " + e.what());
    }
}

// Nearest perturbed eigenpair to `target`, searched in a window that widens until something is found.
Eigenpair nearest_perturbed(const Problem& p, double eps, double target, double half, const SpectrumOptions& opt,
                            bool& ambiguous) {
    for (int attempt = 0; attempt < 4; ++attempt, half *= 2.0) {
        auto spec = perturbed_spectrum(p, eps, target - half, target + half, 1000, opt);
        if (spec.pairs.empty()) continue;
        std::sort(spec.pairs.begin(), spec.pairs.end(), [&](const Eigenpair& x, const Eigenpair& y) {
            return std::abs(x.lambda - target) < std::abs(y.lambda - target);
        });
        ambiguous = false;
        if (spec.pairs.size() > 1) {
            const double d0 = std::abs(spec.pairs[0].lambda - target), d1 = std::abs(spec.pairs[1].lambda - target);
            ambiguous = d1 - d0 <= 1e-3 * d1;
        }
        return spec.pairs.front();
    }
    throw AccuracyError("no perturbed eigenvalue near " + std::to_string(target), half);
}

// Distance from y to the span of the given orthonormal limit eigenfunctions.
double distance_to_span(const PiecewiseFunction& y, const std::vector<const PiecewiseFunction*>& basis) {
    const double n2 = inner_product(y, y);
    double proj = 0.0;
    for (const auto* b : basis) {
        const double c = inner_product(y, *b);
        proj += c * c;
    }
    return std::sqrt(std::max(0.0, n2 - proj));
}

}  // namespace

Mode parse_mode(const std::string& name) {
    for (const auto& [m, n] : mode_names())
        if (n == name) return m;
    throw ConfigError("mode: unknown mode '" + name + "'");
}

std::string to_string(Mode m) {
    for (const auto& [mm, n] : mode_names())
        if (mm == m) return n;
    return "?";
}

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) bad("<root>", "expected an object");
    check_keys(j, "", {"problem", "eps", "lambda_window", "alpha_window", "max_count", "eigen_index", "grid_points",
                       "tolerances", "verdict", "mode", "output"});
    ExperimentConfig cfg;
    if (!j.contains("problem")) bad("problem", "missing");
    cfg.problem = parse_problem(j["problem"], cfg.alpha_pick);
    if (j.contains("eps")) {
        cfg.eps = get_numbers(j["eps"], "eps");
        if (cfg.eps.empty()) bad("eps", "sequence is empty");
    }
    for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
        const std::string path = "eps[" + std::to_string(i) + "]";
        if (!(cfg.eps[i] > 0.0)) bad(path, "must be positive");
        if (i > 0 && !(cfg.eps[i] < cfg.eps[i - 1])) bad(path, "sequence must be strictly decreasing");
    }
    if (!cfg.eps.empty() && !(cfg.eps.front() < std::min(-cfg.problem.a, cfg.problem.b)))
        bad("eps[0]", "must be below min(|a|, b)");
    if (j.contains("lambda_window")) std::tie(cfg.lambda_lo, cfg.lambda_hi) = get_window(j["lambda_window"], "lambda_window");
    if (j.contains("alpha_window")) std::tie(cfg.alpha_lo, cfg.alpha_hi) = get_window(j["alpha_window"], "alpha_window");
    if (j.contains("max_count")) {
        cfg.max_count = get_int(j["max_count"], "max_count");
        if (cfg.max_count < 1) bad("max_count", "must be positive");
    }
    if (j.contains("eigen_index")) {
        cfg.eigen_index = get_int(j["eigen_index"], "eigen_index");
        if (cfg.eigen_index < 0) bad("eigen_index", "must be nonnegative");
    }
    if (j.contains("grid_points")) {
        cfg.grid_points = get_int(j["grid_points"], "grid_points");
        if (cfg.grid_points < 10) bad("grid_points", "must be at least 10");
    }
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (!t.is_object()) bad("tolerances", "expected an object");
        check_keys(t, "tolerances", {"rtol", "atol", "multiplicity", "resonance"});
        auto positive = [&](const char* key, double& dst) {
            if (!t.contains(key)) return;
            dst = get_number(t[key], std::string("tolerances.") + key);
            if (!(dst > 0.0)) bad(std::string("tolerances.") + key, "must be positive");
        };
        positive("rtol", cfg.ode.rtol);
        positive("atol", cfg.ode.atol);
        positive("multiplicity", cfg.multiplicity_tol);
        positive("resonance", cfg.resonance_tol);
    }
    if (j.contains("verdict")) {
        const json& v = j["verdict"];
        if (!v.is_object()) bad("verdict", "expected an object");
        check_keys(v, "verdict", {"slope_min", "slope_max"});
        if (v.contains("slope_min")) cfg.slope_min = get_number(v["slope_min"], "verdict.slope_min");
        if (v.contains("slope_max")) cfg.slope_max = get_number(v["slope_max"], "verdict.slope_max");
        if (!(cfg.slope_min < cfg.slope_max)) bad("verdict", "slope_min must be below slope_max");
    }
    if (j.contains("mode")) {
        if (!j["mode"].is_string()) bad("mode", "expected a string");
        cfg.mode = parse_mode(j["mode"].get<std::string>());
    }
    if (j.contains("output")) {
        if (!j["output"].is_string()) bad("output", "expected a directory name");
        cfg.out_dir = j["output"].get<std::string>();
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file.string() + ": cannot open");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    return parse_config(j);
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

LimitSetup resolve_limit(const ExperimentConfig& cfg) {
    LimitSetup s;
    s.problem = stage("resonance selection", [&] { return with_alpha(cfg); });
    Problem& p = s.problem;
    p.validate();
    if (p.Psi.is_zero() || p.alpha == 0.0)
        throw NotApplicableError("alpha Psi = 0 is a degenerate resonance; the limit operator is undefined");
    const auto sopt = spectrum_options(cfg);
    s.determinant = stage("resonance test", [&] { return resonance_determinant_normalized(p.Psi, p.alpha, cfg.ode); });
    s.resonant = std::abs(s.determinant) <= cfg.resonance_tol;
    if (!s.resonant) {
        s.spectrum = stage("limit spectrum",
                           [&] { return limit_spectrum_nonresonant(p, cfg.lambda_lo, cfg.lambda_hi, cfg.max_count, sopt); });
        return s;
    }
    stage("resonance refinement", [&] {
        const double step = resonance_scan_step(p.Psi, p.alpha);
        auto scan = resonant_set(p.Psi, p.alpha - step, p.alpha + step, 1000, resonance_options(cfg));
        if (scan.resonances.empty()) throw InconsistencyError("no resonance near alpha");
        auto best = std::min_element(scan.resonances.begin(), scan.resonances.end(),
                                     [&](const ResonanceData& x, const ResonanceData& y) {
                                         return std::abs(x.alpha - p.alpha) < std::abs(y.alpha - p.alpha);
                                     });
        s.resonance = *best;
        p.alpha = best->alpha;
        return 0;
    });
    s.interface = stage("interface", [&] { return build_interface(s.resonance, p.beta, p.Phi); });
    s.spectrum = stage("limit spectrum", [&] {
        return limit_spectrum_resonant(p, s.interface, cfg.lambda_lo, cfg.lambda_hi, cfg.max_count, sopt);
    });
    return s;
}

namespace {

json limit_json(const LimitSetup& s) {
    json j = {{"case", s.resonant ? "resonant" : "nonresonant"},
              {"alpha", s.problem.alpha},
              {"normalized_determinant", s.determinant}};
    if (s.resonant) {
        j["resonance"] = resonance_json(s.resonance);
        j["theta"] = s.interface.theta;
        j["kappa"] = s.interface.kappa;
    }
    return j;
}

const Eigenpair& pick_eigenpair(const ExperimentConfig& cfg, const LimitSetup& s) {
    if (cfg.eigen_index >= static_cast<int>(s.spectrum.pairs.size()))
        throw ConfigError("eigen_index: the limit spectrum in lambda_window has only " +
                          std::to_string(s.spectrum.pairs.size()) + " eigenvalues");
    return s.spectrum.pairs[cfg.eigen_index];
}

std::shared_ptr<CorrectorSet> build_correctors(const LimitSetup& s, const Eigenpair& pair) {
    return std::make_shared<CorrectorSet>(stage("correctors", [&] {
        return s.resonant ? correctors_resonant(s.problem, s.resonance, s.interface, pair)
                          : correctors_nonresonant(s.problem, pair);
    }));
}

json corrector_json(const CorrectorSet& cs) {
    json j = {{"case", to_string(cs.kind)},
              {"lambda0", cs.lambda0},
              {"lambda1", cs.lambda1},
              {"lambda2", cs.lambda2},
              {"c1", cs.c1},
              {"c2", cs.c2},
              {"checks",
               {{"lambda1_shooting", cs.lambda1_shooting},
                {"lambda2_shooting", cs.lambda2_shooting},
                {"lambda1_closed_form", cs.lambda1_printed},
                {"lambda2_closed_form", cs.lambda2_printed},
                {"max_obstruction", cs.max_obstruction},
                {"matching", cs.matching_check},
                {"max_residual", cs.max_residual},
                {"orthogonality", cs.orthogonality}}},
              {"warnings", cs.warnings}};
    if (cs.kind == CorrectorCase::Resonant) {
        j["checks"]["lambda1_closed_form_psi_weighted"] = cs.lambda1_printed_literal;
        auto sd = [](const SolvabilityData& d) {
            return json{{"G", d.G}, {"H", d.H}, {"F_minus", d.F_minus}, {"F_plus", d.F_plus}};
        };
        j["order1"] = sd(cs.order1);
        j["order2"] = sd(cs.order2);
    }
    return j;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, Mode mode) {
    RunResult res;
    json& rep = res.report;
    rep["schema_version"] = kSchemaVersion;
    rep["mode"] = to_string(mode);
    const auto sopt = spectrum_options(cfg);
    auto emit = [&](const std::string& name, const std::string& content) {
        const fs::path path = cfg.out_dir / name;
        write_atomic(path, content);
        res.files.push_back(path);
    };

    switch (mode) {
    case Mode::ResonantSet: {
        const Problem& p = cfg.problem;
        if (p.Psi.is_zero()) throw ConfigError("problem.shapes.Psi: required for resonant-set");
        auto scan = stage("resonant set",
                          [&] { return resonant_set(p.Psi, cfg.alpha_lo, cfg.alpha_hi, cfg.max_count, resonance_options(cfg)); });
        Csv csv({"alpha", "multiplicity", "nondegenerate", "theta", "determinant"});
        rep["resonances"] = json::array();
        for (const auto& r : scan.resonances) {
            csv.row({num(r.alpha), std::to_string(r.multiplicity), r.nondegenerate ? "1" : "0", num(r.theta),
                     num(r.determinant)});
            rep["resonances"].push_back(resonance_json(r));
        }
        rep["warnings"] = scan.warnings;
        emit("resonances.csv", csv.str());
        break;
    }
    case Mode::Perturbed: {
        Csv csv({"eps", "index", "lambda", "residual", "multiple"});
        rep["spectra"] = json::array();
        std::vector<std::string> warnings;
        for (double eps : cfg.eps) {
            auto spec = stage("perturbed spectrum eps=" + num(eps), [&] {
                return perturbed_spectrum(cfg.problem, eps, cfg.lambda_lo, cfg.lambda_hi, cfg.max_count, sopt);
            });
            json lambdas = json::array();
            for (std::size_t i = 0; i < spec.pairs.size(); ++i) {
                const auto& e = spec.pairs[i];
                csv.row({num(eps), std::to_string(i), num(e.lambda), num(e.residual), e.multiple ? "1" : "0"});
                lambdas.push_back(e.lambda);
            }
            rep["spectra"].push_back({{"eps", eps}, {"lambda", lambdas}});
            for (const auto& w : spec.warnings) warnings.push_back("eps=" + num(eps) + ": " + w);
        }
        rep["warnings"] = warnings;
        emit("perturbed_spectrum.csv", csv.str());
        break;
    }
    case Mode::Limit: {
        auto s = resolve_limit(cfg);
        rep["limit"] = limit_json(s);
        Csv csv({"index", "lambda", "multiple", "residual"});
        json lambdas = json::array();
        for (std::size_t i = 0; i < s.spectrum.pairs.size(); ++i) {
            const auto& e = s.spectrum.pairs[i];
            csv.row({std::to_string(i), num(e.lambda), e.multiple ? "1" : "0", num(e.residual)});
            lambdas.push_back(e.lambda);
        }
        rep["lambda"] = lambdas;
        rep["warnings"] = s.spectrum.warnings;
        emit("limit_spectrum.csv", csv.str());
        break;
    }
    case Mode::Correctors: {
        auto s = resolve_limit(cfg);
        rep["limit"] = limit_json(s);
        const Eigenpair& pair = pick_eigenpair(cfg, s);
        auto cs = build_correctors(s, pair);
        rep["correctors"] = corrector_json(*cs);
        Csv q({"eps", "Lambda", "jump0_left", "jump1_left", "jump2_left", "jump3_left", "jump0_right", "jump1_right",
               "jump2_right", "jump3_right", "residual_outer", "residual_inner"});
        for (double eps : cfg.eps) {
            auto qm = assemble_quasimode(cs, eps);
            std::vector<std::string> cells{num(eps), num(qm.Lambda())};
            for (double v : qm.jump_left()) cells.push_back(num(v));
            for (double v : qm.jump_right()) cells.push_back(num(v));
            cells.push_back(num(qm.residual_outer()));
            cells.push_back(num(qm.residual_inner()));
            q.row(cells);
        }
        Csv outer({"x", "v", "v1", "v2"});
        const Problem& p = cs->problem;
        for (int i = 0; i <= 400; ++i) {
            const double x = p.a + (p.b - p.a) * i / 400.0;
            const Side sd = x <= 0.0 ? Side::Left : Side::Right;
            outer.row({num(x), num(cs->v.eval(x, 0, sd)), num(cs->v1.eval(x, 0, sd)), num(cs->v2.eval(x, 0, sd))});
        }
        Csv inner({"xi", "w", "w1", "w2", "w3"});
        for (int i = 0; i <= 200; ++i) {
            const double xi = -1.0 + i / 100.0;
            const Side sd = xi <= 0.0 ? Side::Left : Side::Right;
            inner.row({num(xi), num(cs->w.eval(xi, 0, sd)), num(cs->w1.eval(xi, 0, sd)), num(cs->w2.eval(xi, 0, sd)),
                       num(cs->w3.eval(xi, 0, sd))});
        }
        emit("quasimode.csv", q.str());
        emit("outer_correctors.csv", outer.str());
        emit("inner_correctors.csv", inner.str());
        break;
    }
    case Mode::Converge: {
        auto s = resolve_limit(cfg);
        rep["limit"] = limit_json(s);
        const Eigenpair& pair = pick_eigenpair(cfg, s);
        const double lambda = pair.lambda;
        // limit eigenfunctions of the same eigenvalue and the gap to the others
        std::vector<const PiecewiseFunction*> cluster;
        double gap = std::numeric_limits<double>::infinity();
        for (const auto& e : s.spectrum.pairs) {
            if (std::abs(e.lambda - lambda) <= 1e-9 * (1.0 + std::abs(lambda)))
                cluster.push_back(&e.y);
            else
                gap = std::min(gap, std::abs(e.lambda - lambda));
        }
        std::shared_ptr<CorrectorSet> cs;
        std::vector<std::string> warnings;
        if (cluster.size() == 1) {
            try {
                cs = build_correctors(s, pair);
            } catch (const Error& e) {
                warnings.push_back(std::string("correctors unavailable: ") + e.what());
            }
        } else {
            warnings.push_back("limit eigenvalue is multiple; eigenfunction distance is to the eigenspace");
        }
        const double step = 4.0 * lambda_scan_step(s.problem.b - s.problem.a, lambda);
        const double half = std::isfinite(gap) ? std::max(0.5 * gap, step) : std::max(std::abs(lambda), step);
        Csv csv({"eps", "lambda_eps", "error_limit", "eigfun_distance", "residual", "Lambda_eps", "error_quasi",
                 "error_first", "ambiguous"});
        std::vector<std::pair<double, double>> r_limit, r_eig, r_quasi, r_first;
        rep["rows"] = json::array();
        for (double eps : cfg.eps) {
            bool ambiguous = false;
            const double target = cs ? cs->lambda0 + eps * cs->lambda1 + eps * eps * cs->lambda2 : lambda;
            auto e = stage("perturbed eigenpair eps=" + num(eps),
                           [&] { return nearest_perturbed(s.problem, eps, target, half, sopt, ambiguous); });
            const double err = std::abs(e.lambda - lambda);
            const double dist = distance_to_span(e.y, cluster);
            json row = {{"eps", eps}, {"lambda_eps", e.lambda}, {"error_limit", err}, {"eigfun_distance", dist},
                        {"residual", e.residual}, {"ambiguous", ambiguous}};
            std::vector<std::string> cells{num(eps), num(e.lambda), num(err), num(dist), num(e.residual)};
            if (cs) {
                const double eq = std::abs(e.lambda - target);
                const double ef = std::abs(e.lambda - lambda - eps * cs->lambda1);
                row["Lambda_eps"] = target;
                row["error_quasi"] = eq;
                row["error_first"] = ef;
                cells.insert(cells.end(), {num(target), num(eq), num(ef)});
                r_quasi.emplace_back(eps, eq);
                r_first.emplace_back(eps, ef);
            } else {
                cells.insert(cells.end(), {"", "", ""});
            }
            cells.push_back(ambiguous ? "1" : "0");
            if (ambiguous) warnings.push_back("eps=" + num(eps) + ": eigenvalue matching is ambiguous");
            csv.row(cells);
            rep["rows"].push_back(row);
            r_limit.emplace_back(eps, err);
            r_eig.emplace_back(eps, dist);
        }
        Fits fits;
        add_fit(fits, "eigenvalue", r_limit);
        add_fit(fits, "eigenfunction", r_eig);
        if (cs) {
            add_fit(fits, "quasimode", r_quasi);
            add_fit(fits, "first_order", r_first);
            rep["correctors"] = corrector_json(*cs);
        }
        warnings.insert(warnings.end(), fits.warnings.begin(), fits.warnings.end());
        rep["fits"] = fits.j;
        const bool ok = !fits.j["eigenvalue"].is_null() && fits.j["eigenvalue"]["slope"].get<double>() >= cfg.slope_min &&
                        fits.j["eigenvalue"]["slope"].get<double>() <= cfg.slope_max;
        rep["verdict"] = ok ? "pass" : "fail";
        rep["band"] = {cfg.slope_min, std::isfinite(cfg.slope_max) ? json(cfg.slope_max) : json(nullptr)};
        rep["warnings"] = warnings;
        res.exit_code = ok ? 0 : 1;
        emit("convergence.csv", csv.str());
        break;
    }
    case Mode::DivergenceProbe: {
        auto probe = stage("divergence probe",
                           [&] { return divergent_branch_probe(cfg.problem, cfg.eps, cfg.grid_points, sopt); });
        Csv csv({"eps", "lambda1", "scaled_lambda1", "negative_count", "threshold_reached"});
        rep["rows"] = json::array();
        bool ok = !probe.rows.empty();
        for (const auto& r : probe.rows) {
            csv.row({num(r.eps), num(r.lambda1), num(r.scaled_lambda1), std::to_string(r.negative_count),
                     r.threshold_reached ? "1" : "0"});
            rep["rows"].push_back({{"eps", r.eps},
                                   {"lambda1", r.lambda1},
                                   {"scaled_lambda1", r.scaled_lambda1},
                                   {"negative_count", r.negative_count}});
            ok = ok && r.negative_count > 0 && r.scaled_lambda1 < 0.0 &&
                 r.negative_count == probe.rows.front().negative_count;
        }
        if (probe.rows.size() >= 2) {
            const double c1 = probe.rows[probe.rows.size() - 1].scaled_lambda1;
            const double c0 = probe.rows[probe.rows.size() - 2].scaled_lambda1;
            const double drift = std::abs(c1 - c0) / std::abs(c1);
            rep["relative_drift"] = drift;
            ok = ok && drift <= 0.2;
        }
        rep["verdict"] = ok ? "pass" : "fail";
        rep["warnings"] = probe.warnings;
        res.exit_code = ok ? 0 : 1;
        emit("divergence_probe.csv", csv.str());
        break;
    }
    }
    emit("report.json", rep.dump(2) + "\n");
    return res;
}

}  // namespace sbspec
