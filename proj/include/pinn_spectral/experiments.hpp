#pragma once

// Experiment drivers behind the command-line tool. Each driver reads a
// validated config struct, writes CSV/JSON artifacts and returns a summary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gpr.hpp"
#include "io.hpp"
#include "nie.hpp"
#include "problems.hpp"
#include "serialization.hpp"
#include "spectral.hpp"

namespace pinn_spectral {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least-squares line y = slope x + intercept with coefficient of determination.
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_line: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("fit_line: abscissae are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

/// Evenly spaced values lo..hi (n >= 1).
struct AxisRange {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;

    Vector nodes() const {
        if (n == 1) return Vector::Constant(1, lo);
        Vector v = Vector::LinSpaced(n, lo, hi);
        v[n - 1] = hi;
        return v;
    }
};

/// Piecewise-linear interpolation of grid values on a uniform 1-D grid.
inline double interpolate_1d(const DomainGrid& grid, const Vector& vals, double x) {
    const auto& ax = grid.axes.at(0);
    if (x < ax.lo || x > ax.hi) return std::numeric_limits<double>::quiet_NaN();
    const double s = (x - ax.lo) / ax.spacing();
    const int i = std::min(static_cast<int>(std::floor(s)), ax.n - 2);
    const double t = s - i;
    return (1.0 - t) * vals[i] + t * vals[i + 1];
}

namespace detail {

inline std::vector<long> positive_longs(ConfigReader& r, const std::string& key, std::vector<long> fallback) {
    if (!r.has(key)) return fallback;
    auto v = r.get<std::vector<long>>(key);
    if (v.empty()) throw ConfigError(r.path_of(key) + ": must not be empty");
    for (long x : v)
        if (x < 1) throw ConfigError(r.path_of(key) + ": entries must be >= 1");
    return v;
}

inline std::vector<double> positive_doubles(ConfigReader& r, const std::string& key, std::vector<double> fallback) {
    if (!r.has(key)) return fallback;
    auto v = r.get<std::vector<double>>(key);
    if (v.empty()) throw ConfigError(r.path_of(key) + ": must not be empty");
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(r.path_of(key) + ": entries must be positive");
    return v;
}

inline AxisRange axis_range(ConfigReader& r, const std::string& key, AxisRange fallback) {
    if (!r.has(key)) return fallback;
    ConfigReader c = r.child(key);
    AxisRange a;
    a.lo = c.get<double>("lo");
    a.hi = c.get<double>("hi");
    a.n = c.get<int>("n");
    c.finish();
    if (a.n < 1 || !(a.hi >= a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi)) {
        throw ConfigError(r.path_of(key) + ": need finite lo <= hi and n >= 1");
    }
    return a;
}

inline Json to_json(const AxisRange& a) { return Json{{"lo", a.lo}, {"hi", a.hi}, {"n", a.n}}; }

inline void check_experiment_name(ConfigReader& r, const std::string& expected) {
    if (!r.has("experiment")) return;
    const auto name = r.get<std::string>("experiment");
    if (name != expected) throw ConfigError("config is for experiment '" + name + "', not '" + expected + "'");
}

inline KernelSpec kernel_or(ConfigReader& r, KernelSpec fallback) {
    return r.has("kernel") ? kernel_from_json(r.at("kernel"), r.path_of("kernel")) : fallback;
}

template <typename Fn>
auto config_guard(const std::string& path, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------- toy

/// How collocation counts map to Green's-function data densities.
enum class EtaUnits {
    Measure,  // eta = A n / (sigma2 x_max) and A n_b / sigma2_b (see toy_config_from_collocation)
    Count     // eta = n / sigma2 and n_b / sigma2_b, used directly
};

struct ToyExperimentConfig {
    KernelSpec kernel = KernelSpec::with_defaults(KernelFamily::CosineFeature, 1.0);
    double g0 = 2.5;
    double x_max = 512.0;
    std::vector<long> n_bulk{128, 1024, 8192};
    long n_boundary = 1;
    double sigma2_bulk = 0.125;
    double sigma2_boundary = 0.0;                  // fixed noise when > 0
    double sigma2_boundary_scale = 1.0 / 64.0;     // otherwise scale / n_bulk
    SamplingScheme sampling = SamplingScheme::Stratified;
    std::uint64_t seed = 7;
    AxisRange x_star{0.0, 6.0, 61};
    std::vector<long> inset_n_bulk{128, 256, 512, 1024, 2048, 4096, 8192};
    double inset_x = 1.2;
    bool grid_solve = true;
    double grid_x_max = 200.0;
    int grid_nodes = 2001;
    EtaUnits eta_units = EtaUnits::Measure;
    double k_max = 0.0;
    int n_k = 20001;

    double sigma2_boundary_for(long n) const {
        return sigma2_boundary > 0.0 ? sigma2_boundary : sigma2_boundary_scale / static_cast<double>(n);
    }

    ToyConfig toy_config(long n) const {
        ToyConfig c;
        if (eta_units == EtaUnits::Measure) {
            c = toy_config_from_collocation(kernel, static_cast<double>(n), sigma2_bulk,
                                            static_cast<double>(n_boundary), sigma2_boundary_for(n), x_max, g0);
        } else {
            c.l = 1.0 / std::sqrt(kernel.sigma_w2);
            c.g0 = g0;
            c.x_max = x_max;
            c.eta_bulk = static_cast<double>(n) / sigma2_bulk;
            c.eta_boundary = static_cast<double>(n_boundary) / sigma2_boundary_for(n);
        }
        c.k_max = k_max;
        c.n_k = n_k;
        return c;
    }

    void validate() const {
        kernel.validate();
        if (kernel.family != KernelFamily::CosineFeature) throw ConfigError("toy: kernel family must be CosineFeature");
        if (!std::isfinite(g0)) throw ConfigError("toy.g0 must be finite");
        if (!(x_max > 0.0)) throw ConfigError("toy.x_max must be positive");
        if (n_bulk.empty()) throw ConfigError("toy.n_bulk must not be empty");
        if (n_boundary < 1) throw ConfigError("toy.n_boundary must be >= 1");
        if (!(sigma2_bulk > 0.0)) throw ConfigError("toy.sigma2_bulk must be positive");
        if (!(sigma2_boundary > 0.0) && !(sigma2_boundary_scale > 0.0)) {
            throw ConfigError("toy: sigma2_boundary or sigma2_boundary_scale must be positive");
        }
        if (x_star.lo < 0.0) throw ConfigError("toy.x_star must be >= 0");
        if (!(inset_x >= 0.0)) throw ConfigError("toy.inset_x must be >= 0");
        if (inset_n_bulk.size() < 2) throw ConfigError("toy.inset_n_bulk needs at least two entries");
        if (grid_solve && (!(grid_x_max > 0.0) || grid_nodes < 8)) {
            throw ConfigError("toy.grid needs x_max > 0 and at least 8 nodes");
        }
        if (k_max != 0.0 && !(k_max * kernel.l >= 12.0)) throw ConfigError("toy.k_max * l must be >= 12");
        if (n_k < 3) throw ConfigError("toy.n_k must be >= 3");
    }
};

inline ToyExperimentConfig toy_config_from_json(const Json& j) {
    ConfigReader r(j, "toy");
    detail::check_experiment_name(r, "toy");
    ToyExperimentConfig c;
    c.kernel = detail::kernel_or(r, c.kernel);
    c.g0 = r.get_or("g0", c.g0);
    c.x_max = r.positive_or("x_max", c.x_max);
    c.n_bulk = detail::positive_longs(r, "n_bulk", c.n_bulk);
    c.n_boundary = r.get_or("n_boundary", c.n_boundary);
    c.sigma2_bulk = r.positive_or("sigma2_bulk", c.sigma2_bulk);
    if (r.has("sigma2_boundary") && r.has("sigma2_boundary_scale")) {
        throw ConfigError("toy: give sigma2_boundary or sigma2_boundary_scale, not both");
    }
    if (r.has("sigma2_boundary")) c.sigma2_boundary = r.positive("sigma2_boundary");
    c.sigma2_boundary_scale = r.positive_or("sigma2_boundary_scale", c.sigma2_boundary_scale);
    if (r.has("sampling")) {
        c.sampling = detail::config_guard("toy.sampling",
                                          [&] { return sampling_scheme_from_string(r.get<std::string>("sampling")); });
    }
    c.seed = r.get_or("seed", c.seed);
    c.x_star = detail::axis_range(r, "x_star", c.x_star);
    if (r.has("inset")) {
        ConfigReader in = r.child("inset");
        c.inset_n_bulk = detail::positive_longs(in, "n_bulk", c.inset_n_bulk);
        c.inset_x = in.get_or("x", c.inset_x);
        in.finish();
    }
    if (r.has("grid")) {
        ConfigReader g = r.child("grid");
        c.grid_solve = g.get_or("enabled", c.grid_solve);
        c.grid_x_max = g.positive_or("x_max", c.grid_x_max);
        c.grid_nodes = g.get_or("nodes", c.grid_nodes);
        g.finish();
    }
    if (r.has("eta_units")) {
        const auto u = r.get<std::string>("eta_units");
        if (u == "measure") c.eta_units = EtaUnits::Measure;
        else if (u == "count") c.eta_units = EtaUnits::Count;
        else throw ConfigError("toy.eta_units must be 'measure' or 'count'");
    }
    if (r.has("quadrature")) {
        ConfigReader q = r.child("quadrature");
        c.k_max = q.get_or("k_max", c.k_max);
        c.n_k = q.get_or("n_k", c.n_k);
        q.finish();
    }
    r.finish();
    c.validate();
    return c;
}

inline Json to_json(const ToyExperimentConfig& c) {
    Json j{{"experiment", "toy"},
           {"kernel", to_json(c.kernel)},
           {"g0", c.g0},
           {"x_max", c.x_max},
           {"n_bulk", c.n_bulk},
           {"n_boundary", c.n_boundary},
           {"sigma2_bulk", c.sigma2_bulk}};
    if (c.sigma2_boundary > 0.0) j["sigma2_boundary"] = c.sigma2_boundary;
    else j["sigma2_boundary_scale"] = c.sigma2_boundary_scale;
    j["sampling"] = to_string(c.sampling);
    j["seed"] = c.seed;
    j["x_star"] = detail::to_json(c.x_star);
    j["inset"] = Json{{"n_bulk", c.inset_n_bulk}, {"x", c.inset_x}};
    j["grid"] = Json{{"enabled", c.grid_solve}, {"x_max", c.grid_x_max}, {"nodes", c.grid_nodes}};
    j["eta_units"] = c.eta_units == EtaUnits::Measure ? "measure" : "count";
    j["quadrature"] = Json{{"k_max", c.k_max}, {"n_k", c.n_k}};
    return j;
}

struct ToyCase {
    long n_bulk = 0;
    ToyConfig cfg;
    Vector x;
    Vector f_gpr;
    Vector f_nie;
    Vector f_grid;
    ToyPrediction prediction;
    double max_gap = 0.0;        // max |f_gpr - f_nie|
    double grid_residual = 0.0;  // residual norm of the grid solve
};

/// Grid NIE for the toy problem in the same units as `cfg`.
inline NieSolution toy_grid_solution(const ToyExperimentConfig& c, const ToyConfig& cfg) {
    const auto grid = make_grid(BoxGeometry::half_line(c.grid_x_max), {c.grid_nodes});
    const double a = toy_spectral_scale(c.kernel);
    return nie_solve_grid(toy_problem(c.kernel, c.g0), grid, cfg.eta_bulk / a * c.grid_x_max, cfg.eta_boundary / a);
}

inline ToyCase run_toy_case(const ToyExperimentConfig& c, long n, bool with_gpr = true) {
    ToyCase tc;
    tc.n_bulk = n;
    tc.cfg = c.toy_config(n);
    tc.x = c.x_star.nodes();
    tc.prediction = toy_predict(tc.cfg, tc.x);
    tc.f_nie = tc.prediction.f;
    tc.f_gpr = Vector::Constant(tc.x.size(), std::numeric_limits<double>::quiet_NaN());
    tc.f_grid = tc.f_gpr;
    if (with_gpr) {
        const auto colloc = sample_collocation(BoxGeometry::half_line(c.x_max), n, c.n_boundary, c.seed,
                                               c.sigma2_bulk, c.sigma2_boundary_for(n), c.sampling);
        tc.f_gpr = gpr_predict(toy_problem(c.kernel, c.g0), colloc, points_1d(tc.x));
        tc.max_gap = (tc.f_gpr - tc.f_nie).cwiseAbs().maxCoeff();
    }
    if (c.grid_solve) {
        const auto sol = toy_grid_solution(c, tc.cfg);
        tc.grid_residual = sol.residual_norm;
        for (Eigen::Index i = 0; i < tc.x.size(); ++i) tc.f_grid[i] = interpolate_1d(sol.grid, sol.f0_vals, tc.x[i]);
    }
    return tc;
}

struct InsetResult {
    std::vector<long> n_bulk;
    std::vector<double> gap;  // g0 - f_NIE(inset_x)
    LinearFit fit;            // log gap against log n
};

inline InsetResult toy_inset(const ToyExperimentConfig& c) {
    InsetResult r;
    std::vector<double> lx, ly;
    for (long n : c.inset_n_bulk) {
        const auto p = toy_predict(c.toy_config(n), Vector::Constant(1, c.inset_x));
        const double gap = c.g0 - p.f[0];
        r.n_bulk.push_back(n);
        r.gap.push_back(gap);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(std::abs(gap)));
    }
    r.fit = fit_line(lx, ly);
    return r;
}

inline Json run_toy(const ToyExperimentConfig& c, ArtifactWriter& out) {
    Json gaps = Json::object();
    std::vector<double> gap_list;
    for (long n : c.n_bulk) {
        const ToyCase tc = run_toy_case(c, n);
        std::vector<CsvRow> rows;
        for (Eigen::Index i = 0; i < tc.x.size(); ++i) {
            rows.push_back({format_number(tc.x[i]), format_number(tc.f_gpr[i]), format_number(tc.f_nie[i]),
                            format_number(tc.f_grid[i])});
        }
        const Json extra{{"n_bulk", n},
                         {"eta_bulk", tc.cfg.eta_bulk},
                         {"eta_boundary", tc.cfg.eta_boundary},
                         {"sigma2_boundary", c.sigma2_boundary_for(n)},
                         {"delta", tc.prediction.delta},
                         {"G00", tc.prediction.g00},
                         {"kappa", tc.cfg.kappa()},
                         {"single_pole_regime", single_pole_regime(tc.cfg)},
                         {"grid_residual_norm", tc.grid_residual},
                         {"max_gap", tc.max_gap}};
        out.write_csv("toy_n" + std::to_string(n) + ".csv", {"x_star", "f_gpr", "f_nie_analytic", "f_nie_grid"}, rows,
                      extra);
        gaps[std::to_string(n)] = tc.max_gap;
        gap_list.push_back(tc.max_gap);
    }
    const InsetResult inset = toy_inset(c);
    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < inset.n_bulk.size(); ++i) {
        rows.push_back({format_number(inset.n_bulk[i]), format_number(inset.gap[i])});
    }
    out.write_csv("toy_inset.csv", {"n_bulk", "g0_minus_f_nie"}, rows, Json{{"x", c.inset_x}});
    bool non_increasing = true;
    for (std::size_t i = 1; i < gap_list.size(); ++i) non_increasing = non_increasing && gap_list[i] <= gap_list[i - 1];
    Json summary{{"max_gap", gaps},
                 {"max_gap_over_g0", gap_list.back() / std::abs(c.g0)},
                 {"gap_non_increasing", non_increasing},
                 {"powerlaw", Json{{"slope", inset.fit.slope}, {"intercept", inset.fit.intercept}, {"r2", inset.fit.r2}}}};
    out.write_json("summary.json", summary);
    return summary;
}

// ---------------------------------------------------------------- spectral diagnostics

struct SpectralSettings {
    std::vector<int> grid;
    double eta_boundary = 100.0;
    std::vector<double> eta_ladder{1.0, 10.0, 100.0, 1000.0, 10000.0};
    OperatorRealization realization = OperatorRealization::Auto;
    double level = 0.99;
};

namespace detail {

inline SpectralSettings spectral_settings(ConfigReader& r, SpectralSettings s) {
    if (r.has("grid")) {
        s.grid = r.get<std::vector<int>>("grid");
        for (int n : s.grid)
            if (n < 8) throw ConfigError(r.path_of("grid") + ": need at least 8 nodes per axis");
    }
    if (r.has("eta_boundary")) {
        s.eta_boundary = r.get<double>("eta_boundary");
        if (!(s.eta_boundary >= 0.0) || !std::isfinite(s.eta_boundary)) {
            throw ConfigError(r.path_of("eta_boundary") + ": must be >= 0");
        }
    }
    s.eta_ladder = positive_doubles(r, "eta_ladder", s.eta_ladder);
    if (r.has("realization")) {
        s.realization = config_guard(r.path_of("realization"), [&] {
            return operator_realization_from_string(r.get<std::string>("realization"));
        });
    }
    s.level = r.get_or("level", s.level);
    if (!(s.level > 0.0 && s.level <= 1.0)) throw ConfigError(r.path_of("level") + ": must lie in (0, 1]");
    return s;
}

inline const char* to_string(OperatorRealization r) {
    switch (r) {
        case OperatorRealization::Auto: return "auto";
        case OperatorRealization::Analytic: return "analytic";
        case OperatorRealization::Grid: return "grid";
    }
    return "?";
}

inline Json to_json(const SpectralSettings& s) {
    return Json{{"grid", s.grid},
                {"eta_boundary", s.eta_boundary},
                {"eta_ladder", s.eta_ladder},
                {"realization", to_string(s.realization)},
                {"level", s.level}};
}

inline std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace detail

/// Eigenbases of K and of [L Khat L^dagger] on one grid.
struct SpectralBases {
    SpectralDecomposition kernel;
    SpectralDecomposition op;
};

inline SpectralBases make_spectral_bases(const LinearDiffOp& op, const KernelSpec& kernel, const DomainGrid& grid,
                                         const SpectralSettings& s) {
    return {eig_kernel(kernel, grid), eig_lkhatl(op, kernel, grid, s.eta_boundary, s.realization)};
}

inline void write_eigenvalues(ArtifactWriter& out, const std::string& name, const SpectralBases& b) {
    std::vector<CsvRow> rows;
    for (Eigen::Index k = 0; k < b.kernel.size(); ++k) {
        rows.push_back({format_number(static_cast<long>(k + 1)), format_number(b.kernel.eigvals[k]),
                        format_number(b.op.eigvals[k])});
    }
    out.write_csv(name, {"k", "lambda_K", "lambda_LKhatL"}, rows,
                  Json{{"retained_K", b.kernel.retained}, {"retained_LKhatL", b.op.retained}});
}

/// A_k curves of the exact solution and the augmented source in both bases,
/// plus Q_n over the eta ladder. Files are named `<prefix>ak_<basis>_<target>.csv`
/// and `<prefix>qn.csv`.
inline Json spectral_targets(ArtifactWriter& out, const std::string& prefix, SpectralBases& bases,
                             const ProblemData& problem, const DomainGrid& grid, const Vector& solution,
                             const SpectralSettings& s) {
    const Vector phi_hat = augmented_source(problem, grid, s.eta_boundary, s.realization);
    Json crossings = Json::object();
    Json monotone = Json::object();
    const std::pair<const char*, const SpectralDecomposition*> basis_list[] = {{"K", &bases.kernel},
                                                                                {"LKhatL", &bases.op}};
    const std::pair<const char*, const Vector*> target_list[] = {{"solution", &solution},
                                                                  {"augmented_source", &phi_hat}};
    for (const auto& [bname, dec] : basis_list) {
        for (const auto& [tname, f] : target_list) {
            const Vector curve = cumulative_spectral_curve(*dec, *f);
            std::vector<CsvRow> rows;
            bool mono = true;
            for (Eigen::Index k = 1; k < curve.size(); ++k) {
                const double lam = dec->eigvals[k - 1];
                rows.push_back({format_number(static_cast<long>(k)), format_number(curve[k]),
                                format_number(lam > 0.0 ? -std::log(lam) : std::numeric_limits<double>::infinity())});
                mono = mono && curve[k] >= curve[k - 1];
            }
            const std::string key = std::string(bname) + "/" + tname;
            const auto crossing = spectral_crossing(curve, s.level);
            crossings[key] = crossing;
            monotone[key] = mono;
            out.write_csv(prefix + "ak_" + bname + "_" + tname + ".csv", {"k", "A_k", "neg_log_lambda"}, rows,
                          Json{{"basis", bname}, {"target", tname}, {"level", s.level}, {"crossing", crossing}});
        }
    }
    bases.op.attach_source(phi_hat);
    std::vector<CsvRow> rows;
    Json qn = Json::array();
    for (double eta : s.eta_ladder) {
        const double q = figure_of_merit_qn(bases.op, eta);
        rows.push_back({format_number(eta), format_number(q)});
        qn.push_back(Json{{"eta_bulk", eta}, {"Q_n", q}});
    }
    out.write_csv(prefix + "qn.csv", {"eta_bulk", "Q_n"}, rows,
                  Json{{"source_residual", bases.op.source_residual}, {"eta_boundary", s.eta_boundary}});
    return Json{{"crossings", crossings}, {"A_k_monotone", monotone}, {"Q_n", qn},
                {"source_residual", bases.op.source_residual}};
}

// ---------------------------------------------------------------- heat

struct HeatGprSettings {
    bool enabled = true;
    std::vector<long> n_bulk{100, 200, 400};
    long n_boundary = 60;
    double sigma2_bulk = 1e-3;
    double sigma2_boundary = 1e-4;
    std::uint64_t seed = 11;
    SamplingScheme sampling = SamplingScheme::Iid;
    std::vector<int> test_grid{41, 21};
};

struct HeatExperimentConfig {
    KernelSpec kernel = KernelSpec::with_defaults(KernelFamily::ErfArcsine, 1.0);
    double alpha = 2.0;
    std::vector<double> a{1.0 / 16.0, 1.0 / 32.0};
    std::vector<int> residual_grid{201, 101};
    HeatGprSettings gpr;
    SpectralSettings spectral{{64, 32}, 100.0, {1.0, 10.0, 100.0, 1000.0, 10000.0}, OperatorRealization::Auto, 0.99};

    KernelSpec scaled_kernel() const { return scale_initialization(kernel, alpha); }

    void validate() const {
        kernel.validate();
        if (!(alpha > 0.0)) throw ConfigError("heat.alpha must be positive");
        if (a.empty()) throw ConfigError("heat.a must not be empty");
        if (residual_grid.size() != 2 || residual_grid[0] < 8 || residual_grid[1] < 8) {
            throw ConfigError("heat.residual_grid must be [nx, nt] with at least 8 nodes each");
        }
        if (spectral.grid.size() != 2) throw ConfigError("heat.grid must be [nx, nt]");
        if (gpr.test_grid.size() != 2 || gpr.test_grid[0] < 2 || gpr.test_grid[1] < 2) {
            throw ConfigError("heat.gpr.test_grid must be [nx, nt] with at least 2 nodes each");
        }
        if (gpr.n_boundary < 0) throw ConfigError("heat.gpr.n_boundary must be >= 0");
    }
};

inline HeatExperimentConfig heat_config_from_json(const Json& j) {
    ConfigReader r(j, "heat");
    detail::check_experiment_name(r, "heat");
    HeatExperimentConfig c;
    c.kernel = detail::kernel_or(r, c.kernel);
    c.alpha = r.positive_or("alpha", c.alpha);
    c.a = detail::positive_doubles(r, "a", c.a);
    if (r.has("residual_grid")) c.residual_grid = r.get<std::vector<int>>("residual_grid");
    if (r.has("gpr")) {
        ConfigReader g = r.child("gpr");
        c.gpr.enabled = g.get_or("enabled", c.gpr.enabled);
        c.gpr.n_bulk = detail::positive_longs(g, "n_bulk", c.gpr.n_bulk);
        c.gpr.n_boundary = g.get_or("n_boundary", c.gpr.n_boundary);
        c.gpr.sigma2_bulk = g.positive_or("sigma2_bulk", c.gpr.sigma2_bulk);
        c.gpr.sigma2_boundary = g.positive_or("sigma2_boundary", c.gpr.sigma2_boundary);
        c.gpr.seed = g.get_or("seed", c.gpr.seed);
        if (g.has("sampling")) {
            c.gpr.sampling = detail::config_guard(
                "heat.gpr.sampling", [&] { return sampling_scheme_from_string(g.get<std::string>("sampling")); });
        }
        if (g.has("test_grid")) c.gpr.test_grid = g.get<std::vector<int>>("test_grid");
        g.finish();
    }
    c.spectral = detail::spectral_settings(r, c.spectral);
    r.finish();
    c.validate();
    return c;
}

inline Json to_json(const HeatExperimentConfig& c) {
    Json j{{"experiment", "heat"}, {"kernel", to_json(c.kernel)}, {"alpha", c.alpha}, {"a", c.a},
           {"residual_grid", c.residual_grid}};
    j["gpr"] = Json{{"enabled", c.gpr.enabled},
                    {"n_bulk", c.gpr.n_bulk},
                    {"n_boundary", c.gpr.n_boundary},
                    {"sigma2_bulk", c.gpr.sigma2_bulk},
                    {"sigma2_boundary", c.gpr.sigma2_boundary},
                    {"seed", c.gpr.seed},
                    {"sampling", to_string(c.gpr.sampling)},
                    {"test_grid", c.gpr.test_grid}};
    const Json settings = detail::to_json(c.spectral);
    for (auto it = settings.begin(); it != settings.end(); ++it) j[it.key()] = it.value();
    return j;
}

struct HeatResidual {
    double max_abs_residual = 0.0;
    double max_abs_source = 0.0;
    double max_abs_wall = 0.0;       // |u| on x = +-1
    double max_initial_error = 0.0;  // |u(x, 0) - exp(-x^2/2a) sin(pi x)|
};

/// Finite-difference check that the closed-form u solves u_t - u_xx = phi.
inline HeatResidual heat_residual(const HeatProblem& hp, const std::vector<int>& nodes) {
    const auto grid = make_grid(HeatProblem::geometry(), nodes);
    const Vector u = grid.evaluate([&](PointRef z) { return hp.exact(z[0], z[1]); });
    const Vector phi = grid.evaluate([&](PointRef z) { return hp.source(z[0], z[1]); });
    const Vector r = apply_to_function(HeatProblem::op(), u, grid) - phi;
    HeatResidual out;
    out.max_abs_residual = r.cwiseAbs().maxCoeff();
    out.max_abs_source = phi.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double x = grid.bulk(0, i);
        const double t = grid.bulk(1, i);
        if (x == -1.0 || x == 1.0) out.max_abs_wall = std::max(out.max_abs_wall, std::abs(u[i]));
        if (t == 0.0) {
            const double init = std::exp(-x * x / (2.0 * hp.a)) * sin_pi(x);
            out.max_initial_error = std::max(out.max_initial_error, std::abs(u[i] - init));
        }
    }
    return out;
}

inline Json run_heat(const HeatExperimentConfig& c, ArtifactWriter& out) {
    const KernelSpec kernel = c.scaled_kernel();
    Json summary{{"kernel_scaled", to_json(kernel)}};

    std::vector<CsvRow> res_rows;
    Json residuals = Json::array();
    for (double a : c.a) {
        const HeatResidual hr = heat_residual(HeatProblem{a}, c.residual_grid);
        res_rows.push_back({format_number(a), format_number(hr.max_abs_residual), format_number(hr.max_abs_source),
                            format_number(hr.max_abs_wall), format_number(hr.max_initial_error)});
        residuals.push_back(Json{{"a", a}, {"max_abs_residual", hr.max_abs_residual}});
    }
    out.write_csv("heat_residual.csv", {"a", "max_abs_residual", "max_abs_source", "max_abs_wall", "max_initial_error"},
                  res_rows, Json{{"grid", c.residual_grid}});
    summary["residual"] = residuals;

    if (c.gpr.enabled) {
        const auto test = make_grid(HeatProblem::geometry(), c.gpr.test_grid);
        std::vector<CsvRow> rows;
        for (double a : c.a) {
            const HeatProblem hp{a};
            const Vector exact = test.evaluate([&](PointRef z) { return hp.exact(z[0], z[1]); });
            for (long n : c.gpr.n_bulk) {
                const auto colloc = sample_collocation(HeatProblem::geometry(), n, c.gpr.n_boundary, c.gpr.seed,
                                                       c.gpr.sigma2_bulk, c.gpr.sigma2_boundary, c.gpr.sampling);
                const Vector pred = gpr_predict(hp.problem(kernel), colloc, test.bulk);
                const Vector err = pred - exact;
                rows.push_back({format_number(a), format_number(n), format_number(c.gpr.n_boundary),
                                format_number(err.cwiseAbs().maxCoeff()),
                                format_number(std::sqrt(test.inner(err, err) / test.inner(exact, exact)))});
            }
        }
        out.write_csv("heat_gpr.csv", {"a", "n_bulk", "n_boundary", "max_abs_error", "rel_l2_error"}, rows);
    }

    const auto grid = make_grid(HeatProblem::geometry(), c.spectral.grid);
    SpectralBases bases = make_spectral_bases(HeatProblem::op(), kernel, grid, c.spectral);
    write_eigenvalues(out, "heat_eigenvalues.csv", bases);
    Json per_a = Json::object();
    for (double a : c.a) {
        const HeatProblem hp{a};
        const Vector u = grid.evaluate([&](PointRef z) { return hp.exact(z[0], z[1]); });
        per_a[detail::short_number(a)] =
            spectral_targets(out, "heat_a" + detail::short_number(a) + "_", bases, hp.problem(kernel), grid, u, c.spectral);
    }
    summary["spectral"] = per_a;
    out.write_json("summary.json", summary);
    return summary;
}

// ---------------------------------------------------------------- spectral

struct SpectralExperimentConfig {
    std::string problem = "heat";
    double a = 1.0 / 16.0;  // heat
    double g0 = 2.5;        // toy
    double x_max = 16.0;    // toy
    KernelSpec kernel = KernelSpec::with_defaults(KernelFamily::ErfArcsine, 1.0);
    double alpha = 1.0;
    bool custom_operator = false;
    LinearDiffOp op;
    SpectralSettings spectral{{64, 32}, 100.0, {1.0, 10.0, 100.0, 1000.0, 10000.0}, OperatorRealization::Auto, 0.99};

    int dim() const { return problem == "heat" ? 2 : 1; }

    void validate() const {
        kernel.validate();
        if (problem != "heat" && problem != "toy") throw ConfigError("spectral.problem must be 'heat' or 'toy'");
        if (static_cast<int>(spectral.grid.size()) != dim()) {
            throw ConfigError("spectral.grid needs one node count per axis (" + std::to_string(dim()) + ")");
        }
        if (custom_operator && op.dim() != dim()) throw ConfigError("spectral.operator dimension mismatch");
    }
};

inline SpectralExperimentConfig spectral_config_from_json(const Json& j) {
    ConfigReader r(j, "spectral");
    detail::check_experiment_name(r, "spectral");
    SpectralExperimentConfig c;
    if (r.has("problem")) {
        ConfigReader p = r.child("problem");
        c.problem = p.get<std::string>("name");
        if (c.problem == "heat") {
            c.a = p.positive_or("a", c.a);
        } else if (c.problem == "toy") {
            c.g0 = p.get_or("g0", c.g0);
            c.x_max = p.positive_or("x_max", c.x_max);
        } else {
            throw ConfigError("spectral.problem.name must be 'heat' or 'toy'");
        }
        p.finish();
    }
    if (c.problem == "toy") {
        c.kernel = KernelSpec::with_defaults(KernelFamily::CosineFeature, 1.0);
        c.spectral.grid = {129};
    }
    c.kernel = detail::kernel_or(r, c.kernel);
    c.alpha = r.positive_or("alpha", c.alpha);
    if (r.has("operator")) {
        c.op = operator_from_json(r.at("operator"), "spectral.operator");
        c.custom_operator = true;
    }
    c.spectral = detail::spectral_settings(r, c.spectral);
    r.finish();
    c.validate();
    return c;
}

inline Json to_json(const SpectralExperimentConfig& c) {
    Json problem{{"name", c.problem}};
    if (c.problem == "heat") problem["a"] = c.a;
    else {
        problem["g0"] = c.g0;
        problem["x_max"] = c.x_max;
    }
    Json j{{"experiment", "spectral"}, {"problem", problem}, {"kernel", to_json(c.kernel)}, {"alpha", c.alpha}};
    if (c.custom_operator) j["operator"] = to_json(c.op);
    const Json settings = detail::to_json(c.spectral);
    for (auto it = settings.begin(); it != settings.end(); ++it) j[it.key()] = it.value();
    return j;
}

inline Json run_spectral(const SpectralExperimentConfig& c, ArtifactWriter& out) {
    const KernelSpec kernel = scale_initialization(c.kernel, c.alpha);
    ProblemData problem;
    BoxGeometry geometry;
    std::function<double(PointRef)> exact;
    if (c.problem == "heat") {
        const HeatProblem hp{c.a};
        problem = hp.problem(kernel);
        geometry = HeatProblem::geometry();
        exact = [hp](PointRef z) { return hp.exact(z[0], z[1]); };
    } else {
        problem = toy_problem(kernel, c.g0);
        geometry = BoxGeometry::half_line(c.x_max);
        exact = [g0 = c.g0](PointRef) { return g0; };
    }
    if (c.custom_operator) problem.op = c.op;
    const auto grid = make_grid(geometry, c.spectral.grid);
    SpectralBases bases = make_spectral_bases(problem.op, kernel, grid, c.spectral);
    write_eigenvalues(out, "eigenvalues.csv", bases);
    Json summary = spectral_targets(out, "", bases, problem, grid, grid.evaluate(exact), c.spectral);
    Json trace{{"eigenvalue_sum_LKhatL", bases.op.eigvals.sum()}, {"eigenvalue_sum_K", bases.kernel.eigvals.sum()}};
    summary["trace"] = trace;
    out.write_json("qn.json", Json{{"Q_n", summary["Q_n"]}, {"eta_boundary", c.spectral.eta_boundary}});
    out.write_json("summary.json", summary);
    return summary;
}

// ---------------------------------------------------------------- kernel check

struct KernelCheckConfig {
    std::vector<KernelFamily> families{KernelFamily::CosineFeature, KernelFamily::SineFeature,
                                       KernelFamily::ErfArcsine};
    double l = 1.0;
    double bias_var = 1.0;
    int dim = 1;
    int pairs = 10;
    double range_lo = -2.0;
    double range_hi = 2.0;
    long width = 1000;
    long n_nets = 1000;
    std::uint64_t seed = 2024;

    void validate() const {
        if (families.empty()) throw ConfigError("kernel-check.families must not be empty");
        for (auto f : families) {
            if (f == KernelFamily::SquaredExponential) {
                throw ConfigError("kernel-check: family SquaredExponential has no finite feature map");
            }
        }
        if (!(l > 0.0)) throw ConfigError("kernel-check.l must be positive");
        if (!(bias_var >= 0.0)) throw ConfigError("kernel-check.bias_var must be >= 0");
        if (dim < 1) throw ConfigError("kernel-check.dim must be >= 1");
        if (pairs < 1) throw ConfigError("kernel-check.pairs must be >= 1");
        if (!(range_hi > range_lo)) throw ConfigError("kernel-check.range must satisfy lo < hi");
        if (width < 1 || n_nets < 2 || static_cast<double>(width) * static_cast<double>(n_nets) < 1000.0) {
            throw ConfigError("kernel-check: need width >= 1, n_nets >= 2 and width * n_nets >= 1000");
        }
    }
};

inline KernelCheckConfig kernel_check_config_from_json(const Json& j) {
    ConfigReader r(j, "kernel-check");
    detail::check_experiment_name(r, "kernel-check");
    KernelCheckConfig c;
    if (r.has("families")) {
        c.families.clear();
        for (const auto& name : r.get<std::vector<std::string>>("families")) {
            c.families.push_back(
                detail::config_guard("kernel-check.families", [&] { return kernel_family_from_string(name); }));
        }
    }
    c.l = r.positive_or("l", c.l);
    c.bias_var = r.get_or("bias_var", c.bias_var);
    c.dim = r.get_or("dim", c.dim);
    c.pairs = r.get_or("pairs", c.pairs);
    if (r.has("range")) {
        const auto range = r.get<std::vector<double>>("range");
        if (range.size() != 2) throw ConfigError("kernel-check.range must be [lo, hi]");
        c.range_lo = range[0];
        c.range_hi = range[1];
    }
    c.width = r.get_or("width", c.width);
    c.n_nets = r.get_or("n_nets", c.n_nets);
    c.seed = r.get_or("seed", c.seed);
    r.finish();
    c.validate();
    return c;
}

inline Json to_json(const KernelCheckConfig& c) {
    Json fams = Json::array();
    for (auto f : c.families) fams.push_back(to_string(f));
    return Json{{"experiment", "kernel-check"}, {"families", fams}, {"l", c.l},         {"bias_var", c.bias_var},
                {"dim", c.dim},                 {"pairs", c.pairs},  {"range", {c.range_lo, c.range_hi}},
                {"width", c.width},             {"n_nets", c.n_nets}, {"seed", c.seed}};
}

struct KernelCheckRow {
    KernelFamily family;
    Point x;
    Point y;
    double closed = 0.0;
    MonteCarloEstimate mc;
    double z = 0.0;
};

/// Closed form against Monte-Carlo for random point pairs. Pair i of every
/// family uses the network seed `seed + 1 + i`.
inline std::vector<KernelCheckRow> kernel_check(const KernelCheckConfig& c) {
    c.validate();
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(c.range_lo, c.range_hi);
    std::vector<std::pair<Point, Point>> pts;
    for (int i = 0; i < c.pairs; ++i) {
        Point x(c.dim), y(c.dim);
        for (int k = 0; k < c.dim; ++k) x[k] = unit(rng);
        for (int k = 0; k < c.dim; ++k) y[k] = unit(rng);
        pts.emplace_back(x, y);
    }
    std::vector<KernelCheckRow> rows;
    for (auto fam : c.families) {
        KernelSpec spec = KernelSpec::with_defaults(fam, c.l);
        spec.bias_var = c.bias_var;
        std::vector<KernelCheckRow> block(pts.size());
        parallel_for(0, static_cast<long>(pts.size()), [&](long i) {
            auto& row = block[i];
            row.family = fam;
            row.x = pts[i].first;
            row.y = pts[i].second;
            row.closed = eval_kernel(spec, row.x, row.y);
            row.mc = monte_carlo_kernel(spec, row.x, row.y, c.width, c.n_nets, c.seed + 1 + static_cast<std::uint64_t>(i));
            row.z = row.mc.std_error > 0.0 ? (row.mc.estimate - row.closed) / row.mc.std_error : 0.0;
        });
        rows.insert(rows.end(), block.begin(), block.end());
    }
    return rows;
}

inline Json run_kernel_check(const KernelCheckConfig& c, ArtifactWriter& out) {
    const auto rows = kernel_check(c);
    std::vector<CsvRow> csv;
    double max_z = 0.0;
    for (const auto& r : rows) {
        CsvRow row{to_string(r.family)};
        for (Eigen::Index k = 0; k < r.x.size(); ++k) row.push_back(format_number(r.x[k]));
        for (Eigen::Index k = 0; k < r.y.size(); ++k) row.push_back(format_number(r.y[k]));
        row.push_back(format_number(r.closed));
        row.push_back(format_number(r.mc.estimate));
        row.push_back(format_number(r.mc.std_error));
        row.push_back(format_number(r.z));
        row.push_back(format_number(r.mc.samples));
        csv.push_back(row);
        max_z = std::max(max_z, std::abs(r.z));
    }
    CsvRow header{"family"};
    for (int k = 0; k < c.dim; ++k) header.push_back("x" + std::to_string(k));
    for (int k = 0; k < c.dim; ++k) header.push_back("y" + std::to_string(k));
    for (const char* h : {"closed_form", "mc_estimate", "mc_std_error", "z", "samples"}) header.push_back(h);
    const Json provenance{{"seed", c.seed}, {"width", c.width}, {"n_nets", c.n_nets},
                          {"samples_per_pair", c.width * c.n_nets}};
    out.write_csv("kernel_check.csv", header, csv, provenance);
    Json summary{{"max_abs_z", max_z}, {"all_within_3_sigma", max_z <= 3.0}, {"pairs", c.pairs}};
    for (auto it = provenance.begin(); it != provenance.end(); ++it) summary[it.key()] = it.value();
    out.write_json("summary.json", summary);
    return summary;
}

// ---------------------------------------------------------------- dispatch

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"toy", "heat", "spectral", "kernel-check"};
    return names;
}

/// Parses and validates `config` for experiment `name`, then runs it into `out_dir`.
inline Json run_experiment(const std::string& name, const Json& config, const std::filesystem::path& out_dir) {
    if (name == "toy") {
        const auto c = toy_config_from_json(config);
        ArtifactWriter out(out_dir, name, to_json(c));
        return run_toy(c, out);
    }
    if (name == "heat") {
        const auto c = heat_config_from_json(config);
        ArtifactWriter out(out_dir, name, to_json(c));
        return run_heat(c, out);
    }
    if (name == "spectral") {
        const auto c = spectral_config_from_json(config);
        ArtifactWriter out(out_dir, name, to_json(c));
        return run_spectral(c, out);
    }
    if (name == "kernel-check") {
        const auto c = kernel_check_config_from_json(config);
        ArtifactWriter out(out_dir, name, to_json(c));
        return run_kernel_check(c, out);
    }
    throw ConfigError("unknown experiment '" + name + "'");
}

}  // namespace pinn_spectral
