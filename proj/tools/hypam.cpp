// hypam: experiment driver. One subcommand per run; every run writes
// <out>/<subcommand>.csv and <out>/<subcommand>.json (the resolved config plus a
// summary). Re-running with --config <out>/<subcommand>.json reproduces both files.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "hypam/fkmc.hpp"
#include "hypam/gaussfield.hpp"
#include "hypam/heatkernel.hpp"
#include "hypam/hypbm.hpp"
#include "hypam/parallel.hpp"
#include "hypam/stats.hpp"
#include "hypam/varopt.hpp"

namespace {

using hypam::cli::Config;
using hypam::cli::fmt;
using json = nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitConstraint = 2;
constexpr int kExitBudget = 3;
constexpr int kExitRuntime = 4;

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

    Csv& row() {
        rows_.emplace_back();
        return *this;
    }
    Csv& operator<<(double x) { return cell(fmt(x)); }
    Csv& operator<<(long long x) { return cell(std::to_string(x)); }
    Csv& operator<<(std::size_t x) { return cell(std::to_string(x)); }
    Csv& operator<<(int x) { return cell(std::to_string(x)); }
    Csv& operator<<(bool x) { return cell(x ? "1" : "0"); }
    Csv& operator<<(const std::string& s) { return cell(s); }

    std::string str() const {
        std::string out;
        join(out, header_);
        for (const auto& r : rows_) join(out, r);
        return out;
    }

private:
    Csv& cell(std::string s) {
        rows_.back().push_back(std::move(s));
        return *this;
    }
    static void join(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct Result {
    explicit Result(Csv c) : csv(std::move(c)) {}
    Csv csv;
    json summary = json::object();
    std::string note;
    int exit_code = 0;
};

hypam::SpecPtr make_spec(const Config& c) {
    return hypam::CovarianceSpec::make(c.real("sigma2"), c.real("R0"), c.text("shape"),
                                       static_cast<int>(c.integer("d")));
}

hypam::ModelParams model(const Config& c) {
    return hypam::ModelParams(static_cast<int>(c.integer("d")), c.real("sigma2"));
}

double mu_of(const Config& c) {
    double mu = c.real("mu");
    return mu > 0.0 ? mu : model(c).mu0();
}

hypam::RouteInputs route_inputs(const Config& c) {
    hypam::RouteInputs in;
    in.eta = c.real("eta");
    in.lambda = c.real("lambda");
    in.delta = c.real("delta");
    in.K0 = c.real("K0");
    in.C_R0_hat = c.real("C_R0_hat");
    in.alpha = c.real("alpha");
    in.mu = mu_of(c);
    return in;
}

std::vector<double> times(const Config& c) {
    auto ts = c.list("t_list");
    if (ts.empty()) ts.push_back(c.real("t"));
    return ts;
}

hypam::HPoint along_axis(int d, double r) {
    hypam::Vec e1 = hypam::Vec::Zero(d);
    e1[0] = 1.0;
    return hypam::HPoint::polar(r, e1);
}

std::size_t count(const Config& c, const std::string& key) {
    long long n = c.integer(key);
    hypam::require(n > 0, key + " must be positive");
    return static_cast<std::size_t>(n);
}

json fit_json(const hypam::LinearFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"n", f.n}};
}

const char* kDeskNote =
    "finite-t Monte Carlo at desk scale; the long-time limit of t^{-5/3} log u is not reached here";

// ---------------------------------------------------------------------------

Result run_optimize(const Config& c) {
    auto s = hypam::optimize_f(model(c));
    Result r(Csv({"eps_star", "K_star", "L_star", "eps_numeric", "K_numeric", "L_numeric", "grid_gap",
                  "gradient_norm"}));
    r.csv.row() << s.eps_star << s.K_star << s.L_star << s.eps_numeric << s.K_numeric << s.L_numeric
                << s.grid_gap << s.gradient_norm;
    r.summary = {{"eps_star", s.eps_star},
                 {"K_star", s.K_star},
                 {"L_star", s.L_star},
                 {"checks", {{"grid_gap", s.grid_gap}, {"gradient_norm", s.gradient_norm}}}};
    std::cout << r.summary.dump() << "\n";
    return r;
}

Result run_field_max_scan(const Config& c) {
    hypam::MaxScanOptions opt;
    opt.R_list = c.list("R_list");
    opt.spacing = c.real("spacing");
    opt.n_reps = static_cast<int>(count(c, "n_reps"));
    opt.eps = c.real("scan_eps");
    opt.site_cap = count(c, "site_cap");
    opt.stop_on_budget = false;
    auto rows = hypam::max_scan(make_spec(c), opt, c.uinteger("seed"));

    Result r(Csv({"R", "n_sites", "mean_max", "se_max", "max_max", "threshold", "exceed_fraction",
                  "budget_exceeded"}));
    json borell = json::array();
    bool over = false;
    for (const auto& row : rows) {
        r.csv.row() << row.R << row.n_sites << row.mean_max << row.se_max << row.max_max << row.threshold
                    << row.exceed_fraction << row.budget_exceeded;
        over = over || row.budget_exceeded;
        if (row.budget_exceeded || row.maxima.empty()) continue;
        bool holds = true;
        for (const auto& b : hypam::borell_check(row.maxima, c.real("sigma2"))) holds = holds && b.holds;
        borell.push_back({{"R", row.R}, {"holds", holds}});
    }
    r.summary = {{"borell", borell}, {"budget_exceeded", over}};
    if (over) r.exit_code = kExitBudget;
    return r;
}

Result run_clusters(const Config& c) {
    auto spec = make_spec(c);
    int d = static_cast<int>(c.integer("d"));
    std::uint64_t seed = c.uinteger("seed");
    double t = c.real("t");
    auto region = hypam::Region::ball(hypam::HPoint::origin(d), c.real("region_radius"));
    auto sites = hypam::lattice_sites(region, c.real("spacing"), seed, count(c, "site_cap"));
    auto field = hypam::sample_field(spec, sites, seed);
    auto islands = hypam::detect_islands(field, c.real("delta"), t, c.real("link_h"));
    auto clusters = hypam::build_clusters(field.sites, islands, c.real("eta"), t);

    std::vector<int> island_of(field.size(), -1), cluster_of(field.size(), -1);
    for (std::size_t i = 0; i < islands.islands.size(); ++i)
        for (int s : islands.islands[i]) island_of[s] = static_cast<int>(i);
    for (std::size_t k = 0; k < clusters.clusters.size(); ++k)
        for (int s : clusters.clusters[k].sites) cluster_of[s] = static_cast<int>(k);

    std::vector<std::string> header{"site_id"};
    for (int i = 0; i <= d; ++i) header.push_back("x" + std::to_string(i));
    for (const char* h : {"value", "island", "cluster"}) header.push_back(h);
    Result r{Csv(header)};
    for (std::size_t i = 0; i < field.size(); ++i) {
        r.csv.row() << i;
        hypam::Vec x = field.sites[i].coords();
        for (int k = 0; k <= d; ++k) r.csv << x[k];
        r.csv << field.values[static_cast<Eigen::Index>(i)] << island_of[i] << cluster_of[i];
    }

    json list = json::array();
    for (std::size_t k = 0; k < clusters.clusters.size(); ++k) {
        const auto& cl = clusters.clusters[k];
        list.push_back({{"id", k},
                        {"center", cl.center},
                        {"diameter", cl.diameter},
                        {"n_islands", cl.islands.size()},
                        {"n_sites", cl.sites.size()}});
    }
    auto cc = hypam::cluster_constants(c.real("delta"), d, c.real("K0"), c.real("C_R0_hat"));
    r.summary = {{"n_sites", field.size()},
                 {"threshold", islands.threshold},
                 {"link", clusters.link},
                 {"n_islands", islands.islands.size()},
                 {"clusters", list},
                 {"L_delta", cc.L_delta},
                 {"eta_delta", cc.eta_delta}};
    return r;
}

Result run_radial_check(const Config& c) {
    int d = static_cast<int>(c.integer("d"));
    double t = c.real("t"), dt = c.real("dt");
    std::size_t n = count(c, "n_paths");
    std::uint64_t seed = c.uinteger("seed");
    std::vector<double> R(n);
    hypam::parallel_for(n, [&](std::size_t i) { R[i] = hypam::radial_final(d, t, dt, 0.0, seed, i); });

    Result r(Csv({"path_id", "R_t"}));
    std::vector<double> ratio(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.csv.row() << i << R[i];
        ratio[i] = R[i] / ((d - 1) * t);
    }
    auto m = hypam::moments(ratio);
    r.summary = {{"mean_ratio", m.mean}, {"se_ratio", m.se()}, {"n", m.n}};
    return r;
}

Result run_exit_check(const Config& c) {
    double t = c.real("t");
    auto rows = hypam::exit_stats(static_cast<int>(c.integer("d")), c.list("R_list"), t, count(c, "n_paths"),
                                  c.uinteger("seed"), c.real("dt"));
    Result r(Csv({"R", "hits", "n", "p_hat", "ci_lo", "ci_hi"}));
    std::vector<double> x, y;
    for (const auto& row : rows) {
        r.csv.row() << row.R << row.hits << row.n << row.p_hat << row.ci_lo << row.ci_hi;
        if (row.hits > 0) {
            x.push_back(row.R * row.R / t);
            y.push_back(std::log(row.p_hat));
        }
    }
    r.summary = {{"fit_log_p_vs_R2_over_t", x.size() >= 2 ? fit_json(hypam::linear_fit(x, y)) : json(nullptr)}};
    return r;
}

hypam::KernelCalibration calibration(const Config& c, int d) {
    auto grid = hypam::CalibrationGrid::make(c.real("t0"), c.real("t1"), static_cast<int>(c.integer("n_t")),
                                             c.real("rho0"), c.real("rho1"), static_cast<int>(c.integer("n_rho")));
    hypam::CalibrationOptions opt;
    opt.ratio_cap = c.real("ratio_cap");
    opt.n_paths = count(c, "n_paths");
    opt.dt = c.real("dt");
    opt.seed = c.uinteger("seed");
    return hypam::calibrate(d, grid, opt);
}

Result run_bridge_ldp(const Config& c) {
    int d = static_cast<int>(c.integer("d"));
    std::unique_ptr<hypam::KernelCalibration> calib;
    if (d != 3) calib = std::make_unique<hypam::KernelCalibration>(calibration(c, d));
    auto rep = hypam::bridge_ldp_decay(hypam::HPoint::origin(d), along_axis(d, c.real("distance")),
                                       c.real("delta"), c.list("s_list"), count(c, "n_paths"),
                                       c.uinteger("seed"), c.real("dt_fraction"), calib.get());
    Result r(Csv({"s", "hits", "n", "p_hat", "ci_lo", "ci_hi"}));
    for (const auto& row : rep.rows) r.csv.row() << row.s << row.hits << row.n << row.p_hat << row.ci_lo << row.ci_hi;
    r.summary = {{"fit", fit_json(rep.fit)}, {"kappa", rep.kappa}, {"calibrated_kernel", calib != nullptr}};
    return r;
}

Result run_energy_bound(const Config& c) {
    hypam::EnergyOptions opt;
    opt.d = static_cast<int>(c.integer("d"));
    auto e = hypam::energy_excess_check(c.real("K_star"), c.real("delta"), c.real("eta"), c.real("zeta"),
                                        count(c, "n_trials"), c.uinteger("seed"), opt);
    Result r(Csv({"min_energy", "discrete_energy", "bound", "unconstrained_min", "excess", "endpoint_slack",
                  "deviation", "best_v", "full_constraint_ok", "holds"}));
    r.csv.row() << e.min_energy << e.discrete_energy << e.bound << e.unconstrained_min << e.excess
                << e.endpoint_slack << e.deviation << e.best_v << e.full_constraint_ok << e.holds;
    r.summary = {{"min_energy", e.min_energy}, {"bound", e.bound}, {"holds", e.holds},
                 {"full_constraint_ok", e.full_constraint_ok}};
    return r;
}

Result run_hk_calibrate(const Config& c) {
    auto k = calibration(c, static_cast<int>(c.integer("d")));
    Result r(Csv({"d", "C1", "C2", "ratio", "points_used", "exact_reference"}));
    r.csv.row() << k.d << k.C1 << k.C2 << k.C2 / k.C1 << k.points_used << k.exact_reference;
    r.summary = {{"C1", k.C1}, {"C2", k.C2}, {"grid", k.grid.describe()}, {"exact_reference", k.exact_reference}};
    return r;
}

hypam::LatticeOptions lattice_options(const Config& c) {
    hypam::LatticeOptions opt;
    opt.resolution = c.real("resolution");
    opt.max_sites = count(c, "max_sites");
    return opt;
}

// The fk potentials: the lazily grown field, a constant or a planted bump.
std::unique_ptr<hypam::Potential> make_potential(const Config& c, const hypam::HPoint& peak) {
    const auto& kind = c.text("potential");
    if (kind == "constant") return std::make_unique<hypam::ConstantPotential>(c.real("c"));
    if (kind == "peak") return std::make_unique<hypam::PlantedPeak>(make_spec(c), peak, c.real("h"));
    if (kind == "field") return std::make_unique<hypam::LatticePotential>(make_spec(c), c.uinteger("seed"), lattice_options(c));
    hypam::fail(hypam::ErrorKind::InvalidArgument, "potential must be field, constant or peak");
}

json fk_summary(const Config& c, const hypam::FKEstimate& e, const std::string& mode) {
    return {{"mode", mode},
            {"t", e.t},
            {"dt", e.dt},
            {"n_paths", e.n_paths},
            {"mean", e.mean},
            {"se", e.se},
            {"log_mean", e.log_mean},
            {"n_accepted", e.n_accepted},
            {"params",
             {{"d", c.integer("d")},
              {"sigma2", c.real("sigma2")},
              {"R0", c.real("R0")},
              {"shape", c.text("shape")},
              {"potential", c.text("potential")}}}};
}

Result run_fk(const Config& c) {
    int d = static_cast<int>(c.integer("d"));
    double t = c.real("t"), dt = c.real("dt");
    std::uint64_t seed = c.uinteger("seed");
    const auto& mode = c.text("mode");
    Result r(Csv({"path_id", "log_weight", "accepted", "route_word"}));
    r.note = kDeskNote;

    if (mode == "annealed") {
        auto e = hypam::fk_annealed(make_spec(c), t, dt, count(c, "n_fields"), count(c, "paths_per_field"), seed,
                                    lattice_options(c));
        for (std::size_t i = 0; i < e.log_weights.size(); ++i) r.csv.row() << i << e.log_weights[i] << true << "";
        r.summary = fk_summary(c, e, mode);
        r.summary["n_fields"] = e.n_fields;
        return r;
    }
    hypam::require(mode == "quenched", "mode must be quenched or annealed");

    auto V = make_potential(c, along_axis(d, c.real("K") * std::pow(t, 4.0 / 3.0)));
    std::size_t n = count(c, "n_paths");
    auto e = hypam::fk_estimate(*V, d, t, dt, n, seed);

    std::vector<std::string> words(n);
    json routes = nullptr;
    if (c.flag("routes")) {
        auto* lattice = dynamic_cast<hypam::LatticePotential*>(V.get());
        hypam::require(lattice != nullptr, "routes need potential = field");
        hypam::require_lambda_eta(route_inputs(c), model(c));
        const auto& field = lattice->field();
        auto islands = hypam::detect_islands(field, c.real("delta"), t, c.real("link_h"));
        auto clusters = hypam::build_clusters(field.sites, islands, c.real("eta"), t);
        hypam::RouteOptions ro;
        ro.site_radius = lattice->resolution();
        hypam::parallel_for(n, [&](std::size_t i) {
            auto traj = hypam::simulate_bm(d, t, dt, seed, i);
            words[i] = hypam::word_string(hypam::route_extract(traj, field, clusters, c.real("lambda"), t, ro).word);
        });
        routes = {{"n_clusters", clusters.clusters.size()}, {"n_sites", field.size()}};
    }
    for (std::size_t i = 0; i < n; ++i) r.csv.row() << i << e.log_weights[i] << true << words[i];
    r.summary = fk_summary(c, e, mode);
    if (!routes.is_null()) r.summary["routes"] = routes;
    return r;
}

Result run_fk_localized(const Config& c) {
    int d = static_cast<int>(c.integer("d"));
    double t = c.real("t"), dt = c.real("dt");
    std::uint64_t seed = c.uinteger("seed");
    std::size_t n = count(c, "n_paths");

    hypam::LocalizedEvents ev;
    ev.eps = c.real("eps");
    ev.K = c.real("K");
    ev.delta_tube = c.real("tube");
    ev.peak_radius = c.real("peak_radius");
    ev.peak_center = along_axis(d, ev.K * std::pow(t, 4.0 / 3.0));

    auto V = make_potential(c, ev.peak_center);
    if (auto* lattice = dynamic_cast<hypam::LatticePotential*>(V.get()); lattice && c.real("h") > 0.0)
        lattice->plant_peak(ev.peak_center, c.real("h"));
    // same paths, so the restricted run sees the realization the full run grew
    auto full = hypam::fk_estimate(*V, d, t, dt, n, seed);
    auto low = hypam::fk_localized_lower(*V, d, t, dt, ev, n, seed);

    Result r(Csv({"path_id", "log_weight", "accepted", "route_word"}));
    r.note = kDeskNote;
    for (std::size_t i = 0; i < n; ++i) r.csv.row() << i << low.log_weights[i] << (low.accepted[i] != 0) << "";
    r.summary = fk_summary(c, low, "quenched");
    r.summary["unrestricted"] = {{"mean", full.mean}, {"se", full.se}};
    r.summary["within_3se"] = low.mean <= full.mean + 3.0 * std::hypot(full.se, low.se);
    return r;
}

std::vector<int> parse_word(const std::string& w) {
    std::vector<int> out;
    for (char ch : w) {
        hypam::require(ch >= 'a' && ch <= 'z', "word letters must be a..z");
        out.push_back(ch - 'a');
    }
    return out;
}

Result run_route_budget(const Config& c) {
    auto p = model(c);
    auto in = route_inputs(c);
    hypam::require_lambda_eta(in, p);
    auto gaps = c.list("gaps");
    auto word = parse_word(c.text("word"));
    hypam::require(!gaps.empty() && gaps.size() == word.size(), "route-budget needs one gap per word letter");

    Result r(Csv({"t", "m", "m_bar", "hop_offset", "error_term", "reduced_sum", "main_term", "A", "log_I", "log_J",
                  "log_bound", "holds"}));
    json rows = json::array();
    for (double t : times(c)) {
        hypam::RouteGeometry g;
        g.word = word;
        g.K_star = c.real("K_star");
        for (double k : gaps) g.D.push_back(k * std::pow(t, 4.0 / 3.0));
        auto b = hypam::route_budget(g, t, in, p);
        bool holds = c.real("delta") * std::pow(t, 5.0 / 3.0) + b.log_I <= b.log_bound;
        r.csv.row() << t << b.m << b.m_bar << b.hop_offset << b.error_term << b.reduced_sum << b.main_term << b.A
                    << b.log_I << b.log_J << b.log_bound << holds;
        rows.push_back({{"t", t}, {"log_J", b.log_J}, {"holds", holds}});
    }
    r.summary = {{"rows", rows}, {"reduced_word", hypam::word_string(hypam::reduce_word(word))}};
    return r;
}

Result run_long_route_tail(const Config& c) {
    auto p = model(c);
    double eta = c.real("eta"), K0 = c.real("K0");
    Result r(Csv({"t", "N", "log_F", "exponent", "log_bound"}));
    for (double t : times(c))
        for (double Nd : c.list("N_list")) {
            int N = static_cast<int>(Nd);
            hypam::require(N == Nd && N > 0, "N_list entries must be positive integers");
            auto tail = hypam::long_route_tail(eta, N, t, p, K0);
            r.csv.row() << t << N << tail.log_F << tail.exponent << tail.log_bound;
        }
    double critical = std::sqrt(64.0 * p.mu0() * std::sqrt(K0));
    r.summary = {{"critical_eta_N", critical}, {"critical_N", critical / eta}};
    return r;
}

using Runner = std::function<Result(const Config&)>;

const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> m = {
        {"optimize", run_optimize},
        {"field-max-scan", run_field_max_scan},
        {"clusters", run_clusters},
        {"radial-check", run_radial_check},
        {"exit-check", run_exit_check},
        {"bridge-ldp", run_bridge_ldp},
        {"energy-bound", run_energy_bound},
        {"hk-calibrate", run_hk_calibrate},
        {"fk", run_fk},
        {"fk-localized", run_fk_localized},
        {"route-budget", run_route_budget},
        {"long-route-tail", run_long_route_tail},
    };
    return m;
}

// Checks shared by every subcommand, done before any work starts.
void validate(const Config& c) {
    hypam::require(c.integer("d") >= 2, "need d >= 2");
    hypam::require(c.real("dt") > 0.0, "need dt > 0");
    double lambda = c.real("lambda"), eta = c.real("eta");
    if (!(lambda > 0.0 && lambda < eta))
        hypam::fail(hypam::ErrorKind::ConstraintViolation,
                    "need 0 < lambda < eta (lambda = " + fmt(lambda) + ", eta = " + fmt(eta) + ")");
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f) hypam::fail(hypam::ErrorKind::InvalidArgument, "cannot write " + p.string());
}

int exit_code(const hypam::Error& e) {
    switch (e.kind()) {
        case hypam::ErrorKind::ConstraintViolation: return kExitConstraint;
        case hypam::ErrorKind::BudgetExceeded: return kExitBudget;
        default: return kExitRuntime;
    }
}

std::string subcommand_list() {
    std::string s;
    for (const auto& [name, _] : runners()) s += (s.empty() ? "" : ", ") + name;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypam: Brownian motion, Gaussian fields and Feynman-Kac on H^d"};
    app.footer("Subcommands: " + subcommand_list() +
               "\nPrecedence: defaults < --config < HYPAM_<KEY> environment < flags (--seed, --out, --set)."
               "\nExit codes: 0 ok, 1 usage or parse error, 2 constraint violation, 3 budget exceeded, 4 other "
               "runtime error.");
    std::string sub, config_path, out;
    std::uint64_t seed = 0;
    unsigned n_threads = 0;
    std::vector<std::string> sets;
    bool list_keys = false;
    app.add_option("subcommand", sub, "experiment to run");
    app.add_option("--config", config_path, "key = value file, or a JSON manifest of an earlier run");
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    auto* out_opt = app.add_option("--out", out, "output directory");
    app.add_option("--threads", n_threads, "worker threads (0: all cores)");
    app.add_option("--set", sets, "key=value override, repeatable")->allow_extra_args(false);
    app.add_flag("--list-keys", list_keys, "print the configuration keys and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    if (list_keys) {
        for (const auto& [k, spec] : Config::schema())
            std::cout << k << " = " << spec.fallback << "    # " << spec.help << "\n";
        return 0;
    }
    auto it = runners().find(sub);
    if (it == runners().end()) {
        std::cerr << "hypam: unknown subcommand '" << sub << "' (expected one of: " << subcommand_list() << ")\n";
        return kExitUsage;
    }

    Config cfg;
    try {
        if (!config_path.empty()) cfg.load_file(config_path);
        cfg.load_env();
        if (*seed_opt) cfg.set("seed", std::to_string(seed), "--seed");
        if (*out_opt) cfg.set("out", out, "--out");
        for (const auto& kv : sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw hypam::cli::ConfigError("--set", 0, "", "expected key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1), "--set");
        }
    } catch (const hypam::cli::ConfigError& e) {
        std::cerr << "hypam: config error: " << e.what() << "\n";
        return kExitUsage;
    }

    hypam::set_threads(n_threads);
    try {
        validate(cfg);
        Result r = it->second(cfg);

        std::filesystem::path dir = cfg.text("out");
        std::filesystem::create_directories(dir);
        std::string csv_name = sub + ".csv";
        write_file(dir / csv_name, r.csv.str());
        json manifest = {{"subcommand", sub},
                         {"config", cfg.to_json()},
                         {"outputs", json::array({csv_name})},
                         {"summary", r.summary}};
        if (!r.note.empty()) manifest["note"] = r.note;
        write_file(dir / (sub + ".json"), manifest.dump(2) + "\n");
        if (r.exit_code == kExitBudget) std::cerr << "hypam: site budget exceeded for some rows\n";
        return r.exit_code;
    } catch (const hypam::Error& e) {
        std::cerr << "hypam: " << hypam::error_kind_name(e.kind()) << ": " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "hypam: " << e.what() << "\n";
        return kExitRuntime;
    }
}
