// experiments.hpp
// Config-driven experiment runners shared by the command-line tool and the
// acceptance checks.
//
// Config files are INI text with flat sections:
//
//     ; comment
//     [experiment]
//     kind = grid-circle-validate
//     [grid]
//     n = 256
//
// Keys are addressed as "section.key".  Every key a runner reads is recorded
// with its effective value (defaults included) and archived as
// resolved.config; keys present in the file but never read are an error.
#pragma once

#include <accelgl/graph.hpp>
#include <accelgl/grid.hpp>
#include <accelgl/ingest.hpp>
#include <accelgl/ode.hpp>
#include <accelgl/potentials.hpp>
#include <accelgl/schemes.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace accelgl {

// ---------------------------------------------------------------------------
// Formatting

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<std::string> header) : out_(path), width_(header.size()) {
        if (!out_) throw std::runtime_error("cannot write " + path);
        write_strings(header);
    }

    struct Cell {
        std::string text;
        Cell(double v) : text(format_double(v)) {}
        Cell(int v) : text(std::to_string(v)) {}
        Cell(std::int64_t v) : text(std::to_string(v)) {}
        Cell(std::size_t v) : text(std::to_string(v)) {}
        Cell(bool v) : text(v ? "1" : "0") {}
        Cell(const char* s) : text(s) {}
        Cell(std::string s) : text(std::move(s)) {}
        Cell(std::string_view s) : text(s) {}
    };

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != width_) throw std::logic_error("CSV row width does not match the header");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text;
        out_ << '\n';
    }

    void flush() { out_.flush(); }

private:
    void write_strings(const std::vector<std::string>& s) {
        for (std::size_t i = 0; i < s.size(); ++i) out_ << (i ? "," : "") << s[i];
        out_ << '\n';
    }

    std::ofstream out_;
    std::size_t width_;
};

// ---------------------------------------------------------------------------
// Config

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Config {
public:
    static Config parse(std::istream& in, const std::string& name = "<config>") {
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::ini_parser::read_ini(in, tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(name + ":" + std::to_string(e.line()) + ": " + e.message());
        }
        Config c;
        for (const auto& [section, body] : tree) {
            if (body.empty()) throw ConfigError(name + ": key '" + section + "' outside of a section");
            if (section.find_first_of(" \t.") != std::string::npos)
                throw ConfigError(name + ": bad section name '" + section + "'");
            for (const auto& [key, value] : body) {
                if (key.find_first_of(" \t.") != std::string::npos)
                    throw ConfigError(name + ": bad key '" + key + "' in [" + section + "]");
                c.values_[section + "." + key] = value.data();
            }
        }
        return c;
    }

    static Config from_string(const std::string& text, const std::string& name = "<string>") {
        std::istringstream in(text);
        return parse(in, name);
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path);
        Config c = parse(in, path);
        c.base_dir_ = std::filesystem::path(path).parent_path().string();
        return c;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    /// Adds or replaces a value (command-line overrides and sweeps).
    void set(const std::string& key, const std::string& value) {
        if (key.find('.') == std::string::npos) throw ConfigError("override key '" + key + "' needs a section");
        values_[key] = value;
    }

    std::string str(const std::string& key, const std::string& def) const {
        const auto it = values_.find(key);
        const std::string v = it == values_.end() ? def : it->second;
        resolved_[key] = v;
        return v;
    }

    std::string str(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
        resolved_[key] = it->second;
        return it->second;
    }

    double real(const std::string& key, double def) const {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            resolved_[key] = format_double(def);
            return def;
        }
        const double v = parse_real(key, it->second);
        resolved_[key] = it->second;
        return v;
    }

    std::optional<double> optional_real(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end() || it->second == "none") {
            resolved_[key] = "none";
            return std::nullopt;
        }
        resolved_[key] = it->second;
        return parse_real(key, it->second);
    }

    std::int64_t integer(const std::string& key, std::int64_t def) const {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            resolved_[key] = std::to_string(def);
            return def;
        }
        const std::string& s = it->second;
        std::int64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            // Accept integral reals such as 1e5.
            const double d = parse_real(key, s);
            if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError("key '" + key + "' expects an integer, got '" + s + "'");
            v = static_cast<std::int64_t>(d);
        }
        resolved_[key] = s;
        return v;
    }

    bool boolean(const std::string& key, bool def) const {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            resolved_[key] = def ? "true" : "false";
            return def;
        }
        const std::string& s = it->second;
        resolved_[key] = s;
        if (s == "true" || s == "yes" || s == "1") return true;
        if (s == "false" || s == "no" || s == "0") return false;
        throw ConfigError("key '" + key + "' expects true/false, got '" + s + "'");
    }

    std::vector<double> reals(const std::string& key, const std::vector<double>& def) const {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            std::string s;
            for (std::size_t i = 0; i < def.size(); ++i) s += (i ? ", " : "") + format_double(def[i]);
            resolved_[key] = s;
            return def;
        }
        resolved_[key] = it->second;
        return parse_list(key, it->second);
    }

    /// Path values are taken relative to the config file's directory.
    std::string path(const std::string& key, const std::string& def) const {
        const std::string p = str(key, def);
        if (p.empty() || std::filesystem::path(p).is_absolute() || base_dir_.empty()) return p;
        return (std::filesystem::path(base_dir_) / p).lexically_normal().string();
    }

    void reject_unknown() const {
        std::string bad;
        for (const auto& [k, v] : values_)
            if (!resolved_.count(k)) bad += (bad.empty() ? "" : ", ") + k;
        if (!bad.empty()) throw ConfigError("unknown config keys: " + bad);
    }

    const std::map<std::string, std::string>& resolved() const { return resolved_; }

    /// The resolved keys as a config file.
    std::string resolved_text() const {
        std::ostringstream out;
        std::string section;
        for (const auto& [k, v] : resolved_) {
            const auto dot = k.find('.');
            const std::string s = k.substr(0, dot);
            if (s != section) {
                out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
                section = s;
            }
            out << k.substr(dot + 1) << " = " << v << '\n';
        }
        return out.str();
    }

    static std::vector<double> parse_list(const std::string& key, const std::string& s) {
        std::vector<double> out;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            out.push_back(parse_real(key, item));
        }
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static double parse_real(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError("key '" + key + "' expects a number, got '" + s + "'");
        return v;
    }

    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> resolved_;
    std::string base_dir_;
};

// ---------------------------------------------------------------------------
// Experiment kinds

enum class ExperimentKind {
    GridCurve,
    GridCircleValidate,
    GridMinimalSurface,
    GraphBlobs,
    GraphMnist,
    OdeCorrector,
    ScalarCompare
};

inline std::string_view to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::GridCurve: return "grid-curve";
        case ExperimentKind::GridCircleValidate: return "grid-circle-validate";
        case ExperimentKind::GridMinimalSurface: return "grid-minimal-surface";
        case ExperimentKind::GraphBlobs: return "graph-blobs";
        case ExperimentKind::GraphMnist: return "graph-mnist";
        case ExperimentKind::OdeCorrector: return "ode-corrector";
        case ExperimentKind::ScalarCompare: return "scalar-compare";
    }
    return "?";
}

inline ExperimentKind experiment_kind_from_string(std::string_view s) {
    for (auto k : {ExperimentKind::GridCurve, ExperimentKind::GridCircleValidate, ExperimentKind::GridMinimalSurface,
                   ExperimentKind::GraphBlobs, ExperimentKind::GraphMnist, ExperimentKind::OdeCorrector,
                   ExperimentKind::ScalarCompare})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Stopping rules

enum class StopRule { MaxSteps, Plateau, Reference };

inline StopRule stop_rule_from_string(std::string_view s) {
    if (s == "max-steps") return StopRule::MaxSteps;
    if (s == "plateau") return StopRule::Plateau;
    if (s == "reference") return StopRule::Reference;
    throw ConfigError("unknown stop rule '" + std::string(s) + "'");
}

struct StopSpec {
    StopRule rule = StopRule::MaxSteps;
    std::int64_t max_steps = 1000;
    double plateau_tol = 1e-10;  // relative energy change over the window
    int plateau_window = 10;     // in recorded rows
    double delta = 1e-11;        // distance to the reference
    double delta_ref = 1e-12;    // successive distance ending the reference run
    double reference_tau = 0.1;  // GD step of the reference run
    std::int64_t reference_max_steps = 1000000;
};

// ---------------------------------------------------------------------------
// Grid experiments

enum class InitShape { Disk, CShape, SchwarzP, Gyroid, Bump, Constant };

inline InitShape init_shape_from_string(std::string_view s) {
    if (s == "disk") return InitShape::Disk;
    if (s == "cshape") return InitShape::CShape;
    if (s == "schwarzp") return InitShape::SchwarzP;
    if (s == "gyroid") return InitShape::Gyroid;
    if (s == "bump") return InitShape::Bump;
    if (s == "constant") return InitShape::Constant;
    throw ConfigError("unknown initial shape '" + std::string(s) + "'");
}

struct GridSpec {
    int dim = 2;
    int n = 256;
    double eps = 0.015;
    double R = 2.0;
    GridSymmetry layout = GridSymmetry::Periodic;
    std::optional<double> volume;
};

struct InitSpec {
    InitShape shape = InitShape::Disk;
    PeriodicGrid::Point center{0.5, 0.5, 0.5};
    double radius = 0.45;
    bool smooth = false;        // disk: optimal-profile transition instead of an indicator
    double perturbation = 0.0;  // uniform noise amplitude added pointwise
    std::uint64_t seed = 1;
    double support = 0.05;      // bump
    double amplitude = 0.5;     // bump
    double value = 0.0;         // constant
    int warm_up_steps = 0;      // GD relaxation of a discontinuous start
    double warm_up_tau = 1e-4;
};

/// Initial field on the grid.  Smoothed disks use the optimal profile of W.
inline Eigen::ArrayXd make_initial_field(const PeriodicGrid& grid, const InitSpec& spec, double eps, const DoubleWell& W) {
    Eigen::ArrayXd u;
    switch (spec.shape) {
        case InitShape::Disk:
            if (spec.smooth) {
                const auto profile = std::make_shared<Profile>(solve_profile_auto(W));
                u = disk_init(grid, spec.center, spec.radius, eps, [profile](double s) { return (*profile)(s); });
            } else {
                u = disk_init(grid, spec.center, spec.radius);
            }
            break;
        case InitShape::CShape: u = cshape_init(grid); break;
        case InitShape::SchwarzP: u = schwarzp_init(grid); break;
        case InitShape::Gyroid: u = gyroid_init(grid); break;
        case InitShape::Bump: u = bump_init(grid, spec.center, spec.support, spec.amplitude); break;
        case InitShape::Constant: u = Eigen::ArrayXd::Constant(grid.size(), spec.value); break;
    }
    if (spec.perturbation > 0.0) {
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> noise(-spec.perturbation, spec.perturbation);
        for (auto& x : u) x += noise(rng);
    }
    return u;
}

struct GridRunSpec {
    GridSpec grid;
    InitSpec init;
    SchemeParams scheme = SchemeParams::momentum(Scheme::CINEMA, 1e-5, 3.0, 0.015);
    /// Momentum schemes with a volume constraint start with one GD step of
    /// size tau^2, which projects the start onto the constraint.
    bool initial_gd_step = false;
    StopSpec stop;
    std::int64_t record_every = 1;
    int snapshots = 0;  // PGM snapshots per run (2D/3D), 0 = none
};

struct GridRecord {
    EnergyRecord energy;
    double ref_distance = std::numeric_limits<double>::quiet_NaN();
};

struct GridRunResult {
    RunStatus status = RunStatus::Completed;
    std::int64_t steps = 0;
    bool reached = false;  // stopping criterion met (plateau / reference)
    std::vector<GridRecord> trace;
    Eigen::ArrayXd final_u;
};

struct ReferenceSolution {
    Eigen::ArrayXd u;
    std::int64_t steps = 0;
    bool converged = false;
};

/// Shared state of a grid experiment: the grid, the backend and the start.
class GridSetup {
public:
    explicit GridSetup(const GridRunSpec& spec)
        : spec_(spec),
          grid_(std::make_unique<PeriodicGrid>(spec.grid.dim, spec.grid.n, spec.grid.layout)),
          backend_(std::make_unique<GridBackend<DoubleWell>>(*grid_, DoubleWell(spec.grid.R), spec.grid.eps,
                                                             spec.grid.volume)) {
        u0_ = make_initial_field(*grid_, spec.init, spec.grid.eps, backend_->potential());
        if (spec.init.warm_up_steps > 0)
            u0_ = warm_up(u0_, *backend_, spec.init.warm_up_tau, spec.init.warm_up_steps);
    }

    const GridRunSpec& spec() const { return spec_; }
    const PeriodicGrid& grid() const { return *grid_; }
    const GridBackend<DoubleWell>& backend() const { return *backend_; }
    const Eigen::ArrayXd& initial() const { return u0_; }

    double l2_distance(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) const {
        const Eigen::ArrayXd d = a - b;
        return std::sqrt(grid_->inner(d, d));
    }

    /// GD with the reference step until successive iterates are within delta_ref.
    ReferenceSolution reference(const StopSpec& stop) const {
        const auto p = SchemeParams::gradient_descent(stop.reference_tau, spec_.grid.eps);
        auto s = at_rest(u0_);
        ReferenceSolution out;
        for (std::int64_t k = 0; k < stop.reference_max_steps; ++k) {
            Eigen::ArrayXd prev = s.u;
            gd_step(s, p, *backend_);
            if (!s.u.allFinite()) break;
            if (l2_distance(s.u, prev) <= stop.delta_ref) {
                out.converged = true;
                break;
            }
        }
        out.u = s.u;
        out.steps = s.step;
        return out;
    }

private:
    GridRunSpec spec_;
    std::unique_ptr<PeriodicGrid> grid_;
    std::unique_ptr<GridBackend<DoubleWell>> backend_;
    Eigen::ArrayXd u0_;
};

/// Called at every recorded row; returning true stops the run.
using GridObserver = std::function<bool(const SchemeState<Eigen::ArrayXd>&, const GridRecord&)>;

/// Runs the configured scheme from the setup's initial field.  The reference
/// rule needs `reference`; it is checked after every step, the plateau rule
/// at recorded rows.
/// Called at step 0 and after every step.
using GridStepHook = std::function<void(const SchemeState<Eigen::ArrayXd>&)>;

inline GridRunResult run_grid(const GridSetup& setup, const GridRunSpec& spec, const ReferenceSolution* reference = nullptr,
                              const GridObserver& observer = {}, const GridStepHook& every_step = {}) {
    spec.scheme.validate();
    const auto& backend = setup.backend();
    if (spec.stop.rule == StopRule::Reference && !reference)
        throw std::invalid_argument("reference stopping rule needs a reference solution");
    GridRunResult out;
    auto s = at_rest(setup.initial());
    const auto distance = [&]() {
        return reference ? setup.l2_distance(s.u, reference->u) : std::numeric_limits<double>::quiet_NaN();
    };
    double dist = distance();
    bool stop = false;
    auto record = [&]() {
        GridRecord r{record_energy(s, spec.scheme, backend), dist};
        out.trace.push_back(r);
        if (observer && observer(s, r)) stop = true;
        if (!std::isfinite(r.energy.scheme_energy) || std::abs(r.energy.scheme_energy) > divergence_threshold)
            out.status = RunStatus::Diverged;
        if (spec.stop.rule == StopRule::Plateau && out.trace.size() > static_cast<std::size_t>(spec.stop.plateau_window)) {
            const double then = out.trace[out.trace.size() - 1 - spec.stop.plateau_window].energy.total_energy;
            const double now = r.energy.total_energy;
            if (std::abs(now - then) <= spec.stop.plateau_tol * std::abs(now)) out.reached = true;
        }
    };
    auto converged = [&]() { return spec.stop.rule == StopRule::Reference && dist < spec.stop.delta; };

    record();
    if (every_step) every_step(s);
    if (converged()) out.reached = true;
    const bool gd_first = spec.initial_gd_step && spec.scheme.scheme != Scheme::GD;
    while (!out.reached && !stop && out.status != RunStatus::Diverged && s.step < spec.stop.max_steps) {
        if (gd_first && s.step == 0) {
            auto p = SchemeParams::gradient_descent(spec.scheme.tau * spec.scheme.tau, spec.scheme.eps);
            gd_step(s, p, backend);
            s.time = 0.0;
        } else {
            advance(s, spec.scheme, backend);
        }
        if (!s.u.allFinite() || !s.v.allFinite()) {
            out.status = RunStatus::Diverged;
            break;
        }
        if (every_step) every_step(s);
        if (reference) dist = distance();
        if (converged()) out.reached = true;
        const bool due = out.reached || s.step >= spec.stop.max_steps ||
                         (spec.record_every > 0 && s.step % spec.record_every == 0);
        if (due) record();
    }
    if (out.status != RunStatus::Diverged && out.reached) out.status = RunStatus::Converged;
    out.steps = s.step;
    out.final_u = std::move(s.u);
    return out;
}

// Circle validation -----------------------------------------------------------

/// Singular-limit predictions for a shrinking circle: the ODE for momentum
/// schemes, the closed-form curve-shortening law for GD.
class CirclePrediction {
public:
    CirclePrediction(const SchemeParams& p, double r0, double t_end, double ode_dt, double c0)
        : gd_(p.scheme == Scheme::GD), r0_(r0), c0_(c0) {
        if (!gd_) trajectory_ = circle_ode_solve(r0, 0.0, p.alpha, ode_dt, t_end);
    }

    struct Value {
        double r = std::numeric_limits<double>::quiet_NaN();
        double rdot = std::numeric_limits<double>::quiet_NaN();
        double plain = std::numeric_limits<double>::quiet_NaN();     // 2 pi r
        double adjusted = std::numeric_limits<double>::quiet_NaN();  // pi r (s + 1/s)
        bool vanished = false;
    };

    Value at(double t) const {
        Value v;
        if (gd_) {
            const auto c = allen_cahn_circle(r0_, t);
            if (c.vanished) {
                v.vanished = true;
                return v;
            }
            v.r = c.r;
            v.rdot = -1.0 / c.r;
            v.plain = v.adjusted = 2.0 * std::numbers::pi * c.r;
            return v;
        }
        if (trajectory_.vanished && t > trajectory_.states.back().t) {
            v.vanished = true;
            return v;
        }
        const CircleState s = interpolate(trajectory_, t);
        const auto p = velocity_adjusted_perimeter(s.r, s.rdot, 1.0);
        v.r = s.r;
        v.rdot = s.rdot;
        v.plain = p.plain;
        v.adjusted = p.adjusted;
        return v;
    }

    bool gradient_flow() const { return gd_; }
    const CircleTrajectory& trajectory() const { return trajectory_; }
    double c0() const { return c0_; }

private:
    bool gd_;
    double r0_, c0_;
    CircleTrajectory trajectory_;
};

struct CircleRow {
    double time;
    double gl_energy;
    double energy_perimeter;  // gl_energy / c0
    double area;
    double raw_area;
    double area_perimeter;    // 2 sqrt(pi area)
    double mean_u;
    CirclePrediction::Value prediction;
};

inline CircleRow circle_row(const GridSetup& setup, const CirclePrediction& pred, const SchemeState<Eigen::ArrayXd>& s,
                            const EnergyRecord& e) {
    const AreaPerimeter ap = area_perimeter_estimate(setup.grid(), s.u);
    return {s.time, e.gl_energy, e.gl_energy / pred.c0(), ap.area, ap.raw_area, ap.perimeter, e.mean_u, pred.at(s.time)};
}

// ---------------------------------------------------------------------------
// Graph experiments

enum class DataSource { Blobs, Mnist };
enum class GraphType { Full, Knn };

struct GraphExperimentSpec {
    DataSource source = DataSource::Blobs;
    // blobs
    Eigen::Index n = 2000;
    int k = 5;
    double stddev = 1.1;
    double box = 10.0;
    std::uint64_t data_seed = 1;
    // mnist
    std::string images, labels;
    Eigen::Index count = 10000;
    // graph
    GraphType graph = GraphType::Full;
    double sigma = 0.2;
    double cutoff = 1e-3;
    int knn = 5;
    // problem
    double label_fraction = 0.01;
    std::uint64_t label_seed = 1;
    double eps = 1.0;
    double R = 2.0;
    GraphSolverOptions solver;
};

/// Dataset, graph and labelled problem, built once and shared by runs.
struct GraphSetup {
    Dataset data;
    std::shared_ptr<const WeightedGraph> graph;
    std::vector<Eigen::Index> labelled;
    std::unique_ptr<LabeledProblem> problem;
    double build_seconds = 0.0;

    /// Labelled vertices and frozen (label-free component) vertices.
    std::vector<Eigen::Index> excluded() const {
        std::vector<Eigen::Index> e = labelled;
        e.insert(e.end(), problem->frozen().begin(), problem->frozen().end());
        std::sort(e.begin(), e.end());
        return e;
    }
};

inline GraphSetup prepare_graph(const GraphExperimentSpec& spec) {
    const auto t0 = std::chrono::steady_clock::now();
    GraphSetup s;
    if (spec.source == DataSource::Blobs) {
        s.data = make_blobs(spec.n, spec.k, spec.stddev, spec.box, spec.data_seed);
    } else {
        s.data = load_mnist_idx(spec.images, spec.labels, spec.count);
    }
    s.data.validate();
    if (spec.graph == GraphType::Full)
        s.graph = std::make_shared<WeightedGraph>(build_full_graph(s.data.points, spec.sigma, {spec.cutoff, 20000}));
    else
        s.graph = std::make_shared<WeightedGraph>(build_knn_graph(s.data.points, spec.knn, spec.sigma));
    s.labelled = sample_labels(s.data, spec.label_fraction, spec.label_seed);
    std::vector<int> lab;
    for (Eigen::Index i : s.labelled) lab.push_back(s.data.labels[i]);
    s.problem = std::make_unique<LabeledProblem>(s.graph, s.labelled, lab, s.data.k, spec.eps, spec.R);
    s.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

struct GraphRecord {
    std::int64_t step = 0;
    double energy = 0.0;      // 1/N-normalised
    double energy_raw = 0.0;
    double accuracy = 0.0;    // over unlabelled vertices in labelled components
    double row_sum_error = 0.0;
};

struct GraphRunResult {
    RunStatus status = RunStatus::Completed;
    std::vector<GraphRecord> trace;
    Eigen::MatrixXd U;  // full N x k
    std::vector<int> predicted;
    double accuracy = 0.0;
    double max_row_sum_error = 0.0;  // over every step
    double max_cg_residual = 0.0;
};

inline GraphRunResult run_graph_scheme(const GraphSetup& setup, const SchemeParams& params, std::int64_t steps,
                                       std::int64_t record_every = 1, const GraphSolverOptions& solver = {}) {
    params.validate();
    const LabeledProblem& p = *setup.problem;
    GraphBackend backend(p, solver);
    const std::vector<Eigen::Index> excluded = setup.excluded();
    GraphRunResult out;
    auto s = at_rest(p.initial_interior());
    auto row_error = [&]() {
        if (s.u.rows() == 0) return 0.0;
        return std::max((s.u.rowwise().sum().array() - 1.0).abs().maxCoeff(), s.v.rowwise().sum().cwiseAbs().maxCoeff());
    };
    auto record = [&]() {
        const GraphEnergy e = p.energy(s.u);
        const Eigen::MatrixXd U = p.assemble(s.u);
        const double acc = accuracy(classify(U), setup.data.labels, excluded);
        out.trace.push_back({s.step, e.normalized, e.raw, acc, row_error()});
        if (!std::isfinite(e.raw) || std::abs(e.raw) > divergence_threshold) out.status = RunStatus::Diverged;
    };
    record();
    out.max_row_sum_error = row_error();
    for (std::int64_t k = 0; k < steps && out.status != RunStatus::Diverged; ++k) {
        advance(s, params, backend);
        out.max_cg_residual = std::max(out.max_cg_residual, backend.solver().last_residual());
        if (!s.u.allFinite() || !s.v.allFinite()) {
            out.status = RunStatus::Diverged;
            break;
        }
        out.max_row_sum_error = std::max(out.max_row_sum_error, row_error());
        if (k + 1 == steps || (record_every > 0 && s.step % record_every == 0)) record();
    }
    out.U = p.assemble(s.u);
    out.predicted = classify(out.U);
    out.accuracy = accuracy(out.predicted, setup.data.labels, excluded);
    return out;
}

/// Fraction of vertices outside `exclude` on which two labelings agree.
inline double label_agreement(const std::vector<int>& a, const std::vector<int>& b,
                              const std::vector<Eigen::Index>& exclude = {}) {
    return accuracy(a, b, exclude);
}

// ---------------------------------------------------------------------------
// Runner plumbing

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;
inline constexpr int exit_diverged = 3;

#ifndef ACCELGL_VERSION
#define ACCELGL_VERSION "unknown"
#endif

inline std::string version_string() { return ACCELGL_VERSION; }

struct RunReport {
    int exit_code = exit_ok;
    nlohmann::json summary;
};

class RunContext {
public:
    RunContext(const Config& cfg, std::string out_dir) : cfg_(cfg), dir_(std::move(out_dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::string file(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

    std::string snapshot_path(std::int64_t step) const {
        const auto d = std::filesystem::path(dir_) / "snapshots";
        std::filesystem::create_directories(d);
        char name[64];
        std::snprintf(name, sizeof name, "step_%09lld.pgm", static_cast<long long>(step));
        return (d / name).string();
    }

    const std::string& dir() const { return dir_; }

private:
    const Config& cfg_;
    std::string dir_;
};

inline SchemeParams scheme_from_config(const Config& cfg, const std::string& def_scheme, double def_tau,
                                       double def_alpha, double eps) {
    const Scheme scheme = scheme_from_string(cfg.str("scheme.name", def_scheme));
    const double tau = cfg.real("scheme.tau", def_tau);
    SchemeParams p;
    if (scheme == Scheme::GD) {
        p = SchemeParams::gradient_descent(tau, eps);
    } else {
        p = SchemeParams::momentum(scheme, tau, cfg.real("scheme.alpha", def_alpha), eps);
        if (auto eta = cfg.optional_real("scheme.eta")) p.eta = *eta;
        if (auto rho = cfg.optional_real("scheme.rho")) {
            p.rho = *rho;
            p.alpha = tau > 0.0 ? (1.0 / *rho - 1.0) / tau : 0.0;
        }
    }
    p.validate();
    return p;
}

inline GridSymmetry layout_from_string(const std::string& s) {
    if (s == "periodic") return GridSymmetry::Periodic;
    if (s == "even") return GridSymmetry::Even;
    throw ConfigError("unknown grid layout '" + s + "'");
}

inline StopSpec stop_from_config(const Config& cfg, std::int64_t max_steps, const std::string& def_rule) {
    StopSpec s;
    s.rule = stop_rule_from_string(cfg.str("stop.rule", def_rule));
    s.max_steps = max_steps;
    if (s.rule == StopRule::Plateau) {
        s.plateau_tol = cfg.real("stop.tol", s.plateau_tol);
        s.plateau_window = static_cast<int>(cfg.integer("stop.window", s.plateau_window));
    }
    if (s.rule == StopRule::Reference) {
        s.delta = cfg.real("stop.delta", s.delta);
        s.delta_ref = cfg.real("stop.delta_ref", s.delta_ref);
        s.reference_tau = cfg.real("stop.reference_tau", s.reference_tau);
        s.reference_max_steps = cfg.integer("stop.reference_max_steps", s.reference_max_steps);
    }
    return s;
}

struct GridDefaults {
    int dim, n;
    double eps;
    std::string layout, shape;
    bool smooth;
    int warm_up_steps;
    std::string scheme;
    double tau, alpha;
    std::string volume;
    std::int64_t steps;
    std::string stop_rule;
    bool initial_gd_step;
};

inline GridDefaults grid_defaults(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::GridCurve:
            return {2, 400, 0.01, "periodic", "cshape", false, 10, "cinema", 1e-5, 3.0, "none", 8000, "max-steps", false};
        case ExperimentKind::GridCircleValidate:
            return {2, 256, 0.015, "even", "disk", true, 0, "cinema", 1e-6, 3.0, "none", 900000, "max-steps", false};
        case ExperimentKind::GridMinimalSurface:
            return {3, 64, 7.5 / 64, "periodic", "schwarzp", false, 0, "fista", 0.4, 1.4, "0", 5000, "reference", true};
        default: throw std::logic_error("not a grid experiment");
    }
}

inline GridRunSpec grid_spec_from_config(const Config& cfg, ExperimentKind kind) {
    const GridDefaults d = grid_defaults(kind);
    GridRunSpec spec;
    spec.grid.dim = static_cast<int>(cfg.integer("grid.dim", d.dim));
    spec.grid.n = static_cast<int>(cfg.integer("grid.n", d.n));
    spec.grid.eps = cfg.real("grid.eps", d.eps);
    spec.grid.R = cfg.real("grid.R", 2.0);
    spec.grid.layout = layout_from_string(cfg.str("grid.layout", d.layout));
    const std::string vol = cfg.str("grid.volume", d.volume);
    if (vol != "none") spec.grid.volume = Config::parse_list("grid.volume", vol).at(0);

    spec.init.shape = init_shape_from_string(cfg.str("init.shape", d.shape));
    const auto c = cfg.reals("init.center", {0.5, 0.5, 0.5});
    for (std::size_t a = 0; a < 3 && a < c.size(); ++a) spec.init.center[a] = c[a];
    if (spec.init.shape == InitShape::Disk) {
        spec.init.radius = cfg.real("init.radius", 0.45);
        spec.init.smooth = cfg.boolean("init.smooth", d.smooth);
    }
    if (spec.init.shape == InitShape::Bump) {
        spec.init.support = cfg.real("init.support", spec.init.support);
        spec.init.amplitude = cfg.real("init.amplitude", spec.init.amplitude);
    }
    if (spec.init.shape == InitShape::Constant) spec.init.value = cfg.real("init.value", 0.0);
    spec.init.perturbation = cfg.real("init.perturbation", 0.0);
    spec.init.seed = static_cast<std::uint64_t>(cfg.integer("experiment.seed", 1));
    spec.init.warm_up_steps = static_cast<int>(cfg.integer("init.warm_up_steps", d.warm_up_steps));
    
    spec.scheme = scheme_from_config(cfg, d.scheme, d.tau, d.alpha, spec.grid.eps);
    if (spec.init.warm_up_steps > 0) spec.init.warm_up_tau = cfg.real("init.warm_up_tau", 10.0 * spec.scheme.tau);
    spec.initial_gd_step = cfg.boolean("scheme.initial_gd_step", d.initial_gd_step);

    std::int64_t steps = cfg.integer("run.steps", d.steps);
    if (auto t_end = cfg.optional_real("run.t_end"))
        steps = static_cast<std::int64_t>(std::llround(*t_end / spec.scheme.dt()));
    spec.stop = stop_from_config(cfg, steps, d.stop_rule);
    spec.record_every = cfg.integer("run.record_every", std::max<std::int64_t>(1, steps / 1000));
    spec.snapshots = static_cast<int>(cfg.integer("io.snapshots", spec.grid.dim >= 2 ? 10 : 0));
    if (spec.snapshots < 0) throw ConfigError("io.snapshots must be >= 0");
    if (spec.snapshots > spec.stop.max_steps) spec.snapshots = static_cast<int>(spec.stop.max_steps);
    return spec;
}

inline nlohmann::json energy_json(const EnergyRecord& r) {
    return {{"step", r.step},           {"time", r.time},
            {"gl_energy", r.gl_energy}, {"kinetic_energy", r.kinetic_energy},
            {"total_energy", r.total_energy}, {"scheme_energy", r.scheme_energy},
            {"mean_u", r.mean_u}};
}

inline RunReport run_grid_experiment(const Config& cfg, ExperimentKind kind, const RunContext& ctx) {
    const GridRunSpec spec = grid_spec_from_config(cfg, kind);
    const double ode_dt = kind == ExperimentKind::GridCircleValidate ? cfg.real("ode.dt", 1e-4) : 0.0;
    cfg.reject_unknown();

    GridSetup setup(spec);
    std::optional<ReferenceSolution> ref;
    if (spec.stop.rule == StopRule::Reference) ref = setup.reference(spec.stop);

    std::optional<CirclePrediction> pred;
    const double c0 = profile_constant_c0(setup.backend().potential());
    if (kind == ExperimentKind::GridCircleValidate) {
        if (spec.grid.dim != 2) throw ConfigError("grid-circle-validate needs grid.dim = 2");
        const double t_end = static_cast<double>(spec.stop.max_steps) * spec.scheme.dt();
        pred.emplace(spec.scheme, spec.init.radius, t_end, ode_dt, c0);
        if (!pred->gradient_flow()) write_trajectory_csv(ctx.file("trajectory.csv"), pred->trajectory());
    }

    // Leading columns are common to every grid run; 3D runs leave the area
    // columns empty and only circle validation carries predictions.
    std::vector<std::string> header{"step", "time", "gl_energy", "kinetic_energy", "total_energy", "mean_u",
                                    "area_est", "perimeter_est", "velocity_adjusted_perimeter_pred",
                                    "plain_perimeter_pred", "energy_perimeter", "ode_r", "ode_rdot", "scheme_energy"};
    if (ref) header.push_back("ref_distance");
    CsvWriter trace(ctx.file("trace.csv"), header);
    // Snapshot k of N is taken at step round(k * max_steps / N); a run that
    // stops early also saves its final state.
    int snaps_taken = 0;
    std::int64_t last_snap = -1;
    auto snap_target = [&](int k) {
        return static_cast<std::int64_t>(std::llround(static_cast<double>(k) * spec.stop.max_steps / spec.snapshots));
    };
    auto snapshot_hook = [&](const SchemeState<Eigen::ArrayXd>& s) {
        if (spec.grid.dim < 2) return;
        while (snaps_taken < spec.snapshots && snap_target(snaps_taken + 1) <= s.step) {
            ++snaps_taken;
            if (snap_target(snaps_taken) == s.step) {
                write_pgm(ctx.snapshot_path(s.step), setup.grid(), s.u);
                last_snap = s.step;
            }
        }
    };

    auto observer = [&](const SchemeState<Eigen::ArrayXd>& s, const GridRecord& r) {
        const EnergyRecord& e = r.energy;
        std::vector<CsvWriter::Cell> row{e.step, e.time, e.gl_energy, e.kinetic_energy, e.total_energy, e.mean_u};
        if (spec.grid.dim == 2) {
            const AreaPerimeter ap = area_perimeter_estimate(setup.grid(), s.u);
            row.emplace_back(ap.area);
            row.emplace_back(ap.perimeter);
        } else {
            row.emplace_back("");
            row.emplace_back("");
        }
        if (pred) {
            const auto v = pred->at(s.time);
            for (double x : {v.adjusted, v.plain, e.gl_energy / c0, v.r, v.rdot}) row.emplace_back(x);
        } else {
            for (int i = 0; i < 5; ++i) row.emplace_back("");
        }
        row.emplace_back(e.scheme_energy);
        if (ref) row.emplace_back(r.ref_distance);
        trace.row(row);
        return false;
    };
    const GridRunResult res =
        run_grid(setup, spec, ref ? &*ref : nullptr, observer, spec.snapshots > 0 ? GridStepHook(snapshot_hook) : nullptr);
    if (spec.snapshots > 0 && spec.grid.dim >= 2 && last_snap != res.steps && res.status != RunStatus::Diverged)
        write_pgm(ctx.snapshot_path(res.steps), setup.grid(), res.final_u);
    trace.flush();

    RunReport rep;
    rep.summary["status"] = std::string(to_string(res.status));
    rep.summary["diverged"] = res.status == RunStatus::Diverged;
    rep.summary["steps"] = res.steps;
    rep.summary["reached_stop_criterion"] = res.reached;
    rep.summary["c0"] = c0;
    if (!res.trace.empty()) {
        rep.summary["initial"] = energy_json(res.trace.front().energy);
        rep.summary["final"] = energy_json(res.trace.back().energy);
    }
    if (ref) {
        rep.summary["reference_steps"] = ref->steps;
        rep.summary["reference_converged"] = ref->converged;
        if (!res.trace.empty()) rep.summary["final_ref_distance"] = res.trace.back().ref_distance;
    }
    if (res.status == RunStatus::Diverged) rep.exit_code = exit_diverged;
    return rep;
}

// Graph ------------------------------------------------------------------------

inline GraphExperimentSpec graph_spec_from_config(const Config& cfg, ExperimentKind kind) {
    GraphExperimentSpec s;
    if (kind == ExperimentKind::GraphBlobs) {
        s.source = DataSource::Blobs;
        s.n = cfg.integer("data.n", 2000);
        s.k = static_cast<int>(cfg.integer("data.k", 5));
        s.stddev = cfg.real("data.std", 1.1);
        s.box = cfg.real("data.box", 10.0);
        s.data_seed = static_cast<std::uint64_t>(cfg.integer("experiment.seed", 1));
        s.graph = GraphType::Full;
        s.sigma = cfg.real("graph.sigma", 0.2);
        s.cutoff = cfg.real("graph.cutoff", 1e-3);
    } else {
        s.source = DataSource::Mnist;
        s.images = cfg.path("data.images", "../data/mnist/images.idx");
        s.labels = cfg.path("data.labels", "../data/mnist/labels.idx");
        s.count = cfg.integer("data.count", 10000);
        s.graph = GraphType::Knn;
        s.knn = static_cast<int>(cfg.integer("graph.k", 5));
        s.sigma = cfg.real("graph.sigma", 1.5);
    }
    s.label_fraction = cfg.real("labels.fraction", 0.01);
    s.label_seed = static_cast<std::uint64_t>(cfg.integer("labels.seed", cfg.integer("experiment.seed", 1)));
    s.eps = cfg.real("graph.eps", 1.0);
    s.R = cfg.real("graph.R", 2.0);
    s.solver.dense_threshold = cfg.integer("solver.dense_threshold", 4096);
    s.solver.cg_tolerance = cfg.real("solver.cg_tol", 1e-10);
    return s;
}

inline SchemeParams graph_scheme_from_config(const Config& cfg, double eps) {
    const Scheme scheme = scheme_from_string(cfg.str("scheme.name", "fista"));
    if (scheme == Scheme::GD) return SchemeParams::gradient_descent(cfg.real("scheme.tau", 1e4), eps);
    const double tau = cfg.real("scheme.tau", 10.0);
    SchemeParams p = SchemeParams::momentum(scheme, tau, 0.0, eps);
    p.rho = cfg.real("scheme.rho", 0.4);
    p.alpha = (1.0 / p.rho - 1.0) / tau;
    p.validate();
    return p;
}

inline RunReport run_graph_experiment(const Config& cfg, ExperimentKind kind, const RunContext& ctx) {
    const GraphExperimentSpec spec = graph_spec_from_config(cfg, kind);
    const SchemeParams params = graph_scheme_from_config(cfg, spec.eps);
    const std::int64_t steps = cfg.integer("run.steps", 50);
    const std::int64_t record_every = cfg.integer("run.record_every", 1);
    const bool save_graph = cfg.boolean("io.write_graph", false);
    cfg.reject_unknown();

    const GraphSetup setup = prepare_graph(spec);
    if (save_graph) write_graph(ctx.file("graph.txt"), *setup.graph);
    const GraphRunResult res = run_graph_scheme(setup, params, steps, record_every, spec.solver);

    CsvWriter trace(ctx.file("trace.csv"), {"step", "gl_energy", "gl_energy_raw", "accuracy", "row_sum_error"});
    for (const auto& r : res.trace) trace.row({r.step, r.energy, r.energy_raw, r.accuracy, r.row_sum_error});
    std::vector<int> truth = setup.data.labels;
    write_predictions(ctx.file("predictions.csv"), res.U, truth);

    RunReport rep;
    rep.summary["status"] = std::string(to_string(res.status));
    rep.summary["diverged"] = res.status == RunStatus::Diverged;
    rep.summary["steps"] = steps;
    rep.summary["vertices"] = setup.data.size();
    rep.summary["edges"] = setup.graph->nnz() / 2;
    rep.summary["labelled"] = setup.labelled.size();
    rep.summary["frozen"] = setup.problem->frozen().size();
    rep.summary["accuracy"] = res.accuracy;
    rep.summary["max_row_sum_error"] = res.max_row_sum_error;
    rep.summary["max_cg_residual"] = res.max_cg_residual;
    rep.summary["graph_build_seconds"] = setup.build_seconds;
    if (!res.trace.empty()) {
        rep.summary["initial_energy"] = res.trace.front().energy;
        rep.summary["final_energy"] = res.trace.back().energy;
        rep.summary["final_energy_raw"] = res.trace.back().energy_raw;
    }
    if (res.status == RunStatus::Diverged) rep.exit_code = exit_diverged;
    return rep;
}

// ODE corrector -------------------------------------------------------------------

inline RunReport run_ode_corrector(const Config& cfg, const RunContext& ctx) {
    const DoubleWell W(cfg.real("ode.R", 2.0));
    const double x_max = cfg.real("ode.x_max", 12.0);
    const int n_points = static_cast<int>(cfg.integer("ode.n_points", 4096));
    cfg.reject_unknown();

    const Profile profile = solve_profile_auto(W);
    const Corrector cr = solve_corrector(W, x_max, n_points);
    const CorrectorChecks checks = check_corrector(cr, W);
    const double c0 = profile_constant_c0(W);
    const double energy = profile_energy(profile, W);

    CsvWriter pcsv(ctx.file("profile.csv"), {"x", "phi", "dphi"});
    for (std::size_t i = 0; i < profile.x.size(); ++i) pcsv.row({profile.x[i], profile.phi[i], profile.dphi[i]});
    CsvWriter trace(ctx.file("trace.csv"), {"x", "psi", "dpsi", "phi", "dphi", "ddphi"});
    for (std::size_t i = 0; i < cr.x.size(); ++i)
        trace.row({cr.x[i], cr.psi[i], cr.dpsi[i], cr.phi[i], cr.dphi[i], cr.ddphi[i]});

    RunReport rep;
    rep.summary["status"] = "completed";
    rep.summary["diverged"] = false;
    rep.summary["c0"] = c0;
    rep.summary["profile_x_max"] = profile.x_max;
    rep.summary["profile_energy"] = energy;
    rep.summary["profile_energy_rel_error"] = energy / c0 - 1.0;
    rep.summary["profile_residual"] = profile_residual(profile, W);
    rep.summary["corrector_c"] = cr.c;
    rep.summary["corrector_x_max"] = cr.x_max;
    rep.summary["corrector_reduced"] = cr.reduced;
    rep.summary["orthogonality"] = checks.orthogonality;
    rep.summary["orthogonality_scale"] = checks.orthogonality_scale;
    rep.summary["evenness"] = checks.evenness;
    rep.summary["residual"] = checks.residual;
    return rep;
}

// Scalar comparison ---------------------------------------------------------------

inline RunReport run_scalar_compare(const Config& cfg, const RunContext& ctx) {
    const DoubleWell W(cfg.real("scalar.R", 2.0));
    const double alpha = cfg.real("scalar.alpha", 0.01);
    const std::vector<double> taus = cfg.reals("scalar.taus", {0.5, 1.0, 10.0, 100.0, 1000.0});
    const std::int64_t steps = cfg.integer("run.steps", 100);
    const double u0 = cfg.real("scalar.u0", 0.5);
    const double v0 = cfg.real("scalar.v0", 0.0);
    cfg.reject_unknown();

    const auto traces = scalar_scheme_compare(W, alpha, taus, steps, u0, v0);
    CsvWriter trace(ctx.file("trace.csv"), {"scheme", "tau", "step", "energy", "diverged"});
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& t : traces) {
        int increases = 0;
        for (std::size_t i = 0; i < t.energy.size(); ++i) {
            trace.row({to_string(t.scheme), t.tau, static_cast<std::int64_t>(i), t.energy[i], t.diverged});
            if (i > 0 && t.energy[i] > t.energy[i - 1] + 1e-12 * (1.0 + std::abs(t.energy[i - 1]))) ++increases;
        }
        runs.push_back({{"scheme", std::string(to_string(t.scheme))},
                        {"tau", t.tau},
                        {"diverged", t.diverged},
                        {"energy_increases", increases},
                        {"final_energy", t.energy.empty() ? 0.0 : t.energy.back()},
                        {"final_u", t.final_u}});
    }
    RunReport rep;
    // Divergent runs are part of the comparison and do not fail it.
    rep.summary["status"] = "completed";
    rep.summary["diverged"] = false;
    rep.summary["runs"] = runs;
    return rep;
}

/// Runs one experiment into `out_dir` (config key io.output when empty).
/// Always writes summary.json and resolved.config.
inline RunReport run_experiment(const Config& cfg, const std::string& out_dir = "") {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentKind kind = experiment_kind_from_string(cfg.str("experiment.kind"));
    const std::string configured = cfg.path("io.output", "runs/" + std::string(to_string(kind)));
    const std::string dir = out_dir.empty() ? configured : out_dir;
    RunContext ctx(cfg, dir);
    RunReport rep;
    try {
        switch (kind) {
            case ExperimentKind::GridCurve:
            case ExperimentKind::GridCircleValidate:
            case ExperimentKind::GridMinimalSurface: rep = run_grid_experiment(cfg, kind, ctx); break;
            case ExperimentKind::GraphBlobs:
            case ExperimentKind::GraphMnist: rep = run_graph_experiment(cfg, kind, ctx); break;
            case ExperimentKind::OdeCorrector: rep = run_ode_corrector(cfg, ctx); break;
            case ExperimentKind::ScalarCompare: rep = run_scalar_compare(cfg, ctx); break;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::exception& e) {
        rep.exit_code = exit_failure;
        rep.summary["status"] = "error";
        rep.summary["error"] = e.what();
    }
    rep.summary["experiment"] = std::string(to_string(kind));
    rep.summary["version"] = version_string();
    rep.summary["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.summary["config"] = cfg.resolved();
    std::ofstream(ctx.file("summary.json")) << rep.summary.dump(2) << '\n';
    std::ofstream(ctx.file("resolved.config")) << cfg.resolved_text();
    return rep;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    double value = 0.0;
    std::int64_t steps = 0;
    double final_energy = 0.0;
    bool converged = false;
};

/// Runs the configured grid or graph experiment once per value of
/// `parameter` (a config key).  With the reference stopping rule the
/// reference solution is computed once and shared.  Writes sweep.csv.
inline std::vector<SweepRow> run_sweep(Config cfg, const std::string& parameter, const std::vector<double>& values,
                                       const std::string& out_dir = "") {
    const ExperimentKind kind = experiment_kind_from_string(cfg.str("experiment.kind"));
    const std::string configured = cfg.path("io.output", "runs/sweep");
    const std::string dir = out_dir.empty() ? configured : out_dir;
    std::filesystem::create_directories(dir);
    std::vector<SweepRow> rows;
    const bool grid_kind = kind == ExperimentKind::GridCurve || kind == ExperimentKind::GridCircleValidate ||
                           kind == ExperimentKind::GridMinimalSurface;
    const bool graph_kind = kind == ExperimentKind::GraphBlobs || kind == ExperimentKind::GraphMnist;
    if (!grid_kind && !graph_kind) throw ConfigError("sweeps support grid and graph experiments only");

    if (grid_kind) {
        std::unique_ptr<GridSetup> setup;
        std::optional<ReferenceSolution> ref;
        for (double v : values) {
            Config c = cfg;
            c.set(parameter, format_double(v));
            GridRunSpec spec = grid_spec_from_config(c, kind);
            if (kind == ExperimentKind::GridCircleValidate) c.real("ode.dt", 1e-4);
            c.reject_unknown();
            spec.snapshots = 0;
            if (!setup) {
                setup = std::make_unique<GridSetup>(spec);
                if (spec.stop.rule == StopRule::Reference) ref = setup->reference(spec.stop);
            }
            const GridRunResult res = run_grid(*setup, spec, ref ? &*ref : nullptr);
            SweepRow row{v, res.steps, res.trace.empty() ? 0.0 : res.trace.back().energy.gl_energy,
                         spec.stop.rule == StopRule::MaxSteps ? res.status != RunStatus::Diverged : res.reached};
            rows.push_back(row);
        }
    } else {
        std::optional<GraphSetup> setup;
        for (double v : values) {
            Config c = cfg;
            c.set(parameter, format_double(v));
            const GraphExperimentSpec spec = graph_spec_from_config(c, kind);
            const SchemeParams params = graph_scheme_from_config(c, spec.eps);
            const std::int64_t steps = c.integer("run.steps", 50);
            c.integer("run.record_every", 1);
            c.boolean("io.write_graph", false);
            c.reject_unknown();
            if (!setup) setup.emplace(prepare_graph(spec));
            const GraphRunResult res = run_graph_scheme(*setup, params, steps, steps, spec.solver);
            rows.push_back({v, steps, res.trace.back().energy, res.status != RunStatus::Diverged});
        }
    }
    CsvWriter out((std::filesystem::path(dir) / "sweep.csv").string(), {parameter, "steps", "final_energy", "converged"});
    for (const auto& r : rows) out.row({r.value, r.steps, r.final_energy, r.converged});
    return rows;
}

}  // namespace accelgl
