// schemes.hpp
// Time steppers for F + G with F convex (quadratic, treated implicitly) and
// G concave (treated explicitly), all of the momentum form
//
//     x_{n+1} = x_n + tau v_n - eta g_n,    v_{n+1} = rho (v_n - tau g_n).
//
// The steppers never see grids or graphs.  A backend supplies the implicit
// solve z = (I + s A)^{-1} rhs (including any affine constraint projection),
// the explicit gradient grad G(x) + f_bd, the objective F + G and the inner
// product of its Hilbert space.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace accelgl {

enum class Scheme { GD, CINEMA, FISTA, Nesterov };

inline std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::GD: return "gd";
        case Scheme::CINEMA: return "cinema";
        case Scheme::FISTA: return "fista";
        case Scheme::Nesterov: return "nesterov";
    }
    return "?";
}

inline Scheme scheme_from_string(std::string_view s) {
    if (s == "gd") return Scheme::GD;
    if (s == "cinema") return Scheme::CINEMA;
    if (s == "fista") return Scheme::FISTA;
    if (s == "nesterov") return Scheme::Nesterov;
    throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

enum class RhoSchedule { Constant, NesterovConvex };

struct SchemeParams {
    Scheme scheme = Scheme::CINEMA;
    double tau = 1.0;    // momentum step
    double eta = 1.0;    // gradient step (GD: the descent step h)
    double rho = 1.0;    // velocity decay
    double alpha = 0.0;  // friction, informational once rho is set
    double eps = 1.0;    // interface width
    RhoSchedule schedule = RhoSchedule::Constant;

    /// eta = tau^2, rho = 1 / (1 + alpha tau).
    static SchemeParams momentum(Scheme s, double tau, double alpha, double eps) {
        SchemeParams p;
        p.scheme = s;
        p.tau = tau;
        p.eta = tau * tau;
        p.alpha = alpha;
        p.rho = 1.0 / (1.0 + alpha * tau);
        p.eps = eps;
        p.validate();
        return p;
    }

    static SchemeParams gradient_descent(double h, double eps) {
        SchemeParams p;
        p.scheme = Scheme::GD;
        p.tau = 0.0;
        p.eta = h;
        p.rho = 1.0;
        p.eps = eps;
        p.validate();
        return p;
    }

    /// Decay factor used in step n.
    double rho_at(std::int64_t n) const {
        if (schedule == RhoSchedule::NesterovConvex) return static_cast<double>(n) / (n + 3.0);
        return rho;
    }

    /// Physical time advanced per step.
    double dt() const { return scheme == Scheme::GD ? eta : tau; }

    void validate() const {
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
        if (!(eta > 0.0)) throw std::invalid_argument("eta (step size) must be positive");
        if (scheme != Scheme::GD) {
            if (!(tau >= 0.0)) throw std::invalid_argument("tau must be non-negative");
            if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
            if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
        }
    }
};

template <class Field>
struct SchemeState {
    Field u;
    Field v;
    std::int64_t step = 0;
    double time = 0.0;
};

/// Starts at rest, as an optimisation run does.
template <class Field>
SchemeState<Field> at_rest(Field u0) {
    Field v = Field::Zero(u0.rows(), u0.cols());
    return SchemeState<Field>{std::move(u0), std::move(v), 0, 0.0};
}

template <class B>
concept SchemeBackend = requires(const B& b, const typename B::Field& f, double s) {
    typename B::Field;
    { b.implicit_solve(f, s) } -> std::convertible_to<typename B::Field>;
    { b.explicit_grad(f) } -> std::convertible_to<typename B::Field>;
    { b.objective(f) } -> std::convertible_to<double>;
    { b.inner(f, f) } -> std::convertible_to<double>;
    { b.energy_scale() } -> std::convertible_to<double>;
    { b.mean(f) } -> std::convertible_to<double>;
};

/// Backends that can also evaluate the full (projected) gradient, as the
/// explicit Nesterov scheme needs.
template <class B>
concept GradientBackend = SchemeBackend<B> && requires(const B& b, const typename B::Field& f) {
    { b.gradient(f) } -> std::convertible_to<typename B::Field>;
};

/// Per-step quantities needed to verify the discrete energy law.
struct StepDiagnostics {
    double g_norm2 = 0.0;  // |g_n|^2
    double v_norm2 = 0.0;  // |v_n|^2 before the step
};

template <SchemeBackend B>
StepDiagnostics gd_step(SchemeState<typename B::Field>& s, const SchemeParams& p, const B& backend) {
    using Field = typename B::Field;
    const double h = p.eta;
    Field rhs = s.u - h * backend.explicit_grad(s.u);
    Field next = backend.implicit_solve(rhs, h);
    Field g = (s.u - next) / h;
    StepDiagnostics d{backend.inner(g, g), backend.inner(s.v, s.v)};
    s.u = std::move(next);
    s.step += 1;
    s.time += h;
    return d;
}

template <SchemeBackend B>
StepDiagnostics cinema_step(SchemeState<typename B::Field>& s, const SchemeParams& p, const B& backend) {
    using Field = typename B::Field;
    Field advanced = s.u + p.tau * s.v;
    Field rhs = advanced - p.eta * backend.explicit_grad(s.u);
    Field next = backend.implicit_solve(rhs, p.eta);
    Field g = (advanced - next) / p.eta;
    StepDiagnostics d{backend.inner(g, g), backend.inner(s.v, s.v)};
    s.v = p.rho_at(s.step) * (s.v - p.tau * g);
    s.u = std::move(next);
    s.step += 1;
    s.time += p.tau;
    return d;
}

template <SchemeBackend B>
StepDiagnostics fista_step(SchemeState<typename B::Field>& s, const SchemeParams& p, const B& backend) {
    using Field = typename B::Field;
    Field half = s.u + p.tau * s.v;
    Field rhs = half - p.eta * backend.explicit_grad(half);
    Field next = backend.implicit_solve(rhs, p.eta);
    Field g = (half - next) / p.eta;
    StepDiagnostics d{backend.inner(g, g), backend.inner(s.v, s.v)};
    s.v = p.rho_at(s.step) * (s.v - p.tau * g);
    s.u = std::move(next);
    s.step += 1;
    s.time += p.tau;
    return d;
}

template <GradientBackend B>
StepDiagnostics nesterov_step(SchemeState<typename B::Field>& s, const SchemeParams& p, const B& backend) {
    using Field = typename B::Field;
    Field half = s.u + p.tau * s.v;
    Field g = backend.gradient(half);
    StepDiagnostics d{backend.inner(g, g), backend.inner(s.v, s.v)};
    s.u = half - p.eta * g;
    s.v = p.rho_at(s.step) * (s.v - p.tau * g);
    s.step += 1;
    s.time += p.tau;
    return d;
}

template <SchemeBackend B>
StepDiagnostics advance(SchemeState<typename B::Field>& s, const SchemeParams& p, const B& backend) {
    switch (p.scheme) {
        case Scheme::GD: return gd_step(s, p, backend);
        case Scheme::CINEMA: return cinema_step(s, p, backend);
        case Scheme::FISTA: return fista_step(s, p, backend);
        case Scheme::Nesterov:
            if constexpr (GradientBackend<B>) {
                return nesterov_step(s, p, backend);
            } else {
                throw std::invalid_argument("backend does not provide an explicit full gradient");
            }
    }
    throw std::logic_error("unhandled scheme");
}

/// One row of an energy trace.
///
/// gl_energy is the reported Ginzburg-Landau energy (energy_scale * objective).
/// kinetic/total follow the continuous convention, scale * |v|^2 / 2, while
/// scheme_energy is the discrete CINEMA quantity objective + |v|^2 / (2 rho^2).
struct EnergyRecord {
    std::int64_t step = 0;
    double time = 0.0;
    double gl_energy = 0.0;
    double kinetic_energy = 0.0;
    double total_energy = 0.0;
    double mean_u = 0.0;
    double objective = 0.0;
    double scheme_energy = 0.0;
};

template <SchemeBackend B>
EnergyRecord record_energy(const SchemeState<typename B::Field>& s, const SchemeParams& p, const B& backend) {
    EnergyRecord r;
    r.step = s.step;
    r.time = s.time;
    r.objective = backend.objective(s.u);
    const double scale = backend.energy_scale();
    const double v2 = backend.inner(s.v, s.v);
    r.gl_energy = scale * r.objective;
    r.kinetic_energy = 0.5 * scale * v2;
    r.total_energy = r.gl_energy + r.kinetic_energy;
    r.mean_u = backend.mean(s.u);
    const double rho = p.scheme == Scheme::GD ? 1.0 : p.rho;
    r.scheme_energy = r.objective + v2 / (2.0 * rho * rho);
    return r;
}

enum class RunStatus { Completed, Converged, Diverged };

inline std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "completed";
        case RunStatus::Converged: return "converged";
        case RunStatus::Diverged: return "diverged";
    }
    return "?";
}

/// Totals above this are treated as blow-up.
inline constexpr double divergence_threshold = 1e12;

template <class Field>
bool all_finite(const Field& f) {
    return f.allFinite();
}

struct RunOptions {
    std::int64_t max_steps = 100;
    std::int64_t record_every = 1;  // 0: only the initial and final states
};

/// Observer hook: called after every recorded state; returning true stops the
/// run with status Converged.
template <class Field>
using StepObserver = std::function<bool(const SchemeState<Field>&, const EnergyRecord&)>;

template <class Field>
struct RunResult {
    RunStatus status = RunStatus::Completed;
    std::vector<EnergyRecord> trace;
    std::vector<StepDiagnostics> diagnostics;  // one per step taken
};

/// Runs up to max_steps steps, recording energies and checking for
/// divergence after every step.  Divergence ends the run with a status rather
/// than an exception so stability sweeps can be tabulated.
template <SchemeBackend B>
RunResult<typename B::Field> run_scheme(SchemeState<typename B::Field>& s, const SchemeParams& p,
                                        const B& backend, const RunOptions& opts,
                                        const StepObserver<typename B::Field>& observer = {}) {
    using Field = typename B::Field;
    p.validate();
    RunResult<Field> out;
    auto record = [&](bool force) -> bool {
        const bool due = force || (opts.record_every > 0 && s.step % opts.record_every == 0);
        if (!due) return false;
        EnergyRecord r = record_energy(s, p, backend);
        out.trace.push_back(r);
        return observer && observer(s, r);
    };
    if (record(true)) {
        out.status = RunStatus::Converged;
        return out;
    }
    for (std::int64_t n = 0; n < opts.max_steps; ++n) {
        out.diagnostics.push_back(advance(s, p, backend));
        if (!all_finite(s.u) || !all_finite(s.v)) {
            out.status = RunStatus::Diverged;
            return out;
        }
        const bool last = n + 1 == opts.max_steps;
        const bool due = last || (opts.record_every > 0 && s.step % opts.record_every == 0);
        if (due) {
            if (record(true)) {
                out.status = RunStatus::Converged;
                return out;
            }
            const auto& r = out.trace.back();
            if (!std::isfinite(r.scheme_energy) || std::abs(r.scheme_energy) > divergence_threshold) {
                out.status = RunStatus::Diverged;
                return out;
            }
        }
    }
    return out;
}

/// Zero-dimensional backend: independent scalar degrees of freedom with no
/// coupling (Laplacian = 0), minimising sum_i W(u_i) / eps^2.
template <class Potential>
class PointwiseBackend {
public:
    using Field = Eigen::ArrayXd;

    PointwiseBackend(Potential W, double eps) : W_(std::move(W)), eps_(eps) {
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    }

    Field implicit_solve(const Field& rhs, double step) const {
        return rhs / (1.0 + 2.0 * step / (eps_ * eps_));
    }
    Field explicit_grad(const Field& u) const {
        return u.unaryExpr([this](double x) { return W_.concave_prime(x); }) / (eps_ * eps_);
    }
    Field gradient(const Field& u) const {
        return u.unaryExpr([this](double x) { return W_.prime(x); }) / (eps_ * eps_);
    }
    double objective(const Field& u) const {
        double sum = 0.0;
        for (double x : u) sum += W_(x);
        return sum / (eps_ * eps_);
    }
    double inner(const Field& a, const Field& b) const { return (a * b).sum(); }
    double energy_scale() const { return eps_; }
    double mean(const Field& u) const { return u.mean(); }

private:
    Potential W_;
    double eps_;
};

struct ScalarTrace {
    Scheme scheme;
    double tau;
    bool diverged = false;
    std::vector<double> energy;  // e_n = W(u_n) + |v_n|^2 / (2 rho^2)
    double final_u = 0.0;
};

/// Nesterov, FISTA and CINEMA on the single-variable problem min W_R(u), with
/// eta = tau^2 and rho = 1/(1 + alpha tau), for each tau in tau_list.
template <class Potential>
std::vector<ScalarTrace> scalar_scheme_compare(const Potential& W, double alpha,
                                               const std::vector<double>& tau_list, int n_steps,
                                               double u0, double v0) {
    PointwiseBackend<Potential> backend(W, 1.0);
    std::vector<ScalarTrace> out;
    for (double tau : tau_list) {
        for (Scheme scheme : {Scheme::Nesterov, Scheme::FISTA, Scheme::CINEMA}) {
            SchemeParams p = SchemeParams::momentum(scheme, tau, alpha, 1.0);
            SchemeState<Eigen::ArrayXd> s{Eigen::ArrayXd::Constant(1, u0), Eigen::ArrayXd::Constant(1, v0), 0, 0.0};
            RunResult<Eigen::ArrayXd> r = run_scheme(s, p, backend, RunOptions{n_steps, 1});
            ScalarTrace t{scheme, tau, r.status == RunStatus::Diverged, {}, s.u(0)};
            for (const auto& rec : r.trace) t.energy.push_back(rec.scheme_energy);
            out.push_back(std::move(t));
        }
    }
    return out;
}

}  // namespace accelgl
