// ode.hpp
// One-dimensional transition profiles, their first-order corrector, and the
// radius law r'' = (1 - r'^2)(-1/r - alpha r') of a shrinking circle.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace accelgl {

// ---------------------------------------------------------------------------
// Optimal profile

/// Tabulated heteroclinic phi with phi(0) = 0 and phi' = sqrt(2 W(phi)) on a
/// uniform grid over [-x_max, x_max].
struct Profile {
    double x_max = 0.0;
    std::vector<double> x;
    std::vector<double> phi;
    std::vector<double> dphi;

    double spacing() const { return x[1] - x[0]; }

    /// Cubic Hermite interpolation; constant continuation beyond the table.
    double operator()(double s) const {
        if (s <= x.front()) return phi.front();
        if (s >= x.back()) return phi.back();
        const double dx = spacing();
        auto i = static_cast<std::size_t>((s - x.front()) / dx);
        i = std::min(i, x.size() - 2);
        const double t = (s - x[i]) / dx;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * phi[i] + (t3 - 2 * t2 + t) * dx * dphi[i] + (-2 * t3 + 3 * t2) * phi[i + 1] +
               (t3 - t2) * dx * dphi[i + 1];
    }
};

namespace detail {
// Signed so that +-1 attract the integration from either side.
template <class Potential>
double profile_rhs(const Potential& W, double p) {
    const double s = std::sqrt(std::max(0.0, 2.0 * W(p)));
    return p * p < 1.0 ? s : -s;
}
}  // namespace detail

/// Integrates phi' = sqrt(2 W(phi)) from phi(0) = 0 with RK4 (eight substeps
/// per table interval).  Wells must be +-1.  Throws if |phi(+-x_max)| does
/// not come within `tail_tol` of 1.
template <class Potential>
Profile solve_profile(const Potential& W, double x_max = 12.0, int n_points = 4096, double tail_tol = 1e-10) {
    if (!(x_max > 0.0) || n_points < 8) throw std::invalid_argument("solve_profile needs x_max > 0, n_points >= 8");
    const int half = n_points / 2;
    const double dx = x_max / half;
    const int sub = 8;
    const double hs = dx / sub;
    std::vector<double> right(half + 1);
    right[0] = 0.0;
    double p = 0.0;
    for (int i = 1; i <= half; ++i) {
        for (int k = 0; k < sub; ++k) {
            const double k1 = detail::profile_rhs(W, p);
            const double k2 = detail::profile_rhs(W, p + 0.5 * hs * k1);
            const double k3 = detail::profile_rhs(W, p + 0.5 * hs * k2);
            const double k4 = detail::profile_rhs(W, p + hs * k3);
            p += hs / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        right[i] = p;
    }
    if (std::abs(right[half] - 1.0) > tail_tol) {
        throw std::runtime_error("profile does not reach the well within x_max = " + std::to_string(x_max) +
                                 " (|phi - 1| = " + std::to_string(std::abs(right[half] - 1.0)) + ")");
    }
    Profile out;
    out.x_max = x_max;
    const int total = 2 * half + 1;
    out.x.resize(total);
    out.phi.resize(total);
    out.dphi.resize(total);
    for (int i = 0; i < total; ++i) {
        const int j = i - half;
        out.x[i] = j * dx;
        // Odd extension; the potential is assumed even.
        out.phi[i] = j >= 0 ? right[j] : -right[-j];
        out.dphi[i] = detail::profile_rhs(W, out.phi[i]);
    }
    return out;
}

/// solve_profile with x_max = 12 grown in steps of 4 until the tail
/// tolerance is met, keeping the table spacing of the 12 / 4096 default.
template <class Potential>
Profile solve_profile_auto(const Potential& W, double tail_tol = 1e-10, double x_limit = 60.0) {
    const double spacing = 24.0 / 4096.0;
    for (double x_max = 12.0; x_max <= x_limit; x_max += 4.0) {
        const int n_points = 2 * static_cast<int>(std::lround(x_max / spacing));
        try {
            return solve_profile(W, x_max, n_points, tail_tol);
        } catch (const std::runtime_error&) {
        }
    }
    throw std::runtime_error("profile does not reach the well within x_limit");
}

/// Composite Simpson rule on a uniform table with an even number of intervals.
inline double simpson(const std::vector<double>& f, double dx) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson needs an odd number of samples >= 3");
    double s = f.front() + f.back();
    for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
    return s * dx / 3.0;
}

/// integral phi'^2 / 2 + W(phi) dx, which equals c0 for the optimal profile.
template <class Potential>
double profile_energy(const Profile& prof, const Potential& W) {
    std::vector<double> f(prof.x.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * prof.dphi[i] * prof.dphi[i] + W(prof.phi[i]);
    return simpson(f, prof.spacing());
}

/// Fourth-order central second difference at interior points (zero at the
/// two outermost points on each side).
inline std::vector<double> second_difference(const std::vector<double>& f, double dx) {
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t i = 2; i + 2 < f.size(); ++i)
        out[i] = (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]) / (12 * dx * dx);
    return out;
}

/// sup |phi'' - W'(phi)| over the interior, by finite differences.
template <class Potential>
double profile_residual(const Profile& prof, const Potential& W) {
    const auto d2 = second_difference(prof.phi, prof.spacing());
    double r = 0.0;
    for (std::size_t i = 2; i + 2 < d2.size(); ++i) r = std::max(r, std::abs(d2[i] - W.prime(prof.phi[i])));
    return r;
}

// ---------------------------------------------------------------------------
// Corrector

/// Even solution of psi'' - W''(phi) psi = phi' + 2 x phi'' with
/// integral phi'' psi' = 0, tabulated on [-x_max, x_max].
struct Corrector {
    double x_max = 0.0;
    double c = 0.0;  // psi(0)
    std::vector<double> x;
    std::vector<double> psi;
    std::vector<double> dpsi;
    std::vector<double> phi;
    std::vector<double> dphi;
    std::vector<double> ddphi;
    bool reduced = false;  // x_max was cut back after a blow-up

    double spacing() const { return x[1] - x[0]; }
};

namespace detail {

struct ShootState {
    long double phi, psi, dpsi;
};

template <class Potential>
ShootState shoot_rhs(const Potential& W, long double x, const ShootState& s) {
    const double p = static_cast<double>(s.phi);
    const long double dphi = profile_rhs(W, p);
    const long double ddphi = W.prime(p);
    return {dphi, s.dpsi, static_cast<long double>(W.second(p)) * s.psi + dphi + 2.0L * x * ddphi};
}

struct ShootTable {
    std::vector<double> phi, psi, dpsi;
    bool blew_up = false;
};

// psi(0) = psi0, psi'(0) = 0, integrated on [0, x_max].
template <class Potential>
ShootTable shoot(const Potential& W, double x_max, int half, double blow_up, double psi0 = 0.0) {
    const int sub = 8;
    const long double dx = static_cast<long double>(x_max) / half;
    const long double hs = dx / sub;
    ShootTable t;
    t.phi.assign(half + 1, 0.0);
    t.psi.assign(half + 1, 0.0);
    t.dpsi.assign(half + 1, 0.0);
    ShootState s{0.0L, static_cast<long double>(psi0), 0.0L};
    t.psi[0] = psi0;
    auto axpy = [](const ShootState& a, long double h, const ShootState& k) {
        return ShootState{a.phi + h * k.phi, a.psi + h * k.psi, a.dpsi + h * k.dpsi};
    };
    long double x = 0.0L;
    for (int i = 1; i <= half; ++i) {
        for (int k = 0; k < sub; ++k) {
            const ShootState k1 = shoot_rhs(W, x, s);
            const ShootState k2 = shoot_rhs(W, x + hs / 2, axpy(s, hs / 2, k1));
            const ShootState k3 = shoot_rhs(W, x + hs / 2, axpy(s, hs / 2, k2));
            const ShootState k4 = shoot_rhs(W, x + hs, axpy(s, hs, k3));
            s.phi += hs / 6 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi);
            s.psi += hs / 6 * (k1.psi + 2 * k2.psi + 2 * k3.psi + k4.psi);
            s.dpsi += hs / 6 * (k1.dpsi + 2 * k2.dpsi + 2 * k3.dpsi + k4.dpsi);
            x += hs;
        }
        t.phi[i] = static_cast<double>(s.phi);
        t.psi[i] = static_cast<double>(s.psi);
        t.dpsi[i] = static_cast<double>(s.dpsi);
        if (!std::isfinite(t.psi[i]) || std::abs(t.psi[i]) > blow_up) {
            t.blew_up = true;
            return t;
        }
    }
    return t;
}

}  // namespace detail

/// Integral of phi'' psi_c' over [0, x_max] for psi_c = psi_0 + (c/phi'(0)) phi'.
/// The map is affine in c; solve_corrector finds its root.
inline double corrector_orthogonality(const std::vector<double>& ddphi, const std::vector<double>& dpsi0,
                                      double dphi0, double c, double dx) {
    std::vector<double> f(ddphi.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = ddphi[i] * (dpsi0[i] + c / dphi0 * ddphi[i]);
    return simpson(f, dx);
}

/// Integral of phi'' psi_c' over [0, x_max] for the solution shot directly
/// from psi(0) = c, psi'(0) = 0.
template <class Potential>
double shooting_orthogonality(const Potential& W, double c, double x_max = 12.0, int n_points = 4096) {
    const int half = 2 * (n_points / 4);
    const auto t = detail::shoot(W, x_max, half, std::numeric_limits<double>::infinity(), c);
    std::vector<double> f(half + 1);
    for (int i = 0; i <= half; ++i) f[i] = W.prime(t.phi[i]) * t.dpsi[i];
    return simpson(f, x_max / half);
}

/// Shoots for psi on [0, x_max] in extended precision, fixes psi(0) by the
/// orthogonality condition and reflects evenly.  On blow-up of the growing
/// mode, x_max shrinks by 20% and a warning goes to `log`.
template <class Potential>
Corrector solve_corrector(const Potential& W, double x_max = 12.0, int n_points = 4096, double blow_up = 1e3,
                          std::ostream* log = &std::cerr) {
    const double spacing = 2.0 * x_max / n_points;
    Corrector out;
    for (int attempt = 0; attempt < 20; ++attempt) {
        const int half = 2 * static_cast<int>(std::lround(x_max / spacing / 2));
        const auto t = detail::shoot(W, x_max, half, blow_up);
        if (t.blew_up) {
            if (log) *log << "warning: corrector blew up before x_max = " << x_max << ", retrying shorter\n";
            x_max *= 0.8;
            out.reduced = true;
            continue;
        }
        const double dx = x_max / half;
        std::vector<double> dphi(half + 1), ddphi(half + 1);
        for (int i = 0; i <= half; ++i) {
            dphi[i] = detail::profile_rhs(W, t.phi[i]);
            ddphi[i] = W.prime(t.phi[i]);
        }
        const double dphi0 = dphi[0];
        const double a = corrector_orthogonality(ddphi, t.dpsi, dphi0, 0.0, dx);
        const double b = corrector_orthogonality(ddphi, t.dpsi, dphi0, 1.0, dx) - a;
        const double c = -a / b;
        out.x_max = x_max;
        out.c = c;
        const int total = 2 * half + 1;
        out.x.resize(total);
        out.psi.resize(total);
        out.dpsi.resize(total);
        out.phi.resize(total);
        out.dphi.resize(total);
        out.ddphi.resize(total);
        for (int i = 0; i < total; ++i) {
            const int j = i - half;
            const int k = std::abs(j);
            const double sign = j >= 0 ? 1.0 : -1.0;
            out.x[i] = j * dx;
            out.psi[i] = t.psi[k] + c / dphi0 * dphi[k];
            out.dpsi[i] = sign * (t.dpsi[k] + c / dphi0 * ddphi[k]);
            out.phi[i] = sign * t.phi[k];
            out.dphi[i] = dphi[k];
            out.ddphi[i] = sign * ddphi[k];
        }
        return out;
    }
    throw std::runtime_error("corrector shooting failed");
}

struct CorrectorChecks {
    double orthogonality = 0.0;        // |integral phi'' psi'|
    double orthogonality_scale = 0.0;  // ||phi''|| ||psi'||
    double evenness = 0.0;             // sup |psi(x) - psi(-x)|
    double residual = 0.0;             // sup |psi'' - W''(phi) psi - phi' - 2 x phi''|
};

template <class Potential>
CorrectorChecks check_corrector(const Corrector& cr, const Potential& W) {
    CorrectorChecks out;
    const double dx = cr.spacing();
    const std::size_t n = cr.x.size();
    std::vector<double> prod(n), a2(n), b2(n);
    for (std::size_t i = 0; i < n; ++i) {
        prod[i] = cr.ddphi[i] * cr.dpsi[i];
        a2[i] = cr.ddphi[i] * cr.ddphi[i];
        b2[i] = cr.dpsi[i] * cr.dpsi[i];
    }
    out.orthogonality = std::abs(simpson(prod, dx));
    out.orthogonality_scale = std::sqrt(simpson(a2, dx) * simpson(b2, dx));
    for (std::size_t i = 0; i < n; ++i) out.evenness = std::max(out.evenness, std::abs(cr.psi[i] - cr.psi[n - 1 - i]));
    const auto d2 = second_difference(cr.psi, dx);
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double r = d2[i] - W.second(cr.phi[i]) * cr.psi[i] - cr.dphi[i] - 2.0 * cr.x[i] * cr.ddphi[i];
        out.residual = std::max(out.residual, std::abs(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Circle radius law

struct CircleState {
    double t = 0.0;
    double r = 0.0;
    double rdot = 0.0;
};

struct CircleTrajectory {
    double alpha = 0.0;
    std::vector<CircleState> states;
    bool vanished = false;
};

/// r'' as a function of r, r' and the friction alpha.
inline double circle_acceleration(double r, double rdot, double alpha) {
    return (1.0 - rdot * rdot) * (-1.0 / r - alpha * rdot);
}

namespace detail {
inline std::array<double, 2> circle_rhs(double alpha, double r, double v) { return {v, circle_acceleration(r, v, alpha)}; }
}  // namespace detail

/// Fixed-step fifth-order Adams-Bashforth predictor with a four-step
/// Adams-Moulton corrector (PECE), started by four RK4 steps.  Stops at t_end
/// or when r <= r_stop (vanished).
inline CircleTrajectory circle_ode_solve(double r0, double rdot0, double alpha, double dt, double t_end,
                                         double r_stop = 0.01, int record_every = 1) {
    if (!(r0 > 0.0)) throw std::invalid_argument("r0 must be positive");
    if (!(std::abs(rdot0) < 1.0)) throw std::invalid_argument("|rdot0| must be below 1");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (record_every < 1) record_every = 1;
    using V = std::array<double, 2>;
    CircleTrajectory out;
    out.alpha = alpha;
    V y{r0, rdot0};
    double t = 0.0;
    out.states.push_back({t, y[0], y[1]});
    std::vector<V> f;  // f[k] is the derivative k steps back
    f.push_back(detail::circle_rhs(alpha, y[0], y[1]));
    const auto n_steps = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
    for (std::int64_t n = 0; n < n_steps; ++n) {
        if (f.size() < 5) {
            auto g = [&](const V& z) { return detail::circle_rhs(alpha, z[0], z[1]); };
            const V k1 = f.front();
            const V k2 = g({y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]});
            const V k3 = g({y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]});
            const V k4 = g({y[0] + dt * k3[0], y[1] + dt * k3[1]});
            for (int c = 0; c < 2; ++c) y[c] += dt / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
        } else {
            V pred;
            for (int c = 0; c < 2; ++c)
                pred[c] = y[c] + dt / 720.0 *
                                     (1901 * f[0][c] - 2774 * f[1][c] + 2616 * f[2][c] - 1274 * f[3][c] + 251 * f[4][c]);
            const V fp = detail::circle_rhs(alpha, pred[0], pred[1]);
            for (int c = 0; c < 2; ++c)
                y[c] += dt / 720.0 * (251 * fp[c] + 646 * f[0][c] - 264 * f[1][c] + 106 * f[2][c] - 19 * f[3][c]);
        }
        t = (n + 1) * dt;
        f.insert(f.begin(), detail::circle_rhs(alpha, y[0], y[1]));
        if (f.size() > 5) f.pop_back();
        if (!std::isfinite(y[0]) || y[0] <= r_stop) {
            out.vanished = true;
            out.states.push_back({t, y[0], y[1]});
            return out;
        }
        if ((n + 1) % record_every == 0 || n + 1 == n_steps) out.states.push_back({t, y[0], y[1]});
    }
    return out;
}

/// Radius at time t under the gradient-flow law r' = -1/r, and whether the
/// circle has already vanished.
struct CircleRadius {
    double r = 0.0;
    bool vanished = false;
};

inline CircleRadius allen_cahn_circle(double r0, double t) {
    const double r2 = r0 * r0 - 2.0 * t;
    if (r2 <= 0.0) return {0.0, true};
    return {std::sqrt(r2), false};
}

inline double allen_cahn_vanishing_time(double r0) { return 0.5 * r0 * r0; }

struct PerimeterPrediction {
    double plain = 0.0;
    double adjusted = 0.0;
};

/// plain = c0 2 pi r, adjusted = c0 pi r ((1 - v^2)^(1/2) + (1 - v^2)^(-1/2)).
inline PerimeterPrediction velocity_adjusted_perimeter(double r, double rdot, double c0) {
    if (!(std::abs(rdot) < 1.0)) throw std::invalid_argument("|rdot| must be below 1");
    const double s = std::sqrt(1.0 - rdot * rdot);
    return {c0 * 2.0 * std::numbers::pi * r, c0 * std::numbers::pi * r * (s + 1.0 / s)};
}

/// Linear interpolation of r and rdot at time t (clamped to the trajectory).
inline CircleState interpolate(const CircleTrajectory& tr, double t) {
    const auto& s = tr.states;
    if (t <= s.front().t) return s.front();
    if (t >= s.back().t) return s.back();
    auto it = std::lower_bound(s.begin(), s.end(), t, [](const CircleState& a, double v) { return a.t < v; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    return {t, a.r + w * (b.r - a.r), a.rdot + w * (b.rdot - a.rdot)};
}

/// CSV: t, r, rdot, plain_perimeter, adjusted_perimeter (perimeters in units of c0).
inline void write_trajectory_csv(const std::string& path, const CircleTrajectory& tr, double c0 = 1.0) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,r,rdot,plain_perimeter,adjusted_perimeter\n" << std::setprecision(17);
    for (const auto& s : tr.states) {
        const auto p = velocity_adjusted_perimeter(s.r, std::clamp(s.rdot, -1.0 + 1e-15, 1.0 - 1e-15), c0);
        out << s.t << ',' << s.r << ',' << s.rdot << ',' << p.plain << ',' << p.adjusted << '\n';
    }
}

}  // namespace accelgl
