// potentials.hpp
// Smoothed double-well potentials with an exactly quadratic convex part.
//
// W_R(u) = u^2 - 2 sqrt((R+1)/R) sqrt(u^2 + 1/R) + 1 + 2/R has wells at +-1,
// convex part u^2 and a concave remainder whose derivative is bounded.  The
// {0,1}-well and simplex-constrained vector variants are obtained through the
// affine map s = 2u - 1 with energy scale 1/4, which keeps the convex part
// equal to u^2 (resp. |u|^2); the linear leftover goes into the concave part.
#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace accelgl {

enum class Wells { PlusMinusOne, ZeroOne };

namespace detail {

inline void require_positive_R(double R) {
    if (!(R > 0.0) || !std::isfinite(R))
        throw std::invalid_argument("double-well smoothing parameter R must be positive, got " +
                                    std::to_string(R));
}

}  // namespace detail

/// W_R(u).  Evaluated as ((u^2 - 1) / (sqrt(u^2 + 1/R) + sqrt((R+1)/R)))^2,
/// which is algebraically identical to the defining formula, non-negative,
/// and exactly zero at u = +-1.
inline double wr_eval(double u, double R) {
    detail::require_positive_R(R);
    const double a = std::sqrt((R + 1.0) / R);
    const double b = std::sqrt(u * u + 1.0 / R);
    const double d = (u * u - 1.0) / (a + b);
    return d * d;
}

/// Derivative of the concave remainder W_R(u) - u^2.
inline double wr_concave_prime(double u, double R) {
    detail::require_positive_R(R);
    const double a = std::sqrt((R + 1.0) / R);
    return -2.0 * a * u / std::sqrt(u * u + 1.0 / R);
}

inline double wr_prime(double u, double R) { return 2.0 * u + wr_concave_prime(u, R); }

inline double wr_second(double u, double R) {
    detail::require_positive_R(R);
    const double a = std::sqrt((R + 1.0) / R);
    const double b2 = u * u + 1.0 / R;
    return 2.0 - 2.0 * a / (R * b2 * std::sqrt(b2));
}

/// Non-smooth limit (|u| - 1)^2 of W_R as R grows.
inline double wbar_eval(double u) {
    const double d = std::abs(u) - 1.0;
    return d * d;
}

/// Scalar double well of the W_R family, wells at +-1 or at {0,1}.
///
/// The convex part is always u^2, so every implicit solve involving it is
/// linear.  For ZeroOne wells, W(u) = W_R(2u - 1) / 4 and the concave part
/// carries the linear term -u + 1/4 of the re-centred quadratic.
class DoubleWell {
public:
    explicit DoubleWell(double R = 2.0, Wells wells = Wells::PlusMinusOne) : R_(R), wells_(wells) {
        detail::require_positive_R(R);
        a_ = std::sqrt((R + 1.0) / R);
        inv_R_ = 1.0 / R;
    }

    double R() const { return R_; }
    Wells wells() const { return wells_; }
    double lower_well() const { return wells_ == Wells::PlusMinusOne ? -1.0 : 0.0; }
    double upper_well() const { return 1.0; }

    double operator()(double u) const {
        if (wells_ == Wells::PlusMinusOne) return eval(u);
        return 0.25 * eval(2.0 * u - 1.0);
    }

    double convex_prime(double u) const { return 2.0 * u; }

    double concave_prime(double u) const {
        if (wells_ == Wells::PlusMinusOne) return conc(u);
        return 0.5 * conc(2.0 * u - 1.0) - 1.0;
    }

    double prime(double u) const { return convex_prime(u) + concave_prime(u); }

    double second(double u) const {
        if (wells_ == Wells::PlusMinusOne) return wr_second(u, R_);
        return wr_second(2.0 * u - 1.0, R_);
    }

private:
    double eval(double s) const {
        const double b = std::sqrt(s * s + inv_R_);
        const double d = (s * s - 1.0) / (a_ + b);
        return d * d;
    }
    double conc(double s) const { return -2.0 * a_ * s / std::sqrt(s * s + inv_R_); }

    double R_;
    Wells wells_;
    double a_ = 0.0;
    double inv_R_ = 0.0;
};

/// Vector potential W(u) = 1/4 sum_j W_R(2 u_j - 1) on the affine simplex
/// sum_j u_j = 1.  Wells are the one-hot vectors.  The constraint itself is
/// realised by projection in the solvers, not by this type.
class MultiWell {
public:
    MultiWell(int k, double R = 2.0) : k_(k), scalar_(R, Wells::ZeroOne) {
        if (k < 2) throw std::invalid_argument("multi-well potential needs k >= 2 classes");
    }

    int classes() const { return k_; }
    double R() const { return scalar_.R(); }
    const DoubleWell& component() const { return scalar_; }

    double operator()(std::span<const double> u) const {
        check(u.size());
        double sum = 0.0;
        for (double x : u) sum += scalar_(x);
        return sum;
    }

    /// Gradient of the concave remainder, componentwise.
    std::vector<double> concave_grad(std::span<const double> u) const {
        check(u.size());
        std::vector<double> g(u.size());
        for (std::size_t j = 0; j < u.size(); ++j) g[j] = scalar_.concave_prime(u[j]);
        return g;
    }

private:
    void check(std::size_t n) const {
        if (n != static_cast<std::size_t>(k_))
            throw std::invalid_argument("multi-well argument has wrong length");
    }

    int k_;
    DoubleWell scalar_;
};

inline std::vector<double> multiwell_concave_grad(std::span<const double> u, double R) {
    return MultiWell(static_cast<int>(u.size()), R).concave_grad(u);
}

/// Removes the component of g along (1,...,1): the tangent projection onto
/// the simplex constraint.
inline std::vector<double> simplex_tangent(std::vector<double> g) {
    double mean = 0.0;
    for (double x : g) mean += x;
    mean /= static_cast<double>(g.size());
    for (double& x : g) x -= mean;
    return g;
}

struct QuadratureResult {
    double value;
    double error_estimate;
};

/// c0 = int_{lo}^{hi} sqrt(2 W(z)) dz by adaptive Gauss-Kronrod (15 points),
/// split at the wells and at their midpoint so that the square-root kinks of
/// the integrand sit on panel boundaries.
template <class Potential>
QuadratureResult profile_constant_integral(const Potential& W, double lo, double hi,
                                           double abs_tol = 1e-10) {
    using boost::math::quadrature::gauss_kronrod;
    auto integrand = [&](double z) {
        const double w = W(z);
        return w > 0.0 ? std::sqrt(2.0 * w) : 0.0;
    };
    const double mid = 0.5 * (lo + hi);
    double total = 0.0, err_total = 0.0;
    for (auto [a, b] : {std::pair{lo, mid}, std::pair{mid, hi}}) {
        double err = 0.0;
        // Relative tolerance chosen so the absolute error stays below abs_tol
        // for the O(1) panel values produced by these potentials.
        const double v = gauss_kronrod<double, 15>::integrate(integrand, a, b, 30, abs_tol * 1e-2, &err);
        total += v;
        err_total += err;
    }
    if (!(err_total <= abs_tol) || !std::isfinite(total))
        throw std::runtime_error("profile constant quadrature did not converge (error estimate " +
                                 std::to_string(err_total) + ")");
    return {total, err_total};
}

inline double profile_constant_c0(const DoubleWell& W, double abs_tol = 1e-10) {
    return profile_constant_integral(W, W.lower_well(), W.upper_well(), abs_tol).value;
}

}  // namespace accelgl
