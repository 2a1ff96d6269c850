// grid.hpp
// Periodic unit-torus grids with a spectral Laplacian.
//
// Two storage layouts share one interface.  Periodic stores all n^dim points
// and transforms with real-to-complex FFTs.  Even stores only the (n/2+1)^dim
// points x in [0.5, 1] of a field that is mirror-symmetric about 0.5 in every
// axis; the cosine transform (DCT-I) on those points is the full periodic
// spectral method restricted to symmetric fields, so results agree with the
// Periodic layout up to rounding at roughly 1/2^dim of the cost.
#pragma once

#include <accelgl/schemes.hpp>

#include <Eigen/Core>
#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace accelgl {

enum class GridSymmetry { Periodic, Even };

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

class PeriodicGrid {
public:
    using Field = Eigen::ArrayXd;
    using Point = std::array<double, 3>;

    PeriodicGrid(int dim, int n, GridSymmetry sym = GridSymmetry::Periodic) : dim_(dim), n_(n), sym_(sym) {
        if (dim < 1 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
        if (n < 2 || n % 2 != 0) throw std::invalid_argument("grid size n must be even and >= 2");
        if (sym == GridSymmetry::Even && n % 4 != 0) throw std::invalid_argument("Even layout needs n divisible by 4");
        m_ = sym == GridSymmetry::Periodic ? n : n / 2 + 1;
        size_ = 1;
        for (int a = 0; a < dim; ++a) size_ *= m_;
        norm_ = std::pow(static_cast<double>(n), dim);
        build_weights();
        build_plans();
        build_symbol();
    }

    PeriodicGrid(const PeriodicGrid&) = delete;
    PeriodicGrid& operator=(const PeriodicGrid&) = delete;

    ~PeriodicGrid() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        if (backward_) fftw_destroy_plan(backward_);
        fftw_free(real_);
        if (spare_) fftw_free(spare_);
        if (line_) fftw_free(line_);
        if (spec_) fftw_free(spec_);
    }

    int dim() const { return dim_; }
    int n() const { return n_; }
    double h() const { return 1.0 / n_; }
    GridSymmetry symmetry() const { return sym_; }
    /// Stored points per axis.
    int extent() const { return m_; }
    Eigen::Index size() const { return size_; }

    double coordinate(int j) const { return sym_ == GridSymmetry::Periodic ? j * h() : 0.5 + j * h(); }

    Point point(Eigen::Index idx) const {
        Point p{0.0, 0.0, 0.0};
        for (int a = dim_ - 1; a >= 0; --a) {
            p[a] = coordinate(static_cast<int>(idx % m_));
            idx /= m_;
        }
        return p;
    }

    Eigen::Index index(const std::array<int, 3>& j) const {
        Eigen::Index idx = 0;
        for (int a = 0; a < dim_; ++a) idx = idx * m_ + j[a];
        return idx;
    }

    /// Quadrature weights of the stored points; they sum to one.
    const Field& weights() const { return weights_; }

    double integrate(const Field& f) const { return (weights_ * f).sum(); }
    double inner(const Field& a, const Field& b) const { return (weights_ * a * b).sum(); }
    double mean(const Field& f) const { return integrate(f); }

    Field sample(const std::function<double(const Point&)>& f) const {
        Field out(size_);
        for (Eigen::Index i = 0; i < size_; ++i) out(i) = f(point(i));
        return out;
    }

    /// Solves (coeff_mass - coeff_lap * Laplacian) out = rhs.  With a mean
    /// given, the zeroth mode of the result is set to it instead.
    Field implicit_solve(const Field& rhs, double coeff_mass, double coeff_lap,
                         std::optional<double> fixed_mean = {}) const {
        if (!(coeff_mass > 0.0) || !(coeff_lap >= 0.0))
            throw std::invalid_argument("implicit_solve needs coeff_mass > 0 and coeff_lap >= 0");
        if (coeff_mass != cached_mass_ || coeff_lap != cached_lap_) {
            cached_mult_ = 1.0 / (coeff_mass + coeff_lap * ksq_);
            cached_mass_ = coeff_mass;
            cached_lap_ = coeff_lap;
        }
        return apply(rhs, cached_mult_, fixed_mean);
    }

    Field laplacian(const Field& u) const { return apply(u, minus_ksq_, 0.0); }

    /// (1/2) * integral |grad u|^2
    double dirichlet_energy(const Field& u) const { return -0.5 * inner(u, laplacian(u)); }

    /// Field on the full n^dim periodic grid, unfolding an Even layout.
    Field to_periodic(const Field& u) const {
        if (sym_ == GridSymmetry::Periodic) return u;
        Eigen::Index total = 1;
        for (int a = 0; a < dim_; ++a) total *= n_;
        Field out(total);
        for (Eigen::Index i = 0; i < total; ++i) {
            Eigen::Index rest = i, src = 0, stride = 1;
            for (int a = dim_ - 1; a >= 0; --a) {
                const int full = static_cast<int>(rest % n_);
                rest /= n_;
                src += std::abs(full - n_ / 2) * stride;
                stride *= m_;
            }
            out(i) = u(src);
        }
        return out;
    }

private:
    void build_weights() {
        weights_.resize(size_);
        for (Eigen::Index i = 0; i < size_; ++i) {
            double w = 1.0;
            if (sym_ == GridSymmetry::Even) {
                Eigen::Index rest = i;
                for (int a = 0; a < dim_; ++a) {
                    const int j = static_cast<int>(rest % m_);
                    rest /= m_;
                    if (j != 0 && j != m_ - 1) w *= 2.0;
                }
            }
            weights_(i) = w / norm_;
        }
    }

    void build_plans() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        real_ = fftw_alloc_real(static_cast<std::size_t>(size_));
        if (sym_ == GridSymmetry::Periodic) {
            std::vector<int> dims(dim_, m_);
            spec_size_ = size_ / n_ * (n_ / 2 + 1);
            spec_ = fftw_alloc_complex(static_cast<std::size_t>(spec_size_));
            forward_ = fftw_plan_dft_r2c(dim_, dims.data(), real_, spec_, FFTW_ESTIMATE);
            backward_ = fftw_plan_dft_c2r(dim_, dims.data(), spec_, real_, FFTW_ESTIMATE);
            if (!forward_ || !backward_) throw std::runtime_error("FFTW planning failed");
        } else {
            // DCT-I of length N + 1 along the last axis of every row, computed
            // from a batched real FFT of length N = n/2.
            spec_size_ = size_;
            spare_ = fftw_alloc_real(static_cast<std::size_t>(size_));
            const int N = m_ - 1;
            rows_ = size_ / m_;
            line_ = fftw_alloc_real(static_cast<std::size_t>(rows_ * N));
            spec_ = fftw_alloc_complex(static_cast<std::size_t>(rows_ * (N / 2 + 1)));
            forward_ = fftw_plan_many_dft_r2c(1, &N, static_cast<int>(rows_), line_, nullptr, 1, N, spec_, nullptr, 1,
                                              N / 2 + 1, FFTW_ESTIMATE);
            if (!forward_) throw std::runtime_error("FFTW planning failed");
            sin_.resize(N / 2 + 1);
            cos_.resize(N / 2 + 1);
            for (int j = 0; j <= N / 2; ++j) {
                sin_[j] = std::sin(std::numbers::pi * j / N);
                cos_[j] = std::cos(std::numbers::pi * j / N);
            }
            row_sum_.resize(rows_);
        }
    }

    // (2 pi)^2 |k|^2 for every stored spectral coefficient.
    void build_symbol() {
        ksq_.resize(spec_size_);
        const int last = sym_ == GridSymmetry::Periodic ? n_ / 2 + 1 : m_;
        const double two_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
        for (Eigen::Index i = 0; i < spec_size_; ++i) {
            Eigen::Index rest = i;
            double k2 = 0.0;
            for (int a = dim_ - 1; a >= 0; --a) {
                const int len = a == dim_ - 1 ? last : m_;
                int j = static_cast<int>(rest % len);
                rest /= len;
                if (sym_ == GridSymmetry::Periodic && a != dim_ - 1 && j > n_ / 2) j -= n_;
                k2 += static_cast<double>(j) * j;
            }
            ksq_(i) = two_pi_sq * k2;
        }
        minus_ksq_ = -ksq_;
    }

    // Unnormalised DCT-I, F_k = (f_0 + (-1)^k f_N)/2 + sum_{0<j<N} f_j cos(pi j k / N),
    // of every row of `data` (rows_ rows of length N + 1), in place.
    void dct_rows(double* data) const {
        const int N = m_ - 1, H = N / 2;
        for (Eigen::Index r = 0; r < rows_; ++r) {
            const double* f = data + r * m_;
            double* y = line_ + r * N;
            y[0] = 0.5 * (f[0] + f[N]);
            double sum = 0.5 * (f[0] - f[N]);
            for (int j = 1; j < H; ++j) {
                const double y1 = 0.5 * (f[j] + f[N - j]);
                const double y2 = f[j] - f[N - j];
                y[j] = y1 - sin_[j] * y2;
                y[N - j] = y1 + sin_[j] * y2;
                sum += cos_[j] * y2;
            }
            y[H] = f[H];
            row_sum_[r] = sum;
        }
        fftw_execute(forward_);
        for (Eigen::Index r = 0; r < rows_; ++r) {
            const fftw_complex* c = spec_ + r * (H + 1);
            double* F = data + r * m_;
            F[0] = c[0][0];
            F[N] = c[H][0];
            double odd = row_sum_[r];
            F[1] = odd;
            for (int k = 1; k < H; ++k) {
                F[2 * k] = c[k][0];
                odd -= c[k][1];
                F[2 * k + 1] = odd;
            }
        }
    }

    // Transforms every axis; each pass moves the last axis to the front, so
    // after dim passes the layout is the original one.
    void dct_all(double*& a, double*& b) const {
        using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        for (int pass = 0; pass < dim_; ++pass) {
            dct_rows(a);
            if (dim_ > 1) {
                Eigen::Map<RowMat> in(a, rows_, m_);
                Eigen::Map<RowMat> out(b, m_, rows_);
                out.noalias() = in.transpose();
                std::swap(a, b);
            }
        }
    }

    Field apply(const Field& u, const Eigen::ArrayXd& mult, std::optional<double> fixed_mean) const {
        if (u.size() != size_) throw std::invalid_argument("field size does not match grid");
        Field out(size_);
        if (sym_ == GridSymmetry::Periodic) {
            std::memcpy(real_, u.data(), sizeof(double) * size_);
            fftw_execute(forward_);
            const double inv = 1.0 / norm_;
            for (Eigen::Index i = 0; i < spec_size_; ++i) {
                const double s = mult(i) * inv;
                spec_[i][0] *= s;
                spec_[i][1] *= s;
            }
            if (fixed_mean) {
                spec_[0][0] = *fixed_mean;
                spec_[0][1] = 0.0;
            }
            fftw_execute(backward_);
            std::memcpy(out.data(), real_, sizeof(double) * size_);
            return out;
        }
        double* a = real_;
        double* b = spare_;
        std::memcpy(a, u.data(), sizeof(double) * size_);
        dct_all(a, b);
        // The DCT-I applied twice is (N/2)^dim times the identity.
        const double scale = std::pow(2.0 / (m_ - 1), dim_);
        Eigen::Map<Eigen::ArrayXd>(a, size_) *= mult * scale;
        // A lone zeroth coefficient c transforms back to the constant c / 2^dim.
        if (fixed_mean) a[0] = std::ldexp(*fixed_mean, dim_);
        dct_all(a, b);
        std::memcpy(out.data(), a, sizeof(double) * size_);
        return out;
    }

    int dim_, n_, m_;
    GridSymmetry sym_;
    Eigen::Index size_ = 0, spec_size_ = 0;
    double norm_ = 1.0;
    Field weights_;
    Eigen::ArrayXd ksq_, minus_ksq_;
    mutable Eigen::ArrayXd cached_mult_;
    mutable double cached_mass_ = -1.0, cached_lap_ = -1.0;
    double* real_ = nullptr;
    double* spare_ = nullptr;
    double* line_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
    Eigen::Index rows_ = 0;
    std::vector<double> sin_, cos_;
    mutable std::vector<double> row_sum_;
};

/// Returns u with mean p; only the zeroth Fourier mode changes.
inline Eigen::ArrayXd enforce_mean(const PeriodicGrid& grid, const Eigen::ArrayXd& u, double p) {
    return u + (p - grid.mean(u));
}

/// Minimises E(u) = integral |grad u|^2 / 2 + W(u) / eps^2 = F_eps(u) / eps
/// over fields on the grid, optionally with the mean pinned to `volume`.
template <class Potential>
class GridBackend {
public:
    using Field = Eigen::ArrayXd;

    GridBackend(const PeriodicGrid& grid, Potential W, double eps, std::optional<double> volume = {})
        : grid_(&grid), W_(std::move(W)), eps_(eps), volume_(volume) {
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    }

    Field implicit_solve(const Field& rhs, double s) const {
        return grid_->implicit_solve(rhs, 1.0 + 2.0 * s / (eps_ * eps_), s, volume_);
    }
    Field explicit_grad(const Field& u) const {
        const double inv = 1.0 / (eps_ * eps_);
        return u.unaryExpr([this, inv](double x) { return W_.concave_prime(x) * inv; });
    }
    Field gradient(const Field& u) const {
        const double inv = 1.0 / (eps_ * eps_);
        Field g = u.unaryExpr([this, inv](double x) { return W_.prime(x) * inv; }) - grid_->laplacian(u);
        if (volume_) g -= grid_->mean(g);
        return g;
    }
    double objective(const Field& u) const {
        const Field w = u.unaryExpr([this](double x) { return W_(x); });
        return grid_->dirichlet_energy(u) + grid_->integrate(w) / (eps_ * eps_);
    }
    double inner(const Field& a, const Field& b) const { return grid_->inner(a, b); }
    double energy_scale() const { return eps_; }
    double mean(const Field& u) const { return grid_->mean(u); }

    /// F_eps(u) = integral (eps/2)|grad u|^2 + W(u)/eps.
    double gl_energy(const Field& u) const { return eps_ * objective(u); }

    const PeriodicGrid& grid() const { return *grid_; }
    const Potential& potential() const { return W_; }
    double eps() const { return eps_; }
    std::optional<double> volume() const { return volume_; }

private:
    const PeriodicGrid* grid_;
    Potential W_;
    double eps_;
    std::optional<double> volume_;
};

template <class Potential>
double gl_energy(const PeriodicGrid& grid, const Eigen::ArrayXd& u, double eps, const Potential& W) {
    return GridBackend<Potential>(grid, W, eps).gl_energy(u);
}

// ---------------------------------------------------------------------------
// Initial conditions

/// Maps a scaled signed distance (positive inside) to a phase value.
using Transition = std::function<double(double)>;

namespace detail {
inline double torus_delta(double a, double b) {
    double d = std::abs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

inline double torus_distance(const PeriodicGrid::Point& x, const PeriodicGrid::Point& c, int dim) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double d = torus_delta(x[a], c[a]);
        s += d * d;
    }
    return std::sqrt(s);
}
}  // namespace detail

/// +1 inside the ball, -1 outside; with a transition, u = profile(sd / eps)
/// where sd is the signed distance to the sphere.
inline Eigen::ArrayXd disk_init(const PeriodicGrid& grid, const PeriodicGrid::Point& center, double radius,
                                double eps = 0.0, const Transition& profile = {}) {
    if (!(radius > 0.0) || radius >= 0.5) throw std::invalid_argument("disk radius must lie in (0, 0.5)");
    if (profile && !(eps > 0.0)) throw std::invalid_argument("smoothed disk needs eps > 0");
    const int dim = grid.dim();
    return grid.sample([&](const PeriodicGrid::Point& x) {
        const double sd = radius - detail::torus_distance(x, center, dim);
        if (profile) return profile(sd / eps);
        return sd > 0.0 ? 1.0 : -1.0;
    });
}

/// Indicator of a C: the square [0.2, 0.8]^2 minus the notch [0.45, 0.8] x [0.35, 0.65].
inline Eigen::ArrayXd cshape_init(const PeriodicGrid& grid) {
    if (grid.dim() != 2) throw std::invalid_argument("cshape_init needs a 2D grid");
    return grid.sample([](const PeriodicGrid::Point& p) {
        const bool square = p[0] >= 0.2 && p[0] <= 0.8 && p[1] >= 0.2 && p[1] <= 0.8;
        const bool notch = p[0] >= 0.45 && p[0] <= 0.8 && p[1] >= 0.35 && p[1] <= 0.65;
        return square && !notch ? 1.0 : -1.0;
    });
}

/// Three orthogonal cylinders of radius 0.3 through the cell centre.
inline Eigen::ArrayXd schwarzp_init(const PeriodicGrid& grid) {
    if (grid.dim() != 3) throw std::invalid_argument("schwarzp_init needs a 3D grid");
    return grid.sample([](const PeriodicGrid::Point& p) {
        const double x = p[0] - 0.5, y = p[1] - 0.5, z = p[2] - 0.5;
        const double r2 = 0.09;
        const bool inside = x * x + y * y < r2 || y * y + z * z < r2 || x * x + z * z < r2;
        return inside ? 1.0 : -1.0;
    });
}

/// Volume of the cylinder union used by schwarzp_init.
inline double schwarzp_cylinder_volume() {
    const double r = 0.3;
    return 3.0 * std::numbers::pi * r * r - 3.0 * 16.0 * r * r * r / 3.0 + 8.0 * (2.0 - std::sqrt(2.0)) * r * r * r;
}

/// +1 where the gyroid nodal function is negative.
inline Eigen::ArrayXd gyroid_init(const PeriodicGrid& grid) {
    if (grid.dim() != 3) throw std::invalid_argument("gyroid_init needs a 3D grid");
    const double tp = 2.0 * std::numbers::pi;
    return grid.sample([tp](const PeriodicGrid::Point& p) {
        const double x = tp * (p[0] - 0.5), y = tp * (p[1] - 0.5), z = tp * (p[2] - 0.5);
        const double f = std::cos(x) * std::sin(y) + std::cos(y) * std::sin(z) + std::cos(z) * std::sin(x);
        return f < 0.0 ? 1.0 : -1.0;
    });
}

/// Ten (by default) gradient steps of size tau_tilde from rough initial data.
template <SchemeBackend B>
typename B::Field warm_up(const typename B::Field& u0, const B& backend, double tau_tilde, int steps = 10) {
    auto s = at_rest(u0);
    const auto p = SchemeParams::gradient_descent(tau_tilde, 1.0);
    for (int i = 0; i < steps; ++i) gd_step(s, p, backend);
    return s.u;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct AreaPerimeter {
    double area = 0.0;
    double perimeter = 0.0;
    double raw_area = 0.0;  // before clamping
    bool clamped = false;
};

/// A = integral (u+1)/2, P = 2 sqrt(pi A), assuming a single disk.
inline AreaPerimeter area_perimeter_estimate(const PeriodicGrid& grid, const Eigen::ArrayXd& u) {
    if (grid.dim() != 2) throw std::invalid_argument("area/perimeter estimate needs a 2D grid");
    AreaPerimeter out;
    out.raw_area = 0.5 * (grid.mean(u) + 1.0);
    out.area = out.raw_area;
    if (out.area < 0.0) {
        out.area = 0.0;
        out.clamped = true;
    }
    out.perimeter = 2.0 * std::sqrt(std::numbers::pi * out.area);
    return out;
}

/// u = 1 - amplitude * exp(1 - 1/(1 - (r/support)^2)) inside the support ball.
inline Eigen::ArrayXd bump_init(const PeriodicGrid& grid, const PeriodicGrid::Point& center, double support,
                                double amplitude) {
    const int dim = grid.dim();
    return grid.sample([&](const PeriodicGrid::Point& x) {
        const double q = detail::torus_distance(x, center, dim) / support;
        if (q >= 1.0) return 1.0;
        return 1.0 - amplitude * std::exp(1.0 - 1.0 / (1.0 - q * q));
    });
}

struct FiniteSpeedResult {
    double max_deviation = 0.0;
    std::int64_t steps = 0;
    bool diverged = false;
};

/// sup over t <= t_max of |u(t, probe) - 1|, starting at rest from u0.
template <class Potential>
FiniteSpeedResult finite_speed_probe(const GridBackend<Potential>& backend, const Eigen::ArrayXd& u0,
                                     Eigen::Index probe, double t_max, const SchemeParams& params) {
    params.validate();
    FiniteSpeedResult out;
    auto s = at_rest(u0);
    out.max_deviation = std::abs(s.u(probe) - 1.0);
    const double dt = params.dt();
    const auto n_steps = static_cast<std::int64_t>(std::floor(t_max / dt + 1e-9));
    for (std::int64_t n = 0; n < n_steps; ++n) {
        advance(s, params, backend);
        const double dev = std::abs(s.u(probe) - 1.0);
        if (!std::isfinite(dev)) {
            out.diverged = true;
            break;
        }
        out.max_deviation = std::max(out.max_deviation, dev);
    }
    out.steps = s.step;
    return out;
}

// ---------------------------------------------------------------------------
// Snapshots

/// Binary PGM (P5) of a 2D field, or of the z = 1/2 slice of a 3D field.
/// Values in [lo, hi] map affinely to 0..255 and are clamped outside.
inline void write_pgm(const std::string& path, const PeriodicGrid& grid, const Eigen::ArrayXd& u, double lo = -1.0,
                      double hi = 1.0) {
    if (grid.dim() < 2) throw std::invalid_argument("snapshots need a 2D or 3D grid");
    const Eigen::ArrayXd full = grid.to_periodic(u);
    const int n = grid.n();
    const Eigen::Index offset = grid.dim() == 3 ? static_cast<Eigen::Index>(n / 2) : 0;
    const Eigen::Index stride = grid.dim() == 3 ? n : 1;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = full((static_cast<Eigen::Index>(i) * n + j) * stride + offset);
            double t = (v - lo) / (hi - lo);
            t = std::clamp(t, 0.0, 1.0);
            pixels[static_cast<std::size_t>(i) * n + j] = static_cast<unsigned char>(std::lround(255.0 * t));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write snapshot " + path);
    out << "P5\n" << n << ' ' << n << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace accelgl
