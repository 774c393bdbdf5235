#pragma once

// Shared numerical kernels: adaptive Gauss-Kronrod quadrature in one
// dimension and over ordered simplices, fixed-step RK4 propagation of
// non-Hermitian Schroedinger equations, Hermite polynomials and a
// splittable deterministic random stream.

#include <pnr/errors.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <type_traits>
#include <vector>

namespace pnr::numerics {

/// Uniform time discretisation, in units of 1/gamma_g.
class TimeGrid {
public:
    TimeGrid(double t_start, double t_end, int n_points);

    /// Smallest uniform grid on [t_start, t_end] whose spacing does not exceed max_dt.
    static TimeGrid with_max_step(double t_start, double t_end, double max_dt);

    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }
    int n_points() const noexcept { return n_points_; }
    int n_steps() const noexcept { return n_points_ - 1; }
    double dt() const noexcept { return (t_end_ - t_start_) / (n_points_ - 1); }
    double at(int i) const noexcept { return t_start_ + i * dt(); }

    bool operator==(const TimeGrid&) const = default;

private:
    double t_start_;
    double t_end_;
    int n_points_;
};

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_subdivisions = 2000;

    /// Throws DomainError unless at least one tolerance is positive.
    void validate() const;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
double magnitude(const T& v) {
    if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, Complex>)
        return std::abs(v);
    else
        return v.cwiseAbs().maxCoeff();
}

template <class T>
T zero() {
    if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, Complex>)
        return T{};
    else
        return T::Zero();
}

template <class T>
Complex leading(const T& v) {
    if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, Complex>)
        return Complex(v);
    else
        return Complex(v(0));
}

template <class T>
struct Panel {
    double a;
    double b;
    T value;
    double error;
    double abs_value;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class T, class F>
Panel<T> kronrod15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::array<T, 15> fv;
    fv[14] = f(center);
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        fv[2 * j] = f(center - dx);
        fv[2 * j + 1] = f(center + dx);
    }
    T kronrod = fv[14] * kWgk[7];
    T gauss = fv[14] * kWg[3];
    double abs_sum = magnitude(fv[14]) * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const T pair = fv[2 * j] + fv[2 * j + 1];
        kronrod += pair * kWgk[j];
        abs_sum += (magnitude(fv[2 * j]) + magnitude(fv[2 * j + 1])) * kWgk[j];
        if (j % 2 == 1) gauss += pair * kWg[j / 2];
    }
    const T mean = kronrod * 0.5;
    double asc = magnitude(fv[14] - mean) * kWgk[7];
    for (int j = 0; j < 7; ++j)
        asc += (magnitude(fv[2 * j] - mean) + magnitude(fv[2 * j + 1] - mean)) * kWgk[j];

    const double scale = std::abs(half);
    double err = magnitude(kronrod - gauss) * scale;
    const double resasc = asc * scale;
    const double resabs = abs_sum * scale;
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50 * eps)) err = std::max(50 * eps * resabs, err);
    return {a, b, kronrod * half, err, resabs};
}

template <class F>
using QuadResult = std::invoke_result_t<F&, double>;

template <class T, class F>
T adaptive_finite(F& f, double a, double b, const QuadratureConfig& cfg) {
    std::priority_queue<Panel<T>> panels;
    auto first = kronrod15<T>(f, a, b);
    T total = first.value;
    double total_err = first.error;
    double total_abs = first.abs_value;
    panels.push(first);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    int subdivisions = 0;
    auto done = [&] {
        const double target = std::max(cfg.abs_tol, cfg.rel_tol * magnitude(total));
        return total_err <= target || total_err <= 50 * eps * total_abs;
    };
    while (!done()) {
        if (subdivisions >= cfg.max_subdivisions) {
            throw ConvergenceError("quad_1d: tolerance not met after max_subdivisions",
                                   leading(total), total_err);
        }
        Panel<T> worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval exhausted at machine resolution; accept what we have.
            break;
        }
        auto left = kronrod15<T>(f, worst.a, mid);
        auto right = kronrod15<T>(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_abs += left.abs_value + right.abs_value - worst.abs_value;
        panels.push(left);
        panels.push(right);
        ++subdivisions;
    }
    // Re-sum to remove running-update drift.
    T sum = zero<T>();
    while (!panels.empty()) {
        sum += panels.top().value;
        panels.pop();
    }
    if (!std::isfinite(magnitude(sum))) throw NumericalInstabilityError("quad_1d: non-finite integral");
    return sum;
}

} // namespace detail

/// Adaptive 15-point Gauss-Kronrod integral of f over [a, b]. Infinite limits
/// are mapped to finite ones by rational substitution. The result type follows
/// f (real or complex). Throws ConvergenceError carrying the best estimate if
/// max(abs_tol, rel_tol*|I|) cannot be met within cfg.max_subdivisions.
template <class F>
auto quad_1d(F&& f, double a, double b, const QuadratureConfig& cfg = {}) -> detail::QuadResult<F> {
    using T = detail::QuadResult<F>;
    cfg.validate();
    if (a == b) return detail::zero<T>();
    if (a > b) return -quad_1d(f, b, a, cfg);
    const bool lo_inf = std::isinf(a);
    const bool hi_inf = std::isinf(b);
    if (lo_inf && hi_inf) {
        auto g = [&](double u) -> T {
            const double d = 1.0 - u * u;
            return f(u / d) * ((1.0 + u * u) / (d * d));
        };
        return detail::adaptive_finite<T>(g, -1.0, 1.0, cfg);
    }
    if (hi_inf) {
        auto g = [&](double u) -> T {
            const double d = 1.0 - u;
            return f(a + u / d) * (1.0 / (d * d));
        };
        return detail::adaptive_finite<T>(g, 0.0, 1.0, cfg);
    }
    if (lo_inf) {
        auto g = [&](double u) -> T { return f(b - (1.0 - u) / u) * (1.0 / (u * u)); };
        return detail::adaptive_finite<T>(g, 0.0, 1.0, cfg);
    }
    auto g = [&](double x) -> T { return f(x); };
    return detail::adaptive_finite<T>(g, a, b, cfg);
}

/// Largest number of ordered integration variables quad_ordered accepts.
inline constexpr int kMaxSimplexDim = 4;

struct SimplexOptions {
    /// Factor applied to the tolerances at every nesting level.
    double level_tightening = 0.1;
    /// Factor applied to the innermost level's tolerances (>1 relaxes).
    double innermost_relax = 1.0;
    /// Sorted interior points at which every level splits its range.
    std::vector<double> breakpoints;
};

namespace detail {

template <class T, class F>
struct OrderedIntegrator {
    F& f;
    int n;
    std::array<double, kMaxSimplexDim> x{};
    std::array<bool, kMaxSimplexDim> fixed{};
    std::vector<int> free_slots{};
    double lo = 0.0;
    double hi = 0.0;
    std::vector<QuadratureConfig> level_cfg{};
    std::vector<double> breakpoints{};

    double upper_bound(int slot) const {
        for (int k = slot + 1; k < n; ++k)
            if (fixed[k]) return x[k];
        return hi;
    }

    T level(std::size_t depth) {
        if (depth == free_slots.size()) return f(std::span<const double>(x.data(), n));
        const int slot = free_slots[depth];
        const double lower = slot == 0 ? lo : x[slot - 1];
        const double upper = upper_bound(slot);
        if (!(upper > lower)) return zero<T>();
        if (!breakpoints.empty()) {
            T sum = zero<T>();
            double from = lower;
            auto g = [&](double v) -> T {
                x[slot] = v;
                return level(depth + 1);
            };
            for (double bp : breakpoints) {
                if (bp <= from || bp >= upper) continue;
                sum += quad_1d(g, from, bp, level_cfg[depth]);
                from = bp;
            }
            sum += quad_1d(g, from, upper, level_cfg[depth]);
            return sum;
        }
        auto g = [&](double v) -> T {
            x[slot] = v;
            return level(depth + 1);
        };
        return quad_1d(g, lower, upper, level_cfg[depth]);
    }
};

} // namespace detail

/// Integral of f over the ordered region lo <= s_1 <= ... <= s_N <= hi where
/// the slots holding a value are pinned and the empty slots are integrated
/// (iterated adaptive quadrature, outermost = first free slot). Pinned values
/// must themselves be ordered. Throws UnsupportedError for N > 4.
template <class F>
auto quad_ordered(F&& f, std::span<const std::optional<double>> slots, double lo, double hi,
                  const QuadratureConfig& cfg = {}, const SimplexOptions& opts = {})
    -> std::invoke_result_t<F&, std::span<const double>> {
    using T = std::invoke_result_t<F&, std::span<const double>>;
    const int n = static_cast<int>(slots.size());
    if (n < 1 || n > kMaxSimplexDim)
        throw UnsupportedError("quad_ordered: number of ordered variables must be in 1..4");
    cfg.validate();
    detail::OrderedIntegrator<T, std::remove_reference_t<F>> it{f, n};
    it.lo = lo;
    it.hi = hi;
    it.breakpoints = opts.breakpoints;
    std::sort(it.breakpoints.begin(), it.breakpoints.end());
    double previous = lo;
    for (int k = 0; k < n; ++k) {
        if (slots[k]) {
            it.fixed[k] = true;
            it.x[k] = *slots[k];
            if (*slots[k] < previous) return detail::zero<T>();
            previous = *slots[k];
        } else {
            it.free_slots.push_back(k);
        }
    }
    if (previous > hi) return detail::zero<T>();
    if (it.free_slots.empty()) return f(std::span<const double>(it.x.data(), n));

    const double width = std::isfinite(hi - lo) ? std::max(hi - lo, 1.0) : 1.0;
    QuadratureConfig level = cfg;
    for (std::size_t d = 0; d < it.free_slots.size(); ++d) {
        it.level_cfg.push_back(level);
        level.abs_tol = level.abs_tol * opts.level_tightening / width;
        level.rel_tol = level.rel_tol * opts.level_tightening;
    }
    auto& inner = it.level_cfg.back();
    if (it.level_cfg.size() > 1) {
        inner.abs_tol *= opts.innermost_relax;
        inner.rel_tol *= opts.innermost_relax;
    }
    return it.level(0);
}

/// Integral over the ordered simplex t_1 <= ... <= t_N inside window.
template <class F>
auto quad_simplex(F&& f, int n, std::pair<double, double> window, const QuadratureConfig& cfg = {},
                  const SimplexOptions& opts = {}) {
    if (n < 1 || n > kMaxSimplexDim)
        throw UnsupportedError("quad_simplex: dimension must be in 1..4");
    std::array<std::optional<double>, kMaxSimplexDim> slots{};
    return quad_ordered(std::forward<F>(f), std::span<const std::optional<double>>(slots.data(), n),
                        window.first, window.second, cfg, opts);
}

/// Physicists' Hermite polynomial H_n(x), n <= 10.
double hermite_poly(int n, double x);

/// One classical RK4 step of d|psi>/dt = -i H_eff(t)|psi>. `apply` computes
/// H_eff(t)*psi for a given time.
template <class Apply>
Eigen::VectorXcd rk4_step(const Eigen::VectorXcd& psi, Apply&& apply, double t, double h) {
    const Complex mi(0.0, -1.0);
    Eigen::VectorXcd k1 = mi * apply(t, psi);
    Eigen::VectorXcd k2 = mi * apply(t + 0.5 * h, Eigen::VectorXcd(psi + (0.5 * h) * k1));
    Eigen::VectorXcd k3 = mi * apply(t + 0.5 * h, Eigen::VectorXcd(psi + (0.5 * h) * k2));
    Eigen::VectorXcd k4 = mi * apply(t + h, Eigen::VectorXcd(psi + h * k3));
    return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step RK4 propagation from t0 to t1. dt must divide t1 - t0 up to
/// rounding; throws NumericalInstabilityError if the state stops being finite.
template <class Apply>
Eigen::VectorXcd evolve_nonunitary(Eigen::VectorXcd state, Apply&& apply, double t0, double t1, double dt) {
    if (!(dt > 0.0)) throw DomainError("evolve_nonunitary: dt must be positive");
    const double span = t1 - t0;
    const double steps_real = span / dt;
    const long steps = std::lround(steps_real);
    if (steps < 0 || std::abs(steps_real - steps) > 1e-8 * std::max(1.0, std::abs(steps_real)))
        throw DomainError("evolve_nonunitary: dt does not divide t1 - t0");
    for (long s = 0; s < steps; ++s) {
        state = rk4_step(state, apply, t0 + s * dt, dt);
        if (!state.allFinite()) throw NumericalInstabilityError("evolve_nonunitary: state diverged");
    }
    return state;
}

/// Deterministic uniform(0,1) stream addressed by (seed, stream_id). Distinct
/// stream ids are decorrelated by SplitMix64 mixing before seeding a
/// 64-bit Mersenne twister.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    /// Uniform double in the open interval (0, 1) with 53 random bits.
    double uniform();
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Convenience: RngStream(seed, stream_id).
RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id);

/// SplitMix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace pnr::numerics
