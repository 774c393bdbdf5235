#include <pnr/nonlinear_model.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace pnr::nonlinear_model {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNode = {-0.906179845938663992797626878299, -0.538469310105683091036314420700,
                                           0.0, 0.538469310105683091036314420700,
                                           0.906179845938663992797626878299};
constexpr std::array<double, 5> kGlWeight = {0.236926885056189087514264040720, 0.478628670499366468041291514836,
                                             0.568888888888888888888888888889, 0.478628670499366468041291514836,
                                             0.236926885056189087514264040720};

numerics::QuadratureConfig tighten(numerics::QuadratureConfig cfg, double factor) {
    cfg.abs_tol *= factor;
    cfg.rel_tol *= factor;
    return cfg;
}

template <class F>
auto integrate_split(F&& f, double a, double b, const std::vector<double>& cuts,
                     const numerics::QuadratureConfig& cfg) {
    using T = std::invoke_result_t<F&, double>;
    T sum = numerics::detail::zero<T>();
    double from = a;
    for (double c : cuts) {
        if (c <= from || c >= b) continue;
        sum += numerics::quad_1d(f, from, c, cfg);
        from = c;
    }
    if (b > from) sum += numerics::quad_1d(f, from, b, cfg);
    return sum;
}

bool g2_case_supported(int n, int j) {
    return (n == 2 && j == 0) || (n == 3 && (j == 0 || j == 3));
}

void require_g2_case(int n, int j) {
    if (!g2_case_supported(n, j))
        throw DomainError("correlator: supported (N, j) are (2,0), (3,0) and (3,3)");
}

int measured_count(const OutcomeAmplitude& amp) {
    const int m = static_cast<int>(amp.measured_slots().size());
    if (m < 2) throw DomainError("correlator: outcome leaves fewer than two measured photons");
    return m;
}

} // namespace

ConvolvedMode::ConvolvedMode(const pulses::Wavepacket& mode, double gamma) : mode_(mode), gamma_(gamma) {
    if (gamma < 0.0) throw DomainError("ConvolvedMode: gamma must be >= 0");
    double scale = mode.delta;
    if (gamma > 0.0) scale = std::min(scale, 1.0 / gamma);
    if (mode.detuning != 0.0) scale = std::min(scale, 1.0 / std::abs(mode.detuning));
    const double pad = 12.0 * mode.delta;
    lo_ = mode.center - pad;
    const int cells = static_cast<int>(std::ceil(2.0 * pad / (scale / 200.0)));
    h_ = 2.0 * pad / cells;
    value_.resize(cells + 1);
    slope_.resize(cells + 1);
    value_[0] = 0.0;
    const double decay = std::exp(-gamma_ * h_);
    for (int k = 0; k < cells; ++k) {
        const double x0 = lo_ + k * h_;
        const double x1 = x0 + h_;
        Complex cell = 0.0;
        for (int q = 0; q < 5; ++q) {
            const double t = x0 + 0.5 * h_ * (1.0 + kGlNode[q]);
            cell += kGlWeight[q] * std::exp(gamma_ * (t - x1)) * mode_(t);
        }
        value_[k + 1] = decay * value_[k] + 0.5 * h_ * cell;
    }
    for (int k = 0; k <= cells; ++k) slope_[k] = mode_(lo_ + k * h_) - gamma_ * value_[k];
}

Complex ConvolvedMode::F(double x) const {
    if (!(x > lo_)) return 0.0;
    const int cells = static_cast<int>(value_.size()) - 1;
    const double hi = lo_ + cells * h_;
    if (x >= hi) return value_.back() * std::exp(-gamma_ * (x - hi));
    const double u = (x - lo_) / h_;
    const int k = std::min(static_cast<int>(u), cells - 1);
    const double s = u - k;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * value_[k] + h10 * h_ * slope_[k] + h01 * value_[k + 1] + h11 * h_ * slope_[k + 1];
}

Complex ConvolvedMode::window_integral(double a, double b, double c) const {
    if (!(b > a)) return 0.0;
    Complex upper = std::exp(gamma_ * (b - c)) * F(b);
    if (std::isinf(a)) return upper;
    return upper - std::exp(gamma_ * (a - c)) * F(a);
}

OutcomeAmplitude::OutcomeAmplitude(const pulses::PulseSpec& spec, int j, const NonlinearOptions& opts)
    : spec_(spec), n_(spec.n_photons), j_(j), opts_(opts) {
    spec.validate();
    if (n_ > 3) throw UnsupportedError("output_amplitude: N > 3 not supported");
    if (j < 0 || j > n_) throw DomainError("output_amplitude: need 0 <= j <= N");
    if (!(opts.gamma >= 0.0)) throw DomainError("output_amplitude: gamma must be >= 0");
    opts.quad.validate();
    input_ = std::make_shared<const pulses::AmplitudeFn>(pulses::build_amplitude(spec));
    for (const auto& mode : input_->modes()) convolved_.emplace_back(mode, opts.gamma);

    for (const auto& s : scattering::mpk_expand(n_, j, opts.gamma).sectors()) {
        if (s.coefficient == 0.0) continue;
        Sector sec{s.coefficient, {}};
        for (const auto& [out, in] : s.delta_pairs) sec.links.push_back({true, in, out});
        for (const auto& [in, out] : s.exp_pairs) sec.links.push_back({false, in, out});
        sectors_.push_back(std::move(sec));
    }

    window_ = pulses::support_window(spec, opts.gamma);
    if (opts.gamma > 0.0) window_.second += 16.0 / opts.gamma;
    for (double c : pulses::pulse_centers(spec)) {
        for (double k : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) breakpoints_.push_back(c + k * spec.delta);
        if (opts.gamma > 0.0)
            for (double k : {1.0, 3.0, 8.0}) breakpoints_.push_back(c + 4.0 * spec.delta + k / opts.gamma);
    }
    std::sort(breakpoints_.begin(), breakpoints_.end());
    breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
    std::erase_if(breakpoints_, [&](double b) { return b <= window_.first || b >= window_.second; });

    for (int k = 0; k < n_; ++k)
        if (k != j - 1) measured_.push_back(k);
}

Complex OutcomeAmplitude::operator()(std::span<const double> tp) const {
    if (static_cast<int>(tp.size()) != n_) throw DimensionError("output_amplitude: need N output times");
    if (!std::is_sorted(tp.begin(), tp.end())) return 0.0;
    constexpr int kMaxModes = 4;
    std::array<std::array<Complex, 3>, kMaxModes> fval{};
    std::array<std::array<bool, 3>, kMaxModes> have_f{};
    std::array<std::array<Complex, 9>, kMaxModes> kval{};
    std::array<std::array<bool, 9>, kMaxModes> have_k{};
    const auto& modes = input_->modes();
    auto link_value = [&](int mode, const Link& l) -> Complex {
        if (l.delta) {
            if (!have_f[mode][l.out]) {
                fval[mode][l.out] = modes[mode](tp[l.out]);
                have_f[mode][l.out] = true;
            }
            return fval[mode][l.out];
        }
        const int idx = l.in * 3 + l.out;
        if (!have_k[mode][idx]) {
            const double a = l.in == 0 ? -INFINITY : tp[l.in - 1];
            kval[mode][idx] = convolved_[mode].window_integral(a, tp[l.in], tp[l.out]);
            have_k[mode][idx] = true;
        }
        return kval[mode][idx];
    };
    Complex total = 0.0;
    for (const auto& sec : sectors_) {
        Complex acc = 0.0;
        for (const auto& term : input_->terms()) {
            Complex prod = term.coefficient;
            for (const auto& l : sec.links) prod *= link_value(term.mode[l.in], l);
            acc += prod;
        }
        total += sec.coefficient * acc;
    }
    return input_->scale() * total;
}

Complex output_amplitude(const pulses::PulseSpec& spec, int j, std::span<const double> tp,
                         const NonlinearOptions& opts) {
    return OutcomeAmplitude(spec, j, opts)(tp);
}

double p_outcome(const OutcomeAmplitude& amp) {
    numerics::SimplexOptions so;
    so.innermost_relax = amp.options().innermost_relax;
    so.breakpoints = amp.breakpoints();
    auto f = [&](std::span<const double> tp) { return std::norm(amp(tp)); };
    return numerics::quad_simplex(f, amp.n_photons(), amp.window(), amp.options().quad, so);
}

double p_outcome(const pulses::PulseSpec& spec, int j, const NonlinearOptions& opts) {
    return p_outcome(OutcomeAmplitude(spec, j, opts));
}

namespace {

// Sum over ways of pinning the given values to measured slots, integrating
// the remaining slots over the ordered window.
double pinned_density(const OutcomeAmplitude& amp, std::span<const double> values,
                      const numerics::QuadratureConfig& cfg) {
    const int n = amp.n_photons();
    const auto& slots = amp.measured_slots();
    numerics::SimplexOptions so;
    so.innermost_relax = amp.options().innermost_relax;
    so.breakpoints = amp.breakpoints();
    auto f = [&](std::span<const double> tp) { return std::norm(amp(tp)); };
    auto one = [&](const std::array<std::optional<double>, 3>& pins) {
        bool all = true;
        for (int k = 0; k < n; ++k) all = all && pins[k].has_value();
        if (all) {
            std::array<double, 3> tp{};
            for (int k = 0; k < n; ++k) tp[k] = *pins[k];
            return f(std::span<const double>(tp.data(), n));
        }
        return numerics::quad_ordered(f, std::span<const std::optional<double>>(pins.data(), n),
                                      amp.window().first, amp.window().second, cfg, so);
    };
    double sum = 0.0;
    const int m = static_cast<int>(slots.size());
    if (values.size() == 1) {
        for (int p = 0; p < m; ++p) {
            std::array<std::optional<double>, 3> pins{};
            pins[slots[p]] = values[0];
            sum += one(pins);
        }
    } else {
        const double lo = std::min(values[0], values[1]);
        const double hi = std::max(values[0], values[1]);
        for (int p = 0; p < m; ++p)
            for (int q = p + 1; q < m; ++q) {
                std::array<std::optional<double>, 3> pins{};
                pins[slots[p]] = lo;
                pins[slots[q]] = hi;
                sum += one(pins);
            }
    }
    return sum;
}

} // namespace

double correlator_G2(const OutcomeAmplitude& amp, double t1, double t2) {
    measured_count(amp);
    const std::array<double, 2> v{t1, t2};
    return pinned_density(amp, v, amp.options().quad);
}

double correlator_G2(const pulses::PulseSpec& spec, int j, double t1, double t2, const NonlinearOptions& opts) {
    require_g2_case(spec.n_photons, j);
    return correlator_G2(OutcomeAmplitude(spec, j, opts), t1, t2);
}

double correlator_G1(const OutcomeAmplitude& amp, double t) {
    if (amp.measured_slots().empty()) throw DomainError("correlator_G1: no measured photons");
    const std::array<double, 1> v{t};
    return pinned_density(amp, v, amp.options().quad);
}

double marginal_G2(const OutcomeAmplitude& amp, double t) {
    measured_count(amp);
    const auto inner = tighten(amp.options().quad, 0.1);
    auto g = [&](double s) {
        const std::array<double, 2> v{t, s};
        return pinned_density(amp, v, inner);
    };
    const auto [lo, hi] = amp.window();
    const auto& cuts = amp.breakpoints();
    double sum = 0.0;
    if (t > lo) sum += integrate_split(g, lo, std::min(t, hi), cuts, amp.options().quad);
    if (t < hi) sum += integrate_split(g, std::max(t, lo), hi, cuts, amp.options().quad);
    return sum;
}

Eigen::MatrixXd sample_G2(const pulses::PulseSpec& spec, int j, const numerics::TimeGrid& grid,
                          const NonlinearOptions& opts) {
    require_g2_case(spec.n_photons, j);
    const OutcomeAmplitude amp(spec, j, opts);
    const int n = grid.n_points();
    Eigen::MatrixXd out(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            out(a, b) = correlator_G2(amp, grid.at(a), grid.at(b));
            out(b, a) = out(a, b);
        }
    return out;
}

double g2_zero(const pulses::PulseSpec& spec, int j, const NonlinearOptions& opts) {
    require_g2_case(spec.n_photons, j);
    const OutcomeAmplitude amp(spec, j, opts);
    const int m = measured_count(amp);
    const auto [lo, hi] = amp.window();
    const auto& cuts = amp.breakpoints();
    const auto inner = tighten(opts.quad, 0.1);
    auto diag = [&](double t) {
        const std::array<double, 2> v{t, t};
        return pinned_density(amp, v, inner);
    };
    const double num = integrate_split(diag, lo, hi, cuts, opts.quad);
    auto moments = [&](double t) {
        const double i = marginal_G2(amp, t);
        return Eigen::Vector2d(i, i * i);
    };
    const Eigen::Vector2d mom = integrate_split(moments, lo, hi, cuts, opts.quad);
    if (!(mom(1) > 1e-30)) throw DegenerateStateError("g2_zero: measured intensity vanishes");
    const double p_j = mom(0) / (m * (m - 1.0));
    return (m - 1.0) * (m - 1.0) * p_j * num / mom(1);
}

G1Check g1_from_g2_check(const pulses::PulseSpec& spec, int j, double t, const NonlinearOptions& opts) {
    if (spec.n_photons < 2) throw DomainError("g1_from_g2_check: need N >= 2");
    const OutcomeAmplitude amp(spec, j, opts);
    const int m = measured_count(amp);
    return {correlator_G1(amp, t), marginal_G2(amp, t) / (m - 1.0)};
}

} // namespace pnr::nonlinear_model
