#include <pnr/pulses.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace pnr::pulses {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int n) {
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

} // namespace

std::string to_string(PulseFamily f) {
    switch (f) {
    case PulseFamily::GaussianFock: return "GaussianFock";
    case PulseFamily::SeparatedGaussians: return "SeparatedGaussians";
    case PulseFamily::HermiteGaussPair: return "HermiteGaussPair";
    }
    return "?";
}

PulseFamily parse_family(const std::string& name) {
    if (name == "GaussianFock") return PulseFamily::GaussianFock;
    if (name == "SeparatedGaussians") return PulseFamily::SeparatedGaussians;
    if (name == "HermiteGaussPair") return PulseFamily::HermiteGaussPair;
    throw DomainError("unknown pulse family '" + name + "'");
}

void PulseSpec::validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("PulseSpec: delta must be positive");
    if (n_photons < 1) throw DomainError("PulseSpec: need at least one photon");
    if (!std::isfinite(detuning)) throw DomainError("PulseSpec: detuning must be finite");
    if (family == PulseFamily::HermiteGaussPair && n_photons != 2)
        throw DomainError("PulseSpec: HermiteGaussPair is a two-photon state");
    if (family == PulseFamily::SeparatedGaussians && !(separation >= 0.0 && std::isfinite(separation)))
        throw DomainError("PulseSpec: separation must be >= 0");
    if (sign != 1 && sign != -1) throw DomainError("PulseSpec: sign must be +1 or -1");
}

Complex gaussian_h(double delta, double detuning, double t) {
    const double amp = std::sqrt(2.0 / (delta * std::sqrt(kPi))) * std::exp(-2.0 * t * t / (delta * delta));
    return std::polar(amp, -detuning * t);
}

Complex gaussian_h_freq(double delta, double detuning, double omega) {
    const double d = omega - detuning;
    return std::sqrt(delta / (2.0 * std::sqrt(kPi))) * std::exp(-d * d * delta * delta / 8.0);
}

double hermite_gauss(int n, double delta, double t) {
    if (!(delta > 0.0)) throw DomainError("hermite_gauss: delta must be positive");
    const double pref = 1.0 / (std::ldexp(1.0, n - 1) * factorial(n) * std::sqrt(kPi) * delta);
    return std::sqrt(pref) * std::exp(-2.0 * t * t / (delta * delta)) * numerics::hermite_poly(n, 2.0 * t / delta);
}

Complex Wavepacket::operator()(double t) const {
    const double s = t - center;
    return std::polar(hermite_gauss(order, delta, s), -detuning * s);
}

Complex overlap(const Wavepacket& a, const Wavepacket& b) {
    std::vector<double> cuts = {a.center - 12 * a.delta, a.center, a.center + 12 * a.delta,
                                b.center - 12 * b.delta, b.center, b.center + 12 * b.delta};
    std::sort(cuts.begin(), cuts.end());
    numerics::QuadratureConfig cfg{1e-15, 1e-13, 4000};
    auto f = [&](double t) { return std::conj(a(t)) * b(t); };
    Complex sum = numerics::quad_1d(f, -INFINITY, cuts.front(), cfg);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) sum += numerics::quad_1d(f, cuts[i], cuts[i + 1], cfg);
    sum += numerics::quad_1d(f, cuts.back(), INFINITY, cfg);
    return sum;
}

Eigen::MatrixXcd gram_matrix(std::span<const Wavepacket> packets) {
    const auto n = static_cast<Eigen::Index>(packets.size());
    Eigen::MatrixXcd s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i, i) = overlap(packets[i], packets[i]).real();
        for (Eigen::Index j = i + 1; j < n; ++j) {
            s(i, j) = overlap(packets[i], packets[j]);
            s(j, i) = std::conj(s(i, j));
        }
    }
    return s;
}

Complex permanent(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) throw DimensionError("permanent: matrix must be square");
    const int n = static_cast<int>(m.rows());
    if (n > 8) throw UnsupportedError("permanent: dimension above 8");
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    Complex sum = 0.0;
    do {
        Complex prod = 1.0;
        for (int i = 0; i < n; ++i) prod *= m(i, p[i]);
        sum += prod;
    } while (std::next_permutation(p.begin(), p.end()));
    return sum;
}

double gram_normalization(const Eigen::MatrixXcd& gram) {
    if (gram.rows() != gram.cols()) throw DimensionError("gram_normalization: matrix must be square");
    const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
    if (!gram.allFinite() || (gram - gram.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw IllConditionedError("gram_normalization: overlap matrix is not Hermitian");
    for (Eigen::Index i = 0; i < gram.rows(); ++i)
        if (!(gram(i, i).real() > 1e-12)) throw IllConditionedError("gram_normalization: zero-norm wavepacket");
    const Complex perm = permanent(gram);
    if (!(perm.real() > 1e-12) || std::abs(perm.imag()) > 1e-9 * std::abs(perm.real()))
        throw IllConditionedError("gram_normalization: permanent not positive");
    return 1.0 / std::sqrt(perm.real());
}

double gram_normalization(std::span<const Wavepacket> packets) {
    return gram_normalization(gram_matrix(packets));
}

AmplitudeFn::AmplitudeFn(int n_photons, std::vector<Wavepacket> modes, std::vector<ProductTerm> terms,
                         double norm_factor)
    : n_(n_photons), modes_(std::move(modes)), terms_(std::move(terms)), norm_(norm_factor) {
    if (n_ < 1) throw DomainError("AmplitudeFn: need at least one photon");
    for (const auto& term : terms_) {
        if (static_cast<int>(term.mode.size()) != n_) throw DimensionError("AmplitudeFn: term arity mismatch");
        for (int m : term.mode)
            if (m < 0 || m >= static_cast<int>(modes_.size())) throw DimensionError("AmplitudeFn: bad mode index");
    }
    overlaps_ = gram_matrix(modes_);
    // The bare g is symmetrised by construction, so the ordered integral is
    // 1/N! of the full one, which factorises over the product terms.
    Complex full = 0.0;
    for (const auto& r : terms_)
        for (const auto& s : terms_) {
            Complex prod = std::conj(r.coefficient) * s.coefficient;
            for (int k = 0; k < n_; ++k) prod *= overlaps_(r.mode[k], s.mode[k]);
            full += prod;
        }
    measured_norm_ = norm_ * norm_ * full.real() / factorial(n_);
    if (!(measured_norm_ > 1e-300)) throw IllConditionedError("AmplitudeFn: zero-norm amplitude");
    scale_ = norm_ / std::sqrt(measured_norm_);
}

Complex AmplitudeFn::eval(std::span<const double> t) const {
    if (static_cast<int>(t.size()) != n_) throw DimensionError("AmplitudeFn::eval: wrong number of times");
    std::vector<Complex> cache(modes_.size() * n_);
    std::vector<bool> have(cache.size(), false);
    Complex sum = 0.0;
    for (const auto& term : terms_) {
        Complex prod = term.coefficient;
        for (int k = 0; k < n_; ++k) {
            const std::size_t idx = term.mode[k] * n_ + k;
            if (!have[idx]) {
                cache[idx] = modes_[term.mode[k]](t[k]);
                have[idx] = true;
            }
            prod *= cache[idx];
        }
        sum += prod;
    }
    return sum;
}

std::vector<double> pulse_centers(const PulseSpec& spec) {
    if (spec.family != PulseFamily::SeparatedGaussians) return {0.0};
    std::vector<double> c(spec.n_photons);
    for (int i = 0; i < spec.n_photons; ++i) c[i] = i * spec.separation;
    return c;
}

std::pair<double, double> support_window(const PulseSpec& spec, double gamma) {
    const auto c = pulse_centers(spec);
    const double pad = gamma > 0.0 ? std::max(8.0 * spec.delta, 8.0 / gamma) : 8.0 * spec.delta;
    return {c.front() - pad, c.back() + pad};
}

AmplitudeFn build_amplitude(const PulseSpec& spec) {
    spec.validate();
    const int n = spec.n_photons;
    switch (spec.family) {
    case PulseFamily::GaussianFock: {
        std::vector<Wavepacket> modes{{0, spec.delta, 0.0, spec.detuning}};
        std::vector<ProductTerm> terms{{1.0, std::vector<int>(n, 0)}};
        return AmplitudeFn(n, std::move(modes), std::move(terms), std::sqrt(factorial(n)));
    }
    case PulseFamily::SeparatedGaussians: {
        if (n > 4) throw UnsupportedError("build_amplitude: SeparatedGaussians limited to N <= 4");
        std::vector<Wavepacket> modes;
        for (double c : pulse_centers(spec)) modes.push_back({0, spec.delta, c, spec.detuning});
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<ProductTerm> terms;
        do {
            // g = sum_perm prod_i h_i(t_perm(i)): slot perm(i) carries mode i.
            std::vector<int> slot_mode(n);
            for (int i = 0; i < n; ++i) slot_mode[perm[i]] = i;
            terms.push_back({1.0, std::move(slot_mode)});
        } while (std::next_permutation(perm.begin(), perm.end()));
        const double norm = gram_normalization(std::span<const Wavepacket>(modes));
        return AmplitudeFn(n, std::move(modes), std::move(terms), norm);
    }
    case PulseFamily::HermiteGaussPair: {
        std::vector<Wavepacket> modes{{0, spec.delta, 0.0, spec.detuning}, {1, spec.delta, 0.0, spec.detuning}};
        std::vector<ProductTerm> terms{{1.0, {0, 0}}, {static_cast<double>(spec.sign), {1, 1}}};
        return AmplitudeFn(2, std::move(modes), std::move(terms), 1.0);
    }
    }
    throw UnsupportedError("build_amplitude: unknown family");
}

} // namespace pnr::pulses
