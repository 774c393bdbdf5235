#include <pnr/linear_model.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace pnr::linear_model {

void LinearConfig::validate() const {
    if (!(delta_gamma > 0.0) || !std::isfinite(delta_gamma)) throw DomainError("LinearConfig: delta_gamma must be > 0");
    if (!std::isfinite(detuning)) throw DomainError("LinearConfig: detuning must be finite");
    if (n_emitters < 0) throw DomainError("LinearConfig: n_emitters must be >= 0");
    quad.validate();
}

double p_subtract_single(int lambda, const LinearConfig& cfg) {
    cfg.validate();
    if (lambda < 0) throw DomainError("p_subtract_single: lambda must be >= 0");
    if (lambda == 0) return 0.0;
    const double d = cfg.delta_gamma;
    // omega = detuning + 2u/delta turns |h(omega)|^2 d omega into exp(-u^2)/sqrt(pi) du.
    auto f = [&](double u) {
        const double w = cfg.detuning + 2.0 * u / d;
        const double pass = -std::expm1(lambda * std::log1p(-1.0 / (1.0 + w * w)));
        return pass * std::exp(-u * u);
    };
    const double p = numerics::quad_1d(f, -INFINITY, INFINITY, cfg.quad) / std::sqrt(std::numbers::pi);
    return std::clamp(p, 0.0, 1.0);
}

std::vector<std::vector<int>> enumerate_multisets(int size, int max_value) {
    if (size < 0 || max_value < 0) throw DomainError("enumerate_multisets: arguments must be >= 0");
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int lo) {
        if (static_cast<int>(cur.size()) == size) {
            out.push_back(cur);
            return;
        }
        for (int v = lo; v <= max_value; ++v) {
            cur.push_back(v);
            rec(v);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

namespace {

template <class Real>
Real k_of_n(int n_photons, int k, int n, const std::vector<double>& p_single) {
    Real lead = 1;
    for (int m = 0; m < k; ++m) lead *= static_cast<Real>(p_single[n - m]);
    Real sum = 0;
    for (const auto& b : enumerate_multisets(n_photons - k, k)) {
        Real prod = 1;
        for (int v : b) prod *= 1 - static_cast<Real>(p_single[n - v]);
        sum += prod;
    }
    return lead * sum;
}

std::vector<double> single_table(const LinearConfig& cfg) {
    std::vector<double> p(cfg.n_emitters + 1);
    for (int lambda = 0; lambda <= cfg.n_emitters; ++lambda) p[lambda] = p_subtract_single(lambda, cfg);
    return p;
}

double k_of_n_dispatch(int n_photons, int k, int n, const std::vector<double>& p) {
    if (n >= 6) return static_cast<double>(k_of_n<long double>(n_photons, k, n, p));
    return k_of_n<double>(n_photons, k, n, p);
}

} // namespace

double p_subtract_k_of_n(int n_photons, int k, const LinearConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_emitters;
    if (n_photons < 0 || k < 0 || k > std::min(n_photons, n))
        throw DomainError("p_subtract_k_of_n: need 0 <= k <= min(N, n)");
    return k_of_n_dispatch(n_photons, k, n, single_table(cfg));
}

std::vector<double> subtraction_distribution(int n_photons, const LinearConfig& cfg) {
    cfg.validate();
    if (n_photons < 0) throw DomainError("subtraction_distribution: N must be >= 0");
    const int n = cfg.n_emitters;
    const auto p = single_table(cfg);
    std::vector<double> out;
    for (int k = 0; k <= std::min(n_photons, n); ++k) out.push_back(k_of_n_dispatch(n_photons, k, n, p));
    return out;
}

double avg_error(int n_photons, const LinearConfig& cfg) {
    if (n_photons < 1) throw DomainError("avg_error: N must be >= 1");
    cfg.validate();
    const int n = cfg.n_emitters;
    const int k_max = std::min(n, n_photons - 2);
    if (k_max < 0) return 0.0;
    const auto p = single_table(cfg);
    double sum = 0.0;
    for (int k = 0; k <= k_max; ++k) sum += (k + 1 - n_photons) * k_of_n_dispatch(n_photons, k, n, p);
    return sum;
}

} // namespace pnr::linear_model
