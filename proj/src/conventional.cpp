#include <pnr/conventional.hpp>

#include <cmath>
#include <numeric>

namespace pnr::conventional {

void SplitterConfig::validate() const {
    for (double r : reflectivities)
        if (!(r >= 0.0 && r <= 1.0)) throw DomainError("SplitterConfig: reflectivity outside [0, 1]");
}

std::vector<double> routing_probs(const SplitterConfig& cfg) {
    cfg.validate();
    const auto n = cfg.reflectivities.size();
    std::vector<double> p(n + 1);
    double through = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = cfg.reflectivities[i] * through;
        through *= 1.0 - cfg.reflectivities[i];
    }
    // The last detector takes the remainder so the sum is exactly one.
    double rest = 1.0;
    for (std::size_t i = 0; i < n; ++i) rest -= p[i];
    p[n] = rest;
    return p;
}

namespace {

void check_probs(const std::vector<double>& probs) {
    if (probs.empty()) throw DomainError("avg_clicks: empty routing vector");
    double s = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw DomainError("avg_clicks: negative routing probability");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw DomainError("avg_clicks: routing probabilities do not sum to 1");
}

struct CompositionSum {
    const std::vector<double>& probs;
    std::vector<double> log_fact;
    std::vector<double> by_k; // probability mass with k occupied detectors
    std::vector<int> parts;

    void walk(std::size_t slot, int left) {
        if (slot + 1 == probs.size()) {
            parts[slot] = left;
            double w = log_fact.back();
            double mass = 1.0;
            int k = 0;
            for (std::size_t i = 0; i < parts.size(); ++i) {
                w -= log_fact[parts[i]];
                if (parts[i] > 0) {
                    ++k;
                    mass *= std::pow(probs[i], parts[i]);
                }
            }
            by_k[k] += std::exp(w) * mass;
            return;
        }
        for (int m = 0; m <= left; ++m) {
            parts[slot] = m;
            walk(slot + 1, left - m);
        }
    }
};

} // namespace

double avg_clicks(const std::vector<double>& probs, int n_photons) {
    check_probs(probs);
    if (n_photons < 0) throw DomainError("avg_clicks: negative photon count");
    if (n_photons > kMaxCompositionPhotons) throw UnsupportedError("avg_clicks: N above the enumeration bound");
    CompositionSum cs{probs, {}, std::vector<double>(probs.size() + 1, 0.0), std::vector<int>(probs.size(), 0)};
    for (int m = 0; m <= n_photons; ++m) cs.log_fact.push_back(std::lgamma(m + 1.0));
    cs.walk(0, n_photons);
    double clicks = 0.0;
    for (std::size_t k = 1; k < cs.by_k.size(); ++k) clicks += static_cast<double>(k) * cs.by_k[k];
    return clicks;
}

double avg_clicks_occupancy(const std::vector<double>& probs, int n_photons) {
    check_probs(probs);
    double clicks = 0.0;
    for (double p : probs) clicks += 1.0 - std::pow(1.0 - p, n_photons);
    return clicks;
}

double avg_clicks_bruteforce(const std::vector<double>& probs, int n_photons) {
    check_probs(probs);
    if (n_photons < 0) throw DomainError("avg_clicks_bruteforce: negative photon count");
    const auto d = probs.size();
    if (n_photons * std::log10(static_cast<double>(d)) > 7.0 + 1e-12)
        throw UnsupportedError("avg_clicks_bruteforce: more than 1e7 assignments");
    if (n_photons == 0) return 0.0;
    std::vector<int> det(n_photons, 0);
    std::vector<int> hits(d, 0);
    // Neumaier summation: up to 1e7 terms of mixed magnitude
    double clicks = 0.0;
    double carry = 0.0;
    while (true) {
        double w = 1.0;
        std::fill(hits.begin(), hits.end(), 0);
        for (int k : det) {
            w *= probs[k];
            hits[k] = 1;
        }
        const double term = w * std::accumulate(hits.begin(), hits.end(), 0);
        const double sum = clicks + term;
        carry += std::abs(clicks) >= std::abs(term) ? (clicks - sum) + term : (term - sum) + clicks;
        clicks = sum;
        int pos = 0;
        while (pos < n_photons && ++det[pos] == static_cast<int>(d)) det[pos++] = 0;
        if (pos == n_photons) break;
    }
    return clicks + carry;
}

SplitterConfig balanced_tree(int n_splitters) {
    if (n_splitters < 0) throw DomainError("balanced_tree: negative splitter count");
    SplitterConfig cfg;
    for (int i = 1; i <= n_splitters; ++i) cfg.reflectivities.push_back(1.0 / (n_splitters + 2 - i));
    return cfg;
}

EqualReflectivity optimize_equal_reflectivity(int n_splitters, int n_photons) {
    if (n_splitters < 1) throw DomainError("optimize_equal_reflectivity: need at least one splitter");
    auto f = [&](double r) {
        SplitterConfig cfg{std::vector<double>(n_splitters, r)};
        return avg_clicks(routing_probs(cfg), n_photons);
    };
    constexpr int kGrid = 200;
    int best = 0;
    double best_val = -1.0;
    for (int k = 0; k < kGrid; ++k) {
        const double v = f((k + 0.5) / kGrid);
        if (v > best_val) {
            best_val = v;
            best = k;
        }
    }
    double a = std::max(1e-6, (best - 0.5) / kGrid);
    double b = std::min(1.0 - 1e-6, (best + 1.5) / kGrid);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > 1e-6) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double r = 0.5 * (a + b);
    const double v = f(r);
    if (v < best_val) return {(best + 0.5) / kGrid, best_val};
    return {r, v};
}

} // namespace pnr::conventional
