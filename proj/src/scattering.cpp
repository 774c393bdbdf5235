#include <pnr/scattering.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace pnr::scattering {

Sigma1Value sigma1(PortKind kind, double dt, double gamma) {
    if (!(dt >= 0.0)) throw DomainError("sigma1: dt = t' - t must be >= 0");
    const Complex smooth = -gamma * std::exp(-gamma * dt);
    const double delta = (kind == PortKind::keep && dt == 0.0) ? 1.0 : 0.0;
    return {delta, smooth};
}

Complex sigma1_freq(PortKind kind, double omega, double gamma) {
    const Complex den(gamma, omega);
    if (kind == PortKind::subtract) return -gamma / den;
    return Complex(0.0, omega) / den;
}

bool interleaved(std::span<const double> t, std::span<const double> tp) {
    if (t.size() != tp.size()) return false;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] <= tp[i])) return false;
        if (i + 1 < t.size() && !(tp[i] <= t[i + 1])) return false;
    }
    return true;
}

Complex green_fn(int k, FinalState, std::span<const double> t, std::span<const double> tp, double gamma) {
    if (k < 1 || static_cast<int>(t.size()) != k || static_cast<int>(tp.size()) != k)
        throw DomainError("green_fn: need k input and k output times");
    if (!std::is_sorted(t.begin(), t.end()) || !std::is_sorted(tp.begin(), tp.end()))
        throw DomainError("green_fn: time arrays must be sorted");
    if (!interleaved(t, tp)) return 0.0;
    double expo = 0.0;
    for (int i = 0; i < k; ++i) expo += t[i] - tp[i];
    return std::pow(gamma, k) * std::exp(gamma * expo);
}

std::vector<std::vector<int>> compositions(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int left) {
        if (left == 0) {
            out.push_back(cur);
            return;
        }
        for (int a = 1; a <= left; ++a) {
            cur.push_back(a);
            rec(left - a);
            cur.pop_back();
        }
    };
    if (n > 0) rec(n);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a > b;
    });
    return out;
}

std::vector<KernelSector> KernelTerm::expand() const {
    std::vector<KernelSector> out;
    const int k = static_cast<int>(keep_factors.size());
    for (int mask = 0; mask < (1 << k); ++mask) {
        KernelSector s{coefficient, {}, exp_rate, exp_pairs, trailing};
        const std::size_t tail_start = delta_pairs.size() - trailing;
        std::vector<std::pair<int, int>> extra;
        for (int b = 0; b < k; ++b) {
            const int p = keep_factors[b];
            if (mask & (1 << b)) {
                extra.emplace_back(p, p);
            } else {
                s.coefficient *= -exp_rate;
                s.exp_pairs.emplace_back(p, p);
            }
        }
        s.delta_pairs.assign(delta_pairs.begin(), delta_pairs.begin() + tail_start);
        s.delta_pairs.insert(s.delta_pairs.end(), extra.begin(), extra.end());
        std::sort(s.delta_pairs.begin(), s.delta_pairs.end());
        s.delta_pairs.insert(s.delta_pairs.end(), delta_pairs.begin() + tail_start, delta_pairs.end());
        std::sort(s.exp_pairs.begin(), s.exp_pairs.end());
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<KernelSector> ScatterElement::sectors() const {
    std::vector<KernelSector> out;
    for (const auto& term : terms) {
        auto s = term.expand();
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

ScatterElement mpk_expand(int n_photons, int j, double gamma) {
    if (n_photons < 1) throw DomainError("mpk_expand: need N >= 1");
    if (n_photons > 3) throw UnsupportedError("mpk_expand: N > 3 not supported");
    if (j < 0 || j > n_photons) throw DomainError("mpk_expand: need 0 <= j <= N");
    const int active = j == 0 ? n_photons : j;
    ScatterElement elem{n_photons, j, {}};
    for (const auto& comp : compositions(active)) {
        KernelTerm term;
        term.composition = comp;
        term.coefficient = 1.0;
        term.exp_rate = gamma;
        int first = 0;
        for (std::size_t b = 0; b < comp.size(); ++b) {
            const int len = comp[b];
            const bool last = b + 1 == comp.size();
            if (len == 1) {
                const PortKind kind = (last && j > 0) ? PortKind::subtract : PortKind::keep;
                term.blocks.push_back({first, 1, kind});
                if (kind == PortKind::subtract) {
                    term.coefficient *= -gamma;
                    term.exp_pairs.emplace_back(first, first);
                } else {
                    term.keep_factors.push_back(first);
                }
            } else {
                term.blocks.push_back({first, len, PortKind::keep});
                term.coefficient *= -gamma;
                for (int k = 1; k < len; ++k) term.delta_pairs.emplace_back(first + k - 1, first + k);
                term.exp_pairs.emplace_back(first, first + len - 1);
            }
            first += len;
        }
        std::sort(term.delta_pairs.begin(), term.delta_pairs.end());
        std::sort(term.exp_pairs.begin(), term.exp_pairs.end());
        for (int i = active; i < n_photons; ++i) term.delta_pairs.emplace_back(i, i);
        term.trailing = n_photons - active;
        elem.terms.push_back(std::move(term));
    }
    return elem;
}

Complex eval_element(const ScatterElement& elem, std::span<const double> t, std::span<const double> tp,
                     std::span<const std::pair<int, int>> pattern) {
    const int n = elem.n_photons;
    if (static_cast<int>(t.size()) != n || static_cast<int>(tp.size()) != n)
        throw DimensionError("eval_element: time arrays must have N entries");
    const int active = elem.j == 0 ? n : elem.j;
    auto bound = [&](int out, int in) {
        if (out < 0 || out >= n || in < 0 || in >= n) throw MisuseError("eval_element: pattern index out of range");
        if (t[in] != tp[out]) throw MisuseError("eval_element: delta-bound coordinates were not collapsed");
    };
    for (const auto& [out, in] : pattern) bound(out, in);
    for (int i = active; i < n; ++i) bound(i, i);
    if (!interleaved(t, tp)) return 0.0;

    std::vector<std::pair<int, int>> want(pattern.begin(), pattern.end());
    std::sort(want.begin(), want.end());
    Complex sum = 0.0;
    for (const auto& s : elem.sectors()) {
        std::vector<std::pair<int, int>> have(s.delta_pairs.begin(), s.delta_pairs.end() - s.trailing);
        if (have != want) continue;
        double expo = 0.0;
        for (const auto& [in, out] : s.exp_pairs) expo += t[in] - tp[out];
        sum += s.coefficient * std::exp(s.exp_rate * expo);
    }
    return sum;
}

} // namespace pnr::scattering
