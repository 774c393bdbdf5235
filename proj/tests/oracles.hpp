#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the library's numerics.

#include <pnr/scattering.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

// Adaptive Simpson with Richardson correction.
inline Complex simpson_rec(const std::function<Complex(double)>& f, double a, double b, Complex fa, Complex fm,
                           Complex fb, Complex whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const Complex flm = f(lm);
    const Complex frm = f(rm);
    const Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const Complex diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline Complex simpson(const std::function<Complex(double)>& f, double a, double b, double tol = 1e-12,
                       int depth = 50) {
    const Complex fa = f(a);
    const Complex fb = f(b);
    const Complex fm = f(0.5 * (a + b));
    const Complex whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

/// Sum of simpson() over consecutive panels [x_k, x_{k+1}].
inline Complex simpson_panels(const std::function<Complex(double)>& f, const std::vector<double>& cuts,
                              double tol = 1e-12) {
    Complex s = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) s += simpson(f, cuts[k], cuts[k + 1], tol / cuts.size());
    return s;
}

// Closed-form single-emitter scattering elements for two and three photons,
// written out factor by factor. Photon indices are 0-based.
enum class Kind {
    keep,     // Sigma_0^1(t'_a - t_a)
    subtract, // Sigma_1^1(t'_a - t_a)
    delta,    // delta(t_in - t'_out)
    decay,    // -gamma exp(gamma (t_in - t'_out))
};

struct Factor {
    Kind kind;
    int in;
    int out;
};

using Product = std::vector<Factor>;

inline Factor keep(int a) { return {Kind::keep, a, a}; }
inline Factor subtract(int a) { return {Kind::subtract, a, a}; }
inline Factor delta(int in, int out) { return {Kind::delta, in, out}; }
inline Factor decay(int in, int out) { return {Kind::decay, in, out}; }

/// Closed forms for N in {2, 3} and every j in 0..N.
inline std::vector<Product> closed_form(int n, int j) {
    if (n == 2 && j == 1) return {{subtract(0), delta(1, 1)}};
    if (n == 2 && j == 2) return {{keep(0), subtract(1)}, {delta(1, 0), decay(0, 1)}};
    if (n == 2 && j == 0) return {{keep(0), keep(1)}, {delta(1, 0), decay(0, 1)}};
    if (n == 3 && j == 1) return {{subtract(0), delta(1, 1), delta(2, 2)}};
    if (n == 3 && j == 2) return {{keep(0), subtract(1), delta(2, 2)}, {delta(1, 0), delta(2, 2), decay(0, 1)}};
    if (n == 3 && j == 3)
        return {{keep(0), keep(1), subtract(2)},
                {delta(1, 0), subtract(2), decay(0, 1)},
                {keep(0), delta(2, 1), decay(1, 2)},
                {delta(1, 0), delta(2, 1), decay(0, 2)}};
    if (n == 3 && j == 0)
        return {{keep(0), keep(1), keep(2)},
                {delta(1, 0), keep(2), decay(0, 1)},
                {keep(0), delta(2, 1), decay(1, 2)},
                {delta(1, 0), delta(2, 1), decay(0, 2)}};
    return {};
}

/// coefficient * prod deltas * exp(gamma sum (t_in - t'_out) over exps)
struct Sector {
    double coefficient;
    std::set<std::pair<int, int>> deltas;   // (out, in)
    std::vector<std::pair<int, int>> exps;  // (in, out), sorted

    bool operator<(const Sector& o) const {
        return std::tie(deltas, exps, coefficient) < std::tie(o.deltas, o.exps, o.coefficient);
    }
};

inline std::vector<Sector> expand(const Product& p, double gamma) {
    std::vector<Sector> out{{1.0, {}, {}}};
    for (const auto& f : p) {
        std::vector<Sector> next;
        for (const auto& s : out) {
            switch (f.kind) {
            case Kind::keep: {
                Sector d = s;
                d.deltas.insert({f.out, f.in});
                next.push_back(d);
                Sector e = s;
                e.coefficient *= -gamma;
                e.exps.emplace_back(f.in, f.out);
                next.push_back(e);
                break;
            }
            case Kind::subtract:
            case Kind::decay: {
                Sector e = s;
                e.coefficient *= -gamma;
                e.exps.emplace_back(f.in, f.out);
                next.push_back(e);
                break;
            }
            case Kind::delta: {
                Sector d = s;
                d.deltas.insert({f.out, f.in});
                next.push_back(d);
                break;
            }
            }
        }
        out = std::move(next);
    }
    for (auto& s : out) std::sort(s.exps.begin(), s.exps.end());
    return out;
}

/// Random interleaved tuple t_0 <= t'_0 <= t_1 <= ... with the delta-bound
/// coordinates made to coincide.
inline void admissible_times(int n, const std::set<std::pair<int, int>>& deltas, std::mt19937_64& rng,
                             std::vector<double>& t, std::vector<double>& tp) {
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    std::vector<double> s(2 * n);
    for (auto& x : s) x = u(rng);
    std::sort(s.begin(), s.end());
    // position 2i is t_i, 2i+1 is t'_i; a delta (out, in) merges positions
    // 2 out + 1 and 2 in, which are adjacent in the sequence.
    std::vector<std::pair<int, int>> merges;
    for (const auto& [out, in] : deltas) merges.emplace_back(std::min(2 * out + 1, 2 * in), std::max(2 * out + 1, 2 * in));
    std::sort(merges.begin(), merges.end());
    for (const auto& [a, b] : merges) s[b] = s[a];
    t.assign(n, 0.0);
    tp.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        t[i] = s[2 * i];
        tp[i] = s[2 * i + 1];
    }
}

/// Value of the delta-free coefficient of `pattern` in the closed form.
inline double closed_form_value(const std::vector<Sector>& sectors, const std::set<std::pair<int, int>>& pattern,
                                const std::vector<double>& t, const std::vector<double>& tp, double gamma) {
    double v = 0.0;
    for (const auto& s : sectors) {
        if (s.deltas != pattern) continue;
        double e = 0.0;
        for (const auto& [in, out] : s.exps) e += t[in] - tp[out];
        v += s.coefficient * std::exp(gamma * e);
    }
    return v;
}

struct ClosedFormReport {
    bool structure_ok = true;  // term count and per-term sectors identical
    int comparisons = 0;
    double max_error = 0.0;
};

/// Compares mpk_expand(n, j) with the closed form: term by term sector sets,
/// then `samples` random admissible tuples for every delta pattern.
inline ClosedFormReport compare_closed_form(int n, int j, double gamma, int samples, std::uint64_t seed) {
    ClosedFormReport r;
    const auto forms = closed_form(n, j);
    const auto elem = pnr::scattering::mpk_expand(n, j, gamma);
    if (elem.terms.size() != forms.size()) r.structure_ok = false;
    std::vector<Sector> all;
    for (std::size_t k = 0; k < forms.size(); ++k) {
        auto want = expand(forms[k], gamma);
        all.insert(all.end(), want.begin(), want.end());
        if (k >= elem.terms.size()) continue;
        std::vector<Sector> have;
        for (const auto& s : elem.terms[k].expand()) {
            if (std::abs(s.coefficient.imag()) > 0.0 || s.exp_rate != gamma) r.structure_ok = false;
            Sector h{s.coefficient.real(), {}, {}};
            for (const auto& d : s.delta_pairs) h.deltas.insert(d);
            h.exps = s.exp_pairs;
            std::sort(h.exps.begin(), h.exps.end());
            have.push_back(h);
        }
        std::sort(want.begin(), want.end());
        std::sort(have.begin(), have.end());
        if (want.size() != have.size()) {
            r.structure_ok = false;
            continue;
        }
        for (std::size_t q = 0; q < want.size(); ++q)
            if (want[q].deltas != have[q].deltas || want[q].exps != have[q].exps ||
                std::abs(want[q].coefficient - have[q].coefficient) > 1e-15)
                r.structure_ok = false;
    }

    const int active = j == 0 ? n : j;
    std::set<std::set<std::pair<int, int>>> patterns;
    for (const auto& s : all) patterns.insert(s.deltas);
    std::mt19937_64 rng(seed);
    for (const auto& pat : patterns) {
        std::vector<std::pair<int, int>> free_part;
        for (const auto& d : pat)
            if (!(d.first == d.second && d.first >= active)) free_part.push_back(d);
        for (int k = 0; k < samples; ++k) {
            std::vector<double> t, tp;
            admissible_times(n, pat, rng, t, tp);
            const double want = closed_form_value(all, pat, t, tp, gamma);
            const pnr::Complex have = pnr::scattering::eval_element(elem, t, tp, free_part);
            r.max_error = std::max(r.max_error, std::abs(have - want));
            ++r.comparisons;
        }
    }
    return r;
}

/// Linear cascade as a Markov chain over the number of still-active
/// emitters: a photon meeting a active emitters is subtracted with
/// probability p[a]. Returns P(k subtractions), k = 0..n.
inline std::vector<double> path_distribution(const std::vector<double>& p, int n_emitters, int n_photons) {
    std::vector<double> active(n_emitters + 1, 0.0);
    active[n_emitters] = 1.0;
    for (int ph = 0; ph < n_photons; ++ph) {
        std::vector<double> next(n_emitters + 1, 0.0);
        for (int a = 0; a <= n_emitters; ++a) {
            next[a] += active[a] * (1.0 - p[a]);
            if (a > 0) next[a - 1] += active[a] * p[a];
        }
        active = next;
    }
    std::vector<double> k(n_emitters + 1, 0.0);
    for (int a = 0; a <= n_emitters; ++a) k[n_emitters - a] = active[a];
    return k;
}

} // namespace oracle
