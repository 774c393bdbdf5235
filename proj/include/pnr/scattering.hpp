#pragma once

// Time-domain scattering elements of one waveguide-coupled Lambda emitter.
// Photon indices are 0-based: input times t[0..N), output times tp[0..N).

#include <pnr/errors.hpp>

#include <span>
#include <utility>
#include <vector>

namespace pnr::scattering {

/// subtract: the photon leaves in the second guided mode; keep: it stays.
enum class PortKind { subtract, keep };

struct Sigma1Value {
    double delta_weight; // coefficient of delta(t' - t)
    Complex smooth;      // regular part
};

/// Single-photon kernel at dt = t' - t >= 0.
Sigma1Value sigma1(PortKind kind, double dt, double gamma = 1.0);

/// Single-photon transfer function, omega measured from the 1-3 resonance.
Complex sigma1_freq(PortKind kind, double omega, double gamma = 1.0);

enum class FinalState { state1, state2 };

/// True when t_0 <= tp_0 <= t_1 <= tp_1 <= ... <= t_{N-1} <= tp_{N-1}.
bool interleaved(std::span<const double> t, std::span<const double> tp);

/// Green's function of k interacting photons: gamma^k exp(gamma sum(t_i - tp_i))
/// on the interleaved domain, zero elsewhere. Throws DomainError if either
/// time array is unsorted or their sizes differ from k.
Complex green_fn(int k, FinalState final, std::span<const double> t, std::span<const double> tp,
                 double gamma = 1.0);

/// A fully expanded contribution: coefficient * prod delta(t_in - tp_out)
/// * exp(exp_rate * sum(t_in - tp_out over exp_pairs)).
struct KernelSector {
    Complex coefficient;
    std::vector<std::pair<int, int>> delta_pairs; // (output, input)
    double exp_rate;
    std::vector<std::pair<int, int>> exp_pairs; // (input, output)
    int trailing = 0; // how many trailing entries of delta_pairs are the identity tail
};

/// A run of consecutive photons [first, first+length) inside one composition.
/// length 1 blocks are single-photon kernels; longer ones are multi-photon
/// kernels.
struct Block {
    int first;
    int length;
    PortKind kind; // meaningful for length 1 only
};

/// One composition of Sigma_j^N. Length-1 keep blocks carry the full
/// delta-plus-smooth single-photon kernel and stay symbolic until expand().
struct KernelTerm {
    std::vector<int> composition;
    std::vector<Block> blocks;
    Complex coefficient;
    std::vector<std::pair<int, int>> delta_pairs; // (output, input), includes identity tail
    double exp_rate;
    std::vector<std::pair<int, int>> exp_pairs; // (input, output)
    std::vector<int> keep_factors;              // photons carrying an unexpanded keep kernel
    int trailing = 0;                           // identity-tail deltas at the end of delta_pairs

    std::vector<KernelSector> expand() const;
};

struct ScatterElement {
    int n_photons;
    int j; // output position of the subtracted photon, 1-based; 0 = none
    std::vector<KernelTerm> terms;

    std::vector<KernelSector> sectors() const;
};

/// Complete term list of Sigma_j^N, N <= 3. Terms are ordered by descending
/// part count, then lexicographically descending composition.
ScatterElement mpk_expand(int n_photons, int j, double gamma = 1.0);

/// Compositions of n (all of them) in the mpk_expand order.
std::vector<std::vector<int>> compositions(int n);

/// Coefficient of the delta product `pattern` plus identity tail, evaluated at
/// (t, tp). Coordinates bound by a delta must already coincide; otherwise
/// MisuseError. Outside the interleaved domain the value is 0.
Complex eval_element(const ScatterElement& elem, std::span<const double> t, std::span<const double> tp,
                     std::span<const std::pair<int, int>> pattern = {});

} // namespace pnr::scattering
