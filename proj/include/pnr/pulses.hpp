#pragma once

// N-photon input states in the frame rotating at the 1-3 transition.

#include <pnr/errors.hpp>
#include <pnr/numerics.hpp>

#include <Eigen/Core>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pnr::pulses {

enum class PulseFamily { GaussianFock, SeparatedGaussians, HermiteGaussPair };

std::string to_string(PulseFamily f);
/// Parses "GaussianFock", "SeparatedGaussians" or "HermiteGaussPair".
PulseFamily parse_family(const std::string& name);

struct PulseSpec {
    PulseFamily family = PulseFamily::GaussianFock;
    int n_photons = 1;
    double delta = 1.0;
    double detuning = 0.0;
    double separation = 0.0; // SeparatedGaussians only
    int sign = +1;           // HermiteGaussPair only

    /// Throws DomainError on a violated invariant.
    void validate() const;
};

/// h(t) = sqrt(2/(delta sqrt(pi))) exp(-i detuning t - 2 t^2/delta^2).
Complex gaussian_h(double delta, double detuning, double t);

/// Fourier partner of gaussian_h, omega measured from the 1-3 resonance.
Complex gaussian_h_freq(double delta, double detuning, double omega);

/// Hermite-Gauss function h_n(t) of width delta, n <= 10.
double hermite_gauss(int n, double delta, double t);

/// One single-photon mode: hermite_gauss(order) centred at `center`, carrying
/// the carrier detuning as a phase. Order 0 is gaussian_h.
struct Wavepacket {
    int order = 0;
    double delta = 1.0;
    double center = 0.0;
    double detuning = 0.0;

    Complex operator()(double t) const;
};

/// <a|b> by quadrature.
Complex overlap(const Wavepacket& a, const Wavepacket& b);

Eigen::MatrixXcd gram_matrix(std::span<const Wavepacket> packets);

/// Permanent by direct expansion over permutations (dimension <= 8).
Complex permanent(const Eigen::MatrixXcd& m);

/// 1/sqrt(perm S) for the Gram matrix S of the packets.
double gram_normalization(std::span<const Wavepacket> packets);
/// Same, from an already computed Gram matrix.
double gram_normalization(const Eigen::MatrixXcd& gram);

/// c * prod_k modes[mode[k]](t_k)
struct ProductTerm {
    Complex coefficient;
    std::vector<int> mode;
};

/// g(t_1..t_N) as a sum of separable products over a small mode table.
class AmplitudeFn {
public:
    AmplitudeFn(int n_photons, std::vector<Wavepacket> modes, std::vector<ProductTerm> terms,
                double norm_factor);

    int n_photons() const noexcept { return n_; }
    const std::vector<Wavepacket>& modes() const noexcept { return modes_; }
    const std::vector<ProductTerm>& terms() const noexcept { return terms_; }
    double norm_factor() const noexcept { return norm_; }
    /// Ordered-simplex integral of |norm_factor * g|^2, measured at construction.
    double measured_norm() const noexcept { return measured_norm_; }
    /// Factor that turns g into the unit-norm ordered amplitude.
    double scale() const noexcept { return scale_; }
    const Eigen::MatrixXcd& mode_overlaps() const noexcept { return overlaps_; }

    /// Bare g (no normalisation), on any argument order.
    Complex eval(std::span<const double> t) const;
    /// norm_factor * g / sqrt(measured_norm).
    Complex normalized(std::span<const double> t) const { return scale_ * eval(t); }

private:
    int n_;
    std::vector<Wavepacket> modes_;
    std::vector<ProductTerm> terms_;
    double norm_;
    double measured_norm_;
    double scale_;
    Eigen::MatrixXcd overlaps_;
};

AmplitudeFn build_amplitude(const PulseSpec& spec);

/// Wavepacket centres used by build_amplitude.
std::vector<double> pulse_centers(const PulseSpec& spec);

/// [first centre - pad, last centre + pad] with pad = max(8 delta, 8/gamma).
/// gamma = 0 uses pad = 8 delta.
std::pair<double, double> support_window(const PulseSpec& spec, double gamma = 1.0);

} // namespace pnr::pulses
