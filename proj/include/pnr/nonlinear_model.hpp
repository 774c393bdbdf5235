#pragma once

// Single-emitter observables from the exact scattering elements: output
// amplitudes, outcome probabilities, two-time correlators and g2(0).

#include <pnr/errors.hpp>
#include <pnr/numerics.hpp>
#include <pnr/pulses.hpp>
#include <pnr/scattering.hpp>

#include <Eigen/Core>

#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace pnr::nonlinear_model {

struct NonlinearOptions {
    /// Emitter coupling rate. gamma = 0 turns the emitter off (identity scattering).
    double gamma = 1.0;
    numerics::QuadratureConfig quad{1e-9, 1e-7, 4000};
    double innermost_relax = 10.0;
};

/// Tabulated F(x) = int_{-inf}^x exp(gamma (t - x)) f(t) dt for one mode, with
/// cubic Hermite interpolation (F' = f - gamma F is exact at the nodes).
class ConvolvedMode {
public:
    ConvolvedMode(const pulses::Wavepacket& mode, double gamma);

    Complex F(double x) const;
    /// int_a^b exp(gamma (t - c)) f(t) dt for a <= b <= c; a may be -inf.
    Complex window_integral(double a, double b, double c) const;

private:
    pulses::Wavepacket mode_;
    double gamma_;
    double lo_;
    double h_;
    std::vector<Complex> value_;
    std::vector<Complex> slope_;
};

/// Output amplitude of outcome j (0 = nothing subtracted, else the 1-based
/// arrival position of the subtracted photon) for an N-photon input.
class OutcomeAmplitude {
public:
    OutcomeAmplitude(const pulses::PulseSpec& spec, int j, const NonlinearOptions& opts = {});

    int n_photons() const noexcept { return n_; }
    int j() const noexcept { return j_; }
    const pulses::PulseSpec& spec() const noexcept { return spec_; }
    const NonlinearOptions& options() const noexcept { return opts_; }

    /// Zero unless tp is sorted.
    Complex operator()(std::span<const double> tp) const;

    /// Integration window for output times.
    std::pair<double, double> window() const noexcept { return window_; }
    /// Split points used by every quadrature over output times.
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    /// 0-based output slots that leave in the measured (through) mode.
    const std::vector<int>& measured_slots() const noexcept { return measured_; }

private:
    struct Link {
        bool delta;
        int in;
        int out;
    };
    struct Sector {
        Complex coefficient;
        std::vector<Link> links;
    };

    pulses::PulseSpec spec_;
    int n_;
    int j_;
    NonlinearOptions opts_;
    std::shared_ptr<const pulses::AmplitudeFn> input_;
    std::vector<ConvolvedMode> convolved_;
    std::vector<Sector> sectors_;
    std::pair<double, double> window_;
    std::vector<double> breakpoints_;
    std::vector<int> measured_;
};

Complex output_amplitude(const pulses::PulseSpec& spec, int j, std::span<const double> tp,
                         const NonlinearOptions& opts = {});

/// Probability of outcome j.
double p_outcome(const pulses::PulseSpec& spec, int j, const NonlinearOptions& opts = {});
double p_outcome(const OutcomeAmplitude& amp);

/// G2 over the measured mode, for (N, j) in {(2,0), (3,0), (3,3)}.
double correlator_G2(const pulses::PulseSpec& spec, int j, double t1, double t2,
                     const NonlinearOptions& opts = {});
/// Same for any outcome with at least two measured photons.
double correlator_G2(const OutcomeAmplitude& amp, double t1, double t2);
/// First-order intensity G1(t, t) of the measured mode.
double correlator_G1(const OutcomeAmplitude& amp, double t);
/// int G2(t, t') dt' over the full window.
double marginal_G2(const OutcomeAmplitude& amp, double t);

/// Grid[i][k] = G2(grid.at(i), grid.at(k)).
Eigen::MatrixXd sample_G2(const pulses::PulseSpec& spec, int j, const numerics::TimeGrid& grid,
                          const NonlinearOptions& opts = {});

/// Zero-delay g2, normalised within the outcome-j sub-ensemble.
double g2_zero(const pulses::PulseSpec& spec, int j, const NonlinearOptions& opts = {});

struct G1Check {
    double lhs;
    double rhs;
};
/// Direct G1(t,t) against int G2(t,t') dt' / (m - 1), m = measured photons.
G1Check g1_from_g2_check(const pulses::PulseSpec& spec, int j, double t, const NonlinearOptions& opts = {});

} // namespace pnr::nonlinear_model
