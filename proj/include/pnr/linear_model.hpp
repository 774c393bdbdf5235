#pragma once

// Linear (one photon at a time) model of an n-emitter subtraction cascade.

#include <pnr/errors.hpp>
#include <pnr/numerics.hpp>

#include <vector>

namespace pnr::linear_model {

struct LinearConfig {
    double delta_gamma = 1.0;
    double detuning = 0.0; // (omega0 - omega13) / gamma_g
    int n_emitters = 1;
    numerics::QuadratureConfig quad{1e-14, 1e-12, 2000};

    void validate() const;
};

/// Probability that one Gaussian photon is subtracted by a cascade of
/// `lambda` emitters.
double p_subtract_single(int lambda, const LinearConfig& cfg);

/// All multisets of `size` elements from {0..max_value}, each as a
/// non-decreasing sequence, in lexicographic order.
std::vector<std::vector<int>> enumerate_multisets(int size, int max_value);

/// Probability that exactly k of N photons are subtracted by cfg.n_emitters
/// emitters.
double p_subtract_k_of_n(int n_photons, int k, const LinearConfig& cfg);

/// All of k = 0..min(N, n) in one pass.
std::vector<double> subtraction_distribution(int n_photons, const LinearConfig& cfg);

/// Mean (inferred - true) photon count; never positive.
double avg_error(int n_photons, const LinearConfig& cfg);

} // namespace pnr::linear_model
