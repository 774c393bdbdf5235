#pragma once

// Monte-Carlo wavefunction engine over a composed network.

#include <pnr/errors.hpp>
#include <pnr/numerics.hpp>
#include <pnr/slh.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <utility>
#include <vector>

namespace pnr::trajectory {

struct JumpEvent {
    double time;
    int channel; // 1..n+1; n+1 is the through channel
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<JumpEvent> jumps;
    Eigen::VectorXcd final_state;                       // normalised; empty unless kept
    double final_norm2 = 1.0;                           // no-jump norm^2 since the last jump
    std::vector<std::pair<double, double>> survival_trace; // (time, norm^2), when requested
};

struct TrajectoryOptions {
    bool keep_final_state = true;
    bool keep_trace = false;
    int trace_stride = 1;
};

/// Grid covering pulse centres +- max(8 delta, 8/gamma) plus an 8/gamma tail,
/// spacing <= min(0.01, delta/200).
numerics::TimeGrid default_grid(const pulses::PulseSpec& spec, double gamma = 1.0);

/// Network compiled for repeated propagation on one grid. Immutable and safe
/// to share between threads.
class Propagator {
public:
    Propagator(const slh::Network& network, const numerics::TimeGrid& grid);
    ~Propagator();
    Propagator(const Propagator&) = delete;
    Propagator& operator=(const Propagator&) = delete;

    const slh::Network& network() const noexcept;
    const numerics::TimeGrid& grid() const noexcept;

    TrajectoryRecord run(std::uint64_t seed, const TrajectoryOptions& opts = {}) const;
    /// Unnormalised state after deterministic no-jump evolution to t_end.
    Eigen::VectorXcd no_jump_state() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

TrajectoryRecord run_trajectory(const slh::Network& network, const numerics::TimeGrid& t_grid, std::uint64_t seed,
                                const TrajectoryOptions& opts = {});

/// Time in [t0, t1] where norm_fn crosses threshold, to (t1 - t0)/64 by
/// bisection. MisuseError unless norm_fn(t0) >= threshold > norm_fn(t1).
double jump_time_bisect(const std::function<double(double)>& norm_fn, double threshold, double t0, double t1);

/// Records k = 0..M-1 use seed base_seed + k. threads <= 0 picks the default
/// (PNR_THREADS or the hardware count).
std::vector<TrajectoryRecord> run_ensemble(const slh::Network& network, const numerics::TimeGrid& t_grid, int M,
                                           std::uint64_t base_seed, int threads = 0,
                                           const TrajectoryOptions& opts = {false, false, 1});
std::vector<TrajectoryRecord> run_ensemble(const Propagator& prop, int M, std::uint64_t base_seed, int threads = 0,
                                           const TrajectoryOptions& opts = {false, false, 1});

int default_thread_count();

struct OutcomeEstimate {
    std::vector<double> probability; // index j = 0..N
    std::vector<double> sigma;       // binomial standard error
    std::vector<long> counts;
    long trajectories = 0;
    long ambiguous = 0; // through-channel jumps within dt/64 of the subtraction
};

/// Arrival position of the subtracted photon for a single-emitter record
/// (0 = none). Through-channel jumps closer than tie_window to the
/// subtraction are not counted as earlier.
int classify_outcome(const TrajectoryRecord& rec, double tie_window, bool* ambiguous = nullptr);

OutcomeEstimate estimate_outcomes(const std::vector<TrajectoryRecord>& ensemble, int n_photons, double dt);

struct G2Histogram {
    double t_start;
    double bin_width;
    Eigen::MatrixXd values; // density per unit time^2 per selected trajectory
    long selected = 0;

    double bin_center(int i) const { return t_start + (i + 0.5) * bin_width; }
};

/// Symmetric histogram of through-channel jump-time pairs over the selected
/// records. InsufficientStatisticsError below 100 selected records.
G2Histogram estimate_g2(const std::vector<TrajectoryRecord>& ensemble,
                        const std::function<bool(const TrajectoryRecord&)>& postselect, double bin_width,
                        std::pair<double, double> range, int through_channel);

/// g2(0) of a histogram for m measured photons per selected record.
double binned_g2_zero(const G2Histogram& h, int measured_photons);

struct ClickSummary {
    std::set<int> subtraction_clicks;
    bool final_detector_click = false;
    int inferred_count = 0;
    int true_count = 0;
    int error = 0;
};

ClickSummary summarize_clicks(const TrajectoryRecord& rec, int n_emitters, int n_photons);

struct ResponsePoint {
    int n_photons;
    double mean_clicks;
    double stderr_clicks;
    double mean_abs_error;
    double stderr_abs_error;
};

struct ResponseCurve {
    std::vector<ResponsePoint> points;
};

struct ResponseOptions {
    double gamma = 1.0;
    int threads = 0;
    /// Optional override of the grid spacing bound.
    double max_dt = 0.0;
};

/// Mean clicks of an n-emitter detector fed GaussianFock pulses of width
/// delta_gamma for each N in n_range.
ResponseCurve response_curve(int n, double delta_gamma, const std::vector<int>& n_range, int M,
                             std::uint64_t base_seed, const ResponseOptions& opts = {});

} // namespace pnr::trajectory
