#include <pnr/trajectory.hpp>

#include <algorithm>
#include <array>
#include <tuple>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace pnr::trajectory {

numerics::TimeGrid default_grid(const pulses::PulseSpec& spec, double gamma) {
    spec.validate();
    const auto centers = pulses::pulse_centers(spec);
    const double pad = gamma > 0.0 ? std::max(8.0 * spec.delta, 8.0 / gamma) : 8.0 * spec.delta;
    const double tail = gamma > 0.0 ? 8.0 / gamma : 0.0;
    const double max_dt = std::min(0.01, spec.delta / 200.0);
    return numerics::TimeGrid::with_max_step(centers.front() - pad, centers.back() + pad + tail, max_dt);
}

double jump_time_bisect(const std::function<double(double)>& norm_fn, double threshold, double t0, double t1) {
    if (!(t1 > t0)) throw MisuseError("jump_time_bisect: empty interval");
    if (!(norm_fn(t0) >= threshold) || !(norm_fn(t1) < threshold))
        throw MisuseError("jump_time_bisect: norm does not cross the threshold in this step");
    double a = t0;
    double b = t1;
    for (int k = 0; k < 6; ++k) {
        const double m = 0.5 * (a + b);
        if (norm_fn(m) >= threshold)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

namespace {

struct Entry {
    int row;
    int col;
    int cls;
    Complex value;
};

struct Reduced {
    std::vector<int> states;
    std::vector<Entry> entries; // H_eff restricted to the reachable subspace
    bool frozen = true;
};

// Scratch vectors for one trajectory.
struct Work {
    Eigen::VectorXcd k1, k2, k3, k4, tmp;
    void resize(Eigen::Index s) {
        for (auto* v : {&k1, &k2, &k3, &k4, &tmp}) v->resize(s);
    }
};

constexpr int kMaxClasses = 16;
using ClassValues = std::array<Complex, kMaxClasses>;

} // namespace

struct Propagator::Impl {
    slh::Network net;
    numerics::TimeGrid grid;
    Eigen::Index dim = 0;
    std::vector<slh::Envelope> classes; // class 0 is the constant 1
    std::vector<std::vector<Complex>> table; // [class][2i] at node i, [2i+1] at midpoint i
    std::vector<slh::SparseMatrix> h_class;
    std::vector<std::vector<std::pair<int, slh::SparseMatrix>>> jump_ops; // per channel
    std::vector<std::vector<int>> reach; // column -> rows with nonzero H_eff

    Impl(const slh::Network& network, const numerics::TimeGrid& g) : net(network), grid(g) {
        dim = net.triple.layout.dim();
        if (dim > slh::kMaxDimension) throw DimensionError("Propagator: dimension above cap");
        if (net.initial_state.size() != dim) throw DimensionError("Propagator: initial state has wrong size");
        classes.emplace_back();
        std::vector<double> probes;
        for (int k = 0; k < 32; ++k) probes.push_back(grid.t_start() + (k + 0.37) / 32.0 * (grid.t_end() - grid.t_start()));
        for (double c : pulses::pulse_centers(net.spec))
            for (double x : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0}) probes.push_back(c + x * net.spec.delta);
        std::vector<std::vector<Complex>> signature{std::vector<Complex>(probes.size(), 1.0)};
        auto class_of = [&](const slh::Envelope& e) -> int {
            if (e.is_constant()) return 0;
            std::vector<Complex> v;
            for (double t : probes) v.push_back(e(t));
            for (std::size_t c = 1; c < classes.size(); ++c) {
                double diff = 0.0;
                double scale = 0.0;
                for (std::size_t k = 0; k < v.size(); ++k) {
                    diff = std::max(diff, std::abs(v[k] - signature[c][k]));
                    scale = std::max(scale, std::abs(v[k]));
                }
                if (diff <= 1e-13 * std::max(scale, 1.0)) return static_cast<int>(c);
            }
            if (classes.size() >= kMaxClasses) throw UnsupportedError("Propagator: too many distinct envelopes");
            classes.push_back(e);
            signature.push_back(std::move(v));
            return static_cast<int>(classes.size()) - 1;
        };

        const slh::Operator heff = net.triple.effective_hamiltonian();
        std::vector<slh::SparseMatrix> hc;
        for (const auto& term : heff.terms()) {
            const int c = class_of(term.envelope);
            if (static_cast<int>(hc.size()) <= c) hc.resize(c + 1, slh::SparseMatrix(dim, dim));
            hc[c] += term.matrix;
        }
        for (const auto& l : net.triple.L) {
            std::vector<std::pair<int, slh::SparseMatrix>> ops;
            for (const auto& term : l.terms()) {
                const int c = class_of(term.envelope);
                auto hit = std::find_if(ops.begin(), ops.end(), [&](const auto& p) { return p.first == c; });
                if (hit == ops.end())
                    ops.emplace_back(c, term.matrix);
                else
                    hit->second += term.matrix;
            }
            jump_ops.push_back(std::move(ops));
        }
        hc.resize(classes.size(), slh::SparseMatrix(dim, dim));
        for (auto& m : hc) m.makeCompressed();
        h_class = std::move(hc);

        reach.assign(dim, {});
        for (const auto& m : h_class)
            for (int col = 0; col < m.outerSize(); ++col)
                for (slh::SparseMatrix::InnerIterator it(m, col); it; ++it)
                    if (it.value() != 0.0 && it.row() != col) reach[col].push_back(static_cast<int>(it.row()));
        for (auto& r : reach) {
            std::sort(r.begin(), r.end());
            r.erase(std::unique(r.begin(), r.end()), r.end());
        }

        const int steps = grid.n_steps();
        table.assign(classes.size(), std::vector<Complex>(2 * steps + 1));
        for (std::size_t c = 0; c < classes.size(); ++c)
            for (int i = 0; i <= 2 * steps; ++i)
                table[c][i] = classes[c](grid.t_start() + 0.5 * i * grid.dt());
    }

    std::shared_ptr<Reduced> reduce(const Eigen::VectorXcd& psi) const {
        std::vector<char> in(dim, 0);
        std::vector<int> stack;
        for (Eigen::Index k = 0; k < dim; ++k)
            if (psi(k) != 0.0) {
                in[k] = 1;
                stack.push_back(static_cast<int>(k));
            }
        while (!stack.empty()) {
            const int col = stack.back();
            stack.pop_back();
            for (int row : reach[col])
                if (!in[row]) {
                    in[row] = 1;
                    stack.push_back(row);
                }
        }
        auto r = std::make_shared<Reduced>();
        std::vector<int> where(dim, -1);
        for (Eigen::Index k = 0; k < dim; ++k)
            if (in[k]) {
                where[k] = static_cast<int>(r->states.size());
                r->states.push_back(static_cast<int>(k));
            }
        const auto s = static_cast<int>(r->states.size());
        for (std::size_t c = 0; c < h_class.size(); ++c) {
            const auto& m = h_class[c];
            for (int b = 0; b < s; ++b)
                for (slh::SparseMatrix::InnerIterator it(m, r->states[b]); it; ++it) {
                    const int a = where[it.row()];
                    if (a >= 0 && it.value() != 0.0) r->entries.push_back({a, b, static_cast<int>(c), it.value()});
                }
        }
        std::sort(r->entries.begin(), r->entries.end(),
                  [](const Entry& x, const Entry& y) { return std::tie(x.row, x.col, x.cls) < std::tie(y.row, y.col, y.cls); });
        r->frozen = r->entries.empty();
        return r;
    }

    Eigen::VectorXcd restrict_to(const Reduced& r, const Eigen::VectorXcd& full) const {
        Eigen::VectorXcd v(r.states.size());
        for (std::size_t a = 0; a < r.states.size(); ++a) v(a) = full(r.states[a]);
        return v;
    }

    Eigen::VectorXcd embed(const Reduced& r, const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd full = Eigen::VectorXcd::Zero(dim);
        for (std::size_t a = 0; a < r.states.size(); ++a) full(r.states[a]) = v(a);
        return full;
    }

    void values_at_slot(int slot, ClassValues& v) const {
        for (std::size_t c = 0; c < classes.size(); ++c) v[c] = table[c][slot];
    }

    void values_at(double t, ClassValues& v) const {
        for (std::size_t c = 0; c < classes.size(); ++c) v[c] = classes[c](t);
    }

    // out = -i H psi
    static void apply(const Reduced& r, const ClassValues& v, const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) {
        out.setZero();
        for (const auto& e : r.entries) out(e.row) += v[e.cls] * e.value * psi(e.col);
        out *= Complex(0.0, -1.0);
    }

    static void rk4(const Reduced& r, const ClassValues& va, const ClassValues& vm, const ClassValues& vb, double h,
                    const Eigen::VectorXcd& psi, Eigen::VectorXcd& out, Work& w) {
        apply(r, va, psi, w.k1);
        w.tmp = psi + (0.5 * h) * w.k1;
        apply(r, vm, w.tmp, w.k2);
        w.tmp = psi + (0.5 * h) * w.k2;
        apply(r, vm, w.tmp, w.k3);
        w.tmp = psi + h * w.k3;
        apply(r, vb, w.tmp, w.k4);
        out = psi + (h / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
    }

    void step_direct(const Reduced& r, const Eigen::VectorXcd& psi, double t, double h, Eigen::VectorXcd& out,
                     Work& w) const {
        ClassValues va, vm, vb;
        values_at(t, va);
        values_at(t + 0.5 * h, vm);
        values_at(t + h, vb);
        rk4(r, va, vm, vb, h, psi, out, w);
    }

    TrajectoryRecord run(std::uint64_t seed, const TrajectoryOptions& opts) const {
        auto rng = numerics::rng_stream(seed, 0);
        TrajectoryRecord rec;
        rec.seed = seed;
        auto red = reduce(net.initial_state);
        Eigen::VectorXcd psi = restrict_to(*red, net.initial_state);
        Eigen::VectorXcd trial(psi.size());
        Work work;
        work.resize(psi.size());
        double threshold = rng.uniform();
        const int steps = grid.n_steps();
        double t = grid.t_start();
        int i = 0;
        bool on_node = true;
        ClassValues va{}, vm{}, vb{};
        if (opts.keep_trace) rec.survival_trace.emplace_back(t, psi.squaredNorm());
        while (i < steps && !red->frozen) {
            const double t_next = grid.at(i + 1);
            if (on_node) {
                values_at_slot(2 * i, va);
                values_at_slot(2 * i + 1, vm);
                values_at_slot(2 * i + 2, vb);
                rk4(*red, va, vm, vb, grid.dt(), psi, trial, work);
            } else {
                step_direct(*red, psi, t, t_next - t, trial, work);
            }
            const double n0 = psi.squaredNorm();
            const double n1 = trial.squaredNorm();
            if (!std::isfinite(n1)) throw NumericalInstabilityError("run_trajectory: state diverged");
            if (n0 - n1 > 0.1 * n0) throw ResolutionError("run_trajectory: norm drop per step above 0.1, refine the grid");
            if (n1 >= threshold) {
                psi.swap(trial);
                t = t_next;
                ++i;
                on_node = true;
                if (opts.keep_trace && i % std::max(1, opts.trace_stride) == 0)
                    rec.survival_trace.emplace_back(t, psi.squaredNorm());
                continue;
            }
            const Eigen::VectorXcd start = psi;
            const double t0 = t;
            Eigen::VectorXcd probe(psi.size());
            auto norm_at = [&](double tau) {
                if (tau <= t0) return start.squaredNorm();
                if (tau >= t_next) return n1;
                step_direct(*red, start, t0, tau - t0, probe, work);
                return probe.squaredNorm();
            };
            double tj = jump_time_bisect(norm_at, threshold, t0, t_next);
            if (!rec.jumps.empty() && tj <= rec.jumps.back().time)
                tj = std::nextafter(rec.jumps.back().time, INFINITY);
            if (tj > t0)
                step_direct(*red, start, t0, tj - t0, probe, work);
            else
                probe = start;
            const Eigen::VectorXcd pre = embed(*red, probe);

            std::vector<Eigen::VectorXcd> out;
            std::vector<double> weight;
            double total = 0.0;
            for (const auto& ops : jump_ops) {
                Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
                for (const auto& [c, m] : ops) v += classes[c](tj) * (m * pre);
                weight.push_back(v.squaredNorm());
                total += weight.back();
                out.push_back(std::move(v));
            }
            if (!(total > 0.0)) throw NumericalInstabilityError("run_trajectory: jump with vanishing rates");
            const double pick = rng.uniform() * total;
            std::size_t ch = 0;
            double acc = weight[0];
            while (ch + 1 < weight.size() && acc < pick) acc += weight[++ch];
            while (weight[ch] == 0.0 && ch > 0) --ch;
            rec.jumps.push_back({tj, static_cast<int>(ch) + 1});
            const Eigen::VectorXcd after = out[ch] / std::sqrt(weight[ch]);
            red = reduce(after);
            psi = restrict_to(*red, after);
            trial.resize(psi.size());
            work.resize(psi.size());
            threshold = rng.uniform();
            t = tj;
            on_node = false;
            if (opts.keep_trace) rec.survival_trace.emplace_back(t, 1.0);
        }
        rec.final_norm2 = psi.squaredNorm();
        if (opts.keep_final_state) rec.final_state = embed(*red, psi / std::sqrt(rec.final_norm2));
        return rec;
    }

    Eigen::VectorXcd no_jump() const {
        auto red = reduce(net.initial_state);
        Eigen::VectorXcd psi = restrict_to(*red, net.initial_state);
        Eigen::VectorXcd next(psi.size());
        Work work;
        work.resize(psi.size());
        ClassValues va{}, vm{}, vb{};
        for (int i = 0; i < grid.n_steps() && !red->frozen; ++i) {
            values_at_slot(2 * i, va);
            values_at_slot(2 * i + 1, vm);
            values_at_slot(2 * i + 2, vb);
            rk4(*red, va, vm, vb, grid.dt(), psi, next, work);
            psi.swap(next);
        }
        return embed(*red, psi);
    }
};

Propagator::Propagator(const slh::Network& network, const numerics::TimeGrid& grid)
    : impl_(std::make_unique<Impl>(network, grid)) {}
Propagator::~Propagator() = default;

const slh::Network& Propagator::network() const noexcept { return impl_->net; }
const numerics::TimeGrid& Propagator::grid() const noexcept { return impl_->grid; }

TrajectoryRecord Propagator::run(std::uint64_t seed, const TrajectoryOptions& opts) const {
    return impl_->run(seed, opts);
}

Eigen::VectorXcd Propagator::no_jump_state() const { return impl_->no_jump(); }

TrajectoryRecord run_trajectory(const slh::Network& network, const numerics::TimeGrid& t_grid, std::uint64_t seed,
                                const TrajectoryOptions& opts) {
    return Propagator(network, t_grid).run(seed, opts);
}

int default_thread_count() {
    if (const char* env = std::getenv("PNR_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<TrajectoryRecord> run_ensemble(const Propagator& prop, int M, std::uint64_t base_seed, int threads,
                                           const TrajectoryOptions& opts) {
    if (M < 1) throw DomainError("run_ensemble: need M >= 1");
    const int workers = std::min(M, threads > 0 ? threads : default_thread_count());
    std::vector<TrajectoryRecord> out(M);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    int failed_index = M;
    std::mutex mu;
    auto work = [&] {
        for (int k = next++; k < M; k = next++) {
            try {
                out[k] = prop.run(base_seed + static_cast<std::uint64_t>(k), opts);
            } catch (...) {
                std::lock_guard lock(mu);
                if (k < failed_index) {
                    failed_index = k;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<TrajectoryRecord> run_ensemble(const slh::Network& network, const numerics::TimeGrid& t_grid, int M,
                                           std::uint64_t base_seed, int threads, const TrajectoryOptions& opts) {
    const Propagator prop(network, t_grid);
    return run_ensemble(prop, M, base_seed, threads, opts);
}

int classify_outcome(const TrajectoryRecord& rec, double tie_window, bool* ambiguous) {
    if (ambiguous) *ambiguous = false;
    auto sub = std::find_if(rec.jumps.begin(), rec.jumps.end(), [](const JumpEvent& e) { return e.channel == 1; });
    if (sub == rec.jumps.end()) return 0;
    int before = 0;
    for (const auto& e : rec.jumps) {
        if (e.channel == 1) continue;
        if (e.time < sub->time - tie_window) {
            ++before;
        } else if (std::abs(e.time - sub->time) <= tie_window && ambiguous) {
            *ambiguous = true;
        }
    }
    return before + 1;
}

OutcomeEstimate estimate_outcomes(const std::vector<TrajectoryRecord>& ensemble, int n_photons, double dt) {
    if (n_photons < 1) throw DomainError("estimate_outcomes: need N >= 1");
    if (ensemble.empty()) throw InsufficientStatisticsError("estimate_outcomes: empty ensemble");
    OutcomeEstimate est;
    est.counts.assign(n_photons + 1, 0);
    for (const auto& rec : ensemble) {
        bool amb = false;
        const int j = classify_outcome(rec, dt / 64.0, &amb);
        if (j > n_photons) throw DomainError("estimate_outcomes: record has more photons than N");
        ++est.counts[j];
        if (amb) ++est.ambiguous;
    }
    est.trajectories = static_cast<long>(ensemble.size());
    const double m = static_cast<double>(est.trajectories);
    for (long c : est.counts) {
        const double p = c / m;
        est.probability.push_back(p);
        est.sigma.push_back(std::sqrt(p * (1.0 - p) / m));
    }
    return est;
}

G2Histogram estimate_g2(const std::vector<TrajectoryRecord>& ensemble,
                        const std::function<bool(const TrajectoryRecord&)>& postselect, double bin_width,
                        std::pair<double, double> range, int through_channel) {
    if (!(bin_width > 0.0) || !(range.second > range.first)) throw DomainError("estimate_g2: bad binning");
    const int bins = static_cast<int>(std::ceil((range.second - range.first) / bin_width));
    G2Histogram h{range.first, bin_width, Eigen::MatrixXd::Zero(bins, bins), 0};
    for (const auto& rec : ensemble) {
        if (!postselect(rec)) continue;
        ++h.selected;
        std::vector<int> idx;
        for (const auto& e : rec.jumps)
            if (e.channel == through_channel) {
                const int b = static_cast<int>(std::floor((e.time - range.first) / bin_width));
                if (b >= 0 && b < bins) idx.push_back(b);
            }
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = a + 1; b < idx.size(); ++b) {
                h.values(idx[a], idx[b]) += 1.0;
                h.values(idx[b], idx[a]) += 1.0;
            }
    }
    if (h.selected < 100) throw InsufficientStatisticsError("estimate_g2: fewer than 100 selected trajectories");
    h.values /= bin_width * bin_width * static_cast<double>(h.selected);
    return h;
}

double binned_g2_zero(const G2Histogram& h, int measured_photons) {
    const double num = h.values.diagonal().sum() * h.bin_width;
    const Eigen::VectorXd marginal = h.values.rowwise().sum() * h.bin_width;
    const double den = marginal.squaredNorm() * h.bin_width;
    if (!(den > 1e-30)) throw DegenerateStateError("binned_g2_zero: empty histogram");
    const double m1 = measured_photons - 1.0;
    return m1 * m1 * num / den;
}

ClickSummary summarize_clicks(const TrajectoryRecord& rec, int n_emitters, int n_photons) {
    ClickSummary s;
    for (const auto& e : rec.jumps) {
        if (e.channel >= 1 && e.channel <= n_emitters)
            s.subtraction_clicks.insert(e.channel);
        else if (e.channel == n_emitters + 1)
            s.final_detector_click = true;
        else
            throw DomainError("summarize_clicks: jump on an unknown channel");
    }
    s.inferred_count = static_cast<int>(s.subtraction_clicks.size()) + (s.final_detector_click ? 1 : 0);
    s.true_count = n_photons;
    s.error = s.inferred_count - n_photons;
    return s;
}

ResponseCurve response_curve(int n, double delta_gamma, const std::vector<int>& n_range, int M,
                             std::uint64_t base_seed, const ResponseOptions& opts) {
    if (n < 1 || n > 5) throw DomainError("response_curve: need 1 <= n <= 5");
    if (M < 2) throw DomainError("response_curve: need M >= 2");
    ResponseCurve curve;
    std::uint64_t seed = base_seed;
    for (int photons : n_range) {
        if (photons < 1 || photons > 7) throw DomainError("response_curve: N must be in 1..7");
        pulses::PulseSpec spec;
        spec.n_photons = photons;
        spec.delta = delta_gamma / opts.gamma;
        const auto net = slh::full_network(spec, n, opts.gamma);
        auto grid = default_grid(spec, opts.gamma);
        if (opts.max_dt > 0.0 && grid.dt() > opts.max_dt)
            grid = numerics::TimeGrid::with_max_step(grid.t_start(), grid.t_end(), opts.max_dt);
        const Propagator prop(net, grid);
        const auto ens = run_ensemble(prop, M, seed, opts.threads);
        seed += static_cast<std::uint64_t>(M);
        double s1 = 0, s2 = 0, e1 = 0, e2 = 0;
        for (const auto& rec : ens) {
            const auto c = summarize_clicks(rec, n, photons);
            s1 += c.inferred_count;
            s2 += static_cast<double>(c.inferred_count) * c.inferred_count;
            const double ae = std::abs(c.error);
            e1 += ae;
            e2 += ae * ae;
        }
        const double mean = s1 / M;
        const double var = std::max(0.0, (s2 - M * mean * mean) / (M - 1.0));
        const double emean = e1 / M;
        const double evar = std::max(0.0, (e2 - M * emean * emean) / (M - 1.0));
        curve.points.push_back({photons, mean, std::sqrt(var / M), emean, std::sqrt(evar / M)});
    }
    return curve;
}

} // namespace pnr::trajectory
