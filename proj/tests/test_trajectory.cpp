#include <doctest.h>

#include <pnr/conventional.hpp>
#include <pnr/nonlinear_model.hpp>
#include <pnr/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace pnr;
using namespace pnr::trajectory;

namespace {

pulses::PulseSpec fock(int n, double delta) {
    pulses::PulseSpec s;
    s.n_photons = n;
    s.delta = delta;
    return s;
}

bool same_records(const std::vector<TrajectoryRecord>& a, const std::vector<TrajectoryRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].seed != b[k].seed || a[k].jumps.size() != b[k].jumps.size()) return false;
        for (std::size_t i = 0; i < a[k].jumps.size(); ++i)
            if (a[k].jumps[i].time != b[k].jumps[i].time || a[k].jumps[i].channel != b[k].jumps[i].channel) return false;
    }
    return true;
}

} // namespace

TEST_CASE("default grid") {
    const auto g = default_grid(fock(2, 1.0));
    CHECK(g.t_start() <= -8.0);
    CHECK(g.t_end() >= 16.0);
    CHECK(g.dt() <= 0.005 + 1e-15);
    CHECK(default_grid(fock(1, 10.0)).dt() <= 0.01 + 1e-15);
}

TEST_CASE("jump time bisection") {
    const double t = jump_time_bisect([](double x) { return 1.0 - x; }, 0.3, 0.0, 1.0);
    CHECK(std::abs(t - 0.7) <= 1.0 / 64);
    const double e = jump_time_bisect([](double x) { return std::exp(-x); }, 0.5, 0.5, 1.0);
    CHECK(std::abs(e - std::log(2.0)) <= 0.5 / 64);
    CHECK_THROWS_AS(jump_time_bisect([](double x) { return 1.0 - x; }, 0.3, 0.0, 0.5), MisuseError);
    CHECK_THROWS_AS(jump_time_bisect([](double x) { return 1.0 - x; }, 0.3, 1.0, 1.0), MisuseError);
}

TEST_CASE("decoupled detector never subtracts") {
    const auto net = slh::full_network(fock(2, 1.0), 1, 0.0);
    const auto grid = default_grid(net.spec, 0.0);
    const auto ens = run_ensemble(net, grid, 50, 7, 1);
    for (const auto& rec : ens) {
        REQUIRE(rec.jumps.size() == 2);
        for (const auto& e : rec.jumps) CHECK(e.channel == 2);
    }
    const double width = grid.t_end() - grid.t_start();
    for (const auto& rec : ens)
        for (const auto& e : rec.jumps) CHECK(std::abs(e.time) < 0.5 * width);
}

TEST_CASE("single trajectory structure") {
    const auto net = slh::full_network(fock(3, 1.0), 2, 1.0);
    const Propagator prop(net, default_grid(net.spec));
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto rec = prop.run(seed, {true, true, 50});
        CHECK(rec.seed == seed);
        CHECK(rec.jumps.size() <= 3);
        int per_channel[4] = {0, 0, 0, 0};
        for (std::size_t i = 0; i < rec.jumps.size(); ++i) {
            const auto& e = rec.jumps[i];
            REQUIRE(e.channel >= 1);
            REQUIRE(e.channel <= 3);
            ++per_channel[e.channel];
            if (i) CHECK(e.time > rec.jumps[i - 1].time);
        }
        CHECK(per_channel[1] <= 1);
        CHECK(per_channel[2] <= 1);
        CHECK(std::abs(rec.final_state.norm() - 1.0) < 1e-9);
        CHECK(rec.final_norm2 <= 1.0 + 1e-12);
        REQUIRE(rec.survival_trace.size() >= 2);
        for (std::size_t i = 1; i < rec.survival_trace.size(); ++i)
            CHECK(rec.survival_trace[i].first > rec.survival_trace[i - 1].first);
    }
    const auto a = prop.run(5);
    const auto b = run_trajectory(net, default_grid(net.spec), 5);
    CHECK(same_records({a}, {b}));
}

TEST_CASE("single-photon subtraction probability") {
    const auto net = slh::full_network(fock(1, 0.5), 1, 1.0);
    const auto grid = default_grid(net.spec);
    const auto est = estimate_outcomes(run_ensemble(net, grid, 1000, 101), 1, grid.dt());
    CHECK(std::abs(est.probability[1] - 0.34135092626439377) < 3.0 * est.sigma[1]);
    CHECK(est.probability[0] + est.probability[1] == doctest::Approx(1.0));
}

TEST_CASE("ensembles") {
    const auto net = slh::full_network(fock(2, 1.0), 1, 1.0);
    const Propagator prop(net, default_grid(net.spec));
    const auto one = run_ensemble(prop, 1, 42);
    CHECK(same_records(one, {prop.run(42, {false, false, 1})}));

    const auto serial = run_ensemble(prop, 60, 900, 1);
    const auto parallel = run_ensemble(prop, 60, 900, 3);
    CHECK(same_records(serial, parallel));
    CHECK(same_records(serial, run_ensemble(prop, 60, 900, 1)));
    for (int k = 0; k < 60; ++k) CHECK(serial[k].seed == 900u + k);

    auto shuffled = serial;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(3));
    const double dt = prop.grid().dt();
    const auto e1 = estimate_outcomes(serial, 2, dt);
    const auto e2 = estimate_outcomes(shuffled, 2, dt);
    CHECK(e1.counts == e2.counts);

    auto doubled = serial;
    doubled.insert(doubled.end(), serial.begin(), serial.end());
    const auto e3 = estimate_outcomes(doubled, 2, dt);
    for (int j = 0; j <= 2; ++j) {
        CHECK(e3.probability[j] == doctest::Approx(e1.probability[j]));
        if (e1.sigma[j] > 0) CHECK(e1.sigma[j] / e3.sigma[j] == doctest::Approx(std::sqrt(2.0)));
    }
    CHECK_THROWS_AS(run_ensemble(prop, 0, 1), DomainError);
    CHECK_THROWS_AS(estimate_outcomes({}, 2, dt), InsufficientStatisticsError);
    CHECK_THROWS_AS(estimate_outcomes(serial, 1, dt), DomainError);
}

TEST_CASE("outcome classification") {
    TrajectoryRecord rec;
    CHECK(classify_outcome(rec, 1e-4) == 0);
    rec.jumps = {{-1.0, 2}, {0.5, 1}, {1.0, 2}};
    CHECK(classify_outcome(rec, 1e-4) == 2);
    rec.jumps = {{0.5, 1}, {1.0, 2}};
    CHECK(classify_outcome(rec, 1e-4) == 1);
    bool amb = false;
    rec.jumps = {{0.5, 2}, {0.50001, 1}};
    CHECK(classify_outcome(rec, 1e-4, &amb) == 1);
    CHECK(amb);
}

TEST_CASE("trajectory outcomes agree with the scattering calculation") {
    const auto spec = fock(2, 1.0);
    const auto net = slh::full_network(spec, 1, 1.0);
    const auto grid = default_grid(spec);
    const auto est = estimate_outcomes(run_ensemble(net, grid, 1500, 555), 2, grid.dt());
    double total = 0.0;
    for (int j = 0; j <= 2; ++j) {
        total += est.probability[j];
        CHECK(std::abs(est.probability[j] - nonlinear_model::p_outcome(spec, j)) < 3.0 * est.sigma[j]);
    }
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("through-channel correlations") {
    SUBCASE("decoupled detector reproduces the input two-photon correlation") {
        const auto spec = fock(2, 1.0);
        const auto net = slh::full_network(spec, 1, 0.0);
        const auto ens = run_ensemble(net, default_grid(spec, 0.0), 4000, 77);
        const double w = 0.75;
        const auto h = estimate_g2(ens, [](const TrajectoryRecord&) { return true; }, w, {-2.25, 2.25}, 2);
        CHECK(h.selected == 4000);
        CHECK((h.values - h.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const int b = static_cast<int>(h.values.rows());
        Eigen::VectorXd binned(b);
        for (int i = 0; i < b; ++i) {
            auto f = [](double t) { return std::norm(pulses::gaussian_h(1.0, 0.0, t)); };
            binned(i) = numerics::quad_1d(f, h.t_start + i * w, h.t_start + (i + 1) * w) / w;
        }
        // two identical photons: pairs fill off-diagonal bins with 2 |h|^2 |h|^2
        const Eigen::MatrixXd model = 2.0 * binned * binned.transpose();
        Eigen::VectorXd x(b * b - b), y(b * b - b);
        int k = 0;
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < b; ++j)
                if (i != j) {
                    x(k) = h.values(i, j);
                    y(k++) = model(i, j);
                }
        const double corr = ((x.array() - x.mean()) * (y.array() - y.mean())).sum() /
                            std::sqrt((x.array() - x.mean()).square().sum() * (y.array() - y.mean()).square().sum());
        CHECK(corr >= 0.99);
        CHECK_THROWS_AS(estimate_g2(ens, [](const TrajectoryRecord& r) { return r.seed < 150; }, w, {-2.25, 2.25}, 2),
                        InsufficientStatisticsError);
        CHECK_THROWS_AS(estimate_g2(ens, [](const TrajectoryRecord&) { return true; }, 0.0, {-1.0, 1.0}, 2),
                        DomainError);
    }
    SUBCASE("long pulses bunch when both photons pass") {
        const auto spec = fock(2, 5.0);
        const auto net = slh::full_network(spec, 1, 1.0);
        const auto ens = run_ensemble(net, default_grid(spec), 3000, 31337);
        auto transmitted = [](const TrajectoryRecord& r) {
            return std::none_of(r.jumps.begin(), r.jumps.end(), [](const JumpEvent& e) { return e.channel == 1; });
        };
        const auto h = estimate_g2(ens, transmitted, 0.25, {-15.0, 17.0}, 2);
        CHECK(binned_g2_zero(h, 2) > 1.0);
    }
}

TEST_CASE("click summaries") {
    TrajectoryRecord rec;
    rec.jumps = {{0.0, 1}, {0.2, 3}, {0.5, 2}, {0.9, 3}};
    const auto s = summarize_clicks(rec, 2, 5);
    CHECK(s.subtraction_clicks == std::set<int>{1, 2});
    CHECK(s.final_detector_click);
    CHECK(s.inferred_count == 3);
    CHECK(s.true_count == 5);
    CHECK(s.error == -2);
    rec.jumps = {{0.0, 4}};
    CHECK_THROWS_AS(summarize_clicks(rec, 2, 1), DomainError);
    CHECK(summarize_clicks(TrajectoryRecord{}, 3, 1).inferred_count == 0);
}

TEST_CASE("response curves") {
    SUBCASE("one photon always clicks once") {
        const auto c = response_curve(2, 1.0, {1}, 100, 5);
        REQUIRE(c.points.size() == 1);
        CHECK(c.points[0].mean_clicks == 1.0);
        CHECK(c.points[0].stderr_clicks == 0.0);
    }
    SUBCASE("short pulses pass through") {
        const auto c = response_curve(1, 0.1, {2}, 400, 9);
        const double p0 = nonlinear_model::p_outcome(fock(2, 0.1), 0);
        const auto& pt = c.points[0];
        CHECK(pt.mean_clicks < 1.3);
        CHECK(std::abs(pt.mean_clicks - (2.0 - p0)) < 3.0 * pt.stderr_clicks + 1e-12);
    }
    SUBCASE("long pulses climb a staircase above the splitter tree") {
        const auto c = response_curve(2, 10.0, {1, 2, 3, 4}, 200, 13);
        double prev = 0.0;
        for (const auto& pt : c.points) {
            CHECK(pt.mean_clicks > prev);
            CHECK(pt.mean_clicks <= std::min(pt.n_photons, 3) + 1e-12);
            if (pt.n_photons <= 2) CHECK(pt.mean_clicks > pt.n_photons - 0.02);
            const double tree = conventional::avg_clicks(std::vector<double>(3, 1.0 / 3.0), pt.n_photons);
            if (pt.n_photons > 1) CHECK(pt.mean_clicks - 3.0 * pt.stderr_clicks > tree);
            prev = pt.mean_clicks;
        }
    }
    SUBCASE("argument checks") {
        CHECK_THROWS_AS(response_curve(0, 1.0, {1}, 10, 1), DomainError);
        CHECK_THROWS_AS(response_curve(1, 1.0, {1}, 1, 1), DomainError);
        CHECK_THROWS_AS(response_curve(1, 1.0, {9}, 10, 1), DomainError);
    }
}

TEST_CASE("coarse grids are rejected") {
    const auto net = slh::full_network(fock(1, 1.0), 1, 1.0);
    const auto grid = numerics::TimeGrid(-8.0, 16.0, 25);
    bool threw = false;
    for (std::uint64_t seed = 0; seed < 20 && !threw; ++seed) {
        try {
            run_trajectory(net, grid, seed);
        } catch (const ResolutionError&) {
            threw = true;
        }
    }
    CHECK(threw);
}
