#include <doctest.h>

#include "oracles.hpp"

#include <pnr/linear_model.hpp>
#include <pnr/nonlinear_model.hpp>

#include <cmath>

using namespace pnr;
using namespace pnr::nonlinear_model;
using pnr::pulses::PulseFamily;
using pnr::pulses::PulseSpec;

namespace {

PulseSpec fock(int n, double delta) {
    PulseSpec s;
    s.n_photons = n;
    s.delta = delta;
    return s;
}

double linear_p(double dg) {
    linear_model::LinearConfig c;
    c.delta_gamma = dg;
    return linear_model::p_subtract_single(1, c);
}

NonlinearOptions identity() {
    NonlinearOptions o;
    o.gamma = 0.0;
    return o;
}

} // namespace

TEST_CASE("one-photon output amplitudes") {
    const auto s = fock(1, 0.7);
    for (double tp : {-1.0, 0.0, 0.4, 1.5}) {
        const Complex conv = oracle::simpson(
            [&](double t) { return -std::exp(t - tp) * pulses::gaussian_h(0.7, 0.0, t); }, -12.0, tp, 1e-13);
        std::array<double, 1> x{tp};
        CHECK(std::abs(output_amplitude(s, 1, x) - conv) < 1e-7);
        CHECK(std::abs(output_amplitude(s, 0, x) - (pulses::gaussian_h(0.7, 0.0, tp) + conv)) < 1e-7);
    }
}

TEST_CASE("two-photon amplitude with the second photon subtracted, dense-grid value") {
    // midpoint sums at 400 x 400 of the closed form against sqrt2 h(t1) h(t2)
    constexpr double kGrid = -0.719820416261093;
    std::array<double, 2> tp{0.0, 0.5};
    const Complex v = output_amplitude(fock(2, 1.0), 2, tp);
    CHECK(std::abs(v.real() - kGrid) < 1e-3 * std::abs(kGrid));
    CHECK(std::abs(v.imag()) < 1e-12);
}

TEST_CASE("outcome probabilities") {
    SUBCASE("one photon matches the linear model") {
        for (double dg : {0.3, 0.5, 2.0}) CHECK(std::abs(p_outcome(fock(1, dg), 1) - linear_p(dg)) < 1e-7);
    }
    SUBCASE("two-photon outcomes against the prototype tables") {
        struct Row {
            double dg;
            double p[3];
        };
        const Row rows[] = {{0.3, {0.614774, 0.025361, 0.359865}},
                            {1.0, {0.287407, 0.166220, 0.546373}},
                            {3.0, {0.155831, 0.504207, 0.339962}},
                            {5.0, {0.120863, 0.670410, 0.208726}},
                            {10.0, {0.073075, 0.830193, 0.096732}}};
        for (const auto& r : rows) {
            double sum = 0.0;
            for (int j = 0; j <= 2; ++j) {
                const double p = p_outcome(fock(2, r.dg), j);
                CHECK(std::abs(p - r.p[j]) < 2e-6);
                sum += p;
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
        CHECK(p_outcome(fock(2, 5.0), 1) > p_outcome(fock(2, 5.0), 2));
        CHECK(p_outcome(fock(2, 10.0), 1) > 0.8);
    }
    SUBCASE("weak interaction: failure probability close to the linear value") {
        const double p = linear_p(0.1);
        CHECK(std::abs(p_outcome(fock(2, 0.1), 0) - (1 - p) * (1 - p)) <= 0.02);
    }
    SUBCASE("well separated photons follow the linear model") {
        PulseSpec s = fock(2, 1.0);
        s.family = PulseFamily::SeparatedGaussians;
        s.separation = 20.0;
        const double p = linear_p(1.0);
        CHECK(std::abs(p_outcome(s, 0) - (1 - p) * (1 - p)) <= 0.01);
        CHECK(std::abs(p_outcome(s, 1) - p) <= 0.01);
        CHECK(std::abs(p_outcome(s, 2) - (1 - p) * p) <= 0.01);
    }
    SUBCASE("limits") {
        CHECK_THROWS_AS(p_outcome(fock(4, 1.0), 0), UnsupportedError);
        CHECK_THROWS_AS(p_outcome(fock(2, 1.0), 3), DomainError);
    }
}

TEST_CASE("second-order correlator") {
    SUBCASE("identity scattering gives the product state") {
        const auto s = fock(2, 1.0);
        for (auto [a, b] : std::vector<std::pair<double, double>>{{0.0, 0.0}, {-0.3, 0.6}, {1.1, -0.2}}) {
            const double want = 2.0 * std::norm(pulses::gaussian_h(1.0, 0.0, a) * pulses::gaussian_h(1.0, 0.0, b));
            CHECK(std::abs(correlator_G2(s, 0, a, b, identity()) - want) < 1e-7 * want);
        }
    }
    SUBCASE("anti-bunching dip at weak interaction") {
        const auto s = fock(2, 0.2);
        const double input = 2.0 * std::norm(pulses::gaussian_h(0.2, 0.0, 0.0) * pulses::gaussian_h(0.2, 0.0, 0.0));
        CHECK(correlator_G2(s, 0, 0.0, 0.0) < input);
    }
    SUBCASE("symmetric in its two times") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-2.0, 2.5);
        for (const auto& s : {fock(2, 1.0), fock(3, 1.5)})
            for (int k = 0; k < 25; ++k) {
                const double a = u(rng), b = u(rng);
                const double g = correlator_G2(s, 0, a, b);
                CHECK(g >= 0.0);
                CHECK(std::abs(g - correlator_G2(s, 0, b, a)) <= 1e-9 * std::max(1.0, g));
            }
    }
    SUBCASE("supported cases only") {
        CHECK_THROWS_AS(correlator_G2(fock(2, 1.0), 1, 0.0, 0.0), DomainError);
        CHECK_THROWS_AS(correlator_G2(fock(3, 1.0), 2, 0.0, 0.0), DomainError);
        CHECK_NOTHROW(correlator_G2(fock(3, 1.0), 3, 0.0, 0.2));
    }
    SUBCASE("sampled grid") {
        const numerics::TimeGrid grid(-1.0, 1.0, 5);
        const auto g = sample_G2(fock(2, 1.0), 0, grid);
        CHECK(g.rows() == 5);
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(g(1, 3) - correlator_G2(fock(2, 1.0), 0, -0.5, 0.5)) < 1e-12);
    }
}

TEST_CASE("zero-delay g2") {
    CHECK(std::abs(g2_zero(fock(2, 1.0), 0, identity()) - 0.5) < 1e-6);
    CHECK(std::abs(g2_zero(fock(3, 1.0), 0, identity()) - 2.0 / 3.0) < 1e-6);
    CHECK(g2_zero(fock(2, 0.2), 0) < 1.0);
    CHECK(g2_zero(fock(2, 0.5), 0) < 1.0);
    CHECK(g2_zero(fock(2, 2.0), 0) > 1.0);
    CHECK(g2_zero(fock(2, 5.0), 0) > 1.0);
}

TEST_CASE("first-order intensity from the second-order correlator") {
    const auto id = g1_from_g2_check(fock(2, 1.0), 0, 0.3, identity());
    const double h2 = std::norm(pulses::gaussian_h(1.0, 0.0, 0.3));
    CHECK(std::abs(id.lhs - 2.0 * h2) < 1e-7);
    CHECK(std::abs(id.rhs - 2.0 * h2) < 1e-7);
    for (auto [n, j, t] : std::vector<std::tuple<int, int, double>>{{2, 0, 0.0}, {3, 0, 0.5}, {3, 3, 0.5}, {3, 1, -0.2}}) {
        const auto c = g1_from_g2_check(fock(n, 1.0), j, t);
        CHECK(std::abs(c.lhs - c.rhs) <= 1e-4 * std::max(c.lhs, c.rhs));
    }
}
