#include <doctest.h>

#include <pnr/numerics.hpp>
#include <pnr/slh.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace pnr;
using namespace pnr::slh;

namespace {

double max_diff(const SparseMatrix& a, const SparseMatrix& b) {
    const Eigen::MatrixXcd d = Eigen::MatrixXcd(a) - Eigen::MatrixXcd(b);
    return d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
}

double triple_diff(const SLHTriple& a, const SLHTriple& b, const std::vector<double>& times) {
    double d = (a.S - b.S).cwiseAbs().maxCoeff();
    for (double t : times) {
        d = std::max(d, max_diff(a.H.at(t), b.H.at(t)));
        for (std::size_t k = 0; k < a.L.size(); ++k) d = std::max(d, max_diff(a.L[k].at(t), b.L[k].at(t)));
    }
    return d;
}

SparseMatrix random_matrix(Eigen::Index dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = Complex(g(rng), g(rng));
    return m.sparseView();
}

SLHTriple random_triple(const HilbertLayout& layout, int channels, std::mt19937_64& rng) {
    SLHTriple g = identity_triple(channels, layout);
    std::normal_distribution<double> n;
    Eigen::MatrixXcd a(channels, channels);
    for (int i = 0; i < channels; ++i)
        for (int j = 0; j < channels; ++j) a(i, j) = Complex(n(rng), n(rng));
    g.S = Eigen::HouseholderQR<Eigen::MatrixXcd>(a).householderQ();
    const double w = n(rng);
    Envelope env([w](double t) { return Complex(std::cos(w * t), std::sin(t)); });
    for (int k = 0; k < channels; ++k) g.L[k] = Operator(random_matrix(layout.dim(), rng)) + Operator(random_matrix(layout.dim(), rng), env);
    const SparseMatrix h = random_matrix(layout.dim(), rng);
    g.H = Operator(SparseMatrix(h + SparseMatrix(h.adjoint())));
    return g;
}

bool hermitian_at(const Operator& h, double t) {
    const SparseMatrix m = h.at(t);
    return max_diff(m, SparseMatrix(m.adjoint())) < 1e-12;
}

} // namespace

TEST_CASE("Hilbert layout") {
    const auto l = HilbertLayout::detector(2, {4});
    CHECK(l.dim() == 36);
    CHECK(l.n_emitters() == 2);
    CHECK(l.index_of("cavity0") == 2);
    CHECK_THROWS_AS(l.index_of("emitter7"), DimensionError);
    CHECK_THROWS_AS(HilbertLayout({{"a", 2}, {"a", 3}}), DimensionError);
    const auto idx = l.basis_index({1, 2, 3});
    CHECK(l.levels_of(idx) == std::vector<int>{1, 2, 3});
    const SparseMatrix e = l.embed("emitter1", sigma(1, 3));
    // |1><3| on emitter1: maps (a, 2, c) -> (a, 0, c)
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(36);
    v(l.basis_index({2, 2, 1})) = 1.0;
    const Eigen::VectorXcd w = e * v;
    CHECK(w(l.basis_index({2, 0, 1})) == Complex(1.0));
    CHECK(w.norm() == doctest::Approx(1.0));
}

TEST_CASE("emitter triple") {
    const auto l = HilbertLayout::detector(1);
    const auto g = emitter_triple(0, 1, 2.0, l);
    CHECK(g.channels() == 2);
    CHECK(max_diff(g.L[0].at(0.0), std::sqrt(2.0) * sigma(2, 3)) < 1e-15);
    CHECK(max_diff(g.L[1].at(0.0), std::sqrt(2.0) * sigma(1, 3)) < 1e-15);
    CHECK(g.H.is_zero());
    for (const auto& op : g.L) {
        const Eigen::MatrixXcd ll = Eigen::MatrixXcd((op.adjoint() * op).at(0.0));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (!(i == 2 && j == 2)) CHECK(std::abs(ll(i, j)) == 0.0);
    }
    const auto l3 = HilbertLayout::detector(3);
    CHECK(emitter_triple(1, 3, 1.0, l3).channels() == 4);
    CHECK_THROWS_AS(emitter_triple(0, 1, 1.0, HilbertLayout::detector(0, {2})), DimensionError);
}

TEST_CASE("series product") {
    const auto l = HilbertLayout::detector(2);
    const std::vector<double> times{0.0};
    SUBCASE("identity is neutral") {
        const auto g = emitter_triple(1, 2, 1.3, l);
        CHECK(triple_diff(series_product(identity_triple(3, l), g), g, times) < 1e-15);
        CHECK(triple_diff(series_product(g, identity_triple(3, l)), g, times) < 1e-15);
    }
    SUBCASE("two-emitter cascade Hamiltonian") {
        const double gamma = 0.9;
        const auto g = series_product(emitter_triple(0, 2, gamma, l), emitter_triple(1, 2, gamma, l));
        const SparseMatrix fwd = SparseMatrix(l.embed("emitter1", sigma(3, 1))) * l.embed("emitter0", sigma(1, 3));
        const SparseMatrix want = Complex(0.0, -0.5 * gamma) * (fwd - SparseMatrix(fwd.adjoint()));
        CHECK(max_diff(g.H.at(0.0), want) < 1e-15);
    }
    SUBCASE("associativity on random triples") {
        std::mt19937_64 rng(11);
        const auto small = HilbertLayout({{"x", 2}, {"y", 3}});
        for (int rep = 0; rep < 3; ++rep) {
            const auto a = random_triple(small, 2, rng), b = random_triple(small, 2, rng), c = random_triple(small, 2, rng);
            const auto left = series_product(series_product(a, b), c);
            const auto right = series_product(a, series_product(b, c));
            CHECK(triple_diff(left, right, {0.0, 0.7, -1.3}) < 1e-12);
            for (double t : {0.0, 0.4}) CHECK(hermitian_at(left.H, t));
        }
    }
    SUBCASE("mismatches") {
        CHECK_THROWS_AS(series_product(identity_triple(2, l), identity_triple(3, l)), DimensionError);
        CHECK_THROWS_AS(series_product(identity_triple(3, l), identity_triple(3, HilbertLayout::detector(3))), DimensionError);
    }
}

TEST_CASE("cascade detector") {
    const auto l1 = HilbertLayout::detector(1);
    CHECK(triple_diff(cascade_detector(1, 1.0, l1), emitter_triple(0, 1, 1.0, l1), {0.0}) < 1e-15);
    CHECK_THROWS_AS(cascade_detector(0, 1.0, l1), DomainError);

    const auto l3 = HilbertLayout::detector(3);
    const auto c3 = cascade_detector(3, 1.0, l3);
    // three forward pairs (i < j) and their conjugates, each one nonzero entry per basis column it moves
    int pairs = 0;
    for (int j = 1; j < 3; ++j)
        for (int i = 0; i < j; ++i) {
            const SparseMatrix fwd = SparseMatrix(l3.embed("emitter" + std::to_string(j), sigma(3, 1))) *
                                     l3.embed("emitter" + std::to_string(i), sigma(1, 3));
            const Eigen::MatrixXcd h = c3.H.at(0.0);
            const Eigen::MatrixXcd f = fwd;
            bool found = true;
            for (int r = 0; r < f.rows(); ++r)
                for (int c = 0; c < f.cols(); ++c)
                    if (f(r, c) != 0.0 && std::abs(h(r, c) - Complex(0.0, -0.5)) > 1e-15) found = false;
            pairs += found;
        }
    CHECK(pairs == 3);

    for (int n = 2; n <= 4; ++n) {
        const auto l = HilbertLayout::detector(n);
        SLHTriple fold = emitter_triple(0, n, 1.7, l);
        for (int i = 1; i < n; ++i) fold = series_product(fold, emitter_triple(i, n, 1.7, l));
        CHECK(triple_diff(fold, cascade_detector(n, 1.7, l), {0.0}) < 1e-12);
    }
}

TEST_CASE("shaped-cavity release rate") {
    const double delta = 1.0;
    for (double t : {-1.0, -0.3, 0.0, 0.4}) {
        auto intensity = [&](double x) { return std::norm(pulses::gaussian_h(delta, 0.0, x)); };
        const double released = numerics::quad_1d(intensity, -HUGE_VAL, t);
        CHECK(release_rate(delta, 0.0, t) == doctest::Approx(intensity(t) / (1.0 - released)).epsilon(1e-8));
    }
    CHECK(release_rate(delta, 0.0, 10.0) == kKappaMax);
    double prev = 0.0;
    for (double x = -3.0; x <= 3.0; x += 0.25) {
        const double k = release_rate(delta, 0.0, x);
        CHECK(k >= prev);
        CHECK(k <= kKappaMax);
        prev = k;
    }
}

TEST_CASE("sources and full networks") {
    pulses::PulseSpec s;
    s.n_photons = 5;
    const auto net = full_network(s, 4, 1.0);
    CHECK(net.triple.layout.dim() == 486);
    CHECK(net.triple.channels() == 5);
    CHECK(std::abs(net.initial_state.norm() - 1.0) < 1e-15);
    CHECK(net.initial_state(net.triple.layout.basis_index({0, 0, 0, 0, 5})) == Complex(1.0));
    for (double t : {-3.0, 0.0, 1.0}) CHECK(hermitian_at(net.triple.H, t));

    pulses::PulseSpec hg;
    hg.family = pulses::PulseFamily::HermiteGaussPair;
    hg.n_photons = 2;
    CHECK_THROWS_AS(full_network(hg, 1, 1.0), UnsupportedError);
    pulses::PulseSpec big;
    big.n_photons = 2;
    CHECK_THROWS_AS(full_network(big, 9, 1.0), DimensionError);

    pulses::PulseSpec close;
    close.family = pulses::PulseFamily::SeparatedGaussians;
    close.n_photons = 2;
    close.separation = 1.0;
    CHECK_THROWS_AS(full_network(close, 1, 1.0), UnsupportedError);
}

TEST_CASE("source-to-emitter cascade terms") {
    pulses::PulseSpec s;
    s.n_photons = 2;
    const double gamma = 1.3;
    const auto net = full_network(s, 2, gamma);
    const auto& l = net.triple.layout;
    const double t = 0.2;
    const double k = release_rate(s.delta, 0.0, t);
    const SparseMatrix a = l.embed("cavity0", annihilation(3));
    SparseMatrix want = cascade_detector(2, gamma, l).H.at(0.0);
    for (int j = 0; j < 2; ++j) {
        const SparseMatrix fwd = SparseMatrix(l.embed("emitter" + std::to_string(j), sigma(3, 1))) * a;
        want += Complex(0.0, -0.5 * std::sqrt(k * gamma)) * (fwd - SparseMatrix(fwd.adjoint()));
    }
    CHECK(max_diff(net.triple.H.at(t), want) < 1e-12);
}

TEST_CASE("decoupled emitters stay in the first ground state") {
    pulses::PulseSpec s;
    s.n_photons = 2;
    const auto net = full_network(s, 2, 0.0);
    const Operator heff = net.triple.effective_hamiltonian();
    auto apply = [&](double t, const Eigen::VectorXcd& v) { return heff.apply(t, v); };
    const auto [w0, w1] = release_window(s);
    const auto out = numerics::evolve_nonunitary(net.initial_state, apply, w0, w1, (w1 - w0) / 4000);
    const auto& l = net.triple.layout;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const auto lv = l.levels_of(i);
        if (lv[0] != 0 || lv[1] != 0) CHECK(std::abs(out(i)) == 0.0);
    }
}
