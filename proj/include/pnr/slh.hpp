#pragma once

// SLH description of the detector network: labelled tensor-product spaces,
// envelope-weighted sparse operators, the series product, the emitter
// cascade and shaped-cavity Fock sources.

#include <pnr/errors.hpp>
#include <pnr/numerics.hpp>
#include <pnr/pulses.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pnr::slh {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

/// Largest total dimension full_network will build.
inline constexpr Eigen::Index kMaxDimension = 20000;
/// Cavity release rate ceiling, units of gamma_g.
inline constexpr double kKappaMax = 50.0;

struct Subsystem {
    std::string label;
    int dim;
};

/// Ordered tensor product; the first subsystem is the most significant index.
class HilbertLayout {
public:
    HilbertLayout() = default;
    explicit HilbertLayout(std::vector<Subsystem> subsystems);

    /// n emitters labelled emitter0.. followed by cavities cavity0.. of the given dimensions.
    static HilbertLayout detector(int n_emitters, const std::vector<int>& cavity_dims = {});

    const std::vector<Subsystem>& subsystems() const noexcept { return subs_; }
    Eigen::Index dim() const noexcept { return dim_; }
    int n_emitters() const;
    bool contains(const std::string& label) const;
    /// Throws DimensionError for an unknown label.
    int index_of(const std::string& label) const;
    Eigen::Index stride(int subsystem) const { return strides_.at(subsystem); }

    /// I (x) ... (x) local (x) ... (x) I.
    SparseMatrix embed(const std::string& label, const SparseMatrix& local) const;
    /// Basis index of a product state given per-subsystem levels.
    Eigen::Index basis_index(const std::vector<int>& levels) const;
    std::vector<int> levels_of(Eigen::Index index) const;

    bool operator==(const HilbertLayout& o) const;

private:
    std::vector<Subsystem> subs_;
    std::vector<Eigen::Index> strides_;
    Eigen::Index dim_ = 1;
};

std::string emitter_label(int i);
std::string cavity_label(int k);

/// |k><l| on a three-level emitter, levels 1..3.
SparseMatrix sigma(int k, int l);
/// Truncated annihilation operator on dim levels.
SparseMatrix annihilation(int dim);

/// Scalar time dependence; default-constructed means the constant 1.
class Envelope {
public:
    Envelope() = default;
    explicit Envelope(std::function<Complex(double)> f);

    Complex operator()(double t) const { return f_ ? (*f_)(t) : Complex(1.0); }
    bool is_constant() const noexcept { return !f_; }
    bool same_as(const Envelope& o) const noexcept { return f_ == o.f_; }
    Envelope conj() const;

    friend Envelope operator*(const Envelope& a, const Envelope& b);

private:
    std::shared_ptr<const std::function<Complex(double)>> f_;
};

/// sum_k envelope_k(t) * matrix_k
class Operator {
public:
    struct Term {
        Envelope envelope;
        SparseMatrix matrix;
    };

    Operator() = default;
    explicit Operator(Eigen::Index dim);
    Operator(SparseMatrix m, Envelope e = {});

    Eigen::Index dim() const noexcept { return dim_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }
    bool is_zero() const;
    /// Merge terms sharing an envelope and drop empty ones.
    Operator& simplify();

    SparseMatrix at(double t) const;
    Eigen::VectorXcd apply(double t, const Eigen::VectorXcd& psi) const;
    Operator adjoint() const;

    Operator& operator+=(const Operator& o);
    friend Operator operator+(Operator a, const Operator& b) { return a += b; }
    friend Operator operator-(Operator a, const Operator& b) { return a += b * Complex(-1.0); }
    friend Operator operator*(const Operator& a, const Operator& b);
    friend Operator operator*(Operator a, Complex c);
    friend Operator operator*(Complex c, Operator a) { return std::move(a) * c; }

private:
    Eigen::Index dim_ = 0;
    std::vector<Term> terms_;
};

struct SLHTriple {
    Eigen::MatrixXcd S;
    std::vector<Operator> L;
    Operator H;
    HilbertLayout layout;

    int channels() const { return static_cast<int>(L.size()); }
    /// H - (i/2) sum_k L_k^dagger L_k
    Operator effective_hamiltonian() const;
};

/// Triple with identity S, zero couplings and zero Hamiltonian.
SLHTriple identity_triple(int channels, const HilbertLayout& layout);

/// Emitter i (0-based) of n: channel i carries sqrt(gamma) sigma_23, the
/// through channel n carries sqrt(gamma) sigma_13.
SLHTriple emitter_triple(int i, int n, double gamma, const HilbertLayout& layout);

/// g1 feeding g2.
SLHTriple series_product(const SLHTriple& g1, const SLHTriple& g2);

/// Closed-form n-emitter cascade.
SLHTriple cascade_detector(int n, double gamma, const HilbertLayout& layout);

/// kappa(t) that releases |h(t - center)|^2 from a cavity, clipped at kKappaMax.
double release_rate(double delta, double center, double t);

/// Shaped-cavity source feeding the through channel of a (channels)-port
/// network: one cavity in |N> for GaussianFock, one cavity in |1> per photon
/// for SeparatedGaussians (separation >= 4 delta). The grid must start at
/// least 6 delta before the first pulse centre.
SLHTriple source_triple(const pulses::PulseSpec& spec, const HilbertLayout& layout, const numerics::TimeGrid& t_grid);

struct Network {
    pulses::PulseSpec spec;
    int n_emitters;
    double gamma;
    SLHTriple triple;
    Eigen::VectorXcd initial_state;
};

/// Cavity dimensions a spec needs.
std::vector<int> source_cavity_dims(const pulses::PulseSpec& spec);

/// source feeding an n-emitter cascade; emitters start in |1>, cavities in
/// the spec's Fock state.
Network full_network(const pulses::PulseSpec& spec, int n, double gamma);

/// Release window of the source: [first centre - 6 delta, last centre + 6 delta].
std::pair<double, double> release_window(const pulses::PulseSpec& spec);

} // namespace pnr::slh
