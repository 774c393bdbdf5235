#include <pnr/slh.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace pnr::slh {

HilbertLayout::HilbertLayout(std::vector<Subsystem> subsystems) : subs_(std::move(subsystems)) {
    std::unordered_set<std::string> seen;
    strides_.assign(subs_.size(), 1);
    dim_ = 1;
    for (int k = static_cast<int>(subs_.size()) - 1; k >= 0; --k) {
        if (subs_[k].dim < 1) throw DimensionError("HilbertLayout: subsystem dimension must be >= 1");
        if (!seen.insert(subs_[k].label).second) throw DimensionError("HilbertLayout: duplicate label " + subs_[k].label);
        strides_[k] = dim_;
        dim_ *= subs_[k].dim;
        if (dim_ > (Eigen::Index(1) << 40)) throw DimensionError("HilbertLayout: dimension overflow");
    }
}

std::string emitter_label(int i) { return "emitter" + std::to_string(i); }
std::string cavity_label(int k) { return "cavity" + std::to_string(k); }

HilbertLayout HilbertLayout::detector(int n_emitters, const std::vector<int>& cavity_dims) {
    std::vector<Subsystem> subs;
    for (int i = 0; i < n_emitters; ++i) subs.push_back({emitter_label(i), 3});
    for (std::size_t k = 0; k < cavity_dims.size(); ++k) subs.push_back({cavity_label(static_cast<int>(k)), cavity_dims[k]});
    return HilbertLayout(std::move(subs));
}

int HilbertLayout::n_emitters() const {
    int n = 0;
    while (contains(emitter_label(n))) ++n;
    return n;
}

bool HilbertLayout::contains(const std::string& label) const {
    return std::any_of(subs_.begin(), subs_.end(), [&](const Subsystem& s) { return s.label == label; });
}

int HilbertLayout::index_of(const std::string& label) const {
    for (std::size_t k = 0; k < subs_.size(); ++k)
        if (subs_[k].label == label) return static_cast<int>(k);
    throw DimensionError("HilbertLayout: no subsystem labelled " + label);
}

SparseMatrix HilbertLayout::embed(const std::string& label, const SparseMatrix& local) const {
    const int k = index_of(label);
    const int d = subs_[k].dim;
    if (local.rows() != d || local.cols() != d) throw DimensionError("embed: local operator has wrong size");
    const Eigen::Index inner = strides_[k];
    const Eigen::Index outer = dim_ / (inner * d);
    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(static_cast<std::size_t>(local.nonZeros() * inner * outer));
    for (int c = 0; c < local.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(local, c); it; ++it)
            for (Eigen::Index o = 0; o < outer; ++o)
                for (Eigen::Index i = 0; i < inner; ++i) {
                    const Eigen::Index base = o * d * inner + i;
                    trips.emplace_back(base + it.row() * inner, base + it.col() * inner, it.value());
                }
    SparseMatrix m(dim_, dim_);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

Eigen::Index HilbertLayout::basis_index(const std::vector<int>& levels) const {
    if (levels.size() != subs_.size()) throw DimensionError("basis_index: one level per subsystem required");
    Eigen::Index idx = 0;
    for (std::size_t k = 0; k < subs_.size(); ++k) {
        if (levels[k] < 0 || levels[k] >= subs_[k].dim) throw DimensionError("basis_index: level out of range");
        idx += levels[k] * strides_[k];
    }
    return idx;
}

std::vector<int> HilbertLayout::levels_of(Eigen::Index index) const {
    std::vector<int> lv(subs_.size());
    for (std::size_t k = 0; k < subs_.size(); ++k) lv[k] = static_cast<int>((index / strides_[k]) % subs_[k].dim);
    return lv;
}

bool HilbertLayout::operator==(const HilbertLayout& o) const {
    if (subs_.size() != o.subs_.size()) return false;
    for (std::size_t k = 0; k < subs_.size(); ++k)
        if (subs_[k].label != o.subs_[k].label || subs_[k].dim != o.subs_[k].dim) return false;
    return true;
}

SparseMatrix sigma(int k, int l) {
    if (k < 1 || k > 3 || l < 1 || l > 3) throw DomainError("sigma: levels are 1..3");
    SparseMatrix m(3, 3);
    m.insert(k - 1, l - 1) = 1.0;
    return m;
}

SparseMatrix annihilation(int dim) {
    SparseMatrix a(dim, dim);
    for (int n = 1; n < dim; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Envelope::Envelope(std::function<Complex(double)> f)
    : f_(std::make_shared<const std::function<Complex(double)>>(std::move(f))) {}

Envelope Envelope::conj() const {
    if (!f_) return {};
    auto f = f_;
    return Envelope([f](double t) { return std::conj((*f)(t)); });
}

Envelope operator*(const Envelope& a, const Envelope& b) {
    if (a.is_constant()) return b;
    if (b.is_constant()) return a;
    auto fa = a.f_;
    auto fb = b.f_;
    return Envelope([fa, fb](double t) { return (*fa)(t) * (*fb)(t); });
}

Operator::Operator(Eigen::Index dim) : dim_(dim) {}

Operator::Operator(SparseMatrix m, Envelope e) : dim_(m.rows()) {
    if (m.rows() != m.cols()) throw DimensionError("Operator: matrix must be square");
    terms_.push_back({std::move(e), std::move(m)});
}

bool Operator::is_zero() const {
    for (const auto& t : terms_)
        for (int c = 0; c < t.matrix.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(t.matrix, c); it; ++it)
                if (it.value() != 0.0) return false;
    return true;
}

Operator& Operator::simplify() {
    std::vector<Term> merged;
    for (auto& t : terms_) {
        auto hit = std::find_if(merged.begin(), merged.end(), [&](const Term& m) { return m.envelope.same_as(t.envelope); });
        if (hit == merged.end())
            merged.push_back(std::move(t));
        else
            hit->matrix += t.matrix;
    }
    for (auto& m : merged) m.matrix.prune(Complex(0.0), 0.0);
    std::erase_if(merged, [](const Term& m) { return m.matrix.nonZeros() == 0; });
    terms_ = std::move(merged);
    return *this;
}

SparseMatrix Operator::at(double t) const {
    SparseMatrix m(dim_, dim_);
    for (const auto& term : terms_) m += term.envelope(t) * term.matrix;
    return m;
}

Eigen::VectorXcd Operator::apply(double t, const Eigen::VectorXcd& psi) const {
    if (psi.size() != dim_) throw DimensionError("Operator::apply: state has wrong dimension");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim_);
    for (const auto& term : terms_) out += term.envelope(t) * (term.matrix * psi);
    return out;
}

Operator Operator::adjoint() const {
    Operator out(dim_);
    for (const auto& term : terms_) out.terms_.push_back({term.envelope.conj(), SparseMatrix(term.matrix.adjoint())});
    return out;
}

Operator& Operator::operator+=(const Operator& o) {
    if (dim_ == 0) dim_ = o.dim_;
    if (o.dim_ != 0 && o.dim_ != dim_) throw DimensionError("Operator: dimension mismatch");
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return simplify();
}

Operator operator*(const Operator& a, const Operator& b) {
    if (a.dim_ != b.dim_) throw DimensionError("Operator: dimension mismatch");
    Operator out(a.dim_);
    for (const auto& x : a.terms_)
        for (const auto& y : b.terms_) out.terms_.push_back({x.envelope * y.envelope, SparseMatrix(x.matrix * y.matrix)});
    return out.simplify();
}

Operator operator*(Operator a, Complex c) {
    for (auto& t : a.terms_) t.matrix *= c;
    return a.simplify();
}

Operator SLHTriple::effective_hamiltonian() const {
    Operator h = H;
    for (const auto& l : L) h += (l.adjoint() * l) * Complex(0.0, -0.5);
    return h;
}

SLHTriple identity_triple(int channels, const HilbertLayout& layout) {
    SLHTriple g{Eigen::MatrixXcd::Identity(channels, channels), {}, Operator(layout.dim()), layout};
    g.L.assign(channels, Operator(layout.dim()));
    return g;
}

SLHTriple emitter_triple(int i, int n, double gamma, const HilbertLayout& layout) {
    if (i < 0 || i >= n) throw DomainError("emitter_triple: need 0 <= i < n");
    const std::string label = emitter_label(i);
    layout.index_of(label);
    SLHTriple g = identity_triple(n + 1, layout);
    const double s = std::sqrt(gamma);
    g.L[i] = Operator(layout.embed(label, sigma(2, 3))) * Complex(s);
    g.L[n] = Operator(layout.embed(label, sigma(1, 3))) * Complex(s);
    return g;
}

SLHTriple series_product(const SLHTriple& g1, const SLHTriple& g2) {
    if (g1.channels() != g2.channels() || g1.S.rows() != g2.S.rows())
        throw DimensionError("series_product: channel counts differ");
    if (!(g1.layout == g2.layout)) throw DimensionError("series_product: layouts differ");
    const int c = g1.channels();
    SLHTriple out{g2.S * g1.S, {}, g1.H + g2.H, g1.layout};
    std::vector<Operator> s2l1(c, Operator(g1.layout.dim()));
    for (int a = 0; a < c; ++a) {
        for (int b = 0; b < c; ++b)
            if (g2.S(a, b) != 0.0) s2l1[a] += g1.L[b] * g2.S(a, b);
        out.L.push_back(g2.L[a] + s2l1[a]);
    }
    Operator cross(g1.layout.dim());
    for (int a = 0; a < c; ++a) cross += g2.L[a].adjoint() * s2l1[a];
    out.H += (cross - cross.adjoint()) * Complex(0.0, -0.5);
    return out;
}

SLHTriple cascade_detector(int n, double gamma, const HilbertLayout& layout) {
    if (n < 1) throw DomainError("cascade_detector: a detector needs at least one emitter");
    SLHTriple g = identity_triple(n + 1, layout);
    const double s = std::sqrt(gamma);
    std::vector<SparseMatrix> lower13;
    for (int i = 0; i < n; ++i) {
        const std::string label = emitter_label(i);
        g.L[i] = Operator(layout.embed(label, sigma(2, 3))) * Complex(s);
        g.L[n] += Operator(layout.embed(label, sigma(1, 3))) * Complex(s);
        lower13.push_back(layout.embed(label, sigma(1, 3)));
    }
    Operator forward(layout.dim());
    for (int j = 1; j < n; ++j)
        for (int i = 0; i < j; ++i) forward += Operator(SparseMatrix(SparseMatrix(lower13[j].adjoint()) * lower13[i]));
    g.H = (forward - forward.adjoint()) * Complex(0.0, -0.5 * gamma);
    return g;
}

double release_rate(double delta, double center, double t) {
    const double u = 2.0 * (t - center) / delta;
    const double remaining = 0.5 * std::erfc(u);
    if (remaining < 1e-6) return kKappaMax;
    const double intensity = 2.0 / (delta * std::sqrt(std::numbers::pi)) * std::exp(-u * u);
    return std::min(intensity / remaining, kKappaMax);
}

std::vector<int> source_cavity_dims(const pulses::PulseSpec& spec) {
    spec.validate();
    switch (spec.family) {
    case pulses::PulseFamily::GaussianFock: return {spec.n_photons + 1};
    case pulses::PulseFamily::SeparatedGaussians: return std::vector<int>(spec.n_photons, 2);
    case pulses::PulseFamily::HermiteGaussPair: break;
    }
    throw UnsupportedError("source: no cavity source for HermiteGaussPair inputs");
}

std::pair<double, double> release_window(const pulses::PulseSpec& spec) {
    const auto c = pulses::pulse_centers(spec);
    return {c.front() - 6.0 * spec.delta, c.back() + 6.0 * spec.delta};
}

SLHTriple source_triple(const pulses::PulseSpec& spec, const HilbertLayout& layout, const numerics::TimeGrid& t_grid) {
    const auto dims = source_cavity_dims(spec);
    if (spec.family == pulses::PulseFamily::SeparatedGaussians && spec.n_photons > 1 &&
        spec.separation < 4.0 * spec.delta)
        throw UnsupportedError("source: SeparatedGaussians needs separation >= 4 delta for cascaded cavities");
    if (t_grid.t_start() > release_window(spec).first)
        throw DomainError("source: time grid starts after the release window opens");
    const int n = layout.n_emitters();
    SLHTriple g = identity_triple(n + 1, layout);
    const auto centers = pulses::pulse_centers(spec);
    const double delta = spec.delta;
    const double det = spec.detuning;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        const std::string label = cavity_label(static_cast<int>(k));
        if (layout.subsystems().at(layout.index_of(label)).dim != dims[k])
            throw DimensionError("source: cavity " + label + " has the wrong truncation");
        const SparseMatrix a = layout.embed(label, annihilation(dims[k]));
        const double c = centers[centers.size() == 1 ? 0 : k];
        Envelope env([delta, c](double t) { return Complex(std::sqrt(release_rate(delta, c, t))); });
        SLHTriple cav = identity_triple(n + 1, layout);
        cav.L[n] = Operator(a, env);
        if (det != 0.0) cav.H = Operator(SparseMatrix(SparseMatrix(a.adjoint()) * a)) * Complex(det);
        g = k == 0 ? cav : series_product(g, cav);
    }
    return g;
}

Network full_network(const pulses::PulseSpec& spec, int n, double gamma) {
    if (n < 1) throw DomainError("full_network: need at least one emitter");
    if (!(gamma >= 0.0)) throw DomainError("full_network: gamma must be >= 0");
    const auto dims = source_cavity_dims(spec);
    Eigen::Index dim = 1;
    for (int i = 0; i < n; ++i) {
        dim *= 3;
        if (dim > kMaxDimension) throw DimensionError("full_network: dimension above cap");
    }
    for (int d : dims) {
        dim *= d;
        if (dim > kMaxDimension) throw DimensionError("full_network: dimension above cap");
    }
    const HilbertLayout layout = HilbertLayout::detector(n, dims);
    const auto [w0, w1] = release_window(spec);
    const numerics::TimeGrid grid(w0, w1, 2);
    SLHTriple src = source_triple(spec, layout, grid);
    SLHTriple det = cascade_detector(n, gamma, layout);
    Network net{spec, n, gamma, series_product(src, det), Eigen::VectorXcd::Zero(layout.dim())};
    std::vector<int> levels(layout.subsystems().size(), 0);
    for (std::size_t k = 0; k < dims.size(); ++k) levels[n + k] = dims[k] - 1;
    net.initial_state(layout.basis_index(levels)) = 1.0;
    return net;
}

} // namespace pnr::slh
