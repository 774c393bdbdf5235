#include <pnr/numerics.hpp>

#include <cmath>

namespace pnr::numerics {

TimeGrid::TimeGrid(double t_start, double t_end, int n_points)
    : t_start_(t_start), t_end_(t_end), n_points_(n_points) {
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_end > t_start))
        throw DomainError("TimeGrid: need finite t_end > t_start");
    if (n_points < 2) throw DomainError("TimeGrid: need at least two points");
}

TimeGrid TimeGrid::with_max_step(double t_start, double t_end, double max_dt) {
    if (!(max_dt > 0.0)) throw DomainError("TimeGrid: max_dt must be positive");
    const double steps = std::ceil((t_end - t_start) / max_dt - 1e-9);
    return TimeGrid(t_start, t_end, static_cast<int>(std::max(1.0, steps)) + 1);
}

void QuadratureConfig::validate() const {
    if (abs_tol < 0.0 || rel_tol < 0.0 || !(abs_tol > 0.0 || rel_tol > 0.0))
        throw DomainError("QuadratureConfig: tolerances must be >= 0 with at least one positive");
    if (max_subdivisions < 1) throw DomainError("QuadratureConfig: max_subdivisions must be positive");
}

double hermite_poly(int n, double x) {
    if (n < 0 || n > 10) throw DomainError("hermite_poly: order must be in 0..10");
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * x * cur - 2.0 * k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
}

double RngStream::uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) {
    return RngStream(seed, stream_id);
}

} // namespace pnr::numerics
