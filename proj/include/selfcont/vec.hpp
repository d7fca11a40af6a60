#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace selfcont {

using Vec = std::vector<double>;

inline double norm(std::span<const double> v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

inline double norm(const Vec& v) { return norm(std::span<const double>(v)); }

inline double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double dist(const Vec& a, const Vec& b) {
    return dist(std::span<const double>(a), std::span<const double>(b));
}

inline Vec add_scaled(const Vec& x, double h, const Vec& d) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + h * d[i];
    return r;
}

inline bool all_finite(std::span<const double> v) {
    for (double c : v)
        if (!std::isfinite(c)) return false;
    return true;
}

/// Deterministic 64-bit generator (xoshiro-free splitmix scramble over a
/// counter). Identical streams on every platform; no libstdc++
/// distribution objects are involved anywhere downstream.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform point in the closed ball of the given radius (rejection from
    /// the enclosing cube).
    Vec in_ball(int dim, double radius) {
        Vec p(dim);
        for (;;) {
            double s = 0.0;
            for (int i = 0; i < dim; ++i) {
                p[i] = uniform(-1.0, 1.0);
                s += p[i] * p[i];
            }
            if (s <= 1.0) break;
        }
        for (int i = 0; i < dim; ++i) p[i] *= radius;
        return p;
    }

    /// Uniform direction on the unit sphere (rejection + normalize).
    Vec on_sphere(int dim) {
        for (;;) {
            Vec p = in_ball(dim, 1.0);
            const double n = norm(p);
            if (n > 1e-6) {
                for (double& c : p) c /= n;
                return p;
            }
        }
    }

    /// Derive an independent stream, e.g. one per worker or restart.
    Rng split(std::uint64_t stream) const {
        return Rng(state_ ^ (0xA0761D6478BD642Full * (stream + 1)));
    }

  private:
    std::uint64_t state_;
};

}  // namespace selfcont
