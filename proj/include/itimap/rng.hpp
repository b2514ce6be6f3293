#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace itimap {

// splitmix64 finalizer. Stream seeds are derived from (master seed, stream id)
// so per-emitter / per-node streams are independent of iteration order.
constexpr uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr uint64_t derive_seed(uint64_t master, uint64_t stream) {
    return mix64(master ^ mix64(stream));
}

constexpr uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b) {
    return mix64(derive_seed(master, a) ^ mix64(b + 0x6a09e667f3bcc909ULL));
}

// mt19937_64 with hand-rolled variate transforms. The engine sequence is
// fully specified by the standard; std::*_distribution is not, and ledger
// reproducibility depends on exact draws.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0, n), unbiased
    uint64_t uniform_int(uint64_t n) {
        const uint64_t limit = n * ((~uint64_t{0}) / n);
        uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    double normal(double mu, double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return mu + sigma * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return mu + sigma * u * m;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace itimap
