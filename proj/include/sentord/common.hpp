#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sentord {

// Library-wide scalar. The f64 build exists to tighten gradient-check
// tolerances; everything else (training, checkpoints) runs in f32.
#ifdef SENTORD_SCALAR_64
using real = double;
#else
using real = float;
#endif

// Error carrying the originating module and a stable code, so the CLI can
// report failures as "module/code: message" with a nonzero exit.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string code, const std::string& message)
        : std::runtime_error("[" + module + "/" + code + "] " + message),
          module_(std::move(module)),
          code_(std::move(code)) {}

    const std::string& module() const { return module_; }
    const std::string& code() const { return code_; }

private:
    std::string module_;
    std::string code_;
};

// Deterministic, platform-independent RNG. std::shuffle and the std
// distributions are implementation-defined, so seeded runs would not be
// portable; splitmix64 plus explicit draws keeps every stream bit-stable.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased integer in [0, n) via rejection sampling.
    uint64_t below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    double uniform() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double normal() {  // Box-Muller, one value per call
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Normal(0, sigma) with resampling outside two sigma.
    double truncated_normal(double sigma) {
        double v;
        do {
            v = normal();
        } while (std::fabs(v) > 2.0);
        return v * sigma;
    }

    // Derive an independent stream, e.g. per epoch or per document.
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        Rng r(seed ^ (0x632be59bd9b4e019ULL + stream * 0x9e3779b97f4a7c15ULL));
        return r.next_u64();
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sentord
