#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <string>

namespace csattn {

/*****************************************************
 * Deterministic randomness
 *
 * mt19937_64 output is bit-specified by the standard, but the
 * <random> distributions are not. All scalar draws are derived
 * here by hand so that a given seed reproduces the same stream
 * on every platform and toolchain.
 *****************************************************/

class Rng {
   public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be >= 1.
    std::uint64_t next_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // Standard normal via Box-Muller, one spare cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

   private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// splitmix64; used to derive independent sub-seeds (e.g. one per subspace).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/*****************************************************
 * Ratio-to-count conversion
 *****************************************************/

// ceil(ratio * n) computed so that ratios meant as exact decimals
// (0.05, 0.2, ...) do not round up one extra slot from binary
// representation error. The 1e-9 nudge is far above the representation
// error of ratio * n (< 1e-12 at desk scale) and far below any
// intentional fractional part.
inline std::size_t ceil_ratio(double ratio, std::size_t n) {
    const double v = ratio * static_cast<double>(n);
    const double c = std::ceil(v - 1e-9);
    return c <= 0.0 ? 0 : static_cast<std::size_t>(c);
}

/*****************************************************
 * IEEE 754 binary16 conversion (round to nearest even)
 *****************************************************/

std::uint16_t f32_to_f16(float value);
float f16_to_f32(std::uint16_t bits);

/*****************************************************
 * Logging (stderr), controlled by the CSATTN_LOG env var:
 * unset/"warn" -> warnings only, "info", "debug".
 *****************************************************/

enum class LogLevel : int { kWarn = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();

void log_message(LogLevel level, const std::string& message);

inline void log_warn(const std::string& m) { log_message(LogLevel::kWarn, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::kInfo, m); }
inline void log_debug(const std::string& m) { log_message(LogLevel::kDebug, m); }

}  // namespace csattn
