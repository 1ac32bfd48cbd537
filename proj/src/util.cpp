#include "csattn/util.hpp"

#include <cstdlib>
#include <cstring>

namespace csattn {

std::uint16_t f32_to_f16(float value) {
    std::uint32_t x;
    std::memcpy(&x, &value, sizeof(x));

    const std::uint32_t sign = (x >> 16) & 0x8000u;
    std::uint32_t mantissa = x & 0x007fffffu;
    const std::int32_t exponent =
        static_cast<std::int32_t>((x >> 23) & 0xffu) - 127;

    if (exponent == 128) {  // inf / nan
        if (mantissa != 0) return static_cast<std::uint16_t>(sign | 0x7e00u);
        return static_cast<std::uint16_t>(sign | 0x7c00u);
    }
    if (exponent > 15) {  // overflow -> inf
        return static_cast<std::uint16_t>(sign | 0x7c00u);
    }
    if (exponent >= -14) {  // normal half
        // 13 mantissa bits are dropped; round to nearest even.
        std::uint32_t half = sign |
                             (static_cast<std::uint32_t>(exponent + 15) << 10) |
                             (mantissa >> 13);
        const std::uint32_t rest = mantissa & 0x1fffu;
        if (rest > 0x1000u || (rest == 0x1000u && (half & 1u))) half += 1;
        return static_cast<std::uint16_t>(half);
    }
    if (exponent >= -24) {  // subnormal half
        mantissa |= 0x00800000u;  // implicit leading bit
        const int shift = -exponent - 14 + 13;
        std::uint32_t half = sign | (mantissa >> shift);
        const std::uint32_t rest = mantissa & ((1u << shift) - 1);
        const std::uint32_t halfway = 1u << (shift - 1);
        if (rest > halfway || (rest == halfway && (half & 1u))) half += 1;
        return static_cast<std::uint16_t>(half);
    }
    return static_cast<std::uint16_t>(sign);  // underflow -> signed zero
}

float f16_to_f32(std::uint16_t bits) {
    const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
    const std::uint32_t exponent = (bits >> 10) & 0x1fu;
    std::uint32_t mantissa = bits & 0x03ffu;

    std::uint32_t x;
    if (exponent == 0) {
        if (mantissa == 0) {
            x = sign;
        } else {  // subnormal: renormalize
            int e = -1;
            do {
                ++e;
                mantissa <<= 1;
            } while ((mantissa & 0x0400u) == 0);
            mantissa &= 0x03ffu;
            x = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) |
                (mantissa << 13);
        }
    } else if (exponent == 0x1f) {
        x = sign | 0x7f800000u | (mantissa << 13);
    } else {
        x = sign | ((exponent - 15 + 127) << 23) | (mantissa << 13);
    }
    float out;
    std::memcpy(&out, &x, sizeof(out));
    return out;
}

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("CSATTN_LOG");
        if (env == nullptr) return LogLevel::kWarn;
        if (std::strcmp(env, "debug") == 0 || std::strcmp(env, "2") == 0)
            return LogLevel::kDebug;
        if (std::strcmp(env, "info") == 0 || std::strcmp(env, "1") == 0)
            return LogLevel::kInfo;
        return LogLevel::kWarn;
    }();
    return level;
}

void log_message(LogLevel level, const std::string& message) {
    static const char* kTags[] = {"warn", "info", "debug"};
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    std::fprintf(stderr, "[csattn %s] %s\n", kTags[static_cast<int>(level)],
                 message.c_str());
}

}  // namespace csattn
