#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace hypam {

// Philox4x32-10 keyed by the master seed. A stream is identified by two 32-bit
// words (purpose tag, index); the remaining two counter words walk the blocks.
// Stream (seed, tag, i) is the same no matter which thread draws it.
class Stream {
public:
    using result_type = std::uint32_t;

    Stream(std::uint64_t seed, std::uint32_t tag, std::uint64_t index);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    // (0,1), 53 random bits
    double uniform() {
        std::uint64_t a = (*this)(), b = (*this)();
        std::uint64_t bits = ((a << 32) | b) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double normal();

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Purpose tags so that different consumers of one master seed never share a stream.
namespace tags {
inline constexpr std::uint32_t bm_path = 1;
inline constexpr std::uint32_t radial_path = 2;
inline constexpr std::uint32_t bridge_path = 3;
inline constexpr std::uint32_t field = 4;
inline constexpr std::uint32_t field_extend = 5;
inline constexpr std::uint32_t packing = 6;
inline constexpr std::uint32_t hitting = 7;
inline constexpr std::uint32_t fk_field = 8;
inline constexpr std::uint32_t energy = 9;
inline constexpr std::uint32_t calib = 10;
inline constexpr std::uint32_t misc = 11;
}  // namespace tags

}  // namespace hypam
