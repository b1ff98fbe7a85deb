#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace shf {

// Philox4x64-10 counter-based generator.
class Philox4x64 {
public:
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static Counter block(Counter c, Key k) {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                k[0] += 0x9E3779B97F4A7C15ULL;
                k[1] += 0xBB67AE8584CAA73BULL;
            }
            round(c, k);
        }
        return c;
    }

private:
    static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
        unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
        hi = static_cast<std::uint64_t>(p >> 64);
        lo = static_cast<std::uint64_t>(p);
    }
    static void round(Counter& c, const Key& k) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(0xD2E7470EE14C6C93ULL, c[0], hi0, lo0);
        mulhilo(0xCA5A826395121157ULL, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// Uniform on (0, 1), never 0 or 1.
inline double to_open_unit(std::uint64_t x) { return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53; }

// Sequential stream over a fixed (key, counter prefix); counter word 3 advances.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0, std::uint64_t b = 0)
        : key_{seed, stream}, ctr_{a, b, 0, 0} {}

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            buf_ = Philox4x64::block(ctr_, key_);
            ++ctr_[3];
            if (ctr_[3] == 0) ++ctr_[2];
            pos_ = 0;
        }
        return buf_[pos_++];
    }
    double uniform() { return to_open_unit(next_u64()); }
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    Philox4x64::Key key_;
    Philox4x64::Counter ctr_;
    Philox4x64::Counter buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace shf
