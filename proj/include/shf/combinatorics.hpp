#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace shf {

using wide_uint = unsigned __int128;

inline std::string to_string(wide_uint v) {
    if (v == 0) return "0";
    std::string s;
    while (v > 0) {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return s;
}

namespace detail {

inline constexpr wide_uint kWideMax = ~wide_uint(0);

inline wide_uint checked_add(wide_uint a, wide_uint b) {
    if (a > kWideMax - b) throw CapacityError("128-bit overflow in coefficient arithmetic");
    return a + b;
}
inline wide_uint checked_mul(wide_uint a, wide_uint b) {
    if (a != 0 && b > kWideMax / a) throw CapacityError("128-bit overflow in coefficient arithmetic");
    return a * b;
}
inline wide_uint gcd(wide_uint a, wide_uint b) {
    while (b != 0) {
        wide_uint t = a % b;
        a = b;
        b = t;
    }
    return a;
}

}  // namespace detail

// Exact binomial coefficient with intermediate reduction.
inline wide_uint binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    wide_uint r = 1;
    for (unsigned j = 1; j <= k; ++j) {
        wide_uint num = n - k + j, den = j;
        wide_uint g = detail::gcd(r, den);
        r /= g;
        den /= g;
        num /= den;
        r = detail::checked_mul(r, num);
    }
    return r;
}

// Triangular table of c^k_i built from c^{k+1}_i = sum_{j<=i} c^k_j.
class CoefficientTable {
public:
    explicit CoefficientTable(int max_m) : max_m_(max_m) {
        if (max_m < 0) throw DomainError("CoefficientTable: max_m must be nonnegative");
        rows_.resize(max_m + 1);
        rows_[0] = {1};
        for (int k = 0; k < max_m; ++k) {
            std::vector<wide_uint>& next = rows_[k + 1];
            next.assign(k + 2, 0);
            wide_uint run = 0;
            for (int i = 0; i <= k + 1; ++i) {
                if (i <= k) run = detail::checked_add(run, rows_[k][i]);
                next[i] = run;
            }
        }
    }

    int max_m() const { return max_m_; }
    wide_uint operator()(int m, int i) const {
        if (m < 0 || i < 0) throw DomainError("coefficient indices must be nonnegative");
        if (m > max_m_) throw DomainError("coefficient row beyond table");
        if (i > m) return 0;
        return rows_[m][i];
    }

private:
    int max_m_;
    std::vector<std::vector<wide_uint>> rows_;
};

inline wide_uint c_coeff_recursive(int m, int i) {
    if (m < 0 || i < 0) throw DomainError("coefficient indices must be nonnegative");
    if (i > m) return 0;
    static const CoefficientTable table(64);
    if (m <= table.max_m()) return table(m, i);
    return CoefficientTable(m)(m, i);
}

// (m-i+1)/i! * (m+i)!/(m+1)!  =  (m-i+1)/(m+1) * C(m+i, i).
inline wide_uint c_coeff_closed(int m, int i) {
    if (m < 0 || i < 0) throw DomainError("coefficient indices must be nonnegative");
    if (i > m) throw DomainError("c_coeff_closed requires i <= m");
    wide_uint b = binomial(static_cast<unsigned>(m + i), static_cast<unsigned>(i));
    wide_uint num = static_cast<wide_uint>(m - i + 1), den = static_cast<wide_uint>(m + 1);
    wide_uint g = detail::gcd(num, den);
    num /= g;
    den /= g;
    if (b % den != 0) throw CapacityError("closed form is not integral");
    return detail::checked_mul(b / den, num);
}

// log c^m_i in floating point, for rows beyond the exact table.
inline double c_coeff_log(int m, int i) {
    if (m < 0 || i < 0 || i > m) throw DomainError("c_coeff_log requires 0 <= i <= m");
    return std::log(m - i + 1.0) - std::lgamma(i + 1.0) + std::lgamma(m + i + 1.0) - std::lgamma(m + 2.0);
}

inline wide_uint pair_sequence_count(int h, int m) {
    if (h < 2 || m < 0) throw DomainError("pair_sequence_count: need h >= 2, m >= 0");
    if (m == 0) return 1;
    wide_uint p = static_cast<wide_uint>(h) * static_cast<wide_uint>(h - 1) / 2;
    wide_uint r = p;
    for (int k = 1; k < m; ++k) r = detail::checked_mul(r, p - 1);
    return r;
}

inline double pair_sequence_count_real(int h, int m) {
    if (h < 2 || m < 0) throw DomainError("pair_sequence_count: need h >= 2, m >= 0");
    if (m == 0) return 1.0;
    double p = 0.5 * h * (h - 1);
    return p * std::pow(p - 1.0, m - 1);
}

struct PairSequence {
    int h = 2;
    std::vector<std::pair<int, int>> pairs;

    void validate() const {
        if (h < 2) throw DomainError("PairSequence: h must be at least 2");
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            auto [i, j] = pairs[r];
            if (i < 1 || j < 1 || i > h || j > h || i == j) throw DomainError("PairSequence: invalid pair");
            if (r > 0) {
                auto [a, b] = pairs[r - 1];
                if ((a == i && b == j) || (a == j && b == i)) throw DomainError("PairSequence: equal consecutive pairs");
            }
        }
    }
};

inline std::vector<PairSequence> enumerate_pair_sequences(int h, int m, std::uint64_t cap) {
    wide_uint count = pair_sequence_count(h, m);
    if (count > cap) throw CapacityError("enumerate_pair_sequences: count exceeds cap");
    std::vector<std::pair<int, int>> all;
    for (int i = 1; i <= h; ++i)
        for (int j = i + 1; j <= h; ++j) all.emplace_back(i, j);
    std::vector<PairSequence> out;
    out.reserve(static_cast<std::size_t>(count));
    PairSequence cur{h, {}};
    auto rec = [&](auto&& self, int depth, int prev) -> void {
        if (depth == m) {
            out.push_back(cur);
            return;
        }
        for (int k = 0; k < static_cast<int>(all.size()); ++k) {
            if (k == prev) continue;
            cur.pairs.push_back(all[k]);
            self(self, depth + 1, k);
            cur.pairs.pop_back();
        }
    };
    rec(rec, 0, -1);
    return out;
}

// For each collision r (1-based), the last earlier collision containing each member; 0 if none.
inline std::vector<std::pair<int, int>> collision_pointers(const PairSequence& seq) {
    seq.validate();
    std::vector<int> last(seq.h + 1, 0);
    std::vector<std::pair<int, int>> out;
    out.reserve(seq.pairs.size());
    for (std::size_t r = 0; r < seq.pairs.size(); ++r) {
        auto [i, j] = seq.pairs[r];
        out.emplace_back(last[i], last[j]);
        last[i] = last[j] = static_cast<int>(r + 1);
    }
    return out;
}

}  // namespace shf
