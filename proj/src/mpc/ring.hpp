#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace mpckit {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;

// Ring Z_{2^ell} for ell <= 64, backed by uint64_t with a bitmask.
// All protocol arithmetic is unsigned mod 2^ell; values are reinterpreted
// as two's complement only at truncation and decoding boundaries.
struct Ring {
    unsigned ell = 64;
    u64 mask = ~0ULL;

    Ring() = default;
    explicit Ring(unsigned bits) : ell(bits), mask(bits == 64 ? ~0ULL : ((1ULL << bits) - 1ULL)) {
        assert(bits >= 1 && bits <= 64);
    }

    u64 reduce(u64 a) const { return a & mask; }
    u64 add(u64 a, u64 b) const { return (a + b) & mask; }
    u64 sub(u64 a, u64 b) const { return (a - b) & mask; }
    u64 mul(u64 a, u64 b) const { return (a * b) & mask; }
    u64 neg(u64 a) const { return (-a) & mask; }

    u64 from_signed(i64 x) const { return static_cast<u64>(x) & mask; }

    i64 to_signed(u64 x) const {
        x &= mask;
        if (ell == 64) return static_cast<i64>(x);
        u64 sign = 1ULL << (ell - 1);
        if (x & sign) return static_cast<i64>(x) - static_cast<i64>(1ULL << ell);
        return static_cast<i64>(x);
    }

    bool msb(u64 x) const { return ((x >> (ell - 1)) & 1ULL) != 0; }

    // Arithmetic shift right by x bits, treating v as signed two's complement.
    u64 trunc(u64 v, unsigned x) const {
        if (x == 0) return reduce(v);
        i64 s = to_signed(v);
        // i64 >> is an arithmetic shift for negative values on all supported targets.
        return from_signed(s >> x);
    }

    // Logical shift right (unsigned interpretation).
    u64 trunc_logical(u64 v, unsigned x) const { return (reduce(v) >> x); }
};

// Fixed-point view: raw ring value scaled by 2^-frac_bits, signed.
struct FixedPoint {
    unsigned frac_bits = 13;

    FixedPoint() = default;
    explicit FixedPoint(unsigned x) : frac_bits(x) {}

    u64 encode(const Ring& r, double v) const {
        double scaled = v * static_cast<double>(1ULL << frac_bits);
        i64 as_int = static_cast<i64>(scaled >= 0 ? scaled + 0.5 : scaled - 0.5);
        return r.from_signed(as_int);
    }
    double decode(const Ring& r, u64 raw) const {
        return static_cast<double>(r.to_signed(raw)) / static_cast<double>(1ULL << frac_bits);
    }
    u64 one(const Ring& r) const { return r.reduce(1ULL << frac_bits); }
};

}  // namespace mpckit
