#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpc/keys.hpp"
#include "mpc/ring.hpp"

namespace mpckit {

enum class Framework : u8 { ASTRA = 0, ABY2 = 1, SWIFT = 2, TETRAD = 3 };
enum class World : u8 { Arith = 0, Bool = 1 };
enum class RecMode : u8 { Abort = 0, Fair = 1 };

Framework framework_from_string(const std::string& s);
std::string to_string(Framework f);

// Replication layout per framework: which parties hold each lambda part and
// the masked value. Party indices are 0-based; for SWIFT index i maps to the
// paper-facing P_{i+1}.
struct FrameworkInfo {
    int n_parties;
    int n_lambda;
    SubsetMask lambda_holders[3];
    SubsetMask m_holders;
    bool needs_provider;
    bool malicious;  // fair variants with verification (SWIFT, Tetrad)
};

const FrameworkInfo& info(Framework f);

// One party's view of a masked share: the public masked value m_v (held by
// online parties) and this party's replicated lambda parts.
// Invariant: sum_j lambda^j + v = m_v (XOR in the boolean world).
struct Share {
    World world = World::Arith;
    u64 m = 0;
    u64 lam[3] = {0, 0, 0};
    u8 have_m = 0;
    u8 have_lam = 0;  // bit j set = lambda^{j+1} held

    bool has_lam(int j) const { return (have_lam >> j) & 1; }
};

inline Share make_view(Framework f, int party, World w = World::Arith) {
    const auto& fi = info(f);
    Share s;
    s.world = w;
    s.have_m = (fi.m_holders >> party) & 1;
    for (int j = 0; j < fi.n_lambda; ++j)
        if ((fi.lambda_holders[j] >> party) & 1) s.have_lam |= static_cast<u8>(1u << j);
    return s;
}

// Linear operations are local: combine m and every held lambda part
// componentwise (XOR for the boolean world).
Share add(const Ring& r, const Share& a, const Share& b);
Share sub(const Ring& r, const Share& a, const Share& b);
Share neg(const Ring& r, const Share& a);
Share scale(const Ring& r, u64 c, const Share& a);
Share add_const(const Ring& r, const Share& a, u64 c, int party, Framework f);
Share lincomb(const Ring& r, std::span<const u64> coeffs, std::span<const Share> shares);

// Public constant as a share: m = c, lambda = 0 at every party.
Share public_share(Framework f, int party, u64 c, World w = World::Arith);

// Boolean-world NOT: flips the masked bit, masks unchanged.
Share bnot(const Share& a);

// Wire layout: framework tag (1 byte), world (1 byte), then m_v and held
// lambda parts in ascending index order, little-endian ceil(ell/8) bytes each.
std::vector<u8> serialize_share(Framework f, const Ring& r, const Share& s);

size_t wire_bytes(const Ring& r);
void append_ring(std::vector<u8>& out, const Ring& r, u64 v);
u64 read_ring(const Ring& r, const u8* data);

// Packed boolean vectors: bit i of word i/64. Used for level-batched circuit
// evaluation over boolean shares.
struct PackedBits {
    size_t n = 0;
    std::vector<u64> w;

    PackedBits() = default;
    explicit PackedBits(size_t bits) : n(bits), w((bits + 63) / 64, 0) {}

    bool get(size_t i) const { return (w[i / 64] >> (i % 64)) & 1; }
    void set(size_t i, bool b) {
        u64 bit = 1ULL << (i % 64);
        if (b)
            w[i / 64] |= bit;
        else
            w[i / 64] &= ~bit;
    }
    void mask_tail() {
        if (n % 64 && !w.empty()) w.back() &= (1ULL << (n % 64)) - 1;
    }
    PackedBits operator^(const PackedBits& o) const {
        PackedBits r(n);
        for (size_t i = 0; i < w.size(); ++i) r.w[i] = w[i] ^ o.w[i];
        return r;
    }
    PackedBits operator&(const PackedBits& o) const {
        PackedBits r(n);
        for (size_t i = 0; i < w.size(); ++i) r.w[i] = w[i] & o.w[i];
        return r;
    }
    PackedBits operator~() const {
        PackedBits r(n);
        for (size_t i = 0; i < w.size(); ++i) r.w[i] = ~w[i];
        r.mask_tail();
        return r;
    }
};

// Boolean-world share of an n-bit vector, lambda parts packed.
struct PackedShare {
    size_t n = 0;
    PackedBits m;
    PackedBits lam[3];
    u8 have_m = 0;
    u8 have_lam = 0;

    PackedShare() = default;
    PackedShare(Framework f, int party, size_t bits) : n(bits), m(bits) {
        auto view = make_view(f, party, World::Bool);
        have_m = view.have_m;
        have_lam = view.have_lam;
        for (auto& l : lam) l = PackedBits(bits);
    }
    bool has_lam(int j) const { return (have_lam >> j) & 1; }

    PackedShare xor_with(const PackedShare& o) const {
        PackedShare r = *this;
        r.m = m ^ o.m;
        for (int j = 0; j < 3; ++j) r.lam[j] = lam[j] ^ o.lam[j];
        return r;
    }
    PackedShare not_all() const {  // NOT: m flipped, lambda unchanged
        PackedShare r = *this;
        r.m = ~m;
        return r;
    }
    Share bit(size_t i, World w = World::Bool) const {
        Share s;
        s.world = w;
        s.have_m = have_m;
        s.have_lam = have_lam;
        s.m = m.get(i) ? 1 : 0;
        for (int j = 0; j < 3; ++j) s.lam[j] = lam[j].get(i) ? 1 : 0;
        return s;
    }
    void set_bit(size_t i, const Share& s) {
        m.set(i, s.m & 1);
        for (int j = 0; j < 3; ++j) lam[j].set(i, s.lam[j] & 1);
    }
};

}  // namespace mpckit
