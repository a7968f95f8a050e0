#include "mpc/share.hpp"

namespace mpckit {

Framework framework_from_string(const std::string& s) {
    if (s == "astra") return Framework::ASTRA;
    if (s == "aby2") return Framework::ABY2;
    if (s == "swift") return Framework::SWIFT;
    if (s == "tetrad") return Framework::TETRAD;
    throw std::invalid_argument("unknown framework: " + s);
}

std::string to_string(Framework f) {
    switch (f) {
        case Framework::ASTRA: return "astra";
        case Framework::ABY2: return "aby2";
        case Framework::SWIFT: return "swift";
        case Framework::TETRAD: return "tetrad";
    }
    return "?";
}

const FrameworkInfo& info(Framework f) {
    // ASTRA: P0 helper, P1/P2 online. lambda^1 at {P0,P1}, lambda^2 at {P0,P2}.
    static const FrameworkInfo astra{3, 2, {subset_of({0, 1}), subset_of({0, 2}), 0},
                                     subset_of({1, 2}), false, false};
    // ABY2.0: two online parties, lambda^i private to P_i.
    static const FrameworkInfo aby2{2, 2, {subset_of({0}), subset_of({1}), 0},
                                    subset_of({0, 1}), true, false};
    // SWIFT (indices 0,1,2 = paper P1,P2,P3): lambda^1 {P1,P3}, lambda^2 {P2,P3},
    // lambda^3 {P1,P2}; masked value everywhere.
    static const FrameworkInfo swift3{3, 3,
                                      {subset_of({0, 2}), subset_of({1, 2}), subset_of({0, 1})},
                                      subset_of({0, 1, 2}), true, true};
    // Tetrad: P0 holds all masks, P1/P2/P3 hold the masked value.
    static const FrameworkInfo tetrad{4, 3,
                                      {subset_of({0, 1, 3}), subset_of({0, 2, 3}),
                                       subset_of({0, 1, 2})},
                                      subset_of({1, 2, 3}), false, true};
    switch (f) {
        case Framework::ASTRA: return astra;
        case Framework::ABY2: return aby2;
        case Framework::SWIFT: return swift3;
        case Framework::TETRAD: return tetrad;
    }
    throw std::logic_error("bad framework");
}

namespace {
u64 ring_add(const Ring& r, World w, u64 a, u64 b) {
    return w == World::Bool ? ((a ^ b) & 1) : r.add(a, b);
}
u64 ring_sub(const Ring& r, World w, u64 a, u64 b) {
    return w == World::Bool ? ((a ^ b) & 1) : r.sub(a, b);
}
}  // namespace

Share add(const Ring& r, const Share& a, const Share& b) {
    Share out = a;
    out.m = ring_add(r, a.world, a.m, b.m);
    for (int j = 0; j < 3; ++j) out.lam[j] = ring_add(r, a.world, a.lam[j], b.lam[j]);
    return out;
}

Share sub(const Ring& r, const Share& a, const Share& b) {
    Share out = a;
    out.m = ring_sub(r, a.world, a.m, b.m);
    for (int j = 0; j < 3; ++j) out.lam[j] = ring_sub(r, a.world, a.lam[j], b.lam[j]);
    return out;
}

Share neg(const Ring& r, const Share& a) {
    Share out = a;
    if (a.world == World::Arith) {
        out.m = r.neg(a.m);
        for (int j = 0; j < 3; ++j) out.lam[j] = r.neg(a.lam[j]);
    }
    return out;
}

Share scale(const Ring& r, u64 c, const Share& a) {
    Share out = a;
    if (a.world == World::Bool) {
        u64 bit = c & 1;
        out.m = a.m & bit;
        for (int j = 0; j < 3; ++j) out.lam[j] = a.lam[j] & bit;
        return out;
    }
    out.m = r.mul(c, a.m);
    for (int j = 0; j < 3; ++j) out.lam[j] = r.mul(c, a.lam[j]);
    return out;
}

Share add_const(const Ring& r, const Share& a, u64 c, int party, Framework f) {
    // Only the masked value moves; masks stay put.
    (void)party;
    (void)f;
    Share out = a;
    if (out.have_m) out.m = ring_add(r, a.world, a.m, c);
    return out;
}

Share lincomb(const Ring& r, std::span<const u64> coeffs, std::span<const Share> shares) {
    if (coeffs.size() != shares.size() || shares.empty())
        throw std::invalid_argument("lincomb: size mismatch");
    Share acc = scale(r, coeffs[0], shares[0]);
    for (size_t i = 1; i < shares.size(); ++i)
        acc = add(r, acc, scale(r, coeffs[i], shares[i]));
    return acc;
}

Share public_share(Framework f, int party, u64 c, World w) {
    Share s = make_view(f, party, w);
    s.m = w == World::Bool ? (c & 1) : c;
    return s;
}

Share bnot(const Share& a) {
    Share out = a;
    out.m ^= 1;
    return out;
}

size_t wire_bytes(const Ring& r) { return (r.ell + 7) / 8; }

void append_ring(std::vector<u8>& out, const Ring& r, u64 v) {
    v &= r.mask;
    for (size_t i = 0; i < wire_bytes(r); ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
}

u64 read_ring(const Ring& r, const u8* data) {
    u64 v = 0;
    for (size_t i = 0; i < wire_bytes(r); ++i) v |= static_cast<u64>(data[i]) << (8 * i);
    return v & r.mask;
}

std::vector<u8> serialize_share(Framework f, const Ring& r, const Share& s) {
    std::vector<u8> out;
    out.push_back(static_cast<u8>(f));
    out.push_back(static_cast<u8>(s.world));
    Ring rr = s.world == World::Bool ? Ring(1) : r;
    if (s.have_m) append_ring(out, rr, s.m);
    for (int j = 0; j < info(f).n_lambda; ++j)
        if (s.has_lam(j)) append_ring(out, rr, s.lam[j]);
    return out;
}

}  // namespace mpckit
