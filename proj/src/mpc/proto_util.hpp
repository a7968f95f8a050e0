#pragma once

#include <span>

#include "mpc/session.hpp"

namespace mpckit {

inline std::vector<u8> pack_ring_vec(const Ring& r, std::span<const u64> vals) {
    std::vector<u8> out;
    out.reserve(vals.size() * wire_bytes(r));
    for (u64 v : vals) append_ring(out, r, v);
    return out;
}

inline std::vector<u64> unpack_ring_vec(const Ring& r, const std::vector<u8>& buf, size_t cnt) {
    std::vector<u64> out(cnt, 0);
    size_t wb = wire_bytes(r);
    for (size_t i = 0; i < cnt && (i + 1) * wb <= buf.size(); ++i)
        out[i] = read_ring(r, buf.data() + i * wb);
    return out;
}

inline void send_ring_vec(PartyCtx& ctx, int to, std::span<const u64> vals, bool defer = false) {
    ctx.send(to, pack_ring_vec(ctx.ring, vals), vals.size() * ctx.ring.ell, defer);
}

inline std::vector<u64> recv_ring_vec(PartyCtx& ctx, int from, size_t cnt) {
    auto buf = ctx.recv(from, cnt * wire_bytes(ctx.ring));
    return unpack_ring_vec(ctx.ring, buf, cnt);
}

// jsnd of a ring-element vector; returns the values at the receiver.
inline std::vector<u64> jsnd_ring_vec(PartyCtx& ctx, int i, int j, int k,
                                      std::span<const u64> vals, size_t cnt, bool defer = false) {
    std::vector<u8> payload;
    if (ctx.id == i || ctx.id == j) payload = pack_ring_vec(ctx.ring, vals);
    else payload.resize(cnt * wire_bytes(ctx.ring));
    auto got = ctx.jsnd(i, j, k, payload, cnt * ctx.ring.ell, defer);
    if (ctx.id == k) return unpack_ring_vec(ctx.ring, *got, cnt);
    return {};
}

inline std::vector<u8> pack_bits(const PackedBits& b) {
    std::vector<u8> out((b.n + 7) / 8, 0);
    for (size_t i = 0; i < out.size(); ++i) {
        size_t word = i / 8, byte = i % 8;
        if (word < b.w.size()) out[i] = static_cast<u8>(b.w[word] >> (8 * byte));
    }
    return out;
}

inline PackedBits unpack_bits(const std::vector<u8>& buf, size_t n) {
    PackedBits b(n);
    for (size_t i = 0; i < buf.size() && i < (n + 7) / 8; ++i)
        b.w[i / 8] |= static_cast<u64>(buf[i]) << (8 * (i % 8));
    b.mask_tail();
    return b;
}

inline void send_bits(PartyCtx& ctx, int to, const PackedBits& b, bool defer = false) {
    ctx.send(to, pack_bits(b), b.n, defer);
}

inline PackedBits recv_bits(PartyCtx& ctx, int from, size_t n) {
    auto buf = ctx.recv(from, (n + 7) / 8);
    return unpack_bits(buf, n);
}

inline PackedBits jsnd_bits(PartyCtx& ctx, int i, int j, int k, const PackedBits& b, size_t n,
                            bool defer = false) {
    std::vector<u8> payload;
    if (ctx.id == i || ctx.id == j) payload = pack_bits(b);
    else payload.resize((n + 7) / 8);
    auto got = ctx.jsnd(i, j, k, payload, n, defer);
    if (ctx.id == k) return unpack_bits(*got, n);
    return PackedBits(n);
}

inline PackedBits sample_bits(PrfStream&& s, size_t n) {
    PackedBits b(n);
    s.fill_words(b.w.data(), b.w.size());
    b.mask_tail();
    return b;
}

// Ring embedding of a bit: b^R in {0,1} as a ring element.
inline u64 bit_embed(bool b) { return b ? 1 : 0; }

}  // namespace mpckit
