#pragma once

#include <span>

#include "mpc/proto_util.hpp"

namespace mpckit {

using ShareVec = std::vector<Share>;
using SpanS = std::span<const Share>;

// Uniform protocol surface over the four framework engines. Scalar ops are
// the one-element case of the vectorized entry points; independent instances
// inside one call share online rounds.
class Engine {
   public:
    virtual ~Engine() = default;
    virtual Framework fw() const = 0;

    // -- arithmetic world ----------------------------------------------------
    // Input sharing by `dealer` (vals non-null only at the dealer).
    virtual ShareVec input(PartyCtx& ctx, int dealer, size_t cnt, const u64* vals) = 0;
    virtual std::optional<std::vector<u64>> reconstruct(PartyCtx& ctx, SpanS shares,
                                                        RecMode mode) = 0;
    virtual ShareVec mul(PartyCtx& ctx, SpanS a, SpanS b, bool trunc) = 0;
    virtual ShareVec mul3(PartyCtx& ctx, SpanS a, SpanS b, SpanS c, bool trunc) = 0;
    virtual ShareVec mul4(PartyCtx& ctx, SpanS a, SpanS b, SpanS c, SpanS d, bool trunc) = 0;
    virtual ShareVec mul_nopre(PartyCtx& ctx, SpanS a, SpanS b, bool trunc) {
        (void)ctx; (void)a; (void)b; (void)trunc;
        throw std::logic_error("on-demand multiplication not available in " + to_string(fw()));
    }
    // Batched dot products: one (a_i, b_i) vector pair per output element.
    virtual ShareVec dotp(PartyCtx& ctx, const std::vector<ShareVec>& as,
                          const std::vector<ShareVec>& bs, bool trunc) = 0;
    // y = trunc(alpha * v) for a public fixed-point alpha.
    virtual ShareVec scale_trunc(PartyCtx& ctx, u64 alpha, SpanS v) = 0;

    // Fused resharing of locally held additive terms: slot s holds one summand
    // known to every party in slot_holders(s); output is a fresh share of the
    // slot sum. This is the shared online skeleton of the bit2A/bitInj family.
    virtual ShareVec reshare_slots(PartyCtx& ctx, size_t cnt,
                                   const std::vector<std::vector<u64>>& slot_vals) = 0;
    virtual int n_slots() const = 0;
    virtual SubsetMask slot_holders(int slot) const = 0;

    // -- boolean world (packed bit vectors) -----------------------------------
    virtual PackedShare bool_input(PartyCtx& ctx, int dealer, size_t nbits,
                                   const PackedBits* bits) = 0;
    virtual std::optional<PackedBits> bool_reconstruct(PartyCtx& ctx, const PackedShare& s) = 0;
    virtual PackedShare and2(PartyCtx& ctx, const PackedShare& a, const PackedShare& b) = 0;
    virtual PackedShare and3(PartyCtx& ctx, const PackedShare& a, const PackedShare& b,
                             const PackedShare& c) = 0;
    virtual PackedShare and4(PartyCtx& ctx, const PackedShare& a, const PackedShare& b,
                             const PackedShare& c, const PackedShare& d) = 0;

    // Boolean sharings of the framework's arithmetic summand split
    // v = sum(summands), each summand known in clear to one party set; used by
    // bit extraction and A2B. Result[s][j] is the boolean share of bit j of
    // summand s, packed across the cnt instances of v.
    virtual std::vector<std::vector<PackedShare>> bool_summands(PartyCtx& ctx, SpanS v) = 0;

    // Boolean sharing of the equality split: y = y1 - y2 with y1, y2 each
    // known to one party set; returns (bits of y1, bits of y2), packed across
    // instances.
    virtual std::pair<std::vector<PackedShare>, std::vector<PackedShare>> bool_eq_split(
        PartyCtx& ctx, SpanS y) = 0;

    Share mul1(PartyCtx& ctx, const Share& a, const Share& b, bool trunc) {
        return mul(ctx, SpanS(&a, 1), SpanS(&b, 1), trunc)[0];
    }
};

Engine& engine_for(Framework f);

// Convenience wrappers used by tests and the CLI.
inline Share input1(Engine& e, PartyCtx& ctx, int dealer, u64 v) {
    return e.input(ctx, dealer, 1, ctx.id == dealer ? &v : nullptr)[0];
}

}  // namespace mpckit
