#pragma once

#include "mpc/session.hpp"

namespace mpckit {

// Trusted-dealer emulation of the ideal preprocessing functionalities: the
// dealer reconstructs the inputs from the parties' shares and deals fresh,
// consistent output shares. Test/benchmark realization of the provider
// extension point; its traffic is metered separately and never counts toward
// online or preprocessing totals.
enum class ProviderOp : u8 {
    DotpPre3 = 1,   // <u>,<v> vectors -> <u.v> (k dot products of length L)
    Prod2 = 2,      // x at P1, y at P2 -> additive [x*y], pointwise
    MulPre2 = 3,    // additive [a],[b] -> additive [(a1+a2)(b1+b2)], pointwise
    Finish = 255,
};

// Party side: one call, one reply. Layout of `body` is op-specific; see the
// engine call sites. All elements travel as ring-width little-endian words;
// k = number of outputs, len = dot-product segment length (1 for pointwise).
std::vector<u64> provider_round(PartyCtx& ctx, ProviderOp op, unsigned ell, u64 k, u64 len,
                                const std::vector<u64>& body, size_t reply_elems);

// Dealer side: serves requests until every party has sent Finish.
void run_provider_loop(Framework fw, int n_parties, const KeyGraph& keys, Transport& tr,
                       int provider_index);

}  // namespace mpckit
