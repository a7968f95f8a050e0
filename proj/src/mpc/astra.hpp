#pragma once

#include "mpc/engine.hpp"

namespace mpckit {
namespace astra {

// Party roles: 0 = P0 (helper, preprocessing only), 1/2 = online eval pair.
constexpr int kP0 = 0, kP1 = 1, kP2 = 2;

Engine& instance();

// P0 additively shares values it knows during preprocessing: P1's part is
// sampled with the shared key, P2's part is sent. Returns this party's part
// (empty at P0 unless it is asked to retain both). Callable inside a pre
// closure only.
std::vector<u64> p0_additive_pre(PartyCtx& ctx, const std::string& tag,
                                 const std::vector<u64>& vals_at_p0, size_t cnt);

// Boolean sharing by P0 of bit matrices it knows, preprocessing special case
// (m = 0, lambda carries the value). bits[j] holds bit j across instances.
std::vector<PackedShare> p0_bool_share_pre(PartyCtx& ctx, const std::string& tag,
                                           const std::vector<PackedBits>& bits_at_p0, size_t cnt,
                                           size_t nbits);

}  // namespace astra
}  // namespace mpckit
