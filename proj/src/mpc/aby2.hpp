#pragma once

#include "mpc/engine.hpp"

namespace mpckit {
namespace aby2 {

constexpr int kP1 = 0, kP2 = 1;

Engine& instance();

// Multiplication with zero online communication: both parties keep their
// additive product term as the negated mask, m_z = 0. Intended for gates on
// the computing parties' own inputs (the output mask is input-dependent).
ShareVec mul_local(PartyCtx& ctx, SpanS a, SpanS b);

// Preprocessing-phase sharing of values known to `owner` (zero communication).
ShareVec share_pre(PartyCtx& ctx, const std::string& tag, int owner,
                   const std::vector<u64>& vals, size_t cnt);

}  // namespace aby2
}  // namespace mpckit
