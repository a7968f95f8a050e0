#pragma once

#include "mpc/engine.hpp"

namespace mpckit {
namespace tetrad {

// Party roles (Table 5.2): P0 holds every mask part, P1/P2 evaluate online,
// P3 holds the masked value and assists verification.
constexpr int kP0 = 0, kP1 = 1, kP2 = 2, kP3 = 3;

Engine& instance();

// <.>-sharing among P1,P2,P3 (comp 0 at {P1,P3}, comp 1 at {P2,P3}, comp 2 at
// {P1,P2}); P0 knows every component for the values this engine handles.
struct AddSh4 {
    u64 c[3] = {0, 0, 0};
};

// Special multiplication of <.>-shares (three jsnd of one element each);
// P0 must know all components of both inputs.
std::vector<AddSh4> mult_s(PartyCtx& ctx, const std::string& tag,
                           const std::vector<AddSh4>& a, const std::vector<AddSh4>& b);

// On-demand fair multiplication (preprocessing folded into the online phase).
ShareVec mul_nopre(PartyCtx& ctx, SpanS a, SpanS b, bool trunc);

bool holds_comp4(int id, int c);

}  // namespace tetrad
}  // namespace mpckit
