#pragma once

#include "mpc/engine.hpp"

namespace mpckit {
namespace swift3 {

// Party indices 0,1,2 map to the paper-facing P1,P2,P3 (P3 = helper D).
constexpr int kP1 = 0, kP2 = 1, kP3 = 2;

Engine& instance();

// Additive 3-component sharing <.>: comp 0 held by {P1,P3}, comp 1 by
// {P2,P3}, comp 2 by {P1,P2}. Entries for unheld components are zero.
struct AddSh3 {
    u64 c[3] = {0, 0, 0};
};

// Truncation pair of Fig-8.4 shape: <r>, [[r^t]] with the logical-shift
// convention, plus [[msb(r)^R]] so callers can sign-correct (arithmetic
// shift = logical shift - msb * 2^(ell-x)).
struct TrPair {
    AddSh3 r;
    Share rt_logical;
    Share msb_r;
};

std::vector<TrPair> trgen(PartyCtx& ctx, size_t cnt);
Share rt_signed(PartyCtx& ctx, const TrPair& t);

// <.>-share components held by each party.
const int* held_comps(int id);

}  // namespace swift3
}  // namespace mpckit
