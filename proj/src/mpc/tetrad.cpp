#include "mpc/tetrad.hpp"

namespace mpckit {
namespace tetrad {

namespace {

// lambda comp holders (Table 5.2); <.>-comps live on the same pairs among
// P1..P3 with P0 knowing everything it helped compute.
constexpr SubsetMask kLamMask[3] = {0b1011, 0b1101, 0b0111};
constexpr int kSlotPair[3][2] = {{kP1, kP3}, {kP2, kP3}, {kP1, kP2}};
constexpr SubsetMask kU1Mask = 0b1011, kU2Mask = 0b1101, kSMask = 0b0111;

bool member(SubsetMask m, int id) { return (m >> id) & 1; }
bool holds_lam(int id, int c) { return member(kLamMask[c], id); }
int slot_third(int s) { return kP1 + kP2 + kP3 - kSlotPair[s][0] - kSlotPair[s][1]; }

void push_packed(std::vector<u64>& w, const PackedBits& b) {
    w.insert(w.end(), b.w.begin(), b.w.end());
}
PackedBits pop_packed(const std::vector<u64>& w, size_t& off, size_t n) {
    PackedBits b(n);
    for (size_t i = 0; i < b.w.size(); ++i) b.w[i] = w[off + i];
    off += b.w.size();
    return b;
}
PackedBits ones(size_t n) {
    PackedBits b(n);
    for (auto& x : b.w) x = ~0ULL;
    b.mask_tail();
    return b;
}

void push_vec(std::vector<u64>& w, const std::vector<u64>& v) {
    w.insert(w.end(), v.begin(), v.end());
}

struct Cursor {
    const std::vector<u64>& w;
    size_t off = 0;
    std::vector<u64> take(size_t n) {
        std::vector<u64> v(w.begin() + static_cast<long>(off), w.begin() + static_cast<long>(off + n));
        off += n;
        return v;
    }
};

std::vector<AddSh4> mult_s_impl(PartyCtx& ctx, const std::string& tag,
                                const std::vector<AddSh4>& a, const std::vector<AddSh4>& b);
u64 fzero_component_all(PartyCtx& ctx, const std::string& tag, int j, size_t idx);

//   C^1 (P0,P1) = A0 B2 + A2 B0 + A2 B2
//   C^2 (P0,P2) = A1 B2 + A2 B1 + A1 B1
//   C^3 (P0,P3) = A0 B1 + A1 B0 + A0 B0
u64 prod_comp(const Ring& r, const AddSh4& a, const AddSh4& b, int which) {
    switch (which) {
        case 1:
            return r.add(r.add(r.mul(a.c[0], b.c[2]), r.mul(a.c[2], b.c[0])), r.mul(a.c[2], b.c[2]));
        case 2:
            return r.add(r.add(r.mul(a.c[1], b.c[2]), r.mul(a.c[2], b.c[1])), r.mul(a.c[1], b.c[1]));
        default:
            return r.add(r.add(r.mul(a.c[0], b.c[1]), r.mul(a.c[1], b.c[0])), r.mul(a.c[0], b.c[0]));
    }
}

AddSh4 lam_sh4(const Share& s) {
    AddSh4 a;
    for (int c = 0; c < 3; ++c) a.c[c] = s.lam[c];
    return a;
}

// Pair-computable gamma with the u-trick. Serialized fields, per element:
//   P0: g1 g2 g3 u1 u2 s w | P1: g1 u1 s | P2: g2 u2 s | P3: g3 u1 u2 w
// When fold_r != 0, u2 is sampled (not sent) and u1+u2 = g3 -/+ r.
struct UGammaCols {
    std::vector<u64> g, u, s, w, u2;  // role-dependent view
};

// Produces the u-trick material for `cnt` gammas of the product A*B
// (component formulas above). fold = 0: plain (u2 jsnd'd to P2);
// fold = +1: u1+u2 = g3 + r (r subtracted in y); fold = -1: u1+u2 = g3 - r.
// Appends serialized fields to w_out and returns r (valid at P0,P3).
std::vector<u64> ugamma_pre(PartyCtx& ctx, const std::string& tag,
                            const std::function<AddSh4(size_t)>& A,
                            const std::function<AddSh4(size_t)>& B, size_t cnt, int fold,
                            std::vector<u64>& w_out) {
    const Ring& r = ctx.ring;
    std::vector<u64> u1, u2, s;
    if (member(kU1Mask, ctx.id)) u1 = ctx.stream(kU1Mask, tag + "_u1").draw(r, cnt);
    if (fold != 0 && member(kU2Mask, ctx.id)) u2 = ctx.stream(kU2Mask, tag + "_u2").draw(r, cnt);
    if (member(kSMask, ctx.id)) s = ctx.stream(kSMask, tag + "_s").draw(r, cnt);
    std::vector<u64> rv(cnt, 0);
    if (ctx.id == kP0) {
        std::vector<u64> g1(cnt), g2(cnt), g3(cnt), wv(cnt);
        for (size_t i = 0; i < cnt; ++i) {
            g1[i] = prod_comp(r, A(i), B(i), 1);
            g2[i] = prod_comp(r, A(i), B(i), 2);
            g3[i] = prod_comp(r, A(i), B(i), 3);
            wv[i] = r.add(r.add(g1[i], g2[i]), s[i]);
        }
        if (fold == 0) {
            std::vector<u64> u2v(cnt);
            for (size_t i = 0; i < cnt; ++i) u2v[i] = r.sub(g3[i], u1[i]);
            jsnd_ring_vec(ctx, kP3, kP0, kP2, u2v, cnt);
            u2 = u2v;
        } else {
            for (size_t i = 0; i < cnt; ++i)
                rv[i] = fold > 0 ? r.sub(r.add(u1[i], u2[i]), g3[i])
                                 : r.sub(g3[i], r.add(u1[i], u2[i]));
        }
        send_ring_vec(ctx, kP3, wv);
        push_vec(w_out, g1);
        push_vec(w_out, g2);
        push_vec(w_out, g3);
        push_vec(w_out, u1);
        push_vec(w_out, u2);
        push_vec(w_out, s);
        push_vec(w_out, wv);
        return rv;
    }
    if (ctx.id == kP1) {
        std::vector<u64> g1(cnt);
        for (size_t i = 0; i < cnt; ++i) g1[i] = prod_comp(r, A(i), B(i), 1);
        push_vec(w_out, g1);
        push_vec(w_out, u1);
        push_vec(w_out, s);
        return rv;
    }
    if (ctx.id == kP2) {
        std::vector<u64> g2(cnt);
        for (size_t i = 0; i < cnt; ++i) g2[i] = prod_comp(r, A(i), B(i), 2);
        if (fold == 0) u2 = jsnd_ring_vec(ctx, kP3, kP0, kP2, std::vector<u64>(cnt, 0), cnt);
        push_vec(w_out, g2);
        push_vec(w_out, u2);
        push_vec(w_out, s);
        return rv;
    }
    // P3
    std::vector<u64> g3(cnt);
    for (size_t i = 0; i < cnt; ++i) g3[i] = prod_comp(r, A(i), B(i), 3);
    if (fold == 0) {
        std::vector<u64> u2v(cnt);
        for (size_t i = 0; i < cnt; ++i) u2v[i] = r.sub(g3[i], u1[i]);
        jsnd_ring_vec(ctx, kP3, kP0, kP2, u2v, cnt);
        u2 = u2v;
    } else {
        for (size_t i = 0; i < cnt; ++i)
            rv[i] = fold > 0 ? r.sub(r.add(u1[i], u2[i]), g3[i])
                             : r.sub(g3[i], r.add(u1[i], u2[i]));
    }
    auto wv = recv_ring_vec(ctx, kP0, cnt);
    push_vec(w_out, g3);
    push_vec(w_out, u1);
    push_vec(w_out, u2);
    push_vec(w_out, wv);
    return rv;
}

// Reads back one ugamma block (mirrors ugamma_pre's serialization).
UGammaCols ugamma_read(PartyCtx& ctx, Cursor& cur, size_t cnt) {
    UGammaCols g;
    if (ctx.id == kP0) {
        g.g = cur.take(cnt);          // g1
        auto g2 = cur.take(cnt);      // g2 (kept for w recompute; unused online)
        auto g3 = cur.take(cnt);      // g3
        g.u = cur.take(cnt);          // u1
        g.u2 = cur.take(cnt);         // u2
        g.s = cur.take(cnt);          // s
        g.w = cur.take(cnt);
        (void)g2;
        (void)g3;
        return g;
    }
    if (ctx.id == kP1 || ctx.id == kP2) {
        g.g = cur.take(cnt);
        g.u = cur.take(cnt);
        g.s = cur.take(cnt);
        return g;
    }
    g.g = cur.take(cnt);   // g3
    g.u = cur.take(cnt);   // u1
    g.u2 = cur.take(cnt);  // u2
    g.w = cur.take(cnt);
    return g;
}

size_t ugamma_words(int id, size_t cnt) {
    if (id == kP0) return 7 * cnt;
    return (id == kP3 ? 4 : 3) * cnt;
}

// Joint sharing of q by (P0,P3) in the preprocessing (lambda_q^2 sampled by
// everyone but P1, lambda_q^1 jsnd'd to P1). Returns [lq0, lq1] columns.
std::pair<std::vector<u64>, std::vector<u64>> jsh_pre_p0p3(PartyCtx& ctx, const std::string& tag,
                                                           const std::vector<u64>& q, size_t cnt) {
    const Ring& r = ctx.ring;
    std::vector<u64> lq1(cnt, 0), lq0(cnt, 0);
    if (member(0b1101, ctx.id)) lq1 = ctx.stream(0b1101, tag + "_lq1").draw(r, cnt);
    if (ctx.id == kP0 || ctx.id == kP3) {
        for (size_t i = 0; i < cnt; ++i) lq0[i] = r.neg(r.add(q[i], lq1[i]));
        jsnd_ring_vec(ctx, kP3, kP0, kP1, lq0, cnt);
    } else if (ctx.id == kP1) {
        lq0 = jsnd_ring_vec(ctx, kP3, kP0, kP1, std::vector<u64>(cnt, 0), cnt);
    }
    return {lq0, lq1};
}

class TetradEngine final : public Engine {
   public:
    Framework fw() const override { return Framework::TETRAD; }
    int n_slots() const override { return 3; }
    SubsetMask slot_holders(int slot) const override {
        return subset_of({kSlotPair[slot][0], kSlotPair[slot][1]});
    }

    ShareVec input(PartyCtx& ctx, int dealer, size_t cnt, const u64* vals) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        std::vector<int> known;
        for (int c = 0; c < 3; ++c)
            if (holds_lam(ctx.id, c) || ctx.id == dealer) known.push_back(c);
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            for (int c = 0; c < 3; ++c) {
                SubsetMask m = kLamMask[c] | (1u << dealer);
                if (!member(m, ctx.id)) continue;
                push_vec(w, ctx.stream(m, "lam" + std::to_string(c)).draw(r, cnt));
            }
            return w;
        });
        ShareVec out(cnt, make_view(Framework::TETRAD, ctx.id));
        std::vector<u64> full_lam(cnt, 0);
        for (size_t kx = 0; kx < known.size(); ++kx)
            for (size_t i = 0; i < cnt; ++i) {
                u64 v = words[kx * cnt + i];
                if (out[i].has_lam(known[kx])) out[i].lam[known[kx]] = v;
                full_lam[i] = r.add(full_lam[i], v);
            }
        if (!ctx.online()) return out;
        std::vector<u64> m(cnt);
        if (ctx.id == dealer) {
            for (size_t i = 0; i < cnt; ++i) m[i] = r.add(vals[i], full_lam[i]);
            for (int p = kP1; p <= kP3; ++p)
                if (p != dealer) send_ring_vec(ctx, p, m);
        } else if (ctx.id != kP0) {
            m = recv_ring_vec(ctx, dealer, cnt);
        }
        if (ctx.id != kP0) {
            ctx.tetrad_share_absorb(pack_ring_vec(r, m));
            for (size_t i = 0; i < cnt; ++i) out[i].m = m[i];
        }
        return out;
    }

    std::optional<std::vector<u64>> reconstruct(PartyCtx& ctx, SpanS shares,
                                                RecMode mode) override {
        if (mode == RecMode::Fair) return reconstruct_fair(ctx, shares);
        const Ring& r = ctx.ring;
        size_t cnt = shares.size();
        ctx.run_verify();
        if (ctx.abort_flag) return std::nullopt;
        std::vector<u64> lam[3], m(cnt);
        for (int c = 0; c < 3; ++c) {
            lam[c].assign(cnt, 0);
            for (size_t i = 0; i < cnt; ++i) lam[c][i] = shares[i].lam[c];
        }
        for (size_t i = 0; i < cnt; ++i) m[i] = shares[i].m;
        auto deliver = [&](std::vector<u64>& vec, int i, int j, int k) {
            auto payload = pack_ring_vec(r, vec);
            auto got = ctx.jsnd_now(i, j, k, payload, cnt * r.ell);
            if (ctx.id == k) vec = unpack_ring_vec(r, *got, cnt);
        };
        deliver(lam[0], kP1, kP0, kP2);
        deliver(lam[2], kP2, kP0, kP3);
        deliver(lam[1], kP3, kP0, kP1);
        deliver(m, kP1, kP2, kP0);
        if (!ctx.echo_abort_clear()) return std::nullopt;
        std::vector<u64> v(cnt);
        for (size_t i = 0; i < cnt; ++i)
            v[i] = r.sub(m[i], r.add(r.add(lam[0][i], lam[1][i]), lam[2][i]));
        return v;
    }

    ShareVec mul(PartyCtx& ctx, SpanS a, SpanS b, bool trunc) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = a.size();
        if (b.size() != cnt) throw std::invalid_argument("mul: size mismatch");
        // gamma_ab split locally; u1+u2 = gamma^3 - r (Fig 5.3).
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            auto rv = ugamma_pre(
                ctx, "g", [&](size_t i) { return lam_sh4(a[i]); },
                [&](size_t i) { return lam_sh4(b[i]); }, cnt, /*fold=*/-1, w);
            std::vector<u64> q(cnt);
            if (ctx.id == kP0 || ctx.id == kP3)
                for (size_t i = 0; i < cnt; ++i)
                    q[i] = trunc ? r.trunc(rv[i], ctx.fx.frac_bits) : rv[i];
            auto [lq0, lq1] = jsh_pre_p0p3(ctx, "q", q, cnt);
            push_vec(w, lq0);
            push_vec(w, lq1);
            std::vector<u64> lp(cnt, 0);
            if (member(kSMask, ctx.id)) lp = ctx.stream(kSMask, "lp").draw(r, cnt);
            push_vec(w, lp);
            return w;
        });
        Cursor cur{words};
        UGammaCols g = ugamma_read(ctx, cur, cnt);
        auto lq0 = cur.take(cnt);
        auto lq1 = cur.take(cnt);
        auto lp = cur.take(cnt);

        ShareVec out(cnt, make_view(Framework::TETRAD, ctx.id));
        for (size_t i = 0; i < cnt; ++i) {
            if (out[i].has_lam(0)) out[i].lam[0] = lq0[i];
            if (out[i].has_lam(1)) out[i].lam[1] = lq1[i];
            if (out[i].has_lam(2)) out[i].lam[2] = lp[i];
        }
        if (!ctx.online()) return out;

        std::vector<u64> mp(cnt, 0);
        if (ctx.id == kP1 || ctx.id == kP2) {
            int lamix = ctx.id == kP1 ? 0 : 1;
            std::vector<u64> y_own(cnt);
            for (size_t i = 0; i < cnt; ++i)
                y_own[i] = r.sub(r.add(g.g[i], g.u[i]),
                                 r.add(r.mul(a[i].lam[lamix], b[i].m), r.mul(b[i].lam[lamix], a[i].m)));
            int peer = ctx.id == kP1 ? kP2 : kP1;
            send_ring_vec(ctx, peer, y_own);
            auto y_peer = recv_ring_vec(ctx, peer, cnt);
            for (size_t i = 0; i < cnt; ++i) {
                u64 y3 = r.neg(r.add(r.mul(a[i].lam[2], b[i].m), r.mul(b[i].lam[2], a[i].m)));
                u64 zr = r.add(r.add(y_own[i], y_peer[i]), r.add(y3, r.mul(a[i].m, b[i].m)));
                u64 p = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
                mp[i] = r.add(p, lp[i]);
                ctx.tetrad_multver_absorb(r.add(r.add(y_own[i], y_peer[i]), g.s[i]));
            }
        }
        if (ctx.id == kP3) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 v = r.neg(r.add(r.mul(r.add(a[i].lam[0], a[i].lam[1]), b[i].m),
                                    r.mul(r.add(b[i].lam[0], b[i].lam[1]), a[i].m)));
                v = r.add(v, r.add(r.add(g.u[i], g.u2[i]), g.w[i]));
                ctx.tetrad_multver_absorb(v);
            }
        }
        auto got = jsnd_ring_vec(ctx, kP1, kP2, kP3, mp, cnt, /*defer=*/true);
        if (ctx.id == kP3) mp = got;
        if (ctx.id != kP0)
            for (size_t i = 0; i < cnt; ++i) out[i].m = mp[i];
        return out;
    }

    ShareVec mul3(PartyCtx& ctx, SpanS a, SpanS b, SpanS c, bool trunc) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = a.size();
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            // <gamma_ab> via special multiplication (three jsnd)
            std::vector<AddSh4> la(cnt), lb(cnt);
            for (size_t i = 0; i < cnt; ++i) {
                la[i] = lam_sh4(a[i]);
                lb[i] = lam_sh4(b[i]);
            }
            auto gab = mult_s_impl(ctx, "gab", la, lb);
            for (size_t i = 0; i < cnt; ++i)
                for (int cc = 0; cc < 3; ++cc) w.push_back(gab[i].c[cc]);
            // gamma_ac, gamma_bc: u-trick on lambda pairs
            ugamma_pre(
                ctx, "gac", [&](size_t i) { return lam_sh4(a[i]); },
                [&](size_t i) { return lam_sh4(c[i]); }, cnt, 0, w);
            ugamma_pre(
                ctx, "gbc", [&](size_t i) { return lam_sh4(b[i]); },
                [&](size_t i) { return lam_sh4(c[i]); }, cnt, 0, w);
            // gamma_abc from <gamma_ab> and lambda_c, with +r folded in
            auto rv = ugamma_pre(
                ctx, "gabc", [&](size_t i) { return gab[i]; },
                [&](size_t i) { return lam_sh4(c[i]); }, cnt, /*fold=*/+1, w);
            std::vector<u64> q(cnt);
            if (ctx.id == kP0 || ctx.id == kP3)
                for (size_t i = 0; i < cnt; ++i)
                    q[i] = trunc ? r.trunc(rv[i], ctx.fx.frac_bits) : rv[i];
            auto [lq0, lq1] = jsh_pre_p0p3(ctx, "q", q, cnt);
            push_vec(w, lq0);
            push_vec(w, lq1);
            std::vector<u64> lp(cnt, 0);
            if (member(kSMask, ctx.id)) lp = ctx.stream(kSMask, "lp").draw(r, cnt);
            push_vec(w, lp);
            if (ctx.id == kP0 || ctx.id == kP3) push_vec(w, rv);
            return w;
        });
        Cursor cur{words};
        std::vector<AddSh4> gab(cnt);
        auto gabf = cur.take(3 * cnt);
        for (size_t i = 0; i < cnt; ++i)
            for (int cc = 0; cc < 3; ++cc) gab[i].c[cc] = gabf[3 * i + static_cast<size_t>(cc)];
        UGammaCols gac = ugamma_read(ctx, cur, cnt);
        UGammaCols gbc = ugamma_read(ctx, cur, cnt);
        UGammaCols gabc = ugamma_read(ctx, cur, cnt);
        auto lq0 = cur.take(cnt);
        auto lq1 = cur.take(cnt);
        auto lp = cur.take(cnt);
        std::vector<u64> rv;
        if (ctx.id == kP0 || ctx.id == kP3) rv = cur.take(cnt);

        ShareVec out(cnt, make_view(Framework::TETRAD, ctx.id));
        for (size_t i = 0; i < cnt; ++i) {
            if (out[i].has_lam(0)) out[i].lam[0] = lq0[i];
            if (out[i].has_lam(1)) out[i].lam[1] = lq1[i];
            if (out[i].has_lam(2)) out[i].lam[2] = lp[i];
        }
        if (!ctx.online()) return out;

        std::vector<u64> mp(cnt, 0);
        if (ctx.id == kP1 || ctx.id == kP2) {
            int lx = ctx.id == kP1 ? 0 : 1;
            int gcomp = ctx.id == kP1 ? 0 : 1;  // held <gamma_ab> component
            std::vector<u64> y_own(cnt);
            for (size_t i = 0; i < cnt; ++i) {
                u64 m_ab = r.mul(a[i].m, b[i].m), m_ac = r.mul(a[i].m, c[i].m),
                    m_bc = r.mul(b[i].m, c[i].m);
                u64 acc = 0;
                acc = r.sub(acc, r.mul(a[i].lam[lx], m_bc));
                acc = r.sub(acc, r.mul(b[i].lam[lx], m_ac));
                acc = r.sub(acc, r.mul(c[i].lam[lx], m_ab));
                acc = r.add(acc, r.mul(gab[i].c[gcomp], c[i].m));
                acc = r.add(acc, r.mul(r.add(gac.g[i], gac.u[i]), b[i].m));
                acc = r.add(acc, r.mul(r.add(gbc.g[i], gbc.u[i]), a[i].m));
                acc = r.sub(acc, r.add(gabc.g[i], gabc.u[i]));
                y_own[i] = acc;
            }
            int peer = ctx.id == kP1 ? kP2 : kP1;
            send_ring_vec(ctx, peer, y_own);
            auto y_peer = recv_ring_vec(ctx, peer, cnt);
            for (size_t i = 0; i < cnt; ++i) {
                u64 m_ab = r.mul(a[i].m, b[i].m), m_ac = r.mul(a[i].m, c[i].m),
                    m_bc = r.mul(b[i].m, c[i].m), m_abc = r.mul(m_ab, c[i].m);
                u64 y3 = 0;
                y3 = r.sub(y3, r.mul(a[i].lam[2], m_bc));
                y3 = r.sub(y3, r.mul(b[i].lam[2], m_ac));
                y3 = r.sub(y3, r.mul(c[i].lam[2], m_ab));
                y3 = r.add(y3, r.mul(gab[i].c[2], c[i].m));
                u64 zr = r.add(r.add(y_own[i], y_peer[i]), r.add(y3, m_abc));
                u64 p = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
                mp[i] = r.add(p, lp[i]);
                u64 vv = r.add(y_own[i], y_peer[i]);
                vv = r.add(vv, r.mul(gac.s[i], b[i].m));
                vv = r.add(vv, r.mul(gbc.s[i], a[i].m));
                vv = r.sub(vv, gabc.s[i]);
                ctx.tetrad_multver_absorb(vv);
            }
        }
        if (ctx.id == kP3) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 m_ab = r.mul(a[i].m, b[i].m), m_ac = r.mul(a[i].m, c[i].m),
                    m_bc = r.mul(b[i].m, c[i].m);
                u64 v = 0;
                v = r.sub(v, r.mul(r.add(a[i].lam[0], a[i].lam[1]), m_bc));
                v = r.sub(v, r.mul(r.add(b[i].lam[0], b[i].lam[1]), m_ac));
                v = r.sub(v, r.mul(r.add(c[i].lam[0], c[i].lam[1]), m_ab));
                v = r.add(v, r.mul(r.add(gab[i].c[0], gab[i].c[1]), c[i].m));
                v = r.add(v, r.mul(r.add(gac.w[i], gac.g[i]), b[i].m));
                v = r.add(v, r.mul(r.add(gbc.w[i], gbc.g[i]), a[i].m));
                v = r.sub(v, r.add(gabc.w[i], r.add(gabc.g[i], rv[i])));
                ctx.tetrad_multver_absorb(v);
            }
        }
        auto got = jsnd_ring_vec(ctx, kP1, kP2, kP3, mp, cnt, /*defer=*/true);
        if (ctx.id == kP3) mp = got;
        if (ctx.id != kP0)
            for (size_t i = 0; i < cnt; ++i) out[i].m = mp[i];
        return out;
    }

    ShareVec mul4(PartyCtx& ctx, SpanS a, SpanS b, SpanS c, SpanS d, bool trunc) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = a.size();
        SpanS in[4] = {a, b, c, d};
        // pair gammas via u-trick: ac, ad, bc, bd; <gamma_ab>, <gamma_cd> via
        // special mult; triples from the <.> pairs; top with -r folded.
        const std::pair<int, int> upairs[4] = {{0, 2}, {0, 3}, {1, 2}, {1, 3}};
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            std::vector<AddSh4> la(cnt), lb(cnt), lc(cnt), ld(cnt);
            for (size_t i = 0; i < cnt; ++i) {
                la[i] = lam_sh4(a[i]);
                lb[i] = lam_sh4(b[i]);
                lc[i] = lam_sh4(c[i]);
                ld[i] = lam_sh4(d[i]);
            }
            auto gab = mult_s_impl(ctx, "gab", la, lb);
            auto gcd = mult_s_impl(ctx, "gcd", lc, ld);
            for (size_t i = 0; i < cnt; ++i)
                for (int cc = 0; cc < 3; ++cc) w.push_back(gab[i].c[cc]);
            for (size_t i = 0; i < cnt; ++i)
                for (int cc = 0; cc < 3; ++cc) w.push_back(gcd[i].c[cc]);
            for (auto [x, y] : upairs)
                ugamma_pre(
                    ctx, "g" + std::to_string(x) + std::to_string(y),
                    [&, x = x](size_t i) { return lam_sh4(in[x][i]); },
                    [&, y = y](size_t i) { return lam_sh4(in[y][i]); }, cnt, 0, w);
            // triples: abc = gab*lc, abd = gab*ld, acd = gcd*la, bcd = gcd*lb
            ugamma_pre(ctx, "gabc", [&](size_t i) { return gab[i]; },
                       [&](size_t i) { return lc[i]; }, cnt, 0, w);
            ugamma_pre(ctx, "gabd", [&](size_t i) { return gab[i]; },
                       [&](size_t i) { return ld[i]; }, cnt, 0, w);
            ugamma_pre(ctx, "gacd", [&](size_t i) { return gcd[i]; },
                       [&](size_t i) { return la[i]; }, cnt, 0, w);
            ugamma_pre(ctx, "gbcd", [&](size_t i) { return gcd[i]; },
                       [&](size_t i) { return lb[i]; }, cnt, 0, w);
            auto rv = ugamma_pre(ctx, "gtop", [&](size_t i) { return gab[i]; },
                                 [&](size_t i) { return gcd[i]; }, cnt, /*fold=*/-1, w);
            std::vector<u64> q(cnt);
            if (ctx.id == kP0 || ctx.id == kP3)
                for (size_t i = 0; i < cnt; ++i)
                    q[i] = trunc ? r.trunc(rv[i], ctx.fx.frac_bits) : rv[i];
            auto [lq0, lq1] = jsh_pre_p0p3(ctx, "q", q, cnt);
            push_vec(w, lq0);
            push_vec(w, lq1);
            std::vector<u64> lp(cnt, 0);
            if (member(kSMask, ctx.id)) lp = ctx.stream(kSMask, "lp").draw(r, cnt);
            push_vec(w, lp);
            if (ctx.id == kP0 || ctx.id == kP3) push_vec(w, rv);
            return w;
        });
        Cursor cur{words};
        auto read_sh4 = [&](std::vector<AddSh4>& dst) {
            auto f = cur.take(3 * cnt);
            dst.resize(cnt);
            for (size_t i = 0; i < cnt; ++i)
                for (int cc = 0; cc < 3; ++cc) dst[i].c[cc] = f[3 * i + static_cast<size_t>(cc)];
        };
        std::vector<AddSh4> gab, gcd;
        read_sh4(gab);
        read_sh4(gcd);
        UGammaCols up[4];
        for (auto& u : up) u = ugamma_read(ctx, cur, cnt);
        UGammaCols tri[4];
        for (auto& t : tri) t = ugamma_read(ctx, cur, cnt);
        UGammaCols top = ugamma_read(ctx, cur, cnt);
        auto lq0 = cur.take(cnt);
        auto lq1 = cur.take(cnt);
        auto lp = cur.take(cnt);
        std::vector<u64> rv;
        if (ctx.id == kP0 || ctx.id == kP3) rv = cur.take(cnt);

        ShareVec out(cnt, make_view(Framework::TETRAD, ctx.id));
        for (size_t i = 0; i < cnt; ++i) {
            if (out[i].has_lam(0)) out[i].lam[0] = lq0[i];
            if (out[i].has_lam(1)) out[i].lam[1] = lq1[i];
            if (out[i].has_lam(2)) out[i].lam[2] = lp[i];
        }
        if (!ctx.online()) return out;

        auto m_of = [&](size_t i, u32 excl) {
            u64 prod = 1;
            for (int t = 0; t < 4; ++t)
                if (!(excl & (1u << t))) prod = r.mul(prod, in[t][i].m);
            return prod;
        };
        // triples tri[0..3] exclude index 3,2,1,0 respectively (abc excludes d)
        const int tri_excl[4] = {3, 2, 1, 0};
        std::vector<u64> mp(cnt, 0);
        if (ctx.id == kP1 || ctx.id == kP2) {
            int lx = ctx.id == kP1 ? 0 : 1;
            int gcomp = lx;
            std::vector<u64> y_own(cnt);
            for (size_t i = 0; i < cnt; ++i) {
                u64 acc = 0;
                for (int t = 0; t < 4; ++t)
                    acc = r.sub(acc, r.mul(in[t][i].lam[lx], m_of(i, 1u << t)));
                acc = r.add(acc, r.mul(gab[i].c[gcomp], m_of(i, 0b0011)));
                acc = r.add(acc, r.mul(gcd[i].c[gcomp], m_of(i, 0b1100)));
                for (int t = 0; t < 4; ++t) {
                    u32 mask = (1u << upairs[t].first) | (1u << upairs[t].second);
                    acc = r.add(acc, r.mul(r.add(up[t].g[i], up[t].u[i]), m_of(i, mask)));
                }
                for (int t = 0; t < 4; ++t)
                    acc = r.sub(acc, r.mul(r.add(tri[t].g[i], tri[t].u[i]),
                                           m_of(i, 0b1111u ^ (1u << tri_excl[t]))));
                acc = r.add(acc, r.add(top.g[i], top.u[i]));
                y_own[i] = acc;
            }
            int peer = ctx.id == kP1 ? kP2 : kP1;
            send_ring_vec(ctx, peer, y_own);
            auto y_peer = recv_ring_vec(ctx, peer, cnt);
            for (size_t i = 0; i < cnt; ++i) {
                u64 y3 = 0;
                for (int t = 0; t < 4; ++t)
                    y3 = r.sub(y3, r.mul(in[t][i].lam[2], m_of(i, 1u << t)));
                y3 = r.add(y3, r.mul(gab[i].c[2], m_of(i, 0b0011)));
                y3 = r.add(y3, r.mul(gcd[i].c[2], m_of(i, 0b1100)));
                u64 zr = r.add(r.add(y_own[i], y_peer[i]), r.add(y3, m_of(i, 0)));
                u64 p = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
                mp[i] = r.add(p, lp[i]);
                u64 vv = r.add(y_own[i], y_peer[i]);
                for (int t = 0; t < 4; ++t) {
                    u32 mask = (1u << upairs[t].first) | (1u << upairs[t].second);
                    vv = r.add(vv, r.mul(up[t].s[i], m_of(i, mask)));
                }
                for (int t = 0; t < 4; ++t)
                    vv = r.sub(vv, r.mul(tri[t].s[i], m_of(i, 0b1111u ^ (1u << tri_excl[t]))));
                vv = r.add(vv, top.s[i]);
                ctx.tetrad_multver_absorb(vv);
            }
        }
        if (ctx.id == kP3) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 v = 0;
                for (int t = 0; t < 4; ++t)
                    v = r.sub(v, r.mul(r.add(in[t][i].lam[0], in[t][i].lam[1]), m_of(i, 1u << t)));
                v = r.add(v, r.mul(r.add(gab[i].c[0], gab[i].c[1]), m_of(i, 0b0011)));
                v = r.add(v, r.mul(r.add(gcd[i].c[0], gcd[i].c[1]), m_of(i, 0b1100)));
                for (int t = 0; t < 4; ++t) {
                    u32 mask = (1u << upairs[t].first) | (1u << upairs[t].second);
                    v = r.add(v, r.mul(r.add(up[t].w[i], up[t].g[i]), m_of(i, mask)));
                }
                for (int t = 0; t < 4; ++t)
                    v = r.sub(v, r.mul(r.add(tri[t].w[i], tri[t].g[i]),
                                       m_of(i, 0b1111u ^ (1u << tri_excl[t]))));
                v = r.add(v, r.sub(r.add(top.w[i], top.g[i]), rv[i]));
                ctx.tetrad_multver_absorb(v);
            }
        }
        auto got = jsnd_ring_vec(ctx, kP1, kP2, kP3, mp, cnt, /*defer=*/true);
        if (ctx.id == kP3) mp = got;
        if (ctx.id != kP0)
            for (size_t i = 0; i < cnt; ++i) out[i].m = mp[i];
        return out;
    }

    ShareVec mul_nopre(PartyCtx& ctx, SpanS a, SpanS b, bool trunc) override;

    ShareVec dotp(PartyCtx& ctx, const std::vector<ShareVec>& as, const std::vector<ShareVec>& bs,
                  bool trunc) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t k = as.size();
        for (size_t i = 0; i < k; ++i)
            if (as[i].size() != bs[i].size() || as[i].empty())
                throw std::invalid_argument("dotp: length mismatch");
        // like mul, with gamma components summed across the vector
        auto gamma_of = [&](size_t i, int which) {
            u64 acc = 0;
            for (size_t t = 0; t < as[i].size(); ++t)
                acc = r.add(acc, prod_comp(r, lam_sh4(as[i][t]), lam_sh4(bs[i][t]), which));
            return acc;
        };
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            std::vector<u64> u1, u2, s;
            if (member(kU1Mask, ctx.id)) u1 = ctx.stream(kU1Mask, "u1").draw(r, k);
            if (member(kU2Mask, ctx.id)) u2 = ctx.stream(kU2Mask, "u2").draw(r, k);
            if (member(kSMask, ctx.id)) s = ctx.stream(kSMask, "s").draw(r, k);
            std::vector<u64> g(k, 0), rv(k, 0), q(k, 0);
            if (ctx.id == kP0) {
                std::vector<u64> g1(k), g2(k), g3(k), wv(k);
                for (size_t i = 0; i < k; ++i) {
                    g1[i] = gamma_of(i, 1);
                    g2[i] = gamma_of(i, 2);
                    g3[i] = gamma_of(i, 3);
                    wv[i] = r.add(r.add(g1[i], g2[i]), s[i]);
                    rv[i] = r.sub(g3[i], r.add(u1[i], u2[i]));
                    q[i] = trunc ? r.trunc(rv[i], ctx.fx.frac_bits) : rv[i];
                }
                send_ring_vec(ctx, kP3, wv);
                auto [lq0, lq1] = jsh_pre_p0p3(ctx, "q", q, k);
                push_vec(w, g1);
                push_vec(w, u1);
                push_vec(w, u2);
                push_vec(w, s);
                push_vec(w, lq0);
                push_vec(w, lq1);
            } else if (ctx.id == kP1 || ctx.id == kP2) {
                for (size_t i = 0; i < k; ++i) g[i] = gamma_of(i, ctx.id);
                auto [lq0, lq1] = jsh_pre_p0p3(ctx, "q", q, k);
                push_vec(w, g);
                push_vec(w, ctx.id == kP1 ? u1 : u2);
                push_vec(w, s);
                push_vec(w, ctx.id == kP1 ? lq0 : lq1);
            } else {
                std::vector<u64> g3(k);
                for (size_t i = 0; i < k; ++i) {
                    g3[i] = gamma_of(i, 3);
                    rv[i] = r.sub(g3[i], r.add(u1[i], u2[i]));
                    q[i] = trunc ? r.trunc(rv[i], ctx.fx.frac_bits) : rv[i];
                }
                auto wv = recv_ring_vec(ctx, kP0, k);
                auto [lq0, lq1] = jsh_pre_p0p3(ctx, "q", q, k);
                push_vec(w, g3);
                push_vec(w, u1);
                push_vec(w, u2);
                push_vec(w, wv);
                push_vec(w, lq0);
                push_vec(w, lq1);
            }
            std::vector<u64> lp(k, 0);
            if (member(kSMask, ctx.id)) lp = ctx.stream(kSMask, "lp").draw(r, k);
            push_vec(w, lp);
            return w;
        });
        Cursor cur{words};
        std::vector<u64> g, u1, u2, s, wv, lq0(k, 0), lq1(k, 0);
        if (ctx.id == kP0) {
            g = cur.take(k);
            u1 = cur.take(k);
            u2 = cur.take(k);
            s = cur.take(k);
            lq0 = cur.take(k);
            lq1 = cur.take(k);
        } else if (ctx.id == kP1 || ctx.id == kP2) {
            g = cur.take(k);
            u1 = cur.take(k);
            s = cur.take(k);
            if (ctx.id == kP1)
                lq0 = cur.take(k);
            else
                lq1 = cur.take(k);
        } else {
            g = cur.take(k);
            u1 = cur.take(k);
            u2 = cur.take(k);
            wv = cur.take(k);
            lq0 = cur.take(k);
            lq1 = cur.take(k);
        }
        auto lp = cur.take(k);

        ShareVec out(k, make_view(Framework::TETRAD, ctx.id));
        for (size_t i = 0; i < k; ++i) {
            if (out[i].has_lam(0)) out[i].lam[0] = lq0[i];
            if (out[i].has_lam(1)) out[i].lam[1] = lq1[i];
            if (out[i].has_lam(2)) out[i].lam[2] = lp[i];
        }
        if (!ctx.online()) return out;

        std::vector<u64> mp(k, 0);
        if (ctx.id == kP1 || ctx.id == kP2) {
            int lx = ctx.id == kP1 ? 0 : 1;
            std::vector<u64> y_own(k);
            for (size_t i = 0; i < k; ++i) {
                u64 acc = r.add(g[i], u1[i]);
                for (size_t t = 0; t < as[i].size(); ++t)
                    acc = r.sub(acc, r.add(r.mul(as[i][t].lam[lx], bs[i][t].m),
                                           r.mul(bs[i][t].lam[lx], as[i][t].m)));
                y_own[i] = acc;
            }
            int peer = ctx.id == kP1 ? kP2 : kP1;
            send_ring_vec(ctx, peer, y_own);
            auto y_peer = recv_ring_vec(ctx, peer, k);
            for (size_t i = 0; i < k; ++i) {
                u64 y3 = 0, mm = 0;
                for (size_t t = 0; t < as[i].size(); ++t) {
                    y3 = r.sub(y3, r.add(r.mul(as[i][t].lam[2], bs[i][t].m),
                                         r.mul(bs[i][t].lam[2], as[i][t].m)));
                    mm = r.add(mm, r.mul(as[i][t].m, bs[i][t].m));
                }
                u64 zr = r.add(r.add(y_own[i], y_peer[i]), r.add(y3, mm));
                u64 p = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
                mp[i] = r.add(p, lp[i]);
                ctx.tetrad_multver_absorb(r.add(r.add(y_own[i], y_peer[i]), s[i]));
            }
        }
        if (ctx.id == kP3) {
            for (size_t i = 0; i < k; ++i) {
                u64 v = 0;
                for (size_t t = 0; t < as[i].size(); ++t) {
                    v = r.sub(v, r.mul(r.add(as[i][t].lam[0], as[i][t].lam[1]), bs[i][t].m));
                    v = r.sub(v, r.mul(r.add(bs[i][t].lam[0], bs[i][t].lam[1]), as[i][t].m));
                }
                v = r.add(v, r.add(r.add(u1[i], u2[i]), wv[i]));
                ctx.tetrad_multver_absorb(v);
            }
        }
        auto got = jsnd_ring_vec(ctx, kP1, kP2, kP3, mp, k, /*defer=*/true);
        if (ctx.id == kP3) mp = got;
        if (ctx.id != kP0)
            for (size_t i = 0; i < k; ++i) out[i].m = mp[i];
        return out;
    }

    ShareVec scale_trunc(PartyCtx& ctx, u64 alpha, SpanS v) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = v.size();
        // beta1 = alpha(m - lambda^3) truncated by P1,P2; beta2 =
        // alpha(-lambda^1 - lambda^2) truncated by P0,P3; both joint-shared.
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            std::vector<u64> q(cnt, 0);
            if (ctx.id == kP0 || ctx.id == kP3)
                for (size_t i = 0; i < cnt; ++i) {
                    u64 beta2 = r.mul(alpha, r.neg(r.add(v[i].lam[0], v[i].lam[1])));
                    q[i] = r.trunc(beta2, ctx.fx.frac_bits);
                }
            auto [lq0, lq1] = jsh_pre_p0p3(ctx, "q", q, cnt);
            push_vec(w, lq0);
            push_vec(w, lq1);
            std::vector<u64> lp(cnt, 0);
            if (member(kSMask, ctx.id)) lp = ctx.stream(kSMask, "lp").draw(r, cnt);
            push_vec(w, lp);
            return w;
        });
        Cursor cur{words};
        auto lq0 = cur.take(cnt);
        auto lq1 = cur.take(cnt);
        auto lp = cur.take(cnt);
        ShareVec out(cnt, make_view(Framework::TETRAD, ctx.id));
        for (size_t i = 0; i < cnt; ++i) {
            if (out[i].has_lam(0)) out[i].lam[0] = lq0[i];
            if (out[i].has_lam(1)) out[i].lam[1] = lq1[i];
            if (out[i].has_lam(2)) out[i].lam[2] = lp[i];
        }
        if (!ctx.online()) return out;
        std::vector<u64> mp(cnt, 0);
        if (ctx.id == kP1 || ctx.id == kP2) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 beta1 = r.mul(alpha, r.sub(v[i].m, v[i].lam[2]));
                mp[i] = r.add(r.trunc(beta1, ctx.fx.frac_bits), lp[i]);
            }
        }
        auto got = jsnd_ring_vec(ctx, kP1, kP2, kP3, mp, cnt, /*defer=*/true);
        if (ctx.id == kP3) mp = got;
        if (ctx.id != kP0)
            for (size_t i = 0; i < cnt; ++i) out[i].m = mp[i];
        return out;
    }

    ShareVec reshare_slots(PartyCtx& ctx, size_t cnt,
                           const std::vector<std::vector<u64>>& slot_vals) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            for (int s = 0; s < 3; ++s) {
                if (!member(kLamMask[s], ctx.id)) continue;
                push_vec(w, ctx.stream(kLamMask[s], "rsl" + std::to_string(s)).draw(r, cnt));
            }
            return w;
        });
        Cursor cur{words};
        std::vector<std::vector<u64>> lam(3);
        ShareVec out(cnt, make_view(Framework::TETRAD, ctx.id));
        for (int s = 0; s < 3; ++s) {
            if (!member(kLamMask[s], ctx.id)) continue;
            lam[s] = cur.take(cnt);
            for (size_t i = 0; i < cnt; ++i)
                if (out[i].has_lam(s)) out[i].lam[s] = lam[s][i];
        }
        if (!ctx.online()) return out;
        std::vector<std::vector<u64>> mvals(3, std::vector<u64>(cnt, 0));
        bool in_slot[3];
        for (int s = 0; s < 3; ++s)
            in_slot[s] = ctx.id == kSlotPair[s][0] || ctx.id == kSlotPair[s][1];
        for (int s = 0; s < 3; ++s) {
            if (in_slot[s])
                for (size_t i = 0; i < cnt; ++i) mvals[s][i] = r.add(slot_vals[s][i], lam[s][i]);
            int third = slot_third(s);
            auto got = jsnd_ring_vec(ctx, kSlotPair[s][0], kSlotPair[s][1], third, mvals[s], cnt,
                                     /*defer=*/third == kP3);
            if (ctx.id == third) mvals[s] = got;
        }
        if (ctx.id != kP0)
            for (size_t i = 0; i < cnt; ++i)
                out[i].m = r.add(r.add(mvals[0][i], mvals[1][i]), mvals[2][i]);
        return out;
    }

    PackedShare bool_input(PartyCtx& ctx, int dealer, size_t nbits,
                           const PackedBits* bits) override {
        ctx.set_gate(ctx.next_gate());
        std::vector<int> known;
        for (int c = 0; c < 3; ++c)
            if (holds_lam(ctx.id, c) || ctx.id == dealer) known.push_back(c);
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            for (int c = 0; c < 3; ++c) {
                SubsetMask m = kLamMask[c] | (1u << dealer);
                if (!member(m, ctx.id)) continue;
                push_packed(w, sample_bits(ctx.stream(m, "blam" + std::to_string(c)), nbits));
            }
            return w;
        });
        PackedShare out(Framework::TETRAD, ctx.id, nbits);
        PackedBits full(nbits);
        size_t off = 0;
        for (int c : known) {
            PackedBits b = pop_packed(words, off, nbits);
            if (out.has_lam(c)) out.lam[c] = b;
            full = full ^ b;
        }
        if (!ctx.online()) return out;
        PackedBits m(nbits);
        if (ctx.id == dealer) {
            m = *bits ^ full;
            for (int p = kP1; p <= kP3; ++p)
                if (p != dealer) send_bits(ctx, p, m);
        } else if (ctx.id != kP0) {
            m = recv_bits(ctx, dealer, nbits);
        }
        if (ctx.id != kP0) {
            ctx.tetrad_share_absorb(pack_bits(m));
            out.m = m;
        }
        return out;
    }

    std::optional<PackedBits> bool_reconstruct(PartyCtx& ctx, const PackedShare& s) override {
        size_t n = s.n;
        PackedBits lam[3] = {s.lam[0], s.lam[1], s.lam[2]};
        PackedBits m = s.m;
        auto deliver = [&](PackedBits& vec, int i, int j, int k) {
            auto got = jsnd_bits(ctx, i, j, k, vec, n);
            if (ctx.id == k) vec = got;
        };
        deliver(lam[0], kP1, kP0, kP2);
        deliver(lam[2], kP2, kP0, kP3);
        deliver(lam[1], kP3, kP0, kP1);
        deliver(m, kP1, kP2, kP0);
        return m ^ lam[0] ^ lam[1] ^ lam[2];
    }

    std::vector<std::vector<PackedShare>> bool_summands(PartyCtx& ctx, SpanS v) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = v.size(), ell = r.ell;
        std::vector<std::vector<PackedShare>> out(2);
        // summand 1: -(lambda^1 + lambda^2), joint bool sharing by (P0,P3)
        std::vector<u64> v2(cnt, 0);
        if (ctx.id == kP0 || ctx.id == kP3)
            for (size_t i = 0; i < cnt; ++i) v2[i] = r.neg(r.add(v[i].lam[0], v[i].lam[1]));
        out[1] = jsh_bool_pre_p0p3(ctx, "bsum2", v2, cnt, ell);
        // summand 0: m - lambda^3, joint bool sharing by (P1,P2) online
        out[0] = joint_bool_share_12(ctx, "bsum1", cnt, ell,
                                     [&](size_t i) { return r.sub(v[i].m, v[i].lam[2]); });
        return out;
    }

    std::pair<std::vector<PackedShare>, std::vector<PackedShare>> bool_eq_split(
        PartyCtx& ctx, SpanS y) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = y.size(), ell = r.ell;
        std::vector<u64> y2(cnt, 0);
        if (ctx.id == kP0 || ctx.id == kP3)
            for (size_t i = 0; i < cnt; ++i) y2[i] = r.add(y[i].lam[0], y[i].lam[1]);
        auto sh2 = jsh_bool_pre_p0p3(ctx, "eq2", y2, cnt, ell);
        auto sh1 = joint_bool_share_12(ctx, "eq1", cnt, ell,
                                       [&](size_t i) { return r.sub(y[i].m, y[i].lam[2]); });
        return {std::move(sh1), std::move(sh2)};
    }

    // (P0,P3) joint boolean sharing in the preprocessing: lambda^2 sampled by
    // everyone but P1, lambda^1 = bits xor lambda^2 jsnd'd to P1, m = 0.
    std::vector<PackedShare> jsh_bool_pre_p0p3(PartyCtx& ctx, const std::string& tag,
                                               const std::vector<u64>& vals, size_t cnt,
                                               size_t nbits) {
        Phase prev = ctx.phase();
        ctx.set_phase(Phase::Pre);
        std::vector<PackedBits> l1(nbits, PackedBits(cnt)), l0(nbits, PackedBits(cnt));
        if (member(0b1101, ctx.id)) {
            PrfStream s = ctx.stream(0b1101, tag + "_l1");
            for (size_t j = 0; j < nbits; ++j) {
                s.fill_words(l1[j].w.data(), l1[j].w.size());
                l1[j].mask_tail();
            }
        }
        size_t per = (cnt + 7) / 8;
        std::vector<u8> flat(nbits * per);
        if (ctx.id == kP0 || ctx.id == kP3) {
            flat.clear();
            for (size_t j = 0; j < nbits; ++j) {
                PackedBits vb(cnt);
                for (size_t i = 0; i < cnt; ++i) vb.set(i, (vals[i] >> j) & 1);
                l0[j] = vb ^ l1[j];
                auto bytes = pack_bits(l0[j]);
                flat.insert(flat.end(), bytes.begin(), bytes.end());
            }
        }
        auto got = ctx.jsnd(kP3, kP0, kP1, flat, nbits * cnt);
        if (ctx.id == kP1)
            for (size_t j = 0; j < nbits; ++j)
                l0[j] = unpack_bits(
                    std::vector<u8>(got->begin() + static_cast<long>(j * per),
                                    got->begin() + static_cast<long>((j + 1) * per)),
                    cnt);
        ctx.set_phase(prev);
        std::vector<PackedShare> out(nbits, PackedShare(Framework::TETRAD, ctx.id, cnt));
        for (size_t j = 0; j < nbits; ++j) {
            if (out[j].has_lam(0)) out[j].lam[0] = l0[j];
            if (out[j].has_lam(1)) out[j].lam[1] = l1[j];
        }
        return out;
    }

    // (P1,P2) joint boolean sharing online (deferred jsnd toward P3).
    std::vector<PackedShare> joint_bool_share_12(PartyCtx& ctx, const std::string& tag, size_t cnt,
                                                 size_t nbits,
                                                 const std::function<u64(size_t)>& val_at) {
        Phase prev = ctx.phase();
        ctx.set_phase(Phase::Pre);
        std::vector<PackedBits> lam(nbits, PackedBits(cnt));
        if (member(kSMask, ctx.id)) {
            PrfStream s = ctx.stream(kSMask, tag + "_l");
            for (size_t j = 0; j < nbits; ++j) {
                s.fill_words(lam[j].w.data(), lam[j].w.size());
                lam[j].mask_tail();
            }
        }
        ctx.set_phase(prev);
        std::vector<PackedShare> out(nbits, PackedShare(Framework::TETRAD, ctx.id, cnt));
        for (size_t j = 0; j < nbits; ++j)
            if (out[j].has_lam(2)) out[j].lam[2] = lam[j];
        if (!ctx.online()) return out;
        std::vector<PackedBits> m(nbits, PackedBits(cnt));
        size_t per = (cnt + 7) / 8;
        std::vector<u8> flat(nbits * per);
        if (ctx.id == kP1 || ctx.id == kP2) {
            flat.clear();
            for (size_t i = 0; i < cnt; ++i) {
                u64 v = val_at(i);
                for (size_t j = 0; j < nbits; ++j)
                    if ((v >> j) & 1) m[j].set(i, true);
            }
            for (size_t j = 0; j < nbits; ++j) {
                m[j] = m[j] ^ lam[j];
                auto bytes = pack_bits(m[j]);
                flat.insert(flat.end(), bytes.begin(), bytes.end());
            }
        }
        auto got = ctx.jsnd(kP1, kP2, kP3, flat, nbits * cnt, /*defer=*/true);
        if (ctx.id == kP3)
            for (size_t j = 0; j < nbits; ++j)
                m[j] = unpack_bits(
                    std::vector<u8>(got->begin() + static_cast<long>(j * per),
                                    got->begin() + static_cast<long>((j + 1) * per)),
                    cnt);
        if (ctx.id != kP0)
            for (size_t j = 0; j < nbits; ++j) out[j].m = m[j];
        return out;
    }

    PackedShare and2(PartyCtx& ctx, const PackedShare& a, const PackedShare& b) override {
        return andn(ctx, {&a, &b});
    }
    PackedShare and3(PartyCtx& ctx, const PackedShare& a, const PackedShare& b,
                     const PackedShare& c) override {
        return andn(ctx, {&a, &b, &c});
    }
    PackedShare and4(PartyCtx& ctx, const PackedShare& a, const PackedShare& b,
                     const PackedShare& c, const PackedShare& d) override {
        return andn(ctx, {&a, &b, &c, &d});
    }

   private:
    std::optional<std::vector<u64>> reconstruct_fair(PartyCtx& ctx, SpanS shares);
    PackedShare andn(PartyCtx& ctx, std::vector<const PackedShare*> ins);
};

ShareVec TetradEngine::mul_nopre(PartyCtx& ctx, SpanS a, SpanS b, bool trunc) {
    ctx.set_gate(ctx.next_gate());
    const Ring& r = ctx.ring;
    size_t cnt = a.size();
    // Everything runs in the online phase; the joint sharing by (P0,P3) rides
    // in the same round as the y exchange, verification material moves in the
    // verify phase (Fig 5.11 structure).
    std::vector<u64> u1, u2, lq1v(cnt, 0), lp(cnt, 0), sv;
    if (member(kU1Mask, ctx.id)) u1 = ctx.stream(kU1Mask, "u1").draw(r, cnt);
    if (member(kU2Mask, ctx.id)) u2 = ctx.stream(kU2Mask, "u2").draw(r, cnt);
    if (member(kU2Mask, ctx.id)) lq1v = ctx.stream(kU2Mask, "lq1").draw(r, cnt);
    if (member(kSMask, ctx.id)) lp = ctx.stream(kSMask, "lp").draw(r, cnt);
    if (member(kSMask, ctx.id)) sv = ctx.stream(kSMask, "s").draw(r, cnt);
    std::vector<u64> g(cnt, 0), g1(cnt, 0), g2(cnt, 0), lq0(cnt, 0), mp(cnt, 0);
    int which = ctx.id == kP0 ? 0 : ctx.id;
    if (ctx.id != kP0)
        for (size_t i = 0; i < cnt; ++i) g[i] = prod_comp(r, lam_sh4(a[i]), lam_sh4(b[i]), which);
    if (ctx.id == kP0 || ctx.id == kP3) {
        for (size_t i = 0; i < cnt; ++i) {
            u64 g3 = ctx.id == kP3 ? g[i] : prod_comp(r, lam_sh4(a[i]), lam_sh4(b[i]), 3);
            u64 rv = r.sub(g3, r.add(u1[i], u2[i]));
            u64 q = trunc ? r.trunc(rv, ctx.fx.frac_bits) : rv;
            lq0[i] = r.neg(r.add(q, lq1v[i]));
        }
        jsnd_ring_vec(ctx, kP3, kP0, kP1, lq0, cnt);
    } else if (ctx.id == kP1) {
        lq0 = jsnd_ring_vec(ctx, kP3, kP0, kP1, std::vector<u64>(cnt, 0), cnt);
    }
    std::vector<u64> y_own(cnt, 0), y_peer(cnt, 0);
    if (ctx.id == kP1 || ctx.id == kP2) {
        int lx = ctx.id == kP1 ? 0 : 1;
        const auto& u = ctx.id == kP1 ? u1 : u2;
        for (size_t i = 0; i < cnt; ++i)
            y_own[i] = r.sub(r.add(g[i], u[i]), r.add(r.mul(a[i].lam[lx], b[i].m),
                                                      r.mul(b[i].lam[lx], a[i].m)));
        int peer = ctx.id == kP1 ? kP2 : kP1;
        send_ring_vec(ctx, peer, y_own);
        y_peer = recv_ring_vec(ctx, peer, cnt);
        for (size_t i = 0; i < cnt; ++i) {
            u64 y3 = r.neg(r.add(r.mul(a[i].lam[2], b[i].m), r.mul(b[i].lam[2], a[i].m)));
            u64 zr = r.add(r.add(y_own[i], y_peer[i]), r.add(y3, r.mul(a[i].m, b[i].m)));
            u64 p = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
            mp[i] = r.add(p, lp[i]);
        }
    }
    auto got = jsnd_ring_vec(ctx, kP1, kP2, kP3, mp, cnt, /*defer=*/true);
    if (ctx.id == kP3) mp = got;

    // deferred verification: P0 masks gamma^1 + gamma^2 with s and sends to P3
    Phase prev = ctx.phase();
    ctx.set_phase(Phase::Verify);
    std::vector<u64> wv(cnt, 0);
    if (ctx.id == kP0) {
        for (size_t i = 0; i < cnt; ++i) {
            g1[i] = prod_comp(r, lam_sh4(a[i]), lam_sh4(b[i]), 1);
            g2[i] = prod_comp(r, lam_sh4(a[i]), lam_sh4(b[i]), 2);
            wv[i] = r.add(r.add(g1[i], g2[i]), sv[i]);
        }
        send_ring_vec(ctx, kP3, wv);
    } else if (ctx.id == kP3) {
        wv = recv_ring_vec(ctx, kP0, cnt);
    }
    ctx.set_phase(prev);
    if (ctx.id == kP1 || ctx.id == kP2) {
        for (size_t i = 0; i < cnt; ++i)
            ctx.tetrad_multver_absorb(r.add(r.add(y_own[i], y_peer[i]), sv[i]));
    }
    if (ctx.id == kP3) {
        for (size_t i = 0; i < cnt; ++i) {
            u64 v = r.neg(r.add(r.mul(r.add(a[i].lam[0], a[i].lam[1]), b[i].m),
                                r.mul(r.add(b[i].lam[0], b[i].lam[1]), a[i].m)));
            v = r.add(v, r.add(r.add(u1[i], u2[i]), wv[i]));
            ctx.tetrad_multver_absorb(v);
        }
    }
    ShareVec out(cnt, make_view(Framework::TETRAD, ctx.id));
    for (size_t i = 0; i < cnt; ++i) {
        if (out[i].has_lam(0)) out[i].lam[0] = lq0[i];
        if (out[i].has_lam(1)) out[i].lam[1] = lq1v[i];
        if (out[i].has_lam(2)) out[i].lam[2] = lp[i];
        if (ctx.id != kP0) out[i].m = mp[i];
    }
    return out;
}

std::optional<std::vector<u64>> TetradEngine::reconstruct_fair(PartyCtx& ctx, SpanS shares) {
    const Ring& r = ctx.ring;
    size_t cnt = shares.size();
    ctx.run_verify();
    // Aliveness bits exchanged in one online round; the majority decides.
    u8 my_bit = ctx.abort_flag ? 1 : 0;
    int abort_votes = my_bit;
    for (int p = 0; p < 4; ++p)
        if (p != ctx.id) ctx.send(p, std::vector<u8>{my_bit}, 1);
    for (int p = 0; p < 4; ++p) {
        if (p == ctx.id) continue;
        auto got = ctx.recv_opt(p);
        if (!got || got->empty() || (*got)[0] != 0) abort_votes++;
    }
    if (abort_votes >= 2) return std::nullopt;

    // Every missing share is held by three parties; each sends its copy and
    // the receiver takes the majority.
    struct Missing {
        int receiver;
        bool is_m;  // else lambda component `comp`
        int comp;
    };
    const Missing plan[4] = {{kP0, true, 0}, {kP1, false, 1}, {kP2, false, 0}, {kP3, false, 2}};
    std::vector<u64> lam[3], m(cnt);
    for (int c = 0; c < 3; ++c) {
        lam[c].assign(cnt, 0);
        for (size_t i = 0; i < cnt; ++i) lam[c][i] = shares[i].lam[c];
    }
    for (size_t i = 0; i < cnt; ++i) m[i] = shares[i].m;
    for (const auto& p : plan) {
        std::vector<u64>& target = p.is_m ? m : lam[p.comp];
        if (ctx.id != p.receiver) {
            send_ring_vec(ctx, p.receiver, target);
        } else {
            std::vector<std::optional<std::vector<u64>>> copies;
            for (int q = 0; q < 4; ++q) {
                if (q == ctx.id) continue;
                auto got = ctx.recv_opt(q);
                if (got && got->size() == cnt * wire_bytes(r))
                    copies.push_back(unpack_ring_vec(r, *got, cnt));
                else
                    copies.push_back(std::nullopt);
            }
            for (size_t i = 0; i < cnt; ++i) {
                std::map<u64, int> votes;
                for (auto& cp : copies)
                    if (cp) votes[(*cp)[i]]++;
                bool found = false;
                for (auto& [val, n] : votes)
                    if (n >= 2) {
                        target[i] = val;
                        found = true;
                    }
                if (!found) return std::nullopt;
            }
        }
    }
    std::vector<u64> v(cnt);
    for (size_t i = 0; i < cnt; ++i)
        v[i] = r.sub(m[i], r.add(r.add(lam[0][i], lam[1][i]), lam[2][i]));
    return v;
}

PackedShare TetradEngine::andn(PartyCtx& ctx, std::vector<const PackedShare*> ins) {
    ctx.set_gate(ctx.next_gate());
    int nin = static_cast<int>(ins.size());
    size_t n = ins[0]->n;
    // Boolean mirror of the arithmetic protocol over Z_2: signs vanish and
    // u1 xor u2 = gamma xor r.
    struct BSh4 {
        PackedBits c0, c1, c2;
    };
    auto as_bsh4 = [&](const PackedShare* s) { return BSh4{s->lam[0], s->lam[1], s->lam[2]}; };
    auto prod_comp_b = [&](const BSh4& x, const BSh4& y, int which) {
        switch (which) {
            case 1: return (x.c0 & y.c2) ^ (x.c2 & y.c0) ^ (x.c2 & y.c2);
            case 2: return (x.c1 & y.c2) ^ (x.c2 & y.c1) ^ (x.c1 & y.c1);
            default: return (x.c0 & y.c1) ^ (x.c1 & y.c0) ^ (x.c0 & y.c0);
        }
    };
    // Fig 5.4 over bits: three jsnd of n bits each.
    auto mult_s_bits = [&](const std::string& tag, const BSh4& x, const BSh4& y) {
        auto zr = [&](int excl) {
            SubsetMask mask = 1;
            for (int p = kP1; p <= kP3; ++p)
                if (p != excl) mask |= (1u << p);
            return sample_bits(ctx.stream(mask, tag + "/bzr" + std::to_string(excl)), n);
        };
        PackedBits zb1(n), zb2(n), zb3(n);
        if (ctx.id == kP0 || ctx.id == kP1) zb1 = zr(3) ^ zr(2);
        if (ctx.id == kP0 || ctx.id == kP2) zb2 = zr(1) ^ zr(3);
        if (ctx.id == kP0 || ctx.id == kP3) zb3 = zr(2) ^ zr(1);
        PackedBits ab1(n), ab2(n), ab3(n);
        if (ctx.id == kP0 || ctx.id == kP1) ab1 = prod_comp_b(x, y, 1) ^ zb1;
        if (ctx.id == kP0 || ctx.id == kP2) ab2 = prod_comp_b(x, y, 2) ^ zb2;
        if (ctx.id == kP0 || ctx.id == kP3) ab3 = prod_comp_b(x, y, 3) ^ zb3;
        {
            auto got = jsnd_bits(ctx, kP1, kP0, kP2, ab1, n);
            if (ctx.id == kP2) ab1 = got;
        }
        {
            auto got = jsnd_bits(ctx, kP2, kP0, kP3, ab2, n);
            if (ctx.id == kP3) ab2 = got;
        }
        {
            auto got = jsnd_bits(ctx, kP3, kP0, kP1, ab3, n);
            if (ctx.id == kP1) ab3 = got;
        }
        return BSh4{ab3, ab2, ab1};
    };
    // u-trick gamma over bits: P1 gets g1^u1, P2 gets g2^u2, P3 gets
    // w = g1^g2^s and (with fold) r = g3^u1^u2.
    struct BUG {
        PackedBits g, u, s, w, u2, r;
    };
    auto ugamma_bits = [&](const std::string& tag, const BSh4& A, const BSh4& B, bool fold) {
        BUG o;
        o.g = PackedBits(n);
        o.u = PackedBits(n);
        o.s = PackedBits(n);
        o.w = PackedBits(n);
        o.u2 = PackedBits(n);
        o.r = PackedBits(n);
        PackedBits u1(n), u2(n), s(n);
        if (member(kU1Mask, ctx.id)) u1 = sample_bits(ctx.stream(kU1Mask, tag + "_u1"), n);
        if (fold && member(kU2Mask, ctx.id)) u2 = sample_bits(ctx.stream(kU2Mask, tag + "_u2"), n);
        if (member(kSMask, ctx.id)) s = sample_bits(ctx.stream(kSMask, tag + "_s"), n);
        if (ctx.id == kP0) {
            PackedBits g1 = prod_comp_b(A, B, 1), g2 = prod_comp_b(A, B, 2),
                       g3 = prod_comp_b(A, B, 3);
            PackedBits wv = g1 ^ g2 ^ s;
            if (!fold) {
                PackedBits u2v = g3 ^ u1;
                jsnd_bits(ctx, kP3, kP0, kP2, u2v, n);
                u2 = u2v;
            } else {
                o.r = g3 ^ u1 ^ u2;
            }
            send_bits(ctx, kP3, wv);
            o.g = g1;
            o.u = u1;
            o.u2 = u2;
            o.s = s;
            o.w = wv;
            return o;
        }
        if (ctx.id == kP1) {
            o.g = prod_comp_b(A, B, 1);
            o.u = u1;
            o.s = s;
            return o;
        }
        if (ctx.id == kP2) {
            o.g = prod_comp_b(A, B, 2);
            o.u = fold ? u2 : jsnd_bits(ctx, kP3, kP0, kP2, PackedBits(n), n);
            o.s = s;
            return o;
        }
        PackedBits g3 = prod_comp_b(A, B, 3);
        if (!fold) {
            PackedBits u2v = g3 ^ u1;
            jsnd_bits(ctx, kP3, kP0, kP2, u2v, n);
            o.u2 = u2v;
        } else {
            o.u2 = u2;
            o.r = g3 ^ u1 ^ u2;
        }
        o.g = g3;
        o.u = u1;
        o.w = recv_bits(ctx, kP0, n);
        return o;
    };

    // Preprocessing (phase-tagged but kept live in locals; boolean gadget
    // gates are always run combined).
    Phase prev = ctx.phase();
    ctx.set_phase(Phase::Pre);
    std::vector<u32> mono_masks;  // proper monomials of size >= 2
    std::vector<BUG> ug;
    std::vector<BSh4> pair_sh;
    BUG topg;
    if (nin == 2) {
        topg = ugamma_bits("btop", as_bsh4(ins[0]), as_bsh4(ins[1]), true);
    } else if (nin == 3) {
        pair_sh.push_back(mult_s_bits("bgab", as_bsh4(ins[0]), as_bsh4(ins[1])));
        mono_masks.push_back(0b011);  // ab, via <.>-sharing
        ug.push_back(ugamma_bits("bgac", as_bsh4(ins[0]), as_bsh4(ins[2]), false));
        mono_masks.push_back(0b101);
        ug.push_back(ugamma_bits("bgbc", as_bsh4(ins[1]), as_bsh4(ins[2]), false));
        mono_masks.push_back(0b110);
        topg = ugamma_bits("btop", pair_sh[0], as_bsh4(ins[2]), true);
    } else {
        pair_sh.push_back(mult_s_bits("bgab", as_bsh4(ins[0]), as_bsh4(ins[1])));
        mono_masks.push_back(0b0011);
        pair_sh.push_back(mult_s_bits("bgcd", as_bsh4(ins[2]), as_bsh4(ins[3])));
        mono_masks.push_back(0b1100);
        const std::pair<int, int> upairs[4] = {{0, 2}, {0, 3}, {1, 2}, {1, 3}};
        for (auto [x, y] : upairs) {
            ug.push_back(ugamma_bits("bg" + std::to_string(x) + std::to_string(y),
                                     as_bsh4(ins[x]), as_bsh4(ins[y]), false));
            mono_masks.push_back((1u << x) | (1u << y));
        }
        ug.push_back(ugamma_bits("bgabc", pair_sh[0], as_bsh4(ins[2]), false));
        mono_masks.push_back(0b0111);
        ug.push_back(ugamma_bits("bgabd", pair_sh[0], as_bsh4(ins[3]), false));
        mono_masks.push_back(0b1011);
        ug.push_back(ugamma_bits("bgacd", pair_sh[1], as_bsh4(ins[0]), false));
        mono_masks.push_back(0b1101);
        ug.push_back(ugamma_bits("bgbcd", pair_sh[1], as_bsh4(ins[1]), false));
        mono_masks.push_back(0b1110);
        topg = ugamma_bits("btop", pair_sh[0], pair_sh[1], true);
    }
    // joint sharing of q = r by (P0,P3)
    PackedBits lq1(n), lq0(n);
    if (member(kU2Mask, ctx.id)) lq1 = sample_bits(ctx.stream(kU2Mask, "blq1"), n);
    if (ctx.id == kP0 || ctx.id == kP3) {
        lq0 = topg.r ^ lq1;
        jsnd_bits(ctx, kP3, kP0, kP1, lq0, n);
    } else if (ctx.id == kP1) {
        lq0 = jsnd_bits(ctx, kP3, kP0, kP1, PackedBits(n), n);
    }
    PackedBits lp(n);
    if (member(kSMask, ctx.id)) lp = sample_bits(ctx.stream(kSMask, "blp"), n);
    ctx.set_phase(prev);

    PackedShare out(Framework::TETRAD, ctx.id, n);
    if (out.has_lam(0)) out.lam[0] = lq0;
    if (out.has_lam(1)) out.lam[1] = lq1;
    if (out.has_lam(2)) out.lam[2] = lp;
    if (!ctx.online()) return out;

    auto m_of = [&](u32 excl) {
        PackedBits prod = ones(n);
        for (int t = 0; t < nin; ++t)
            if (!(excl & (1u << t))) prod = prod & ins[t]->m;
        return prod;
    };
    // monomial coefficient per held component
    auto pair_comp = [&](const BSh4& sh, int e) -> const PackedBits& {
        return e == 0 ? sh.c0 : (e == 1 ? sh.c1 : sh.c2);
    };
    PackedBits mp(n);
    if (ctx.id == kP1 || ctx.id == kP2) {
        int e = ctx.id == kP1 ? 0 : 1;
        PackedBits y_own(n);
        for (int t = 0; t < nin; ++t) y_own = y_own ^ (ins[t]->lam[e] & m_of(1u << t));
        size_t ps = 0, us = 0;
        for (size_t t = 0; t < mono_masks.size(); ++t) {
            bool is_pair_sh = (nin == 3 && t == 0) || (nin == 4 && t < 2);
            if (is_pair_sh)
                y_own = y_own ^ (pair_comp(pair_sh[ps++], e) & m_of(mono_masks[t]));
            else {
                const BUG& g = ug[us++];
                y_own = y_own ^ ((g.g ^ g.u) & m_of(mono_masks[t]));
            }
        }
        y_own = y_own ^ topg.g ^ topg.u;
        int peer = ctx.id == kP1 ? kP2 : kP1;
        send_bits(ctx, peer, y_own);
        PackedBits y_peer = recv_bits(ctx, peer, n);
        PackedBits y3(n);
        for (int t = 0; t < nin; ++t) y3 = y3 ^ (ins[t]->lam[2] & m_of(1u << t));
        ps = 0;
        for (size_t t = 0; t < mono_masks.size(); ++t) {
            bool is_pair_sh = (nin == 3 && t == 0) || (nin == 4 && t < 2);
            if (is_pair_sh) y3 = y3 ^ (pair_sh[ps++].c2 & m_of(mono_masks[t]));
        }
        mp = y_own ^ y_peer ^ y3 ^ m_of(0) ^ lp;
        // verification stream against P3
        PackedBits vv = y_own ^ y_peer ^ topg.s;
        size_t us2 = 0;
        for (size_t t = 0; t < mono_masks.size(); ++t) {
            bool is_pair_sh = (nin == 3 && t == 0) || (nin == 4 && t < 2);
            if (!is_pair_sh) vv = vv ^ (ug[us2++].s & m_of(mono_masks[t]));
        }
        auto bytes = pack_bits(vv);
        for (u8 x : bytes) ctx.tetrad_multver_absorb(x);
    }
    if (ctx.id == kP3) {
        PackedBits v(n);
        for (int t = 0; t < nin; ++t)
            v = v ^ ((ins[t]->lam[0] ^ ins[t]->lam[1]) & m_of(1u << t));
        size_t ps = 0, us = 0;
        for (size_t t = 0; t < mono_masks.size(); ++t) {
            bool is_pair_sh = (nin == 3 && t == 0) || (nin == 4 && t < 2);
            if (is_pair_sh) {
                const BSh4& sh = pair_sh[ps++];
                v = v ^ ((sh.c0 ^ sh.c1) & m_of(mono_masks[t]));
            } else {
                const BUG& g = ug[us++];
                v = v ^ ((g.w ^ g.g) & m_of(mono_masks[t]));
            }
        }
        v = v ^ topg.w ^ topg.g ^ topg.r;
        auto bytes = pack_bits(v);
        for (u8 x : bytes) ctx.tetrad_multver_absorb(x);
    }
    auto got = jsnd_bits(ctx, kP1, kP2, kP3, mp, n, /*defer=*/true);
    if (ctx.id == kP3) mp = got;
    if (ctx.id != kP0) out.m = mp;
    return out;
}

// Special multiplication Fig 5.4 (shared by arith preprocessing paths).
std::vector<AddSh4> mult_s_impl(PartyCtx& ctx, const std::string& tag,
                                const std::vector<AddSh4>& a, const std::vector<AddSh4>& b) {
    const Ring& r = ctx.ring;
    size_t cnt = a.size();
    std::vector<u64> z1(cnt, 0), z2(cnt, 0), z3(cnt, 0);
    for (size_t i = 0; i < cnt; ++i) {
        if (ctx.id == kP0) {
            z1[i] = fzero_component_all(ctx, tag, 1, i);
            z2[i] = fzero_component_all(ctx, tag, 2, i);
            z3[i] = fzero_component_all(ctx, tag, 3, i);
        } else {
            u64 z = fzero_component_all(ctx, tag, ctx.id, i);
            if (ctx.id == kP1) z1[i] = z;
            if (ctx.id == kP2) z2[i] = z;
            if (ctx.id == kP3) z3[i] = z;
        }
    }
    std::vector<u64> ab1(cnt, 0), ab2(cnt, 0), ab3(cnt, 0);
    for (size_t i = 0; i < cnt; ++i) {
        if (ctx.id == kP0 || ctx.id == kP1) ab1[i] = r.add(prod_comp(r, a[i], b[i], 1), z1[i]);
        if (ctx.id == kP0 || ctx.id == kP2) ab2[i] = r.add(prod_comp(r, a[i], b[i], 2), z2[i]);
        if (ctx.id == kP0 || ctx.id == kP3) ab3[i] = r.add(prod_comp(r, a[i], b[i], 3), z3[i]);
    }
    {
        auto got = jsnd_ring_vec(ctx, kP1, kP0, kP2, ab1, cnt);
        if (ctx.id == kP2) ab1 = got;
    }
    {
        auto got = jsnd_ring_vec(ctx, kP2, kP0, kP3, ab2, cnt);
        if (ctx.id == kP3) ab2 = got;
    }
    {
        auto got = jsnd_ring_vec(ctx, kP3, kP0, kP1, ab3, cnt);
        if (ctx.id == kP1) ab3 = got;
    }
    // relabel: z.c0 = (ab)^3, z.c1 = (ab)^2, z.c2 = (ab)^1
    std::vector<AddSh4> out(cnt);
    for (size_t i = 0; i < cnt; ++i) {
        out[i].c[0] = ab3[i];
        out[i].c[1] = ab2[i];
        out[i].c[2] = ab1[i];
    }
    return out;
}

u64 fzero_component_all(PartyCtx& ctx, const std::string& tag, int j, size_t idx) {
    const Ring& r = ctx.ring;
    auto sample_r = [&](int excl) -> u64 {
        SubsetMask mask = 1;
        for (int p = kP1; p <= kP3; ++p)
            if (p != excl) mask |= (1u << p);
        PrfStream s = ctx.stream(mask, tag + "/zr" + std::to_string(excl));
        for (size_t skip = 0; skip < idx; ++skip) s.next_u64();
        return s.draw_one(r);
    };
    if (j == 1) return r.sub(sample_r(3), sample_r(2));
    if (j == 2) return r.sub(sample_r(1), sample_r(3));
    return r.sub(sample_r(2), sample_r(1));
}

}  // namespace

Engine& instance() {
    static TetradEngine e;
    return e;
}

bool holds_comp4(int id, int c) {
    if (id == kP0) return true;
    return id == kSlotPair[c][0] || id == kSlotPair[c][1];
}

std::vector<AddSh4> mult_s(PartyCtx& ctx, const std::string& tag, const std::vector<AddSh4>& a,
                           const std::vector<AddSh4>& b) {
    return mult_s_impl(ctx, tag, a, b);
}

ShareVec mul_nopre(PartyCtx& ctx, SpanS a, SpanS b, bool trunc) {
    return instance().mul_nopre(ctx, a, b, trunc);
}

}  // namespace tetrad
}  // namespace mpckit
