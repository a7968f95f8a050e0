#include "mpc/astra.hpp"

namespace mpckit {
namespace astra {

namespace {

constexpr SubsetMask kM01 = 0b011;  // {P0,P1}
constexpr SubsetMask kM02 = 0b101;  // {P0,P2}
constexpr SubsetMask kMAll = 0b111;

bool member(SubsetMask m, int id) { return (m >> id) & 1; }

u64 full_lambda(const Ring& r, const Share& s) { return r.add(s.lam[0], s.lam[1]); }

// Gamma monomials over index subsets of size >= 2, pairs first, the full
// product last. The full product is folded into the u-sharing.
std::vector<std::vector<int>> monomials(int n) {
    std::vector<std::vector<int>> out;
    for (int sz = 2; sz <= n; ++sz) {
        for (u32 m = 0; m < (1u << n); ++m) {
            if (__builtin_popcount(m) != sz) continue;
            std::vector<int> ix;
            for (int t = 0; t < n; ++t)
                if (m & (1u << t)) ix.push_back(t);
            out.push_back(ix);
        }
    }
    return out;
}

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

class AstraEngine final : public Engine {
   public:
    Framework fw() const override { return Framework::ASTRA; }
    int n_slots() const override { return 2; }
    SubsetMask slot_holders(int slot) const override {
        return slot == 0 ? subset_of({kP1}) : subset_of({kP2});
    }

    ShareVec input(PartyCtx& ctx, int dealer, size_t cnt, const u64* vals) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        SubsetMask m1 = kM01 | (1u << dealer);
        SubsetMask m2 = kM02 | (1u << dealer);
        bool keep1 = ctx.id == kP0 || ctx.id == kP1 || ctx.id == dealer;
        bool keep2 = ctx.id == kP0 || ctx.id == kP2 || ctx.id == dealer;
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            std::vector<u64> l1, l2;
            if (member(m1, ctx.id)) l1 = ctx.stream(m1, "lam1").draw(r, cnt);
            if (member(m2, ctx.id)) l2 = ctx.stream(m2, "lam2").draw(r, cnt);
            for (size_t i = 0; i < cnt; ++i) {
                if (keep1) w.push_back(l1[i]);
                if (keep2) w.push_back(l2[i]);
            }
            return w;
        });
        size_t stride = (keep1 ? 1 : 0) + (keep2 ? 1 : 0);
        ShareVec out(cnt, make_view(Framework::ASTRA, ctx.id));
        for (size_t i = 0; i < cnt; ++i) {
            if (keep1 && out[i].has_lam(0)) out[i].lam[0] = words[i * stride];
            if (keep2 && out[i].has_lam(1)) out[i].lam[1] = words[i * stride + (keep1 ? 1 : 0)];
        }
        if (!ctx.online()) return out;

        if (ctx.id == dealer) {
            std::vector<u64> m(cnt);
            for (size_t i = 0; i < cnt; ++i) {
                u64 l1 = words[i * stride];
                u64 l2 = words[i * stride + 1];
                m[i] = r.add(vals[i], r.add(l1, l2));
                if (dealer != kP0) out[i].m = m[i];
            }
            for (int p : {kP1, kP2})
                if (p != dealer) send_ring_vec(ctx, p, m);
        } else if (ctx.id != kP0) {
            auto m = recv_ring_vec(ctx, dealer, cnt);
            for (size_t i = 0; i < cnt; ++i) out[i].m = m[i];
        }
        return out;
    }

    std::optional<std::vector<u64>> reconstruct(PartyCtx& ctx, SpanS shares,
                                                RecMode mode) override {
        if (mode == RecMode::Fair)
            throw std::invalid_argument("fair reconstruction needs a malicious framework");
        const Ring& r = ctx.ring;
        size_t cnt = shares.size();
        std::vector<u64> l1(cnt), l2(cnt), m(cnt);
        for (size_t i = 0; i < cnt; ++i) {
            l1[i] = shares[i].lam[0];
            l2[i] = shares[i].lam[1];
            m[i] = shares[i].m;
        }
        if (ctx.id == kP0) {
            send_ring_vec(ctx, kP2, l1);
            send_ring_vec(ctx, kP1, l2);
            m = recv_ring_vec(ctx, kP1, cnt);
        } else if (ctx.id == kP1) {
            send_ring_vec(ctx, kP0, m);
            l2 = recv_ring_vec(ctx, kP0, cnt);
        } else {
            l1 = recv_ring_vec(ctx, kP0, cnt);
        }
        std::vector<u64> v(cnt);
        for (size_t i = 0; i < cnt; ++i) v[i] = r.sub(m[i], r.add(l1[i], l2[i]));
        return v;
    }

    ShareVec mul(PartyCtx& ctx, SpanS a, SpanS b, bool trunc) override {
        return muln(ctx, {a, b}, trunc);
    }
    ShareVec mul3(PartyCtx& ctx, SpanS a, SpanS b, SpanS c, bool trunc) override {
        return muln(ctx, {a, b, c}, trunc);
    }
    ShareVec mul4(PartyCtx& ctx, SpanS a, SpanS b, SpanS c, SpanS d, bool trunc) override {
        return muln(ctx, {a, b, c, d}, trunc);
    }

    ShareVec mul_nopre(PartyCtx& ctx, SpanS a, SpanS b, bool trunc) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = a.size();
        // The preprocessing steps run inside the online phase; every send is
        // enabled by local computation, so the round count stays at one.
        std::vector<u64> u1, u2, lq1, lq2;
        if (member(kM01, ctx.id)) u1 = ctx.stream(kM01, "u1").draw(r, cnt);
        if (member(kM02, ctx.id)) u2 = ctx.stream(kM02, "u2").draw(r, cnt);
        if (member(kM01, ctx.id)) lq1 = ctx.stream(kM01, "q1").draw(r, cnt);
        ShareVec out(cnt, make_view(Framework::ASTRA, ctx.id));
        if (ctx.id == kP0) {
            lq2.resize(cnt);
            for (size_t i = 0; i < cnt; ++i) {
                u64 gamma = r.mul(full_lambda(r, a[i]), full_lambda(r, b[i]));
                u64 rv = r.sub(gamma, r.add(u1[i], u2[i]));
                u64 q = trunc ? r.trunc(rv, ctx.fx.frac_bits) : rv;
                lq2[i] = r.neg(r.add(q, lq1[i]));
                out[i].lam[0] = lq1[i];
                out[i].lam[1] = lq2[i];
            }
            send_ring_vec(ctx, kP2, lq2);
            return out;
        }
        std::vector<u64> y(cnt);
        int j = ctx.id == kP1 ? 0 : 1;
        const auto& u = ctx.id == kP1 ? u1 : u2;
        for (size_t i = 0; i < cnt; ++i)
            y[i] = r.sub(u[i], r.add(r.mul(a[i].lam[j], b[i].m), r.mul(b[i].lam[j], a[i].m)));
        int peer = ctx.id == kP1 ? kP2 : kP1;
        send_ring_vec(ctx, peer, y);
        if (ctx.id == kP2) lq2 = recv_ring_vec(ctx, kP0, cnt);
        auto y_peer = recv_ring_vec(ctx, peer, cnt);
        for (size_t i = 0; i < cnt; ++i) {
            u64 zr = r.add(r.add(y[i], y_peer[i]), r.mul(a[i].m, b[i].m));
            out[i].m = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
            if (ctx.id == kP1)
                out[i].lam[0] = lq1[i];
            else
                out[i].lam[1] = lq2[i];
        }
        return out;
    }

    ShareVec dotp(PartyCtx& ctx, const std::vector<ShareVec>& as, const std::vector<ShareVec>& bs,
                  bool trunc) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t k = as.size();
        for (size_t i = 0; i < k; ++i)
            if (as[i].size() != bs[i].size() || as[i].empty())
                throw std::invalid_argument("dotp: length mismatch");
        auto words = ctx.pre([&] {
            std::vector<u64> u1, u2, w;
            if (member(kM01, ctx.id)) u1 = ctx.stream(kM01, "u1").draw(r, k);
            if (member(kM02, ctx.id)) u2 = ctx.stream(kM02, "u2").draw(r, k);
            if (ctx.id == kP0) {
                auto lq1 = ctx.stream(kM01, "q1").draw(r, k);
                std::vector<u64> lq2(k);
                for (size_t i = 0; i < k; ++i) {
                    u64 gamma = 0;
                    for (size_t t = 0; t < as[i].size(); ++t)
                        gamma = r.add(gamma,
                                      r.mul(full_lambda(r, as[i][t]), full_lambda(r, bs[i][t])));
                    u64 rv = r.sub(gamma, r.add(u1[i], u2[i]));
                    u64 q = trunc ? r.trunc(rv, ctx.fx.frac_bits) : rv;
                    lq2[i] = r.neg(r.add(q, lq1[i]));
                    w.push_back(lq1[i]);
                    w.push_back(lq2[i]);
                }
                send_ring_vec(ctx, kP2, lq2);
            } else if (ctx.id == kP1) {
                auto lq1 = ctx.stream(kM01, "q1").draw(r, k);
                for (size_t i = 0; i < k; ++i) {
                    w.push_back(u1[i]);
                    w.push_back(lq1[i]);
                }
            } else {
                auto lq2 = recv_ring_vec(ctx, kP0, k);
                for (size_t i = 0; i < k; ++i) {
                    w.push_back(u2[i]);
                    w.push_back(lq2[i]);
                }
            }
            return w;
        });
        ShareVec out(k, make_view(Framework::ASTRA, ctx.id));
        for (size_t i = 0; i < k; ++i) {
            if (ctx.id == kP0) {
                out[i].lam[0] = words[2 * i];
                out[i].lam[1] = words[2 * i + 1];
            } else if (ctx.id == kP1)
                out[i].lam[0] = words[2 * i + 1];
            else
                out[i].lam[1] = words[2 * i + 1];
        }
        if (!ctx.online() || ctx.id == kP0) return out;
        int j = ctx.id == kP1 ? 0 : 1;
        std::vector<u64> y(k);
        for (size_t i = 0; i < k; ++i) {
            u64 acc = words[2 * i];
            for (size_t t = 0; t < as[i].size(); ++t)
                acc = r.sub(acc, r.add(r.mul(as[i][t].lam[j], bs[i][t].m),
                                       r.mul(bs[i][t].lam[j], as[i][t].m)));
            y[i] = acc;
        }
        int peer = ctx.id == kP1 ? kP2 : kP1;
        send_ring_vec(ctx, peer, y);
        auto y_peer = recv_ring_vec(ctx, peer, k);
        for (size_t i = 0; i < k; ++i) {
            u64 mm = 0;
            for (size_t t = 0; t < as[i].size(); ++t)
                mm = r.add(mm, r.mul(as[i][t].m, bs[i][t].m));
            u64 zr = r.add(r.add(y[i], y_peer[i]), mm);
            out[i].m = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
        }
        return out;
    }

    ShareVec scale_trunc(PartyCtx& ctx, u64 alpha, SpanS v) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = v.size();
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            if (ctx.id == kP0) {
                auto lt1 = ctx.stream(kM01, "t1").draw(r, cnt);
                std::vector<u64> lt2(cnt);
                for (size_t i = 0; i < cnt; ++i) {
                    u64 beta2 = r.mul(alpha, r.neg(full_lambda(r, v[i])));
                    u64 t2 = r.trunc(beta2, ctx.fx.frac_bits);
                    lt2[i] = r.neg(r.add(t2, lt1[i]));
                    w.push_back(lt1[i]);
                    w.push_back(lt2[i]);
                }
                send_ring_vec(ctx, kP2, lt2);
            } else if (ctx.id == kP1) {
                w = ctx.stream(kM01, "t1").draw(r, cnt);
            } else {
                w = recv_ring_vec(ctx, kP0, cnt);
            }
            return w;
        });
        ShareVec out(cnt, make_view(Framework::ASTRA, ctx.id));
        for (size_t i = 0; i < cnt; ++i) {
            if (ctx.id == kP0) {
                out[i].lam[0] = words[2 * i];
                out[i].lam[1] = words[2 * i + 1];
            } else if (ctx.id == kP1)
                out[i].lam[0] = words[i];
            else
                out[i].lam[1] = words[i];
        }
        if (!ctx.online() || ctx.id == kP0) return out;
        for (size_t i = 0; i < cnt; ++i)
            out[i].m = r.trunc(r.mul(alpha, v[i].m), ctx.fx.frac_bits);
        return out;
    }

    ShareVec reshare_slots(PartyCtx& ctx, size_t cnt,
                           const std::vector<std::vector<u64>>& slot_vals) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            std::vector<u64> a1, a2, b1, b2;
            if (member(kM01, ctx.id)) a1 = ctx.stream(kM01, "rs_a1").draw(r, cnt);
            a2 = ctx.stream(kMAll, "rs_a2").draw(r, cnt);
            if (member(kM02, ctx.id)) b2 = ctx.stream(kM02, "rs_b2").draw(r, cnt);
            b1 = ctx.stream(kMAll, "rs_b1").draw(r, cnt);
            for (size_t i = 0; i < cnt; ++i) {
                if (!a1.empty()) w.push_back(a1[i]);
                w.push_back(a2[i]);
                if (!b2.empty()) w.push_back(b2[i]);
                w.push_back(b1[i]);
            }
            return w;
        });
        size_t stride = ctx.id == kP0 ? 4 : 3;
        ShareVec out(cnt, make_view(Framework::ASTRA, ctx.id));
        std::vector<u64> lam_own(cnt);
        for (size_t i = 0; i < cnt; ++i) {
            const u64* rec = words.data() + i * stride;
            if (ctx.id == kP0) {  // [a1, a2, b2, b1]
                out[i].lam[0] = r.add(rec[0], rec[3]);
                out[i].lam[1] = r.add(rec[1], rec[2]);
            } else if (ctx.id == kP1) {  // [a1, a2, b1]
                out[i].lam[0] = r.add(rec[0], rec[2]);
                lam_own[i] = r.add(rec[0], rec[1]);
            } else {  // [a2, b2, b1]
                out[i].lam[1] = r.add(rec[0], rec[1]);
                lam_own[i] = r.add(rec[1], rec[2]);
            }
        }
        if (!ctx.online() || ctx.id == kP0) return out;
        std::vector<u64> m_own(cnt);
        const auto& mine = ctx.id == kP1 ? slot_vals[0] : slot_vals[1];
        for (size_t i = 0; i < cnt; ++i) m_own[i] = r.add(mine[i], lam_own[i]);
        int peer = ctx.id == kP1 ? kP2 : kP1;
        send_ring_vec(ctx, peer, m_own);
        auto m_peer = recv_ring_vec(ctx, peer, cnt);
        for (size_t i = 0; i < cnt; ++i) out[i].m = r.add(m_own[i], m_peer[i]);
        return out;
    }

    // -- boolean world --------------------------------------------------------

    PackedShare bool_input(PartyCtx& ctx, int dealer, size_t nbits,
                           const PackedBits* bits) override {
        ctx.set_gate(ctx.next_gate());
        SubsetMask m1 = kM01 | (1u << dealer);
        SubsetMask m2 = kM02 | (1u << dealer);
        size_t wp = PackedBits(nbits).w.size();
        bool know1 = member(m1, ctx.id), know2 = member(m2, ctx.id);
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            if (know1) push_packed(w, sample_bits(ctx.stream(m1, "blam1"), nbits));
            if (know2) push_packed(w, sample_bits(ctx.stream(m2, "blam2"), nbits));
            return w;
        });
        size_t off = 0;
        PackedBits l1 = know1 ? pop_packed(words, off, nbits) : PackedBits(nbits);
        PackedBits l2 = know2 ? pop_packed(words, off, nbits) : PackedBits(nbits);
        PackedShare out(Framework::ASTRA, ctx.id, nbits);
        if (out.has_lam(0)) out.lam[0] = l1;
        if (out.has_lam(1)) out.lam[1] = l2;
        if (!ctx.online()) return out;
        if (ctx.id == dealer) {
            PackedBits m = *bits ^ l1 ^ l2;
            if (dealer != kP0) out.m = m;
            for (int p : {kP1, kP2})
                if (p != dealer) send_bits(ctx, p, m);
        } else if (ctx.id != kP0) {
            out.m = recv_bits(ctx, dealer, nbits);
        }
        return out;
    }

    std::optional<PackedBits> bool_reconstruct(PartyCtx& ctx, const PackedShare& s) override {
        size_t n = s.n;
        PackedBits l1 = s.lam[0], l2 = s.lam[1], m = s.m;
        if (ctx.id == kP0) {
            send_bits(ctx, kP2, l1);
            send_bits(ctx, kP1, l2);
            m = recv_bits(ctx, kP1, n);
        } else if (ctx.id == kP1) {
            send_bits(ctx, kP0, m);
            l2 = recv_bits(ctx, kP0, n);
        } else {
            l1 = recv_bits(ctx, kP0, n);
        }
        return m ^ l1 ^ l2;
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

    std::vector<std::vector<PackedShare>> bool_summands(PartyCtx& ctx, SpanS v) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = v.size(), ell = r.ell;
        // Summand 0: m_v, joint-shared by P1,P2 online at zero cost.
        // Summand 1: -lambda_v, boolean-shared by P0 in the preprocessing.
        std::vector<std::vector<PackedShare>> out(2);
        out[0].assign(ell, PackedShare(Framework::ASTRA, ctx.id, cnt));
        if (ctx.online() && ctx.id != kP0) {
            for (size_t i = 0; i < cnt; ++i)
                for (size_t j = 0; j < ell; ++j) out[0][j].m.set(i, (v[i].m >> j) & 1);
        }
        std::vector<PackedBits> neg_bits(ell, PackedBits(cnt));
        if (ctx.id == kP0) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 v2 = r.neg(full_lambda(r, v[i]));
                for (size_t j = 0; j < ell; ++j) neg_bits[j].set(i, (v2 >> j) & 1);
            }
        }
        out[1] = p0_bool_share_pre(ctx, "bsum", neg_bits, cnt, ell);
        return out;
    }

    std::pair<std::vector<PackedShare>, std::vector<PackedShare>> bool_eq_split(
        PartyCtx& ctx, SpanS y) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = y.size(), ell = r.ell;
        std::vector<PackedShare> y1(ell, PackedShare(Framework::ASTRA, ctx.id, cnt));
        if (ctx.online() && ctx.id != kP0) {
            for (size_t i = 0; i < cnt; ++i)
                for (size_t j = 0; j < ell; ++j) y1[j].m.set(i, (y[i].m >> j) & 1);
        }
        std::vector<PackedBits> lam_bits(ell, PackedBits(cnt));
        if (ctx.id == kP0) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 lv = full_lambda(r, y[i]);
                for (size_t j = 0; j < ell; ++j) lam_bits[j].set(i, (lv >> j) & 1);
            }
        }
        auto y2 = p0_bool_share_pre(ctx, "eqsplit", lam_bits, cnt, ell);
        return {std::move(y1), std::move(y2)};
    }

   private:
    ShareVec muln(PartyCtx& ctx, std::vector<SpanS> ins, bool trunc);
    PackedShare andn(PartyCtx& ctx, std::vector<const PackedShare*> ins);
};

ShareVec AstraEngine::muln(PartyCtx& ctx, std::vector<SpanS> ins, bool trunc) {
    for (auto& s : ins)
        if (s.size() != ins[0].size()) throw std::invalid_argument("mul: size mismatch");
    ctx.set_gate(ctx.next_gate());
    const Ring& r = ctx.ring;
    int nin = static_cast<int>(ins.size());
    size_t cnt = ins[0].size();
    auto mono = monomials(nin);
    size_t npair = mono.size() - 1;  // [.]-shared monomials; the top one rides on u
    size_t stride = npair + 2;
    auto words = ctx.pre([&] {
        std::vector<u64> u1, u2, w;
        if (member(kM01, ctx.id)) u1 = ctx.stream(kM01, "u1").draw(r, cnt);
        if (member(kM02, ctx.id)) u2 = ctx.stream(kM02, "u2").draw(r, cnt);
        if (ctx.id == kP0) {
            std::vector<std::vector<u64>> g1(npair);
            for (size_t t = 0; t < npair; ++t)
                g1[t] = ctx.stream(kM01, "g" + std::to_string(t)).draw(r, cnt);
            auto lq1 = ctx.stream(kM01, "q1").draw(r, cnt);
            std::vector<u64> lq2(cnt), flat2;
            for (size_t i = 0; i < cnt; ++i) {
                std::vector<u64> lam(static_cast<size_t>(nin));
                for (int t = 0; t < nin; ++t) lam[t] = full_lambda(r, ins[t][i]);
                for (size_t t = 0; t < npair; ++t) {
                    u64 g = 1;
                    for (int ix : mono[t]) g = r.mul(g, lam[ix]);
                    w.push_back(g1[t][i]);
                    flat2.push_back(r.sub(g, g1[t][i]));
                }
                u64 top = 1;
                for (int ix : mono.back()) top = r.mul(top, lam[ix]);
                // Odd fan-in: u1+u2 = gamma_top + r; even: u1+u2 = gamma_top - r.
                u64 rv = (nin % 2 == 1) ? r.sub(r.add(u1[i], u2[i]), top)
                                        : r.sub(top, r.add(u1[i], u2[i]));
                u64 q = trunc ? r.trunc(rv, ctx.fx.frac_bits) : rv;
                lq2[i] = r.neg(r.add(q, lq1[i]));
                w.push_back(lq1[i]);
                w.push_back(lq2[i]);
            }
            if (npair > 0) send_ring_vec(ctx, kP2, flat2);
            send_ring_vec(ctx, kP2, lq2);
            return w;
        }
        if (ctx.id == kP1) {
            std::vector<std::vector<u64>> g1(npair);
            for (size_t t = 0; t < npair; ++t)
                g1[t] = ctx.stream(kM01, "g" + std::to_string(t)).draw(r, cnt);
            auto lq1 = ctx.stream(kM01, "q1").draw(r, cnt);
            for (size_t i = 0; i < cnt; ++i) {
                for (size_t t = 0; t < npair; ++t) w.push_back(g1[t][i]);
                w.push_back(u1[i]);
                w.push_back(lq1[i]);
            }
            return w;
        }
        std::vector<u64> flat2;
        if (npair > 0) flat2 = recv_ring_vec(ctx, kP0, npair * cnt);
        auto lq2 = recv_ring_vec(ctx, kP0, cnt);
        for (size_t i = 0; i < cnt; ++i) {
            for (size_t t = 0; t < npair; ++t) w.push_back(flat2[i * npair + t]);
            w.push_back(u2[i]);
            w.push_back(lq2[i]);
        }
        return w;
    });

    ShareVec out(cnt, make_view(Framework::ASTRA, ctx.id));
    for (size_t i = 0; i < cnt; ++i) {
        const u64* rec = words.data() + i * stride;
        if (ctx.id == kP0) {
            out[i].lam[0] = rec[npair];
            out[i].lam[1] = rec[npair + 1];
        } else if (ctx.id == kP1)
            out[i].lam[0] = rec[npair + 1];
        else
            out[i].lam[1] = rec[npair + 1];
    }
    if (!ctx.online() || ctx.id == kP0) return out;

    int j = ctx.id == kP1 ? 0 : 1;
    std::vector<u64> y(cnt);
    for (size_t i = 0; i < cnt; ++i) {
        const u64* rec = words.data() + i * stride;
        auto m_of = [&](u32 excl_mask) {
            u64 prod = 1;
            for (int t = 0; t < nin; ++t)
                if (!(excl_mask & (1u << t))) prod = r.mul(prod, ins[t][i].m);
            return prod;
        };
        u64 acc = 0;
        for (int t = 0; t < nin; ++t)
            acc = r.sub(acc, r.mul(ins[t][i].lam[j], m_of(1u << t)));
        for (size_t t = 0; t < npair; ++t) {
            u32 mask = 0;
            for (int ix : mono[t]) mask |= (1u << ix);
            u64 term = r.mul(rec[t], m_of(mask));
            acc = (mono[t].size() % 2 == 0) ? r.add(acc, term) : r.sub(acc, term);
        }
        u64 u = rec[npair];
        acc = (nin % 2 == 1) ? r.sub(acc, u) : r.add(acc, u);
        y[i] = acc;
    }
    int peer = ctx.id == kP1 ? kP2 : kP1;
    send_ring_vec(ctx, peer, y);
    auto y_peer = recv_ring_vec(ctx, peer, cnt);
    for (size_t i = 0; i < cnt; ++i) {
        u64 mtop = 1;
        for (int t = 0; t < nin; ++t) mtop = r.mul(mtop, ins[t][i].m);
        u64 zr = r.add(r.add(y[i], y_peer[i]), mtop);
        out[i].m = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
    }
    return out;
}

PackedShare AstraEngine::andn(PartyCtx& ctx, std::vector<const PackedShare*> ins) {
    ctx.set_gate(ctx.next_gate());
    int nin = static_cast<int>(ins.size());
    size_t n = ins[0]->n;
    auto mono = monomials(nin);
    size_t npair = mono.size() - 1;
    auto words = ctx.pre([&] {
        std::vector<u64> w;
        PackedBits u1(n), u2(n), lq1(n);
        if (member(kM01, ctx.id)) u1 = sample_bits(ctx.stream(kM01, "bu1"), n);
        if (member(kM02, ctx.id)) u2 = sample_bits(ctx.stream(kM02, "bu2"), n);
        if (member(kM01, ctx.id)) lq1 = sample_bits(ctx.stream(kM01, "bq1"), n);
        std::vector<PackedBits> g(npair, PackedBits(n));
        if (member(kM01, ctx.id))
            for (size_t t = 0; t < npair; ++t)
                g[t] = sample_bits(ctx.stream(kM01, "bg" + std::to_string(t)), n);
        if (ctx.id == kP0) {
            std::vector<PackedBits> lam(static_cast<size_t>(nin));
            for (int t = 0; t < nin; ++t) lam[t] = ins[t]->lam[0] ^ ins[t]->lam[1];
            std::vector<u8> flat;
            std::vector<PackedBits> g2(npair);
            for (size_t t = 0; t < npair; ++t) {
                PackedBits gv = ones(n);
                for (int ix : mono[t]) gv = gv & lam[ix];
                g2[t] = gv ^ g[t];
                auto bytes = pack_bits(g2[t]);
                flat.insert(flat.end(), bytes.begin(), bytes.end());
            }
            PackedBits top = ones(n);
            for (int ix : mono.back()) top = top & lam[ix];
            PackedBits lq2 = top ^ u1 ^ u2 ^ lq1;
            auto bytes = pack_bits(lq2);
            flat.insert(flat.end(), bytes.begin(), bytes.end());
            ctx.send(kP2, flat, (npair + 1) * n);
            // P0 keeps both output mask parts.
            push_packed(w, lq1);
            push_packed(w, lq2);
            return w;
        }
        if (ctx.id == kP1) {
            for (size_t t = 0; t < npair; ++t) push_packed(w, g[t]);
            push_packed(w, u1);
            push_packed(w, lq1);
            return w;
        }
        auto flat = ctx.recv(kP0, (npair + 1) * ((n + 7) / 8));
        size_t per = (n + 7) / 8;
        for (size_t t = 0; t < npair; ++t)
            push_packed(w, unpack_bits(std::vector<u8>(flat.begin() + static_cast<long>(t * per),
                                                       flat.begin() + static_cast<long>((t + 1) * per)),
                                       n));
        push_packed(w, u2);
        push_packed(w, unpack_bits(std::vector<u8>(flat.begin() + static_cast<long>(npair * per),
                                                   flat.begin() + static_cast<long>((npair + 1) * per)),
                                   n));
        return w;
    });

    PackedShare out(Framework::ASTRA, ctx.id, n);
    size_t off = 0;
    if (ctx.id == kP0) {
        out.lam[0] = pop_packed(words, off, n);
        out.lam[1] = pop_packed(words, off, n);
        return out;
    }
    std::vector<PackedBits> g(npair);
    for (size_t t = 0; t < npair; ++t) g[t] = pop_packed(words, off, n);
    PackedBits u = pop_packed(words, off, n);
    PackedBits lq = pop_packed(words, off, n);
    if (ctx.id == kP1)
        out.lam[0] = lq;
    else
        out.lam[1] = lq;
    if (!ctx.online()) return out;

    auto m_of = [&](u32 excl_mask) {
        PackedBits prod = ones(n);
        for (int t = 0; t < nin; ++t)
            if (!(excl_mask & (1u << t))) prod = prod & ins[t]->m;
        return prod;
    };
    int j = ctx.id == kP1 ? 0 : 1;
    PackedBits y(n);
    for (int t = 0; t < nin; ++t) y = y ^ (ins[t]->lam[j] & m_of(1u << t));
    for (size_t t = 0; t < npair; ++t) {
        u32 mask = 0;
        for (int ix : mono[t]) mask |= (1u << ix);
        y = y ^ (g[t] & m_of(mask));
    }
    y = y ^ u;
    int peer = ctx.id == kP1 ? kP2 : kP1;
    send_bits(ctx, peer, y);
    PackedBits y_peer = recv_bits(ctx, peer, n);
    out.m = y ^ y_peer ^ m_of(0);
    return out;
}

}  // namespace

Engine& instance() {
    static AstraEngine e;
    return e;
}

std::vector<u64> p0_additive_pre(PartyCtx& ctx, const std::string& tag,
                                 const std::vector<u64>& vals_at_p0, size_t cnt) {
    const Ring& r = ctx.ring;
    if (ctx.id == kP0) {
        auto part1 = ctx.stream(kM01, tag).draw(r, cnt);
        std::vector<u64> part2(cnt);
        for (size_t i = 0; i < cnt; ++i) part2[i] = r.sub(vals_at_p0[i], part1[i]);
        send_ring_vec(ctx, kP2, part2);
        return {};
    }
    if (ctx.id == kP1) return ctx.stream(kM01, tag).draw(r, cnt);
    return recv_ring_vec(ctx, kP0, cnt);
}

std::vector<PackedShare> p0_bool_share_pre(PartyCtx& ctx, const std::string& tag,
                                           const std::vector<PackedBits>& bits_at_p0, size_t cnt,
                                           size_t nbits) {
    std::vector<PackedShare> out(nbits, PackedShare(Framework::ASTRA, ctx.id, cnt));
    Phase prev = ctx.phase();
    ctx.set_phase(Phase::Pre);
    PrfStream s1 = ctx.stream(kM01, tag + "/l1");
    std::vector<PackedBits> l1(nbits, PackedBits(cnt)), l2(nbits, PackedBits(cnt));
    for (size_t j = 0; j < nbits; ++j) {
        if (ctx.id == kP0 || ctx.id == kP1) {
            s1.fill_words(l1[j].w.data(), l1[j].w.size());
            l1[j].mask_tail();
        }
    }
    if (ctx.id == kP0) {
        std::vector<u8> flat;
        for (size_t j = 0; j < nbits; ++j) {
            l2[j] = bits_at_p0[j] ^ l1[j];
            auto bytes = pack_bits(l2[j]);
            flat.insert(flat.end(), bytes.begin(), bytes.end());
        }
        ctx.send(kP2, flat, nbits * cnt);
    } else if (ctx.id == kP2) {
        auto flat = ctx.recv(kP0, nbits * ((cnt + 7) / 8));
        size_t per = (cnt + 7) / 8;
        for (size_t j = 0; j < nbits; ++j)
            l2[j] = unpack_bits(
                std::vector<u8>(flat.begin() + static_cast<long>(j * per),
                                flat.begin() + static_cast<long>((j + 1) * per)),
                cnt);
    }
    for (size_t j = 0; j < nbits; ++j) {
        if (out[j].has_lam(0)) out[j].lam[0] = l1[j];
        if (out[j].has_lam(1)) out[j].lam[1] = l2[j];
    }
    ctx.set_phase(prev);
    return out;
}

}  // namespace astra
}  // namespace mpckit
