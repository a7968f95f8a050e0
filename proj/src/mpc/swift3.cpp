#include "mpc/swift3.hpp"

#include "mpc/provider.hpp"

namespace mpckit {
namespace swift3 {

namespace {

// comp j is held by the pair kCompMask[j]; lambda parts and <.>-components
// use the same layout (Table 4.2).
constexpr SubsetMask kCompMask[3] = {0b101, 0b110, 0b011};
constexpr int kHeld[3][2] = {{0, 2}, {1, 2}, {0, 1}};

bool member(SubsetMask m, int id) { return (m >> id) & 1; }
bool holds_comp(int id, int c) { return member(kCompMask[c], id); }
int third_of(int c) { return 3 - kHeld[c][0] - kHeld[c][1]; }

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

std::vector<AddSh3> dotp_pre3(PartyCtx& ctx, unsigned ell, u64 k, u64 L,
                              const std::vector<AddSh3>& us, const std::vector<AddSh3>& vs) {
    const int* hc = kHeld[ctx.id];
    std::vector<u64> body;
    body.reserve(4 * us.size());
    for (int t = 0; t < 2; ++t)
        for (const auto& u : us) body.push_back(u.c[hc[t]]);
    for (int t = 0; t < 2; ++t)
        for (const auto& v : vs) body.push_back(v.c[hc[t]]);
    auto rep = provider_round(ctx, ProviderOp::DotpPre3, ell, k, L, body, 2 * k);
    std::vector<AddSh3> out(static_cast<size_t>(k));
    for (u64 i = 0; i < k; ++i) {
        out[i].c[hc[0]] = rep[i];
        out[i].c[hc[1]] = rep[k + i];
    }
    return out;
}

std::vector<AddSh3> sample_addsh3_vec(PartyCtx& ctx, const std::string& tag, size_t cnt) {
    std::vector<AddSh3> out(cnt);
    for (int c = 0; c < 3; ++c) {
        if (!holds_comp(ctx.id, c)) continue;
        auto vals = ctx.stream(kCompMask[c], tag + std::to_string(c)).draw(ctx.ring, cnt);
        for (size_t i = 0; i < cnt; ++i) out[i].c[c] = vals[i];
    }
    return out;
}

u64 bit_of(u64 v, unsigned j) { return (v >> j) & 1; }

// Trunc-pair material, 9 words per element:
// [r.c0..c2, lambda_rt.c0..c2, lambda_msb.c0..c2]
void trgen_material(PartyCtx& ctx, std::vector<u64>& w, size_t cnt) {
    const Ring& r = ctx.ring;
    unsigned ell = r.ell, x = ctx.fx.frac_bits;
    std::vector<u64> r1(cnt, 0), r2(cnt, 0);
    bool k1 = holds_comp(ctx.id, 0), k2 = holds_comp(ctx.id, 1);
    if (k1) r1 = ctx.stream(kCompMask[0], "tr_r1").draw(r, cnt);
    if (k2) r2 = ctx.stream(kCompMask[1], "tr_r2").draw(r, cnt);
    size_t L = ell;
    std::vector<AddSh3> us(cnt * 3 * L), vs(cnt * 3 * L);
    auto pow2 = [&](unsigned e) -> u64 { return e >= 64 ? 0 : r.reduce(1ULL << e); };
    for (size_t i = 0; i < cnt; ++i) {
        for (unsigned j = 0; j < ell; ++j) {
            AddSh3& a = us[(i * 3 + 0) * L + j];
            AddSh3& b = vs[(i * 3 + 0) * L + j];
            if (k1) a.c[0] = r.mul(pow2(j + 1), bit_of(r1[i], j));
            if (k2) b.c[1] = bit_of(r2[i], j);
        }
        for (unsigned j = 0; j + x < ell; ++j) {
            AddSh3& a = us[(i * 3 + 1) * L + j];
            AddSh3& b = vs[(i * 3 + 1) * L + j];
            if (k1) a.c[0] = r.mul(pow2(j + 1), bit_of(r1[i], j + x));
            if (k2) b.c[1] = bit_of(r2[i], j + x);
        }
        if (k1) us[(i * 3 + 2) * L].c[0] = bit_of(r1[i], ell - 1);
        if (k2) vs[(i * 3 + 2) * L].c[1] = bit_of(r2[i], ell - 1);
    }
    auto prods = dotp_pre3(ctx, r.ell, cnt * 3, L, us, vs);
    for (size_t i = 0; i < cnt; ++i) {
        const AddSh3& xp = prods[i * 3 + 0];
        const AddSh3& yp = prods[i * 3 + 1];
        const AddSh3& mp = prods[i * 3 + 2];
        u64 t1 = 0, t2 = 0;
        for (unsigned j = 0; j + x < ell; ++j) {
            if (k1) t1 = r.add(t1, r.mul(pow2(j), bit_of(r1[i], j + x)));
            if (k2) t2 = r.add(t2, r.mul(pow2(j), bit_of(r2[i], j + x)));
        }
        // <r> = sum_i 2^i (<r1_i> + <r2_i>) - <x>; the bit sums collapse to
        // the packed values r1, r2.
        w.push_back(r.sub(k1 ? r1[i] : 0, xp.c[0]));
        w.push_back(r.sub(k2 ? r2[i] : 0, xp.c[1]));
        w.push_back(r.neg(xp.c[2]));
        w.push_back(r.add(r.neg(t1), yp.c[0]));
        w.push_back(r.add(r.neg(t2), yp.c[1]));
        w.push_back(yp.c[2]);
        w.push_back(r.add(r.neg(k1 ? bit_of(r1[i], ell - 1) : 0), r.mul(2, mp.c[0])));
        w.push_back(r.add(r.neg(k2 ? bit_of(r2[i], ell - 1) : 0), r.mul(2, mp.c[1])));
        w.push_back(r.mul(2, mp.c[2]));
    }
}

TrPair read_trpair(PartyCtx& ctx, const u64* rec) {
    TrPair t;
    Share rt = make_view(Framework::SWIFT, ctx.id);
    Share mb = make_view(Framework::SWIFT, ctx.id);
    for (int c = 0; c < 3; ++c) {
        if (holds_comp(ctx.id, c)) t.r.c[c] = rec[c];
        if (rt.has_lam(c)) rt.lam[c] = rec[3 + c];
        if (mb.has_lam(c)) mb.lam[c] = rec[6 + c];
    }
    t.rt_logical = rt;
    t.msb_r = mb;
    return t;
}

class SwiftEngine final : public Engine {
   public:
    Framework fw() const override { return Framework::SWIFT; }
    int n_slots() const override { return 3; }
    SubsetMask slot_holders(int slot) const override { return kCompMask[slot]; }

    ShareVec input(PartyCtx& ctx, int dealer, size_t cnt, const u64* vals) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        std::vector<int> known;
        for (int c = 0; c < 3; ++c)
            if (holds_comp(ctx.id, c) || ctx.id == dealer) known.push_back(c);
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            for (int c = 0; c < 3; ++c) {
                SubsetMask m = kCompMask[c] | (1u << dealer);
                if (!member(m, ctx.id)) continue;
                auto vals_c = ctx.stream(m, "lam" + std::to_string(c)).draw(r, cnt);
                for (size_t i = 0; i < cnt; ++i) w.push_back(vals_c[i]);
            }
            return w;
        });
        ShareVec out(cnt, make_view(Framework::SWIFT, ctx.id));
        std::vector<u64> full_lam(cnt, 0);
        for (size_t kx = 0; kx < known.size(); ++kx) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 v = words[kx * cnt + i];
                if (out[i].has_lam(known[kx])) out[i].lam[known[kx]] = v;
                full_lam[i] = r.add(full_lam[i], v);
            }
        }
        if (!ctx.online()) return out;
        int pj = dealer != kP1 ? kP1 : kP2;
        int third = 3 - dealer - pj;
        std::vector<u64> m(cnt);
        if (ctx.id == dealer) {
            for (size_t i = 0; i < cnt; ++i) m[i] = r.add(vals[i], full_lam[i]);
            send_ring_vec(ctx, pj, m);
        } else if (ctx.id == pj) {
            m = recv_ring_vec(ctx, dealer, cnt);
        }
        auto got = jsnd_ring_vec(ctx, dealer, pj, third, m, cnt);
        if (ctx.id == third) m = got;
        for (size_t i = 0; i < cnt; ++i) out[i].m = m[i];
        return out;
    }

    std::optional<std::vector<u64>> reconstruct(PartyCtx& ctx, SpanS shares,
                                                RecMode mode) override {
        if (mode == RecMode::Fair) return reconstruct_fair(ctx, shares);
        const Ring& r = ctx.ring;
        size_t cnt = shares.size();
        ctx.run_verify();
        if (ctx.abort_flag) return std::nullopt;
        std::vector<u64> lam[3];
        for (int c = 0; c < 3; ++c) {
            lam[c].assign(cnt, 0);
            for (size_t i = 0; i < cnt; ++i) lam[c][i] = shares[i].lam[c];
        }
        for (int c = 0; c < 3; ++c) {
            int k = third_of(c);
            auto payload = pack_ring_vec(r, lam[c]);
            auto got = ctx.jsnd_now(kHeld[c][0], kHeld[c][1], k, payload, cnt * r.ell);
            if (ctx.id == k) lam[c] = unpack_ring_vec(r, *got, cnt);
        }
        if (!ctx.echo_abort_clear()) return std::nullopt;
        std::vector<u64> v(cnt);
        for (size_t i = 0; i < cnt; ++i)
            v[i] = r.sub(shares[i].m, r.add(r.add(lam[0][i], lam[1][i]), lam[2][i]));
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

    ShareVec dotp(PartyCtx& ctx, const std::vector<ShareVec>& as, const std::vector<ShareVec>& bs,
                  bool trunc) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t k = as.size();
        size_t L = 0;
        for (size_t i = 0; i < k; ++i) {
            if (as[i].size() != bs[i].size() || as[i].empty())
                throw std::invalid_argument("dotp: length mismatch");
            L = std::max(L, as[i].size());
        }
        // material per element: t comps (3) | lambda_q comps (3) | lambda_p (1)
        size_t stride = 7;
        auto words = ctx.pre([&] {
            std::vector<AddSh3> us(k * L), vs(k * L);
            for (size_t i = 0; i < k; ++i)
                for (size_t t = 0; t < as[i].size(); ++t)
                    for (int c = 0; c < 3; ++c) {
                        us[i * L + t].c[c] = as[i][t].lam[c];
                        vs[i * L + t].c[c] = bs[i][t].lam[c];
                    }
            auto gamma = dotp_pre3(ctx, r.ell, k, L, us, vs);
            std::vector<u64> w;
            std::vector<u64> trw;
            std::vector<AddSh3> rsh;
            if (trunc)
                trgen_material(ctx, trw, k);
            else
                rsh = sample_addsh3_vec(ctx, "r", k);
            auto lp = holds_comp(ctx.id, 2) ? ctx.stream(kCompMask[2], "lp").draw(r, k)
                                            : std::vector<u64>(k, 0);
            for (size_t i = 0; i < k; ++i) {
                for (int c = 0; c < 3; ++c) {
                    u64 rc = trunc ? trw[9 * i + c] : rsh[i].c[c];
                    w.push_back(r.sub(gamma[i].c[c], rc));  // t = gamma - r
                }
                if (trunc) {
                    TrPair t = read_trpair(ctx, trw.data() + 9 * i);
                    Share q = rt_signed(ctx, t);
                    for (int c = 0; c < 3; ++c) w.push_back(q.lam[c]);
                } else {
                    for (int c = 0; c < 3; ++c) w.push_back(r.neg(rsh[i].c[c]));
                }
                w.push_back(lp[i]);
            }
            return w;
        });
        std::vector<u64> y[3];
        for (int c = 0; c < 3; ++c) y[c].assign(k, 0);
        for (size_t i = 0; i < k; ++i) {
            for (int c = 0; c < 3; ++c) {
                if (!holds_comp(ctx.id, c)) continue;
                u64 acc = words[i * stride + static_cast<size_t>(c)];
                for (size_t t = 0; t < as[i].size(); ++t)
                    acc = r.sub(acc, r.add(r.mul(as[i][t].lam[c], bs[i][t].m),
                                           r.mul(bs[i][t].lam[c], as[i][t].m)));
                y[c][i] = acc;
            }
        }
        std::vector<u64> mtop(k);
        for (size_t i = 0; i < k; ++i) {
            u64 mm = 0;
            for (size_t t = 0; t < as[i].size(); ++t)
                mm = r.add(mm, r.mul(as[i][t].m, bs[i][t].m));
            mtop[i] = mm;
        }
        return finish_mult(ctx, words, stride, y, mtop, k, trunc);
    }

    ShareVec scale_trunc(PartyCtx& ctx, u64 alpha, SpanS v) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = v.size();
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            trgen_material(ctx, w, cnt);
            return w;
        });
        ShareVec out(cnt, make_view(Framework::SWIFT, ctx.id));
        ShareVec open_shares(cnt);
        ShareVec q(cnt);
        for (size_t i = 0; i < cnt; ++i) {
            TrPair t = read_trpair(ctx, words.data() + 9 * i);
            q[i] = rt_signed(ctx, t);
            Share rsh = make_view(Framework::SWIFT, ctx.id);
            for (int c = 0; c < 3; ++c)
                if (rsh.has_lam(c)) rsh.lam[c] = r.neg(t.r.c[c]);
            open_shares[i] = sub(r, scale(r, alpha, v[i]), rsh);
            for (int c = 0; c < 3; ++c) out[i].lam[c] = q[i].lam[c];
        }
        if (!ctx.online()) return out;
        auto z = open_exchange(ctx, open_shares);
        for (size_t i = 0; i < cnt; ++i)
            out[i].m = r.add(r.trunc(z[i], ctx.fx.frac_bits), q[i].m);
        return out;
    }

    ShareVec reshare_slots(PartyCtx& ctx, size_t cnt,
                           const std::vector<std::vector<u64>>& slot_vals) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            for (int s = 0; s < 3; ++s) {
                if (!holds_comp(ctx.id, s)) continue;
                auto lam = ctx.stream(kCompMask[s], "rsl" + std::to_string(s)).draw(r, cnt);
                w.insert(w.end(), lam.begin(), lam.end());
            }
            return w;
        });
        ShareVec out(cnt, make_view(Framework::SWIFT, ctx.id));
        size_t off = 0;
        std::vector<std::vector<u64>> lam(3);
        for (int s = 0; s < 3; ++s) {
            if (!holds_comp(ctx.id, s)) continue;
            lam[s].assign(words.begin() + static_cast<long>(off),
                          words.begin() + static_cast<long>(off + cnt));
            off += cnt;
            for (size_t i = 0; i < cnt; ++i) out[i].lam[s] = lam[s][i];
        }
        if (!ctx.online()) return out;
        std::vector<std::vector<u64>> mvals(3, std::vector<u64>(cnt, 0));
        for (int s = 0; s < 3; ++s) {
            if (holds_comp(ctx.id, s))
                for (size_t i = 0; i < cnt; ++i) mvals[s][i] = r.add(slot_vals[s][i], lam[s][i]);
            int third = third_of(s);
            auto got = jsnd_ring_vec(ctx, kHeld[s][0], kHeld[s][1], third, mvals[s], cnt,
                                     /*defer=*/third == kP3);
            if (ctx.id == third) mvals[s] = got;
        }
        for (size_t i = 0; i < cnt; ++i)
            out[i].m = r.add(r.add(mvals[0][i], mvals[1][i]), mvals[2][i]);
        return out;
    }

    PackedShare bool_input(PartyCtx& ctx, int dealer, size_t nbits,
                           const PackedBits* bits) override {
        ctx.set_gate(ctx.next_gate());
        std::vector<int> known;
        for (int c = 0; c < 3; ++c)
            if (holds_comp(ctx.id, c) || ctx.id == dealer) known.push_back(c);
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            for (int c = 0; c < 3; ++c) {
                SubsetMask m = kCompMask[c] | (1u << dealer);
                if (!member(m, ctx.id)) continue;
                push_packed(w, sample_bits(ctx.stream(m, "blam" + std::to_string(c)), nbits));
            }
            return w;
        });
        PackedShare out(Framework::SWIFT, ctx.id, nbits);
        PackedBits full(nbits);
        size_t off = 0;
        for (int c : known) {
            PackedBits b = pop_packed(words, off, nbits);
            if (out.has_lam(c)) out.lam[c] = b;
            full = full ^ b;
        }
        if (!ctx.online()) return out;
        int pj = dealer != kP1 ? kP1 : kP2;
        int third = 3 - dealer - pj;
        PackedBits m(nbits);
        if (ctx.id == dealer) {
            m = *bits ^ full;
            send_bits(ctx, pj, m);
        } else if (ctx.id == pj) {
            m = recv_bits(ctx, dealer, nbits);
        }
        auto got = jsnd_bits(ctx, dealer, pj, third, m, nbits);
        if (ctx.id == third) m = got;
        out.m = m;
        return out;
    }

    std::optional<PackedBits> bool_reconstruct(PartyCtx& ctx, const PackedShare& s) override {
        size_t n = s.n;
        PackedBits lam[3] = {s.lam[0], s.lam[1], s.lam[2]};
        for (int c = 0; c < 3; ++c) {
            int k = third_of(c);
            auto got = jsnd_bits(ctx, kHeld[c][0], kHeld[c][1], k, lam[c], n);
            if (ctx.id == k) lam[c] = got;
        }
        return s.m ^ lam[0] ^ lam[1] ^ lam[2];
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
        std::vector<std::vector<PackedShare>> out(3);
        auto mask_summand = [&](int comp) {
            std::vector<PackedShare> sh(ell, PackedShare(Framework::SWIFT, ctx.id, cnt));
            if (!holds_comp(ctx.id, comp)) return sh;
            for (size_t i = 0; i < cnt; ++i) {
                u64 val = r.neg(v[i].lam[comp]);
                for (size_t j = 0; j < ell; ++j)
                    if ((val >> j) & 1) sh[j].lam[comp].set(i, true);
            }
            return sh;
        };
        out[1] = mask_summand(0);
        out[2] = mask_summand(1);
        out[0] = joint_bool_share_12(ctx, "bsum", cnt, ell,
                                     [&](size_t i) { return r.sub(v[i].m, v[i].lam[2]); });
        return out;
    }

    std::pair<std::vector<PackedShare>, std::vector<PackedShare>> bool_eq_split(
        PartyCtx& ctx, SpanS y) override {
        // y1 = m - lam^3 at (P1,P2); y2 = lam^1 + lam^2 whose boolean sharing
        // needs an adder over the two zero-cost mask sharings (assembled by
        // the equality gadget).
        (void)ctx;
        (void)y;
        throw std::logic_error("swift equality uses bool_summands plus a preprocessing adder");
    }

    std::vector<PackedShare> joint_bool_share_12(PartyCtx& ctx, const std::string& tag, size_t cnt,
                                                 size_t nbits,
                                                 const std::function<u64(size_t)>& val_at) {
        Phase prev = ctx.phase();
        ctx.set_phase(Phase::Pre);
        std::vector<PackedBits> lam(nbits, PackedBits(cnt));
        if (holds_comp(ctx.id, 2)) {
            PrfStream s = ctx.stream(kCompMask[2], tag + "_l");
            for (size_t j = 0; j < nbits; ++j) {
                s.fill_words(lam[j].w.data(), lam[j].w.size());
                lam[j].mask_tail();
            }
        }
        ctx.set_phase(prev);
        std::vector<PackedShare> out(nbits, PackedShare(Framework::SWIFT, ctx.id, cnt));
        for (size_t j = 0; j < nbits; ++j)
            if (out[j].has_lam(2)) out[j].lam[2] = lam[j];
        if (!ctx.online()) return out;
        std::vector<PackedBits> m(nbits, PackedBits(cnt));
        size_t per = (cnt + 7) / 8;
        std::vector<u8> flat(nbits * per);
        if (ctx.id != kP3) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 v = val_at(i);
                for (size_t j = 0; j < nbits; ++j)
                    if ((v >> j) & 1) m[j].set(i, true);
            }
            flat.clear();
            for (size_t j = 0; j < nbits; ++j) {
                m[j] = m[j] ^ lam[j];
                auto bytes = pack_bits(m[j]);
                flat.insert(flat.end(), bytes.begin(), bytes.end());
            }
        }
        auto got = ctx.jsnd(kP1, kP2, kP3, flat, nbits * cnt, /*defer=*/true);
        if (ctx.id == kP3) {
            for (size_t j = 0; j < nbits; ++j)
                m[j] = unpack_bits(
                    std::vector<u8>(got->begin() + static_cast<long>(j * per),
                                    got->begin() + static_cast<long>((j + 1) * per)),
                    cnt);
        }
        for (size_t j = 0; j < nbits; ++j) out[j].m = m[j];
        return out;
    }

   private:
    // Shared online tail: exchange y via jsnd, rebuild z - r, joint-share p
    // toward P3 (deferred round), add [[q]].
    ShareVec finish_mult(PartyCtx& ctx, const std::vector<u64>& words, size_t stride,
                         std::vector<u64> y[3], const std::vector<u64>& mtop, size_t cnt,
                         bool trunc) {
        const Ring& r = ctx.ring;
        ShareVec out(cnt, make_view(Framework::SWIFT, ctx.id));
        for (size_t i = 0; i < cnt; ++i)
            for (int c = 0; c < 3; ++c)
                if (out[i].has_lam(c)) out[i].lam[c] = words[i * stride + 3 + static_cast<size_t>(c)];
        if (!ctx.online()) return out;
        auto y0got = jsnd_ring_vec(ctx, kP1, kP3, kP2, y[0], cnt);
        auto y1got = jsnd_ring_vec(ctx, kP2, kP3, kP1, y[1], cnt);
        if (ctx.id == kP2) y[0] = y0got;
        if (ctx.id == kP1) y[1] = y1got;
        std::vector<u64> m_p(cnt, 0);
        if (ctx.id != kP3) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 zr = r.add(r.add(y[0][i], y[1][i]), r.add(y[2][i], mtop[i]));
                u64 p = trunc ? r.trunc(zr, ctx.fx.frac_bits) : zr;
                m_p[i] = r.add(p, words[i * stride + 6]);  // + lambda_p (comp 2)
            }
        }
        auto got = jsnd_ring_vec(ctx, kP1, kP2, kP3, m_p, cnt, /*defer=*/true);
        if (ctx.id == kP3) m_p = got;
        for (size_t i = 0; i < cnt; ++i) {
            out[i].m = m_p[i];
            if (out[i].has_lam(2))
                out[i].lam[2] = r.add(out[i].lam[2], words[i * stride + 6]);
        }
        return out;
    }

    ShareVec muln(PartyCtx& ctx, std::vector<SpanS> ins, bool trunc);
    PackedShare andn(PartyCtx& ctx, std::vector<const PackedShare*> ins);

    // Opens [[w]] to all three parties with abort-style jsnd (used by
    // scale_trunc); one online round.
    std::vector<u64> open_exchange(PartyCtx& ctx, SpanS shares) {
        const Ring& r = ctx.ring;
        size_t cnt = shares.size();
        std::vector<u64> lam[3];
        for (int c = 0; c < 3; ++c) {
            lam[c].assign(cnt, 0);
            for (size_t i = 0; i < cnt; ++i) lam[c][i] = shares[i].lam[c];
        }
        for (int c = 0; c < 3; ++c) {
            int k = third_of(c);
            auto got = jsnd_ring_vec(ctx, kHeld[c][0], kHeld[c][1], k, lam[c], cnt);
            if (ctx.id == k) lam[c] = got;
        }
        std::vector<u64> v(cnt);
        for (size_t i = 0; i < cnt; ++i)
            v[i] = r.sub(shares[i].m, r.add(r.add(lam[0][i], lam[1][i]), lam[2][i]));
        return v;
    }

    std::optional<std::vector<u64>> reconstruct_fair(PartyCtx& ctx, SpanS shares);
};

ShareVec SwiftEngine::muln(PartyCtx& ctx, std::vector<SpanS> ins, bool trunc) {
    for (auto& s : ins)
        if (s.size() != ins[0].size()) throw std::invalid_argument("mul: size mismatch");
    ctx.set_gate(ctx.next_gate());
    const Ring& r = ctx.ring;
    int nin = static_cast<int>(ins.size());
    size_t cnt = ins[0].size();
    auto mono = monomials(nin);
    size_t nm = mono.size();
    size_t nlow = nm - 1;  // all but the top monomial, which is folded with r
    size_t stride = 3 * nlow + 7;
    auto words = ctx.pre([&] {
        std::vector<std::vector<AddSh3>> gam(nm);
        size_t npairs = 0;
        for (auto& mvec : mono)
            if (mvec.size() == 2) npairs++;
        {
            std::vector<AddSh3> us(npairs * cnt), vs(npairs * cnt);
            for (size_t t = 0; t < npairs; ++t)
                for (size_t i = 0; i < cnt; ++i)
                    for (int c = 0; c < 3; ++c) {
                        us[t * cnt + i].c[c] = ins[mono[t][0]][i].lam[c];
                        vs[t * cnt + i].c[c] = ins[mono[t][1]][i].lam[c];
                    }
            auto rep = dotp_pre3(ctx, r.ell, npairs * cnt, 1, us, vs);
            for (size_t t = 0; t < npairs; ++t)
                gam[t] = std::vector<AddSh3>(rep.begin() + static_cast<long>(t * cnt),
                                             rep.begin() + static_cast<long>((t + 1) * cnt));
        }
        if (nin >= 3) {
            auto pair_index = [&](int x, int y) {
                for (size_t t = 0; t < nm; ++t)
                    if (mono[t].size() == 2 && mono[t][0] == std::min(x, y) &&
                        mono[t][1] == std::max(x, y))
                        return t;
                throw std::logic_error("pair not found");
            };
            std::vector<size_t> dst;
            std::vector<AddSh3> us, vs;
            for (size_t t = 0; t < nm; ++t) {
                if (mono[t].size() == 3) {
                    size_t p = pair_index(mono[t][0], mono[t][1]);
                    for (size_t i = 0; i < cnt; ++i) {
                        us.push_back(gam[p][i]);
                        AddSh3 lamc;
                        for (int c = 0; c < 3; ++c) lamc.c[c] = ins[mono[t][2]][i].lam[c];
                        vs.push_back(lamc);
                    }
                    dst.push_back(t);
                } else if (mono[t].size() == 4) {
                    size_t p = pair_index(mono[t][0], mono[t][1]);
                    size_t q = pair_index(mono[t][2], mono[t][3]);
                    for (size_t i = 0; i < cnt; ++i) {
                        us.push_back(gam[p][i]);
                        vs.push_back(gam[q][i]);
                    }
                    dst.push_back(t);
                }
            }
            auto rep = dotp_pre3(ctx, r.ell, dst.size() * cnt, 1, us, vs);
            for (size_t x = 0; x < dst.size(); ++x)
                gam[dst[x]] = std::vector<AddSh3>(rep.begin() + static_cast<long>(x * cnt),
                                                  rep.begin() + static_cast<long>((x + 1) * cnt));
        }
        std::vector<u64> w, trw;
        std::vector<AddSh3> rsh;
        if (trunc)
            trgen_material(ctx, trw, cnt);
        else
            rsh = sample_addsh3_vec(ctx, "r", cnt);
        auto lp = holds_comp(ctx.id, 2) ? ctx.stream(kCompMask[2], "lp").draw(r, cnt)
                                        : std::vector<u64>(cnt, 0);
        for (size_t i = 0; i < cnt; ++i) {
            for (size_t t = 0; t < nlow; ++t)
                for (int c = 0; c < 3; ++c) w.push_back(gam[t][i].c[c]);
            for (int c = 0; c < 3; ++c) {
                u64 rc = trunc ? trw[9 * i + static_cast<size_t>(c)] : rsh[i].c[c];
                // nin odd: t = gamma_top + r (enters y negatively);
                // nin even: t = gamma_top - r (enters positively)
                u64 tc = (nin % 2 == 1) ? r.add(gam[nm - 1][i].c[c], rc)
                                        : r.sub(gam[nm - 1][i].c[c], rc);
                w.push_back(tc);
            }
            if (trunc) {
                TrPair t = read_trpair(ctx, trw.data() + 9 * i);
                Share q = rt_signed(ctx, t);
                for (int c = 0; c < 3; ++c) w.push_back(q.lam[c]);
            } else {
                for (int c = 0; c < 3; ++c) w.push_back(r.neg(rsh[i].c[c]));
            }
            w.push_back(lp[i]);
        }
        return w;
    });

    std::vector<u64> y[3];
    for (int c = 0; c < 3; ++c) y[c].assign(cnt, 0);
    std::vector<u64> mtop(cnt);
    for (size_t i = 0; i < cnt; ++i) {
        const u64* rec = words.data() + i * stride;
        auto m_of = [&](u32 excl_mask) {
            u64 prod = 1;
            for (int t = 0; t < nin; ++t)
                if (!(excl_mask & (1u << t))) prod = r.mul(prod, ins[t][i].m);
            return prod;
        };
        mtop[i] = m_of(0);
        for (int c = 0; c < 3; ++c) {
            if (!holds_comp(ctx.id, c)) continue;
            u64 acc = 0;
            for (int t = 0; t < nin; ++t)
                acc = r.sub(acc, r.mul(ins[t][i].lam[c], m_of(1u << t)));
            for (size_t t = 0; t < nlow; ++t) {
                u32 mask = 0;
                for (int ix : mono[t]) mask |= (1u << ix);
                u64 term = r.mul(rec[3 * t + static_cast<size_t>(c)], m_of(mask));
                acc = (mono[t].size() % 2 == 0) ? r.add(acc, term) : r.sub(acc, term);
            }
            u64 tc = rec[3 * nlow + static_cast<size_t>(c)];
            acc = (nin % 2 == 1) ? r.sub(acc, tc) : r.add(acc, tc);
            y[c][i] = acc;
        }
    }
    // repackage lambda_q and lambda_p at fixed offsets for finish_mult
    std::vector<u64> tail(cnt * 7);
    for (size_t i = 0; i < cnt; ++i) {
        for (int c = 0; c < 3; ++c) {
            tail[i * 7 + static_cast<size_t>(c)] = 0;  // unused slot (t comps)
            tail[i * 7 + 3 + static_cast<size_t>(c)] =
                words[i * stride + 3 * nlow + 3 + static_cast<size_t>(c)];
        }
        tail[i * 7 + 6] = words[i * stride + 3 * nlow + 6];
    }
    return finish_mult(ctx, tail, 7, y, mtop, cnt, trunc);
}

PackedShare SwiftEngine::andn(PartyCtx& ctx, std::vector<const PackedShare*> ins) {
    ctx.set_gate(ctx.next_gate());
    int nin = static_cast<int>(ins.size());
    size_t n = ins[0]->n;
    auto mono = monomials(nin);
    size_t nm = mono.size();
    size_t nlow = nm - 1;
    auto words = ctx.pre([&] {
        // gamma monomials over Z_2 via the provider, then r/lambda_p bits
        std::vector<std::vector<AddSh3>> gam(nm);
        auto lam_sh3 = [&](const PackedShare* s, size_t i) {
            AddSh3 a;
            for (int c = 0; c < 3; ++c) a.c[c] = s->lam[c].get(i) ? 1 : 0;
            return a;
        };
        size_t npairs = 0;
        for (auto& mvec : mono)
            if (mvec.size() == 2) npairs++;
        {
            std::vector<AddSh3> us(npairs * n), vs(npairs * n);
            for (size_t t = 0; t < npairs; ++t)
                for (size_t i = 0; i < n; ++i) {
                    us[t * n + i] = lam_sh3(ins[mono[t][0]], i);
                    vs[t * n + i] = lam_sh3(ins[mono[t][1]], i);
                }
            auto rep = dotp_pre3(ctx, 1, npairs * n, 1, us, vs);
            for (size_t t = 0; t < npairs; ++t)
                gam[t] = std::vector<AddSh3>(rep.begin() + static_cast<long>(t * n),
                                             rep.begin() + static_cast<long>((t + 1) * n));
        }
        if (nin >= 3) {
            auto pair_index = [&](int x, int y) {
                for (size_t t = 0; t < nm; ++t)
                    if (mono[t].size() == 2 && mono[t][0] == std::min(x, y) &&
                        mono[t][1] == std::max(x, y))
                        return t;
                throw std::logic_error("pair not found");
            };
            std::vector<size_t> dst;
            std::vector<AddSh3> us, vs;
            for (size_t t = 0; t < nm; ++t) {
                if (mono[t].size() == 3) {
                    size_t p = pair_index(mono[t][0], mono[t][1]);
                    for (size_t i = 0; i < n; ++i) {
                        us.push_back(gam[p][i]);
                        vs.push_back(lam_sh3(ins[mono[t][2]], i));
                    }
                    dst.push_back(t);
                } else if (mono[t].size() == 4) {
                    size_t p = pair_index(mono[t][0], mono[t][1]);
                    size_t q = pair_index(mono[t][2], mono[t][3]);
                    for (size_t i = 0; i < n; ++i) {
                        us.push_back(gam[p][i]);
                        vs.push_back(gam[q][i]);
                    }
                    dst.push_back(t);
                }
            }
            auto rep = dotp_pre3(ctx, 1, dst.size() * n, 1, us, vs);
            for (size_t x = 0; x < dst.size(); ++x)
                gam[dst[x]] = std::vector<AddSh3>(rep.begin() + static_cast<long>(x * n),
                                                  rep.begin() + static_cast<long>((x + 1) * n));
        }
        // r bits (per component) and lambda_p bits
        PackedBits rb[3];
        for (int c = 0; c < 3; ++c) {
            rb[c] = PackedBits(n);
            if (holds_comp(ctx.id, c))
                rb[c] = sample_bits(ctx.stream(kCompMask[c], "br" + std::to_string(c)), n);
        }
        PackedBits lp(n);
        if (holds_comp(ctx.id, 2)) lp = sample_bits(ctx.stream(kCompMask[2], "blp"), n);
        // serialize: per monomial (incl top^r) 3 packed comps, then lambda_q
        // comps (= r comps over Z_2), then lambda_p
        std::vector<u64> w;
        for (size_t t = 0; t < nlow; ++t) {
            for (int c = 0; c < 3; ++c) {
                PackedBits g(n);
                for (size_t i = 0; i < n; ++i) g.set(i, gam[t][i].c[c] & 1);
                push_packed(w, g);
            }
        }
        for (int c = 0; c < 3; ++c) {
            PackedBits tcomp(n);
            for (size_t i = 0; i < n; ++i) tcomp.set(i, gam[nm - 1][i].c[c] & 1);
            tcomp = tcomp ^ rb[c];  // gamma_top xor r
            push_packed(w, tcomp);
        }
        for (int c = 0; c < 3; ++c) push_packed(w, rb[c]);  // lambda_q = r (XOR world)
        push_packed(w, lp);
        return w;
    });

    size_t off = 0;
    std::vector<std::array<PackedBits, 3>> gam(nlow);
    for (size_t t = 0; t < nlow; ++t)
        for (int c = 0; c < 3; ++c) gam[t][static_cast<size_t>(c)] = pop_packed(words, off, n);
    std::array<PackedBits, 3> tcomp;
    for (int c = 0; c < 3; ++c) tcomp[static_cast<size_t>(c)] = pop_packed(words, off, n);
    std::array<PackedBits, 3> lq;
    for (int c = 0; c < 3; ++c) lq[static_cast<size_t>(c)] = pop_packed(words, off, n);
    PackedBits lp = pop_packed(words, off, n);

    PackedShare out(Framework::SWIFT, ctx.id, n);
    for (int c = 0; c < 3; ++c)
        if (out.has_lam(c)) out.lam[c] = lq[static_cast<size_t>(c)];
    if (!ctx.online()) return out;

    auto m_of = [&](u32 excl_mask) {
        PackedBits prod = ones(n);
        for (int t = 0; t < nin; ++t)
            if (!(excl_mask & (1u << t))) prod = prod & ins[t]->m;
        return prod;
    };
    PackedBits y[3];
    for (int c = 0; c < 3; ++c) {
        y[c] = PackedBits(n);
        if (!holds_comp(ctx.id, c)) continue;
        for (int t = 0; t < nin; ++t) y[c] = y[c] ^ (ins[t]->lam[c] & m_of(1u << t));
        for (size_t t = 0; t < nlow; ++t) {
            u32 mask = 0;
            for (int ix : mono[t]) mask |= (1u << ix);
            y[c] = y[c] ^ (gam[t][static_cast<size_t>(c)] & m_of(mask));
        }
        y[c] = y[c] ^ tcomp[static_cast<size_t>(c)];
    }
    auto y0got = jsnd_bits(ctx, kP1, kP3, kP2, y[0], n);
    auto y1got = jsnd_bits(ctx, kP2, kP3, kP1, y[1], n);
    if (ctx.id == kP2) y[0] = y0got;
    if (ctx.id == kP1) y[1] = y1got;
    PackedBits m_p(n);
    if (ctx.id != kP3) m_p = y[0] ^ y[1] ^ y[2] ^ m_of(0) ^ lp;
    auto got = jsnd_bits(ctx, kP1, kP2, kP3, m_p, n, /*defer=*/true);
    if (ctx.id == kP3) m_p = got;
    out.m = m_p;
    if (out.has_lam(2)) out.lam[2] = out.lam[2] ^ lp;
    return out;
}

std::optional<std::vector<u64>> SwiftEngine::reconstruct_fair(PartyCtx& ctx, SpanS shares) {
    ctx.set_gate(ctx.next_gate());
    const Ring& r = ctx.ring;
    size_t cnt = shares.size();
    // Preprocessing: pairwise commitments on the lambda component missing at
    // the third party, delivered via jsnd.
    struct ComState {
        std::array<u8, 16> rnd{};
        Digest received{};
    };
    std::array<ComState, 3> cs;
    Phase prev = ctx.phase();
    ctx.set_phase(Phase::Pre);
    for (int c = 0; c < 3; ++c) {
        int t = third_of(c);
        std::vector<u8> payload;
        if (holds_comp(ctx.id, c)) {
            PrfStream s = ctx.stream(kCompMask[c], "frc_rnd" + std::to_string(c));
            s.fill_bytes(cs[static_cast<size_t>(c)].rnd.data(), 16);
            std::vector<u64> lam(cnt);
            for (size_t i = 0; i < cnt; ++i) lam[i] = shares[i].lam[c];
            payload = pack_ring_vec(r, lam);
            Commitment com = commit(payload, cs[static_cast<size_t>(c)].rnd);
            payload.assign(com.digest.begin(), com.digest.end());
        } else {
            payload.resize(32);
        }
        auto got = ctx.jsnd(kHeld[c][0], kHeld[c][1], t, payload, 8 * payload.size());
        if (ctx.id == t)
            std::copy(got->begin(), got->end(), cs[static_cast<size_t>(c)].received.begin());
    }
    ctx.set_phase(prev);
    if (!ctx.online()) return std::nullopt;

    // Aliveness: verification outcome exchanged in one online round; the
    // majority bit decides whether anyone opens.
    ctx.run_verify();
    u8 my_bit = ctx.abort_flag ? 1 : 0;
    int abort_votes = my_bit;
    for (int p = 0; p < 3; ++p)
        if (p != ctx.id) ctx.send(p, std::vector<u8>{my_bit}, 1);
    for (int p = 0; p < 3; ++p) {
        if (p == ctx.id) continue;
        auto got = ctx.recv_opt(p);
        if (!got || got->empty() || (*got)[0] != 0) abort_votes++;
    }
    if (abort_votes >= 2) return std::nullopt;

    // Openings: both holders open toward the third party; any opening that
    // verifies against the committed digest yields the missing share.
    std::vector<u64> lam[3];
    for (int c = 0; c < 3; ++c) {
        lam[c].assign(cnt, 0);
        for (size_t i = 0; i < cnt; ++i) lam[c][i] = shares[i].lam[c];
    }
    size_t open_len = cnt * wire_bytes(r) + 16;
    for (int c = 0; c < 3; ++c) {
        int t = third_of(c);
        if (holds_comp(ctx.id, c)) {
            std::vector<u8> open = pack_ring_vec(r, lam[c]);
            open.insert(open.end(), cs[static_cast<size_t>(c)].rnd.begin(),
                        cs[static_cast<size_t>(c)].rnd.end());
            ctx.send(t, open, 8 * open.size());
        }
        if (ctx.id == t) {
            bool ok = false;
            Commitment com{cs[static_cast<size_t>(c)].received};
            for (int h = 0; h < 2; ++h) {
                auto got = ctx.recv_opt(kHeld[c][h]);
                if (!got || got->size() != open_len || ok) continue;
                Opening o;
                o.value.assign(got->begin(), got->end() - 16);
                std::copy(got->end() - 16, got->end(), o.randomness.begin());
                if (verify(com, o)) {
                    lam[c] = unpack_ring_vec(r, o.value, cnt);
                    ok = true;
                }
            }
            if (!ok) return std::nullopt;
        }
    }
    std::vector<u64> v(cnt);
    for (size_t i = 0; i < cnt; ++i)
        v[i] = r.sub(shares[i].m, r.add(r.add(lam[0][i], lam[1][i]), lam[2][i]));
    return v;
}

}  // namespace

Engine& instance() {
    static SwiftEngine e;
    return e;
}

const int* held_comps(int id) { return kHeld[id]; }

std::vector<TrPair> trgen(PartyCtx& ctx, size_t cnt) {
    ctx.set_gate(ctx.next_gate());
    auto words = ctx.pre([&] {
        std::vector<u64> w;
        trgen_material(ctx, w, cnt);
        return w;
    });
    std::vector<TrPair> out(cnt);
    for (size_t i = 0; i < cnt; ++i) out[i] = read_trpair(ctx, words.data() + 9 * i);
    return out;
}

Share rt_signed(PartyCtx& ctx, const TrPair& t) {
    const Ring& r = ctx.ring;
    unsigned sh = r.ell - ctx.fx.frac_bits;
    u64 corr = sh >= 64 ? 0 : r.reduce(1ULL << sh);
    return sub(r, t.rt_logical, scale(r, corr, t.msb_r));
}

}  // namespace swift3
}  // namespace mpckit
