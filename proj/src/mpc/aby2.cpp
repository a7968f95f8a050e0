#include "mpc/aby2.hpp"

#include "mpc/provider.hpp"

namespace mpckit {
namespace aby2 {

namespace {

constexpr SubsetMask kMOwn1 = 0b01;
constexpr SubsetMask kMOwn2 = 0b10;
constexpr SubsetMask kMBoth = 0b11;

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

class Aby2Engine final : public Engine {
   public:
    Framework fw() const override { return Framework::ABY2; }
    int n_slots() const override { return 2; }
    SubsetMask slot_holders(int slot) const override {
        return slot == 0 ? subset_of({kP1}) : subset_of({kP2});
    }

    ShareVec input(PartyCtx& ctx, int dealer, size_t cnt, const u64* vals) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        int other = 1 - dealer;
        SubsetMask own_mask = static_cast<SubsetMask>(1u << dealer);
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            // the dealer's own part stays private; the other part is joint so
            // the dealer learns the full mask
            std::vector<u64> own, joint;
            if (ctx.id == dealer) own = ctx.stream(own_mask, "lam_own").draw(r, cnt);
            joint = ctx.stream(kMBoth, "lam_joint").draw(r, cnt);
            for (size_t i = 0; i < cnt; ++i) {
                if (ctx.id == dealer) w.push_back(own[i]);
                w.push_back(joint[i]);
            }
            return w;
        });
        ShareVec out(cnt, make_view(Framework::ABY2, ctx.id));
        size_t stride = ctx.id == dealer ? 2 : 1;
        for (size_t i = 0; i < cnt; ++i) {
            if (ctx.id == dealer)
                out[i].lam[dealer] = words[i * stride];
            else
                out[i].lam[other] = words[i * stride];
        }
        if (!ctx.online()) return out;
        if (ctx.id == dealer) {
            std::vector<u64> m(cnt);
            for (size_t i = 0; i < cnt; ++i) {
                m[i] = r.add(vals[i], r.add(words[i * stride], words[i * stride + 1]));
                out[i].m = m[i];
            }
            send_ring_vec(ctx, other, m);
        } else {
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
        std::vector<u64> own(cnt);
        for (size_t i = 0; i < cnt; ++i) own[i] = shares[i].lam[ctx.id];
        send_ring_vec(ctx, 1 - ctx.id, own);
        auto peer = recv_ring_vec(ctx, 1 - ctx.id, cnt);
        std::vector<u64> v(cnt);
        for (size_t i = 0; i < cnt; ++i)
            v[i] = r.sub(shares[i].m, r.add(own[i], peer[i]));
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
        size_t total = 0;
        for (size_t i = 0; i < k; ++i) {
            if (as[i].size() != bs[i].size() || as[i].empty())
                throw std::invalid_argument("dotp: length mismatch");
            total += as[i].size();
        }
        auto words = ctx.pre([&] {
            std::vector<u64> body;
            body.reserve(2 * total);
            for (size_t i = 0; i < k; ++i)
                for (const auto& s : as[i]) body.push_back(s.lam[ctx.id]);
            for (size_t i = 0; i < k; ++i)
                for (const auto& s : bs[i]) body.push_back(s.lam[ctx.id]);
            return provider_round(ctx, ProviderOp::MulPre2, r.ell, total, 1, body, total);
        });
        // online: one additive term per dot product, then a single resharing
        std::vector<std::vector<u64>> slot_vals(2, std::vector<u64>(k, 0));
        auto& z = slot_vals[static_cast<size_t>(ctx.id)];
        size_t off = 0;
        for (size_t i = 0; i < k; ++i) {
            u64 acc = 0;
            for (size_t t = 0; t < as[i].size(); ++t) {
                const Share& x = as[i][t];
                const Share& y = bs[i][t];
                if (ctx.id == kP1) acc = r.add(acc, r.mul(x.m, y.m));
                acc = r.sub(acc, r.add(r.mul(x.lam[ctx.id], y.m), r.mul(y.lam[ctx.id], x.m)));
                acc = r.add(acc, words[off++]);
            }
            z[i] = trunc ? r.trunc(acc, ctx.fx.frac_bits) : acc;
        }
        return reshare_tagged(ctx, k, slot_vals, "dp");
    }

    ShareVec scale_trunc(PartyCtx& ctx, u64 alpha, SpanS v) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = v.size();
        std::vector<std::vector<u64>> slot_vals(2, std::vector<u64>(cnt, 0));
        auto& mine = slot_vals[static_cast<size_t>(ctx.id)];
        for (size_t i = 0; i < cnt; ++i) {
            u64 beta = ctx.id == kP1 ? r.mul(alpha, r.sub(v[i].m, v[i].lam[0]))
                                     : r.mul(alpha, r.neg(v[i].lam[1]));
            mine[i] = r.trunc(beta, ctx.fx.frac_bits);
        }
        return reshare_tagged(ctx, cnt, slot_vals, "st");
    }

    ShareVec reshare_slots(PartyCtx& ctx, size_t cnt,
                           const std::vector<std::vector<u64>>& slot_vals) override {
        ctx.set_gate(ctx.next_gate());
        return reshare_tagged(ctx, cnt, slot_vals, "rs");
    }

    PackedShare bool_input(PartyCtx& ctx, int dealer, size_t nbits,
                           const PackedBits* bits) override {
        ctx.set_gate(ctx.next_gate());
        int other = 1 - dealer;
        SubsetMask own_mask = static_cast<SubsetMask>(1u << dealer);
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            if (ctx.id == dealer) push_packed(w, sample_bits(ctx.stream(own_mask, "blam_own"), nbits));
            push_packed(w, sample_bits(ctx.stream(kMBoth, "blam_joint"), nbits));
            return w;
        });
        size_t off = 0;
        PackedShare out(Framework::ABY2, ctx.id, nbits);
        PackedBits own(nbits), joint(nbits);
        if (ctx.id == dealer) own = pop_packed(words, off, nbits);
        joint = pop_packed(words, off, nbits);
        out.lam[ctx.id == dealer ? dealer : other] = ctx.id == dealer ? own : joint;
        if (!ctx.online()) return out;
        if (ctx.id == dealer) {
            out.m = *bits ^ own ^ joint;
            send_bits(ctx, other, out.m);
        } else {
            out.m = recv_bits(ctx, dealer, nbits);
        }
        return out;
    }

    std::optional<PackedBits> bool_reconstruct(PartyCtx& ctx, const PackedShare& s) override {
        send_bits(ctx, 1 - ctx.id, s.lam[ctx.id]);
        PackedBits peer = recv_bits(ctx, 1 - ctx.id, s.n);
        return s.m ^ s.lam[ctx.id] ^ peer;
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
        std::vector<std::vector<PackedShare>> out(2);
        // Summand 1: -lambda^2, shared by P2 in the preprocessing at no cost.
        std::vector<PackedBits> v2bits(ell, PackedBits(cnt));
        if (ctx.id == kP2) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 v2 = r.neg(v[i].lam[1]);
                for (size_t j = 0; j < ell; ++j) v2bits[j].set(i, (v2 >> j) & 1);
            }
        }
        out[1] = bool_share_pre_matrix(ctx, "bsum2", kP2, v2bits, cnt, ell);
        // Summand 0: m_v - lambda^1, shared by P1 in the online phase.
        std::vector<PackedBits> v1bits(ell, PackedBits(cnt));
        if (ctx.id == kP1) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 v1 = r.sub(v[i].m, v[i].lam[0]);
                for (size_t j = 0; j < ell; ++j) v1bits[j].set(i, (v1 >> j) & 1);
            }
        }
        out[0] = bool_share_online_matrix(ctx, "bsum1", kP1, v1bits, cnt, ell);
        return out;
    }

    std::pair<std::vector<PackedShare>, std::vector<PackedShare>> bool_eq_split(
        PartyCtx& ctx, SpanS y) override {
        ctx.set_gate(ctx.next_gate());
        const Ring& r = ctx.ring;
        size_t cnt = y.size(), ell = r.ell;
        std::vector<PackedBits> y2bits(ell, PackedBits(cnt));
        if (ctx.id == kP2) {
            for (size_t i = 0; i < cnt; ++i)
                for (size_t j = 0; j < ell; ++j) y2bits[j].set(i, (y[i].lam[1] >> j) & 1);
        }
        auto y2 = bool_share_pre_matrix(ctx, "eq2", kP2, y2bits, cnt, ell);
        std::vector<PackedBits> y1bits(ell, PackedBits(cnt));
        if (ctx.id == kP1) {
            for (size_t i = 0; i < cnt; ++i) {
                u64 v1 = r.sub(y[i].m, y[i].lam[0]);
                for (size_t j = 0; j < ell; ++j) y1bits[j].set(i, (v1 >> j) & 1);
            }
        }
        auto y1 = bool_share_online_matrix(ctx, "eq1", kP1, y1bits, cnt, ell);
        return {std::move(y1), std::move(y2)};
    }

   private:
    ShareVec muln(PartyCtx& ctx, std::vector<SpanS> ins, bool trunc);
    PackedShare andn(PartyCtx& ctx, std::vector<const PackedShare*> ins);

    // Fused Pi_Sh(P1, y1) + Pi_Sh(P2, y2): output = [[y1]] + [[y2]].
    ShareVec reshare_tagged(PartyCtx& ctx, size_t cnt,
                            const std::vector<std::vector<u64>>& slot_vals,
                            const std::string& tag) {
        const Ring& r = ctx.ring;
        auto words = ctx.pre([&] {
            std::vector<u64> w;
            // lambda of P1's sharing: part1 private to P1, part2 joint;
            // lambda of P2's sharing: part2 private to P2, part1 joint.
            std::vector<u64> a1, a2, b1, b2;
            if (ctx.id == kP1) a1 = ctx.stream(kMOwn1, tag + "_a1").draw(r, cnt);
            a2 = ctx.stream(kMBoth, tag + "_a2").draw(r, cnt);
            if (ctx.id == kP2) b2 = ctx.stream(kMOwn2, tag + "_b2").draw(r, cnt);
            b1 = ctx.stream(kMBoth, tag + "_b1").draw(r, cnt);
            for (size_t i = 0; i < cnt; ++i) {
                if (!a1.empty()) w.push_back(a1[i]);
                w.push_back(a2[i]);
                if (!b2.empty()) w.push_back(b2[i]);
                w.push_back(b1[i]);
            }
            return w;
        });
        size_t stride = 3;
        ShareVec out(cnt, make_view(Framework::ABY2, ctx.id));
        std::vector<u64> lam_own(cnt);
        for (size_t i = 0; i < cnt; ++i) {
            const u64* rec = words.data() + i * stride;
            if (ctx.id == kP1) {  // [a1, a2, b1]
                out[i].lam[0] = r.add(rec[0], rec[2]);
                lam_own[i] = r.add(rec[0], rec[1]);
            } else {  // [a2, b2, b1]
                out[i].lam[1] = r.add(rec[0], rec[1]);
                lam_own[i] = r.add(rec[1], rec[2]);
            }
        }
        if (!ctx.online()) return out;
        std::vector<u64> m_own(cnt);
        const auto& mine = slot_vals[static_cast<size_t>(ctx.id)];
        for (size_t i = 0; i < cnt; ++i) m_own[i] = r.add(mine[i], lam_own[i]);
        send_ring_vec(ctx, 1 - ctx.id, m_own);
        auto m_peer = recv_ring_vec(ctx, 1 - ctx.id, cnt);
        for (size_t i = 0; i < cnt; ++i) out[i].m = r.add(m_own[i], m_peer[i]);
        return out;
    }

    // Preprocessing boolean sharing by `owner`, zero communication.
    std::vector<PackedShare> bool_share_pre_matrix(PartyCtx& ctx, const std::string& tag,
                                                   int owner, const std::vector<PackedBits>& bits,
                                                   size_t cnt, size_t nbits) {
        Phase prev = ctx.phase();
        ctx.set_phase(Phase::Pre);
        PrfStream s = ctx.stream(kMBoth, tag);
        std::vector<PackedShare> out(nbits, PackedShare(Framework::ABY2, ctx.id, cnt));
        for (size_t j = 0; j < nbits; ++j) {
            PackedBits joint(cnt);
            s.fill_words(joint.w.data(), joint.w.size());
            joint.mask_tail();
            if (ctx.id == owner)
                out[j].lam[owner] = bits[j] ^ joint;
            else
                out[j].lam[1 - owner] = joint;
        }
        ctx.set_phase(prev);
        return out;
    }

    // Online boolean sharing by `owner` (mask pre-sampled, masked bits sent).
    std::vector<PackedShare> bool_share_online_matrix(PartyCtx& ctx, const std::string& tag,
                                                      int owner,
                                                      const std::vector<PackedBits>& bits,
                                                      size_t cnt, size_t nbits) {
        Phase prev = ctx.phase();
        ctx.set_phase(Phase::Pre);
        PrfStream sown = ctx.stream(static_cast<SubsetMask>(1u << owner), tag + "_own");
        PrfStream sj = ctx.stream(kMBoth, tag + "_joint");
        std::vector<PackedBits> lown(nbits, PackedBits(cnt)), ljoint(nbits, PackedBits(cnt));
        for (size_t j = 0; j < nbits; ++j) {
            if (ctx.id == owner) {
                sown.fill_words(lown[j].w.data(), lown[j].w.size());
                lown[j].mask_tail();
            }
            sj.fill_words(ljoint[j].w.data(), ljoint[j].w.size());
            ljoint[j].mask_tail();
        }
        ctx.set_phase(prev);
        std::vector<PackedShare> out(nbits, PackedShare(Framework::ABY2, ctx.id, cnt));
        for (size_t j = 0; j < nbits; ++j)
            out[j].lam[ctx.id] = ctx.id == owner ? lown[j] : ljoint[j];
        if (!ctx.online()) return out;
        if (ctx.id == owner) {
            std::vector<u8> flat;
            for (size_t j = 0; j < nbits; ++j) {
                out[j].m = bits[j] ^ lown[j] ^ ljoint[j];
                auto bytes = pack_bits(out[j].m);
                flat.insert(flat.end(), bytes.begin(), bytes.end());
            }
            ctx.send(1 - owner, flat, nbits * cnt);
        } else {
            auto flat = ctx.recv(owner, nbits * ((cnt + 7) / 8));
            size_t per = (cnt + 7) / 8;
            for (size_t j = 0; j < nbits; ++j)
                out[j].m = unpack_bits(
                    std::vector<u8>(flat.begin() + static_cast<long>(j * per),
                                    flat.begin() + static_cast<long>((j + 1) * per)),
                    cnt);
        }
        return out;
    }

    friend ShareVec aby2::mul_local(PartyCtx&, SpanS, SpanS);
};

ShareVec Aby2Engine::muln(PartyCtx& ctx, std::vector<SpanS> ins, bool trunc) {
    for (auto& s : ins)
        if (s.size() != ins[0].size()) throw std::invalid_argument("mul: size mismatch");
    ctx.set_gate(ctx.next_gate());
    const Ring& r = ctx.ring;
    int nin = static_cast<int>(ins.size());
    size_t cnt = ins[0].size();
    auto mono = monomials(nin);
    size_t nm = mono.size();
    auto words = ctx.pre([&] {
        // Round 1: pairwise gamma monomials; round 2 (fan-in > 2): higher
        // monomials from the pairwise ones.
        std::vector<std::vector<u64>> gam(nm);
        size_t npairs = 0;
        {
            std::vector<u64> body;
            for (size_t t = 0; t < nm; ++t) {
                if (mono[t].size() != 2) continue;
                npairs++;
            }
            for (size_t t = 0; t < npairs; ++t)
                for (size_t i = 0; i < cnt; ++i) body.push_back(ins[mono[t][0]][i].lam[ctx.id]);
            for (size_t t = 0; t < npairs; ++t)
                for (size_t i = 0; i < cnt; ++i) body.push_back(ins[mono[t][1]][i].lam[ctx.id]);
            auto rep = provider_round(ctx, ProviderOp::MulPre2, r.ell, npairs * cnt, 1, body,
                                      npairs * cnt);
            for (size_t t = 0; t < npairs; ++t)
                gam[t] = std::vector<u64>(rep.begin() + static_cast<long>(t * cnt),
                                          rep.begin() + static_cast<long>((t + 1) * cnt));
        }
        if (nin >= 3) {
            // express each higher monomial as (pair gamma) * (remaining mask
            // or pair gamma), all additively shared
            struct Item {
                size_t dst;
                std::vector<u64> a, b;
            };
            std::vector<Item> items;
            auto pair_index = [&](int x, int y) {
                for (size_t t = 0; t < nm; ++t)
                    if (mono[t].size() == 2 && mono[t][0] == std::min(x, y) &&
                        mono[t][1] == std::max(x, y))
                        return t;
                throw std::logic_error("pair not found");
            };
            for (size_t t = 0; t < nm; ++t) {
                if (mono[t].size() == 3) {
                    size_t p = pair_index(mono[t][0], mono[t][1]);
                    Item it;
                    it.dst = t;
                    it.a = gam[p];
                    it.b.resize(cnt);
                    for (size_t i = 0; i < cnt; ++i) it.b[i] = ins[mono[t][2]][i].lam[ctx.id];
                    items.push_back(std::move(it));
                } else if (mono[t].size() == 4) {
                    size_t p = pair_index(mono[t][0], mono[t][1]);
                    size_t q = pair_index(mono[t][2], mono[t][3]);
                    items.push_back(Item{t, gam[p], gam[q]});
                }
            }
            std::vector<u64> body;
            for (auto& it : items) body.insert(body.end(), it.a.begin(), it.a.end());
            for (auto& it : items) body.insert(body.end(), it.b.begin(), it.b.end());
            auto rep = provider_round(ctx, ProviderOp::MulPre2, r.ell, items.size() * cnt, 1, body,
                                      items.size() * cnt);
            for (size_t x = 0; x < items.size(); ++x)
                gam[items[x].dst] =
                    std::vector<u64>(rep.begin() + static_cast<long>(x * cnt),
                                     rep.begin() + static_cast<long>((x + 1) * cnt));
        }
        std::vector<u64> w;
        for (size_t i = 0; i < cnt; ++i)
            for (size_t t = 0; t < nm; ++t) w.push_back(gam[t][i]);
        return w;
    });

    std::vector<std::vector<u64>> slot_vals(2, std::vector<u64>(cnt, 0));
    auto& z = slot_vals[static_cast<size_t>(ctx.id)];
    for (size_t i = 0; i < cnt; ++i) {
        const u64* rec = words.data() + i * nm;
        auto m_of = [&](u32 excl_mask) {
            u64 prod = 1;
            for (int t = 0; t < nin; ++t)
                if (!(excl_mask & (1u << t))) prod = r.mul(prod, ins[t][i].m);
            return prod;
        };
        u64 acc = ctx.id == kP1 ? m_of(0) : 0;
        for (int t = 0; t < nin; ++t)
            acc = r.sub(acc, r.mul(ins[t][i].lam[ctx.id], m_of(1u << t)));
        for (size_t t = 0; t < nm; ++t) {
            u32 mask = 0;
            for (int ix : mono[t]) mask |= (1u << ix);
            u64 term = r.mul(rec[t], m_of(mask));
            acc = (mono[t].size() % 2 == 0) ? r.add(acc, term) : r.sub(acc, term);
        }
        z[i] = trunc ? r.trunc(acc, ctx.fx.frac_bits) : acc;
    }
    return reshare_tagged(ctx, cnt, slot_vals, "ml");
}

PackedShare Aby2Engine::andn(PartyCtx& ctx, std::vector<const PackedShare*> ins) {
    ctx.set_gate(ctx.next_gate());
    int nin = static_cast<int>(ins.size());
    size_t n = ins[0]->n;
    auto mono = monomials(nin);
    size_t nm = mono.size();
    auto bits_of = [&](const PackedBits& b) {
        std::vector<u64> v(b.n);
        for (size_t i = 0; i < b.n; ++i) v[i] = b.get(i) ? 1 : 0;
        return v;
    };
    auto to_packed = [&](const std::vector<u64>& v, size_t off, size_t len) {
        PackedBits b(len);
        for (size_t i = 0; i < len; ++i) b.set(i, v[off + i] & 1);
        return b;
    };
    auto words = ctx.pre([&] {
        std::vector<PackedBits> gam(nm, PackedBits(n));
        size_t npairs = 0;
        for (auto& m : mono)
            if (m.size() == 2) npairs++;
        {
            std::vector<u64> body;
            for (size_t t = 0; t < npairs; ++t) {
                auto v = bits_of(ins[mono[t][0]]->lam[ctx.id]);
                body.insert(body.end(), v.begin(), v.end());
            }
            for (size_t t = 0; t < npairs; ++t) {
                auto v = bits_of(ins[mono[t][1]]->lam[ctx.id]);
                body.insert(body.end(), v.begin(), v.end());
            }
            auto rep = provider_round(ctx, ProviderOp::MulPre2, 1, npairs * n, 1, body, npairs * n);
            for (size_t t = 0; t < npairs; ++t) gam[t] = to_packed(rep, t * n, n);
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
            std::vector<u64> abody, bbody;
            for (size_t t = 0; t < nm; ++t) {
                if (mono[t].size() == 3) {
                    auto va = bits_of(gam[pair_index(mono[t][0], mono[t][1])]);
                    auto vb = bits_of(ins[mono[t][2]]->lam[ctx.id]);
                    abody.insert(abody.end(), va.begin(), va.end());
                    bbody.insert(bbody.end(), vb.begin(), vb.end());
                    dst.push_back(t);
                } else if (mono[t].size() == 4) {
                    auto va = bits_of(gam[pair_index(mono[t][0], mono[t][1])]);
                    auto vb = bits_of(gam[pair_index(mono[t][2], mono[t][3])]);
                    abody.insert(abody.end(), va.begin(), va.end());
                    bbody.insert(bbody.end(), vb.begin(), vb.end());
                    dst.push_back(t);
                }
            }
            abody.insert(abody.end(), bbody.begin(), bbody.end());
            auto rep = provider_round(ctx, ProviderOp::MulPre2, 1, dst.size() * n, 1, abody,
                                      dst.size() * n);
            for (size_t x = 0; x < dst.size(); ++x) gam[dst[x]] = to_packed(rep, x * n, n);
        }
        std::vector<u64> w;
        for (size_t t = 0; t < nm; ++t) push_packed(w, gam[t]);
        return w;
    });
    size_t off = 0;
    std::vector<PackedBits> gam(nm);
    for (size_t t = 0; t < nm; ++t) gam[t] = pop_packed(words, off, n);

    auto m_of = [&](u32 excl_mask) {
        PackedBits prod = ones(n);
        for (int t = 0; t < nin; ++t)
            if (!(excl_mask & (1u << t))) prod = prod & ins[t]->m;
        return prod;
    };
    PackedBits z(n);
    if (ctx.id == kP1) z = m_of(0);
    for (int t = 0; t < nin; ++t) z = z ^ (ins[t]->lam[ctx.id] & m_of(1u << t));
    for (size_t t = 0; t < nm; ++t) {
        u32 mask = 0;
        for (int ix : mono[t]) mask |= (1u << ix);
        z = z ^ (gam[t] & m_of(mask));
    }
    // boolean resharing of the two additive parts
    Phase prev = ctx.phase();
    ctx.set_phase(Phase::Pre);
    PackedBits a1(n), a2(n), b1(n), b2(n);
    if (ctx.id == kP1) a1 = sample_bits(ctx.stream(kMOwn1, "ba1"), n);
    a2 = sample_bits(ctx.stream(kMBoth, "ba2"), n);
    if (ctx.id == kP2) b2 = sample_bits(ctx.stream(kMOwn2, "bb2"), n);
    b1 = sample_bits(ctx.stream(kMBoth, "bb1"), n);
    ctx.set_phase(prev);
    PackedShare out(Framework::ABY2, ctx.id, n);
    PackedBits m_own(n);
    if (ctx.id == kP1) {
        out.lam[0] = a1 ^ b1;
        m_own = z ^ a1 ^ a2;
    } else {
        out.lam[1] = a2 ^ b2;
        m_own = z ^ b1 ^ b2;
    }
    send_bits(ctx, 1 - ctx.id, m_own);
    PackedBits m_peer = recv_bits(ctx, 1 - ctx.id, n);
    out.m = m_own ^ m_peer;
    return out;
}

}  // namespace

Engine& instance() {
    static Aby2Engine e;
    return e;
}

ShareVec mul_local(PartyCtx& ctx, SpanS a, SpanS b) {
    ctx.set_gate(ctx.next_gate());
    const Ring& r = ctx.ring;
    size_t cnt = a.size();
    auto gamma = ctx.pre([&] {
        std::vector<u64> body;
        for (size_t i = 0; i < cnt; ++i) body.push_back(a[i].lam[ctx.id]);
        for (size_t i = 0; i < cnt; ++i) body.push_back(b[i].lam[ctx.id]);
        return provider_round(ctx, ProviderOp::MulPre2, r.ell, cnt, 1, body, cnt);
    });
    ShareVec out(cnt, make_view(Framework::ABY2, ctx.id));
    for (size_t i = 0; i < cnt; ++i) {
        u64 z = 0;
        if (ctx.id == kP1) z = r.mul(a[i].m, b[i].m);
        z = r.sub(z, r.add(r.mul(a[i].lam[ctx.id], b[i].m), r.mul(b[i].lam[ctx.id], a[i].m)));
        z = r.add(z, gamma[i]);
        out[i].m = 0;
        out[i].lam[ctx.id] = r.neg(z);
    }
    return out;
}

ShareVec share_pre(PartyCtx& ctx, const std::string& tag, int owner, const std::vector<u64>& vals,
                   size_t cnt) {
    const Ring& r = ctx.ring;
    Phase prev = ctx.phase();
    ctx.set_phase(Phase::Pre);
    auto joint = ctx.stream(kMBoth, tag).draw(r, cnt);
    ctx.set_phase(prev);
    ShareVec out(cnt, make_view(Framework::ABY2, ctx.id));
    for (size_t i = 0; i < cnt; ++i) {
        out[i].m = 0;
        if (ctx.id == owner)
            out[i].lam[owner] = r.neg(r.add(vals[i], joint[i]));
        else
            out[i].lam[1 - owner] = joint[i];
    }
    return out;
}

}  // namespace aby2
}  // namespace mpckit
