#include "mpc/provider.hpp"

namespace mpckit {

namespace {

struct Req {
    ProviderOp op;
    unsigned ell = 64;
    u64 k = 0;  // number of outputs
    u64 len = 0;  // segment length (dot products); 1 for pointwise ops
    std::vector<u64> elems;
};

std::vector<u8> encode_req(ProviderOp op, unsigned ell, u64 k, u64 len,
                           const std::vector<u64>& elems) {
    Ring r(ell);
    std::vector<u8> out;
    out.push_back(static_cast<u8>(op));
    out.push_back(static_cast<u8>(ell));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<u8>(k >> (8 * i)));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<u8>(len >> (8 * i)));
    for (u64 e : elems) append_ring(out, r, e);
    return out;
}

Req decode_req(const std::vector<u8>& buf) {
    Req q;
    q.op = static_cast<ProviderOp>(buf[0]);
    if (q.op == ProviderOp::Finish) return q;
    q.ell = buf[1];
    for (int i = 0; i < 8; ++i) q.k |= static_cast<u64>(buf[2 + i]) << (8 * i);
    for (int i = 0; i < 8; ++i) q.len |= static_cast<u64>(buf[10 + i]) << (8 * i);
    Ring r(q.ell);
    size_t off = 18;
    size_t wb = wire_bytes(r);
    while (off + wb <= buf.size()) {
        q.elems.push_back(read_ring(r, buf.data() + off));
        off += wb;
    }
    return q;
}

std::vector<u8> encode_elems(const Ring& r, const std::vector<u64>& elems) {
    std::vector<u8> out;
    for (u64 e : elems) append_ring(out, r, e);
    return out;
}

std::vector<u64> decode_elems(const Ring& r, const std::vector<u8>& buf) {
    std::vector<u64> out;
    size_t wb = wire_bytes(r);
    for (size_t off = 0; off + wb <= buf.size(); off += wb)
        out.push_back(read_ring(r, buf.data() + off));
    return out;
}

}  // namespace

std::vector<u64> provider_round(PartyCtx& ctx, ProviderOp op, unsigned ell, u64 k, u64 len,
                                const std::vector<u64>& body, size_t reply_elems) {
    Ring r(ell);
    auto reply =
        ctx.provider_call(encode_req(op, ell, k, len, body), reply_elems * wire_bytes(r));
    return decode_elems(r, reply);
}

void run_provider_loop(Framework fw, int n_parties, const KeyGraph& keys, Transport& tr,
                       int provider_index) {
    (void)fw;
    u64 call_ctr = 0;
    auto reply_to = [&](int party, const Ring& r, const std::vector<u64>& elems) {
        Envelope e;
        e.sender = static_cast<u8>(provider_index);
        e.receiver = static_cast<u8>(party);
        e.phase = Phase::Pre;
        e.payload = encode_elems(r, elems);
        e.bits = 8 * e.payload.size();
        tr.send(std::move(e));
    };

    for (;;) {
        auto first = tr.recv(provider_index, 0);
        if (!first) return;
        Req q0 = decode_req(first->payload);
        if (q0.op == ProviderOp::Finish) {
            for (int p = 1; p < n_parties; ++p) tr.recv(provider_index, p);
            return;
        }
        std::vector<Req> reqs(static_cast<size_t>(n_parties));
        reqs[0] = q0;
        for (int p = 1; p < n_parties; ++p) {
            auto env = tr.recv(provider_index, p);
            if (!env) return;
            reqs[static_cast<size_t>(p)] = decode_req(env->payload);
        }
        Ring r(q0.ell);
        PrfStream rnd(keys.key(kProviderMask), "prov/" + std::to_string(call_ctr++));

        switch (q0.op) {
            case ProviderOp::DotpPre3: {
                // Replicated components: P1 sends (c0,c2) of u then v; P2
                // (c1,c2); P3 (c0,c1). Output <w> dealt the same way.
                u64 k = q0.k, L = q0.len;
                size_t seg = static_cast<size_t>(k * L);
                auto& a = reqs[0].elems;  // u_c0 | u_c2 | v_c0 | v_c2
                auto& b = reqs[1].elems;  // u_c1 | u_c2 | v_c1 | v_c2
                std::vector<u64> w(static_cast<size_t>(k), 0);
                for (u64 i = 0; i < k; ++i) {
                    for (u64 j = 0; j < L; ++j) {
                        size_t t = static_cast<size_t>(i * L + j);
                        u64 u = r.add(r.add(a[t], b[t]), a[seg + t]);
                        u64 v = r.add(r.add(a[2 * seg + t], b[2 * seg + t]), a[3 * seg + t]);
                        w[static_cast<size_t>(i)] = r.add(w[static_cast<size_t>(i)], r.mul(u, v));
                    }
                }
                std::vector<u64> w0(static_cast<size_t>(k)), w1(static_cast<size_t>(k)),
                    w2(static_cast<size_t>(k));
                for (u64 i = 0; i < k; ++i) {
                    w0[i] = rnd.draw_one(r);
                    w1[i] = rnd.draw_one(r);
                    w2[i] = r.sub(r.sub(w[i], w0[i]), w1[i]);
                }
                auto cat = [](std::vector<u64> x, const std::vector<u64>& y) {
                    x.insert(x.end(), y.begin(), y.end());
                    return x;
                };
                reply_to(0, r, cat(w0, w2));
                reply_to(1, r, cat(w1, w2));
                reply_to(2, r, cat(w0, w1));
                break;
            }
            case ProviderOp::Prod2: {
                u64 k = q0.k;
                auto& x = reqs[0].elems;
                auto& y = reqs[1].elems;
                std::vector<u64> z0(static_cast<size_t>(k)), z1(static_cast<size_t>(k));
                for (u64 i = 0; i < k; ++i) {
                    u64 z = r.mul(x[i], y[i]);
                    z0[i] = rnd.draw_one(r);
                    z1[i] = r.sub(z, z0[i]);
                }
                reply_to(0, r, z0);
                reply_to(1, r, z1);
                break;
            }
            case ProviderOp::MulPre2: {
                u64 k = q0.k;
                auto& p0 = reqs[0].elems;  // a_1 | b_1
                auto& p1 = reqs[1].elems;  // a_2 | b_2
                std::vector<u64> g0(static_cast<size_t>(k)), g1(static_cast<size_t>(k));
                for (u64 i = 0; i < k; ++i) {
                    u64 av = r.add(p0[i], p1[i]);
                    u64 bv = r.add(p0[static_cast<size_t>(k) + i], p1[static_cast<size_t>(k) + i]);
                    u64 g = r.mul(av, bv);
                    g0[i] = rnd.draw_one(r);
                    g1[i] = r.sub(g, g0[i]);
                }
                reply_to(0, r, g0);
                reply_to(1, r, g1);
                break;
            }
            case ProviderOp::Finish:
                return;
        }
    }
}

}  // namespace mpckit
