#include "mpc/session.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "mpc/provider.hpp"

namespace mpckit {

const std::vector<u64>& PreStore::get(u64 gate) const {
    auto it = data_.find(gate);
    if (it == data_.end())
        throw std::runtime_error("preprocessing material missing for gate " + std::to_string(gate));
    return it->second;
}

void PreStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write prestore: " + path);
    auto put = [&](u64 v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put(data_.size());
    for (const auto& [gate, words] : data_) {
        put(gate);
        put(words.size());
        for (u64 w : words) put(w);
    }
}

PreStore PreStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read prestore: " + path);
    auto get = [&]() {
        u64 v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    PreStore ps;
    u64 n = get();
    for (u64 i = 0; i < n; ++i) {
        u64 gate = get();
        u64 cnt = get();
        std::vector<u64> words(cnt);
        for (auto& w : words) w = get();
        ps.data_[gate] = std::move(words);
    }
    return ps;
}

PartyCtx::PartyCtx(const SessionConfig& cfg, int id_, KeyGraph keys_, Transport& tr, Meter& meter)
    : fw(cfg.fw),
      id(id_),
      n(info(cfg.fw).n_parties),
      provider_index(info(cfg.fw).n_parties),
      ring(cfg.ell),
      fx(cfg.frac_bits),
      keys(std::move(keys_)),
      ppa_arity(cfg.ppa_arity),
      mode(cfg.mode),
      session_id(cfg.session_id),
      tr_(tr),
      meter_(meter) {}

bool PartyCtx::is_helper() const {
    return (fw == Framework::ASTRA && id == 0);
}

std::vector<u64> PartyCtx::pre(const std::function<std::vector<u64>()>& fn) {
    if (mode == PreMode::OnlineOnly) return store->get(cur_gate_);
    Phase prev = phase_;
    phase_ = Phase::Pre;
    std::vector<u64> words = fn();
    phase_ = prev;
    if (mode == PreMode::PreOnly && store) store->put(cur_gate_, words);
    return words;
}

void PartyCtx::send(int to, std::vector<u8> payload, u64 bits, bool defer_round) {
    Envelope e;
    e.session = session_id;
    e.gate = cur_gate_;
    e.phase = phase_;
    e.sender = static_cast<u8>(id);
    e.receiver = static_cast<u8>(to);
    e.bits = bits;
    e.payload = std::move(payload);
    bool in_dag = phase_ == Phase::Online && !defer_round && to != provider_index;
    e.depth = in_dag ? clock_ + 1 : 0;
    tr_.send(std::move(e));
}

std::optional<std::vector<u8>> PartyCtx::recv_opt(int from) {
    auto env = tr_.recv(id, from);
    if (!env) return std::nullopt;
    if (env->depth > 0) clock_ = std::max(clock_, env->depth);
    return std::move(env->payload);
}

std::vector<u8> PartyCtx::recv(int from, size_t expect) {
    auto p = recv_opt(from);
    if (!p) {
        abort_flag = true;
        return std::vector<u8>(expect, 0);
    }
    if (p->size() != expect) {
        abort_flag = true;
        p->resize(expect, 0);
    }
    return std::move(*p);
}

std::optional<std::vector<u8>> PartyCtx::jsnd(int i, int j, int k, const std::vector<u8>& v,
                                              u64 bits, bool defer_round) {
    auto key = std::make_tuple(i, j, k);
    jsnd_all_.insert(key);
    if (id == i) send(k, v, bits, defer_round);
    if (id == j) jsnd_as_hasher_[key].absorb(v);
    if (id == k) {
        auto payload = recv(i, v.size());
        jsnd_as_receiver_[key].absorb(payload);
        return payload;
    }
    return std::nullopt;
}

std::optional<std::vector<u8>> PartyCtx::jsnd_now(int i, int j, int k, const std::vector<u8>& v,
                                                  u64 bits) {
    if (id == i) send(k, v, bits);
    if (id == j) {
        Digest d = sha256(v);
        Phase prev = phase_;
        phase_ = Phase::Verify;
        send(k, std::vector<u8>(d.begin(), d.end()), 8 * d.size());
        phase_ = prev;
    }
    if (id == k) {
        auto payload = recv(i, v.size());
        auto hash = recv_opt(j);
        Digest own = sha256(payload);
        if (!hash || hash->size() != own.size() ||
            !std::equal(hash->begin(), hash->end(), own.begin()))
            abort_flag = true;
        return payload;
    }
    return std::nullopt;
}

bool PartyCtx::echo_abort_clear() {
    Phase prev = phase_;
    phase_ = Phase::Verify;
    u8 flag = abort_flag ? 1 : 0;
    for (int p = 0; p < n; ++p)
        if (p != id) send(p, std::vector<u8>{flag}, 1);
    for (int p = 0; p < n; ++p) {
        if (p == id) continue;
        auto got = recv_opt(p);
        if (!got || got->empty() || (*got)[0] != 0) abort_flag = true;
    }
    phase_ = prev;
    return !abort_flag;
}

void PartyCtx::tetrad_share_absorb(const std::vector<u8>& m_bytes) {
    tetrad_share_acc_.absorb(m_bytes);
    tetrad_share_any_ = true;
}

void PartyCtx::tetrad_multver_absorb(u64 value) {
    std::vector<u8> buf;
    append_ring(buf, ring, value);
    tetrad_multver_acc_.absorb(buf);
    tetrad_multver_any_ = true;
}

std::vector<u8> PartyCtx::provider_call(const std::vector<u8>& request, size_t response_bytes) {
    send(provider_index, request, 8 * request.size());
    return recv(provider_index, response_bytes);
}

void PartyCtx::provider_finish() {
    if (!info(fw).needs_provider || mode == PreMode::OnlineOnly) return;
    std::vector<u8> fin{static_cast<u8>(ProviderOp::Finish)};
    send(provider_index, fin, 8);
}

void PartyCtx::run_verify() {
    if (verify_done_) return;
    verify_done_ = true;
    Phase prev = phase_;
    phase_ = Phase::Verify;

    // 1. Deferred jsnd hashes: one digest per (ordered sender pair, receiver).
    for (const auto& key : jsnd_all_) {
        auto [i, j, k] = key;
        if (id == j) {
            auto it = jsnd_as_hasher_.find(key);
            Digest d = it == jsnd_as_hasher_.end() ? HashAccumulator().digest() : it->second.digest();
            send(k, std::vector<u8>(d.begin(), d.end()), 8 * d.size());
        }
        if (id == k) {
            auto got = recv_opt(j);
            auto it = jsnd_as_receiver_.find(key);
            Digest own = it == jsnd_as_receiver_.end() ? HashAccumulator().digest()
                                                       : it->second.digest();
            if (!got || got->size() != own.size() ||
                !std::equal(got->begin(), got->end(), own.begin()))
                abort_flag = true;
        }
    }

    // 2. Tetrad masked-value consistency: P1,P2,P3 exchange one hash over all
    //    dealer-shared m_v values; any disagreement aborts (fair variant).
    if (fw == Framework::TETRAD && tetrad_share_any_ && id >= 1) {
        Digest own = tetrad_share_acc_.digest();
        for (int p = 1; p <= 3; ++p)
            if (p != id) send(p, std::vector<u8>(own.begin(), own.end()), 8 * own.size());
        for (int p = 1; p <= 3; ++p) {
            if (p == id) continue;
            auto got = recv_opt(p);
            if (!got || got->size() != own.size() ||
                !std::equal(got->begin(), got->end(), own.begin()))
                abort_flag = true;
        }
    }

    // 3. Tetrad multiplication verification: P3 hashes its v values; P1,P2
    //    compare against their y1+y2+s stream.
    if (fw == Framework::TETRAD && tetrad_multver_any_) {
        Digest own = tetrad_multver_acc_.digest();
        if (id == 3) {
            send(1, std::vector<u8>(own.begin(), own.end()), 8 * own.size());
            send(2, std::vector<u8>(own.begin(), own.end()), 8 * own.size());
        }
        if (id == 1 || id == 2) {
            auto got = recv_opt(3);
            if (!got || got->size() != own.size() ||
                !std::equal(got->begin(), got->end(), own.begin()))
                abort_flag = true;
        }
    }

    // 4. Abort echo: a failed check at any party becomes a session-wide abort
    //    so honest parties agree on the outcome.
    if (info(fw).malicious) {
        u8 flag = abort_flag ? 1 : 0;
        for (int p = 0; p < n; ++p)
            if (p != id) send(p, std::vector<u8>{flag}, 1);
        for (int p = 0; p < n; ++p) {
            if (p == id) continue;
            auto got = recv_opt(p);
            if (!got || got->empty() || (*got)[0] != 0) abort_flag = true;
        }
    }
    phase_ = prev;
}

SessionOutput run_session(const SessionConfig& cfg, const std::vector<PartyProgram>& programs,
                          std::vector<PreStore>* stores) {
    const auto& fi = info(cfg.fw);
    int n = fi.n_parties;
    if (static_cast<int>(programs.size()) != n)
        throw std::invalid_argument("run_session: expected one program per party");
    bool with_provider = fi.needs_provider && cfg.mode != PreMode::OnlineOnly;

    auto all_keys = derive_all_keys(cfg.seed, n);
    auto meter = std::make_unique<Meter>(n + 1);
    SimTransport tr(n + 1, *meter, n, cfg.script);

    SessionOutput out;
    out.results.resize(static_cast<size_t>(n));
    for (int p = 0; p < n; ++p) tr.register_party(p);
    if (with_provider) tr.register_party(n);

    std::vector<std::thread> threads;
    for (int p = 0; p < n; ++p) {
        threads.emplace_back([&, p]() {
            PartyCtx ctx(cfg, p, key_view_for_party(all_keys, p), tr, *meter);
            if (stores) ctx.store = &(*stores)[static_cast<size_t>(p)];
            auto& res = out.results[static_cast<size_t>(p)];
            try {
                programs[static_cast<size_t>(p)](ctx, res);
                if (!ctx.verify_done() && ctx.mode != PreMode::PreOnly && info(cfg.fw).malicious)
                    ctx.run_verify();
                ctx.provider_finish();
                if (ctx.abort_flag && res.outcome == PartyResult::Outcome::Ok)
                    res.outcome = PartyResult::Outcome::Abort;
            } catch (const std::exception& e) {
                res.outcome = PartyResult::Outcome::Error;
                res.error = e.what();
            }
            tr.finish(p);
        });
    }
    if (with_provider) {
        threads.emplace_back([&]() {
            try {
                run_provider_loop(cfg.fw, n, key_view_for_provider(all_keys), tr, n);
            } catch (const std::exception&) {
            }
            tr.finish(n);
        });
    }
    for (auto& t : threads) t.join();

    out.meter = read_meter(*meter);
    out.transcript = tr.transcript();
    out.meter_obj = std::move(meter);
    return out;
}

std::string transcript_json(const std::vector<Envelope>& transcript) {
    std::ostringstream os;
    for (const auto& e : transcript) {
        os << "{\"session\":" << e.session << ",\"gate\":" << e.gate
           << ",\"phase\":" << static_cast<int>(e.phase) << ",\"from\":" << static_cast<int>(e.sender)
           << ",\"to\":" << static_cast<int>(e.receiver) << ",\"bits\":" << e.bits
           << ",\"seq\":" << e.seq << ",\"payload\":\"" << hex(e.payload) << "\"}\n";
    }
    return os.str();
}

}  // namespace mpckit
