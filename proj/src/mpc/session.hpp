#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <tuple>

#include "mpc/hashing.hpp"
#include "mpc/keys.hpp"
#include "mpc/share.hpp"
#include "mpc/transport.hpp"

namespace mpckit {

enum class PreMode : u8 { Combined = 0, PreOnly = 1, OnlineOnly = 2 };

// Gate-id-keyed per-party preprocessing material for split-phase runs.
class PreStore {
   public:
    void put(u64 gate, std::vector<u64> words) { data_[gate] = std::move(words); }
    const std::vector<u64>& get(u64 gate) const;
    bool has(u64 gate) const { return data_.count(gate) != 0; }
    void save(const std::string& path) const;
    static PreStore load(const std::string& path);

   private:
    std::map<u64, std::vector<u64>> data_;
};

struct PartyResult {
    enum class Outcome { Ok, Abort, FairBot, Error };
    Outcome outcome = Outcome::Ok;
    std::map<std::string, std::vector<u64>> outputs;
    std::string error;
};

struct SessionConfig {
    Framework fw = Framework::ASTRA;
    unsigned ell = 64;
    unsigned frac_bits = 13;
    std::string seed = "mpckit-default-seed";
    PreMode mode = PreMode::Combined;
    unsigned ppa_arity = 4;
    u64 session_id = 1;
    AdversaryScript script;
};

class PartyCtx {
   public:
    PartyCtx(const SessionConfig& cfg, int id, KeyGraph keys, Transport& tr, Meter& meter);

    Framework fw;
    int id;
    int n;
    int provider_index;
    Ring ring;
    FixedPoint fx;
    KeyGraph keys;
    unsigned ppa_arity;
    PreMode mode;
    PreStore* store = nullptr;
    u64 session_id;
    bool abort_flag = false;

    bool online() const { return mode != PreMode::PreOnly; }
    bool is_helper() const;  // no online role beyond preprocessing/verify

    u64 next_gate() { return gate_ctr_++; }
    u64 cur_gate() const { return cur_gate_; }
    void set_gate(u64 g) { cur_gate_ = g; }
    std::string glabel(const std::string& tag) const {
        return "g" + std::to_string(cur_gate_) + "/" + tag;
    }
    PrfStream stream(SubsetMask subset, const std::string& tag) const {
        return keys.stream(subset, glabel(tag));
    }

    // Runs `fn` under the Pre phase and returns its serialized material; in a
    // split online-only run the material is loaded from the store instead.
    std::vector<u64> pre(const std::function<std::vector<u64>()>& fn);

    Phase phase() const { return phase_; }
    void set_phase(Phase p) { phase_ = p; }

    void send(int to, std::vector<u8> payload, u64 bits, bool defer_round = false);
    std::optional<std::vector<u8>> recv_opt(int from);
    // Missing message (dropped/silenced sender) sets the abort flag and
    // yields `expect` zero bytes so the protocol can run to completion.
    std::vector<u8> recv(int from, size_t expect);

    // Fair Joint-Send: sender i transmits v, sender j defers a hash of the
    // concatenation of all its pending payloads for (i,j,k) to verification.
    // Returns the payload at the receiver.
    std::optional<std::vector<u8>> jsnd(int i, int j, int k, const std::vector<u8>& v, u64 bits,
                                        bool defer_round = false);

    // jsnd with the hash leg sent and checked immediately (used on output
    // wires, where verification cannot be deferred past delivery).
    std::optional<std::vector<u8>> jsnd_now(int i, int j, int k, const std::vector<u8>& v,
                                            u64 bits);

    // One exchange of abort flags among all parties; true iff nobody aborted.
    bool echo_abort_clear();

    // Tetrad consistency buffers (batched into one verify-time hash exchange).
    void tetrad_share_absorb(const std::vector<u8>& m_bytes);
    void tetrad_multver_absorb(u64 value);

    // Provider round trip (trusted dealer); metered under the provider bucket.
    std::vector<u8> provider_call(const std::vector<u8>& request, size_t response_bytes);
    void provider_finish();

    // Deferred checks: jsnd hash exchange, Tetrad consistency checks, then a
    // 1-bit abort echo so every honest party lands on the same outcome.
    void run_verify();
    bool verify_done() const { return verify_done_; }

    u64 clock() const { return clock_; }

   private:
    Transport& tr_;
    Meter& meter_;
    Phase phase_ = Phase::Online;
    u64 clock_ = 0;
    u64 gate_ctr_ = 0;
    u64 cur_gate_ = 0;
    bool verify_done_ = false;

    std::map<std::tuple<int, int, int>, HashAccumulator> jsnd_as_hasher_;
    std::map<std::tuple<int, int, int>, HashAccumulator> jsnd_as_receiver_;
    std::set<std::tuple<int, int, int>> jsnd_all_;
    HashAccumulator tetrad_share_acc_;
    bool tetrad_share_any_ = false;
    HashAccumulator tetrad_multver_acc_;
    bool tetrad_multver_any_ = false;
};

using PartyProgram = std::function<void(PartyCtx&, PartyResult&)>;

struct SessionOutput {
    std::vector<PartyResult> results;
    MeterReading meter;
    std::vector<Envelope> transcript;
    std::unique_ptr<Meter> meter_obj;

    bool all_ok() const {
        for (const auto& r : results)
            if (r.outcome != PartyResult::Outcome::Ok) return false;
        return true;
    }
};

// Runs one program per party on the deterministic simulator (plus the dealer
// provider when the framework needs one). Deterministic given cfg.seed and
// cfg.script.
SessionOutput run_session(const SessionConfig& cfg, const std::vector<PartyProgram>& programs,
                          std::vector<PreStore>* stores = nullptr);

std::string transcript_json(const std::vector<Envelope>& transcript);

}  // namespace mpckit
