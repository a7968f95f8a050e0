#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mpc/ring.hpp"

namespace mpckit {

enum class Phase : u8 { Pre = 0, Online = 1, Verify = 2 };

struct Envelope {
    u64 session = 0;
    u64 gate = 0;
    Phase phase = Phase::Online;
    u8 sender = 0;
    u8 receiver = 0;
    std::vector<u8> payload;
    u64 bits = 0;    // semantic payload width; <= 8 * payload.size()
    u64 depth = 0;   // online round-DAG depth stamp; 0 = outside the DAG
    u64 seq = 0;     // per-edge sequence number, assigned on send
    bool tombstone = false;  // slot of a dropped/silenced message
};

// Byte and bit counters per directed pair plus the online round count derived
// from causal depth stamps. Traffic to or from the provider endpoint accrues
// to the provider bucket regardless of phase; verify-phase traffic is kept
// out of the online totals.
class Meter {
   public:
    explicit Meter(int endpoints);

    void record(const Envelope& env, int provider_index);
    void observe_depth(u64 depth);

    u64 bits_pre() const { return pre_bits_; }
    u64 bits_online() const { return online_bits_; }
    u64 bits_verify() const { return verify_bits_; }
    u64 bits_provider() const { return provider_bits_; }
    u64 bytes_pre() const { return pre_bytes_; }
    u64 bytes_online() const { return online_bytes_; }
    u64 bytes_verify() const { return verify_bytes_; }
    u64 bytes_provider() const { return provider_bytes_; }
    u64 online_rounds() const { return max_depth_; }

    u64 pair_bits_online(int s, int r) const;
    int endpoints() const { return endpoints_; }

    struct Delta;  // scoped measurement helper, defined below

   private:
    int endpoints_;
    std::atomic<u64> pre_bits_{0}, online_bits_{0}, verify_bits_{0}, provider_bits_{0};
    std::atomic<u64> pre_bytes_{0}, online_bytes_{0}, verify_bytes_{0}, provider_bytes_{0};
    std::atomic<u64> max_depth_{0};
    mutable std::mutex pair_mu_;
    std::map<std::pair<int, int>, u64> pair_online_bits_;
};

struct MeterReading {
    u64 bits_pre = 0, bits_online = 0, bits_verify = 0, bits_provider = 0;
    u64 rounds = 0;
};

inline MeterReading read_meter(const Meter& m) {
    return {m.bits_pre(), m.bits_online(), m.bits_verify(), m.bits_provider(), m.online_rounds()};
}

inline MeterReading meter_delta(const MeterReading& before, const MeterReading& after) {
    return {after.bits_pre - before.bits_pre, after.bits_online - before.bits_online,
            after.bits_verify - before.bits_verify, after.bits_provider - before.bits_provider,
            after.rounds - before.rounds};
}

// Scripted single-party adversary (threshold t = 1). Actions match outgoing
// envelopes of the target and mutate them at the transport boundary.
struct AdversaryAction {
    enum class Kind { FlipBits, Drop, Substitute, Silence };
    Kind kind = Kind::FlipBits;
    std::optional<Phase> phase;
    std::optional<int> receiver;
    std::optional<u64> gate;
    std::optional<u64> min_gate;
    size_t skip_matches = 0;  // leave the first N matching sends untouched
    std::vector<u8> substitute_payload;

    bool one_shot() const { return kind != Kind::Silence; }
};

struct AdversaryScript {
    int target = -1;
    std::vector<AdversaryAction> actions;
    bool empty() const { return target < 0 || actions.empty(); }
};

struct DeadlockError : std::runtime_error {
    explicit DeadlockError(const std::string& what) : std::runtime_error(what) {}
};

class Transport {
   public:
    virtual ~Transport() = default;
    virtual void send(Envelope&& env) = 0;
    // Blocking per-edge FIFO receive; nullopt models a synchronous-round
    // timeout slot left by a dropped or silenced message.
    virtual std::optional<Envelope> recv(int receiver, int sender) = 0;
    virtual void finish(int party) = 0;
};

// Deterministic in-process transport: per-edge FIFO queues, sender-side
// metering, adversary mutation hook, transcript capture and deadlock
// detection (a blocked step with no deliverable message raises a structured
// error naming the blocked parties).
class SimTransport : public Transport {
   public:
    SimTransport(int endpoints, Meter& meter, int provider_index,
                 AdversaryScript script = {});

    void send(Envelope&& env) override;
    std::optional<Envelope> recv(int receiver, int sender) override;
    void finish(int party) override;
    void register_party(int party);

    // Canonical transcript: every envelope ordered by (sender, receiver, seq).
    std::vector<Envelope> transcript() const;

   private:
    bool mutate(Envelope& env);
    void check_deadlock_locked();

    int endpoints_;
    Meter& meter_;
    int provider_index_;
    AdversaryScript script_;
    std::vector<size_t> action_hits_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::pair<int, int>, std::deque<Envelope>> queues_;
    std::map<std::pair<int, int>, u64> edge_seq_;
    std::vector<bool> finished_;
    std::vector<int> registered_;
    std::map<int, std::pair<int, int>> blocked_on_;  // receiver -> edge
    bool deadlock_ = false;
    std::string deadlock_msg_;
    std::vector<Envelope> log_;
};

// Length-prefixed little-endian wire format over TCP:
//   u32 length | u64 session | u64 gate | u8 phase | u8 sender | u8 receiver |
//   u64 bits | payload
struct TcpEndpoint {
    std::string host;
    int port = 0;
};

class TcpTransport : public Transport {
   public:
    // endpoints[i] is party i's listen address; index == own party id.
    TcpTransport(int self, const std::vector<TcpEndpoint>& endpoints, Meter& meter,
                 int provider_index, int timeout_ms = 30000);
    ~TcpTransport() override;

    void send(Envelope&& env) override;
    std::optional<Envelope> recv(int receiver, int sender) override;
    void finish(int party) override;

   private:
    int self_;
    int provider_index_;
    int timeout_ms_;
    Meter& meter_;
    std::vector<int> fds_;
    std::map<std::pair<int, int>, u64> edge_seq_;
};

std::vector<u8> encode_frame(const Envelope& env);

}  // namespace mpckit
