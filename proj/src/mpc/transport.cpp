#include "mpc/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mpckit {

Meter::Meter(int endpoints) : endpoints_(endpoints) {}

void Meter::record(const Envelope& env, int provider_index) {
    if (env.tombstone) return;
    u64 bits = env.bits;
    u64 bytes = env.payload.size();
    if (env.sender == provider_index || env.receiver == provider_index) {
        provider_bits_ += bits;
        provider_bytes_ += bytes;
        return;
    }
    switch (env.phase) {
        case Phase::Pre:
            pre_bits_ += bits;
            pre_bytes_ += bytes;
            break;
        case Phase::Online: {
            online_bits_ += bits;
            online_bytes_ += bytes;
            std::lock_guard<std::mutex> lk(pair_mu_);
            pair_online_bits_[{env.sender, env.receiver}] += bits;
            break;
        }
        case Phase::Verify:
            verify_bits_ += bits;
            verify_bytes_ += bytes;
            break;
    }
    observe_depth(env.depth);
}

void Meter::observe_depth(u64 depth) {
    u64 cur = max_depth_.load();
    while (depth > cur && !max_depth_.compare_exchange_weak(cur, depth)) {
    }
}

u64 Meter::pair_bits_online(int s, int r) const {
    std::lock_guard<std::mutex> lk(pair_mu_);
    auto it = pair_online_bits_.find({s, r});
    return it == pair_online_bits_.end() ? 0 : it->second;
}

SimTransport::SimTransport(int endpoints, Meter& meter, int provider_index,
                           AdversaryScript script)
    : endpoints_(endpoints),
      meter_(meter),
      provider_index_(provider_index),
      script_(std::move(script)),
      action_hits_(script_.actions.size(), 0),
      finished_(static_cast<size_t>(endpoints), false) {}

void SimTransport::register_party(int party) {
    std::lock_guard<std::mutex> lk(mu_);
    registered_.push_back(party);
}

bool SimTransport::mutate(Envelope& env) {
    if (script_.empty() || env.sender != script_.target) return false;
    for (size_t i = 0; i < script_.actions.size(); ++i) {
        auto& a = script_.actions[i];
        if (a.one_shot() && action_hits_[i] > a.skip_matches) continue;
        if (a.phase && *a.phase != env.phase) continue;
        if (a.receiver && *a.receiver != env.receiver) continue;
        if (a.gate && *a.gate != env.gate) continue;
        if (a.min_gate && env.gate < *a.min_gate) continue;
        if (action_hits_[i]++ < a.skip_matches) continue;
        switch (a.kind) {
            case AdversaryAction::Kind::FlipBits:
                if (!env.payload.empty()) env.payload[0] ^= 0x01;
                return false;
            case AdversaryAction::Kind::Substitute:
                env.payload = a.substitute_payload;
                env.bits = 8 * env.payload.size();
                return false;
            case AdversaryAction::Kind::Drop:
            case AdversaryAction::Kind::Silence:
                env.tombstone = true;
                env.payload.clear();
                env.bits = 0;
                return true;
        }
    }
    return false;
}

void SimTransport::send(Envelope&& env) {
    std::lock_guard<std::mutex> lk(mu_);
    mutate(env);
    auto edge = std::make_pair<int, int>(env.sender, env.receiver);
    env.seq = edge_seq_[edge]++;
    meter_.record(env, provider_index_);
    log_.push_back(env);
    queues_[edge].push_back(std::move(env));
    cv_.notify_all();
}

std::optional<Envelope> SimTransport::recv(int receiver, int sender) {
    std::unique_lock<std::mutex> lk(mu_);
    auto edge = std::make_pair(sender, receiver);
    for (;;) {
        auto it = queues_.find(edge);
        if (it != queues_.end() && !it->second.empty()) {
            Envelope env = std::move(it->second.front());
            it->second.pop_front();
            if (env.tombstone) return std::nullopt;
            return env;
        }
        if (finished_[static_cast<size_t>(sender)]) {
            // Counterpart ended without sending: equivalent to a silent slot.
            return std::nullopt;
        }
        blocked_on_[receiver] = edge;
        check_deadlock_locked();
        if (deadlock_) {
            blocked_on_.erase(receiver);
            throw DeadlockError(deadlock_msg_);
        }
        cv_.wait(lk);
        blocked_on_.erase(receiver);
        if (deadlock_) throw DeadlockError(deadlock_msg_);
    }
}

void SimTransport::finish(int party) {
    std::lock_guard<std::mutex> lk(mu_);
    finished_[static_cast<size_t>(party)] = true;
    cv_.notify_all();
}

void SimTransport::check_deadlock_locked() {
    size_t unfinished = 0;
    for (int p : registered_)
        if (!finished_[static_cast<size_t>(p)]) unfinished++;
    if (unfinished == 0 || blocked_on_.size() < unfinished) return;
    // Every live party is blocked; a pending message on any awaited edge
    // would still make progress.
    for (const auto& [rcv, edge] : blocked_on_) {
        auto it = queues_.find(edge);
        if (it != queues_.end() && !it->second.empty()) return;
    }
    std::ostringstream os;
    os << "deadlock: blocked parties";
    for (const auto& [rcv, edge] : blocked_on_)
        os << " P" << rcv << "(awaiting P" << edge.first << ")";
    deadlock_ = true;
    deadlock_msg_ = os.str();
    cv_.notify_all();
}

std::vector<Envelope> SimTransport::transcript() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::vector<Envelope> out = log_;
    std::sort(out.begin(), out.end(), [](const Envelope& a, const Envelope& b) {
        return std::tie(a.sender, a.receiver, a.seq) < std::tie(b.sender, b.receiver, b.seq);
    });
    return out;
}

// --- TCP transport -----------------------------------------------------------

namespace {

void put_u32(std::vector<u8>& out, u32 v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
}
void put_u64(std::vector<u8>& out, u64 v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
}

bool read_exact(int fd, u8* buf, size_t n, int timeout_ms) {
    size_t got = 0;
    while (got < n) {
        pollfd pfd{fd, POLLIN, 0};
        int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr <= 0) return false;
        ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r <= 0) return false;
        got += static_cast<size_t>(r);
    }
    return true;
}

void write_all(int fd, const u8* buf, size_t n) {
    size_t sent = 0;
    while (sent < n) {
        ssize_t w = ::send(fd, buf + sent, n - sent, 0);
        if (w <= 0) throw std::runtime_error("tcp send failed");
        sent += static_cast<size_t>(w);
    }
}

}  // namespace

std::vector<u8> encode_frame(const Envelope& env) {
    std::vector<u8> out;
    put_u32(out, static_cast<u32>(env.payload.size()));
    put_u64(out, env.session);
    put_u64(out, env.gate);
    out.push_back(static_cast<u8>(env.phase));
    out.push_back(env.sender);
    out.push_back(env.receiver);
    put_u64(out, env.bits);
    out.insert(out.end(), env.payload.begin(), env.payload.end());
    return out;
}

TcpTransport::TcpTransport(int self, const std::vector<TcpEndpoint>& endpoints, Meter& meter,
                           int provider_index, int timeout_ms)
    : self_(self),
      provider_index_(provider_index),
      timeout_ms_(timeout_ms),
      meter_(meter),
      fds_(endpoints.size(), -1) {
    int n = static_cast<int>(endpoints.size());
    // Mesh setup: the lower-indexed endpoint listens, the higher one connects.
    int listen_fd = -1;
    int expected = 0;
    for (int peer = self_ + 1; peer < n; ++peer) expected++;
    if (expected > 0) {
        listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
        int opt = 1;
        ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &opt, sizeof(opt));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = INADDR_ANY;
        addr.sin_port = htons(static_cast<uint16_t>(endpoints[static_cast<size_t>(self_)].port));
        if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
            throw std::runtime_error("tcp bind failed");
        if (::listen(listen_fd, n) != 0) throw std::runtime_error("tcp listen failed");
    }
    for (int peer = 0; peer < self_; ++peer) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<uint16_t>(endpoints[static_cast<size_t>(peer)].port));
        if (::inet_pton(AF_INET, endpoints[static_cast<size_t>(peer)].host.c_str(), &addr.sin_addr) != 1)
            throw std::runtime_error("bad host: " + endpoints[static_cast<size_t>(peer)].host);
        int tries = 0;
        while (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            if (++tries > 600) throw std::runtime_error("tcp connect timeout");
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
        u8 hello = static_cast<u8>(self_);
        write_all(fd, &hello, 1);
        int flag = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
        fds_[static_cast<size_t>(peer)] = fd;
    }
    for (int i = 0; i < expected; ++i) {
        int fd = ::accept(listen_fd, nullptr, nullptr);
        if (fd < 0) throw std::runtime_error("tcp accept failed");
        u8 hello = 0;
        if (!read_exact(fd, &hello, 1, timeout_ms_)) throw std::runtime_error("tcp hello timeout");
        int flag = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
        fds_[hello] = fd;
    }
    if (listen_fd >= 0) ::close(listen_fd);
}

TcpTransport::~TcpTransport() {
    for (int fd : fds_)
        if (fd >= 0) ::close(fd);
}

void TcpTransport::send(Envelope&& env) {
    auto edge = std::make_pair<int, int>(env.sender, env.receiver);
    env.seq = edge_seq_[edge]++;
    meter_.record(env, provider_index_);
    auto frame = encode_frame(env);
    write_all(fds_[env.receiver], frame.data(), frame.size());
}

std::optional<Envelope> TcpTransport::recv(int receiver, int sender) {
    (void)receiver;
    int fd = fds_[static_cast<size_t>(sender)];
    u8 head[31];
    if (!read_exact(fd, head, sizeof(head), timeout_ms_)) return std::nullopt;
    u32 len = 0;
    std::memcpy(&len, head, 4);
    Envelope env;
    std::memcpy(&env.session, head + 4, 8);
    std::memcpy(&env.gate, head + 12, 8);
    env.phase = static_cast<Phase>(head[20]);
    env.sender = head[21];
    env.receiver = head[22];
    std::memcpy(&env.bits, head + 23, 8);
    env.payload.resize(len);
    if (len && !read_exact(fd, env.payload.data(), len, timeout_ms_)) return std::nullopt;
    return env;
}

void TcpTransport::finish(int) {}

}  // namespace mpckit
