#pragma once

#include <array>
#include <string>
#include <vector>

#include "mpc/ring.hpp"

namespace mpckit {

using Digest = std::array<u8, 32>;

Digest sha256(const u8* data, size_t n);
Digest sha256(const std::vector<u8>& data);
std::string hex(const u8* data, size_t n);
std::string hex(const std::vector<u8>& data);

// Incremental buffer for amortized hash checks: payloads are appended in
// send order and a single digest is exchanged at verification time.
class HashAccumulator {
   public:
    void absorb(const std::vector<u8>& data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    void absorb(const u8* data, size_t n) { buf_.insert(buf_.end(), data, data + n); }
    Digest digest() const { return sha256(buf_.data(), buf_.size()); }
    bool empty() const { return buf_.empty(); }

   private:
    std::vector<u8> buf_;
};

// Hash-based commitment: c = H(value || randomness), opening = (value, randomness).
struct Commitment {
    Digest digest{};
};

struct Opening {
    std::vector<u8> value;
    std::array<u8, 16> randomness{};
};

Commitment commit(const std::vector<u8>& value, const std::array<u8, 16>& randomness);
bool verify(const Commitment& c, const Opening& o);

}  // namespace mpckit
