#include "mpc/hashing.hpp"

#include <openssl/sha.h>

namespace mpckit {

Digest sha256(const u8* data, size_t n) {
    Digest d;
    SHA256(data, n, d.data());
    return d;
}

Digest sha256(const std::vector<u8>& data) { return sha256(data.data(), data.size()); }

std::string hex(const u8* data, size_t n) {
    static const char* tab = "0123456789abcdef";
    std::string s;
    s.reserve(2 * n);
    for (size_t i = 0; i < n; ++i) {
        s.push_back(tab[data[i] >> 4]);
        s.push_back(tab[data[i] & 0xf]);
    }
    return s;
}

std::string hex(const std::vector<u8>& data) { return hex(data.data(), data.size()); }

Commitment commit(const std::vector<u8>& value, const std::array<u8, 16>& randomness) {
    std::vector<u8> buf = value;
    buf.insert(buf.end(), randomness.begin(), randomness.end());
    return Commitment{sha256(buf)};
}

bool verify(const Commitment& c, const Opening& o) {
    return commit(o.value, o.randomness).digest == c.digest;
}

}  // namespace mpckit
