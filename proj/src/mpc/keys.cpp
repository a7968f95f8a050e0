#include "mpc/keys.hpp"

#include <openssl/sha.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mpc/hashing.hpp"

namespace mpckit {

const PrfKey& KeyGraph::key(SubsetMask subset) const {
    auto it = keys_.find(subset);
    if (it == keys_.end())
        throw std::runtime_error("KeyGraph: missing key for subset mask " + std::to_string(subset));
    return it->second;
}

std::vector<u64> KeyGraph::sample_shared(SubsetMask subset, const std::string& stream, size_t n,
                                         const Ring& ring) {
    u64& ctr = counters_[{subset, stream}];
    PrfStream s(key(subset), stream, ctr);
    auto out = s.draw(ring, n);
    ctr = s.counter();
    return out;
}

u64 KeyGraph::counter(SubsetMask subset, const std::string& stream) const {
    auto it = counters_.find({subset, stream});
    return it == counters_.end() ? 0 : it->second;
}

PrfStream KeyGraph::stream(SubsetMask subset, const std::string& label) const {
    return PrfStream(key(subset), label, 0);
}

std::vector<u8> KeyGraph::serialize() const {
    std::vector<u8> out;
    for (const auto& [mask, key] : keys_) {
        out.push_back(mask);
        out.insert(out.end(), key.begin(), key.end());
    }
    return out;
}

KeyGraph KeyGraph::deserialize(const std::vector<u8>& bytes) {
    if (bytes.size() % 17 != 0) throw std::runtime_error("malformed key data");
    KeyGraph kg;
    for (size_t i = 0; i < bytes.size(); i += 17) {
        PrfKey k;
        std::memcpy(k.data(), bytes.data() + i + 1, 16);
        kg.insert(bytes[i], k);
    }
    return kg;
}

std::map<SubsetMask, PrfKey> derive_all_keys(const std::string& seed, int n_parties) {
    std::map<SubsetMask, PrfKey> all;
    auto derive = [&](SubsetMask mask) {
        std::vector<u8> buf(seed.begin(), seed.end());
        buf.push_back(mask);
        Digest d = sha256(buf);
        PrfKey k;
        std::memcpy(k.data(), d.data(), 16);
        all[mask] = k;
    };
    for (SubsetMask mask = 1; mask < (1u << n_parties); ++mask) derive(mask);
    derive(kProviderMask);
    return all;
}

KeyGraph key_view_for_party(const std::map<SubsetMask, PrfKey>& all, int party) {
    KeyGraph kg;
    for (const auto& [mask, key] : all) {
        if (mask != kProviderMask && (mask & (1u << party))) kg.insert(mask, key);
    }
    return kg;
}

KeyGraph key_view_for_provider(const std::map<SubsetMask, PrfKey>& all) {
    KeyGraph kg;
    auto it = all.find(kProviderMask);
    if (it != all.end()) kg.insert(kProviderMask, it->second);
    return kg;
}

void write_key_file(const std::string& path, const KeyGraph& kg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open key file for writing: " + path);
    auto bytes = kg.serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

KeyGraph read_key_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open key file: " + path);
    std::vector<u8> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return KeyGraph::deserialize(bytes);
}

u64 zero_share(const KeyGraph& kg, const std::vector<int>& trio, std::optional<int> extra,
               int self, const std::string& label, const Ring& ring) {
    if (trio.size() != 3) throw std::invalid_argument("zero_share needs exactly three parties");
    // r_j is sampled by everyone in the trio except trio[j] (plus the extra
    // party, when present). Z_1 = r_3 - r_2, Z_2 = r_1 - r_3, Z_3 = r_2 - r_1.
    auto sample_r = [&](int j) -> u64 {
        SubsetMask mask = extra ? (1u << *extra) : 0;
        for (int i = 0; i < 3; ++i)
            if (i != j) mask |= (1u << trio[i]);
        PrfStream s = kg.stream(mask, label + "/zr" + std::to_string(j));
        return s.draw_one(ring);
    };
    int idx = -1;
    for (int i = 0; i < 3; ++i)
        if (trio[i] == self) idx = i;
    if (idx < 0 && !(extra && *extra == self))
        throw std::invalid_argument("party not in zero-sharing set");
    if (idx == 0) return ring.sub(sample_r(2), sample_r(1));
    if (idx == 1) return ring.sub(sample_r(0), sample_r(2));
    if (idx == 2) return ring.sub(sample_r(1), sample_r(0));
    // Extra party: knows all summands; by convention returns 0 (it can derive
    // each Z_i directly via sample_r if needed).
    return 0;
}

}  // namespace mpckit
