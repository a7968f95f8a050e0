#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpc/prf.hpp"
#include "mpc/ring.hpp"

namespace mpckit {

// Subsets of parties are identified by a bitmask (bit i set = party i is a
// member). The trusted-dealer provider owns the reserved mask kProviderMask.
using SubsetMask = u8;
constexpr SubsetMask kProviderMask = 0xFF;

inline SubsetMask subset_of(std::initializer_list<int> parties) {
    SubsetMask m = 0;
    for (int p : parties) m |= static_cast<SubsetMask>(1u << p);
    return m;
}

// Per-party view of the shared-key setup: one PRF key per subset the party
// belongs to, plus a monotone counter per (subset, stream label) for the
// generic sampling API. Gate-scoped streams derive a fresh label per gate id
// and need no shared counter state.
class KeyGraph {
   public:
    void insert(SubsetMask subset, const PrfKey& key) { keys_[subset] = key; }
    bool has(SubsetMask subset) const { return keys_.count(subset) != 0; }
    const PrfKey& key(SubsetMask subset) const;

    // Identical output at every member of `subset` holding the same counter
    // state; the counter advances by n.
    std::vector<u64> sample_shared(SubsetMask subset, const std::string& stream, size_t n,
                                   const Ring& ring);
    u64 counter(SubsetMask subset, const std::string& stream) const;

    // Fresh stream scoped to one label (callers embed gate ids in the label).
    PrfStream stream(SubsetMask subset, const std::string& label) const;

    std::vector<u8> serialize() const;
    static KeyGraph deserialize(const std::vector<u8>& bytes);

   private:
    std::map<SubsetMask, PrfKey> keys_;
    std::map<std::pair<SubsetMask, std::string>, u64> counters_;
};

// Derives every subset key for an n-party session (plus the provider key)
// from a master seed; used by the keygen CLI and in-process test setup.
std::map<SubsetMask, PrfKey> derive_all_keys(const std::string& seed, int n_parties);

// Key view for one party: only subsets containing the party (provider gets
// its own key under kProviderMask).
KeyGraph key_view_for_party(const std::map<SubsetMask, PrfKey>& all, int party);
KeyGraph key_view_for_provider(const std::map<SubsetMask, PrfKey>& all);

// Key file: per-subset records (subset bitmask: 1 byte, key: 16 bytes).
void write_key_file(const std::string& path, const KeyGraph& kg);
KeyGraph read_key_file(const std::string& path);

// Non-interactive additive sharing of zero among a sorted trio (optionally
// with one extra party that learns all three summands): Z1 + Z2 + Z3 = 0.
// Returns the Z for `self` (or all r's for the extra party).
u64 zero_share(const KeyGraph& kg, const std::vector<int>& trio, std::optional<int> extra,
               int self, const std::string& label, const Ring& ring);

}  // namespace mpckit
