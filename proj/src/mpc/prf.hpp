#pragma once

#include <array>
#include <cstring>
#include <string>
#include <vector>

#include "mpc/ring.hpp"

namespace mpckit {

using PrfKey = std::array<u8, 16>;

// AES-128 in counter mode. A stream is identified by (key, label); the label
// is folded into the counter block so that distinct labels yield independent
// streams under the same key. One counter step per sampled element.
class PrfStream {
   public:
    PrfStream(const PrfKey& key, const std::string& label, u64 counter = 0);

    u64 next_u64();
    void fill_words(u64* out, size_t n);
    std::vector<u64> draw(const Ring& r, size_t n);
    u64 draw_one(const Ring& r) { return next_u64() & r.mask; }
    void fill_bytes(u8* out, size_t n);

    u64 counter() const { return counter_; }

   private:
    PrfKey key_;
    u64 label_tag_ = 0;
    u64 counter_ = 0;
};

}  // namespace mpckit
