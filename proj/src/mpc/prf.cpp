#include "mpc/prf.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <stdexcept>

namespace mpckit {

namespace {

u64 label_to_tag(const std::string& label) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(label.data()), label.size(), digest);
    u64 tag;
    std::memcpy(&tag, digest, sizeof(tag));
    return tag;
}

void aes_block(const PrfKey& key, const u8 in[16], u8 out[16]) {
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    int outl = 0;
    if (EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1 ||
        EVP_CIPHER_CTX_set_padding(ctx, 0) != 1 ||
        EVP_EncryptUpdate(ctx, out, &outl, in, 16) != 1 || outl != 16) {
        EVP_CIPHER_CTX_free(ctx);
        throw std::runtime_error("AES block encryption failed");
    }
    EVP_CIPHER_CTX_free(ctx);
}

}  // namespace

PrfStream::PrfStream(const PrfKey& key, const std::string& label, u64 counter)
    : key_(key), label_tag_(label_to_tag(label)), counter_(counter) {}

u64 PrfStream::next_u64() {
    u8 in[16], out[16];
    std::memcpy(in, &label_tag_, 8);
    std::memcpy(in + 8, &counter_, 8);
    counter_++;
    aes_block(key_, in, out);
    u64 v;
    std::memcpy(&v, out, 8);
    return v;
}

void PrfStream::fill_words(u64* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = next_u64();
}

std::vector<u64> PrfStream::draw(const Ring& r, size_t n) {
    std::vector<u64> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = next_u64() & r.mask;
    return out;
}

void PrfStream::fill_bytes(u8* out, size_t n) {
    size_t i = 0;
    while (i < n) {
        u64 w = next_u64();
        size_t take = std::min<size_t>(8, n - i);
        std::memcpy(out + i, &w, take);
        i += take;
    }
}

}  // namespace mpckit
