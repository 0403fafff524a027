#include "ehk/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <fstream>

#include "ehk/errors.hpp"

namespace ehk {

namespace {

std::array<unsigned char, 32> sha256_raw(std::string_view bytes) {
    std::array<unsigned char, 32> digest{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx ||
        EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest.data(), &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    return digest;
}

std::string to_hex(const std::array<unsigned char, 32>& digest) {
    static const char* hexchars = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (unsigned char b : digest) {
        out.push_back(hexchars[b >> 4]);
        out.push_back(hexchars[b & 0x0f]);
    }
    return out;
}

} // namespace

std::string sha256_hex(std::string_view bytes) {
    return to_hex(sha256_raw(bytes));
}

std::string sha256_file_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LoadError("cannot open file for hashing: " + path.string());
    }
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(contents);
}

std::uint64_t sha256_seed(std::string_view bytes) {
    auto digest = sha256_raw(bytes);
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) {
        seed = (seed << 8) | digest[static_cast<std::size_t>(i)];
    }
    return seed;
}

} // namespace ehk
