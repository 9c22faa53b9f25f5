#pragma once

#include <cstdio>
#include <string>

#include <openssl/evp.h>

#include "vstab/network.hpp"

namespace vstab {

/// Git-style content hash of a blob: SHA-1 over "blob <size>\0<content>".
inline std::string git_blob_sha1(const std::string& content) {
    std::string header = "blob " + std::to_string(content.size());
    header.push_back('\0');

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("EVP_MD_CTX_new failed");
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
              EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
              EVP_DigestFinal_ex(ctx, digest, &digest_len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error("SHA-1 digest failed");

    std::string hex(digest_len * 2, '0');
    for (unsigned int i = 0; i < digest_len; ++i)
        std::snprintf(hex.data() + 2 * i, 3, "%02x", digest[i]);
    return hex;
}

}  // namespace vstab
