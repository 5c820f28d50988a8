#pragma once

#include <openssl/evp.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <array>
#include <memory>
#include <string>
#include <string_view>

#include "medcomm/error.hpp"

namespace medcomm::detail {

inline std::string to_hex(const unsigned char* data, std::size_t len) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0x0f]);
    }
    return out;
}

/// Lowercase hex SHA-256 of raw bytes.
inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: EVP_Digest failed");
    }
    return to_hex(digest.data(), len);
}

/// Unicode NFC normalization of UTF-8 text.
inline std::string nfc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("nfc: ICU normalizer unavailable");
    }
    icu::UnicodeString src = icu::UnicodeString::fromUTF8(
        icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    if (norm->isNormalized(src, status) && U_SUCCESS(status)) {
        return std::string(utf8);
    }
    status = U_ZERO_ERROR;
    icu::UnicodeString dst = norm->normalize(src, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("nfc: normalization failed");
    }
    std::string out;
    dst.toUTF8String(out);
    return out;
}

/// Store key for a text: SHA-256 over its NFC-normalized UTF-8 bytes.
inline std::string content_hash(std::string_view text) { return sha256_hex(nfc(text)); }

}  // namespace medcomm::detail
