#pragma once

#include "lode/level.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lode {

/// Share token layout (before base64url, no padding):
///   version u8 (=1) | spawn col u8 | spawn row u8 (0xFF 0xFF when absent)
///   | (run length u8 in 1..255, tile index u8)* over row-major tiles | XOR of all preceding bytes u8
inline constexpr std::uint8_t kShareTokenVersion = 1;
inline constexpr std::uint8_t kNoSpawn = 0xFF;
/// Upper bound on accepted token length; a worst-case level is 704 runs.
inline constexpr std::size_t kMaxShareTokenChars = 2048;

class ShareTokenError : public std::invalid_argument {
public:
    enum class Code { Malformed, Version, Length, Checksum, Content };
    ShareTokenError(Code code, const std::string& message) : std::invalid_argument(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::string base64url_encode(std::span<const std::uint8_t> bytes);
/// Throws ShareTokenError(Malformed) on characters outside the url-safe alphabet or a dangling sextet.
std::vector<std::uint8_t> base64url_decode(std::string_view text);

std::vector<std::uint8_t> share_token_bytes(const Level& level);
std::string encode_share_token(const Level& level);
Level decode_share_token(std::string_view token);

}  // namespace lode
