#include "lode/share.hpp"

#include <array>

namespace lode {

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

int sextet(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '-') return 62;
    if (c == '_') return 63;
    return -1;
}

}  // namespace

std::string base64url_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() * 4 + 2) / 3);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t v = bytes[i] << 16;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
    } else if (rest == 2) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
    }
    return out;
}

std::vector<std::uint8_t> base64url_decode(std::string_view text) {
    if (text.size() % 4 == 1) throw ShareTokenError(ShareTokenError::Code::Malformed, "token length is not valid base64url");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() * 3 / 4);
    std::uint32_t acc = 0;
    int bits = 0;
    for (const char c : text) {
        const int s = sextet(c);
        if (s < 0) {
            throw ShareTokenError(ShareTokenError::Code::Malformed, std::string("invalid token character '") + c + "'");
        }
        acc = (acc << 6) | static_cast<std::uint32_t>(s);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    if (bits > 0 && (acc & ((1u << bits) - 1)) != 0) {
        throw ShareTokenError(ShareTokenError::Code::Malformed, "token has non-canonical trailing bits");
    }
    return out;
}

std::vector<std::uint8_t> share_token_bytes(const Level& level) {
    if (!level.is_standard_size()) throw LevelError("share tokens encode 32x22 levels only");
    std::vector<std::uint8_t> bytes;
    bytes.push_back(kShareTokenVersion);
    if (level.spawn()) {
        bytes.push_back(static_cast<std::uint8_t>(level.spawn()->col));
        bytes.push_back(static_cast<std::uint8_t>(level.spawn()->row));
    } else {
        bytes.push_back(kNoSpawn);
        bytes.push_back(kNoSpawn);
    }
    const auto tiles = level.tiles();
    std::size_t i = 0;
    while (i < tiles.size()) {
        std::size_t run = 1;
        while (i + run < tiles.size() && run < 255 && tiles[i + run] == tiles[i]) ++run;
        bytes.push_back(static_cast<std::uint8_t>(run));
        bytes.push_back(static_cast<std::uint8_t>(tile_index(tiles[i])));
        i += run;
    }
    std::uint8_t check = 0;
    for (const auto b : bytes) check ^= b;
    bytes.push_back(check);
    return bytes;
}

std::string encode_share_token(const Level& level) { return base64url_encode(share_token_bytes(level)); }

Level decode_share_token(std::string_view token) {
    using Code = ShareTokenError::Code;
    if (token.empty()) throw ShareTokenError(Code::Malformed, "empty share token");
    if (token.size() > kMaxShareTokenChars) {
        throw ShareTokenError(Code::Length, "share token longer than " + std::to_string(kMaxShareTokenChars) + " characters");
    }
    const auto bytes = base64url_decode(token);
    if (bytes.size() < 6 || bytes.size() % 2 != 0) {
        throw ShareTokenError(Code::Length, "share token payload has invalid length " + std::to_string(bytes.size()));
    }
    std::uint8_t check = 0;
    for (std::size_t i = 0; i + 1 < bytes.size(); ++i) check ^= bytes[i];
    if (check != bytes.back()) throw ShareTokenError(Code::Checksum, "share token checksum mismatch");
    if (bytes[0] != kShareTokenVersion) {
        throw ShareTokenError(Code::Version, "unsupported share token version " + std::to_string(bytes[0]));
    }

    Level level;
    std::size_t pos = 0;
    for (std::size_t i = 3; i + 1 < bytes.size(); i += 2) {
        const std::size_t run = bytes[i];
        const int tile = bytes[i + 1];
        if (run == 0) throw ShareTokenError(Code::Content, "zero-length run in share token");
        if (tile >= kTileKinds) throw ShareTokenError(Code::Content, "invalid tile index " + std::to_string(tile));
        if (pos + run > static_cast<std::size_t>(kLevelArea)) {
            throw ShareTokenError(Code::Length, "share token runs overflow the 704-cell level");
        }
        for (std::size_t k = 0; k < run; ++k, ++pos) {
            level.set(static_cast<int>(pos % kLevelWidth), static_cast<int>(pos / kLevelWidth), static_cast<TileKind>(tile));
        }
    }
    if (pos != static_cast<std::size_t>(kLevelArea)) {
        throw ShareTokenError(Code::Length, "share token covers " + std::to_string(pos) + " of 704 cells");
    }
    if (bytes[1] != kNoSpawn || bytes[2] != kNoSpawn) {
        const Cell spawn{bytes[1], bytes[2]};
        if (!level.in_bounds(spawn) || is_blocking(level.at(spawn))) {
            throw ShareTokenError(Code::Content, "share token spawn is invalid");
        }
        level.set_spawn(spawn);
    }
    return level;
}

}  // namespace lode
