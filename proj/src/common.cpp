#include "msauth/common.hpp"

#include <openssl/evp.h>

#include <array>

namespace msauth {

const char* errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::UnknownTag: return "UnknownTag";
        case Errc::Truncated: return "Truncated";
        case Errc::PointInvalid: return "PointInvalid";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::MaskCorrupt: return "MaskCorrupt";
        case Errc::VerificationFailed: return "VerificationFailed";
        case Errc::DuplicateServer: return "DuplicateServer";
        case Errc::AuthLocalFailed: return "AuthLocalFailed";
        case Errc::ServerAuthFailed: return "ServerAuthFailed";
        case Errc::UserAuthFailed: return "UserAuthFailed";
        case Errc::StateError: return "StateError";
        case Errc::RcAuthFailed: return "RcAuthFailed";
        case Errc::ReplayDetected: return "ReplayDetected";
        case Errc::IdentityPoint: return "IdentityPoint";
        case Errc::LocalCheckFailed: return "LocalCheckFailed";
        case Errc::M1Invalid: return "M1Invalid";
        case Errc::M3Invalid: return "M3Invalid";
        case Errc::M5Invalid: return "M5Invalid";
        case Errc::NotInDictionary: return "NotInDictionary";
        case Errc::MissingPrecondition: return "MissingPrecondition";
        case Errc::ProbeUnexpectedlySucceeded: return "ProbeUnexpectedlySucceeded";
        case Errc::ScriptError: return "ScriptError";
        case Errc::Deadlock: return "Deadlock";
        case Errc::SecureLinkViolation: return "SecureLinkViolation";
        case Errc::SelectorEmpty: return "SelectorEmpty";
        case Errc::ExpectationFailed: return "ExpectationFailed";
        case Errc::StoreCorrupt: return "StoreCorrupt";
        case Errc::DuplicateEntry: return "DuplicateEntry";
        case Errc::VersionMismatch: return "VersionMismatch";
    }
    return "UnknownError";
}

int exit_code(Errc c) noexcept {
    switch (c) {
        case Errc::UnknownTag: return 10;
        case Errc::Truncated: return 11;
        case Errc::PointInvalid: return 12;
        case Errc::LengthMismatch: return 13;
        case Errc::MaskCorrupt: return 14;
        case Errc::VerificationFailed: return 20;
        case Errc::DuplicateServer: return 21;
        case Errc::AuthLocalFailed: return 22;
        case Errc::ServerAuthFailed: return 23;
        case Errc::UserAuthFailed: return 24;
        case Errc::StateError: return 25;
        case Errc::RcAuthFailed: return 26;
        case Errc::ReplayDetected: return 27;
        case Errc::IdentityPoint: return 28;
        case Errc::LocalCheckFailed: return 30;
        case Errc::M1Invalid: return 31;
        case Errc::M3Invalid: return 32;
        case Errc::M5Invalid: return 33;
        case Errc::NotInDictionary: return 40;
        case Errc::MissingPrecondition: return 41;
        case Errc::ProbeUnexpectedlySucceeded: return 42;
        case Errc::ScriptError: return 50;
        case Errc::Deadlock: return 51;
        case Errc::SecureLinkViolation: return 52;
        case Errc::SelectorEmpty: return 53;
        case Errc::ExpectationFailed: return 54;
        case Errc::StoreCorrupt: return 60;
        case Errc::DuplicateEntry: return 61;
        case Errc::VersionMismatch: return 62;
    }
    return 70;
}

Bytes sha256(const std::uint8_t* data, std::size_t n) {
    static const std::uint8_t empty = 0;
    Bytes out(32);
    unsigned int len = 32;
    EVP_Digest(n ? data : &empty, n, out.data(), &len, EVP_sha256(), nullptr);
    return out;
}

Bytes sha256(const Bytes& in) { return sha256(in.data(), in.size()); }

std::string to_hex(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (std::uint8_t v : b) {
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 0xf]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) fail(Errc::Truncated, "odd-length hex string");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_nibble(hex[2 * i]);
        int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) fail(Errc::Truncated, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return out;
}

Bytes xor_bytes(const Bytes& a, const Bytes& b) {
    if (a.size() != b.size())
        fail(Errc::LengthMismatch, "xor operands differ in length");
    Bytes out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
    return out;
}

}  // namespace msauth
