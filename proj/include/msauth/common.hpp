#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace msauth {

using Bytes = std::vector<std::uint8_t>;

// Every failure the library can signal. The CLI maps each value to a
// distinct documented exit code (see exit_code / README).
enum class Errc {
    // wire / encoding
    UnknownTag,
    Truncated,
    PointInvalid,
    LengthMismatch,
    MaskCorrupt,
    // pairing-scheme protocol
    VerificationFailed,
    DuplicateServer,
    AuthLocalFailed,
    ServerAuthFailed,
    UserAuthFailed,
    StateError,
    RcAuthFailed,
    ReplayDetected,
    IdentityPoint,
    // hash-only baseline protocol
    LocalCheckFailed,
    M1Invalid,
    M3Invalid,
    M5Invalid,
    // attacks / probes
    NotInDictionary,
    MissingPrecondition,
    ProbeUnexpectedlySucceeded,
    // simulator
    ScriptError,
    Deadlock,
    SecureLinkViolation,
    SelectorEmpty,
    ExpectationFailed,
    // persistence
    StoreCorrupt,
    DuplicateEntry,
    VersionMismatch,
};

const char* errc_name(Errc c) noexcept;
int exit_code(Errc c) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc c, const std::string& msg)
        : std::runtime_error(std::string(errc_name(c)) + ": " + msg), code_(c) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw Error(c, msg); }

// ---- small byte utilities ----------------------------------------------

Bytes sha256(const Bytes& in);
Bytes sha256(const std::uint8_t* data, std::size_t n);

std::string to_hex(const Bytes& b);
Bytes from_hex(std::string_view hex);  // throws Error(Truncated) on bad input

inline Bytes str_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string bytes_str(const Bytes& b) { return std::string(b.begin(), b.end()); }

Bytes xor_bytes(const Bytes& a, const Bytes& b);  // throws Error(LengthMismatch)

}  // namespace msauth
