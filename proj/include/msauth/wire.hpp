#pragma once

#include <filesystem>
#include <variant>

#include "msauth/algebra.hpp"

namespace msauth::wire {

// Frame tags. 0x0x = pairing-scheme session and password-change messages,
// 0x1x = hash-only baseline messages.
enum class Tag : std::uint8_t {
    LoginRequest = 0x01,
    ServerChallenge = 0x02,
    UserResponse = 0x03,
    PwRound1 = 0x04,
    PwRound2 = 0x05,
    PwRound3 = 0x06,
    PwRound4 = 0x07,
    LiLogin = 0x11,
    LiChallenge = 0x12,
    LiConfirm = 0x13,
};

const char* tag_name(Tag t) noexcept;

// ---- pairing-scheme session messages ----

struct LoginRequest {
    PointG1 did;  // per-session pseudonym u_i * QID_i
    PointG1 r;    // r_i * P
    bool operator==(const LoginRequest&) const = default;
};

struct ServerChallenge {
    PointG1 w;    // server registration witness W_j
    PointG1 r;    // r_j * P
    Scalar auth;  // h(DID, SID, K_ji, R_j)
    bool operator==(const ServerChallenge&) const = default;
};

struct UserResponse {
    PointG1 m;  // r_i * DID_i
    PointG1 b;  // (r_i + d_ij) * N_i
    bool operator==(const UserResponse&) const = default;
};

// ---- password-change exchange (4 frames, 5 protocol steps) ----

struct PwRound1 {
    Bytes id;
    MaskBlob aid;  // CID_i xor z_i * pub_RC
    PointG1 z;     // z_i * P
    bool operator==(const PwRound1&) const = default;
};

struct PwRound2 {
    Scalar v1;  // h(CID_i, s_RC * Z_i)
    bool operator==(const PwRound2&) const = default;
};

struct PwRound3 {
    MaskBlob v2;  // HPW_new xor z_i * pub_RC
    Scalar v3;    // h(CID_i, z_i * pub_RC, HPW_new)
    bool operator==(const PwRound3&) const = default;
};

struct PwRound4 {
    MaskBlob v4;  // Reg_new xor s_RC * Z_i
    Scalar v5;    // h(s_RC * Z_i, Reg_new)
    bool operator==(const PwRound4&) const = default;
};

// ---- hash-only baseline messages (fields are hash-sized octet strings) ----

struct LiLogin {
    Bytes p_ij, cid, m1, m2;
    bool operator==(const LiLogin&) const = default;
};

struct LiChallenge {
    Bytes m3, m4;
    bool operator==(const LiChallenge&) const = default;
};

struct LiConfirm {
    Bytes m5;
    bool operator==(const LiConfirm&) const = default;
};

using Message = std::variant<LoginRequest, ServerChallenge, UserResponse, PwRound1,
                             PwRound2, PwRound3, PwRound4, LiLogin, LiChallenge,
                             LiConfirm>;

Tag tag_of(const Message& m) noexcept;

// Deterministic, self-describing framing: [tag][fields...]. Group elements
// and scalars are raw fixed-width canonical encodings; identity strings and
// baseline hash strings carry a one-byte length prefix. Byte-exact layout in
// docs/encoding.md.
Bytes encode(const PairingSuite& suite, const Message& m);

// Inverse of encode. All points are validated (on-curve, in-subgroup);
// login-request points must additionally be non-identity.
// Throws Error(UnknownTag | Truncated | PointInvalid).
Message decode(const PairingSuite& suite, const Bytes& frame);

// ---- transcript recording ----

struct TranscriptEntry {
    std::uint64_t ts = 0;  // logical timestamp (monotone; no wall clock)
    std::string from;
    std::string to;
    std::string type;  // tag_name of the payload, or a scenario-level label
    Bytes payload;     // exact frame bytes
    bool operator==(const TranscriptEntry&) const = default;
};

// Append-only, byte-exact message log. Persisted as line-delimited JSON
// records {from, payload(hex), to, ts, type} — the file format consumed by
// the attack and replay tooling.
class Transcript {
public:
    std::uint64_t append(std::string from, std::string to, std::string type,
                         Bytes payload);  // returns the assigned timestamp
    void append_entry(TranscriptEntry e);  // keeps e.ts (replay fidelity)

    const std::vector<TranscriptEntry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

    std::string to_jsonl() const;
    static Transcript from_jsonl(std::string_view text);  // throws Error(Truncated)

    void save(const std::filesystem::path& file) const;
    static Transcript load(const std::filesystem::path& file);

private:
    std::vector<TranscriptEntry> entries_;
    std::uint64_t next_ts_ = 0;
};

}  // namespace msauth::wire
