#pragma once

#include <functional>
#include <random>

#include "msauth/common.hpp"
#include "msauth/wire.hpp"

// The hash-only predecessor scheme: dynamic-identity login for multi-server
// environments built from one keyed hash chain and XOR masking, with no
// public-key operations. It is implemented here faithfully — including the
// weaknesses the attacks module demonstrates — as the comparison target and
// attack victim. Nothing in this module is hardened beyond the original
// design; see attacks.hpp for what breaks and README for why.

namespace msauth::baseline {

// Hash abstraction. `digest` maps an octet string to `hash_len` octets;
// hash() frames each field with a one-byte length prefix first (the same
// rule the group-based scheme uses), so concatenation boundaries are
// unambiguous. All card fields, nonces and message fields are exactly
// hash_len octets.
struct LiSuite {
    std::size_t hash_len;
    std::function<Bytes(const Bytes&)> digest;

    Bytes hash(std::initializer_list<Bytes> fields) const;
    Bytes hash(const std::vector<Bytes>& fields) const;
    // zero-pad or truncate a password/secret to hash_len for XOR masking
    Bytes pad_secret(const Bytes& pw) const;
};

LiSuite li_sha256_suite();  // production instantiation (32-byte SHA-256)
LiSuite li_toy_suite();     // 1-byte byte-sum digest for worked fixtures

// Registration-centre master secrets. x keys user identities, y keys server
// identities; h(x‖y) and h(SID‖h(y)) are provisioned to servers.
struct LiRcState {
    Bytes x, y;
};

struct LiSmartCard {
    Bytes c;   // h(ID ‖ h(y) ‖ A) — local password check value
    Bytes d;   // h(B ‖ h(x‖y))
    Bytes e;   // B xor h(x‖y)
    Bytes b;   // registration nonce, masks PW in A = h(b xor PW)
    Bytes hy;  // h(y)
    bool operator==(const LiSmartCard&) const = default;
};

struct LiServerState {
    Bytes sid;
    Bytes hxy;       // h(x ‖ y)
    Bytes h_sid_hy;  // h(SID ‖ h(y))
};

LiSmartCard li_register(const LiSuite& s, const LiRcState& rc, const Bytes& id,
                        const Bytes& pw, const Bytes& b);
LiServerState li_provision_server(const LiSuite& s, const LiRcState& rc,
                                  const Bytes& sid);

// ---- login exchange ------------------------------------------------------
// User → Server: LiLogin{P_ij, CID, M1, M2}
// Server → User: LiChallenge{M3, M4}
// User → Server: LiConfirm{M5}
// Both sides then hold SK = h(D ‖ A ‖ N_i ‖ N_j ‖ SID).

struct LiUserPending {
    Bytes a, d, n_i, sid;
};
struct LiServerPending {
    Bytes a, d, n_i, n_j, sid;
};

struct LiUserStart {
    wire::LiLogin msg;
    LiUserPending pending;
};
struct LiServerReply {
    wire::LiChallenge msg;
    LiServerPending pending;
};
struct LiUserFinish {
    wire::LiConfirm msg;
    Bytes session_key;
};

// throws LocalCheckFailed if (ID, PW) do not open the card
LiUserStart li_login(const LiSuite& s, const LiSmartCard& card, const Bytes& id,
                     const Bytes& pw, const Bytes& sid, const Bytes& n_i);
// throws M1Invalid if the recovered chain fails the integrity check
LiServerReply li_server_verify(const LiSuite& s, const LiServerState& srv,
                               const wire::LiLogin& msg, const Bytes& n_j);
// throws M3Invalid if the server's answer does not verify
LiUserFinish li_card_confirm(const LiSuite& s, const LiUserPending& pending,
                             const wire::LiChallenge& msg);
// throws M5Invalid; returns the session key on success
Bytes li_server_confirm(const LiSuite& s, const LiServerPending& pending,
                        const wire::LiConfirm& msg);

// Offline password change: replaces C and b only; D, E, hy stay
// byte-identical (which is exactly what the stolen-card attacks exploit).
LiSmartCard li_password_change(const LiSuite& s, const LiSmartCard& card,
                               const Bytes& id, const Bytes& old_pw,
                               const Bytes& new_pw, const Bytes& b_new);

// deterministic nonce helper for tests / CLI / simulator
Bytes li_nonce(std::mt19937_64& rng, std::size_t n);

}  // namespace msauth::baseline
