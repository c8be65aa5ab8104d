#pragma once
// Pairing-based dynamic-identity multi-server authentication with
// self-certified server keys. Actors:
//   RC      registration centre, holds master secret s_RC
//   user    holds a smart card {Reg, H_i, b} issued by RC
//   server  holds a self-certified key pair (s_j, pub_j) with witness W_j
//
// Protocol values (TF-1 worked instance in tests):
//   HPW   = h(ID,pw,b) * P          masked password point
//   QID   = H(ID)                   identity point
//   CID   = s_RC * QID              RC-bound credential
//   Reg   = CID ^ s_RC*HPW          card blob (mask of two points)
//   pub_j = h(SID,W_j)*pub_RC + W_j self-certified public key
//
// Login is a three-frame exchange (LoginRequest / ServerChallenge /
// UserResponse); password change is a four-frame, five-step exchange
// with RC (PwRound1..4 plus the final local card replacement).

#include <list>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>

#include "msauth/algebra.hpp"
#include "msauth/common.hpp"
#include "msauth/wire.hpp"

namespace msauth::scpk {

// Published after system initialization; everything a user or server
// needs besides its own secrets.
struct PublicParams {
    PointG1 pub_rc;  // s_RC * P
};

// Contents of a user's smart card. The card carries no identity and no
// plaintext credential: Reg unmasks only under h(ID,pw,b)*pub_RC.
struct SmartCard {
    MaskBlob reg;  // CID ^ s_RC*HPW
    Scalar h_i;    // h(QID, CID) - local credential check value
    Scalar b;      // salt folded into HPW
    bool operator==(const SmartCard&) const = default;
};

// RC -> user issuance payload (secure channel); the user keys b in.
struct CardIssue {
    MaskBlob reg;
    Scalar h_i;
};

// User-side registration request. {id, hpw} travel to RC; b stays local.
struct UserRegistration {
    Bytes id;
    PointG1 hpw;  // h(id, pw, b) * P
    Scalar b;
};

// Server registration flow 1 of 3: commitment V = v*P. v never leaves
// the server.
struct ServerCommit {
    Bytes sid;
    PointG1 v_pub;
    Scalar v;
};

// Flow 2 of 3, RC -> server: public witness W and partial key s'.
struct ServerIssue {
    PointG1 w;
    Scalar s_prime;
};

// A server's long-term key material after flow 3 (finalize).
struct ServerKey {
    Bytes sid;
    PointG1 w;      // public witness
    Scalar s_j;     // private key, (s' + v) mod q
    PointG1 pub_j;  // s_j * P; recomputable by anyone from (sid, w, pub_rc)
};

// Result of a successful card unlock.
struct CardSecrets {
    PointG1 qid;
    PointG1 cid;
};

enum class Phase { Idle, AwaitChallenge, AwaitResponse, Established, Failed };
const char* phase_name(Phase p) noexcept;

// ---- registration ----

// Draws the salt b, computes HPW = h(id,pw,b)*P.
UserRegistration user_register_begin(const PairingSuite& suite, const Bytes& id,
                                     const Bytes& pw);

SmartCard assemble_card(const UserRegistration& reg, const CardIssue& issue);

// Draws v, commits V = v*P.
ServerCommit server_register_begin(const PairingSuite& suite, const Bytes& sid);

// Completes registration: s_j = s' + v, then checks the self-certification
// identity s_j*P == h(sid,W)*pub_RC + W. Throws Error(VerificationFailed)
// if the identity fails (transmission corruption or RC misbehavior).
ServerKey server_register_finalize(const PairingSuite& suite, const PublicParams& params,
                                   const ServerCommit& commit, const ServerIssue& issue);

// The self-certified public key: anyone can compute it from public data.
PointG1 server_public_key(const PairingSuite& suite, const PublicParams& params,
                          const Bytes& sid, const PointG1& w);

// Recovers {QID, CID} from the card. Throws Error(AuthLocalFailed) on a
// wrong identity or password (the h(QID,CID) check fails, or the mask
// does not even unmask to a point); the card aborts with no message sent.
// Side-effect free: the card is never modified.
CardSecrets card_unlock(const PairingSuite& suite, const PublicParams& params,
                        const SmartCard& card, const Bytes& id, const Bytes& pw);

// ---- registration centre ----

// RC state for one password-change exchange (kept between rounds 1 and 3).
struct PwChangeRcSession {
    PointG1 cid;
    PointG1 blind;  // s_RC * Z = z * pub_RC
    bool round3_done = false;
};

class RcState {
public:
    // Draws s_RC and publishes pub_RC = s_RC * P.
    static RcState system_init(const PairingSuite& suite);
    // Deterministic entry for fixtures and persistence.
    static RcState from_secret(const PairingSuite& suite, Scalar s_rc);

    const PublicParams& params() const noexcept { return params_; }
    const Scalar& secret() const noexcept { return s_rc_; }

    // User issuance: QID = H(id), CID = s_RC*QID, Reg = CID ^ s_RC*HPW,
    // H_i = h(QID,CID). RC retains nothing about the user.
    CardIssue issue_card(const UserRegistration& req) const;
    std::size_t user_record_count() const noexcept { return 0; }

    // Server issuance: draws w, W = w*P + V, s' = s_RC*h(sid,W) + w.
    // Records (sid, W); re-registration of a sid throws DuplicateServer.
    ServerIssue register_server(const Bytes& sid, const PointG1& v_pub);
    std::size_t server_record_count() const noexcept { return servers_.size(); }

    // Password change, RC side. Round 1: authenticate the user by the
    // pairing check e(CID,P) == e(QID,pub_RC) (UserAuthFailed), reply
    // V1 = h(CID, blind). Round 3: verify V3 (UserAuthFailed), reply
    // {V4, V5} carrying the re-masked card blob.
    std::pair<wire::PwRound2, PwChangeRcSession> pw_round1(const wire::PwRound1& msg) const;
    wire::PwRound4 pw_round3(PwChangeRcSession& session, const wire::PwRound3& msg) const;

private:
    RcState(const PairingSuite& suite, Scalar s_rc);

    const PairingSuite* suite_;
    Scalar s_rc_;
    PublicParams params_;
    std::map<Bytes, PointG1> servers_;  // sid -> W (public record only)
};

// ---- login: user side ----

class UserSession {
public:
    // Unlocks the card immediately (AuthLocalFailed propagates; nothing
    // is sent on failure). The password is consumed here and not retained.
    UserSession(const PairingSuite& suite, const PublicParams& params,
                const SmartCard& card, Bytes id, const Bytes& pw, Bytes sid);

    // Draws fresh u, r; sends {DID = u*QID, R = r*P}.
    wire::LoginRequest begin();
    // Same, with (r, R = r*P) precomputed offline by the caller.
    wire::LoginRequest begin_with_precomputed(const Scalar& r, const PointG1& r_pub);

    // Verifies Auth_ji against the recomputed pub_j (ServerAuthFailed,
    // phase -> Failed), then answers {M = r*DID, B = (r+d)*N} and derives
    // the session key. Identity R_j is rejected up front (IdentityPoint).
    wire::UserResponse on_challenge(const wire::ServerChallenge& ch);

    Scalar session_key() const;  // StateError unless Established
    Phase phase() const noexcept { return phase_; }
    const PointG1& did() const noexcept { return did_; }

    // Logical reset: ephemerals (u, r, K, T, SK) are overwritten and the
    // phase returns to Idle. mpz storage is not securely scrubbed.
    void close();

private:
    const PairingSuite* suite_;
    const PublicParams* params_;
    Bytes id_, sid_;
    CardSecrets secrets_;
    Phase phase_ = Phase::Idle;
    Scalar u_, r_;
    PointG1 did_, r_pub_;
    PointG1 k_, t_;
    Scalar sk_;
};

// ---- login: server side ----

// Long-lived per-server state: key material plus the replay cache shared
// by all of that server's sessions. Sessions reference the runtime.
class ServerRuntime {
public:
    ServerRuntime(const PairingSuite& suite, const PublicParams& params, ServerKey key,
                  std::size_t replay_capacity = 1024);

    const PairingSuite& suite() const noexcept { return *suite_; }
    const PublicParams& params() const noexcept { return params_; }
    const ServerKey& key() const noexcept { return key_; }

    // Returns true when the fingerprint is fresh (and records it); false
    // on an exact duplicate. Bounded LRU: the oldest entry is evicted.
    bool replay_check_and_store(const Bytes& fingerprint);
    void clear_replay_cache();
    std::size_t replay_cache_size() const;

private:
    const PairingSuite* suite_;
    PublicParams params_;
    ServerKey key_;
    std::size_t capacity_;
    mutable std::mutex mu_;
    std::list<std::string> mru_;  // front = most recent
    std::unordered_map<std::string, std::list<std::string>::iterator> seen_;
};

// One login exchange. Copyable so a mid-protocol state can be forked
// (the soundness enumeration feeds many candidate responses to copies
// of a single challenged session); copies share the parent runtime.
class ServerSession {
public:
    explicit ServerSession(ServerRuntime& runtime);

    // Guards identity DID/R (IdentityPoint) and exact duplicates
    // (ReplayDetected), then draws r_j and answers
    // {W, R_j = r_j*P, Auth = h(DID,SID,K,R_j)} with K = s_j*R.
    wire::ServerChallenge on_request(const wire::LoginRequest& req);

    // Accepts iff e(M + d*DID, pub_RC) == e(B, P) with
    // d = h(DID,SID,K,M); throws UserAuthFailed otherwise (phase ->
    // Failed). On acceptance derives the session key.
    void on_response(const wire::UserResponse& resp);

    Scalar session_key() const;  // StateError unless Established
    Phase phase() const noexcept { return phase_; }
    void close();  // logical reset, as UserSession::close

private:
    ServerRuntime* rt_;
    Phase phase_ = Phase::Idle;
    PointG1 did_, r_i_;
    Scalar r_j_;
    PointG1 r_pub_;
    PointG1 k_, t_;
    Scalar sk_;
};

// ---- password change: user side ----

// Drives the user half of the five-step exchange. The input card is
// copied and never mutated; the caller installs the returned replacement
// card after on_round4, so an interruption at any earlier point leaves
// the original byte-identical (atomicity).
class PwChangeUser {
public:
    // Unlock with the OLD credentials is the denial-of-service guard: it
    // throws AuthLocalFailed before any message is built.
    PwChangeUser(const PairingSuite& suite, const PublicParams& params,
                 const SmartCard& card, Bytes id, const Bytes& old_pw, Bytes new_pw);

    // Draws z; sends {id, AID = CID ^ z*pub_RC, Z = z*P}.
    wire::PwRound1 round1();

    // Verifies V1 = h(CID, blind) (RcAuthFailed), draws the new salt
    // b_new, answers {V2 = HPW_new ^ blind, V3 = h(CID, blind, HPW_new)}.
    wire::PwRound3 on_round2(const wire::PwRound2& msg);

    // Verifies V5 = h(blind, Reg_new) (RcAuthFailed), assembles the
    // replacement card and proves it unlocks under the new password
    // before returning it (VerificationFailed if not).
    SmartCard on_round4(const wire::PwRound4& msg);

private:
    const PairingSuite* suite_;
    const PublicParams* params_;
    SmartCard card_;
    Bytes id_, new_pw_;
    CardSecrets secrets_;
    int step_ = 0;  // 0 fresh, 1 after round1, 2 after round2, 3 done
    Scalar z_, b_new_;
    PointG1 blind_;
    PointG1 hpw_new_;
};

}  // namespace msauth::scpk
