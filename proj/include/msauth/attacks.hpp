#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msauth/baseline.hpp"
#include "msauth/scpk.hpp"

// Attack demonstrations against the hash-only baseline, and resistance
// probes that mount the analogous attacks against the pairing-based scheme.
//
// The baseline attacks all hinge on one lemma: anyone holding the insider
// values h(y) and h(x‖y) — any registered server operator, for instance —
// can reverse the masking of a captured login message and recover the whole
// authentication chain (N_i, E, B, D, A) offline. recover_chain() is that
// lemma; the four attacks compose it.

namespace msauth::attacks {

// What the adversary has. Attack functions fail fast with
// MissingPrecondition when a required element is absent, so every
// demonstration states its assumptions precisely.
struct AdversaryContext {
    Bytes sid;                                           // target server (public)
    std::optional<Bytes> hy;                             // insider value h(y)
    std::optional<Bytes> hxy;                            // insider value h(x‖y)
    std::optional<baseline::LiSmartCard> stolen_card;    // physical theft
    std::vector<wire::LiLogin> captured_logins;          // passive wiretap
    std::vector<Bytes> id_candidates;                    // identity guesses
    std::vector<Bytes> pw_dictionary;                    // password guesses
};

// ---- primitives -----------------------------------------------------------

struct RecoveredChain {
    Bytes n_i, e, b_chain, d, a;  // b_chain is the card value B = h(ID‖x)
};

// Unmask one captured login using the insider values (no card needed).
RecoveredChain recover_chain(const baseline::LiSuite& s, const AdversaryContext& ctx,
                             const wire::LiLogin& login);

struct DictionaryResult {
    Bytes id, pw, a;
    std::size_t hash_evals = 0;
};

// Stolen card + one captured login: recover A without any guessing, then
// invert C over the identity candidates and A over the password dictionary.
// Throws NotInDictionary if either list misses the truth.
DictionaryResult stolen_card_dictionary(const baseline::LiSuite& s,
                                        const AdversaryContext& ctx);

struct ReplayOutcome {
    wire::LiConfirm confirm;
    Bytes session_key;
};

// Answer a fresh challenge for a verbatim-replayed login, yielding a full
// session (key included) in the named user's identity.
ReplayOutcome replay_answer(const baseline::LiSuite& s, const AdversaryContext& ctx,
                            const wire::LiLogin& replayed,
                            const wire::LiChallenge& fresh);

struct FabricatedUser {
    wire::LiLogin login;
    baseline::LiUserPending pending;
};

// Forge a login for a user who was never registered: pick A = h(seed_a),
// B = h(seed_b) and mask them exactly as a card would. The server's checks
// all pass because nothing it verifies is bound to the registration secrets.
FabricatedUser impersonate_user(const baseline::LiSuite& s, const AdversaryContext& ctx,
                                const Bytes& seed_a, const Bytes& seed_b,
                                const Bytes& n_i);

struct SpoofOutcome {
    wire::LiChallenge forged;
    Bytes session_key;
};

// Intercept a live login, unmask it, and answer in the server's place with
// an adversary-chosen nonce. The victim's card accepts and the adversary
// shares the resulting session key.
SpoofOutcome spoof_server(const baseline::LiSuite& s, const AdversaryContext& ctx,
                          const wire::LiLogin& intercepted, const Bytes& n_j);

// ---- scripted end-to-end demonstrations ------------------------------------

enum class BaselineAttack { dictionary, replay, impersonate, spoof_server };

const char* attack_name(BaselineAttack a) noexcept;
std::optional<BaselineAttack> attack_from_name(std::string_view name) noexcept;

struct AttackReport {
    std::string attack;
    bool succeeded = false;
    std::vector<std::pair<std::string, std::string>> evidence;
};

// Build a seeded victim deployment (SHA-256 instantiation), mount the attack
// end to end against real protocol runs, and report what the adversary
// obtained. Deterministic for a fixed seed.
AttackReport run_baseline_attack(BaselineAttack which, std::uint64_t seed);

// ---- resistance probes against the pairing-based scheme --------------------

enum class ProbeKind {
    replay,
    impersonate,
    spoof_server,
    stolen_card_dictionary,
    dos_password_change,
};

const char* probe_name(ProbeKind k) noexcept;
std::optional<ProbeKind> probe_from_name(std::string_view name) noexcept;

// One probe trial mounts the baseline attack's closest analogue against the
// pairing-based scheme; `failures` counts trials the defense defeated and
// `failure_stage` names the operation where it fired:
//   replay, impersonate      → "server_verify_user"
//   spoof_server             → "user_verify_and_respond"
//   stolen_card_dictionary,
//   dos_password_change      → "card_unlock"
struct ProbeReport {
    std::string probe;
    int trials = 0;
    int failures = 0;
    std::string failure_stage;
};

// Transparent backend runs on a 61-bit group (accidental acceptance of a
// guessed group element ~ 4e-19 per trial); the production curve is for
// smaller smoke runs.
ProbeReport probe_proposed_resistance(ProbeKind kind, int trials, std::uint64_t seed,
                                      BackendId backend = BackendId::transparent);

}  // namespace msauth::attacks
