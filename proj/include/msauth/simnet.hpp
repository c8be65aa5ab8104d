#pragma once
// Deterministic in-process network simulator. Principals — users, servers,
// a registration centre and optionally an adversary — exchange wire frames
// over links that are either secure (registration-centre traffic; adversary
// rules may not reference them) or public (session traffic, subject to the
// ordered adversary rules deliver / drop / copy / replace). Scenarios are
// declarative JSON documents; a run executes the script to quiescence and
// yields the full transcript, one outcome string per principal, and frame
// accounting. Messages carry monotone logical timestamps; there is no wall
// clock, so stalls surface as outcomes (or Deadlock when the scenario
// demands completion) rather than timeouts.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msauth/algebra.hpp"
#include "msauth/common.hpp"
#include "msauth/wire.hpp"

namespace msauth::simnet {

enum class Role { user, server, rc, adversary };
const char* role_name(Role r) noexcept;
std::optional<Role> role_from_name(std::string_view name) noexcept;

// Link classification. JSON spells LinkMode::open as "public" (a C++
// keyword). Links touching the registration centre are secure and cannot
// be opened; everything else defaults to public.
enum class LinkMode { secure, open };

enum class RuleAction { deliver, drop, copy, replace };
const char* rule_action_name(RuleAction a) noexcept;
std::optional<RuleAction> rule_action_from_name(std::string_view name) noexcept;

struct CastEntry {
    std::string id;
    Role role = Role::user;
    std::string password;            // users: card password
    std::vector<std::string> knows;  // adversary insider values ("hy", "hxy")
    bool replay_cache = true;        // servers: false = keep no replay cache
};

struct LinkOverride {
    std::string a, b;  // unordered endpoint pair
    LinkMode mode = LinkMode::open;
};

// One adversary rule. Omitted match fields match anything; `index`
// restricts the rule to its nth match (0-based). Rules apply in order:
// `copy` observes the frame and keeps scanning, the other actions consume
// it. `replace` perturbs one named field, leaving the frame well-formed.
struct Rule {
    std::optional<std::string> from, to, type;
    std::optional<int> index;
    RuleAction action = RuleAction::deliver;
    std::optional<std::string> field;  // replace: which field to perturb
};

// Script steps run in order, each followed by delivery to quiescence.
//   start_login  args: user, server
//   replay       args: type, [index], [as], [to]  — re-inject a transcript
//                frame (sender defaults to the adversary, destination to
//                the original recipient)
struct ScriptAction {
    std::string action;
    std::map<std::string, std::string> args;
};

struct Scenario {
    std::string name;
    std::string protocol = "scpk";  // "scpk" | "baseline"
    std::uint64_t seed = 1;
    std::vector<CastEntry> cast;
    std::vector<LinkOverride> links;
    std::vector<Rule> rules;
    std::vector<ScriptAction> script;
    // principal id -> expected outcome string, plus the synthetic key
    // "keys_equal" ("true" / "false" / "n/a"). Empty map = no expectations.
    std::map<std::string, std::string> expect;
    bool require_completion = false;  // unfinished sessions -> Deadlock
};

// Parse a declarative scenario document. Malformed JSON, unknown roles,
// unknown rule actions, duplicate cast ids and other structural faults
// throw Error(ScriptError); rules or link overrides that touch a secure
// link throw Error(SecureLinkViolation).
Scenario load_scenario_json(const std::string& text);
Scenario load_scenario_file(const std::filesystem::path& path);

// Frame accounting. Every sent frame is delivered, dropped or replaced
// exactly once; copies to the adversary are additional.
struct RunStats {
    std::size_t sent = 0;
    std::size_t delivered = 0;
    std::size_t dropped = 0;
    std::size_t replaced = 0;
    std::size_t copied = 0;
};

struct RunResult {
    wire::Transcript transcript;
    // One entry per cast principal (sessions joined with ';' in creation
    // order; "Stalled:<phase>" for unfinished ones) plus "keys_equal".
    std::map<std::string, std::string> outcomes;
    RunStats stats;
};

// Execute a scenario to quiescence. The transcript bytes are a pure
// function of (scenario, seed, backend). Throws ScriptError /
// SecureLinkViolation for bad scenarios, SelectorEmpty when a replay step
// matches nothing, ExpectationFailed when a non-empty `expect` entry
// mismatches, and Deadlock when require_completion is set but sessions
// remain unfinished with no deliverable messages.
RunResult run_scenario(const Scenario& sc, BackendId backend = BackendId::transparent);

// Select a historical frame for re-injection: the index-th transcript
// entry of the given type, optionally narrowed by sender / recipient.
// Throws Error(SelectorEmpty) when nothing matches.
struct Selector {
    std::string type;
    std::size_t index = 0;
    std::optional<std::string> from, to;
};
const wire::TranscriptEntry& replay_from_transcript(const wire::Transcript& t,
                                                    const Selector& sel);

}  // namespace msauth::simnet
