#include "msauth/simnet.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <utility>
#include <variant>

#include <json.hpp>

#include "msauth/attacks.hpp"
#include "msauth/baseline.hpp"
#include "msauth/scpk.hpp"

namespace msauth::simnet {

const char* role_name(Role r) noexcept {
    switch (r) {
        case Role::user: return "user";
        case Role::server: return "server";
        case Role::rc: return "rc";
        case Role::adversary: return "adversary";
    }
    return "?";
}

std::optional<Role> role_from_name(std::string_view name) noexcept {
    if (name == "user") return Role::user;
    if (name == "server") return Role::server;
    if (name == "rc") return Role::rc;
    if (name == "adversary") return Role::adversary;
    return std::nullopt;
}

const char* rule_action_name(RuleAction a) noexcept {
    switch (a) {
        case RuleAction::deliver: return "deliver";
        case RuleAction::drop: return "drop";
        case RuleAction::copy: return "copy";
        case RuleAction::replace: return "replace";
    }
    return "?";
}

std::optional<RuleAction> rule_action_from_name(std::string_view name) noexcept {
    if (name == "deliver") return RuleAction::deliver;
    if (name == "drop") return RuleAction::drop;
    if (name == "copy" || name == "copy-to-adversary") return RuleAction::copy;
    if (name == "replace") return RuleAction::replace;
    return std::nullopt;
}

namespace {

using json = nlohmann::json;

[[noreturn]] void bad_script(const std::string& what) { fail(Errc::ScriptError, what); }

std::string json_string(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string())
        bad_script(where + ": missing string field '" + key + "'");
    return j.at(key).get<std::string>();
}

LinkMode parse_mode(const std::string& s, const std::string& where) {
    if (s == "secure") return LinkMode::secure;
    if (s == "public") return LinkMode::open;
    bad_script(where + ": unknown link mode '" + s + "'");
}

CastEntry parse_cast(const json& j) {
    if (!j.is_object()) bad_script("cast: entries must be objects");
    CastEntry e;
    e.id = json_string(j, "id", "cast");
    if (e.id.empty()) bad_script("cast: empty principal id");
    auto role = role_from_name(json_string(j, "role", "cast entry '" + e.id + "'"));
    if (!role) bad_script("cast entry '" + e.id + "': unknown role");
    e.role = *role;
    if (j.contains("password")) e.password = json_string(j, "password", "cast entry '" + e.id + "'");
    if (j.contains("replay_cache")) {
        if (!j.at("replay_cache").is_boolean())
            bad_script("cast entry '" + e.id + "': replay_cache must be boolean");
        e.replay_cache = j.at("replay_cache").get<bool>();
    }
    if (j.contains("knows")) {
        if (!j.at("knows").is_array())
            bad_script("cast entry '" + e.id + "': knows must be an array");
        for (const auto& k : j.at("knows")) {
            if (!k.is_string()) bad_script("cast entry '" + e.id + "': knows entries must be strings");
            e.knows.push_back(k.get<std::string>());
        }
    }
    return e;
}

Rule parse_rule(const json& j) {
    if (!j.is_object()) bad_script("rules: entries must be objects");
    Rule r;
    if (j.contains("from")) r.from = json_string(j, "from", "rule");
    if (j.contains("to")) r.to = json_string(j, "to", "rule");
    if (j.contains("type")) r.type = json_string(j, "type", "rule");
    if (j.contains("index")) {
        if (!j.at("index").is_number_integer() || j.at("index").get<int>() < 0)
            bad_script("rule: index must be a non-negative integer");
        r.index = j.at("index").get<int>();
    }
    auto action = rule_action_from_name(json_string(j, "action", "rule"));
    if (!action) bad_script("rule: unknown action");
    r.action = *action;
    if (j.contains("field")) r.field = json_string(j, "field", "rule");
    return r;
}

ScriptAction parse_step(const json& j) {
    if (!j.is_object()) bad_script("script: entries must be objects");
    ScriptAction a;
    a.action = json_string(j, "action", "script step");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "action") continue;
        const json& v = it.value();
        if (v.is_string())
            a.args[it.key()] = v.get<std::string>();
        else if (v.is_number_integer())
            a.args[it.key()] = std::to_string(v.get<long long>());
        else if (v.is_boolean())
            a.args[it.key()] = v.get<bool>() ? "true" : "false";
        else
            bad_script("script step '" + a.action + "': argument '" + it.key() +
                       "' must be a string, integer or boolean");
    }
    return a;
}

// Structural validation shared by the JSON loader and run_scenario (which
// also accepts programmatically built scenarios).
void validate(const Scenario& sc) {
    if (sc.protocol != "scpk" && sc.protocol != "baseline")
        bad_script("unknown protocol '" + sc.protocol + "'");
    if (sc.cast.empty()) bad_script("cast is empty");

    std::map<std::string, Role> roles;
    std::size_t rcs = 0, adversaries = 0;
    for (const auto& e : sc.cast) {
        if (e.id.empty()) bad_script("cast: empty principal id");
        if (!roles.emplace(e.id, e.role).second)
            bad_script("cast: duplicate principal id '" + e.id + "'");
        if (e.role == Role::rc) ++rcs;
        if (e.role == Role::adversary) ++adversaries;
        for (const auto& k : e.knows) {
            if (e.role != Role::adversary)
                bad_script("cast entry '" + e.id + "': only adversaries declare insider values");
            if (k != "hy" && k != "hxy")
                bad_script("cast entry '" + e.id + "': unknown insider value '" + k + "'");
        }
    }
    if (rcs != 1) bad_script("cast needs exactly one registration-centre principal");

    auto role_of = [&](const std::string& id, const std::string& where) {
        auto it = roles.find(id);
        if (it == roles.end()) bad_script(where + ": unknown principal '" + id + "'");
        return it->second;
    };

    for (const auto& l : sc.links) {
        Role ra = role_of(l.a, "links");
        Role rb = role_of(l.b, "links");
        if ((ra == Role::rc || rb == Role::rc) && l.mode == LinkMode::open)
            fail(Errc::SecureLinkViolation,
                 "link " + l.a + "<->" + l.b + ": registration-centre links cannot be opened");
    }

    auto is_secure = [&](const std::string& a, const std::string& b) {
        for (const auto& l : sc.links)
            if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return l.mode == LinkMode::secure;
        return roles.at(a) == Role::rc || roles.at(b) == Role::rc;
    };

    for (const auto& r : sc.rules) {
        if (r.from && role_of(*r.from, "rule") == Role::rc)
            fail(Errc::SecureLinkViolation, "rule references secure principal '" + *r.from + "'");
        if (r.to && role_of(*r.to, "rule") == Role::rc)
            fail(Errc::SecureLinkViolation, "rule references secure principal '" + *r.to + "'");
        if (r.from && r.to && is_secure(*r.from, *r.to))
            fail(Errc::SecureLinkViolation,
                 "rule references secure link " + *r.from + "<->" + *r.to);
        if (r.action == RuleAction::replace && !r.field)
            bad_script("replace rule needs a 'field'");
        if (r.action == RuleAction::copy && adversaries == 0)
            bad_script("copy rule needs an adversary in the cast");
    }

    for (const auto& s : sc.script)
        if (s.action != "start_login" && s.action != "replay")
            bad_script("unknown script action '" + s.action + "'");

    for (const auto& [key, value] : sc.expect) {
        (void)value;
        if (key != "keys_equal" && roles.find(key) == roles.end())
            bad_script("expect: unknown principal '" + key + "'");
    }
}

// ---- the engine -----------------------------------------------------------

struct Frame {
    std::string from, to, type;
    Bytes payload;
};

constexpr const char* kEstablished = "Established";

class Engine {
public:
    Engine(const Scenario& sc, BackendId backend) : sc_(sc), backend_(backend) {}

    RunResult run() {
        setup();
        for (const auto& step : sc_.script) {
            if (step.action == "start_login")
                start_login(step);
            else
                replay(step);
            pump();
        }
        return finish();
    }

private:
    // ---- per-principal state ----

    struct ScpkUserSession {
        std::optional<scpk::UserSession> sess;
        std::optional<std::string> result;
    };
    struct ScpkUser {
        Bytes id, pw;
        scpk::SmartCard card;
        std::vector<ScpkUserSession> sessions;
    };
    struct ScpkServerSession {
        scpk::ServerSession sess;
        std::optional<std::string> result;
    };
    struct ScpkServer {
        bool replay_cache = true;
        std::unique_ptr<scpk::ServerRuntime> rt;
        std::vector<ScpkServerSession> sessions;
    };

    struct LiUserSession {
        std::optional<baseline::LiUserPending> pending;
        std::optional<Bytes> sk;
        std::optional<std::string> result;
    };
    struct LiUser {
        Bytes id, pw;
        baseline::LiSmartCard card;
        std::vector<LiUserSession> sessions;
    };
    struct LiServerSession {
        std::optional<baseline::LiServerPending> pending;
        std::optional<Bytes> sk;
        std::optional<std::string> result;
    };
    struct LiServer {
        baseline::LiServerState st;
        std::vector<LiServerSession> sessions;
    };

    struct Adversary {
        std::size_t captured = 0;
        std::size_t hijacked = 0;
        bool knows_hy = false, knows_hxy = false;
        std::optional<Bytes> hy, hxy;
        std::optional<wire::LiLogin> pending_replay;
        Bytes pending_sid;
    };

    // ---- setup ----

    void setup() {
        validate(sc_);
        for (const auto& e : sc_.cast) roles_[e.id] = e.role;
        for (const auto& e : sc_.cast)
            if (e.role == Role::adversary && adversary_id_.empty()) adversary_id_ = e.id;

        SuiteOptions opts;
        opts.seed = sc_.seed;
        if (backend_ == BackendId::transparent)
            opts.transparent_q = mpz_class("2305843009213693951");  // 2^61 - 1
        suite_ = PairingSuite::make(backend_, opts);

        if (sc_.protocol == "scpk")
            setup_scpk();
        else
            setup_baseline();
    }

    void setup_scpk() {
        rc_.emplace(scpk::RcState::system_init(*suite_));
        for (const auto& e : sc_.cast) {
            switch (e.role) {
                case Role::server: {
                    auto commit = scpk::server_register_begin(*suite_, str_bytes(e.id));
                    auto issue = rc_->register_server(commit.sid, commit.v_pub);
                    auto key = scpk::server_register_finalize(*suite_, rc_->params(), commit, issue);
                    ScpkServer srv;
                    srv.replay_cache = e.replay_cache;
                    srv.rt = std::make_unique<scpk::ServerRuntime>(*suite_, rc_->params(),
                                                                   std::move(key));
                    scpk_servers_.emplace(e.id, std::move(srv));
                    break;
                }
                case Role::user: {
                    ScpkUser u;
                    u.id = str_bytes(e.id);
                    u.pw = str_bytes(e.password);
                    auto reg = scpk::user_register_begin(*suite_, u.id, u.pw);
                    u.card = scpk::assemble_card(reg, rc_->issue_card(reg));
                    scpk_users_.emplace(e.id, std::move(u));
                    break;
                }
                case Role::adversary:
                    adversaries_.emplace(e.id, Adversary{});
                    break;
                case Role::rc:
                    break;
            }
        }
    }

    void setup_baseline() {
        li_ = baseline::li_sha256_suite();
        rng_ = std::mt19937_64(sc_.seed);
        lirc_ = baseline::LiRcState{baseline::li_nonce(rng_, 16), baseline::li_nonce(rng_, 16)};
        for (const auto& e : sc_.cast) {
            switch (e.role) {
                case Role::server:
                    li_servers_.emplace(
                        e.id, LiServer{baseline::li_provision_server(li_, *lirc_,
                                                                     str_bytes(e.id)),
                                       {}});
                    break;
                case Role::user: {
                    LiUser u;
                    u.id = str_bytes(e.id);
                    u.pw = str_bytes(e.password);
                    u.card = baseline::li_register(li_, *lirc_, u.id, u.pw,
                                                   baseline::li_nonce(rng_, li_.hash_len));
                    li_users_.emplace(e.id, std::move(u));
                    break;
                }
                case Role::adversary: {
                    Adversary adv;
                    for (const auto& k : sc_.cast) {
                        if (k.id != e.id) continue;
                        for (const auto& known : k.knows) {
                            if (known == "hy") adv.hy = li_.hash({lirc_->y});
                            if (known == "hxy") adv.hxy = li_.hash({lirc_->x, lirc_->y});
                        }
                    }
                    adversaries_.emplace(e.id, std::move(adv));
                    break;
                }
                case Role::rc:
                    break;
            }
        }
    }

    // ---- script steps ----

    std::string arg(const ScriptAction& step, const char* key) const {
        auto it = step.args.find(key);
        if (it == step.args.end())
            bad_script("script step '" + step.action + "': missing argument '" + key + "'");
        return it->second;
    }
    std::optional<std::string> opt_arg(const ScriptAction& step, const char* key) const {
        auto it = step.args.find(key);
        if (it == step.args.end()) return std::nullopt;
        return it->second;
    }

    Role role_of(const std::string& id, const std::string& where) const {
        auto it = roles_.find(id);
        if (it == roles_.end()) bad_script(where + ": unknown principal '" + id + "'");
        return it->second;
    }

    void start_login(const ScriptAction& step) {
        std::string user = arg(step, "user");
        std::string server = arg(step, "server");
        if (role_of(user, "start_login") != Role::user)
            bad_script("start_login: '" + user + "' is not a user");
        if (role_of(server, "start_login") != Role::server)
            bad_script("start_login: '" + server + "' is not a server");

        if (sc_.protocol == "scpk") {
            ScpkUser& u = scpk_users_.at(user);
            ScpkUserSession s;
            try {
                s.sess.emplace(*suite_, rc_->params(), u.card, u.id, u.pw, str_bytes(server));
                wire::LoginRequest req = s.sess->begin();
                u.sessions.push_back(std::move(s));
                send(user, server, wire::Message{req});
            } catch (const Error& e) {
                s.result = std::string("Failed:") + errc_name(e.code());
                u.sessions.push_back(std::move(s));
            }
        } else {
            LiUser& u = li_users_.at(user);
            LiUserSession s;
            try {
                auto start = baseline::li_login(li_, u.card, u.id, u.pw, str_bytes(server),
                                                baseline::li_nonce(rng_, li_.hash_len));
                s.pending = start.pending;
                u.sessions.push_back(std::move(s));
                send(user, server, wire::Message{start.msg});
            } catch (const Error& e) {
                s.result = std::string("Failed:") + errc_name(e.code());
                u.sessions.push_back(std::move(s));
            }
        }
    }

    void replay(const ScriptAction& step) {
        Selector sel;
        sel.type = arg(step, "type");
        if (auto idx = opt_arg(step, "index")) {
            try {
                sel.index = std::stoul(*idx);
            } catch (const std::exception&) {
                bad_script("replay: index must be a non-negative integer");
            }
        }
        const wire::TranscriptEntry& entry = replay_from_transcript(transcript_, sel);

        std::string as = opt_arg(step, "as").value_or(adversary_id_);
        if (as.empty()) bad_script("replay: no adversary in the cast and no 'as' argument");
        if (role_of(as, "replay") != Role::adversary)
            bad_script("replay: '" + as + "' is not an adversary");
        std::string to = opt_arg(step, "to").value_or(entry.to);
        role_of(to, "replay");

        if (sc_.protocol == "baseline" && entry.type == "LiLogin") {
            Adversary& adv = adversaries_.at(as);
            adv.pending_replay = std::get<wire::LiLogin>(wire::decode(*suite_, entry.payload));
            adv.pending_sid = str_bytes(to);
        }
        send_raw(as, to, entry.type, entry.payload);
    }

    // ---- frame transport ----

    void send(const std::string& from, const std::string& to, const wire::Message& msg) {
        send_raw(from, to, wire::tag_name(wire::tag_of(msg)), wire::encode(*suite_, msg));
    }

    void send_raw(std::string from, std::string to, std::string type, Bytes payload) {
        ++stats_.sent;
        queue_.push_back(Frame{std::move(from), std::move(to), std::move(type),
                               std::move(payload)});
    }

    void pump() {
        while (!queue_.empty()) {
            Frame f = std::move(queue_.front());
            queue_.pop_front();
            process(std::move(f));
        }
    }

    bool link_is_secure(const std::string& a, const std::string& b) const {
        for (const auto& l : sc_.links)
            if ((l.a == a && l.b == b) || (l.a == b && l.b == a))
                return l.mode == LinkMode::secure;
        return roles_.at(a) == Role::rc || roles_.at(b) == Role::rc;
    }

    void process(Frame f) {
        bool replaced = false;
        if (!link_is_secure(f.from, f.to)) {
            if (rule_hits_.size() < sc_.rules.size()) rule_hits_.resize(sc_.rules.size(), 0);
            for (std::size_t i = 0; i < sc_.rules.size(); ++i) {
                const Rule& r = sc_.rules[i];
                if (r.from && *r.from != f.from) continue;
                if (r.to && *r.to != f.to) continue;
                if (r.type && *r.type != f.type) continue;
                int occurrence = rule_hits_[i]++;
                if (r.index && *r.index != occurrence) continue;
                if (r.action == RuleAction::deliver) break;
                if (r.action == RuleAction::drop) {
                    ++stats_.dropped;
                    return;
                }
                if (r.action == RuleAction::copy) {
                    ++stats_.copied;
                    transcript_.append(f.from, adversary_id_, f.type, f.payload);
                    capture(adversary_id_, f);
                    continue;
                }
                tamper(f, *r.field);
                ++stats_.replaced;
                replaced = true;
                break;
            }
        }
        if (!replaced) ++stats_.delivered;
        transcript_.append(f.from, f.to, f.type, f.payload);
        dispatch(f);
    }

    // Perturb one field, keeping the frame well-formed: points gain the
    // generator, scalars gain one, octet strings get their low bit flipped.
    void tamper(Frame& f, const std::string& field) {
        wire::Message msg = wire::decode(*suite_, f.payload);
        auto point = [&](PointG1& x) { x = suite_->point_add(x, suite_->generator()); };
        auto scalar = [&](Scalar& s) { s = suite_->sc_add(s, suite_->sc(1)); };
        auto bytes = [&](Bytes& b) {
            if (b.empty()) bad_script("replace: field '" + field + "' is empty");
            b[0] ^= 0x01;
        };
        bool ok = std::visit(
            [&](auto& m) -> bool {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, wire::LoginRequest>) {
                    if (field == "did") return point(m.did), true;
                    if (field == "r") return point(m.r), true;
                } else if constexpr (std::is_same_v<T, wire::ServerChallenge>) {
                    if (field == "w") return point(m.w), true;
                    if (field == "r") return point(m.r), true;
                    if (field == "auth") return scalar(m.auth), true;
                } else if constexpr (std::is_same_v<T, wire::UserResponse>) {
                    if (field == "m") return point(m.m), true;
                    if (field == "b") return point(m.b), true;
                } else if constexpr (std::is_same_v<T, wire::LiLogin>) {
                    if (field == "p_ij") return bytes(m.p_ij), true;
                    if (field == "cid") return bytes(m.cid), true;
                    if (field == "m1") return bytes(m.m1), true;
                    if (field == "m2") return bytes(m.m2), true;
                } else if constexpr (std::is_same_v<T, wire::LiChallenge>) {
                    if (field == "m3") return bytes(m.m3), true;
                    if (field == "m4") return bytes(m.m4), true;
                } else if constexpr (std::is_same_v<T, wire::LiConfirm>) {
                    if (field == "m5") return bytes(m.m5), true;
                }
                return false;
            },
            msg);
        if (!ok) bad_script("replace: message type '" + f.type + "' has no field '" + field + "'");
        f.payload = wire::encode(*suite_, msg);
    }

    // ---- delivery ----

    void dispatch(const Frame& f) {
        switch (roles_.at(f.to)) {
            case Role::rc:
                break;  // registrations happen at setup; runtime frames are ignored
            case Role::adversary:
                capture(f.to, f);
                break;
            case Role::server:
                sc_.protocol == "scpk" ? scpk_server_recv(f) : li_server_recv(f);
                break;
            case Role::user:
                sc_.protocol == "scpk" ? scpk_user_recv(f) : li_user_recv(f);
                break;
        }
    }

    void capture(const std::string& who, const Frame& f) {
        Adversary& adv = adversaries_.at(who);
        ++adv.captured;
        // An adversary holding the insider values answers a fresh challenge
        // to its replayed login, completing a hijacked session.
        if (sc_.protocol == "baseline" && f.type == "LiChallenge" && adv.pending_replay &&
            adv.hy && adv.hxy) {
            attacks::AdversaryContext ctx;
            ctx.sid = adv.pending_sid;
            ctx.hy = adv.hy;
            ctx.hxy = adv.hxy;
            try {
                auto ch = std::get<wire::LiChallenge>(wire::decode(*suite_, f.payload));
                auto out = attacks::replay_answer(li_, ctx, *adv.pending_replay, ch);
                ++adv.hijacked;
                adv.pending_replay.reset();
                send(who, f.from, wire::Message{out.confirm});
            } catch (const Error&) {
                // challenge did not match the replayed login; keep listening
            }
        }
    }

    void scpk_server_recv(const Frame& f) {
        ScpkServer& srv = scpk_servers_.at(f.to);
        if (f.type == "LoginRequest") {
            ScpkServerSession s{scpk::ServerSession(*srv.rt), std::nullopt};
            try {
                auto req = std::get<wire::LoginRequest>(wire::decode(*suite_, f.payload));
                if (!srv.replay_cache) srv.rt->clear_replay_cache();
                wire::ServerChallenge ch = s.sess.on_request(req);
                srv.sessions.push_back(std::move(s));
                send(f.to, f.from, wire::Message{ch});
            } catch (const Error& e) {
                s.result = std::string("Failed:") + errc_name(e.code());
                srv.sessions.push_back(std::move(s));
            }
            return;
        }
        if (f.type == "UserResponse") {
            for (auto& s : srv.sessions) {
                if (s.result || s.sess.phase() != scpk::Phase::AwaitResponse) continue;
                try {
                    auto resp = std::get<wire::UserResponse>(wire::decode(*suite_, f.payload));
                    s.sess.on_response(resp);
                    s.result = kEstablished;
                } catch (const Error& e) {
                    s.result = std::string("Failed:") + errc_name(e.code());
                }
                return;
            }
        }
        // stray frame: no session is waiting for it
    }

    void scpk_user_recv(const Frame& f) {
        ScpkUser& u = scpk_users_.at(f.to);
        if (f.type != "ServerChallenge") return;
        for (auto& s : u.sessions) {
            if (s.result || !s.sess || s.sess->phase() != scpk::Phase::AwaitChallenge) continue;
            try {
                auto ch = std::get<wire::ServerChallenge>(wire::decode(*suite_, f.payload));
                wire::UserResponse resp = s.sess->on_challenge(ch);
                s.result = kEstablished;  // session key is derived eagerly
                send(f.to, f.from, wire::Message{resp});
            } catch (const Error& e) {
                s.result = std::string("Failed:") + errc_name(e.code());
            }
            return;
        }
    }

    void li_server_recv(const Frame& f) {
        LiServer& srv = li_servers_.at(f.to);
        if (f.type == "LiLogin") {
            LiServerSession s;
            try {
                auto msg = std::get<wire::LiLogin>(wire::decode(*suite_, f.payload));
                auto reply = baseline::li_server_verify(li_, srv.st, msg,
                                                        baseline::li_nonce(rng_, li_.hash_len));
                s.pending = reply.pending;
                srv.sessions.push_back(std::move(s));
                send(f.to, f.from, wire::Message{reply.msg});
            } catch (const Error& e) {
                s.result = std::string("Failed:") + errc_name(e.code());
                srv.sessions.push_back(std::move(s));
            }
            return;
        }
        if (f.type == "LiConfirm") {
            for (auto& s : srv.sessions) {
                if (s.result || !s.pending) continue;
                try {
                    auto msg = std::get<wire::LiConfirm>(wire::decode(*suite_, f.payload));
                    s.sk = baseline::li_server_confirm(li_, *s.pending, msg);
                    s.result = kEstablished;
                } catch (const Error& e) {
                    s.result = std::string("Failed:") + errc_name(e.code());
                }
                return;
            }
        }
    }

    void li_user_recv(const Frame& f) {
        LiUser& u = li_users_.at(f.to);
        if (f.type != "LiChallenge") return;
        for (auto& s : u.sessions) {
            if (s.result || !s.pending) continue;
            try {
                auto msg = std::get<wire::LiChallenge>(wire::decode(*suite_, f.payload));
                auto fin = baseline::li_card_confirm(li_, *s.pending, msg);
                s.sk = fin.session_key;
                s.result = kEstablished;
                send(f.to, f.from, wire::Message{fin.msg});
            } catch (const Error& e) {
                s.result = std::string("Failed:") + errc_name(e.code());
            }
            return;
        }
    }

    // ---- outcomes ----

    RunResult finish() {
        RunResult out;
        bool unfinished = false;
        for (const auto& e : sc_.cast) {
            std::string o;
            switch (e.role) {
                case Role::rc:
                    o = "Idle";
                    break;
                case Role::adversary: {
                    const Adversary& adv = adversaries_.at(e.id);
                    o = "Captured:" + std::to_string(adv.captured);
                    if (adv.hijacked > 0) o += ",Hijacked:" + std::to_string(adv.hijacked);
                    break;
                }
                case Role::user:
                case Role::server:
                    o = principal_outcome(e, unfinished);
                    break;
            }
            out.outcomes[e.id] = std::move(o);
        }
        out.outcomes["keys_equal"] = keys_equal();
        if (sc_.require_completion && unfinished)
            fail(Errc::Deadlock, "no deliverable messages and unfinished sessions");
        for (const auto& [key, want] : sc_.expect) {
            const std::string& got = out.outcomes.at(key);
            if (got != want)
                fail(Errc::ExpectationFailed,
                     key + ": expected '" + want + "', got '" + got + "'");
        }
        out.transcript = std::move(transcript_);
        out.stats = stats_;
        return out;
    }

    std::string principal_outcome(const CastEntry& e, bool& unfinished) {
        std::vector<std::string> parts;
        auto add = [&](const std::optional<std::string>& result, const char* stall) {
            if (result) {
                parts.push_back(*result);
            } else {
                parts.push_back(std::string("Stalled:") + stall);
                unfinished = true;
            }
        };
        if (sc_.protocol == "scpk") {
            if (e.role == Role::user)
                for (const auto& s : scpk_users_.at(e.id).sessions)
                    add(s.result, s.sess ? scpk::phase_name(s.sess->phase()) : "Idle");
            else
                for (const auto& s : scpk_servers_.at(e.id).sessions)
                    add(s.result, scpk::phase_name(s.sess.phase()));
        } else {
            if (e.role == Role::user)
                for (const auto& s : li_users_.at(e.id).sessions) add(s.result, "AwaitChallenge");
            else
                for (const auto& s : li_servers_.at(e.id).sessions) add(s.result, "AwaitConfirm");
        }
        if (parts.empty()) return "Idle";
        std::string joined = parts.front();
        for (std::size_t i = 1; i < parts.size(); ++i) joined += ";" + parts[i];
        return joined;
    }

    // First established user key vs first established server key, in cast
    // order; "n/a" unless both sides hold one.
    std::string keys_equal() const {
        if (sc_.protocol == "scpk") {
            const scpk::UserSession* us = nullptr;
            const scpk::ServerSession* ss = nullptr;
            for (const auto& e : sc_.cast) {
                if (e.role == Role::user && !us)
                    for (const auto& s : scpk_users_.at(e.id).sessions)
                        if (s.result == kEstablished && s.sess) {
                            us = &*s.sess;
                            break;
                        }
                if (e.role == Role::server && !ss)
                    for (const auto& s : scpk_servers_.at(e.id).sessions)
                        if (s.result == kEstablished) {
                            ss = &s.sess;
                            break;
                        }
            }
            if (!us || !ss) return "n/a";
            return us->session_key() == ss->session_key() ? "true" : "false";
        }
        const Bytes* uk = nullptr;
        const Bytes* sk = nullptr;
        for (const auto& e : sc_.cast) {
            if (e.role == Role::user && !uk)
                for (const auto& s : li_users_.at(e.id).sessions)
                    if (s.sk) {
                        uk = &*s.sk;
                        break;
                    }
            if (e.role == Role::server && !sk)
                for (const auto& s : li_servers_.at(e.id).sessions)
                    if (s.sk) {
                        sk = &*s.sk;
                        break;
                    }
        }
        if (!uk || !sk) return "n/a";
        return *uk == *sk ? "true" : "false";
    }

    // ---- members ----

    const Scenario& sc_;
    BackendId backend_;
    std::unique_ptr<PairingSuite> suite_;
    std::map<std::string, Role> roles_;
    std::string adversary_id_;

    std::optional<scpk::RcState> rc_;
    std::map<std::string, ScpkUser> scpk_users_;
    std::map<std::string, ScpkServer> scpk_servers_;

    baseline::LiSuite li_{};
    std::mt19937_64 rng_;
    std::optional<baseline::LiRcState> lirc_;
    std::map<std::string, LiUser> li_users_;
    std::map<std::string, LiServer> li_servers_;

    std::map<std::string, Adversary> adversaries_;

    std::deque<Frame> queue_;
    std::vector<int> rule_hits_;
    wire::Transcript transcript_;
    RunStats stats_;
};

}  // namespace

// ---- public entry points ----------------------------------------------------

Scenario load_scenario_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        bad_script(std::string("malformed scenario document: ") + e.what());
    }
    if (!doc.is_object()) bad_script("scenario document must be an object");

    Scenario sc;
    if (doc.contains("name")) sc.name = json_string(doc, "name", "scenario");
    if (doc.contains("protocol")) sc.protocol = json_string(doc, "protocol", "scenario");
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer())
            bad_script("scenario: seed must be an integer");
        sc.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("require_completion")) {
        if (!doc.at("require_completion").is_boolean())
            bad_script("scenario: require_completion must be boolean");
        sc.require_completion = doc.at("require_completion").get<bool>();
    }
    if (!doc.contains("cast") || !doc.at("cast").is_array())
        bad_script("scenario: missing cast array");
    for (const auto& j : doc.at("cast")) sc.cast.push_back(parse_cast(j));
    if (doc.contains("links")) {
        if (!doc.at("links").is_array()) bad_script("scenario: links must be an array");
        for (const auto& j : doc.at("links")) {
            LinkOverride l;
            l.a = json_string(j, "a", "links");
            l.b = json_string(j, "b", "links");
            l.mode = parse_mode(json_string(j, "mode", "links"), "links");
            sc.links.push_back(std::move(l));
        }
    }
    if (doc.contains("rules")) {
        if (!doc.at("rules").is_array()) bad_script("scenario: rules must be an array");
        for (const auto& j : doc.at("rules")) sc.rules.push_back(parse_rule(j));
    }
    if (doc.contains("script")) {
        if (!doc.at("script").is_array()) bad_script("scenario: script must be an array");
        for (const auto& j : doc.at("script")) sc.script.push_back(parse_step(j));
    }
    if (doc.contains("expect")) {
        if (!doc.at("expect").is_object()) bad_script("scenario: expect must be an object");
        for (auto it = doc.at("expect").begin(); it != doc.at("expect").end(); ++it) {
            const json& v = it.value();
            if (v.is_string())
                sc.expect[it.key()] = v.get<std::string>();
            else if (v.is_boolean())
                sc.expect[it.key()] = v.get<bool>() ? "true" : "false";
            else
                bad_script("scenario: expect values must be strings or booleans");
        }
    }
    validate(sc);
    return sc;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) bad_script("cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario_json(buf.str());
}

RunResult run_scenario(const Scenario& sc, BackendId backend) {
    return Engine(sc, backend).run();
}

const wire::TranscriptEntry& replay_from_transcript(const wire::Transcript& t,
                                                    const Selector& sel) {
    std::size_t seen = 0;
    for (const auto& e : t.entries()) {
        if (e.type != sel.type) continue;
        if (sel.from && *sel.from != e.from) continue;
        if (sel.to && *sel.to != e.to) continue;
        if (seen++ == sel.index) return e;
    }
    fail(Errc::SelectorEmpty, "no transcript entry matches type '" + sel.type + "' index " +
                                  std::to_string(sel.index));
}

}  // namespace msauth::simnet
