// msauth — operator CLI for the pairing-based multi-server authentication
// scheme and its hash-only predecessor.
//
// Verbs: init-rc, register-user, register-server, login, change-password,
// run-scenario, attack, probe, bench. Global options: --store (or the
// MSAUTH_STORE environment variable), --backend, --seed. Results go to
// stdout, errors to stderr. Every library failure maps to a distinct
// documented exit code (exit_code in common.hpp, table in README); usage
// errors exit 64.

#include <CLI11.hpp>

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "msauth/attacks.hpp"
#include "msauth/bench.hpp"
#include "msauth/keystore.hpp"
#include "msauth/scpk.hpp"
#include "msauth/simnet.hpp"
#include "msauth/wire.hpp"

using namespace msauth;

namespace {

struct Globals {
    std::string store_dir = "msauth-store";
    std::string backend = "transparent";
    std::uint64_t seed = 1;

    BackendId backend_id() const { return backend_from_name(backend); }
    std::unique_ptr<PairingSuite> make_suite() const {
        SuiteOptions opts;
        opts.seed = seed;
        if (backend_id() == BackendId::transparent)
            opts.transparent_q = mpz_class("2305843009213693951");  // 2^61 - 1
        return PairingSuite::make(backend_id(), opts);
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::StoreCorrupt, "cannot write " + path);
    out << text;
    if (!out) fail(Errc::StoreCorrupt, "short write to " + path);
}

std::string point_hex(const PairingSuite& suite, const PointG1& p) {
    return to_hex(suite.encode_point(p));
}

// --tamper accepts both wire field names and protocol-text spellings
// (B_i, Auth_ji, ...): lowercase, then strip a subscript suffix.
std::string tamper_key(std::string name) {
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto us = name.rfind('_');
    if (us != std::string::npos) {
        std::string suffix = name.substr(us + 1);
        if (suffix == "i" || suffix == "j" || suffix == "ij" || suffix == "ji")
            name.erase(us);
    }
    return name;
}

void tamper_point(const PairingSuite& suite, PointG1& p) {
    p = suite.point_add(p, suite.generator());
}

// ---- login ------------------------------------------------------------------

int cmd_login(const Globals& g, const std::string& user, const std::string& server,
              const std::string& password, const std::string& tamper,
              const std::string& transcript_path, bool precompute) {
    auto suite = g.make_suite();
    store::KeyStore ks(g.store_dir, *suite);
    scpk::PublicParams params = ks.load_params();
    scpk::SmartCard card = ks.load_card(user);
    scpk::ServerKey key = ks.load_server(server);
    scpk::ServerRuntime rt(*suite, params, std::move(key));

    wire::Transcript t;
    auto flush_transcript = [&] {
        if (!transcript_path.empty()) t.save(transcript_path);
    };
    std::string field = tamper_key(tamper);

    try {
        // The card unlock happens in the session constructor: a wrong
        // password aborts here, before any frame exists.
        scpk::UserSession us(*suite, params, card, str_bytes(user), str_bytes(password),
                             str_bytes(server));
        scpk::ServerSession ss(rt);

        wire::LoginRequest req;
        if (precompute) {
            Scalar r = suite->random_scalar();
            PointG1 r_pub = suite->scalar_mul(r, suite->generator());
            req = us.begin_with_precomputed(r, r_pub);
        } else {
            req = us.begin();
        }
        if (field == "did") tamper_point(*suite, req.did);
        if (field == "r") tamper_point(*suite, req.r);
        Bytes f1 = wire::encode(*suite, wire::Message{req});
        t.append(user, server, "LoginRequest", f1);

        auto ch = ss.on_request(std::get<wire::LoginRequest>(wire::decode(*suite, f1)));
        if (field == "w") tamper_point(*suite, ch.w);
        if (field == "auth") ch.auth = suite->sc_add(ch.auth, suite->sc(1));
        Bytes f2 = wire::encode(*suite, wire::Message{ch});
        t.append(server, user, "ServerChallenge", f2);

        auto resp = us.on_challenge(std::get<wire::ServerChallenge>(wire::decode(*suite, f2)));
        if (field == "m") tamper_point(*suite, resp.m);
        if (field == "b") tamper_point(*suite, resp.b);
        Bytes f3 = wire::encode(*suite, wire::Message{resp});
        t.append(user, server, "UserResponse", f3);

        ss.on_response(std::get<wire::UserResponse>(wire::decode(*suite, f3)));

        Scalar sk_user = us.session_key();
        Scalar sk_server = ss.session_key();
        flush_transcript();
        if (!(sk_user == sk_server)) {
            std::cerr << "error: session keys disagree\n";
            return exit_code(Errc::VerificationFailed);
        }
        std::cout << "session established; keys match\n"
                  << "session_key: " << to_hex(suite->encode_scalar(sk_user)) << "\n";
        return 0;
    } catch (const Error& e) {
        flush_transcript();
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    }
}

// ---- password change --------------------------------------------------------

int cmd_change_password(const Globals& g, const std::string& user,
                        const std::string& old_pw, const std::string& new_pw,
                        int interrupt_after) {
    auto suite = g.make_suite();
    store::KeyStore ks(g.store_dir, *suite);
    scpk::PublicParams params = ks.load_params();
    scpk::SmartCard card = ks.load_card(user);
    scpk::RcState rc = scpk::RcState::from_secret(*suite, ks.load_rc_secret());

    auto interrupted = [&](int round) {
        if (interrupt_after != round) return false;
        std::cout << "interrupted after round " << round << "; card unchanged\n";
        return true;
    };

    // The old card is replaced only after the final round verifies, so an
    // interruption at any earlier point leaves the stored card untouched.
    scpk::PwChangeUser pc(*suite, params, card, str_bytes(user), str_bytes(old_pw),
                          str_bytes(new_pw));
    wire::PwRound1 r1 = pc.round1();
    if (interrupted(1)) return 0;
    auto [r2, rcs] = rc.pw_round1(r1);
    if (interrupted(2)) return 0;
    wire::PwRound3 r3 = pc.on_round2(r2);
    if (interrupted(3)) return 0;
    wire::PwRound4 r4 = rc.pw_round3(rcs, r3);
    if (interrupted(4)) return 0;
    scpk::SmartCard fresh = pc.on_round4(r4);
    ks.save_card(user, fresh, /*overwrite=*/true);
    std::cout << "password changed; card replaced\n";
    return 0;
}

// ---- reports ----------------------------------------------------------------

std::string attack_report_json(const attacks::AttackReport& r) {
    nlohmann::json evidence = nlohmann::json::object();
    for (const auto& [k, v] : r.evidence) evidence[k] = v;
    nlohmann::json doc = {
        {"attack", r.attack}, {"succeeded", r.succeeded}, {"evidence", evidence}};
    return doc.dump(2) + "\n";
}

std::string probe_report_json(const attacks::ProbeReport& r, BackendId backend) {
    nlohmann::json doc = {{"probe", r.probe},
                          {"backend", backend_name(backend)},
                          {"trials", r.trials},
                          {"failures", r.failures},
                          {"failure_stage", r.failure_stage},
                          {"all_defended", r.failures == r.trials}};
    return doc.dump(2) + "\n";
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty())
        std::cout << text;
    else
        write_text(path, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-server authentication toolkit (pairing-based scheme, hash-only "
                 "predecessor, attack demos, resistance probes)"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--store", g.store_dir, "key store directory")
        ->envname("MSAUTH_STORE")
        ->capture_default_str();
    app.add_option("--backend", g.backend, "group backend")
        ->check(CLI::IsMember({"transparent", "production"}))
        ->capture_default_str();
    app.add_option("--seed", g.seed, "randomness seed")->capture_default_str();

    int rc = 0;
    auto run = [&rc](auto&& body) {
        return [&rc, body = std::forward<decltype(body)>(body)]() { rc = body(); };
    };

    // init-rc
    auto* c_init = app.add_subcommand("init-rc", "initialize the registration centre");
    c_init->callback(run([&] {
        auto suite = g.make_suite();
        store::KeyStore ks(g.store_dir, *suite);
        auto rcs = scpk::RcState::system_init(*suite);
        ks.save_rc_secret(rcs.secret());
        ks.save_params(rcs.params());
        std::cout << "store: " << ks.root().string() << "\n"
                  << "pub_rc: " << point_hex(*suite, rcs.params().pub_rc) << "\n";
        return 0;
    }));

    // register-user
    std::string ru_id, ru_pw;
    auto* c_ruser = app.add_subcommand("register-user", "issue a smart card");
    c_ruser->add_option("id", ru_id, "user identity")->required();
    c_ruser->add_option("--password", ru_pw, "card password")->required();
    c_ruser->callback(run([&] {
        auto suite = g.make_suite();
        store::KeyStore ks(g.store_dir, *suite);
        if (ks.has_card(ru_id)) fail(Errc::DuplicateEntry, "user '" + ru_id + "' already has a card");
        auto rcs = scpk::RcState::from_secret(*suite, ks.load_rc_secret());
        auto reg = scpk::user_register_begin(*suite, str_bytes(ru_id), str_bytes(ru_pw));
        ks.save_card(ru_id, scpk::assemble_card(reg, rcs.issue_card(reg)));
        std::cout << "card: " << ks.card_path(ru_id).string() << "\n"
                  << "pub_rc: " << point_hex(*suite, rcs.params().pub_rc) << "\n";
        return 0;
    }));

    // register-server
    std::string rs_sid;
    auto* c_rsrv = app.add_subcommand("register-server", "issue a self-certified server key");
    c_rsrv->add_option("sid", rs_sid, "server identity")->required();
    c_rsrv->callback(run([&] {
        auto suite = g.make_suite();
        store::KeyStore ks(g.store_dir, *suite);
        if (ks.has_server(rs_sid))
            fail(Errc::DuplicateEntry, "server '" + rs_sid + "' already registered");
        auto rcs = scpk::RcState::from_secret(*suite, ks.load_rc_secret());
        auto commit = scpk::server_register_begin(*suite, str_bytes(rs_sid));
        auto issue = rcs.register_server(commit.sid, commit.v_pub);
        auto key = scpk::server_register_finalize(*suite, rcs.params(), commit, issue);
        ks.save_server(key);
        std::cout << "server_key: " << ks.server_path(rs_sid).string() << "\n"
                  << "witness: " << point_hex(*suite, key.w) << "\n"
                  << "pub_rc: " << point_hex(*suite, rcs.params().pub_rc) << "\n";
        return 0;
    }));

    // login
    std::string li_user, li_server, li_pw, li_tamper, li_transcript;
    bool li_pre = false;
    auto* c_login = app.add_subcommand("login", "run one login exchange");
    c_login->add_option("user", li_user)->required();
    c_login->add_option("server", li_server)->required();
    c_login->add_option("--password", li_pw, "card password")->required();
    c_login->add_option("--tamper", li_tamper,
                        "perturb one wire field in flight (did, r, w, auth, m, b)");
    c_login->add_option("--transcript", li_transcript, "write the frame transcript here");
    c_login->add_flag("--precompute-r", li_pre, "use an offline-precomputed (r, R)");
    c_login->callback(run([&] {
        return cmd_login(g, li_user, li_server, li_pw, li_tamper, li_transcript, li_pre);
    }));

    // change-password
    std::string cp_user, cp_old, cp_new;
    int cp_interrupt = 0;
    auto* c_pw = app.add_subcommand("change-password", "run the password-change exchange");
    c_pw->add_option("id", cp_user)->required();
    c_pw->add_option("--old", cp_old, "current password")->required();
    c_pw->add_option("--new", cp_new, "replacement password")->required();
    c_pw->add_option("--interrupt-after", cp_interrupt,
                     "abort after this round (1-4) to exercise atomicity")
        ->check(CLI::Range(1, 4));
    c_pw->callback(run([&] {
        return cmd_change_password(g, cp_user, cp_old, cp_new, cp_interrupt);
    }));

    // run-scenario
    std::string sc_file, sc_transcript;
    auto* c_scen = app.add_subcommand("run-scenario", "execute a declarative scenario file");
    c_scen->add_option("file", sc_file, "scenario JSON document")->required();
    c_scen->add_option("--transcript", sc_transcript, "write the frame transcript here");
    c_scen->callback(run([&] {
        simnet::Scenario sc = simnet::load_scenario_file(sc_file);
        if (g.seed != 1) sc.seed = g.seed;  // --seed overrides the document
        simnet::RunResult r = simnet::run_scenario(sc, g.backend_id());
        for (const auto& [id, outcome] : r.outcomes)
            std::cout << id << ": " << outcome << "\n";
        std::cout << "frames: sent=" << r.stats.sent << " delivered=" << r.stats.delivered
                  << " dropped=" << r.stats.dropped << " replaced=" << r.stats.replaced
                  << " copied=" << r.stats.copied << "\n";
        if (!sc_transcript.empty()) r.transcript.save(sc_transcript);
        return 0;
    }));

    // attack
    std::string at_name, at_report;
    auto* c_attack = app.add_subcommand("attack", "demonstrate an attack on the predecessor");
    c_attack->add_option("name", at_name, "dictionary | replay | impersonate | spoof-server")
        ->required();
    c_attack->add_option("--report", at_report, "write the JSON report here");
    c_attack->callback(run([&] {
        auto which = attacks::attack_from_name(at_name);
        if (!which) throw CLI::ValidationError("attack", "unknown attack '" + at_name + "'");
        attacks::AttackReport rep = attacks::run_baseline_attack(*which, g.seed);
        emit(attack_report_json(rep), at_report);
        if (!rep.succeeded) {
            std::cerr << "error: attack did not reach its expected outcome\n";
            return exit_code(Errc::ExpectationFailed);
        }
        return 0;
    }));

    // probe
    std::string pr_name, pr_report;
    int pr_trials = 100;
    auto* c_probe = app.add_subcommand("probe", "probe the scheme's resistance");
    c_probe->add_option("name", pr_name,
                        "replay | impersonate | spoof-server | stolen-card-dictionary | "
                        "dos-password-change")
        ->required();
    c_probe->add_option("--trials", pr_trials, "number of trials")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_probe->add_option("--report", pr_report, "write the JSON report here");
    c_probe->callback(run([&] {
        auto kind = attacks::probe_from_name(pr_name);
        if (!kind) throw CLI::ValidationError("probe", "unknown probe '" + pr_name + "'");
        attacks::ProbeReport rep =
            attacks::probe_proposed_resistance(*kind, pr_trials, g.seed, g.backend_id());
        emit(probe_report_json(rep, g.backend_id()), pr_report);
        if (rep.failures != rep.trials) {
            std::cerr << "error: " << (rep.trials - rep.failures) << "/" << rep.trials
                      << " probe trials were not defeated\n";
            return exit_code(Errc::ProbeUnexpectedlySucceeded);
        }
        return 0;
    }));

    // bench
    std::string be_report;
    auto* c_bench = app.add_subcommand("bench", "operation-count benchmark (C1/C2/C3)");
    c_bench->add_option("--report", be_report, "write the JSON report here");
    c_bench->callback(run([&] {
        emit(bench::to_json(bench::run_bench(g.backend_id(), g.seed)), be_report);
        return 0;
    }));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;  // help/version exit 0, usage faults exit 64
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    }
    return rc;
}
