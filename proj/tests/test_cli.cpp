// End-to-end tests for the msauth command-line tool (spawned as a real
// process, exit codes and artifacts checked), plus direct tests of the
// operation-count benchmark the `bench` verb wraps.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "msauth/bench.hpp"
#include "msauth/common.hpp"
#include "msauth/wire.hpp"

using namespace msauth;
namespace fs = std::filesystem;

namespace {

int code_of(Errc e) { return exit_code(e); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::string text = slurp(p);
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// One scratch directory per fixture; the CLI's store lives inside it and the
// command's combined output is captured to a file next to it.
struct CliWorld {
    fs::path dir;
    fs::path store;

    CliWorld() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("msauth-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(dir);
        store = dir / "store";
    }
    ~CliWorld() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    // Runs `msauth --store <store> <args>`; returns the exit code and leaves
    // combined stdout+stderr in `last_output`.
    int run(const std::string& args, const std::string& env_prefix = "") {
        fs::path out = dir / "out.txt";
        std::string cmd = env_prefix + std::string(MSAUTH_CLI_PATH) + " --store " +
                          store.string() + " " + args + " > " + out.string() + " 2>&1";
        int status = std::system(cmd.c_str());
        REQUIRE(WIFEXITED(status));
        last_output = slurp(out);
        return WEXITSTATUS(status);
    }

    // Same, but without the implicit --store (for env fallback / usage tests).
    int run_raw(const std::string& args, const std::string& env_prefix = "") {
        fs::path out = dir / "out.txt";
        std::string cmd = env_prefix + std::string(MSAUTH_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2>&1";
        int status = std::system(cmd.c_str());
        REQUIRE(WIFEXITED(status));
        last_output = slurp(out);
        return WEXITSTATUS(status);
    }

    void bootstrap() {
        REQUIRE(run("init-rc") == 0);
        REQUIRE(run("register-user alice --password hunter2") == 0);
        REQUIRE(run("register-server S1") == 0);
    }

    std::string last_output;
};

}  // namespace

TEST_SUITE("cli.lifecycle") {
    TEST_CASE("init, register, login: files appear and the exchange completes") {
        CliWorld w;
        CHECK(w.run("init-rc") == 0);
        CHECK(w.last_output.find("pub_rc:") != std::string::npos);
        CHECK(fs::exists(w.store / "params.pub"));
        CHECK(fs::exists(w.store / "rc.key"));

        CHECK(w.run("register-user alice --password hunter2") == 0);
        CHECK(fs::exists(w.store / "card_alice.card"));
        CHECK(w.run("register-server S1") == 0);
        CHECK(fs::exists(w.store / "server_S1.key"));

        fs::path t = w.dir / "login.jsonl";
        CHECK(w.run("login alice S1 --password hunter2 --transcript " + t.string()) == 0);
        CHECK(w.last_output.find("session established; keys match") != std::string::npos);
        CHECK(w.last_output.find("session_key:") != std::string::npos);

        // An honest login is exactly three protocol messages.
        wire::Transcript tr = wire::Transcript::load(t);
        REQUIRE(tr.entries().size() == 3);
        CHECK(tr.entries()[0].type == "LoginRequest");
        CHECK(tr.entries()[1].type == "ServerChallenge");
        CHECK(tr.entries()[2].type == "UserResponse");
        CHECK(tr.entries()[0].from == "alice");
        CHECK(tr.entries()[1].from == "S1");
    }

    TEST_CASE("re-registration is refused with DuplicateEntry") {
        CliWorld w;
        w.bootstrap();
        CHECK(w.run("register-user alice --password other") == code_of(Errc::DuplicateEntry));
        CHECK(w.run("register-server S1") == code_of(Errc::DuplicateEntry));
        // The original card still works.
        CHECK(w.run("login alice S1 --password hunter2") == 0);
    }

    TEST_CASE("store directory falls back to the MSAUTH_STORE environment variable") {
        CliWorld w;
        std::string env = "MSAUTH_STORE=" + (w.dir / "envstore").string() + " ";
        CHECK(w.run_raw("init-rc", env) == 0);
        CHECK(fs::exists(w.dir / "envstore" / "rc.key"));
    }

    TEST_CASE("same seed, same commands: byte-identical key material") {
        CliWorld a, b;
        for (CliWorld* w : {&a, &b}) {
            REQUIRE(w->run("--seed 42 init-rc") == 0);
            REQUIRE(w->run("--seed 43 register-user alice --password pw") == 0);
            REQUIRE(w->run("--seed 44 register-server S1") == 0);
        }
        CHECK(slurp(a.store / "rc.key") == slurp(b.store / "rc.key"));
        CHECK(slurp(a.store / "params.pub") == slurp(b.store / "params.pub"));
        CHECK(slurp(a.store / "card_alice.card") == slurp(b.store / "card_alice.card"));
        CHECK(slurp(a.store / "server_S1.key") == slurp(b.store / "server_S1.key"));
    }

    TEST_CASE("login with a precomputed nonce succeeds") {
        CliWorld w;
        w.bootstrap();
        CHECK(w.run("login alice S1 --password hunter2 --precompute-r") == 0);
    }
}

TEST_SUITE("cli.login-failures") {
    TEST_CASE("wrong password aborts locally; nothing is sent") {
        CliWorld w;
        w.bootstrap();
        fs::path t = w.dir / "failed.jsonl";
        CHECK(w.run("login alice S1 --password wrong --transcript " + t.string()) ==
              code_of(Errc::AuthLocalFailed));
        CHECK(w.last_output.find("AuthLocalFailed") != std::string::npos);
        // The transcript is flushed for inspection but holds no frames.
        CHECK(line_count(t) == 0);
    }

    TEST_CASE("tampering with the response point B is caught by the server") {
        CliWorld w;
        w.bootstrap();
        CHECK(w.run("login alice S1 --password hunter2 --tamper b") ==
              code_of(Errc::UserAuthFailed));
        // Protocol-text spelling of the same field.
        CHECK(w.run("login alice S1 --password hunter2 --tamper B_i") ==
              code_of(Errc::UserAuthFailed));
    }

    TEST_CASE("tampering with the challenge is caught by the user") {
        CliWorld w;
        w.bootstrap();
        CHECK(w.run("login alice S1 --password hunter2 --tamper auth") ==
              code_of(Errc::ServerAuthFailed));
        CHECK(w.run("login alice S1 --password hunter2 --tamper Auth_ji") ==
              code_of(Errc::ServerAuthFailed));
        CHECK(w.run("login alice S1 --password hunter2 --tamper w") ==
              code_of(Errc::ServerAuthFailed));
    }

    TEST_CASE("unknown principals are store errors, not crashes") {
        CliWorld w;
        w.bootstrap();
        CHECK(w.run("login mallory S1 --password x") == code_of(Errc::StoreCorrupt));
        CHECK(w.run("login alice S9 --password hunter2") == code_of(Errc::StoreCorrupt));
    }
}

TEST_SUITE("cli.change-password") {
    TEST_CASE("full exchange swaps the card; old password stops working") {
        CliWorld w;
        w.bootstrap();
        std::string before = slurp(w.store / "card_alice.card");
        CHECK(w.run("change-password alice --old hunter2 --new correct-horse") == 0);
        CHECK(slurp(w.store / "card_alice.card") != before);
        CHECK(w.run("login alice S1 --password hunter2") == code_of(Errc::AuthLocalFailed));
        CHECK(w.run("login alice S1 --password correct-horse") == 0);
    }

    TEST_CASE("interruption after any round leaves the stored card byte-identical") {
        CliWorld w;
        w.bootstrap();
        std::string before = slurp(w.store / "card_alice.card");
        for (int round = 1; round <= 4; ++round) {
            CHECK(w.run("change-password alice --old hunter2 --new npw --interrupt-after " +
                        std::to_string(round)) == 0);
            CHECK(w.last_output.find("card unchanged") != std::string::npos);
            CHECK(slurp(w.store / "card_alice.card") == before);
        }
        CHECK(w.run("login alice S1 --password hunter2") == 0);
    }

    TEST_CASE("wrong old password is refused before round 1") {
        CliWorld w;
        w.bootstrap();
        CHECK(w.run("change-password alice --old wrong --new npw") ==
              code_of(Errc::AuthLocalFailed));
        CHECK(w.run("login alice S1 --password hunter2") == 0);
    }
}

TEST_SUITE("cli.scenarios") {
    TEST_CASE("shipped scenario files all run to their expectations") {
        CliWorld w;
        for (const char* name : {"honest-login.json", "tampered-response.json",
                                 "replay-proposed.json", "replay-baseline.json",
                                 "tap-login.json"}) {
            CAPTURE(name);
            CHECK(w.run("run-scenario " + (fs::path(MSAUTH_SCENARIO_DIR) / name).string()) == 0);
            CHECK(w.last_output.find("frames: sent=") != std::string::npos);
        }
    }

    TEST_CASE("scenario transcript lands on disk and parses") {
        CliWorld w;
        fs::path t = w.dir / "sc.jsonl";
        CHECK(w.run("run-scenario " +
                    (fs::path(MSAUTH_SCENARIO_DIR) / "honest-login.json").string() +
                    " --transcript " + t.string()) == 0);
        CHECK(wire::Transcript::load(t).entries().size() == 3);
    }

    TEST_CASE("failed expectations and malformed documents exit with their own codes") {
        CliWorld w;
        fs::path bad_expect = w.dir / "bad-expect.json";
        {
            std::ofstream out(bad_expect);
            out << R"({"name":"bad","cast":[{"id":"rc","role":"rc"},
                       {"id":"alice","role":"user","password":"pw"},
                       {"id":"S1","role":"server"}],
                       "script":[{"action":"start_login","user":"alice","server":"S1"}],
                       "expect":{"alice":"Failed:UserAuthFailed"}})";
        }
        CHECK(w.run("run-scenario " + bad_expect.string()) == code_of(Errc::ExpectationFailed));

        fs::path garbage = w.dir / "garbage.json";
        {
            std::ofstream out(garbage);
            out << "{not json";
        }
        CHECK(w.run("run-scenario " + garbage.string()) == code_of(Errc::ScriptError));
        CHECK(w.run("run-scenario " + (w.dir / "missing.json").string()) ==
              code_of(Errc::ScriptError));
    }
}

TEST_SUITE("cli.attack-probe") {
    TEST_CASE("every attack demo succeeds and writes a report") {
        CliWorld w;
        for (const char* name : {"dictionary", "replay", "impersonate", "spoof-server"}) {
            CAPTURE(name);
            fs::path rep = w.dir / "attack.json";
            CHECK(w.run(std::string("attack ") + name + " --report " + rep.string()) == 0);
            auto doc = nlohmann::json::parse(slurp(rep));
            CHECK(doc.at("succeeded").get<bool>());
            std::string canonical = name;  // reports use the underscore spelling
            for (auto& c : canonical)
                if (c == '-') c = '_';
            CHECK(doc.at("attack").get<std::string>() == canonical);
            CHECK_FALSE(doc.at("evidence").empty());
        }
    }

    TEST_CASE("every probe is fully defended and writes a report") {
        CliWorld w;
        for (const char* name : {"replay", "impersonate", "spoof-server",
                                 "stolen-card-dictionary", "dos-password-change"}) {
            CAPTURE(name);
            fs::path rep = w.dir / "probe.json";
            CHECK(w.run(std::string("probe ") + name + " --trials 5 --report " +
                        rep.string()) == 0);
            auto doc = nlohmann::json::parse(slurp(rep));
            CHECK(doc.at("trials").get<int>() == 5);
            CHECK(doc.at("failures").get<int>() == 5);
            CHECK(doc.at("all_defended").get<bool>());
            CHECK_FALSE(doc.at("failure_stage").get<std::string>().empty());
        }
    }

    TEST_CASE("unknown attack and probe names are usage errors") {
        CliWorld w;
        CHECK(w.run("attack nosuch") == 64);
        CHECK(w.run("probe nosuch") == 64);
    }
}

TEST_SUITE("cli.usage") {
    TEST_CASE("bad invocations exit 64; help exits 0") {
        CliWorld w;
        CHECK(w.run_raw("") == 64);                  // a verb is required
        CHECK(w.run_raw("frobnicate") == 64);        // unknown verb
        CHECK(w.run_raw("--help") == 0);
        CHECK(w.run_raw("login alice") == 64);       // missing server + password
        CHECK(w.run_raw("login alice S1") == 64);    // missing --password
        CHECK(w.run_raw("--backend bogus bench") == 64);
        CHECK(w.run_raw("change-password a --old x --new y --interrupt-after 9") == 64);
        CHECK(w.run_raw("probe replay --trials 0") == 64);
    }

    TEST_CASE("bench exits 0 and prints a parsable report") {
        CliWorld w;
        CHECK(w.run("bench") == 0);
        auto doc = nlohmann::json::parse(w.last_output);
        CHECK(doc.at("all_match").get<bool>());
        CHECK(doc.at("phases").size() == 4);
    }
}

// ---- direct tests of the benchmark the `bench` verb wraps -------------------

TEST_SUITE("bench.counts") {
    TEST_CASE("registration cost is exact: 3 mul, 1 map-to-point, 2 hash") {
        auto r = bench::run_bench(BackendId::transparent, 1);
        REQUIRE(r.phases.size() == 4);
        const auto& c1 = r.phases[0];
        CHECK(c1.phase == "C1_user_registration");
        CHECK(c1.hash_strict);
        CHECK(c1.measured == (OpSnapshot{0, 3, 0, 1, 2}));
        CHECK(c1.matches());
    }

    TEST_CASE("login costs: 9 muls plain, 8 with the nonce precomputed") {
        auto r = bench::run_bench(BackendId::transparent, 1);
        const auto& c2 = r.phases[1];
        const auto& c2p = r.phases[2];
        CHECK(c2.measured.g1_mul == 9);
        CHECK(c2p.measured.g1_mul == 8);
        CHECK(c2.measured.pairing == 0);  // the user never pairs
        CHECK(c2.measured.map_to_point == 1);
        CHECK(c2.measured.g1_add == 1);
        CHECK(c2.matches());
        CHECK(c2p.matches());
        // The hash column is informational: the implementation spends one
        // extra hash on the card's local credential check.
        CHECK(c2.measured.hash == c2.expected.hash + 1);
        CHECK_FALSE(c2.hash_strict);
    }

    TEST_CASE("server verification: 2 pairings, 4 muls, 1 add, no map-to-point") {
        auto r = bench::run_bench(BackendId::transparent, 1);
        const auto& c3 = r.phases[3];
        CHECK(c3.measured.pairing == 2);
        CHECK(c3.measured.g1_mul == 4);
        CHECK(c3.measured.g1_add == 1);
        CHECK(c3.measured.map_to_point == 0);
        CHECK(c3.measured.hash == c3.expected.hash + 1);  // informational delta
        CHECK(c3.matches());
        CHECK(r.all_match);
    }

    TEST_CASE("operation counts do not depend on the backend") {
        auto t = bench::run_bench(BackendId::transparent, 7);
        auto p = bench::run_bench(BackendId::production, 7);
        REQUIRE(t.phases.size() == p.phases.size());
        for (std::size_t i = 0; i < t.phases.size(); ++i) {
            CAPTURE(t.phases[i].phase);
            CHECK(t.phases[i].measured == p.phases[i].measured);
        }
    }

    TEST_CASE("the JSON report parses and carries signed deltas") {
        auto doc = nlohmann::json::parse(bench::to_json(bench::run_bench(BackendId::transparent)));
        CHECK(doc.at("backend") == "transparent");
        CHECK(doc.at("all_match").get<bool>());
        const auto& c2 = doc.at("phases").at(1);
        CHECK(c2.at("delta").at("hash").get<int>() == 1);
        CHECK(c2.at("delta").at("g1_mul").get<int>() == 0);
        CHECK(c2.at("match").get<bool>());
    }
}
