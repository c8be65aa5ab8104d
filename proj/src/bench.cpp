#include "msauth/bench.hpp"

#include <json.hpp>

#include "msauth/scpk.hpp"

namespace msauth::bench {
namespace {

OpSnapshot plus(const OpSnapshot& a, const OpSnapshot& b) {
    return {a.pairing + b.pairing, a.g1_mul + b.g1_mul, a.g1_add + b.g1_add,
            a.map_to_point + b.map_to_point, a.hash + b.hash};
}

nlohmann::json snapshot_json(const OpSnapshot& s) {
    return {{"pairing", s.pairing},
            {"g1_mul", s.g1_mul},
            {"g1_add", s.g1_add},
            {"map_to_point", s.map_to_point},
            {"hash", s.hash}};
}

}  // namespace

bool PhaseCost::matches() const {
    if (measured.pairing != expected.pairing) return false;
    if (measured.g1_mul != expected.g1_mul) return false;
    if (measured.g1_add != expected.g1_add) return false;
    if (measured.map_to_point != expected.map_to_point) return false;
    if (hash_strict && measured.hash != expected.hash) return false;
    return true;
}

BenchReport run_bench(BackendId backend, std::uint64_t seed) {
    SuiteOptions opts;
    opts.seed = seed;
    if (backend == BackendId::transparent)
        opts.transparent_q = mpz_class("2305843009213693951");  // 2^61 - 1
    auto suite = PairingSuite::make(backend, opts);

    const Bytes id = str_bytes("bench-user"), pw = str_bytes("bench-pw");
    const Bytes sid = str_bytes("bench-server");
    auto rc = scpk::RcState::system_init(*suite);

    // C1: card issuance — the user's masked-password point plus the
    // registration centre's work.
    OpSnapshot w = suite->counters();
    auto reg = scpk::user_register_begin(*suite, id, pw);
    auto card = scpk::assemble_card(reg, rc.issue_card(reg));
    OpSnapshot c1 = suite->counters() - w;

    // Server registration is outside the C1/C2/C3 comparison.
    auto commit = scpk::server_register_begin(*suite, sid);
    auto issue = rc.register_server(commit.sid, commit.v_pub);
    auto key = scpk::server_register_finalize(*suite, rc.params(), commit, issue);
    scpk::ServerRuntime rt(*suite, rc.params(), std::move(key));

    // C2/C3: one honest login, counters windowed around each step so the
    // user's and server's operations never blend. The user's first window
    // opens before the session is constructed: the card unlock inside the
    // constructor (map-to-point for QID, the masked-password mul) is part
    // of the login's cost.
    w = suite->counters();
    scpk::UserSession user(*suite, rc.params(), card, id, pw, sid);
    auto req = user.begin();
    OpSnapshot u1 = suite->counters() - w;
    scpk::ServerSession server(rt);
    w = suite->counters();
    auto ch = server.on_request(req);
    OpSnapshot s1 = suite->counters() - w;
    w = suite->counters();
    auto resp = user.on_challenge(ch);
    OpSnapshot u2 = suite->counters() - w;
    w = suite->counters();
    server.on_response(resp);
    OpSnapshot s2 = suite->counters() - w;
    OpSnapshot c2 = plus(u1, u2);
    OpSnapshot c3 = plus(s1, s2);

    // Same user-side measurement with (r, R = r*P) precomputed offline.
    Scalar r_pre = suite->random_scalar();
    PointG1 r_pub = suite->scalar_mul(r_pre, suite->generator());
    scpk::ServerSession server2(rt);
    w = suite->counters();
    scpk::UserSession user2(*suite, rc.params(), card, id, pw, sid);
    auto req2 = user2.begin_with_precomputed(r_pre, r_pub);
    OpSnapshot p1 = suite->counters() - w;
    auto ch2 = server2.on_request(req2);
    w = suite->counters();
    auto resp2 = user2.on_challenge(ch2);
    OpSnapshot p2 = suite->counters() - w;
    server2.on_response(resp2);
    OpSnapshot c2_pre = plus(p1, p2);

    BenchReport report;
    report.backend = backend;
    report.seed = seed;
    report.phases = {
        {"C1_user_registration", c1, OpSnapshot{0, 3, 0, 1, 2}, true},
        {"C2_user_login", c2, OpSnapshot{0, 9, 1, 1, 5}, false},
        {"C2_user_login_precomputed", c2_pre, OpSnapshot{0, 8, 1, 1, 5}, false},
        {"C3_server_verification", c3, OpSnapshot{2, 4, 1, 0, 2}, false},
    };
    report.all_match = true;
    for (const auto& p : report.phases) report.all_match = report.all_match && p.matches();
    return report;
}

std::string to_json(const BenchReport& r) {
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& p : r.phases) {
        auto d = [&](std::uint64_t m, std::uint64_t e) {
            return static_cast<long long>(m) - static_cast<long long>(e);
        };
        phases.push_back(
            {{"phase", p.phase},
             {"measured", snapshot_json(p.measured)},
             {"expected", snapshot_json(p.expected)},
             {"delta",
              {{"pairing", d(p.measured.pairing, p.expected.pairing)},
               {"g1_mul", d(p.measured.g1_mul, p.expected.g1_mul)},
               {"g1_add", d(p.measured.g1_add, p.expected.g1_add)},
               {"map_to_point", d(p.measured.map_to_point, p.expected.map_to_point)},
               {"hash", d(p.measured.hash, p.expected.hash)}}},
             {"hash_strict", p.hash_strict},
             {"match", p.matches()}});
    }
    nlohmann::json doc = {{"backend", backend_name(r.backend)},
                          {"seed", r.seed},
                          {"phases", phases},
                          {"all_match", r.all_match}};
    return doc.dump(2) + "\n";
}

}  // namespace msauth::bench
