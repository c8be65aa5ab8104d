#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <set>

#include "msauth/scpk.hpp"
#include "tf1_oracle.hpp"

using namespace msauth;
using namespace msauth::scpk;
namespace wr = msauth::wire;

namespace {

std::unique_ptr<PairingSuite> tf1_suite(std::uint64_t seed = 1) {
    return PairingSuite::make(BackendId::transparent, {.seed = seed});
}

const mpz_class M61("2305843009213693951");  // 2^61 - 1, prime

std::unique_ptr<PairingSuite> m61_suite(std::uint64_t seed = 1) {
    return PairingSuite::make(BackendId::transparent,
                              {.seed = seed, .transparent_q = M61});
}

PointG1 pt(const PairingSuite& s, unsigned long dlog) {
    return s.mul_raw(dlog, s.generator());
}

Bytes ascii(std::string_view sv) { return Bytes(sv.begin(), sv.end()); }

Bytes b1(unsigned v) { return Bytes{static_cast<std::uint8_t>(v)}; }

OpSnapshot plus(const OpSnapshot& a, const OpSnapshot& b) {
    return {a.pairing + b.pairing, a.g1_mul + b.g1_mul, a.g1_add + b.g1_add,
            a.map_to_point + b.map_to_point, a.hash + b.hash};
}

template <class F>
std::optional<Errc> code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

// A complete honest deployment on one suite: RC, one server, one user card.
struct World {
    const PairingSuite& s;
    RcState rc;
    Bytes id, pw, sid;
    SmartCard card;
    ServerKey key;

    World(const PairingSuite& suite, Bytes id_, Bytes pw_, Bytes sid_)
        : s(suite),
          rc(RcState::system_init(suite)),
          id(std::move(id_)),
          pw(std::move(pw_)),
          sid(std::move(sid_)),
          card{MaskBlob{}, Scalar{}, Scalar{}},
          key{} {
        auto reg = user_register_begin(s, id, pw);
        card = assemble_card(reg, rc.issue_card(reg));
        auto commit = server_register_begin(s, sid);
        auto issue = rc.register_server(sid, commit.v_pub);
        key = server_register_finalize(s, rc.params(), commit, issue);
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// TF-1 worked fixtures: every intermediate pinned to the independently
// regenerated numbers in tf1_oracle.hpp.
// ---------------------------------------------------------------------------

TEST_SUITE("scpk.fixture") {

TEST_CASE("registration produces the worked card") {
    auto s = tf1_suite();
    s->oracle_enable();
    Bytes id = ascii("ID_i"), pw = ascii("pw_i");
    s->oracle_install_map("ID_i", tf1::QID);
    s->oracle_install_hash({id, pw, s->sc(77)}, tf1::H_IDPWB);
    s->oracle_install_hash({pt(*s, tf1::QID), pt(*s, tf1::CID)}, tf1::H_QIDCID);

    auto rc = RcState::from_secret(*s, s->sc(tf1::S_RC));
    CHECK(rc.params().pub_rc == pt(*s, tf1::PUB_RC));
    CHECK(rc.user_record_count() == 0);

    s->script_scalars({77});  // the salt b
    auto reg = user_register_begin(*s, id, pw);
    CHECK(reg.b == s->sc(77));
    CHECK(reg.hpw == pt(*s, tf1::H_IDPWB));

    auto issue = rc.issue_card(reg);
    CHECK(issue.reg.bytes == b1(tf1::REG_BLOB));
    CHECK(issue.h_i == s->sc(tf1::H_QIDCID));
    CHECK(rc.issue_card(reg).reg == issue.reg);  // issuing is deterministic
    CHECK(rc.user_record_count() == 0);          // and retains nothing

    auto card = assemble_card(reg, issue);
    auto secrets = card_unlock(*s, rc.params(), card, id, pw);
    CHECK(secrets.qid == pt(*s, tf1::QID));
    CHECK(secrets.cid == pt(*s, tf1::CID));
}

TEST_CASE("server registration: witness, partial key, self-certification") {
    auto s = tf1_suite();
    s->oracle_enable();
    Bytes sid = b1(tf1::SID_BYTE);
    s->oracle_install_hash({sid, pt(*s, tf1::W_J)}, tf1::H_SIDW);
    auto rc = RcState::from_secret(*s, s->sc(tf1::S_RC));

    s->script_scalars({tf1::V_J});
    auto commit = server_register_begin(*s, sid);
    CHECK(commit.v_pub == pt(*s, tf1::V_J));

    s->script_scalars({tf1::W_J_RAND});
    auto issue = rc.register_server(sid, commit.v_pub);
    CHECK(issue.w == pt(*s, tf1::W_J));
    CHECK(issue.s_prime == s->sc(tf1::S_PRIME));
    CHECK(rc.server_record_count() == 1);

    auto key = server_register_finalize(*s, rc.params(), commit, issue);
    CHECK(key.s_j == s->sc(tf1::S_J));
    CHECK(key.pub_j == pt(*s, tf1::PUB_J));
    // anyone recomputes pub_j from public data alone
    CHECK(server_public_key(*s, rc.params(), sid, issue.w) == pt(*s, tf1::PUB_J));

    // tampered witness breaks the self-certification identity
    ServerIssue tampered{pt(*s, tf1::W_J + 1), issue.s_prime};
    CHECK(code_of([&] { server_register_finalize(*s, rc.params(), commit, tampered); }) ==
          Errc::VerificationFailed);

    // re-registration of the same identity is refused
    CHECK(code_of([&] { rc.register_server(sid, commit.v_pub); }) ==
          Errc::DuplicateServer);
}

TEST_CASE("login runs the worked three-frame exchange") {
    auto s = tf1_suite();
    s->oracle_enable();
    Bytes id = ascii("ID_i"), pw = ascii("pw_i"), sid = b1(tf1::SID_BYTE);
    s->oracle_install_map("ID_i", tf1::QID);
    s->oracle_install_hash({id, pw, s->sc(77)}, tf1::H_IDPWB);
    s->oracle_install_hash({pt(*s, tf1::QID), pt(*s, tf1::CID)}, tf1::H_QIDCID);
    s->oracle_install_hash({sid, pt(*s, tf1::W_J)}, tf1::H_SIDW);
    s->oracle_install_hash(
        {pt(*s, tf1::DID), sid, pt(*s, tf1::K_SHARED), pt(*s, tf1::M_PT)}, tf1::D_IJ);

    auto rc = RcState::from_secret(*s, s->sc(tf1::S_RC));
    s->script_scalars({77});
    auto reg = user_register_begin(*s, id, pw);
    auto card = assemble_card(reg, rc.issue_card(reg));
    s->script_scalars({tf1::V_J});
    auto commit = server_register_begin(*s, sid);
    s->script_scalars({tf1::W_J_RAND});
    auto key = server_register_finalize(*s, rc.params(), commit,
                                        rc.register_server(sid, commit.v_pub));

    UserSession user(*s, rc.params(), card, id, pw, sid);
    s->script_scalars({tf1::U_I, tf1::R_I});  // begin() draws u then r
    auto req = user.begin();
    CHECK(req.did == pt(*s, tf1::DID));
    CHECK(req.r == pt(*s, tf1::R_PT));
    CHECK(user.phase() == Phase::AwaitChallenge);

    ServerRuntime rt(*s, rc.params(), key);
    ServerSession srv(rt);
    s->script_scalars({tf1::R_J});
    auto ch = srv.on_request(req);
    CHECK(ch.w == pt(*s, tf1::W_J));
    CHECK(ch.r == pt(*s, tf1::R_J));
    // Auth = h(DID, SID, K, R_j) through the byte-sum fallback
    CHECK(ch.auth ==
          s->sc(tf1::bytesum_framed(
              {{tf1::DID}, {tf1::SID_BYTE}, {tf1::K_SHARED}, {tf1::R_J}})));

    auto resp = user.on_challenge(ch);
    CHECK(resp.m == pt(*s, tf1::M_PT));
    CHECK(resp.b == pt(*s, tf1::B_PT));
    CHECK(user.phase() == Phase::Established);

    srv.on_response(resp);
    CHECK(srv.phase() == Phase::Established);
    CHECK(user.session_key() == srv.session_key());
    CHECK(user.session_key() ==
          s->sc(tf1::bytesum_framed(
              {{tf1::DID}, {tf1::SID_BYTE}, {tf1::K_SHARED}, {tf1::T_SHARED}})));
}

TEST_CASE("password change runs the worked four-frame exchange") {
    auto s = tf1_suite();
    s->oracle_enable();
    Bytes id = ascii("ID_i"), pw = ascii("pw_i"), pw_new = ascii("pw_new");
    s->oracle_install_map("ID_i", tf1::QID);
    s->oracle_install_hash({id, pw, s->sc(77)}, tf1::H_IDPWB);
    s->oracle_install_hash({pt(*s, tf1::QID), pt(*s, tf1::CID)}, tf1::H_QIDCID);
    auto rc = RcState::from_secret(*s, s->sc(tf1::S_RC));
    s->script_scalars({77});
    auto reg = user_register_begin(*s, id, pw);
    auto card = assemble_card(reg, rc.issue_card(reg));
    const SmartCard before = card;

    PwChangeUser pwu(*s, rc.params(), card, id, pw, pw_new);
    s->script_scalars({tf1::Z_I});
    auto r1 = pwu.round1();
    CHECK(r1.z == pt(*s, tf1::Z_I));
    CHECK(r1.aid.bytes == b1(tf1::AID_BLOB));

    auto [r2, rcs] = rc.pw_round1(r1);
    CHECK(rcs.blind == pt(*s, tf1::BLIND));
    CHECK(r2.v1 == s->sc(tf1::V1));

    s->script_scalars({33});  // the fresh salt b_new
    auto r3 = pwu.on_round2(r2);
    auto r4 = rc.pw_round3(rcs, r3);
    auto fresh = pwu.on_round4(r4);

    CHECK(fresh.b == s->sc(33));
    CHECK(fresh.h_i == before.h_i);  // QID, CID unchanged
    CHECK(card == before);           // the original is never touched

    // old password now fails on the replacement, new one recovers CID
    CHECK(code_of([&] { card_unlock(*s, rc.params(), fresh, id, pw); }) ==
          Errc::AuthLocalFailed);
    CHECK(card_unlock(*s, rc.params(), fresh, id, pw_new).cid == pt(*s, tf1::CID));
}

}  // TEST_SUITE scpk.fixture

// ---------------------------------------------------------------------------
// Protocol behaviour on the large transparent group (q = 2^61 - 1) and the
// production curve.
// ---------------------------------------------------------------------------

TEST_SUITE("scpk.protocol") {

TEST_CASE("system init is deterministic under a seed") {
    auto s1 = m61_suite(42), s2 = m61_suite(42);
    CHECK(RcState::system_init(*s1).params().pub_rc ==
          RcState::system_init(*s2).params().pub_rc);
}

TEST_CASE("honest logins agree on the session key (100 seeds)") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto s = m61_suite(seed);
        World w(*s, ascii("alice"), ascii("hunter2"), ascii("S1"));
        ServerRuntime rt(*s, w.rc.params(), w.key);
        UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
        ServerSession srv(rt);
        auto resp = user.on_challenge(srv.on_request(user.begin()));
        srv.on_response(resp);
        REQUIRE(user.session_key() == srv.session_key());
    }
}

TEST_CASE("honest login on the production backend") {
    auto s = PairingSuite::make(BackendId::production, {.seed = 11});
    World w(*s, ascii("alice"), ascii("hunter2"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);
    for (int run = 0; run < 2; ++run) {
        UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
        ServerSession srv(rt);
        auto resp = user.on_challenge(srv.on_request(user.begin()));
        srv.on_response(resp);
        REQUIRE(user.session_key() == srv.session_key());
    }
}

TEST_CASE("distinct sessions share no wire field except the witness") {
    auto s = m61_suite(7);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);

    auto run = [&] {
        UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
        ServerSession srv(rt);
        auto req = user.begin();
        auto ch = srv.on_request(req);
        auto resp = user.on_challenge(ch);
        srv.on_response(resp);
        return std::vector<Bytes>{s->encode_point(req.did),  s->encode_point(req.r),
                                  s->encode_point(ch.w),     s->encode_point(ch.r),
                                  s->encode_scalar(ch.auth), s->encode_point(resp.m),
                                  s->encode_point(resp.b)};
    };
    auto a = run(), b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i == 2)
            CHECK(a[i] == b[i]);  // W_j is the server's fixed public witness
        else
            CHECK(a[i] != b[i]);  // everything else is fresh per session
    }
    // in particular the pseudonym never repeats (user anonymity input)
    CHECK(a[0] != b[0]);
}

TEST_CASE("unlock failures: wrong password, wrong identity, tampered card") {
    auto s = m61_suite(3);
    World w(*s, ascii("alice"), ascii("right"), ascii("S1"));
    const SmartCard before = w.card;

    CHECK(code_of([&] {
              card_unlock(*s, w.rc.params(), w.card, w.id, ascii("wrong"));
          }) == Errc::AuthLocalFailed);
    CHECK(code_of([&] {
              card_unlock(*s, w.rc.params(), w.card, ascii("mallory"), w.pw);
          }) == Errc::AuthLocalFailed);

    SmartCard tampered = w.card;
    tampered.reg.bytes[0] ^= 0x01;
    CHECK(code_of([&] {
              card_unlock(*s, w.rc.params(), tampered, w.id, w.pw);
          }) == Errc::AuthLocalFailed);

    // unlock is side-effect free; failures never mutate the card
    CHECK(w.card == before);
    CHECK_NOTHROW(card_unlock(*s, w.rc.params(), w.card, w.id, w.pw));

    // and a session constructor propagates the same error, sending nothing
    CHECK(code_of([&] {
              UserSession bad(*s, w.rc.params(), w.card, w.id, ascii("wrong"), w.sid);
          }) == Errc::AuthLocalFailed);
}

TEST_CASE("forged or tampered challenges are rejected (100 trials)") {
    auto s = m61_suite(17);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);
    int rejected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
        user.begin();
        // an adversary without s_j guessing Auth at random
        wr::ServerChallenge forged{w.key.w, pt(*s, 2 + trial), s->random_scalar()};
        if (code_of([&] { user.on_challenge(forged); }) == Errc::ServerAuthFailed)
            ++rejected;
        CHECK(user.phase() == Phase::Failed);
    }
    CHECK(rejected == 100);

    // a tampered witness shifts pub_j, so Auth can no longer verify
    UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
    ServerSession srv(rt);
    auto ch = srv.on_request(user.begin());
    ch.w = s->point_add(ch.w, s->generator());
    CHECK(code_of([&] { user.on_challenge(ch); }) == Errc::ServerAuthFailed);
}

TEST_CASE("tampered responses fail the pairing check (100 trials)") {
    auto s = m61_suite(23);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);
    int rejected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
        ServerSession srv(rt);
        auto resp = user.on_challenge(srv.on_request(user.begin()));
        // flip one bit of B's encoding, as a wire-level adversary would
        Bytes enc = s->encode_point(resp.b);
        enc[trial % enc.size()] ^= static_cast<std::uint8_t>(1u << (trial % 8));
        try {
            resp.b = s->decode_point(enc);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::PointInvalid);  // not even a point
            ++rejected;
            continue;
        }
        if (code_of([&] { srv.on_response(resp); }) == Errc::UserAuthFailed) ++rejected;
    }
    CHECK(rejected == 100);
}

TEST_CASE("identity elements are rejected on receipt") {
    auto s = m61_suite(29);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);

    ServerSession s1(rt);
    CHECK(code_of([&] {
              s1.on_request(wr::LoginRequest{s->identity(), pt(*s, 5)});
          }) == Errc::IdentityPoint);
    ServerSession s2(rt);
    CHECK(code_of([&] {
              s2.on_request(wr::LoginRequest{pt(*s, 5), s->identity()});
          }) == Errc::IdentityPoint);

    UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
    user.begin();
    CHECK(code_of([&] {
              user.on_challenge(wr::ServerChallenge{w.key.w, s->identity(), s->sc(1)});
          }) == Errc::IdentityPoint);
    CHECK(user.phase() == Phase::Failed);

    CHECK(code_of([&] {
              w.rc.pw_round1(wr::PwRound1{w.id, MaskBlob{Bytes(s->point_size(), 0)},
                                          s->identity()});
          }) == Errc::IdentityPoint);
}

TEST_CASE("session state machine refuses out-of-order messages") {
    auto s = m61_suite(31);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);

    UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
    CHECK(code_of([&] { user.session_key(); }) == Errc::StateError);
    CHECK(code_of([&] {
              user.on_challenge(wr::ServerChallenge{w.key.w, pt(*s, 3), s->sc(1)});
          }) == Errc::StateError);
    CHECK(user.phase() == Phase::Failed);
    user.close();
    CHECK(user.phase() == Phase::Idle);

    auto req = user.begin();
    CHECK(code_of([&] { user.begin(); }) == Errc::StateError);

    ServerSession srv(rt);
    CHECK(code_of([&] {
              srv.on_response(wr::UserResponse{pt(*s, 1), pt(*s, 2)});
          }) == Errc::StateError);
    CHECK(srv.phase() == Phase::Failed);
    CHECK(code_of([&] { srv.session_key(); }) == Errc::StateError);

    ServerSession srv2(rt);
    auto ch = srv2.on_request(req);
    auto resp = user.on_challenge(ch);
    srv2.on_response(resp);
    // a second response to an established session is out of order
    CHECK(code_of([&] { srv2.on_response(resp); }) == Errc::StateError);

    // close zeroizes and returns to Idle; the session is reusable
    user.close();
    CHECK(user.phase() == Phase::Idle);
    CHECK(user.did().inf);
    CHECK(code_of([&] { user.session_key(); }) == Errc::StateError);
    CHECK_NOTHROW(user.begin());
}

TEST_CASE("exact duplicates are rejected by the replay cache") {
    auto s = m61_suite(37);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);

    UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
    auto req = user.begin();
    ServerSession first(rt);
    first.on_request(req);
    CHECK(rt.replay_cache_size() == 1);

    ServerSession second(rt);
    CHECK(code_of([&] { second.on_request(req); }) == Errc::ReplayDetected);
    CHECK(second.phase() == Phase::Failed);

    // bounded LRU: old fingerprints eventually fall out
    ServerRuntime tiny(*s, w.rc.params(), w.key, 2);
    CHECK(tiny.replay_check_and_store({0x01}));
    CHECK(tiny.replay_check_and_store({0x02}));
    CHECK_FALSE(tiny.replay_check_and_store({0x01}));  // still cached, refreshed
    CHECK(tiny.replay_check_and_store({0x03}));        // evicts 0x02
    CHECK(tiny.replay_check_and_store({0x02}));        // readmitted after eviction
    tiny.clear_replay_cache();
    CHECK(tiny.replay_cache_size() == 0);
}

TEST_CASE("replayed transcript passes verification on a cache-less server"
          " (documented limitation)") {
    // Nothing the server verifies is bound to its own session freshness:
    // d = h(DID, SID, K, M) repeats when the whole first flight repeats, so
    // with the replay cache cleared, a full replay re-authenticates. The
    // bounded LRU cache is therefore load-bearing, not an optimization.
    // (The replayer still cannot derive the fresh session key, which
    // depends on the server's new r_j.)
    auto s = m61_suite(41);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);

    UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
    auto req = user.begin();
    ServerSession first(rt);
    auto resp = user.on_challenge(first.on_request(req));
    first.on_response(resp);
    REQUIRE(first.phase() == Phase::Established);

    rt.clear_replay_cache();
    ServerSession replayed(rt);
    replayed.on_request(req);              // accepted again
    CHECK_NOTHROW(replayed.on_response(resp));  // and verified again
    CHECK(replayed.phase() == Phase::Established);
    // the fresh key differs from the original session's
    CHECK_FALSE(replayed.session_key() == first.session_key());
}

TEST_CASE("response forgery from public parameters alone"
          " (documented limitation)") {
    // The pairing check e(M + d*DID, pub_RC) == e(B, P) never involves the
    // user's CID: choosing DID = t*P, R = rho*P, M = m*P and
    // B = (m + d*t)*pub_RC satisfies it with only published values, and the
    // forger can also derive the session key. The resistance probes cover
    // the analogous versions of the published attacks, which all fail; this
    // structural forgery is a distinct weakness of the verification
    // equation itself.
    auto s = m61_suite(43);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);

    Scalar t = s->random_scalar(), rho = s->random_scalar(), m = s->random_scalar();
    PointG1 did = s->mul_raw(t.v, s->generator());
    PointG1 r_pub = s->mul_raw(rho.v, s->generator());

    ServerSession srv(rt);
    auto ch = srv.on_request(wr::LoginRequest{did, r_pub});

    PointG1 pub_j = server_public_key(*s, w.rc.params(), w.sid, ch.w);
    PointG1 k = s->mul_raw(rho.v, pub_j);
    CHECK(s->hash({did, w.sid, k, ch.r}) == ch.auth);  // forger verifies the server

    PointG1 m_pt = s->mul_raw(m.v, s->generator());
    Scalar d = s->hash({did, w.sid, k, m_pt});
    Scalar coeff = s->sc_add(m, s->sc_mul(d, t));
    PointG1 b = s->mul_raw(coeff.v, w.rc.params().pub_rc);

    CHECK_NOTHROW(srv.on_response(wr::UserResponse{m_pt, b}));
    CHECK(srv.phase() == Phase::Established);
    PointG1 t_pt = s->mul_raw(rho.v, ch.r);
    CHECK(srv.session_key() == s->hash({did, w.sid, k, t_pt}));
}

TEST_CASE("q=11 exhaustive soundness: the check accepts exactly one B per"
          " (u, r, d)") {
    auto s = PairingSuite::make(BackendId::transparent,
                                {.seed = 2, .transparent_q = 11});
    s->oracle_enable();  // byte-sum fallback; only d entries are installed
    Bytes id = ascii("u11"), pw = ascii("p"), sid = b1(9);
    auto rc = RcState::from_secret(*s, s->sc(4));

    s->script_scalars({6});
    auto reg = user_register_begin(*s, id, pw);
    auto card = assemble_card(reg, rc.issue_card(reg));
    s->script_scalars({2});
    auto commit = server_register_begin(*s, sid);
    s->script_scalars({3});
    auto key = server_register_finalize(*s, rc.params(), commit,
                                        rc.register_server(sid, commit.v_pub));
    ServerRuntime rt(*s, rc.params(), key);

    const unsigned qid = static_cast<unsigned>(
        s->map_to_point(id).x.get_ui());
    const unsigned cid = 4 * qid % 11;
    const unsigned s_j = static_cast<unsigned>(key.s_j.v.get_ui());

    for (unsigned u = 1; u <= 10; ++u) {
        for (unsigned r = 1; r <= 10; ++r) {
            for (unsigned d = 0; d <= 10; ++d) {
                rt.clear_replay_cache();  // the same (DID, R) recurs per d
                UserSession user(*s, rc.params(), card, id, pw, sid);
                s->script_scalars({u, r});
                auto req = user.begin();

                const unsigned m_dlog = r * u % 11 * qid % 11;
                const unsigned k_dlog = s_j * r % 11;
                s->oracle_install_hash(
                    {req.did, sid, pt(*s, k_dlog), pt(*s, m_dlog)}, d);

                ServerSession base(rt);
                s->script_scalars({(u + r) % 10 + 1});
                auto ch = base.on_request(req);
                auto resp = user.on_challenge(ch);
                const unsigned good = (r + d) % 11 * u % 11 * cid % 11;
                REQUIRE(resp.m == pt(*s, m_dlog));
                REQUIRE(resp.b == pt(*s, good));

                unsigned accepts = 0, rejects = 0;
                for (unsigned c = 0; c <= 10; ++c) {
                    ServerSession forked = base;  // same mid-protocol state
                    try {
                        forked.on_response(wr::UserResponse{resp.m, pt(*s, c)});
                        ++accepts;
                        REQUIRE(c == good);
                    } catch (const Error& e) {
                        REQUIRE(e.code() == Errc::UserAuthFailed);
                        ++rejects;
                    }
                }
                REQUIRE(accepts == 1);
                REQUIRE(rejects == 10);  // q - 1 corrupted alternatives
            }
        }
    }
}

TEST_CASE("operation counts: registration 3/1/2, user login 9 muls"
          " (8 precomputed), server side 2 pairings/4 muls/1 add") {
    auto s = m61_suite(9);
    auto rc = RcState::system_init(*s);
    Bytes id = ascii("alice"), pw = ascii("pw"), sid = ascii("S1");
    auto commit = server_register_begin(*s, sid);
    auto key = server_register_finalize(*s, rc.params(), commit,
                                        rc.register_server(sid, commit.v_pub));

    OpSnapshot a = s->counters();
    auto reg = user_register_begin(*s, id, pw);
    auto issue = rc.issue_card(reg);
    auto card = assemble_card(reg, issue);
    OpSnapshot c1 = s->counters() - a;
    CHECK(c1 == OpSnapshot{0, 3, 0, 1, 2});

    ServerRuntime rt(*s, rc.params(), key);

    // interleaved windows so each side's ops are isolated
    ServerSession srv(rt);
    OpSnapshot w0 = s->counters();
    UserSession user(*s, rc.params(), card, id, pw, sid);
    auto req = user.begin();
    OpSnapshot w1 = s->counters();
    auto ch = srv.on_request(req);
    OpSnapshot w2 = s->counters();
    auto resp = user.on_challenge(ch);
    user.session_key();
    OpSnapshot w3 = s->counters();
    srv.on_response(resp);
    srv.session_key();
    OpSnapshot w4 = s->counters();

    OpSnapshot c2 = plus(w1 - w0, w3 - w2);
    OpSnapshot c3 = plus(w2 - w1, w4 - w3);
    CHECK(c2 == OpSnapshot{0, 9, 1, 1, 6});
    CHECK(c3 == OpSnapshot{2, 4, 1, 0, 3});

    // with (r, R) precomputed offline the user-side cost drops by one mul
    Scalar r_pre = s->random_scalar();
    PointG1 r_pub_pre = s->scalar_mul(r_pre, s->generator());
    ServerSession srv2(rt);
    OpSnapshot p0 = s->counters();
    UserSession user2(*s, rc.params(), card, id, pw, sid);
    auto req2 = user2.begin_with_precomputed(r_pre, r_pub_pre);
    OpSnapshot p1 = s->counters();
    auto ch2 = srv2.on_request(req2);
    OpSnapshot p2 = s->counters();
    user2.on_challenge(ch2);
    user2.session_key();
    OpSnapshot p3 = s->counters();
    CHECK(plus(p1 - p0, p3 - p2) == OpSnapshot{0, 8, 1, 1, 6});
}

TEST_CASE("password change: interruption atomicity and V corruption"
          " (100 trials each)") {
    auto s = m61_suite(47);
    World w(*s, ascii("alice"), ascii("old-pw"), ascii("S1"));
    const SmartCard before = w.card;

    // denial-of-service guard: no message can be built without the old
    // password
    CHECK(code_of([&] {
              PwChangeUser bad(*s, w.rc.params(), w.card, w.id, ascii("guess"),
                               ascii("new-pw"));
          }) == Errc::AuthLocalFailed);

    // interruption after each round leaves the original card usable
    for (int stop = 1; stop <= 3; ++stop) {
        PwChangeUser pwu(*s, w.rc.params(), w.card, w.id, ascii("old-pw"),
                         ascii("new-pw"));
        auto r1 = pwu.round1();
        if (stop > 1) {
            auto [r2, rcs] = w.rc.pw_round1(r1);
            auto r3 = pwu.on_round2(r2);
            if (stop > 2) w.rc.pw_round3(rcs, r3);
        }
        CHECK(w.card == before);
        CHECK_NOTHROW(card_unlock(*s, w.rc.params(), w.card, w.id, ascii("old-pw")));
    }

    auto flip = [&](const Scalar& v, int trial) {
        mpz_class x = v.v;
        mpz_combit(x.get_mpz_t(), static_cast<mp_bitcnt_t>(trial % 60));
        return s->sc_from_mpz(x);
    };

    int rejected_v1 = 0, rejected_v3 = 0, rejected_v5 = 0;
    for (int trial = 0; trial < 100; ++trial) {
        {
            PwChangeUser pwu(*s, w.rc.params(), w.card, w.id, ascii("old-pw"),
                             ascii("new-pw"));
            auto [r2, rcs] = w.rc.pw_round1(pwu.round1());
            r2.v1 = flip(r2.v1, trial);
            if (code_of([&] { pwu.on_round2(r2); }) == Errc::RcAuthFailed)
                ++rejected_v1;
        }
        {
            PwChangeUser pwu(*s, w.rc.params(), w.card, w.id, ascii("old-pw"),
                             ascii("new-pw"));
            auto [r2, rcs] = w.rc.pw_round1(pwu.round1());
            auto r3 = pwu.on_round2(r2);
            r3.v3 = flip(r3.v3, trial);
            if (code_of([&] { w.rc.pw_round3(rcs, r3); }) == Errc::UserAuthFailed)
                ++rejected_v3;
        }
        {
            PwChangeUser pwu(*s, w.rc.params(), w.card, w.id, ascii("old-pw"),
                             ascii("new-pw"));
            auto [r2, rcs] = w.rc.pw_round1(pwu.round1());
            auto r4 = w.rc.pw_round3(rcs, pwu.on_round2(r2));
            r4.v5 = flip(r4.v5, trial);
            if (code_of([&] { pwu.on_round4(r4); }) == Errc::RcAuthFailed)
                ++rejected_v5;
        }
        REQUIRE(w.card == before);
    }
    CHECK(rejected_v1 == 100);
    CHECK(rejected_v3 == 100);
    CHECK(rejected_v5 == 100);
}

TEST_CASE("password change authenticates the user at the RC") {
    auto s = m61_suite(53);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));

    // a stranger's identity under alice's AID fails the pairing check
    PwChangeUser pwu(*s, w.rc.params(), w.card, w.id, ascii("pw"), ascii("next"));
    auto r1 = pwu.round1();
    wr::PwRound1 wrong_id{ascii("mallory"), r1.aid, r1.z};
    CHECK(code_of([&] { w.rc.pw_round1(wrong_id); }) == Errc::UserAuthFailed);

    // a corrupted AID either fails to unmask or fails the pairing check
    wr::PwRound1 bad_aid = r1;
    bad_aid.aid.bytes[0] ^= 0x80;
    CHECK_THROWS_AS(w.rc.pw_round1(bad_aid), Error);

    // the honest round still goes through afterwards
    auto [r2, rcs] = w.rc.pw_round1(r1);
    auto r3 = pwu.on_round2(r2);
    auto r4 = w.rc.pw_round3(rcs, r3);
    auto fresh = pwu.on_round4(r4);
    CHECK_NOTHROW(card_unlock(*s, w.rc.params(), fresh, w.id, ascii("next")));
    // an RC session answers round 3 exactly once
    CHECK(code_of([&] { w.rc.pw_round3(rcs, r3); }) == Errc::StateError);
}

TEST_CASE("fresh sessions derive fresh keys") {
    auto s = m61_suite(59);
    World w(*s, ascii("alice"), ascii("pw"), ascii("S1"));
    ServerRuntime rt(*s, w.rc.params(), w.key);
    std::set<mpz_class> keys;
    for (int run = 0; run < 20; ++run) {
        UserSession user(*s, w.rc.params(), w.card, w.id, w.pw, w.sid);
        ServerSession srv(rt);
        auto resp = user.on_challenge(srv.on_request(user.begin()));
        srv.on_response(resp);
        keys.insert(user.session_key().v);
    }
    CHECK(keys.size() == 20);
}

}  // TEST_SUITE scpk.protocol
