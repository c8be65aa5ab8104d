#include "msauth/attacks.hpp"

#include <algorithm>

namespace msauth::attacks {

using baseline::LiSuite;

namespace {

const Bytes& require(const std::optional<Bytes>& v, const char* what) {
    if (!v) fail(Errc::MissingPrecondition, std::string("adversary lacks ") + what);
    return *v;
}

std::string normalized(std::string_view name) {
    std::string out(name);
    std::replace(out.begin(), out.end(), '-', '_');
    return out;
}

Bytes label(const char* prefix, int n, int width) {
    std::string num = std::to_string(n);
    num.insert(0, static_cast<std::size_t>(width) - num.size(), '0');
    return str_bytes(std::string(prefix) + num);
}

}  // namespace

// ---- primitives -----------------------------------------------------------

RecoveredChain recover_chain(const LiSuite& s, const AdversaryContext& ctx,
                             const wire::LiLogin& login) {
    const Bytes& hy = require(ctx.hy, "h(y)");
    const Bytes& hxy = require(ctx.hxy, "h(x||y)");
    Bytes h_sid_hy = s.hash({ctx.sid, hy});
    Bytes n_i = xor_bytes(login.m2, h_sid_hy);
    Bytes e = xor_bytes(login.p_ij, s.hash({h_sid_hy, n_i}));
    Bytes b_chain = xor_bytes(e, hxy);
    Bytes d = s.hash({b_chain, hxy});
    Bytes a = xor_bytes(login.cid, s.hash({d, ctx.sid, n_i}));
    return {n_i, e, b_chain, d, a};
}

DictionaryResult stolen_card_dictionary(const LiSuite& s, const AdversaryContext& ctx) {
    if (!ctx.stolen_card)
        fail(Errc::MissingPrecondition, "adversary lacks the stolen card");
    if (ctx.captured_logins.empty())
        fail(Errc::MissingPrecondition, "adversary lacks a captured login");
    if (ctx.id_candidates.empty() || ctx.pw_dictionary.empty())
        fail(Errc::MissingPrecondition, "adversary lacks candidate lists");
    const baseline::LiSmartCard& card = *ctx.stolen_card;
    DictionaryResult res;

    // Recover the password-equivalent A from any capture that matches this
    // card. hy and D are read straight off the card; no insider values and
    // no guessing are involved yet.
    Bytes h_sid_hy = s.hash({ctx.sid, card.hy});
    const wire::LiLogin* matched = nullptr;
    Bytes n_i;
    for (const wire::LiLogin& cap : ctx.captured_logins) {
        n_i = xor_bytes(cap.m2, h_sid_hy);
        res.hash_evals += 2;
        if (xor_bytes(cap.p_ij, s.hash({h_sid_hy, n_i})) == card.e) {
            matched = &cap;
            break;
        }
    }
    if (!matched)
        fail(Errc::MissingPrecondition, "no captured login matches the stolen card");
    res.a = xor_bytes(matched->cid, s.hash({card.d, ctx.sid, n_i}));
    ++res.hash_evals;

    // C = h(ID ‖ h(y) ‖ A) pins the identity.
    auto id_hit = std::find_if(ctx.id_candidates.begin(), ctx.id_candidates.end(),
                               [&](const Bytes& id) {
                                   ++res.hash_evals;
                                   return s.hash({id, card.hy, res.a}) == card.c;
                               });
    if (id_hit == ctx.id_candidates.end())
        fail(Errc::NotInDictionary, "identity not in the candidate list");
    res.id = *id_hit;

    // A = h(b xor PW) pins the password.
    auto pw_hit = std::find_if(ctx.pw_dictionary.begin(), ctx.pw_dictionary.end(),
                               [&](const Bytes& pw) {
                                   ++res.hash_evals;
                                   return s.hash({xor_bytes(card.b, s.pad_secret(pw))}) ==
                                          res.a;
                               });
    if (pw_hit == ctx.pw_dictionary.end())
        fail(Errc::NotInDictionary, "password not in the dictionary");
    res.pw = *pw_hit;

    // Cross-validate: the recovered pair opens the card for a real login.
    baseline::li_login(s, card, res.id, res.pw, ctx.sid, Bytes(s.hash_len, 0x5A));
    return res;
}

ReplayOutcome replay_answer(const LiSuite& s, const AdversaryContext& ctx,
                            const wire::LiLogin& replayed,
                            const wire::LiChallenge& fresh) {
    RecoveredChain c = recover_chain(s, ctx, replayed);
    Bytes n_j = xor_bytes(xor_bytes(c.a, c.n_i), fresh.m4);
    if (s.hash({c.d, c.a, n_j, ctx.sid}) != fresh.m3)
        fail(Errc::M3Invalid, "challenge does not come from the real server");
    Bytes m5 = s.hash({c.d, c.a, c.n_i, ctx.sid});
    Bytes sk = s.hash({c.d, c.a, c.n_i, n_j, ctx.sid});
    return {{m5}, sk};
}

FabricatedUser impersonate_user(const LiSuite& s, const AdversaryContext& ctx,
                                const Bytes& seed_a, const Bytes& seed_b,
                                const Bytes& n_i) {
    const Bytes& hy = require(ctx.hy, "h(y)");
    const Bytes& hxy = require(ctx.hxy, "h(x||y)");
    Bytes a = s.hash({seed_a});
    Bytes b = s.hash({seed_b});
    Bytes d = s.hash({b, hxy});
    Bytes e = xor_bytes(b, hxy);
    Bytes h_sid_hy = s.hash({ctx.sid, hy});
    Bytes p_ij = xor_bytes(e, s.hash({h_sid_hy, n_i}));
    Bytes cid = xor_bytes(a, s.hash({d, ctx.sid, n_i}));
    Bytes m1 = s.hash({p_ij, cid, d, n_i});
    Bytes m2 = xor_bytes(h_sid_hy, n_i);
    return {{p_ij, cid, m1, m2}, {a, d, n_i, ctx.sid}};
}

SpoofOutcome spoof_server(const LiSuite& s, const AdversaryContext& ctx,
                          const wire::LiLogin& intercepted, const Bytes& n_j) {
    RecoveredChain c = recover_chain(s, ctx, intercepted);
    Bytes m3 = s.hash({c.d, c.a, n_j, ctx.sid});
    Bytes m4 = xor_bytes(xor_bytes(c.a, c.n_i), n_j);
    Bytes sk = s.hash({c.d, c.a, c.n_i, n_j, ctx.sid});
    return {{m3, m4}, sk};
}

// ---- scripted end-to-end demonstrations ------------------------------------

const char* attack_name(BaselineAttack a) noexcept {
    switch (a) {
        case BaselineAttack::dictionary: return "dictionary";
        case BaselineAttack::replay: return "replay";
        case BaselineAttack::impersonate: return "impersonate";
        case BaselineAttack::spoof_server: return "spoof_server";
    }
    return "?";
}

std::optional<BaselineAttack> attack_from_name(std::string_view name) noexcept {
    std::string n = normalized(name);
    if (n == "dictionary") return BaselineAttack::dictionary;
    if (n == "replay") return BaselineAttack::replay;
    if (n == "impersonate") return BaselineAttack::impersonate;
    if (n == "spoof_server") return BaselineAttack::spoof_server;
    return std::nullopt;
}

namespace {

// A seeded victim deployment of the hash-only scheme.
struct VictimWorld {
    LiSuite s = baseline::li_sha256_suite();
    std::mt19937_64 rng;
    baseline::LiRcState rc;
    Bytes sid;
    baseline::LiServerState srv;

    explicit VictimWorld(std::uint64_t seed)
        : rng(seed),
          rc{baseline::li_nonce(rng, 16), baseline::li_nonce(rng, 16)},
          sid(str_bytes("S1")),
          srv(baseline::li_provision_server(s, rc, sid)) {}

    Bytes nonce() { return baseline::li_nonce(rng, s.hash_len); }
};

AdversaryContext insider_context(const VictimWorld& w) {
    AdversaryContext ctx;
    ctx.sid = w.sid;
    // any registered server's operator holds both provisioned values
    ctx.hy = w.s.hash({w.rc.y});
    ctx.hxy = w.s.hash({w.rc.x, w.rc.y});
    return ctx;
}

void run_dictionary(AttackReport& rep, std::uint64_t seed) {
    VictimWorld w(seed);
    std::vector<Bytes> ids, pws;
    for (int i = 0; i < 100; ++i) ids.push_back(label("user_", i, 3));
    for (int i = 0; i < 1000; ++i) pws.push_back(label("pw_", i, 4));
    Bytes true_id = ids[w.rng() % ids.size()];
    Bytes true_pw = pws[w.rng() % pws.size()];
    auto card = baseline::li_register(w.s, w.rc, true_id, true_pw, w.nonce());
    // one wiretapped login and the physically stolen card
    auto start = baseline::li_login(w.s, card, true_id, true_pw, w.sid, w.nonce());

    AdversaryContext ctx;  // note: no insider values needed for this one
    ctx.sid = w.sid;
    ctx.stolen_card = card;
    ctx.captured_logins = {start.msg};
    ctx.id_candidates = ids;
    ctx.pw_dictionary = pws;
    auto res = stolen_card_dictionary(w.s, ctx);

    rep.succeeded = res.id == true_id && res.pw == true_pw;
    rep.evidence.emplace_back("candidates", "100 identities x 1000 passwords");
    rep.evidence.emplace_back("hash_evaluations", std::to_string(res.hash_evals));
    rep.evidence.emplace_back("recovered_id", bytes_str(res.id));
    rep.evidence.emplace_back("recovered_pw", bytes_str(res.pw));
    rep.evidence.emplace_back("password_equivalent_a", to_hex(res.a));
}

void run_replay(AttackReport& rep, std::uint64_t seed) {
    VictimWorld w(seed);
    Bytes id = str_bytes("alice"), pw = baseline::li_nonce(w.rng, 12);
    auto card = baseline::li_register(w.s, w.rc, id, pw, w.nonce());

    // the victim completes one honest session; the first flight is captured
    auto start = baseline::li_login(w.s, card, id, pw, w.sid, w.nonce());
    auto reply = baseline::li_server_verify(w.s, w.srv, start.msg, w.nonce());
    auto fin = baseline::li_card_confirm(w.s, start.pending, reply.msg);
    Bytes victim_sk = baseline::li_server_confirm(w.s, reply.pending, fin.msg);

    // later, the adversary replays it verbatim; the server keeps no
    // freshness state and issues a new challenge
    AdversaryContext ctx = insider_context(w);
    ctx.captured_logins = {start.msg};
    auto fresh = baseline::li_server_verify(w.s, w.srv, start.msg, w.nonce());
    auto out = replay_answer(w.s, ctx, start.msg, fresh.msg);
    Bytes server_sk = baseline::li_server_confirm(w.s, fresh.pending, out.confirm);

    rep.succeeded = server_sk == out.session_key && server_sk != victim_sk;
    rep.evidence.emplace_back("replayed_m1", to_hex(start.msg.m1));
    rep.evidence.emplace_back("hijacked_session_key", to_hex(out.session_key));
    rep.evidence.emplace_back("victim_session_key", to_hex(victim_sk));
}

void run_impersonate(AttackReport& rep, std::uint64_t seed) {
    VictimWorld w(seed);
    AdversaryContext ctx = insider_context(w);
    // no registration ever happens; A and B are conjured from two seeds
    Bytes seed_a = baseline::li_nonce(w.rng, 32), seed_b = baseline::li_nonce(w.rng, 32);
    auto fab = impersonate_user(w.s, ctx, seed_a, seed_b, w.nonce());
    auto reply = baseline::li_server_verify(w.s, w.srv, fab.login, w.nonce());
    auto fin = baseline::li_card_confirm(w.s, fab.pending, reply.msg);
    Bytes server_sk = baseline::li_server_confirm(w.s, reply.pending, fin.msg);

    rep.succeeded = server_sk == fin.session_key;
    rep.evidence.emplace_back("registered_user", "none (identity fabricated)");
    rep.evidence.emplace_back("fabricated_a", to_hex(w.s.hash({seed_a})));
    rep.evidence.emplace_back("session_key", to_hex(server_sk));
}

void run_spoof(AttackReport& rep, std::uint64_t seed) {
    VictimWorld w(seed);
    Bytes id = str_bytes("alice"), pw = baseline::li_nonce(w.rng, 12);
    auto card = baseline::li_register(w.s, w.rc, id, pw, w.nonce());

    // the victim initiates; the adversary intercepts and answers first
    auto start = baseline::li_login(w.s, card, id, pw, w.sid, w.nonce());
    AdversaryContext ctx = insider_context(w);
    auto out = spoof_server(w.s, ctx, start.msg, w.nonce());
    auto fin = baseline::li_card_confirm(w.s, start.pending, out.forged);

    rep.succeeded = fin.session_key == out.session_key;
    rep.evidence.emplace_back("forged_m3", to_hex(out.forged.m3));
    rep.evidence.emplace_back("forged_m4", to_hex(out.forged.m4));
    rep.evidence.emplace_back("shared_session_key", to_hex(out.session_key));
}

}  // namespace

AttackReport run_baseline_attack(BaselineAttack which, std::uint64_t seed) {
    AttackReport rep{attack_name(which), false, {}};
    try {
        switch (which) {
            case BaselineAttack::dictionary: run_dictionary(rep, seed); break;
            case BaselineAttack::replay: run_replay(rep, seed); break;
            case BaselineAttack::impersonate: run_impersonate(rep, seed); break;
            case BaselineAttack::spoof_server: run_spoof(rep, seed); break;
        }
    } catch (const Error& e) {
        rep.succeeded = false;
        rep.evidence.emplace_back("error", e.what());
    }
    return rep;
}

// ---- resistance probes against the pairing-based scheme --------------------

const char* probe_name(ProbeKind k) noexcept {
    switch (k) {
        case ProbeKind::replay: return "replay";
        case ProbeKind::impersonate: return "impersonate";
        case ProbeKind::spoof_server: return "spoof_server";
        case ProbeKind::stolen_card_dictionary: return "stolen_card_dictionary";
        case ProbeKind::dos_password_change: return "dos_password_change";
    }
    return "?";
}

std::optional<ProbeKind> probe_from_name(std::string_view name) noexcept {
    std::string n = normalized(name);
    if (n == "replay") return ProbeKind::replay;
    if (n == "impersonate") return ProbeKind::impersonate;
    if (n == "spoof_server") return ProbeKind::spoof_server;
    if (n == "stolen_card_dictionary") return ProbeKind::stolen_card_dictionary;
    if (n == "dos_password_change") return ProbeKind::dos_password_change;
    return std::nullopt;
}

namespace {

constexpr const char* kStageServer = "server_verify_user";
constexpr const char* kStageUser = "user_verify_and_respond";
constexpr const char* kStageCard = "card_unlock";

}  // namespace

ProbeReport probe_proposed_resistance(ProbeKind kind, int trials, std::uint64_t seed,
                                      BackendId backend) {
    SuiteOptions opt;
    opt.seed = seed;
    if (backend == BackendId::transparent)
        opt.transparent_q = mpz_class("2305843009213693951");  // 2^61 - 1
    auto s = PairingSuite::make(backend, opt);

    auto rc = scpk::RcState::system_init(*s);
    Bytes sid = str_bytes("S1");
    auto commit = scpk::server_register_begin(*s, sid);
    auto key = scpk::server_register_finalize(*s, rc.params(), commit,
                                              rc.register_server(sid, commit.v_pub));
    scpk::ServerRuntime rt(*s, rc.params(), key);
    std::mt19937_64 rng(seed ^ 0xA0761D6478BD642FULL);

    ProbeReport rep{probe_name(kind), trials, 0, {}};
    for (int t = 0; t < trials; ++t) {
        // fresh victim per trial, credentials outside any guess list
        Bytes id = str_bytes("victim-" + to_hex(baseline::li_nonce(rng, 6)));
        Bytes pw = str_bytes(to_hex(baseline::li_nonce(rng, 12)));
        auto reg = scpk::user_register_begin(*s, id, pw);
        auto card = scpk::assemble_card(reg, rc.issue_card(reg));

        std::optional<std::string> stage;
        switch (kind) {
            case ProbeKind::replay: {
                scpk::UserSession user(*s, rc.params(), card, id, pw, sid);
                auto req = user.begin();
                scpk::ServerSession first(rt);
                auto resp = user.on_challenge(first.on_request(req));
                first.on_response(resp);
                // replay the whole first flight verbatim
                scpk::ServerSession second(rt);
                try {
                    second.on_request(req);
                    second.on_response(resp);
                } catch (const Error& e) {
                    if (e.code() == Errc::ReplayDetected ||
                        e.code() == Errc::UserAuthFailed)
                        stage = kStageServer;
                }
                break;
            }
            case ProbeKind::impersonate: {
                // fabricate a pseudonym for the known identity: the analogue
                // of conjuring A, B from seeds. Everything is computable
                // except CID = s_RC * H(ID), which must be guessed.
                Scalar up = s->random_scalar(), rp = s->random_scalar();
                wire::LoginRequest req{s->mul_raw(up.v, s->map_to_point(id)),
                                       s->mul_raw(rp.v, s->generator())};
                scpk::ServerSession srv(rt);
                try {
                    auto ch = srv.on_request(req);
                    PointG1 pub_j =
                        scpk::server_public_key(*s, rc.params(), sid, ch.w);
                    PointG1 k = s->mul_raw(rp.v, pub_j);
                    PointG1 m = s->mul_raw(rp.v, req.did);
                    Scalar d = s->hash({req.did, sid, k, m});
                    PointG1 n_guess =
                        s->mul_raw(s->random_scalar().v, s->generator());
                    PointG1 b = s->mul_raw(s->sc_add(rp, d).v, n_guess);
                    srv.on_response(wire::UserResponse{m, b});
                } catch (const Error& e) {
                    if (e.code() == Errc::UserAuthFailed) stage = kStageServer;
                }
                break;
            }
            case ProbeKind::spoof_server: {
                scpk::UserSession user(*s, rc.params(), card, id, pw, sid);
                user.begin();
                // W_j is public, but Auth needs K = s_j * R_i
                wire::ServerChallenge forged{
                    key.w, s->mul_raw(s->random_scalar().v, s->generator()),
                    s->random_scalar()};
                try {
                    user.on_challenge(forged);
                } catch (const Error& e) {
                    if (e.code() == Errc::ServerAuthFailed) stage = kStageUser;
                }
                break;
            }
            case ProbeKind::stolen_card_dictionary: {
                // joint (ID, PW) guessing against the stolen card; the lists
                // do not contain the victim's high-entropy credentials
                int n_ids = backend == BackendId::transparent ? 8 : 3;
                int n_pws = backend == BackendId::transparent ? 32 : 5;
                bool hit = false;
                for (int i = 0; i < n_ids && !hit; ++i) {
                    for (int j = 0; j < n_pws && !hit; ++j) {
                        try {
                            scpk::card_unlock(*s, rc.params(), card,
                                              label("guess_", i, 2),
                                              label("pw_", j, 2));
                            hit = true;
                        } catch (const Error&) {
                            // AuthLocalFailed: guess rejected
                        }
                    }
                }
                if (!hit) stage = kStageCard;
                break;
            }
            case ProbeKind::dos_password_change: {
                // stolen card, known identity, unknown password: no change
                // request can even be formed
                try {
                    scpk::PwChangeUser pwu(*s, rc.params(), card, id,
                                           str_bytes("guess"),
                                           str_bytes("attacker-pw"));
                } catch (const Error& e) {
                    if (e.code() == Errc::AuthLocalFailed) stage = kStageCard;
                }
                break;
            }
        }
        if (stage) {
            ++rep.failures;
            rep.failure_stage = *stage;
        }
    }
    return rep;
}

}  // namespace msauth::attacks
