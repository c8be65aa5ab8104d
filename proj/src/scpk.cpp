#include "msauth/scpk.hpp"

namespace msauth::scpk {

namespace {

Bytes fingerprint(const PairingSuite& s, const PointG1& did, const PointG1& r) {
    Bytes fp = s.encode_point(did);
    Bytes rb = s.encode_point(r);
    fp.insert(fp.end(), rb.begin(), rb.end());
    return fp;
}

const PointG1 kIdentity{0, 0, true};

}  // namespace

const char* phase_name(Phase p) noexcept {
    switch (p) {
        case Phase::Idle: return "Idle";
        case Phase::AwaitChallenge: return "AwaitChallenge";
        case Phase::AwaitResponse: return "AwaitResponse";
        case Phase::Established: return "Established";
        case Phase::Failed: return "Failed";
    }
    return "?";
}

// ---- registration ----

UserRegistration user_register_begin(const PairingSuite& suite, const Bytes& id,
                                     const Bytes& pw) {
    if (id.empty() || pw.empty())
        fail(Errc::MissingPrecondition, "identity and password must be nonempty");
    Scalar b = suite.random_scalar();
    Scalar hp = suite.hash({id, pw, b});
    return {id, suite.scalar_mul(hp, suite.generator()), b};
}

SmartCard assemble_card(const UserRegistration& reg, const CardIssue& issue) {
    return {issue.reg, issue.h_i, reg.b};
}

ServerCommit server_register_begin(const PairingSuite& suite, const Bytes& sid) {
    if (sid.empty()) fail(Errc::MissingPrecondition, "server identity must be nonempty");
    Scalar v = suite.random_scalar();
    PointG1 v_pub = suite.scalar_mul(v, suite.generator());
    return {sid, std::move(v_pub), v};
}

PointG1 server_public_key(const PairingSuite& suite, const PublicParams& params,
                          const Bytes& sid, const PointG1& w) {
    Scalar hw = suite.hash({sid, w});
    return suite.point_add(suite.scalar_mul(hw, params.pub_rc), w);
}

ServerKey server_register_finalize(const PairingSuite& suite, const PublicParams& params,
                                   const ServerCommit& commit, const ServerIssue& issue) {
    Scalar s_j = suite.sc_add(issue.s_prime, commit.v);
    PointG1 pub_j = suite.scalar_mul(s_j, suite.generator());
    if (!(pub_j == server_public_key(suite, params, commit.sid, issue.w)))
        fail(Errc::VerificationFailed, "self-certification identity does not hold");
    return {commit.sid, issue.w, s_j, std::move(pub_j)};
}

CardSecrets card_unlock(const PairingSuite& suite, const PublicParams& params,
                        const SmartCard& card, const Bytes& id, const Bytes& pw) {
    Scalar hp = suite.hash({id, pw, card.b});
    PointG1 mask_key = suite.scalar_mul(hp, params.pub_rc);
    PointG1 cid;
    try {
        cid = suite.unmask_to_point(card.reg, mask_key);
    } catch (const Error& e) {
        // wrong credentials can already fail here: the blob does not even
        // unmask to a point under the derived key
        if (e.code() == Errc::MaskCorrupt)
            fail(Errc::AuthLocalFailed, "card rejected the credentials");
        throw;
    }
    PointG1 qid = suite.map_to_point(id);
    if (!(suite.hash({qid, cid}) == card.h_i))
        fail(Errc::AuthLocalFailed, "card rejected the credentials");
    return {std::move(qid), std::move(cid)};
}

// ---- registration centre ----

RcState::RcState(const PairingSuite& suite, Scalar s_rc)
    : suite_(&suite), s_rc_(std::move(s_rc)) {
    params_.pub_rc = suite.scalar_mul(s_rc_, suite.generator());
}

RcState RcState::system_init(const PairingSuite& suite) {
    return RcState(suite, suite.random_scalar());
}

RcState RcState::from_secret(const PairingSuite& suite, Scalar s_rc) {
    return RcState(suite, std::move(s_rc));
}

CardIssue RcState::issue_card(const UserRegistration& req) const {
    PointG1 qid = suite_->map_to_point(req.id);
    PointG1 cid = suite_->scalar_mul(s_rc_, qid);
    PointG1 mask_key = suite_->scalar_mul(s_rc_, req.hpw);
    return {suite_->mask_xor(cid, mask_key), suite_->hash({qid, cid})};
}

ServerIssue RcState::register_server(const Bytes& sid, const PointG1& v_pub) {
    if (servers_.count(sid))
        fail(Errc::DuplicateServer, "server identity already registered");
    Scalar w = suite_->random_scalar();
    PointG1 w_pub = suite_->point_add(suite_->scalar_mul(w, suite_->generator()), v_pub);
    Scalar hw = suite_->hash({sid, w_pub});
    Scalar s_prime = suite_->sc_add(suite_->sc_mul(s_rc_, hw), w);
    servers_.emplace(sid, w_pub);
    return {std::move(w_pub), s_prime};
}

std::pair<wire::PwRound2, PwChangeRcSession> RcState::pw_round1(
    const wire::PwRound1& msg) const {
    if (PairingSuite::is_identity(msg.z))
        fail(Errc::IdentityPoint, "identity Z in password-change request");
    PointG1 blind = suite_->scalar_mul(s_rc_, msg.z);
    PointG1 cid = suite_->unmask_to_point(msg.aid, blind);
    PointG1 qid = suite_->map_to_point(msg.id);
    // only the holder of the genuine CID = s_RC*QID passes:
    // e(CID, P) == e(QID, pub_RC)
    if (!(suite_->pairing(cid, suite_->generator()) ==
          suite_->pairing(qid, params_.pub_rc)))
        fail(Errc::UserAuthFailed, "password-change pairing check failed");
    Scalar v1 = suite_->hash({cid, blind});
    return {wire::PwRound2{v1}, PwChangeRcSession{std::move(cid), std::move(blind)}};
}

wire::PwRound4 RcState::pw_round3(PwChangeRcSession& session,
                                  const wire::PwRound3& msg) const {
    if (session.round3_done) fail(Errc::StateError, "round 3 already answered");
    PointG1 hpw_new = suite_->unmask_to_point(msg.v2, session.blind);
    if (!(suite_->hash({session.cid, session.blind, hpw_new}) == msg.v3))
        fail(Errc::UserAuthFailed, "V3 failed verification");
    PointG1 mask_key = suite_->scalar_mul(s_rc_, hpw_new);
    MaskBlob reg_new = suite_->mask_xor(session.cid, mask_key);
    MaskBlob v4 = suite_->mask_xor(reg_new, session.blind);
    Scalar v5 = suite_->hash({session.blind, reg_new});
    session.round3_done = true;
    return {std::move(v4), v5};
}

// ---- login: user side ----

UserSession::UserSession(const PairingSuite& suite, const PublicParams& params,
                         const SmartCard& card, Bytes id, const Bytes& pw, Bytes sid)
    : suite_(&suite),
      params_(&params),
      id_(std::move(id)),
      sid_(std::move(sid)),
      secrets_(card_unlock(suite, params, card, id_, pw)),
      did_(kIdentity),
      r_pub_(kIdentity),
      k_(kIdentity),
      t_(kIdentity) {}

wire::LoginRequest UserSession::begin() {
    if (phase_ != Phase::Idle) fail(Errc::StateError, "login already in progress");
    u_ = suite_->random_scalar();
    r_ = suite_->random_scalar();
    did_ = suite_->scalar_mul(u_, secrets_.qid);
    r_pub_ = suite_->scalar_mul(r_, suite_->generator());
    phase_ = Phase::AwaitChallenge;
    return {did_, r_pub_};
}

wire::LoginRequest UserSession::begin_with_precomputed(const Scalar& r,
                                                       const PointG1& r_pub) {
    if (phase_ != Phase::Idle) fail(Errc::StateError, "login already in progress");
    if (PairingSuite::is_identity(r_pub))
        fail(Errc::IdentityPoint, "precomputed R is the identity");
    u_ = suite_->random_scalar();
    r_ = r;
    r_pub_ = r_pub;
    did_ = suite_->scalar_mul(u_, secrets_.qid);
    phase_ = Phase::AwaitChallenge;
    return {did_, r_pub_};
}

wire::UserResponse UserSession::on_challenge(const wire::ServerChallenge& ch) {
    if (phase_ != Phase::AwaitChallenge) {
        phase_ = Phase::Failed;
        fail(Errc::StateError, "challenge arrived out of order");
    }
    if (PairingSuite::is_identity(ch.r)) {
        phase_ = Phase::Failed;
        fail(Errc::IdentityPoint, "identity R_j in challenge");
    }
    PointG1 pub_j = server_public_key(*suite_, *params_, sid_, ch.w);
    k_ = suite_->scalar_mul(r_, pub_j);
    if (!(suite_->hash({did_, sid_, k_, ch.r}) == ch.auth)) {
        phase_ = Phase::Failed;
        fail(Errc::ServerAuthFailed, "challenge failed verification");
    }
    t_ = suite_->scalar_mul(r_, ch.r);
    PointG1 m = suite_->scalar_mul(r_, did_);
    PointG1 n = suite_->scalar_mul(u_, secrets_.cid);
    Scalar d = suite_->hash({did_, sid_, k_, m});
    PointG1 b = suite_->scalar_mul(suite_->sc_add(r_, d), n);
    sk_ = suite_->hash({did_, sid_, k_, t_});
    phase_ = Phase::Established;
    return {std::move(m), std::move(b)};
}

Scalar UserSession::session_key() const {
    if (phase_ != Phase::Established) fail(Errc::StateError, "no established session");
    return sk_;
}

void UserSession::close() {
    // logical reset; mpz storage is not securely scrubbed
    u_ = Scalar{};
    r_ = Scalar{};
    sk_ = Scalar{};
    did_ = r_pub_ = k_ = t_ = kIdentity;
    phase_ = Phase::Idle;
}

// ---- login: server side ----

ServerRuntime::ServerRuntime(const PairingSuite& suite, const PublicParams& params,
                             ServerKey key, std::size_t replay_capacity)
    : suite_(&suite),
      params_(params),
      key_(std::move(key)),
      capacity_(replay_capacity == 0 ? 1 : replay_capacity) {}

bool ServerRuntime::replay_check_and_store(const Bytes& fp) {
    std::string k(fp.begin(), fp.end());
    std::lock_guard lk(mu_);
    if (auto it = seen_.find(k); it != seen_.end()) {
        mru_.splice(mru_.begin(), mru_, it->second);
        return false;
    }
    mru_.push_front(k);
    seen_[k] = mru_.begin();
    if (seen_.size() > capacity_) {
        seen_.erase(mru_.back());
        mru_.pop_back();
    }
    return true;
}

void ServerRuntime::clear_replay_cache() {
    std::lock_guard lk(mu_);
    mru_.clear();
    seen_.clear();
}

std::size_t ServerRuntime::replay_cache_size() const {
    std::lock_guard lk(mu_);
    return seen_.size();
}

ServerSession::ServerSession(ServerRuntime& runtime)
    : rt_(&runtime),
      did_(kIdentity),
      r_i_(kIdentity),
      r_pub_(kIdentity),
      k_(kIdentity),
      t_(kIdentity) {}

wire::ServerChallenge ServerSession::on_request(const wire::LoginRequest& req) {
    if (phase_ != Phase::Idle) {
        phase_ = Phase::Failed;
        fail(Errc::StateError, "login request arrived out of order");
    }
    if (PairingSuite::is_identity(req.did) || PairingSuite::is_identity(req.r)) {
        phase_ = Phase::Failed;
        fail(Errc::IdentityPoint, "identity element in login request");
    }
    const PairingSuite& s = rt_->suite();
    if (!rt_->replay_check_and_store(fingerprint(s, req.did, req.r))) {
        phase_ = Phase::Failed;
        fail(Errc::ReplayDetected, "login request duplicates a recent session");
    }
    did_ = req.did;
    r_i_ = req.r;
    r_j_ = s.random_scalar();
    r_pub_ = s.scalar_mul(r_j_, s.generator());
    t_ = s.scalar_mul(r_j_, r_i_);
    k_ = s.scalar_mul(rt_->key().s_j, r_i_);
    Scalar auth = s.hash({did_, rt_->key().sid, k_, r_pub_});
    phase_ = Phase::AwaitResponse;
    return {rt_->key().w, r_pub_, auth};
}

void ServerSession::on_response(const wire::UserResponse& resp) {
    if (phase_ != Phase::AwaitResponse) {
        phase_ = Phase::Failed;
        fail(Errc::StateError, "response arrived out of order");
    }
    const PairingSuite& s = rt_->suite();
    Scalar d = s.hash({did_, rt_->key().sid, k_, resp.m});
    PointG1 lhs = s.point_add(resp.m, s.scalar_mul(d, did_));
    if (!(s.pairing(lhs, rt_->params().pub_rc) == s.pairing(resp.b, s.generator()))) {
        phase_ = Phase::Failed;
        fail(Errc::UserAuthFailed, "response failed the pairing check");
    }
    sk_ = s.hash({did_, rt_->key().sid, k_, t_});
    phase_ = Phase::Established;
}

Scalar ServerSession::session_key() const {
    if (phase_ != Phase::Established) fail(Errc::StateError, "no established session");
    return sk_;
}

void ServerSession::close() {
    r_j_ = Scalar{};
    sk_ = Scalar{};
    did_ = r_i_ = r_pub_ = k_ = t_ = kIdentity;
    phase_ = Phase::Idle;
}

// ---- password change: user side ----

PwChangeUser::PwChangeUser(const PairingSuite& suite, const PublicParams& params,
                           const SmartCard& card, Bytes id, const Bytes& old_pw,
                           Bytes new_pw)
    : suite_(&suite),
      params_(&params),
      card_(card),
      id_(std::move(id)),
      new_pw_(std::move(new_pw)),
      secrets_(card_unlock(suite, params, card, id_, old_pw)),
      blind_(kIdentity),
      hpw_new_(kIdentity) {
    if (new_pw_.empty()) fail(Errc::MissingPrecondition, "new password must be nonempty");
}

wire::PwRound1 PwChangeUser::round1() {
    if (step_ != 0) fail(Errc::StateError, "password change already started");
    z_ = suite_->random_scalar();
    PointG1 z_pub = suite_->scalar_mul(z_, suite_->generator());
    blind_ = suite_->scalar_mul(z_, params_->pub_rc);
    MaskBlob aid = suite_->mask_xor(secrets_.cid, blind_);
    step_ = 1;
    return {id_, std::move(aid), std::move(z_pub)};
}

wire::PwRound3 PwChangeUser::on_round2(const wire::PwRound2& msg) {
    if (step_ != 1) fail(Errc::StateError, "round 2 arrived out of order");
    if (!(suite_->hash({secrets_.cid, blind_}) == msg.v1)) {
        step_ = -1;
        fail(Errc::RcAuthFailed, "V1 failed verification");
    }
    b_new_ = suite_->random_scalar();
    Scalar hp = suite_->hash({id_, new_pw_, b_new_});
    hpw_new_ = suite_->scalar_mul(hp, suite_->generator());
    MaskBlob v2 = suite_->mask_xor(hpw_new_, blind_);
    Scalar v3 = suite_->hash({secrets_.cid, blind_, hpw_new_});
    step_ = 2;
    return {std::move(v2), v3};
}

SmartCard PwChangeUser::on_round4(const wire::PwRound4& msg) {
    if (step_ != 2) fail(Errc::StateError, "round 4 arrived out of order");
    MaskBlob reg_new = suite_->mask_xor(msg.v4, blind_);
    if (!(suite_->hash({blind_, reg_new}) == msg.v5)) {
        step_ = -1;
        fail(Errc::RcAuthFailed, "V5 failed verification");
    }
    SmartCard replacement{std::move(reg_new), card_.h_i, b_new_};
    // prove the replacement before handing it out; the original card is
    // untouched either way
    try {
        card_unlock(*suite_, *params_, replacement, id_, new_pw_);
    } catch (const Error&) {
        step_ = -1;
        fail(Errc::VerificationFailed, "replacement card failed its unlock check");
    }
    step_ = 3;
    return replacement;
}

}  // namespace msauth::scpk
