#include "msauth/baseline.hpp"

#include <numeric>

namespace msauth::baseline {

namespace {

void expect_len(const Bytes& b, std::size_t n, const char* what) {
    if (b.size() != n)
        fail(Errc::LengthMismatch, std::string(what) + " must be hash-sized");
}

}  // namespace

Bytes LiSuite::hash(std::initializer_list<Bytes> fields) const {
    return hash(std::vector<Bytes>(fields));
}

Bytes LiSuite::hash(const std::vector<Bytes>& fields) const {
    Bytes framed;
    for (const Bytes& f : fields) {
        if (f.size() > 255)
            fail(Errc::LengthMismatch, "hash field longer than 255 bytes");
        framed.push_back(static_cast<std::uint8_t>(f.size()));
        framed.insert(framed.end(), f.begin(), f.end());
    }
    return digest(framed);
}

Bytes LiSuite::pad_secret(const Bytes& pw) const {
    Bytes out(hash_len, 0);
    std::copy_n(pw.begin(), std::min(pw.size(), hash_len), out.begin());
    return out;
}

LiSuite li_sha256_suite() {
    return {32, [](const Bytes& in) { return sha256(in); }};
}

LiSuite li_toy_suite() {
    return {1, [](const Bytes& in) {
                unsigned sum = std::accumulate(in.begin(), in.end(), 0u);
                return Bytes{static_cast<std::uint8_t>(sum & 0xFF)};
            }};
}

LiSmartCard li_register(const LiSuite& s, const LiRcState& rc, const Bytes& id,
                        const Bytes& pw, const Bytes& b) {
    if (id.empty() || pw.empty())
        fail(Errc::MissingPrecondition, "identity and password must be non-empty");
    expect_len(b, s.hash_len, "registration nonce b");
    Bytes a = s.hash({xor_bytes(b, s.pad_secret(pw))});
    Bytes bb = s.hash({id, rc.x});
    Bytes hy = s.hash({rc.y});
    Bytes hxy = s.hash({rc.x, rc.y});
    return {s.hash({id, hy, a}), s.hash({bb, hxy}), xor_bytes(bb, hxy), b, hy};
}

LiServerState li_provision_server(const LiSuite& s, const LiRcState& rc,
                                  const Bytes& sid) {
    if (sid.empty()) fail(Errc::MissingPrecondition, "server identity must be non-empty");
    return {sid, s.hash({rc.x, rc.y}), s.hash({sid, s.hash({rc.y})})};
}

LiUserStart li_login(const LiSuite& s, const LiSmartCard& card, const Bytes& id,
                     const Bytes& pw, const Bytes& sid, const Bytes& n_i) {
    expect_len(n_i, s.hash_len, "nonce N_i");
    Bytes a = s.hash({xor_bytes(card.b, s.pad_secret(pw))});
    if (s.hash({id, card.hy, a}) != card.c)
        fail(Errc::LocalCheckFailed, "smart card rejected the identity/password pair");
    Bytes h_sid_hy = s.hash({sid, card.hy});
    Bytes p_ij = xor_bytes(card.e, s.hash({h_sid_hy, n_i}));
    Bytes cid = xor_bytes(a, s.hash({card.d, sid, n_i}));
    Bytes m1 = s.hash({p_ij, cid, card.d, n_i});
    Bytes m2 = xor_bytes(h_sid_hy, n_i);
    return {{p_ij, cid, m1, m2}, {a, card.d, n_i, sid}};
}

LiServerReply li_server_verify(const LiSuite& s, const LiServerState& srv,
                               const wire::LiLogin& msg, const Bytes& n_j) {
    expect_len(n_j, s.hash_len, "nonce N_j");
    expect_len(msg.p_ij, s.hash_len, "P_ij");
    expect_len(msg.cid, s.hash_len, "CID");
    expect_len(msg.m1, s.hash_len, "M1");
    expect_len(msg.m2, s.hash_len, "M2");
    Bytes n_i = xor_bytes(msg.m2, srv.h_sid_hy);
    Bytes e = xor_bytes(msg.p_ij, s.hash({srv.h_sid_hy, n_i}));
    Bytes bb = xor_bytes(e, srv.hxy);
    Bytes d = s.hash({bb, srv.hxy});
    Bytes a = xor_bytes(msg.cid, s.hash({d, srv.sid, n_i}));
    if (s.hash({msg.p_ij, msg.cid, d, n_i}) != msg.m1)
        fail(Errc::M1Invalid, "login message failed the integrity check");
    Bytes m3 = s.hash({d, a, n_j, srv.sid});
    Bytes m4 = xor_bytes(xor_bytes(a, n_i), n_j);
    return {{m3, m4}, {a, d, n_i, n_j, srv.sid}};
}

LiUserFinish li_card_confirm(const LiSuite& s, const LiUserPending& pending,
                             const wire::LiChallenge& msg) {
    expect_len(msg.m3, s.hash_len, "M3");
    expect_len(msg.m4, s.hash_len, "M4");
    Bytes n_j = xor_bytes(xor_bytes(pending.a, pending.n_i), msg.m4);
    if (s.hash({pending.d, pending.a, n_j, pending.sid}) != msg.m3)
        fail(Errc::M3Invalid, "server answer failed verification at the card");
    Bytes m5 = s.hash({pending.d, pending.a, pending.n_i, pending.sid});
    Bytes sk = s.hash({pending.d, pending.a, pending.n_i, n_j, pending.sid});
    return {{m5}, sk};
}

Bytes li_server_confirm(const LiSuite& s, const LiServerPending& pending,
                        const wire::LiConfirm& msg) {
    expect_len(msg.m5, s.hash_len, "M5");
    if (s.hash({pending.d, pending.a, pending.n_i, pending.sid}) != msg.m5)
        fail(Errc::M5Invalid, "user confirmation failed verification");
    return s.hash({pending.d, pending.a, pending.n_i, pending.n_j, pending.sid});
}

LiSmartCard li_password_change(const LiSuite& s, const LiSmartCard& card,
                               const Bytes& id, const Bytes& old_pw,
                               const Bytes& new_pw, const Bytes& b_new) {
    if (new_pw.empty())
        fail(Errc::MissingPrecondition, "new password must be non-empty");
    expect_len(b_new, s.hash_len, "replacement nonce b'");
    Bytes a_old = s.hash({xor_bytes(card.b, s.pad_secret(old_pw))});
    if (s.hash({id, card.hy, a_old}) != card.c)
        fail(Errc::LocalCheckFailed, "smart card rejected the old password");
    Bytes a_new = s.hash({xor_bytes(b_new, s.pad_secret(new_pw))});
    return {s.hash({id, card.hy, a_new}), card.d, card.e, b_new, card.hy};
}

Bytes li_nonce(std::mt19937_64& rng, std::size_t n) {
    Bytes out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<std::uint8_t>(rng() & 0xFF);
    return out;
}

}  // namespace msauth::baseline
