#include "msauth/keystore.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace msauth::store {
namespace {

constexpr char kMagic[4] = {'M', 'A', 'K', '1'};
constexpr std::uint8_t kVersion = 1;

enum class Kind : std::uint8_t { params = 1, rc = 2, server = 3, card = 4 };

const char* kind_label(Kind k) {
    switch (k) {
        case Kind::params: return "public parameters";
        case Kind::rc: return "rc master secret";
        case Kind::server: return "server key";
        case Kind::card: return "smart card";
    }
    return "?";
}

// File names embed caller-chosen identities; keep them filesystem-safe by
// percent-encoding everything outside [A-Za-z0-9._-].
std::string safe_name(const std::string& raw) {
    std::string out;
    for (unsigned char c : raw) {
        if (std::isalnum(c) || c == '.' || c == '_' || c == '-') {
            out.push_back(static_cast<char>(c));
        } else {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", c);
            out += buf;
        }
    }
    return out;
}

void put_u16(Bytes& out, std::size_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_field(Bytes& out, const Bytes& f) {
    if (f.size() > 0xFFFF) fail(Errc::StoreCorrupt, "field too large to store");
    put_u16(out, f.size());
    out.insert(out.end(), f.begin(), f.end());
}

struct BodyReader {
    const Bytes& b;
    std::size_t pos = 0;
    const std::string& what;

    Bytes take_field() {
        if (pos + 2 > b.size()) fail(Errc::StoreCorrupt, what + ": truncated body");
        std::size_t n = (std::size_t(b[pos]) << 8) | b[pos + 1];
        pos += 2;
        if (pos + n > b.size()) fail(Errc::StoreCorrupt, what + ": truncated body");
        Bytes f(b.begin() + pos, b.begin() + pos + n);
        pos += n;
        return f;
    }
    void done() const {
        if (pos != b.size()) fail(Errc::StoreCorrupt, what + ": trailing bytes in body");
    }
};

Bytes wrap(Kind kind, BackendId backend, const Bytes& body) {
    Bytes out(kMagic, kMagic + 4);
    out.push_back(kVersion);
    out.push_back(static_cast<std::uint8_t>(kind));
    out.push_back(static_cast<std::uint8_t>(backend));
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(body.size() >> shift));
    out.insert(out.end(), body.begin(), body.end());
    Bytes digest = sha256(out);
    out.insert(out.end(), digest.begin(), digest.end());
    return out;
}

Bytes unwrap(Kind kind, BackendId backend, const Bytes& file, const std::string& what) {
    constexpr std::size_t kHeader = 11, kDigest = 32;
    if (file.size() < kHeader + kDigest)
        fail(Errc::StoreCorrupt, what + ": container truncated");
    if (!std::equal(kMagic, kMagic + 4, file.begin()))
        fail(Errc::StoreCorrupt, what + ": not a key-store container");
    if (file[4] != kVersion)
        fail(Errc::VersionMismatch, what + ": container version " +
                                        std::to_string(file[4]) + ", expected " +
                                        std::to_string(kVersion));
    Bytes payload(file.begin(), file.end() - kDigest);
    Bytes digest(file.end() - kDigest, file.end());
    if (sha256(payload) != digest)
        fail(Errc::StoreCorrupt, what + ": checksum mismatch");
    if (file[5] != static_cast<std::uint8_t>(kind))
        fail(Errc::StoreCorrupt, what + ": container holds a different entry kind");
    if (file[6] != static_cast<std::uint8_t>(backend))
        fail(Errc::StoreCorrupt,
             what + ": container was written for the other backend");
    std::size_t n = 0;
    for (int i = 7; i < 11; ++i) n = (n << 8) | file[i];
    if (n != file.size() - kHeader - kDigest)
        fail(Errc::StoreCorrupt, what + ": body length mismatch");
    return Bytes(file.begin() + kHeader, file.end() - kDigest);
}

Bytes read_file(const std::filesystem::path& p, const std::string& what) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(Errc::StoreCorrupt, "store has no " + what + " entry at " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string& s = buf.str();
    return Bytes(s.begin(), s.end());
}

void write_file(const std::filesystem::path& p, const Bytes& data) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::StoreCorrupt, "cannot write " + p.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) fail(Errc::StoreCorrupt, "short write to " + p.string());
}

}  // namespace

KeyStore::KeyStore(std::filesystem::path root, const PairingSuite& suite)
    : root_(std::move(root)), suite_(&suite) {}

std::filesystem::path KeyStore::params_path() const { return root_ / "params.pub"; }
std::filesystem::path KeyStore::rc_path() const { return root_ / "rc.key"; }
std::filesystem::path KeyStore::server_path(const std::string& sid) const {
    return root_ / ("server_" + safe_name(sid) + ".key");
}
std::filesystem::path KeyStore::card_path(const std::string& user_id) const {
    return root_ / ("card_" + safe_name(user_id) + ".card");
}

bool KeyStore::has_params() const { return std::filesystem::exists(params_path()); }
bool KeyStore::has_rc() const { return std::filesystem::exists(rc_path()); }
bool KeyStore::has_server(const std::string& sid) const {
    return std::filesystem::exists(server_path(sid));
}
bool KeyStore::has_card(const std::string& user_id) const {
    return std::filesystem::exists(card_path(user_id));
}

void KeyStore::save_params(const scpk::PublicParams& p) const {
    if (has_params()) fail(Errc::DuplicateEntry, "public parameters already saved");
    Bytes body;
    put_field(body, suite_->encode_point(p.pub_rc));
    write_file(params_path(), wrap(Kind::params, suite_->backend_id(), body));
}

scpk::PublicParams KeyStore::load_params() const {
    const std::string what = kind_label(Kind::params);
    Bytes body = unwrap(Kind::params, suite_->backend_id(),
                        read_file(params_path(), what), what);
    BodyReader r{body, 0, what};
    scpk::PublicParams p{suite_->decode_point(r.take_field())};
    r.done();
    return p;
}

void KeyStore::save_rc_secret(const Scalar& s_rc) const {
    if (has_rc()) fail(Errc::DuplicateEntry, "rc master secret already saved");
    Bytes body;
    put_field(body, suite_->encode_scalar(s_rc));
    write_file(rc_path(), wrap(Kind::rc, suite_->backend_id(), body));
}

Scalar KeyStore::load_rc_secret() const {
    const std::string what = kind_label(Kind::rc);
    Bytes body = unwrap(Kind::rc, suite_->backend_id(), read_file(rc_path(), what), what);
    BodyReader r{body, 0, what};
    Scalar s = suite_->decode_scalar(r.take_field());
    r.done();
    return s;
}

void KeyStore::save_server(const scpk::ServerKey& key) const {
    std::string sid = bytes_str(key.sid);
    if (has_server(sid)) fail(Errc::DuplicateEntry, "server '" + sid + "' already registered");
    Bytes body;
    put_field(body, key.sid);
    put_field(body, suite_->encode_point(key.w));
    put_field(body, suite_->encode_scalar(key.s_j));
    put_field(body, suite_->encode_point(key.pub_j));
    write_file(server_path(sid), wrap(Kind::server, suite_->backend_id(), body));
}

scpk::ServerKey KeyStore::load_server(const std::string& sid) const {
    const std::string what = std::string(kind_label(Kind::server)) + " '" + sid + "'";
    Bytes body = unwrap(Kind::server, suite_->backend_id(),
                        read_file(server_path(sid), what), what);
    BodyReader r{body, 0, what};
    scpk::ServerKey key;
    key.sid = r.take_field();
    key.w = suite_->decode_point(r.take_field());
    key.s_j = suite_->decode_scalar(r.take_field());
    key.pub_j = suite_->decode_point(r.take_field());
    r.done();
    if (key.sid != str_bytes(sid))
        fail(Errc::StoreCorrupt, what + ": container holds a different server identity");
    return key;
}

void KeyStore::save_card(const std::string& user_id, const scpk::SmartCard& card,
                         bool overwrite) const {
    if (!overwrite && has_card(user_id))
        fail(Errc::DuplicateEntry, "user '" + user_id + "' already has a card");
    Bytes body;
    put_field(body, card.reg.bytes);
    put_field(body, suite_->encode_scalar(card.h_i));
    put_field(body, suite_->encode_scalar(card.b));
    write_file(card_path(user_id), wrap(Kind::card, suite_->backend_id(), body));
}

scpk::SmartCard KeyStore::load_card(const std::string& user_id) const {
    const std::string what = std::string(kind_label(Kind::card)) + " '" + user_id + "'";
    Bytes body = unwrap(Kind::card, suite_->backend_id(),
                        read_file(card_path(user_id), what), what);
    BodyReader r{body, 0, what};
    scpk::SmartCard card;
    card.reg = MaskBlob{r.take_field()};
    card.h_i = suite_->decode_scalar(r.take_field());
    card.b = suite_->decode_scalar(r.take_field());
    r.done();
    return card;
}

}  // namespace msauth::store
