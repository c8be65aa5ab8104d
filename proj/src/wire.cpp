#include "msauth/wire.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace msauth::wire {

namespace {

using nlohmann::json;

class Reader {
public:
    Reader(const PairingSuite& s, const Bytes& b) : suite_(s), buf_(b) {}

    std::uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }
    Bytes take(std::size_t n) {
        need(n);
        Bytes out(buf_.begin() + static_cast<long>(pos_),
                  buf_.begin() + static_cast<long>(pos_ + n));
        pos_ += n;
        return out;
    }
    PointG1 point() { return suite_.decode_point(take(suite_.point_size())); }
    PointG1 point_nonzero() {
        PointG1 x = point();
        if (x.inf) fail(Errc::PointInvalid, "identity element where a point is required");
        return x;
    }
    Scalar scalar() { return suite_.decode_scalar(take(suite_.scalar_size())); }
    MaskBlob blob() { return MaskBlob{take(suite_.point_size())}; }
    Bytes var_string() { return take(u8()); }
    void finish() const {
        if (pos_ != buf_.size()) fail(Errc::Truncated, "trailing bytes after frame");
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) fail(Errc::Truncated, "frame shorter than declared");
    }
    const PairingSuite& suite_;
    const Bytes& buf_;
    std::size_t pos_ = 0;
};

void put(Bytes& out, const Bytes& raw) { out.insert(out.end(), raw.begin(), raw.end()); }

void put_var(Bytes& out, const Bytes& s) {
    if (s.size() > 255) fail(Errc::LengthMismatch, "variable field exceeds 255 bytes");
    out.push_back(static_cast<std::uint8_t>(s.size()));
    put(out, s);
}

void put_blob(Bytes& out, const PairingSuite& suite, const MaskBlob& m) {
    if (m.bytes.size() != suite.point_size())
        fail(Errc::LengthMismatch, "mask blob length does not match point encoding");
    put(out, m.bytes);
}

// Baseline hash strings within one message must share one (hash-output)
// length; the decoder enforces that.
void check_same_len(std::initializer_list<const Bytes*> fields) {
    std::size_t len = (*fields.begin())->size();
    if (len == 0) fail(Errc::Truncated, "empty hash-string field");
    for (const Bytes* f : fields)
        if (f->size() != len)
            fail(Errc::LengthMismatch, "hash-string fields differ in length");
}

}  // namespace

const char* tag_name(Tag t) noexcept {
    switch (t) {
        case Tag::LoginRequest: return "LoginRequest";
        case Tag::ServerChallenge: return "ServerChallenge";
        case Tag::UserResponse: return "UserResponse";
        case Tag::PwRound1: return "PwRound1";
        case Tag::PwRound2: return "PwRound2";
        case Tag::PwRound3: return "PwRound3";
        case Tag::PwRound4: return "PwRound4";
        case Tag::LiLogin: return "LiLogin";
        case Tag::LiChallenge: return "LiChallenge";
        case Tag::LiConfirm: return "LiConfirm";
    }
    return "Unknown";
}

Tag tag_of(const Message& m) noexcept {
    return std::visit(
        [](const auto& v) -> Tag {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LoginRequest>) return Tag::LoginRequest;
            if constexpr (std::is_same_v<T, ServerChallenge>) return Tag::ServerChallenge;
            if constexpr (std::is_same_v<T, UserResponse>) return Tag::UserResponse;
            if constexpr (std::is_same_v<T, PwRound1>) return Tag::PwRound1;
            if constexpr (std::is_same_v<T, PwRound2>) return Tag::PwRound2;
            if constexpr (std::is_same_v<T, PwRound3>) return Tag::PwRound3;
            if constexpr (std::is_same_v<T, PwRound4>) return Tag::PwRound4;
            if constexpr (std::is_same_v<T, LiLogin>) return Tag::LiLogin;
            if constexpr (std::is_same_v<T, LiChallenge>) return Tag::LiChallenge;
            if constexpr (std::is_same_v<T, LiConfirm>) return Tag::LiConfirm;
        },
        m);
}

Bytes encode(const PairingSuite& suite, const Message& m) {
    Bytes out;
    out.push_back(static_cast<std::uint8_t>(tag_of(m)));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LoginRequest>) {
                put(out, suite.encode_point(v.did));
                put(out, suite.encode_point(v.r));
            } else if constexpr (std::is_same_v<T, ServerChallenge>) {
                put(out, suite.encode_point(v.w));
                put(out, suite.encode_point(v.r));
                put(out, suite.encode_scalar(v.auth));
            } else if constexpr (std::is_same_v<T, UserResponse>) {
                put(out, suite.encode_point(v.m));
                put(out, suite.encode_point(v.b));
            } else if constexpr (std::is_same_v<T, PwRound1>) {
                put_var(out, v.id);
                put_blob(out, suite, v.aid);
                put(out, suite.encode_point(v.z));
            } else if constexpr (std::is_same_v<T, PwRound2>) {
                put(out, suite.encode_scalar(v.v1));
            } else if constexpr (std::is_same_v<T, PwRound3>) {
                put_blob(out, suite, v.v2);
                put(out, suite.encode_scalar(v.v3));
            } else if constexpr (std::is_same_v<T, PwRound4>) {
                put_blob(out, suite, v.v4);
                put(out, suite.encode_scalar(v.v5));
            } else if constexpr (std::is_same_v<T, LiLogin>) {
                check_same_len({&v.p_ij, &v.cid, &v.m1, &v.m2});
                put_var(out, v.p_ij);
                put_var(out, v.cid);
                put_var(out, v.m1);
                put_var(out, v.m2);
            } else if constexpr (std::is_same_v<T, LiChallenge>) {
                check_same_len({&v.m3, &v.m4});
                put_var(out, v.m3);
                put_var(out, v.m4);
            } else if constexpr (std::is_same_v<T, LiConfirm>) {
                check_same_len({&v.m5});
                put_var(out, v.m5);
            }
        },
        m);
    return out;
}

Message decode(const PairingSuite& suite, const Bytes& frame) {
    if (frame.empty()) fail(Errc::Truncated, "empty frame");
    Reader rd(suite, frame);
    Tag tag = static_cast<Tag>(rd.u8());
    Message out = [&]() -> Message {
        switch (tag) {
            case Tag::LoginRequest: {
                // type invariant: both points on-curve and non-identity
                PointG1 did = rd.point_nonzero();
                PointG1 r = rd.point_nonzero();
                return LoginRequest{std::move(did), std::move(r)};
            }
            case Tag::ServerChallenge: {
                PointG1 w = rd.point();
                PointG1 r = rd.point();
                Scalar auth = rd.scalar();
                return ServerChallenge{std::move(w), std::move(r), std::move(auth)};
            }
            case Tag::UserResponse: {
                PointG1 m = rd.point();
                PointG1 b = rd.point();
                return UserResponse{std::move(m), std::move(b)};
            }
            case Tag::PwRound1: {
                Bytes id = rd.var_string();
                MaskBlob aid = rd.blob();
                PointG1 z = rd.point();
                return PwRound1{std::move(id), std::move(aid), std::move(z)};
            }
            case Tag::PwRound2: return PwRound2{rd.scalar()};
            case Tag::PwRound3: {
                MaskBlob v2 = rd.blob();
                Scalar v3 = rd.scalar();
                return PwRound3{std::move(v2), std::move(v3)};
            }
            case Tag::PwRound4: {
                MaskBlob v4 = rd.blob();
                Scalar v5 = rd.scalar();
                return PwRound4{std::move(v4), std::move(v5)};
            }
            case Tag::LiLogin: {
                LiLogin v{rd.var_string(), rd.var_string(), rd.var_string(),
                          rd.var_string()};
                check_same_len({&v.p_ij, &v.cid, &v.m1, &v.m2});
                return v;
            }
            case Tag::LiChallenge: {
                LiChallenge v{rd.var_string(), rd.var_string()};
                check_same_len({&v.m3, &v.m4});
                return v;
            }
            case Tag::LiConfirm: {
                LiConfirm v{rd.var_string()};
                check_same_len({&v.m5});
                return v;
            }
            default:
                fail(Errc::UnknownTag, "unknown frame tag");
        }
    }();
    rd.finish();
    return out;
}

// ---- transcript ----

std::uint64_t Transcript::append(std::string from, std::string to, std::string type,
                                 Bytes payload) {
    std::uint64_t ts = next_ts_++;
    entries_.push_back(
        {ts, std::move(from), std::move(to), std::move(type), std::move(payload)});
    return ts;
}

void Transcript::append_entry(TranscriptEntry e) {
    next_ts_ = std::max(next_ts_, e.ts + 1);
    entries_.push_back(std::move(e));
}

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const auto& e : entries_) {
        json j{{"ts", e.ts},
               {"from", e.from},
               {"to", e.to},
               {"type", e.type},
               {"payload", to_hex(e.payload)}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

Transcript Transcript::from_jsonl(std::string_view text) {
    Transcript t;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            fail(Errc::Truncated, "malformed transcript line");
        try {
            t.append_entry({j.at("ts").get<std::uint64_t>(),
                            j.at("from").get<std::string>(),
                            j.at("to").get<std::string>(),
                            j.at("type").get<std::string>(),
                            from_hex(j.at("payload").get<std::string>())});
        } catch (const json::exception&) {
            fail(Errc::Truncated, "transcript line missing required field");
        }
    }
    return t;
}

void Transcript::save(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::StoreCorrupt, "cannot open transcript file for writing");
    out << to_jsonl();
}

Transcript Transcript::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(Errc::StoreCorrupt, "cannot open transcript file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_jsonl(buf.str());
}

}  // namespace msauth::wire
