#pragma once
// Versioned on-disk containers for long-term key material. One directory
// holds the registration centre's published parameters and master secret,
// one self-certified key file per server, and one smart-card file per user.
//
// Container layout (byte-exact):
//   "MAK1" | version u8 | kind u8 | backend u8 | body_len u32be | body
//   | sha256 over everything before the digest
// Fields inside a body are u16be-length-prefixed octet strings in a fixed
// order per kind. Any mismatch — magic, checksum, kind, backend, framing —
// refuses the load with StoreCorrupt; an unknown version refuses with
// VersionMismatch (no migration). Saving over an existing entry throws
// DuplicateEntry unless the caller explicitly overwrites (password change).

#include <filesystem>
#include <string>

#include "msauth/algebra.hpp"
#include "msauth/common.hpp"
#include "msauth/scpk.hpp"

namespace msauth::store {

class KeyStore {
public:
    // The directory is created on the first save. The suite supplies the
    // canonical encodings and the backend stamp checked on every load.
    KeyStore(std::filesystem::path root, const PairingSuite& suite);

    const std::filesystem::path& root() const noexcept { return root_; }

    bool has_params() const;
    bool has_rc() const;
    bool has_server(const std::string& sid) const;
    bool has_card(const std::string& user_id) const;

    void save_params(const scpk::PublicParams& p) const;
    scpk::PublicParams load_params() const;

    void save_rc_secret(const Scalar& s_rc) const;
    Scalar load_rc_secret() const;

    void save_server(const scpk::ServerKey& key) const;
    scpk::ServerKey load_server(const std::string& sid) const;

    void save_card(const std::string& user_id, const scpk::SmartCard& card,
                   bool overwrite = false) const;
    scpk::SmartCard load_card(const std::string& user_id) const;

    // On-disk locations (identities are percent-encoded into file names).
    std::filesystem::path params_path() const;
    std::filesystem::path rc_path() const;
    std::filesystem::path server_path(const std::string& sid) const;
    std::filesystem::path card_path(const std::string& user_id) const;

private:
    std::filesystem::path root_;
    const PairingSuite* suite_;
};

}  // namespace msauth::store
