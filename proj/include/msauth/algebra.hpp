#pragma once

#include <gmpxx.h>

#include <atomic>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <variant>
#include <vector>

#include "msauth/common.hpp"

namespace msauth {

// Two interchangeable group backends. `transparent` models the source group
// as additive residues mod a small prime q with the generator P <-> 1, so a
// point's encoding IS its discrete log — a brute-force oracle for tests.
// `production` is a supersingular curve y^2 = x^3 + x over a 512-bit prime
// field with a symmetric Tate pairing. Protocol code is backend-agnostic.
enum class BackendId : std::uint8_t { transparent = 1, production = 2 };

const char* backend_name(BackendId id) noexcept;
BackendId backend_from_name(std::string_view name);  // throws Error(ScriptError)

// Element of Z_q (the scalar field). Plain value type; all arithmetic goes
// through the owning PairingSuite, which knows q.
struct Scalar {
    mpz_class v;
    bool operator==(const Scalar&) const = default;
};

// Element of the additive source group G1. Transparent backend: x holds the
// residue (the discrete log), y unused. Production backend: affine
// coordinates. Identity is normalized to {0, 0, inf=true} on both.
struct PointG1 {
    mpz_class x{};
    mpz_class y{};
    bool inf = false;
    bool operator==(const PointG1&) const = default;
};

// Element of the multiplicative target group GT. Transparent backend: `a`
// holds the exponent of the canonical generator e(P,P), b unused.
// Production backend: an element of F_p^2 = F_p[i]/(i^2+1), a + b*i,
// canonical after final exponentiation.
struct GtElement {
    mpz_class a{};
    mpz_class b{};
    bool operator==(const GtElement&) const = default;
};

// Result of masking XOR over point encodings. Deliberately not a point: the
// XOR of two encodings is generally not on the curve.
struct MaskBlob {
    Bytes bytes;
    bool operator==(const MaskBlob&) const = default;
};

// Anything hashable. Fields are framed with a one-byte length prefix each,
// so ("ab","c") and ("a","bc") hash differently.
using HashField = std::variant<Bytes, std::string, PointG1, Scalar, MaskBlob>;
using MaskOperand = std::variant<PointG1, MaskBlob>;

struct OpSnapshot {
    std::uint64_t pairing = 0;
    std::uint64_t g1_mul = 0;
    std::uint64_t g1_add = 0;
    std::uint64_t map_to_point = 0;
    std::uint64_t hash = 0;
    bool operator==(const OpSnapshot&) const = default;
    OpSnapshot operator-(const OpSnapshot& rhs) const {
        return {pairing - rhs.pairing, g1_mul - rhs.g1_mul, g1_add - rhs.g1_add,
                map_to_point - rhs.map_to_point, hash - rhs.hash};
    }
};

struct SuiteOptions {
    std::uint64_t seed = 1;
    // Group order for the transparent backend. 101 is the worked-fixture
    // modulus; 11 is used for exhaustive soundness enumeration; 2^61 - 1
    // for statistical runs where 1/q accident rates must be negligible.
    mpz_class transparent_q = 101;
};

// The algebra backend handed to every protocol object. Operation counters
// tick ONLY in the public methods below, never in internal arithmetic
// (decode validation, cofactor clearing), so they measure protocol cost
// alone. Immutable after construction except counters, the seedable RNG,
// and the test-only fixture oracle; those are internally synchronized.
class PairingSuite {
public:
    static std::unique_ptr<PairingSuite> make(BackendId id, SuiteOptions opts = {});
    ~PairingSuite();
    PairingSuite(const PairingSuite&) = delete;
    PairingSuite& operator=(const PairingSuite&) = delete;

    BackendId backend_id() const noexcept { return id_; }
    const mpz_class& order() const noexcept { return q_; }
    const PointG1& generator() const noexcept { return gen_; }
    std::size_t point_size() const noexcept { return psize_; }
    std::size_t scalar_size() const noexcept { return ssize_; }

    // ---- counted operations (the benchmark's data source) ----
    PointG1 scalar_mul(const Scalar& k, const PointG1& X) const;
    PointG1 point_add(const PointG1& X, const PointG1& Y) const;
    GtElement pairing(const PointG1& X, const PointG1& Y) const;
    PointG1 map_to_point(const Bytes& msg) const;
    PointG1 map_to_point(std::string_view msg) const;
    Scalar hash(std::initializer_list<HashField> fields) const;
    Scalar hash(const std::vector<HashField>& fields) const;

    // ---- masking (uncounted; XOR of canonical encodings) ----
    MaskBlob mask_xor(const MaskOperand& a, const MaskOperand& b) const;
    // XOR then decode; decode failure -> Error(MaskCorrupt) (wrong key or
    // tampering). The decoded point is validated on-curve and in-subgroup.
    PointG1 unmask_to_point(const MaskBlob& blob, const PointG1& key) const;

    // ---- randomness (seedable; deterministic under a fixed seed) ----
    Scalar random_scalar() const;  // uniform in [1, q-1]
    void reseed(std::uint64_t seed) const;
    // Test hook: pre-load exact scalars; random_scalar() pops them first.
    void script_scalars(std::initializer_list<unsigned long> vals) const;
    void script_scalar(const mpz_class& v) const;

    // ---- canonical encodings (byte-exact contract in docs/encoding.md) ----
    Bytes encode_point(const PointG1& X) const;
    PointG1 decode_point(const Bytes& b) const;  // throws Error(PointInvalid)
    Bytes encode_scalar(const Scalar& k) const;
    Scalar decode_scalar(const Bytes& b) const;
    Bytes frame_fields(const std::vector<HashField>& fields) const;

    // ---- uncounted helpers ----
    Scalar sc(unsigned long v) const;
    Scalar sc_from_mpz(const mpz_class& v) const;        // reduces mod q
    Scalar sc_from_bytes(const Bytes& b) const;          // big-endian, mod q
    Scalar sc_add(const Scalar& a, const Scalar& b) const;
    Scalar sc_sub(const Scalar& a, const Scalar& b) const;
    Scalar sc_mul(const Scalar& a, const Scalar& b) const;
    PointG1 identity() const { return PointG1{0, 0, true}; }
    static bool is_identity(const PointG1& X) noexcept { return X.inf; }
    GtElement gt_identity() const;
    bool gt_is_identity(const GtElement& g) const;
    GtElement gt_pow(const GtElement& g, const mpz_class& e) const;  // test helper

    OpSnapshot counters() const;

    // ---- fixture oracle (transparent backend only; test instrumentation) ----
    // When enabled, hash() first consults a lookup table keyed on the framed
    // input and falls back (if requested) to byte-sum mod q; map_to_point()
    // consults its own table of discrete logs. Production backend refuses.
    void oracle_enable(bool bytesum_fallback = true) const;
    void oracle_install_hash(std::initializer_list<HashField> fields,
                             unsigned long value) const;
    void oracle_install_map(std::string_view msg, unsigned long dlog) const;

    // Raw (uncounted) scalar multiplication; used by tests and internal
    // validation, never by protocol code.
    PointG1 mul_raw(const mpz_class& k, const PointG1& X) const;

    struct Backend;  // opaque; defined per backend in the implementation

private:
    PairingSuite(BackendId id, SuiteOptions opts);

    Scalar hash_framed(const Bytes& framed) const;
    mpz_class draw_uniform() const;

    std::unique_ptr<Backend> be_;
    BackendId id_;
    mpz_class q_;
    PointG1 gen_;
    std::size_t psize_ = 0;
    std::size_t ssize_ = 0;

    mutable std::atomic<std::uint64_t> c_pairing_{0}, c_mul_{0}, c_add_{0},
        c_map_{0}, c_hash_{0};

    mutable std::mutex rng_mtx_;
    mutable std::mt19937_64 rng_;
    mutable std::deque<mpz_class> scripted_;

    mutable std::mutex oracle_mtx_;
    mutable bool oracle_on_ = false;
    mutable bool oracle_bytesum_ = true;
    mutable std::map<Bytes, mpz_class> oracle_hash_;
    mutable std::map<Bytes, mpz_class> oracle_map_;
};

// Fixed-width big-endian conversions shared by encodings and the keystore.
Bytes mpz_to_fixed(const mpz_class& v, std::size_t width);
mpz_class mpz_from_bytes(const std::uint8_t* data, std::size_t n);
mpz_class mpz_from_bytes(const Bytes& b);

}  // namespace msauth
