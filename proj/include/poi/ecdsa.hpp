#pragma once

#include <array>
#include <cstdint>

#include "poi/common.hpp"
#include "poi/sha256.hpp"

// Portable secp256k1 ECDSA with RFC 6979 deterministic nonces and low-s
// normalization. Signing the same (key, message) pair yields identical
// bytes on every platform, which the simulator's reproducibility tests
// rely on. Not constant-time; this is a protocol testbed, not a wallet.

namespace poi::ecdsa {

/// 256-bit unsigned integer, four 64-bit limbs, little-endian limb order.
struct U256 {
    std::array<uint64_t, 4> v{};

    bool operator==(const U256& o) const { return v == o.v; }
    bool operator!=(const U256& o) const { return v != o.v; }

    bool is_zero() const { return v[0] == 0 && v[1] == 0 && v[2] == 0 && v[3] == 0; }
    bool is_odd() const { return v[0] & 1; }

    static U256 from_u64(uint64_t x) {
        U256 r;
        r.v[0] = x;
        return r;
    }

    static U256 from_be_bytes(const uint8_t* b) {
        U256 r;
        for (int i = 0; i < 4; i++) r.v[3 - i] = read_u64_be(b + 8 * i);
        return r;
    }

    void to_be_bytes(uint8_t* out) const {
        for (int i = 0; i < 4; i++) {
            uint64_t limb = v[3 - i];
            for (int j = 0; j < 8; j++) out[8 * i + j] = static_cast<uint8_t>(limb >> (56 - 8 * j));
        }
    }

    Bytes to_be_bytes() const {
        Bytes b(32);
        to_be_bytes(b.data());
        return b;
    }
};

inline int cmp(const U256& a, const U256& b) {
    for (int i = 3; i >= 0; i--) {
        if (a.v[i] < b.v[i]) return -1;
        if (a.v[i] > b.v[i]) return 1;
    }
    return 0;
}

/// a + b, returns carry out.
inline uint64_t add_with_carry(U256& a, const U256& b) {
    unsigned __int128 carry = 0;
    for (int i = 0; i < 4; i++) {
        unsigned __int128 s = (unsigned __int128)a.v[i] + b.v[i] + carry;
        a.v[i] = static_cast<uint64_t>(s);
        carry = s >> 64;
    }
    return static_cast<uint64_t>(carry);
}

/// a - b, returns borrow out (1 if b > a).
inline uint64_t sub_with_borrow(U256& a, const U256& b) {
    unsigned __int128 borrow = 0;
    for (int i = 0; i < 4; i++) {
        unsigned __int128 d = (unsigned __int128)a.v[i] - b.v[i] - borrow;
        a.v[i] = static_cast<uint64_t>(d);
        borrow = (d >> 64) & 1;
    }
    return static_cast<uint64_t>(borrow);
}

inline U256 shr1(const U256& a) {
    U256 r;
    for (int i = 0; i < 4; i++) {
        r.v[i] = a.v[i] >> 1;
        if (i < 3) r.v[i] |= a.v[i + 1] << 63;
    }
    return r;
}

inline bool bit(const U256& a, int i) { return (a.v[i / 64] >> (i % 64)) & 1; }

/// Full 256x256 -> 512-bit product, 8 little-endian limbs.
inline std::array<uint64_t, 8> mul_wide(const U256& a, const U256& b) {
    std::array<uint64_t, 8> r{};
    for (int i = 0; i < 4; i++) {
        unsigned __int128 carry = 0;
        for (int j = 0; j < 4; j++) {
            unsigned __int128 cur = (unsigned __int128)a.v[i] * b.v[j] + r[i + j] + carry;
            r[i + j] = static_cast<uint64_t>(cur);
            carry = cur >> 64;
        }
        r[i + 4] = static_cast<uint64_t>(carry);
    }
    return r;
}

/// Modulus of the form 2^256 - c with c given as little-endian limbs.
/// Reduction folds the high half down via 2^256 ≡ c (mod m).
struct Modulus {
    U256 m;                       // the modulus
    std::array<uint64_t, 3> c{};  // 2^256 - m, at most 3 limbs
    int c_limbs = 1;

    U256 reduce_wide(std::array<uint64_t, 8> x) const {
        // Repeatedly replace x_hi * 2^256 + x_lo with x_hi * c + x_lo.
        bool high_nonzero = true;
        while (high_nonzero) {
            uint64_t hi[4];
            for (int i = 0; i < 4; i++) {
                hi[i] = x[4 + i];
                x[4 + i] = 0;
            }
            high_nonzero = false;
            // x += hi * c
            for (int i = 0; i < 4; i++) {
                if (hi[i] == 0) continue;
                unsigned __int128 carry = 0;
                for (int j = 0; j < c_limbs; j++) {
                    int k = i + j;
                    unsigned __int128 cur = (unsigned __int128)hi[i] * c[j] + x[k] + carry;
                    x[k] = static_cast<uint64_t>(cur);
                    carry = cur >> 64;
                }
                int k = i + c_limbs;
                while (carry != 0 && k < 8) {
                    unsigned __int128 cur = (unsigned __int128)x[k] + carry;
                    x[k] = static_cast<uint64_t>(cur);
                    carry = cur >> 64;
                    k++;
                }
            }
            for (int i = 4; i < 8; i++)
                if (x[i] != 0) high_nonzero = true;
        }
        U256 r;
        for (int i = 0; i < 4; i++) r.v[i] = x[i];
        while (cmp(r, m) >= 0) sub_with_borrow(r, m);
        return r;
    }

    U256 add(const U256& a, const U256& b) const {
        U256 r = a;
        uint64_t carry = add_with_carry(r, b);
        if (carry || cmp(r, m) >= 0) sub_with_borrow(r, m);
        return r;
    }

    U256 sub(const U256& a, const U256& b) const {
        U256 r = a;
        if (sub_with_borrow(r, b)) add_with_carry(r, m);
        return r;
    }

    U256 mul(const U256& a, const U256& b) const { return reduce_wide(mul_wide(a, b)); }
    U256 sqr(const U256& a) const { return mul(a, a); }

    U256 pow(const U256& a, const U256& e) const {
        U256 result = U256::from_u64(1);
        U256 base = a;
        for (int i = 0; i < 256; i++) {
            if (bit(e, i)) result = mul(result, base);
            base = sqr(base);
        }
        return result;
    }

    /// Fermat inverse; modulus must be prime and a nonzero.
    U256 inv(const U256& a) const {
        U256 e = m;
        U256 two = U256::from_u64(2);
        sub_with_borrow(e, two);
        return pow(a, e);
    }

    U256 reduce(const U256& a) const {
        U256 r = a;
        while (cmp(r, m) >= 0) sub_with_borrow(r, m);
        return r;
    }
};

// secp256k1 parameters.
inline const Modulus& field_p() {
    static const Modulus P = [] {
        Modulus mod;
        mod.m.v = {0xFFFFFFFEFFFFFC2FULL, 0xFFFFFFFFFFFFFFFFULL, 0xFFFFFFFFFFFFFFFFULL,
                   0xFFFFFFFFFFFFFFFFULL};
        mod.c = {0x00000001000003D1ULL, 0, 0};
        mod.c_limbs = 1;
        return mod;
    }();
    return P;
}

inline const Modulus& order_n() {
    static const Modulus N = [] {
        Modulus mod;
        mod.m.v = {0xBFD25E8CD0364141ULL, 0xBAAEDCE6AF48A03BULL, 0xFFFFFFFFFFFFFFFEULL,
                   0xFFFFFFFFFFFFFFFFULL};
        mod.c = {0x402DA1732FC9BEBFULL, 0x4551231950B75FC4ULL, 0x1ULL};
        mod.c_limbs = 3;
        return mod;
    }();
    return N;
}

inline const U256& gen_x() {
    static const U256 GX = {{0x59F2815B16F81798ULL, 0x029BFCDB2DCE28D9ULL, 0x55A06295CE870B07ULL,
                             0x79BE667EF9DCBBACULL}};
    return GX;
}

inline const U256& gen_y() {
    static const U256 GY = {{0x9C47D08FFB10D4B8ULL, 0xFD17B448A6855419ULL, 0x5DA4FBFC0E1108A8ULL,
                             0x483ADA7726A3C465ULL}};
    return GY;
}

/// Curve point in Jacobian coordinates; z == 0 encodes infinity.
struct Point {
    U256 x, y, z;

    bool is_infinity() const { return z.is_zero(); }

    static Point infinity() { return Point{}; }

    static Point from_affine(const U256& x, const U256& y) {
        return Point{x, y, U256::from_u64(1)};
    }
};

inline Point generator() { return Point::from_affine(gen_x(), gen_y()); }

inline Point point_double(const Point& pt) {
    const Modulus& F = field_p();
    if (pt.is_infinity() || pt.y.is_zero()) return Point::infinity();
    U256 ysq = F.sqr(pt.y);
    U256 s = F.mul(pt.x, ysq);
    s = F.add(s, s);
    s = F.add(s, s);  // 4*x*y^2
    U256 xsq = F.sqr(pt.x);
    U256 m = F.add(F.add(xsq, xsq), xsq);  // 3*x^2 (a = 0)
    U256 x3 = F.sub(F.sqr(m), F.add(s, s));
    U256 ys4 = F.sqr(ysq);  // y^4
    U256 ys8 = F.add(ys4, ys4);
    ys8 = F.add(ys8, ys8);
    ys8 = F.add(ys8, ys8);  // 8*y^4
    U256 y3 = F.sub(F.mul(m, F.sub(s, x3)), ys8);
    U256 z3 = F.mul(F.add(pt.y, pt.y), pt.z);
    return Point{x3, y3, z3};
}

inline Point point_add(const Point& a, const Point& b) {
    const Modulus& F = field_p();
    if (a.is_infinity()) return b;
    if (b.is_infinity()) return a;
    U256 z1sq = F.sqr(a.z);
    U256 z2sq = F.sqr(b.z);
    U256 u1 = F.mul(a.x, z2sq);
    U256 u2 = F.mul(b.x, z1sq);
    U256 s1 = F.mul(a.y, F.mul(z2sq, b.z));
    U256 s2 = F.mul(b.y, F.mul(z1sq, a.z));
    if (u1 == u2) {
        if (s1 != s2) return Point::infinity();
        return point_double(a);
    }
    U256 h = F.sub(u2, u1);
    U256 r = F.sub(s2, s1);
    U256 hsq = F.sqr(h);
    U256 hcu = F.mul(hsq, h);
    U256 u1hsq = F.mul(u1, hsq);
    U256 x3 = F.sub(F.sub(F.sqr(r), hcu), F.add(u1hsq, u1hsq));
    U256 y3 = F.sub(F.mul(r, F.sub(u1hsq, x3)), F.mul(s1, hcu));
    U256 z3 = F.mul(F.mul(a.z, b.z), h);
    return Point{x3, y3, z3};
}

inline Point scalar_mul(const Point& p, const U256& k) {
    Point r = Point::infinity();
    for (int i = 255; i >= 0; i--) {
        r = point_double(r);
        if (bit(k, i)) r = point_add(r, p);
    }
    return r;
}

/// u1*G + u2*Q in one pass (Shamir's trick); the verify hot path.
inline Point dual_mul(const U256& u1, const Point& g, const U256& u2, const Point& q) {
    Point sum = point_add(g, q);
    Point r = Point::infinity();
    for (int i = 255; i >= 0; i--) {
        r = point_double(r);
        bool b1 = bit(u1, i), b2 = bit(u2, i);
        if (b1 && b2)
            r = point_add(r, sum);
        else if (b1)
            r = point_add(r, g);
        else if (b2)
            r = point_add(r, q);
    }
    return r;
}

struct Affine {
    U256 x, y;
    bool infinity = false;
};

inline Affine to_affine(const Point& p) {
    if (p.is_infinity()) return Affine{{}, {}, true};
    const Modulus& F = field_p();
    U256 zi = F.inv(p.z);
    U256 zi2 = F.sqr(zi);
    return Affine{F.mul(p.x, zi2), F.mul(p.y, F.mul(zi2, zi)), false};
}

inline bool on_curve(const U256& x, const U256& y) {
    const Modulus& F = field_p();
    U256 lhs = F.sqr(y);
    U256 rhs = F.add(F.mul(F.sqr(x), x), U256::from_u64(7));
    return lhs == rhs;
}

/// 33-byte compressed SEC1 encoding: 0x02/0x03 parity prefix + big-endian x.
inline Bytes compress(const Affine& a) {
    Bytes out(33);
    out[0] = a.y.is_odd() ? 0x03 : 0x02;
    a.x.to_be_bytes(out.data() + 1);
    return out;
}

/// Decompress; returns infinity-flagged Affine on any malformed input.
inline Affine decompress(const Bytes& pub) {
    Affine bad{{}, {}, true};
    if (pub.size() != 33 || (pub[0] != 0x02 && pub[0] != 0x03)) return bad;
    const Modulus& F = field_p();
    U256 x = U256::from_be_bytes(pub.data() + 1);
    if (cmp(x, F.m) >= 0) return bad;
    U256 rhs = F.add(F.mul(F.sqr(x), x), U256::from_u64(7));
    // sqrt via a^((p+1)/4), valid since p = 3 (mod 4)
    U256 e = F.m;
    add_with_carry(e, U256::from_u64(1));
    e = shr1(shr1(e));
    U256 y = F.pow(rhs, e);
    if (F.sqr(y) != rhs) return bad;  // x^3+7 is a non-residue
    bool want_odd = pub[0] == 0x03;
    if (y.is_odd() != want_odd) y = F.sub(U256{}, y);
    return Affine{x, y, false};
}

/// RFC 6979 HMAC-SHA-256 nonce stream for order q and private key x.
class Rfc6979 {
public:
    Rfc6979(const U256& x, const Hash32& h1, const Modulus& q) : q_(q) {
        std::fill(v_.begin(), v_.end(), 0x01);
        std::fill(k_.begin(), k_.end(), 0x00);
        Bytes x_oct = x.to_be_bytes();
        U256 h = q.reduce(U256::from_be_bytes(h1.bytes.data()));
        Bytes h_oct = h.to_be_bytes();  // bits2octets(h1)

        Bytes msg(v_.begin(), v_.end());
        msg.push_back(0x00);
        msg.insert(msg.end(), x_oct.begin(), x_oct.end());
        msg.insert(msg.end(), h_oct.begin(), h_oct.end());
        step(msg);

        msg.assign(v_.begin(), v_.end());
        msg.push_back(0x01);
        msg.insert(msg.end(), x_oct.begin(), x_oct.end());
        msg.insert(msg.end(), h_oct.begin(), h_oct.end());
        step(msg);
    }

    U256 next() {
        for (;;) {
            Hash32 vh = hmac_sha256(k_.data(), 32, v_.data(), 32);
            std::copy(vh.bytes.begin(), vh.bytes.end(), v_.begin());
            U256 k = U256::from_be_bytes(v_.data());
            if (!k.is_zero() && cmp(k, q_.m) < 0) return k;
            Bytes msg(v_.begin(), v_.end());
            msg.push_back(0x00);
            Hash32 kh = hmac_sha256(k_.data(), 32, msg.data(), msg.size());
            std::copy(kh.bytes.begin(), kh.bytes.end(), k_.begin());
            vh = hmac_sha256(k_.data(), 32, v_.data(), 32);
            std::copy(vh.bytes.begin(), vh.bytes.end(), v_.begin());
        }
    }

private:
    void step(const Bytes& msg) {
        Hash32 kh = hmac_sha256(k_.data(), 32, msg.data(), msg.size());
        std::copy(kh.bytes.begin(), kh.bytes.end(), k_.begin());
        Hash32 vh = hmac_sha256(k_.data(), 32, v_.data(), 32);
        std::copy(vh.bytes.begin(), vh.bytes.end(), v_.begin());
    }

    const Modulus& q_;
    std::array<uint8_t, 32> v_{};
    std::array<uint8_t, 32> k_{};
};

/// 64-byte compact signature r||s, both big-endian, s in the low half.
inline Bytes sign_digest(const U256& priv, const Hash32& digest) {
    const Modulus& N = order_n();
    U256 z = N.reduce(U256::from_be_bytes(digest.bytes.data()));
    Rfc6979 gen(priv, digest, N);
    for (;;) {
        U256 k = gen.next();
        Affine rp = to_affine(scalar_mul(generator(), k));
        if (rp.infinity) continue;
        U256 r = N.reduce(rp.x);
        if (r.is_zero()) continue;
        U256 s = N.mul(N.inv(k), N.add(z, N.mul(r, priv)));
        if (s.is_zero()) continue;
        U256 half = shr1(N.m);
        if (cmp(s, half) > 0) s = N.sub(U256{}, s);  // low-s normalization
        Bytes sig(64);
        r.to_be_bytes(sig.data());
        s.to_be_bytes(sig.data() + 32);
        return sig;
    }
}

/// True iff sig is a valid low-s signature over the digest by the key.
/// Malformed inputs of any kind return false, never throw.
inline bool verify_digest(const Bytes& pub33, const Hash32& digest, const Bytes& sig64) {
    if (sig64.size() != 64) return false;
    Affine q = decompress(pub33);
    if (q.infinity || !on_curve(q.x, q.y)) return false;
    const Modulus& N = order_n();
    U256 r = U256::from_be_bytes(sig64.data());
    U256 s = U256::from_be_bytes(sig64.data() + 32);
    if (r.is_zero() || s.is_zero()) return false;
    if (cmp(r, N.m) >= 0 || cmp(s, N.m) >= 0) return false;
    if (cmp(s, shr1(N.m)) > 0) return false;  // reject malleable high-s form
    U256 z = N.reduce(U256::from_be_bytes(digest.bytes.data()));
    U256 w = N.inv(s);
    U256 u1 = N.mul(z, w);
    U256 u2 = N.mul(r, w);
    Point rp;
    if (u1.is_zero())
        rp = scalar_mul(Point::from_affine(q.x, q.y), u2);
    else if (u2.is_zero())
        rp = scalar_mul(generator(), u1);
    else
        rp = dual_mul(u1, generator(), u2, Point::from_affine(q.x, q.y));
    Affine ra = to_affine(rp);
    if (ra.infinity) return false;
    return N.reduce(ra.x) == r;
}

inline Bytes derive_public_key(const U256& priv) {
    return compress(to_affine(scalar_mul(generator(), priv)));
}

}  // namespace poi::ecdsa
