#pragma once

// Dense polynomials over an exact coefficient type, univariate resultants,
// and complete rational root finding for integer-scaled models.
//
// Rational roots are found modularly: reduce the squarefree part mod a good
// prime, read the roots off gcd(x^p - x, f), Hensel-lift each one and apply
// rational reconstruction against the divisor bounds (den | lc, num | a0).
// This stays fast when the coefficients are hundreds of digits, where a
// divisor-enumeration sieve would be hopeless.

#include "quadrank/exactnum.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <random>
#include <utility>

namespace quadrank {

inline bool qr_is_zero(const Rat& r) { return r == 0; }
inline bool qr_is_zero(const Int& r) { return r == 0; }
inline Rat qr_zero_like(const Rat&) { return Rat(0); }
inline Int qr_zero_like(const Int&) { return Int(0); }

template <class T>
struct Poly {
  std::vector<T> c;  // c[i] is the coefficient of x^i; no trailing zeros

  Poly() = default;
  explicit Poly(std::vector<T> coeffs) : c(std::move(coeffs)) { trim(); }

  void trim() {
    while (!c.empty() && qr_is_zero(c.back())) c.pop_back();
  }
  bool is_zero() const { return c.empty(); }
  int degree() const { return int(c.size()) - 1; }  // -1 for the zero polynomial
  const T& leading() const { return c.back(); }

  T eval(const T& x) const {
    if (c.empty()) throw domain_error("eval of zero polynomial needs a zero witness");
    T acc = c.back();
    for (int i = int(c.size()) - 2; i >= 0; --i) acc = acc * x + c[i];
    return acc;
  }

  Poly derivative() const {
    if (c.size() <= 1) return Poly();
    std::vector<T> d;
    d.reserve(c.size() - 1);
    for (size_t i = 1; i < c.size(); ++i) {
      T term = c[i];
      for (size_t k = 1; k < i; ++k) term = term + c[i];
      d.push_back(term);
    }
    return Poly(std::move(d));
  }
};

template <class T>
bool qr_is_zero(const Poly<T>& p) {
  return p.is_zero();
}
template <class T>
Poly<T> qr_zero_like(const Poly<T>&) {
  return Poly<T>();
}

template <class T>
Poly<T> operator+(const Poly<T>& a, const Poly<T>& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  std::vector<T> r(std::max(a.c.size(), b.c.size()), qr_zero_like(a.c[0]));
  for (size_t i = 0; i < a.c.size(); ++i) r[i] = r[i] + a.c[i];
  for (size_t i = 0; i < b.c.size(); ++i) r[i] = r[i] + b.c[i];
  return Poly<T>(std::move(r));
}

template <class T>
Poly<T> operator-(const Poly<T>& a, const Poly<T>& b) {
  if (b.is_zero()) return a;
  std::vector<T> r(std::max(a.c.size(), b.c.size()), qr_zero_like(b.c[0]));
  for (size_t i = 0; i < a.c.size(); ++i) r[i] = r[i] + a.c[i];
  for (size_t i = 0; i < b.c.size(); ++i) r[i] = r[i] - b.c[i];
  return Poly<T>(std::move(r));
}

template <class T>
Poly<T> operator*(const Poly<T>& a, const Poly<T>& b) {
  if (a.is_zero() || b.is_zero()) return Poly<T>();
  std::vector<T> r(a.c.size() + b.c.size() - 1, qr_zero_like(a.c[0]) * qr_zero_like(b.c[0]));
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) r[i + j] = r[i + j] + a.c[i] * b.c[j];
  return Poly<T>(std::move(r));
}

template <class T>
Poly<T> operator*(const Poly<T>& a, const T& s) {
  if (a.is_zero() || qr_is_zero(s)) return Poly<T>();
  std::vector<T> r = a.c;
  for (auto& x : r) x = x * s;
  return Poly<T>(std::move(r));
}

template <class T>
Poly<T> operator-(const Poly<T>& a) {
  std::vector<T> r = a.c;
  for (auto& x : r) x = qr_zero_like(x) - x;
  return Poly<T>(std::move(r));
}

template <class T>
Poly<T> poly_shift(const Poly<T>& a, int k) {  // multiply by x^k
  if (a.is_zero()) return a;
  std::vector<T> r(a.c.size() + k, qr_zero_like(a.c[0]));
  for (size_t i = 0; i < a.c.size(); ++i) r[i + k] = a.c[i];
  return Poly<T>(std::move(r));
}

// Division over a field coefficient type. Returns {quotient, remainder}.
template <class T>
std::pair<Poly<T>, Poly<T>> poly_divmod(const Poly<T>& a, const Poly<T>& b) {
  if (b.is_zero()) throw domain_error("polynomial division by zero");
  Poly<T> q, r = a;
  if (a.degree() < b.degree()) return {q, r};
  std::vector<T> qc(a.degree() - b.degree() + 1, qr_zero_like(b.c[0]));
  while (!r.is_zero() && r.degree() >= b.degree()) {
    T f = r.leading() / b.leading();
    int k = r.degree() - b.degree();
    qc[k] = f;
    // r -= f * x^k * b
    for (int i = 0; i <= b.degree(); ++i) r.c[i + k] = r.c[i + k] - f * b.c[i];
    r.trim();
  }
  return {Poly<T>(std::move(qc)), r};
}

template <class T>
Poly<T> poly_gcd(Poly<T> a, Poly<T> b) {
  while (!b.is_zero()) {
    auto [q, r] = poly_divmod(a, b);
    a = b;
    b = r;
  }
  if (!a.is_zero()) {
    T inv_lead = a.leading();
    for (auto& x : a.c) x = x / inv_lead;  // monic
  }
  return a;
}

// Extended Euclid over a field: returns (g, s, t) with s*a + t*b = g, g monic
// (or zero when both inputs are zero).
template <class T>
struct PolyExtGcd {
  Poly<T> g, s, t;
};

template <class T>
PolyExtGcd<T> poly_ext_gcd(const Poly<T>& a, const Poly<T>& b) {
  T one;
  if (!a.is_zero()) one = a.leading() / a.leading();
  else if (!b.is_zero()) one = b.leading() / b.leading();
  else return {Poly<T>(), Poly<T>(), Poly<T>()};
  Poly<T> r0 = a, r1 = b;
  Poly<T> s0(std::vector<T>{one}), s1;
  Poly<T> t0, t1(std::vector<T>{one});
  while (!r1.is_zero()) {
    auto [q, r] = poly_divmod(r0, r1);
    Poly<T> s2 = s0 - q * s1, t2 = t0 - q * t1;
    r0 = r1; r1 = r;
    s0 = s1; s1 = s2;
    t0 = t1; t1 = t2;
  }
  T lead = r0.leading();
  std::vector<T> gc = r0.c, sc = s0.c, tc = t0.c;
  for (auto& x : gc) x = x / lead;
  for (auto& x : sc) x = x / lead;
  for (auto& x : tc) x = x / lead;
  return {Poly<T>(std::move(gc)), Poly<T>(std::move(sc)), Poly<T>(std::move(tc))};
}

// Resultant over a field by the Euclidean remainder chain.
template <class T>
T poly_resultant(Poly<T> a, Poly<T> b, const T& one) {
  if (a.is_zero() || b.is_zero()) return qr_zero_like(one);
  T res = one;
  bool neg = false;
  while (b.degree() > 0) {
    auto [q, r] = poly_divmod(a, b);
    int da = a.degree(), db = b.degree(), dr = r.is_zero() ? -1 : r.degree();
    if (r.is_zero()) return qr_zero_like(one);
    // res *= lc(b)^(da - dr); track the (-1)^(da*db) swap sign
    T lb = b.leading();
    for (int i = 0; i < da - dr; ++i) res = res * lb;
    if ((da & 1) && (db & 1)) neg = !neg;
    a = b;
    b = r;
  }
  // b is a nonzero constant
  T lb = b.c[0];
  for (int i = 0; i < a.degree(); ++i) res = res * lb;
  if (neg) res = qr_zero_like(one) - res;
  return res;
}

// ---- integer-polynomial utilities ------------------------------------------

inline Poly<Int> to_integer_poly(const Poly<Rat>& f, Int* scale = nullptr) {
  Int l = 1;
  for (auto& r : f.c) l = lcm(l, Int(r.get_den()));
  std::vector<Int> c;
  c.reserve(f.c.size());
  for (auto& r : f.c) c.push_back(Int(r.get_num()) * (l / r.get_den()));
  Int g = 0;
  for (auto& x : c) g = gcd(g, x);
  if (g > 1)
    for (auto& x : c) x /= g;
  if (scale) *scale = l;
  return Poly<Int>(std::move(c));
}

inline Poly<Rat> to_rat_poly(const Poly<Int>& f) {
  std::vector<Rat> c;
  c.reserve(f.c.size());
  for (auto& x : f.c) c.push_back(Rat(x));
  return Poly<Rat>(std::move(c));
}

// ---- arithmetic mod p (p < 2^62) -------------------------------------------

namespace modp_detail {

inline uint64_t mulmod(uint64_t a, uint64_t b, uint64_t p) {
  return uint64_t((__uint128_t)a * b % p);
}
inline uint64_t powmod(uint64_t a, uint64_t e, uint64_t p) {
  uint64_t r = 1 % p;
  a %= p;
  while (e) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
    e >>= 1;
  }
  return r;
}
inline uint64_t invmod(uint64_t a, uint64_t p) { return powmod(a % p, p - 2, p); }

using PolyP = std::vector<uint64_t>;  // c[i] coeff of x^i, no trailing zeros

inline void ptrim(PolyP& f) {
  while (!f.empty() && f.back() == 0) f.pop_back();
}
inline PolyP pmul(const PolyP& a, const PolyP& b, uint64_t p) {
  if (a.empty() || b.empty()) return {};
  PolyP r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i]) continue;
    for (size_t j = 0; j < b.size(); ++j)
      r[i + j] = (r[i + j] + (__uint128_t)a[i] * b[j]) % p;
  }
  ptrim(r);
  return r;
}
inline PolyP pmod(PolyP a, const PolyP& m, uint64_t p) {
  uint64_t inv = invmod(m.back(), p);
  while (a.size() >= m.size()) {
    uint64_t f = mulmod(a.back(), inv, p);
    size_t k = a.size() - m.size();
    for (size_t i = 0; i < m.size(); ++i)
      a[i + k] = (a[i + k] + p - mulmod(f, m[i], p)) % p;
    ptrim(a);
    if (a.size() < m.size()) break;
  }
  ptrim(a);
  return a;
}
inline PolyP pgcd(PolyP a, PolyP b, uint64_t p) {
  while (!b.empty()) {
    PolyP r = pmod(a, b, p);
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty() && a.back() != 1) {
    uint64_t inv = invmod(a.back(), p);
    for (auto& x : a) x = mulmod(x, inv, p);
  }
  return a;
}
inline PolyP ppowmod(PolyP base, Int e, const PolyP& m, uint64_t p) {
  PolyP r = {1};
  base = pmod(std::move(base), m, p);
  while (e > 0) {
    if (mpz_odd_p(e.get_mpz_t())) r = pmod(pmul(r, base, p), m, p);
    base = pmod(pmul(base, base, p), m, p);
    e >>= 1;
  }
  return r;
}

// square root of a quadratic residue mod an odd prime (Tonelli-Shanks)
inline uint64_t sqrt_mod_p(uint64_t a, uint64_t p) {
  a %= p;
  if (a == 0) return 0;
  if (p % 4 == 3) return powmod(a, (p + 1) / 4, p);
  uint64_t q = p - 1, s = 0;
  while ((q & 1) == 0) {
    q >>= 1;
    ++s;
  }
  uint64_t z = 2;
  while (powmod(z, (p - 1) / 2, p) != p - 1) ++z;
  uint64_t m = s, c = powmod(z, q, p), t = powmod(a, q, p), r = powmod(a, (q + 1) / 2, p);
  while (t != 1) {
    uint64_t i = 0, t2 = t;
    while (t2 != 1) {
      t2 = mulmod(t2, t2, p);
      ++i;
    }
    uint64_t b = c;
    for (uint64_t j = 0; j + i + 1 < m; ++j) b = mulmod(b, b, p);
    m = i;
    c = mulmod(b, b, p);
    t = mulmod(t, c, p);
    r = mulmod(r, b, p);
  }
  return r;
}

inline PolyP reduce_int_poly(const Poly<Int>& f, uint64_t p) {
  PolyP r(f.c.size());
  for (size_t i = 0; i < f.c.size(); ++i) {
    Int m = f.c[i] % Int((unsigned long)p);
    if (m < 0) m += (unsigned long)p;
    r[i] = m.get_ui();
  }
  ptrim(r);
  return r;
}

// All roots of f mod p (f squarefree mod p assumed), by x^p - x splitting.
inline std::vector<uint64_t> roots_mod_p(const PolyP& f, uint64_t p, std::mt19937_64& rng) {
  std::vector<uint64_t> out;
  if (f.empty()) return out;
  PolyP xp = ppowmod({0, 1}, Int((unsigned long)p), f, p);
  if (xp.size() > 1) xp[1] = (xp[1] + p - 1) % p;
  else {
    xp.resize(2, 0);
    xp[1] = p - 1;
  }
  ptrim(xp);
  PolyP g = pgcd(f, xp, p);
  // g = product of (x - r) over roots r; split recursively
  std::function<void(PolyP)> split = [&](PolyP h) {
    if (h.size() <= 1) return;
    if (h.size() == 2) {
      out.push_back(mulmod(p - h[0] % p, invmod(h[1], p), p));
      return;
    }
    while (true) {
      uint64_t a = rng() % p;
      // gcd((x+a)^((p-1)/2) - 1, h)
      PolyP t = ppowmod({a, 1}, Int((unsigned long)((p - 1) / 2)), h, p);
      if (t.empty()) t = {p - 1};
      else t[0] = (t[0] + p - 1) % p;
      ptrim(t);
      PolyP g1 = pgcd(h, t, p);
      if (g1.size() > 1 && g1.size() < h.size()) {
        PolyP q = h;  // q = h / g1
        // exact division mod p
        PolyP quot;
        {
          PolyP r = h;
          uint64_t inv = invmod(g1.back(), p);
          quot.assign(h.size() - g1.size() + 1, 0);
          for (int k = int(h.size() - g1.size()); k >= 0; --k) {
            if (r.size() < g1.size() + k) continue;
            uint64_t f2 = mulmod(r[g1.size() - 1 + k], inv, p);
            quot[k] = f2;
            for (size_t i = 0; i < g1.size(); ++i)
              r[i + k] = (r[i + k] + p - mulmod(f2, g1[i], p)) % p;
          }
          ptrim(quot);
        }
        split(g1);
        split(quot);
        return;
      }
    }
  };
  split(g);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace modp_detail

// Rational reconstruction: find n/d = a mod m with |n| <= N, 0 < d <= D.
inline bool rational_reconstruct(const Int& a, const Int& m, const Int& N, const Int& D, Rat* out) {
  Int r0 = m, r1 = a % m;
  if (r1 < 0) r1 += m;
  Int s0 = 0, s1 = 1;
  while (r1 > N) {
    Int q = r0 / r1;
    Int r2 = r0 - q * r1;
    Int s2 = s0 - q * s1;
    r0 = r1;
    r1 = r2;
    s0 = s1;
    s1 = s2;
  }
  if (s1 == 0 || abs(s1) > D) return false;
  if (gcd(r1, s1) != 1 && !(r1 == 0 && abs(s1) == 1)) {
    Int g = gcd(r1, abs(s1));
    if (g != 1) return false;
  }
  *out = make_rat(s1 < 0 ? Int(-r1) : r1, abs(s1));
  return true;
}

// Complete multiset of rational roots of f (nonzero f), with multiplicities.
inline std::vector<Rat> rational_roots(const Poly<Rat>& f0) {
  if (f0.is_zero()) throw domain_error("rational_roots: zero polynomial");
  std::vector<Rat> roots;
  Poly<Int> f = to_integer_poly(f0);
  if (f.degree() == 0) return roots;
  // strip zero roots
  size_t z = 0;
  while (z < f.c.size() && f.c[z] == 0) ++z;
  if (z > 0) {
    f.c.erase(f.c.begin(), f.c.begin() + z);
  }
  std::vector<Rat> candidates;
  if (f.degree() >= 1) {
    Poly<Int> fsf = f;  // squarefree unless every sampled prime disagrees
    Poly<Int> fder;
    {
      std::vector<Int> dc;
      for (size_t i = 1; i < fsf.c.size(); ++i) dc.push_back(fsf.c[i] * (unsigned long)i);
      fder = Poly<Int>(std::move(dc));
    }
    Int N = abs(fsf.c[0]);       // numerator divides the constant term
    Int D = abs(fsf.leading());  // denominator divides the leading coefficient
    // pick a prime keeping f squarefree with invertible lc; an exact gcd over Q
    // is a last resort (its coefficient growth is severe on large inputs)
    std::mt19937_64 rng(0x5eedULL);
    uint64_t p = 0;
    int attempts = 0;
    for (uint64_t cand = (1ull << 30) + 3; attempts < 40; cand += 2) {
      if (!is_probable_prime(Int((unsigned long)cand))) continue;
      ++attempts;
      if (mpz_divisible_ui_p(fsf.leading().get_mpz_t(), cand)) continue;
      auto fp = modp_detail::reduce_int_poly(fsf, cand);
      auto fpd = modp_detail::reduce_int_poly(fder, cand);
      if (modp_detail::pgcd(fp, fpd, cand).size() == 1) {
        p = cand;
        break;
      }
    }
    if (p == 0) {
      // genuinely repeated factors: recurse on the exact squarefree part
      Poly<Rat> fr = to_rat_poly(f);
      Poly<Rat> g = poly_gcd(fr, fr.derivative());
      if (g.degree() == 0) throw domain_error("rational_roots: no usable prime");
      auto rs = rational_roots(poly_divmod(fr, g).first);
      std::sort(rs.begin(), rs.end());
      rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
      candidates = rs;
    } else {
    auto fp = modp_detail::reduce_int_poly(fsf, p);
    auto mroots = modp_detail::roots_mod_p(fp, p, rng);
    // Hensel-lift each simple root to p^(2^j) > 2 N D, then reconstruct.
    Int target = 2 * N * D + 1;
    for (uint64_t r : mroots) {
      Int pk((unsigned long)p), x((unsigned long)r);
      const Poly<Int>& fsf_d = fder;
      auto eval_mod = [](const Poly<Int>& poly, const Int& x, const Int& m) {
        Int acc = 0;
        for (int i = poly.degree(); i >= 0; --i) acc = (acc * x + poly.c[i]) % m;
        if (acc < 0) acc += m;
        return acc;
      };
      while (pk < target) {
        Int pk2 = pk * pk;
        Int fv = eval_mod(fsf, x, pk2);
        Int dv = eval_mod(fsf_d, x, pk2);
        Int dinv;
        if (mpz_invert(dinv.get_mpz_t(), dv.get_mpz_t(), pk2.get_mpz_t()) == 0) break;
        x = (x - fv * dinv) % pk2;
        if (x < 0) x += pk2;
        pk = pk2;
      }
      Rat cand;
      if (pk >= target && rational_reconstruct(x, pk, N, D, &cand)) candidates.push_back(cand);
    }
    }  // good-prime path
  }
  // verify and count multiplicities by repeated exact division
  Poly<Rat> rem = to_rat_poly(f);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (auto& r : candidates) {
    while (true) {
      if (rem.degree() < 1) break;
      if (!(rem.eval(r) == 0)) break;
      Poly<Rat> lin(std::vector<Rat>{Rat(-r), Rat(1)});
      rem = poly_divmod(rem, lin).first;
      roots.push_back(r);
    }
  }
  for (size_t i = 0; i < z; ++i) roots.push_back(Rat(0));
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace quadrank
