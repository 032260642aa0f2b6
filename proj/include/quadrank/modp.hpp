#pragma once

// Reduction of rational curves modulo primes, point counting (naive character
// sums below 2^10, baby-step/giant-step above) and deterministic a_p tables
// with a line-oriented cache format.

#include "quadrank/curve.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

namespace quadrank {

// ---- prime field element ----------------------------------------------------
struct Fp {
  uint64_t v = 0;
  uint64_t p = 0;  // 0 = unset (additive identity placeholder)

  Fp() = default;
  Fp(uint64_t val, uint64_t prime) : v(val % prime), p(prime) {}

  uint64_t modulus(const Fp& o) const {
    if (p && o.p && p != o.p) throw domain_error("Fp: mixed moduli");
    return p ? p : o.p;
  }
  friend Fp operator+(const Fp& a, const Fp& b) {
    uint64_t m = a.modulus(b);
    uint64_t s = a.v + b.v;
    if (s >= m) s -= m;
    return Fp(s, m);
  }
  friend Fp operator-(const Fp& a, const Fp& b) {
    uint64_t m = a.modulus(b);
    return Fp(a.v + m - b.v % m, m);
  }
  friend Fp operator*(const Fp& a, const Fp& b) {
    uint64_t m = a.modulus(b);
    return Fp(modp_detail::mulmod(a.v, b.v, m), m);
  }
  friend Fp operator/(const Fp& a, const Fp& b) {
    uint64_t m = a.modulus(b);
    if (b.v % m == 0) throw domain_error("Fp: division by zero");
    return Fp(modp_detail::mulmod(a.v, modp_detail::invmod(b.v, m), m), m);
  }
  bool operator==(const Fp& o) const { return v == o.v; }
};

inline bool qr_is_zero(const Fp& x) { return x.v == 0; }
inline Fp qr_zero_like(const Fp& x) { return Fp(0, x.p ? x.p : 2); }
inline Fp qr_from_int(const Fp& like, long n) {
  uint64_t m = like.p ? like.p : 2;
  long r = n % (long)m;
  if (r < 0) r += m;
  return Fp((uint64_t)r, m);
}
inline std::string qr_to_string(const Fp& x) { return std::to_string(x.v); }

// ---- reduction --------------------------------------------------------------
struct ReductionResult {
  bool good = false;
  std::optional<Weierstrass<Fp>> curve;  // set iff good
};

namespace modp_detail {

// p-adic valuation of a rational
inline long val_p(const Rat& r, uint64_t p) {
  if (r == 0) return 0;
  long v = 0;
  Int n = abs(Int(r.get_num())), d = Int(r.get_den());
  while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
    mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
    ++v;
  }
  while (mpz_divisible_ui_p(d.get_mpz_t(), p)) {
    mpz_divexact_ui(d.get_mpz_t(), d.get_mpz_t(), p);
    --v;
  }
  return v;
}

inline uint64_t rat_mod_p(const Rat& r, uint64_t p) {
  Int n = Int(r.get_num()) % Int((unsigned long)p);
  if (n < 0) n += (unsigned long)p;
  Int d = Int(r.get_den()) % Int((unsigned long)p);
  uint64_t dv = d.get_ui();
  if (dv == 0) throw domain_error("rat_mod_p: denominator divisible by p");
  return mulmod(n.get_ui(), invmod(dv, p), p);
}

}  // namespace modp_detail

// Clears p from denominators with the scaling x -> x/u^2, y -> y/u^3 (u = p^m),
// then reduces. Bad reduction (Delta = 0 mod p) is a value, not an error.
inline ReductionResult reduce_mod_p(const Weierstrass<Rat>& E, uint64_t p) {
  const Rat* as[5] = {&E.a1, &E.a2, &E.a3, &E.a4, &E.a6};
  const int wt[5] = {1, 2, 3, 4, 6};
  long m = 0;
  for (int i = 0; i < 5; ++i) {
    long v = modp_detail::val_p(*as[i], p);
    if (v < 0) m = std::max(m, (-v + wt[i] - 1) / wt[i]);
  }
  Rat u(1);
  for (long i = 0; i < m; ++i) u *= (unsigned long)p;
  Rat scaled[5];
  for (int i = 0; i < 5; ++i) {
    Rat uw(1);
    for (int k = 0; k < wt[i]; ++k) uw *= u;
    scaled[i] = *as[i] * uw;
  }
  uint64_t c[5];
  for (int i = 0; i < 5; ++i) c[i] = modp_detail::rat_mod_p(scaled[i], p);
  // discriminant mod p without constructing (construction throws when singular)
  Fp a1(c[0], p), a2(c[1], p), a3(c[2], p), a4(c[3], p), a6(c[4], p);
  auto k = [&](long n) { return qr_from_int(a1, n); };
  Fp b2 = a1 * a1 + k(4) * a2;
  Fp b4 = k(2) * a4 + a1 * a3;
  Fp b6 = a3 * a3 + k(4) * a6;
  Fp b8 = a1 * a1 * a6 + k(4) * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
  Fp disc = k(0) - b2 * b2 * b8 - k(8) * b4 * b4 * b4 - k(27) * b6 * b6 + k(9) * b2 * b4 * b6;
  if (qr_is_zero(disc)) return ReductionResult{false, std::nullopt};
  return ReductionResult{true, Weierstrass<Fp>(a1, a2, a3, a4, a6)};
}

// ---- point counting ---------------------------------------------------------

namespace modp_detail {

// #E(F_p) by the quadratic-character sum (odd p), brute force at p = 2.
inline uint64_t count_naive(const Weierstrass<Fp>& E) {
  uint64_t p = E.a1.p;
  if (p == 2) {
    uint64_t n = 1;
    for (uint64_t x = 0; x < 2; ++x)
      for (uint64_t y = 0; y < 2; ++y)
        if (E.on_curve(CurvePoint<Fp>(Fp(x, 2), Fp(y, 2)))) ++n;
    return n;
  }
  // complete the square: (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2b4 x + b6
  uint64_t b2 = E.b2.v, b4 = E.b4.v, b6 = E.b6.v;
  uint64_t n = p + 1;
  for (uint64_t x = 0; x < p; ++x) {
    uint64_t g = (mulmod(mulmod(x, x, p), (4 * x + b2) % p, p) + mulmod(2 * b4 % p, x, p) + b6) % p;
    if (g == 0) continue;  // one root: contributes chi = 0
    uint64_t chi = powmod(g, (p - 1) / 2, p);
    n = chi == 1 ? n + 1 : n - 1;
  }
  return n;
}

// random affine point via the completed square (odd p > 3)
inline std::optional<CurvePoint<Fp>> random_point(const Weierstrass<Fp>& E, std::mt19937_64& rng) {
  uint64_t p = E.a1.p;
  for (int tries = 0; tries < 256; ++tries) {
    uint64_t x = rng() % p;
    // w^2 = 4x^3 + b2 x^2 + 2 b4 x + b6; y = (w - a1 x - a3)/2
    uint64_t g =
        (mulmod(mulmod(x, x, p), (4 * x + E.b2.v) % p, p) + mulmod(2 * E.b4.v % p, x, p) + E.b6.v) %
        p;
    uint64_t w;
    if (g == 0) w = 0;
    else {
      if (powmod(g, (p - 1) / 2, p) != 1) continue;
      w = sqrt_mod_p(g, p);
    }
    uint64_t y = mulmod((w + p - mulmod(E.a1.v, x, p) + p - E.a3.v) % p, invmod(2, p), p);
    CurvePoint<Fp> P(Fp(x, p), Fp(y, p));
    if (E.on_curve(P)) return P;
  }
  return std::nullopt;
}

// exact order of P given that M * P = O (M factored by trial division)
inline uint64_t point_order(const Weierstrass<Fp>& E, const CurvePoint<Fp>& P, uint64_t M) {
  uint64_t ord = M;
  for (uint64_t q = 2; q * q <= M; ++q) {
    while (ord % q == 0 && multiply(E, Int(ord / q), P).infinity) ord /= q;
    while (M % q == 0) M /= q;
  }
  if (M > 1 && ord % M == 0 && multiply(E, Int(ord / M), P).infinity) ord /= M;
  return ord;
}

}  // namespace modp_detail

inline uint64_t count_points(const Weierstrass<Fp>& E) {
  uint64_t p = E.a1.p;
  if (p < (1u << 10)) return modp_detail::count_naive(E);
  using namespace modp_detail;
  // Hasse interval [p+1-2sqrt(p), p+1+2sqrt(p)]
  uint64_t sq = (uint64_t)std::sqrt((double)p);
  while ((sq + 1) * (sq + 1) <= p) ++sq;
  while (sq * sq > p) --sq;
  uint64_t half = 2 * sq + 2;
  uint64_t lo = p + 1 - half, hi = p + 1 + half;
  std::mt19937_64 rng(p * 0x9E3779B97F4A7C15ull + 1);
  uint64_t L = 1;  // lcm of known point orders; group order is a multiple in [lo,hi]
  for (int round = 0; round < 8; ++round) {
    auto Pq = random_point(E, rng);
    if (!Pq) break;
    const auto& P = *Pq;
    // find N in [lo, hi] with N*P = O: write N = (lo+s) + i(2s+1) -+ j, j in [0,s]
    uint64_t s = 1;
    while (s * s < 2 * half) ++s;  // baby step count ~ sqrt(interval)
    std::map<uint64_t, std::vector<long>> babies;  // x-coordinate -> baby indices j
    CurvePoint<Fp> bj = CurvePoint<Fp>::at_infinity();
    std::vector<CurvePoint<Fp>> baby_pts(s + 1);
    for (uint64_t j = 0; j <= s; ++j) {
      baby_pts[j] = bj;
      if (!bj.infinity) babies[bj.x.v].push_back((long)j);
      bj = add(E, bj, P);
    }
    CurvePoint<Fp> step = multiply(E, Int((unsigned long)(2 * s + 1)), P);
    uint64_t M = 0;
    CurvePoint<Fp> giant = multiply(E, Int((unsigned long)(lo + s)), P);
    for (uint64_t i = 0; lo + i * (2 * s + 1) <= hi; ++i) {
      uint64_t base = lo + s + i * (2 * s + 1);
      if (giant.infinity) { M = base; break; }
      auto it = babies.find(giant.x.v);
      bool found = false;
      if (it != babies.end()) {
        for (long j : it->second) {
          if (giant == baby_pts[j]) {
            M = base - (uint64_t)j;
            found = true;
            break;
          }
          if (giant == negate(E, baby_pts[j])) {
            M = base + (uint64_t)j;
            found = true;
            break;
          }
        }
      }
      if (found) break;
      giant = add(E, giant, step);
    }
    if (M == 0 || !multiply(E, Int(M), P).infinity) continue;  // should not happen
    uint64_t ord = modp_detail::point_order(E, P, M);
    L = std::lcm(L, ord);
    // candidates: multiples of L in the Hasse interval
    uint64_t first = (lo + L - 1) / L * L;
    if (first > hi) continue;
    if (first + L > hi) return first;  // unique
  }
  return modp_detail::count_naive(E);  // ambiguity survived: correctness over speed
}

inline int64_t trace_of_frobenius(const Weierstrass<Fp>& E) {
  uint64_t p = E.a1.p;
  return (int64_t)(p + 1) - (int64_t)count_points(E);
}

// #E(F_{p^k}) for k = 1, 2 from a_p
inline Int count_points_ext(int64_t ap, uint64_t p, int k) {
  Int P((unsigned long)p);
  if (Int(ap) * ap > 4 * P) throw domain_error("count_points_ext: Hasse bound violated");
  if (k == 1) return P + 1 - ap;
  if (k == 2) return P * P + 1 - (Int(ap) * ap - 2 * P);
  throw domain_error("count_points_ext: k must be 1 or 2");
}

// ---- a_p tables -------------------------------------------------------------

struct ApEntry {
  uint64_t p;
  int64_t ap;  // 0 when bad
  bool good;
};

struct ApTable {
  std::string curve_id;
  uint64_t pmax = 0;
  std::vector<ApEntry> entries;  // ascending p

  const ApEntry* find(uint64_t p) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), p,
                               [](const ApEntry& e, uint64_t v) { return e.p < v; });
    return it != entries.end() && it->p == p ? &*it : nullptr;
  }
};

inline std::string curve_cache_id(const Weierstrass<Rat>& E) {
  size_t h = std::hash<std::string>{}(curve_to_string(E));
  char buf[32];
  snprintf(buf, sizeof buf, "%016zx", h);
  return buf;
}

inline ApTable ap_table(const Weierstrass<Rat>& E, uint64_t pmax, unsigned jobs = 1) {
  ApTable t;
  t.curve_id = curve_cache_id(E);
  t.pmax = pmax;
  std::vector<uint64_t> ps;
  for (uint32_t p : small_primes()) {
    if (p > pmax) break;
    ps.push_back(p);
  }
  if (pmax >= 1u << 20)
    throw domain_error("ap_table: pmax limit is 2^20");
  t.entries.resize(ps.size());
  auto work = [&](unsigned tid) {
    for (size_t i = tid; i < ps.size(); i += jobs) {
      auto red = reduce_mod_p(E, ps[i]);
      if (!red.good) t.entries[i] = ApEntry{ps[i], 0, false};
      else t.entries[i] = ApEntry{ps[i], trace_of_frobenius(*red.curve), true};
    }
  };
  if (jobs <= 1) work(0);
  else {
    std::vector<std::thread> th;
    for (unsigned j = 0; j < jobs; ++j) th.emplace_back(work, j);
    for (auto& x : th) x.join();
  }
  return t;
}

// cache format: one line per prime, "p a_p good"
inline void save_ap_table(const ApTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw domain_error("cannot write a_p cache: " + path);
  out << "# curve " << t.curve_id << " pmax " << t.pmax << "\n";
  for (auto& e : t.entries) out << e.p << " " << e.ap << " " << (e.good ? 1 : 0) << "\n";
}

inline std::optional<ApTable> load_ap_table(const std::string& path, const std::string& curve_id,
                                            uint64_t pmax) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string hash, word;
  uint64_t file_pmax = 0;
  in >> word >> word >> hash >> word >> file_pmax;
  if (hash != curve_id || file_pmax < pmax) return std::nullopt;
  ApTable t;
  t.curve_id = curve_id;
  t.pmax = pmax;
  uint64_t p;
  int64_t ap;
  int good;
  while (in >> p >> ap >> good) {
    if (p > pmax) break;
    t.entries.push_back(ApEntry{p, ap, good != 0});
  }
  return t;
}

}  // namespace quadrank
