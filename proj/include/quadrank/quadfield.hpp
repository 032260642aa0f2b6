#pragma once

// Exact arithmetic in K = Q(sqrt(d)) for squarefree d (d = 1 encodes Q), the
// Galois conjugation, K-square testing, and complete root finding of
// polynomials inside K.
//
// Two root-finding engines:
//  * roots_in_K: the resultant route for rational-coefficient f. Write
//    x = u + v*sqrt(d), split f(u+v*sqrt(d)) = G(u,v^2) + v*sqrt(d)*H(u,v^2);
//    rational roots of Res_t(G,H) give the candidate u, back-substitution the
//    candidate v^2, and every candidate is verified by exact evaluation.
//  * roots_in_K_bounded: a modular route for K-coefficient polynomials of
//    large degree (division polynomials). Embed K into Z_p at a split prime,
//    lift the mod-p roots, and reconstruct (u, v) from the two embeddings.
//    Complete for roots whose coordinate height stays under the given bound,
//    which is all this library ever asks of it (torsion x-coordinates).

#include "quadrank/poly.hpp"

#include <optional>

namespace quadrank {

struct QuadField {
  Int d;  // squarefree, nonzero; d = 1 encodes Q

  explicit QuadField(Int dd, bool normalize = false) : d(std::move(dd)) {
    if (d == 0) throw domain_error("QuadField: d must be nonzero");
    if (normalize) d = squarefree_decompose(d).squarefree_part;
  }
  bool is_rational() const { return d == 1; }
  bool operator==(const QuadField& o) const { return d == o.d; }
};

struct QuadElem {
  Int d;  // field tag
  Rat a, b;  // value a + b*sqrt(d)

  QuadElem() : d(1), a(0), b(0) {}
  QuadElem(Int dd, Rat aa, Rat bb) : d(std::move(dd)), a(std::move(aa)), b(std::move(bb)) {
    a.canonicalize();  // guard against non-canonical two-arg Rat construction
    b.canonicalize();
    if (d == 1 && b != 0) {
      a += b;  // sqrt(1) = 1
      b = 0;
    }
  }
  explicit QuadElem(Rat aa) : d(1), a(std::move(aa)), b(0) {}

  bool is_zero() const { return a == 0 && b == 0; }
  bool is_rational() const { return b == 0; }

  friend QuadElem operator+(const QuadElem& x, const QuadElem& y) {
    return QuadElem(x.merge(y), x.a + y.a, x.b + y.b);
  }
  friend QuadElem operator-(const QuadElem& x, const QuadElem& y) {
    return QuadElem(x.merge(y), x.a - y.a, x.b - y.b);
  }
  friend QuadElem operator*(const QuadElem& x, const QuadElem& y) {
    Int d = x.merge(y);
    return QuadElem(d, x.a * y.a + x.b * y.b * Rat(d), x.a * y.b + x.b * y.a);
  }
  friend QuadElem operator-(const QuadElem& x) { return QuadElem(x.d, -x.a, -x.b); }
  QuadElem inverse() const {
    Rat n = norm();
    if (n == 0) throw domain_error("QuadElem: division by zero");
    return QuadElem(d, a / n, -b / n);
  }
  friend QuadElem operator/(const QuadElem& x, const QuadElem& y) { return x * y.inverse(); }
  bool operator==(const QuadElem& o) const { return a == o.a && b == o.b; }

  QuadElem conjugate() const { return QuadElem(d, a, -b); }
  Rat norm() const { return a * a - b * b * Rat(d); }
  Rat trace() const { return 2 * a; }

  Int merge(const QuadElem& o) const {
    if (d == o.d) return d;
    if (is_rational() && !o.is_rational()) return o.d;
    if (o.is_rational() && !is_rational()) return d;
    if (is_rational() && o.is_rational()) return d == 1 ? o.d : d;
    throw domain_error("QuadElem: mixing distinct fields");
  }
};

inline bool qr_is_zero(const QuadElem& x) { return x.is_zero(); }
inline QuadElem qr_zero_like(const QuadElem& x) { return QuadElem(x.d, Rat(0), Rat(0)); }

inline QuadElem q_of(const Int& d, long a, long b = 0) { return QuadElem(d, Rat(a), Rat(b)); }
inline QuadElem q_int(const QuadElem& like, long n) { return QuadElem(like.d, Rat(n), Rat(0)); }

inline std::string quadelem_to_string(const QuadElem& x) {
  if (x.b == 0) return rat_to_string(x.a);
  std::string tail = rat_to_string(x.b) + "*s";
  if (x.a == 0) return tail;
  std::string s = rat_to_string(x.a);
  if (x.b > 0) s += "+";
  return s + tail;
}

// Parses sums of terms "a" and "b*s" in either order ("a+b*s", "b*s-a", ...)
// with a, b in Rat syntax.
inline QuadElem parse_quadelem(const std::string& str, const Int& d) {
  if (str.empty()) throw domain_error("empty field-element literal");
  // split into signed terms at '+'/'-' that are not leading and not after '/'
  std::vector<std::string> terms;
  size_t start = 0;
  for (size_t i = 1; i < str.size(); ++i) {
    if ((str[i] == '+' || str[i] == '-') && str[i - 1] != '/' && str[i - 1] != '+' &&
        str[i - 1] != '-') {
      terms.push_back(str.substr(start, i - start));
      start = i;
    }
  }
  terms.push_back(str.substr(start));
  Rat a(0), b(0);
  for (auto& t : terms) {
    auto star = t.find("*s");
    if (star == std::string::npos && !t.empty() && t.back() == 's') {
      // bare "s", "-s", "+s"
      std::string coeff = t.substr(0, t.size() - 1);
      if (coeff.empty() || coeff == "+") coeff = "1";
      else if (coeff == "-") coeff = "-1";
      b += parse_rat(coeff);
    } else if (star == std::string::npos) {
      a += parse_rat(t[0] == '+' ? t.substr(1) : t);
    } else {
      std::string coeff = t.substr(0, star);
      if (coeff.empty() || coeff == "+") coeff = "1";
      else if (coeff == "-") coeff = "-1";
      else if (coeff[0] == '+') coeff = coeff.substr(1);
      b += parse_rat(coeff);
    }
  }
  return QuadElem(d, a, b);
}

// ---- K-square test ----------------------------------------------------------
// a + b*sqrt(d) is a square iff s^2 + t^2 d = a, 2 s t = b has a rational
// solution; eliminating t gives 4 s^4 - 4 a s^2 + b^2 d = 0.
inline std::optional<QuadElem> sqrt_in_K(const QuadElem& x) {
  if (x.is_zero()) return qr_zero_like(x);
  if (x.b == 0) {
    Rat root;
    if (rat_is_square(x.a, &root)) return QuadElem(x.d, root, Rat(0));
    if (x.d != 1) {
      Rat q = x.a / Rat(x.d);
      if (rat_is_square(q, &root)) return QuadElem(x.d, Rat(0), root);
    }
    return std::nullopt;
  }
  // z = s^2 solves z^2 - a z + b^2 d / 4 = 0; need a^2 - b^2 d (the norm) square
  Rat discr = x.norm();
  Rat w;
  if (!rat_is_square(discr, &w)) return std::nullopt;
  for (int sign = 0; sign < 2; ++sign) {
    Rat z = (x.a + (sign ? -w : w)) / 2;
    Rat s;
    if (z > 0 && rat_is_square(z, &s) && s != 0) {
      Rat t = x.b / (2 * s);
      QuadElem r(x.d, s, t);
      if (r * r == x) return r;
    }
  }
  return std::nullopt;
}

// All K-solutions of y^2 + p*y + q = 0.
inline std::vector<QuadElem> solve_quadratic_in_K(const QuadElem& p, const QuadElem& q) {
  QuadElem disc = p * p - q_int(p, 4) * q;
  auto r = sqrt_in_K(disc);
  std::vector<QuadElem> out;
  if (!r) return out;
  QuadElem half = QuadElem(disc.d, Rat(1, 2), Rat(0));
  out.push_back((-p + *r) * half);
  if (!r->is_zero()) out.push_back((-p - *r) * half);
  return out;
}

// Canonical representative ordering for deterministic reports: compare (a, b).
inline bool quadelem_less(const QuadElem& x, const QuadElem& y) {
  if (x.a != y.a) return x.a < y.a;
  return x.b < y.b;
}

// ---- roots of rational polynomials inside K (resultant route) ---------------

namespace quadfield_detail {

using Poly2 = Poly<Poly<Rat>>;  // polynomial in t with Poly<Rat> (in u) coefficients

inline Poly<Rat> interpolate(const std::vector<Rat>& xs, const std::vector<Rat>& ys) {
  // Lagrange interpolation (small sizes only)
  Poly<Rat> acc;
  for (size_t i = 0; i < xs.size(); ++i) {
    Poly<Rat> term(std::vector<Rat>{Rat(1)});
    Rat denom(1);
    for (size_t j = 0; j < xs.size(); ++j) {
      if (i == j) continue;
      term = term * Poly<Rat>(std::vector<Rat>{-xs[j], Rat(1)});
      denom *= xs[i] - xs[j];
    }
    acc = acc + term * Rat(ys[i] / denom);
  }
  return acc;
}

}  // namespace quadfield_detail

std::vector<QuadElem> dedupe_roots(std::vector<QuadElem> roots, const Poly<Rat>& f);

inline std::vector<QuadElem> roots_in_K(const Poly<Rat>& f_in, const QuadField& K) {
  if (f_in.is_zero()) throw domain_error("roots_in_K: zero polynomial");
  std::vector<QuadElem> out;
  if (f_in.degree() < 1) return out;
  const Int& d = K.d;
  // rational roots always count
  for (auto& r : rational_roots(f_in)) out.push_back(QuadElem(d, r, Rat(0)));
  if (K.is_rational()) return out;

  // work with the squarefree part; multiplicities restored at the end
  Poly<Rat> g0 = poly_gcd(f_in, f_in.derivative());
  Poly<Rat> f = g0.degree() > 0 ? poly_divmod(f_in, g0).first : f_in;

  // expand f(u + v sqrt d) = G(u,t) + v sqrt(d) H(u,t), t = v^2, by Horner
  using quadfield_detail::Poly2;
  auto c_poly = [&](const Rat& r) {
    return Poly2(std::vector<Poly<Rat>>{Poly<Rat>(std::vector<Rat>{r})});
  };
  Poly2 U(std::vector<Poly<Rat>>{Poly<Rat>(std::vector<Rat>{Rat(0), Rat(1)})});  // u
  Poly2 T(std::vector<Poly<Rat>>{Poly<Rat>(), Poly<Rat>(std::vector<Rat>{Rat(1)})});  // t
  Poly2 G = c_poly(f.leading()), H;
  for (int i = f.degree() - 1; i >= 0; --i) {
    // (G + v sqrt d H)(u + v sqrt d) = (uG + t d H) + v sqrt d (G + u H)
    Poly2 newG = U * G + T * H * c_poly(Rat(d)) + c_poly(f.c[i]);
    Poly2 newH = G + U * H;
    G = newG;
    H = newH;
  }
  if (H.is_zero()) return dedupe_roots(out, f_in);

  // R(u) = Res_t(G, H) by evaluation at rational u and interpolation
  int dtG = G.degree(), dtH = H.degree();
  int duG = 0, duH = 0;
  for (auto& c : G.c) duG = std::max(duG, c.degree());
  for (auto& c : H.c) duH = std::max(duH, c.degree());
  int D = dtG * duH + dtH * duG + 1;
  std::vector<Rat> xs, ys;
  long u0 = 0;
  auto eval_at = [](const Poly2& P, const Rat& u) {
    std::vector<Rat> cs;
    for (auto& c : P.c) cs.push_back(c.is_zero() ? Rat(0) : c.eval(u));
    return Poly<Rat>(std::move(cs));
  };
  while ((int)xs.size() < D + 1) {
    Rat u(u0++);
    Poly<Rat> gu = eval_at(G, u), hu = eval_at(H, u);
    // leading coefficients must not vanish at the sample or the degree drops
    if (gu.degree() != dtG || hu.degree() != dtH) continue;
    xs.push_back(u);
    ys.push_back(poly_resultant(gu, hu, Rat(1)));
  }
  Poly<Rat> R = quadfield_detail::interpolate(xs, ys);
  if (!R.is_zero()) {
    for (auto& u : rational_roots(R)) {
      Poly<Rat> gu, hu;
      {
        std::vector<Rat> cs;
        for (auto& c : G.c) cs.push_back(c.is_zero() ? Rat(0) : c.eval(u));
        gu = Poly<Rat>(std::move(cs));
        cs.clear();
        for (auto& c : H.c) cs.push_back(c.is_zero() ? Rat(0) : c.eval(u));
        hu = Poly<Rat>(std::move(cs));
      }
      Poly<Rat> w = hu.is_zero() ? gu : (gu.is_zero() ? hu : poly_gcd(gu, hu));
      if (w.degree() < 1) continue;
      for (auto& t : rational_roots(w)) {
        if (t <= 0) continue;
        Rat v;
        if (!rat_is_square(t, &v) || v == 0) continue;
        for (int sgn = 0; sgn < 2; ++sgn) {
          QuadElem cand(d, u, sgn ? -v : v);
          Poly<QuadElem> fK;
          {
            std::vector<QuadElem> cs;
            for (auto& cc : f_in.c) cs.push_back(QuadElem(d, cc, Rat(0)));
            fK = Poly<QuadElem>(std::move(cs));
          }
          if (fK.eval(cand).is_zero()) out.push_back(cand);
        }
      }
    }
  }
  return dedupe_roots(out, f_in);
}

// restore multiplicities of the collected roots against the original f
inline std::vector<QuadElem> dedupe_roots(std::vector<QuadElem> roots, const Poly<Rat>& f) {
  std::sort(roots.begin(), roots.end(), quadelem_less);
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  // multiplicity: divide f by (x - r) repeatedly over K
  std::vector<QuadElem> out;
  if (roots.empty()) return out;
  Int d = roots[0].d;
  Poly<QuadElem> rem;
  {
    std::vector<QuadElem> cs;
    for (auto& cc : f.c) cs.push_back(QuadElem(d, cc, Rat(0)));
    rem = Poly<QuadElem>(std::move(cs));
  }
  for (auto& r : roots) {
    while (rem.degree() >= 1 && rem.eval(r).is_zero()) {
      Poly<QuadElem> lin(std::vector<QuadElem>{-r, q_int(r, 1)});
      rem = poly_divmod(rem, lin).first;
      out.push_back(r);
    }
  }
  return out;
}

// ---- modular K-root finding for K-coefficient polynomials -------------------
// Complete for roots of coordinate height below ~`digits10` decimal digits
// (numerators and denominators of u and v). The caller supplies a bound valid
// for its root population; torsion x-coordinates qualify via the standard
// Weil-height bound on points of canonical height zero.
std::vector<QuadElem> roots_in_K_bounded(const Poly<QuadElem>& f_in, const QuadField& K,
                                         unsigned digits10);

namespace quadfield_detail {

inline uint64_t find_split_prime(const Int& d, const std::vector<Int>& avoid, uint64_t start) {
  for (uint64_t p = start;; ++p) {
    if (!is_probable_prime(Int((unsigned long)p))) continue;
    if (mpz_divisible_ui_p(d.get_mpz_t(), p)) continue;
    bool bad = false;
    for (auto& a : avoid)
      if (a != 0 && mpz_divisible_ui_p(a.get_mpz_t(), p)) bad = true;
    if (bad) continue;
    if (d == 1 || jacobi(d, Int((unsigned long)p)) == 1) return p;
  }
}

}  // namespace quadfield_detail

inline std::vector<QuadElem> roots_in_K_bounded(const Poly<QuadElem>& f_in, const QuadField& K,
                                                unsigned digits10) {
  if (f_in.is_zero()) throw domain_error("roots_in_K_bounded: zero polynomial");
  std::vector<QuadElem> out;
  if (f_in.degree() < 1) return out;
  const Int& d = K.d;
  // assume squarefree (verified mod p below); exact K-gcd is a last resort
  // because the rational coefficient growth of the Euclidean chain is severe
  Poly<QuadElem> f = f_in;

  // common denominator of all coefficients, so reductions stay integral
  Int den = 1;
  for (auto& c : f.c) {
    den = lcm(den, Int(c.a.get_den()));
    den = lcm(den, Int(c.b.get_den()));
  }
  // avoid primes dividing the (scaled) leading coefficient's norm: they could
  // make the embedded leading coefficient vanish and lose p-integrality
  Rat nlc = f.leading().norm() * Rat(den) * Rat(den);
  std::vector<Int> avoid = {den, Int(nlc.get_num())};
  std::mt19937_64 rng(0xBADC0DEULL);

  bool squarefree_issue = false;
  for (uint64_t pstart :
       {1000003ull, 2000003ull, 4000037ull, 8000009ull, 16000057ull, 32000011ull}) {
    uint64_t p = quadfield_detail::find_split_prime(d, avoid, pstart);
    // sqrt of d mod p
    Int dp = d % Int((unsigned long)p);
    if (dp < 0) dp += (unsigned long)p;
    uint64_t s = 0;
    if (d != 1) {
      Int r;
      mpz_t pm;
      mpz_init_set_ui(pm, p);
      if (mpz_legendre(dp.get_mpz_t(), pm) != 1) { mpz_clear(pm); continue; }
      mpz_clear(pm);
      s = modp_detail::sqrt_mod_p(dp.get_ui(), p);
    }
    // precision ladder p, p^2, p^4, ... past 2 * 10^(2*digits10+2)
    Int target;
    mpz_ui_pow_ui(target.get_mpz_t(), 10, 2 * digits10 + 2);
    target *= 2;
    std::vector<Int> mods{Int((unsigned long)p)};
    while (mods.back() < target) mods.push_back(mods.back() * mods.back());
    const Int& pk = mods.back();

    // lift sqrt(d) along the ladder: Ss[j] is a square root of d mod mods[j]
    std::vector<Int> Ss{Int((unsigned long)s)};
    if (d != 1) {
      bool ok = true;
      for (size_t j = 1; j < mods.size(); ++j) {
        const Int& M = mods[j];
        Int S = Ss.back(), inv, der = 2 * S;
        if (mpz_invert(inv.get_mpz_t(), der.get_mpz_t(), M.get_mpz_t()) == 0) { ok = false; break; }
        S = (S - (S * S - d) * inv) % M;
        if (S < 0) S += M;
        Ss.push_back(S);
      }
      if (!ok) continue;
    } else {
      Ss.assign(mods.size(), Int(0));
    }

    // integer coefficient pairs: embedded poly at level j, sign e is
    // sum (ca[i] + e * Ss[j] * cb[i]) x^i  mod mods[j]
    std::vector<Int> ca, cb;
    for (auto& c : f.c) {
      ca.push_back(Int(Rat(c.a * Rat(den)).get_num()));
      cb.push_back(Int(Rat(c.b * Rat(den)).get_num()));
    }
    auto coeffs_at = [&](size_t level, int e) {
      const Int& M = mods[level];
      std::vector<Int> cs(ca.size());
      for (size_t i = 0; i < ca.size(); ++i) {
        cs[i] = (ca[i] + e * Ss[std::min(level, Ss.size() - 1)] * cb[i]) % M;
        if (cs[i] < 0) cs[i] += M;
      }
      return cs;
    };

    // mod-p roots of both embeddings; require squarefree reduction
    auto at_p = [&](int e) {
      auto cs = coeffs_at(0, e);
      modp_detail::PolyP r(cs.size());
      for (size_t i = 0; i < cs.size(); ++i) r[i] = cs[i].get_ui();
      modp_detail::ptrim(r);
      return r;
    };
    auto fpp = at_p(+1), fpm = at_p(-1);
    if (fpp.size() != f.c.size() || fpm.size() != f.c.size()) continue;  // lc vanished
    auto squarefree_mod_p = [&](const modp_detail::PolyP& g) {
      modp_detail::PolyP der(g.size() - 1);
      for (size_t i = 1; i < g.size(); ++i) der[i - 1] = modp_detail::mulmod(g[i], i % p, p);
      modp_detail::ptrim(der);
      return modp_detail::pgcd(g, der, p).size() == 1;
    };
    if (!squarefree_mod_p(fpp) || (d != 1 && !squarefree_mod_p(fpm))) {
      squarefree_issue = true;
      continue;
    }
    squarefree_issue = false;
    auto rp = modp_detail::roots_mod_p(fpp, p, rng);
    auto rm = d == 1 ? rp : modp_detail::roots_mod_p(fpm, p, rng);

    // Newton-lift each root along the ladder against the level-consistent poly
    auto lift_root = [&](uint64_t r0, int e) -> std::optional<Int> {
      Int x((unsigned long)r0);
      for (size_t j = 1; j < mods.size(); ++j) {
        const Int& M = mods[j];
        auto cs = coeffs_at(j, e);
        Int fv = 0, dv = 0;
        for (int i = int(cs.size()) - 1; i >= 0; --i) {
          dv = (dv * x + fv) % M;
          fv = (fv * x + cs[i]) % M;
        }
        Int dinv;
        if (mpz_invert(dinv.get_mpz_t(), dv.get_mpz_t(), M.get_mpz_t()) == 0) return std::nullopt;
        x = (x - fv * dinv) % M;
        if (x < 0) x += M;
      }
      return x;
    };
    std::vector<Int> Lp, Lm;
    for (uint64_t r : rp)
      if (auto x = lift_root(r, +1)) Lp.push_back(*x);
    if (d == 1) Lm = Lp;
    else
      for (uint64_t r : rm)
        if (auto x = lift_root(r, -1)) Lm.push_back(*x);
    if (Lp.empty()) break;  // no roots at all

    Int bound;
    mpz_ui_pow_ui(bound.get_mpz_t(), 10, digits10 + 1);
    const Int& S = Ss.back();
    Int inv2;
    {
      Int two(2);
      mpz_invert(inv2.get_mpz_t(), two.get_mpz_t(), pk.get_mpz_t());
    }
    for (auto& alpha : Lp) {
      std::vector<Int> betas = d == 1 ? std::vector<Int>{alpha} : Lm;
      for (auto& beta : betas) {
        // alpha = u + v S, beta = u - v S mod p^k
        Int u = (alpha + beta) * inv2 % pk;
        Rat ur, vr(0);
        if (!rational_reconstruct(u, pk, bound, bound, &ur)) continue;
        if (d != 1) {
          Int sinv;
          if (mpz_invert(sinv.get_mpz_t(), S.get_mpz_t(), pk.get_mpz_t()) == 0) continue;
          Int vv = (alpha - beta) * inv2 % pk * sinv % pk;
          if (!rational_reconstruct(vv, pk, bound, bound, &vr)) continue;
        }
        QuadElem cand(d, ur, vr);
        if (f.eval(cand).is_zero()) out.push_back(cand);
      }
    }
    break;  // one good split prime is complete: p-integrality covers all roots
  }
  if (squarefree_issue) {
    // every sampled prime saw a repeated factor: the polynomial itself is very
    // likely non-squarefree over K; take the exact squarefree part and retry
    Poly<QuadElem> g0 = poly_gcd(f_in, f_in.derivative());
    if (g0.degree() == 0) throw domain_error("roots_in_K_bounded: no usable split prime found");
    auto rs = roots_in_K_bounded(poly_divmod(f_in, g0).first, K, digits10);
    out.insert(out.end(), rs.begin(), rs.end());
  }
  std::sort(out.begin(), out.end(), quadelem_less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  // multiplicities against the original polynomial
  std::vector<QuadElem> final_out;
  Poly<QuadElem> rem = f_in;
  for (auto& r : out) {
    while (rem.degree() >= 1 && rem.eval(r).is_zero()) {
      Poly<QuadElem> lin(std::vector<QuadElem>{-r, q_int(r, 1)});
      rem = poly_divmod(rem, lin).first;
      final_out.push_back(r);
    }
  }
  return final_out;
}

}  // namespace quadrank
