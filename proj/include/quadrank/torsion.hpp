#pragma once

// Division polynomials, torsion subgroups over Q and over Q(sqrt d), the
// quadratic-field torsion classification, and the extra-2-torsion field
// finder.
//
// The torsion group is determined top-down: reduction mod good odd primes
// gives a multiplicative bound, candidate groups are drawn from the
// classification list (a theorem, so it doubles as a correctness
// cross-check), and each candidate is tested by exhibiting generators via
// complete root searches of the relevant division polynomials. Every
// exhibited point has its exact order verified by the group law, so a
// passing candidate is a proof of that subgroup.

#include "quadrank/modp.hpp"

#include <set>

namespace quadrank {

// ---- division polynomials ---------------------------------------------------
// psi_m = g_m(x) * w^(m even ? 1 : 0), where w = 2y + a1 x + a3 and
// w^2 = W(x) = 4x^3 + b2 x^2 + 2 b4 x + b6.
template <class F>
struct DivisionPoly {
  Poly<F> g;          // univariate part; roots are x-coordinates of m-torsion
  bool has_w_factor;  // true for even m (2-torsion x-coordinates live in W)
  Poly<F> W;          // psi_2 squared
};

template <class F>
struct DivisionPolyTable {
  const Weierstrass<F>* E;
  Poly<F> W;
  std::vector<Poly<F>> g;  // g[m]

  explicit DivisionPolyTable(const Weierstrass<F>& curve) : E(&curve) {
    auto k = [&](long n) { return qr_from_int(curve.a1, n); };
    auto P = [&](std::vector<F> v) { return Poly<F>(std::move(v)); };
    W = P({curve.b6, k(2) * curve.b4, curve.b2, k(4)});
    F z = qr_zero_like(curve.a1);
    g.resize(5);
    g[0] = Poly<F>();
    g[1] = P({k(1)});
    g[2] = P({k(1)});
    g[3] = P({curve.b8, k(3) * curve.b6, k(3) * curve.b4, curve.b2, k(3)});
    g[4] = P({curve.b4 * curve.b8 - curve.b6 * curve.b6,
              curve.b2 * curve.b8 - curve.b4 * curve.b6, k(10) * curve.b8, k(10) * curve.b6,
              k(5) * curve.b4, curve.b2, k(2)});
  }

  const Poly<F>& at(unsigned m) {
    if (m >= g.size()) extend(m);
    return g[m];
  }

 private:
  void extend(unsigned target) {
    while (g.size() <= target) {
      unsigned m = g.size();
      unsigned kk = m / 2;
      if (m % 2 == 1) {
        // psi_{2k+1} = psi_{k+2} psi_k^3 - psi_{k-1} psi_{k+1}^3
        Poly<F> t1 = at(kk + 2) * at(kk) * at(kk) * at(kk);
        Poly<F> t2 = at(kk - 1) * at(kk + 1) * at(kk + 1) * at(kk + 1);
        Poly<F> r = kk % 2 == 0 ? W * W * t1 - t2 : t1 - W * W * t2;
        g.push_back(r);
      } else {
        // psi_{2k} = psi_k (psi_{k+2} psi_{k-1}^2 - psi_{k-2} psi_{k+1}^2) / psi_2
        Poly<F> r = at(kk) * (at(kk + 2) * at(kk - 1) * at(kk - 1) -
                              at(kk - 2) * at(kk + 1) * at(kk + 1));
        g.push_back(r);
      }
    }
  }
};

template <class F>
DivisionPoly<F> division_polynomial(const Weierstrass<F>& E, unsigned m) {
  if (m < 1 || m > 36) throw domain_error("division_polynomial: need 1 <= m <= 36");
  DivisionPolyTable<F> tab(E);
  return DivisionPoly<F>{tab.at(m), m % 2 == 0, tab.W};
}

// x(mP) = phi_m / psi_m^2 as a pair of univariate polynomials in x(P)
template <class F>
std::pair<Poly<F>, Poly<F>> multiplication_x_fraction(const Weierstrass<F>& E, unsigned m) {
  if (m < 1 || m > 18) throw domain_error("multiplication_x_fraction: need 1 <= m <= 18");
  DivisionPolyTable<F> tab(E);
  Poly<F> X(std::vector<F>{qr_zero_like(E.a1), qr_from_int(E.a1, 1)});
  Poly<F> psi2, cross;
  if (m % 2 == 1) {
    psi2 = tab.at(m) * tab.at(m);
    cross = tab.at(m + 1) * tab.at(m - 1) * tab.W;
  } else {
    psi2 = tab.at(m) * tab.at(m) * tab.W;
    cross = tab.at(m + 1) * tab.at(m - 1);
  }
  return {X * psi2 - cross, psi2};
}

// ---- torsion groups ---------------------------------------------------------

struct TorsionGroup {
  unsigned n1 = 1, n2 = 1;  // group Z/n1 x Z/n2 with n1 | n2
  unsigned order() const { return n1 * n2; }
  bool operator==(const TorsionGroup& o) const { return n1 == o.n1 && n2 == o.n2; }
};

inline std::string torsion_to_string(const TorsionGroup& t) {
  if (t.n1 == 1) return std::to_string(t.n2);
  return std::to_string(t.n1) + "x" + std::to_string(t.n2);
}

inline TorsionGroup parse_torsion(const std::string& s) {
  auto x = s.find('x');
  TorsionGroup t;
  try {
    if (x == std::string::npos) {
      t.n2 = (unsigned)std::stoul(s);
    } else {
      t.n1 = (unsigned)std::stoul(s.substr(0, x));
      t.n2 = (unsigned)std::stoul(s.substr(x + 1));
    }
  } catch (std::exception&) {
    throw domain_error("cannot parse torsion group: '" + s + "'");
  }
  if (t.n1 == 0 || t.n2 == 0 || t.n2 % t.n1 != 0)
    throw domain_error("invalid torsion group: '" + s + "'");
  return t;
}

// the classification list over quadratic fields; d = 1 restricts to the
// rational list (cyclic m <= 10 or 12; Z/2 x Z/2m, m <= 4)
inline std::vector<TorsionGroup> allowed_torsion_groups(const Int& d) {
  std::vector<TorsionGroup> out;
  if (d == 1) {
    for (unsigned m : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 9u, 10u, 12u}) out.push_back({1, m});
    for (unsigned m : {1u, 2u, 3u, 4u}) out.push_back({2, 2 * m});
  } else {
    for (unsigned m = 1; m <= 18; ++m)
      if (m != 17) out.push_back({1, m});
    for (unsigned m = 1; m <= 6; ++m) out.push_back({2, 2 * m});
    if (d == -3) {
      out.push_back({3, 3});
      out.push_back({3, 6});
    }
    if (d == -1) out.push_back({4, 4});
  }
  return out;
}

inline bool torsion_group_allowed(const TorsionGroup& t, const Int& d) {
  for (auto& g : allowed_torsion_groups(d))
    if (g == t) return true;
  return false;
}

struct TorsionData {
  TorsionGroup group;
  std::vector<CurvePoint<QuadElem>> generators;  // [G1 (order n1, if n1>1), G2 (order n2)]
  std::vector<CurvePoint<QuadElem>> all_points;
};

namespace torsion_detail {

// reduce a K-curve at a split odd prime under the embedding sqrt(d) -> s_e;
// returns nullopt at bad reduction
inline std::optional<Weierstrass<Fp>> reduce_K_curve(const Weierstrass<QuadElem>& E, uint64_t p,
                                                     uint64_t s_e) {
  const QuadElem* as[5] = {&E.a1, &E.a2, &E.a3, &E.a4, &E.a6};
  const int wt[5] = {1, 2, 3, 4, 6};
  long m = 0;
  for (int i = 0; i < 5; ++i) {
    long v = std::min(modp_detail::val_p(as[i]->a, p), modp_detail::val_p(as[i]->b, p));
    if (v < 0) m = std::max(m, (-v + wt[i] - 1) / wt[i]);
  }
  uint64_t c[5];
  try {
    for (int i = 0; i < 5; ++i) {
      Rat uw(1);
      for (long k = 0; k < (long)wt[i] * m; ++k) uw *= (unsigned long)p;
      uint64_t va = modp_detail::rat_mod_p(as[i]->a * uw, p);
      uint64_t vb = modp_detail::rat_mod_p(as[i]->b * uw, p);
      c[i] = (va + modp_detail::mulmod(vb, s_e, p)) % p;
    }
  } catch (domain_error&) {
    return std::nullopt;
  }
  Fp a1(c[0], p), a2(c[1], p), a3(c[2], p), a4(c[3], p), a6(c[4], p);
  try {
    return Weierstrass<Fp>(a1, a2, a3, a4, a6);
  } catch (domain_error&) {
    return std::nullopt;  // bad reduction
  }
}

// multiplicative torsion bound: gcd of group orders mod >= n_primes good odd
// (split, for genuine K-curves) primes
inline Int torsion_reduction_bound(const Weierstrass<QuadElem>& E, const Int& d,
                                   unsigned n_primes = 12) {
  Int B = 0;
  unsigned used = 0;
  for (uint32_t p : small_primes()) {
    if (p == 2) continue;
    if (used >= n_primes) break;
    if (d != 1) {
      if (mpz_divisible_ui_p(d.get_mpz_t(), p)) continue;
      if (jacobi(d, Int((unsigned long)p)) != 1) continue;
    }
    uint64_t s_e = 0;
    if (d != 1) {
      Int dp = d % Int((unsigned long)p);
      if (dp < 0) dp += (unsigned long)p;
      s_e = modp_detail::sqrt_mod_p(dp.get_ui(), p);
    }
    auto r1 = reduce_K_curve(E, p, s_e);
    if (!r1) continue;
    auto r2 = d == 1 ? r1 : reduce_K_curve(E, p, p - s_e);
    if (!r2) continue;
    B = gcd(B, Int((unsigned long)count_points(*r1)));
    B = gcd(B, Int((unsigned long)count_points(*r2)));
    ++used;
    if (B == 1) break;
  }
  return B == 0 ? Int(1) : B;
}

// decimal-digit bound for coordinates of torsion points: torsion points have
// canonical height zero, so their Weil height is bounded by the standard
// height-difference constant of the model; a generous multiple of the
// coefficient sizes covers it with a wide margin
inline unsigned torsion_digit_bound(const Weierstrass<QuadElem>& E) {
  size_t digits = 1;
  const QuadElem* as[5] = {&E.a1, &E.a2, &E.a3, &E.a4, &E.a6};
  for (auto* a : as) {
    for (const Rat* r : {&a->a, &a->b}) {
      digits = std::max(digits, mpz_sizeinbase(r->get_num().get_mpz_t(), 10));
      digits = std::max(digits, mpz_sizeinbase(r->get_den().get_mpz_t(), 10));
    }
  }
  return (unsigned)(4 * digits + 30);
}

inline std::vector<QuadElem> k_roots_of(const Poly<QuadElem>& f, const Int& d, unsigned digits) {
  if (f.degree() < 1) return {};
  if (d == 1) {
    // rational coefficients guaranteed; use the exact rational-root engine
    std::vector<Rat> cs;
    for (auto& c : f.c) cs.push_back(c.a);
    std::vector<QuadElem> out;
    for (auto& r : rational_roots(Poly<Rat>(std::move(cs)))) out.push_back(QuadElem(d, r, Rat(0)));
    return out;
  }
  return roots_in_K_bounded(f, QuadField(d), digits);
}

// all points of exact order m, sorted canonically (x, then y)
inline std::vector<CurvePoint<QuadElem>> points_of_exact_order(const Weierstrass<QuadElem>& E,
                                                               const Int& d, unsigned m,
                                                               DivisionPolyTable<QuadElem>& tab,
                                                               unsigned digits) {
  std::vector<CurvePoint<QuadElem>> out;
  if (m == 1) {
    out.push_back(CurvePoint<QuadElem>::at_infinity());
    return out;
  }
  std::vector<QuadElem> xs = m == 2 ? k_roots_of(tab.W, d, digits)
                                    : k_roots_of(tab.at(m), d, digits);
  std::sort(xs.begin(), xs.end(), quadelem_less);
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<unsigned> proper_prime_cofactors;  // m/q for each prime q | m
  for (unsigned q = 2; q <= m; ++q) {
    if (m % q != 0) continue;
    bool prime = true;
    for (unsigned t = 2; t * t <= q; ++t)
      if (q % t == 0) prime = false;
    if (prime) proper_prime_cofactors.push_back(m / q);
  }
  for (auto& x : xs) {
    QuadElem pcoef = E.a1 * x + E.a3;
    QuadElem qcoef = qr_zero_like(x) - (x * x * x + E.a2 * x * x + E.a4 * x + E.a6);
    auto ys = solve_quadratic_in_K(pcoef, qcoef);
    std::sort(ys.begin(), ys.end(), quadelem_less);
    for (auto& y : ys) {
      CurvePoint<QuadElem> P(x, y);
      if (!E.on_curve(P)) continue;
      if (!multiply(E, Int(m), P).infinity) continue;
      bool exact = true;
      for (unsigned cof : proper_prime_cofactors)
        if (multiply(E, Int(cof), P).infinity) exact = false;
      if (exact) out.push_back(P);
    }
  }
  return out;
}

inline bool point_less(const CurvePoint<QuadElem>& a, const CurvePoint<QuadElem>& b) {
  if (a.infinity != b.infinity) return a.infinity;  // infinity sorts first
  if (a.infinity) return false;
  if (!(a.x == b.x)) return quadelem_less(a.x, b.x);
  return quadelem_less(a.y, b.y);
}

}  // namespace torsion_detail

inline TorsionData torsion_over_K(const Weierstrass<QuadElem>& E, const Int& d) {
  using namespace torsion_detail;
  DivisionPolyTable<QuadElem> tab(E);
  Int B = torsion_reduction_bound(E, d);
  unsigned digits = torsion_digit_bound(E);

  auto candidates = allowed_torsion_groups(d);
  std::sort(candidates.begin(), candidates.end(), [](const TorsionGroup& a, const TorsionGroup& b) {
    if (a.order() != b.order()) return a.order() > b.order();
    return a.n2 > b.n2;
  });

  // cache exact-order point lists per order
  std::map<unsigned, std::vector<CurvePoint<QuadElem>>> cache;
  auto points_of_order = [&](unsigned m) -> const std::vector<CurvePoint<QuadElem>>& {
    auto it = cache.find(m);
    if (it == cache.end())
      it = cache.emplace(m, points_of_exact_order(E, d, m, tab, digits)).first;
    return it->second;
  };

  for (auto& cand : candidates) {
    if (!mpz_divisible_ui_p(B.get_mpz_t(), cand.order())) continue;
    auto& g2s = points_of_order(cand.n2);
    if (g2s.empty()) continue;
    CurvePoint<QuadElem> G2 = g2s.front();
    // subgroup generated by G2
    std::vector<CurvePoint<QuadElem>> span;
    {
      CurvePoint<QuadElem> acc = CurvePoint<QuadElem>::at_infinity();
      for (unsigned j = 0; j < cand.n2; ++j) {
        span.push_back(acc);
        acc = add(E, acc, G2);
      }
    }
    if (cand.n1 == 1) {
      std::sort(span.begin(), span.end(), point_less);
      return TorsionData{cand, {G2}, span};
    }
    auto in_span = [&](const CurvePoint<QuadElem>& P) {
      for (auto& S : span)
        if (S == P) return true;
      return false;
    };
    auto& g1s = points_of_order(cand.n1);
    for (auto& G1 : g1s) {
      if (in_span(G1)) continue;
      // build the full span and verify cardinality n1*n2
      std::vector<CurvePoint<QuadElem>> all;
      CurvePoint<QuadElem> rowbase = CurvePoint<QuadElem>::at_infinity();
      for (unsigned i = 0; i < cand.n1; ++i) {
        CurvePoint<QuadElem> acc = rowbase;
        for (unsigned j = 0; j < cand.n2; ++j) {
          all.push_back(acc);
          acc = add(E, acc, G2);
        }
        rowbase = add(E, rowbase, G1);
      }
      std::sort(all.begin(), all.end(), point_less);
      bool distinct = true;
      for (size_t i = 1; i < all.size(); ++i)
        if (all[i] == all[i - 1]) distinct = false;
      if (!distinct) continue;
      return TorsionData{cand, {G1, G2}, all};
    }
  }
  // the trivial candidate (1,1) always succeeds, so this is unreachable unless
  // arithmetic is inconsistent
  throw domain_error("torsion_over_K: internal consistency failure");
}

struct TorsionDataQ {
  TorsionGroup group;
  std::vector<CurvePoint<Rat>> generators;
  std::vector<CurvePoint<Rat>> all_points;
};

inline TorsionDataQ torsion_over_Q(const Weierstrass<Rat>& E) {
  auto data = torsion_over_K(curve_to_K(E, Int(1)), Int(1));
  auto down = [](const std::vector<CurvePoint<QuadElem>>& v) {
    std::vector<CurvePoint<Rat>> out;
    for (auto& P : v) {
      if (P.infinity) out.push_back(CurvePoint<Rat>::at_infinity());
      else out.push_back(CurvePoint<Rat>(P.x.a, P.y.a));
    }
    return out;
  };
  return TorsionDataQ{data.group, down(data.generators), down(data.all_points)};
}

// ---- extra 2-torsion field --------------------------------------------------
// For a curve with exactly one rational 2-torsion point, the other two live in
// Q(sqrt(disc of the quadratic cofactor)); returns the squarefree d.
inline Int extra_two_torsion_field(const Weierstrass<Rat>& E) {
  Poly<Rat> W(std::vector<Rat>{E.b6, 2 * E.b4, E.b2, Rat(4)});
  auto roots = rational_roots(W);
  if (roots.empty()) throw domain_error("extra_two_torsion_field: no rational 2-torsion");
  if (roots.size() >= 3) return Int(1);  // full 2-torsion already rational
  // divide out (x - e) for the unique rational root
  Poly<Rat> lin(std::vector<Rat>{-roots[0], Rat(1)});
  Poly<Rat> quad = poly_divmod(W, lin).first;
  // discriminant of q2 x^2 + q1 x + q0
  Rat q2 = quad.c[2], q1 = quad.c[1], q0 = quad.c[0];
  Rat disc = q1 * q1 - 4 * q2 * q0;
  if (disc == 0) throw domain_error("extra_two_torsion_field: degenerate quadratic");
  // squarefree part of a rational square class: numerator * denominator
  Int n = Int(disc.get_num()) * Int(disc.get_den());
  return squarefree_decompose(n).squarefree_part;
}

}  // namespace quadrank
