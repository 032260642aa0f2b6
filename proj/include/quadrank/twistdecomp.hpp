#pragma once

// Point-level machinery of the rank decomposition
// rank(E(Q(sqrt d))) = rank(E(Q)) + rank(E^(d)(Q)):
// the K-isomorphism between E and its twist, the P +- sigma(P) descent, and
// rank-lower-bound bookkeeping.

#include "quadrank/torsion.hpp"

namespace quadrank {

inline CurvePoint<QuadElem> conjugate_point(const CurvePoint<QuadElem>& P) {
  if (P.infinity) return P;
  return CurvePoint<QuadElem>(P.x.conjugate(), P.y.conjugate());
}

// E: y^2 = x^3 + Ax + B over Q together with its d-twist Y^2 = X^3 + Ad^2 X + Bd^3
struct TwistPair {
  Weierstrass<Rat> base;   // short model over Q
  Weierstrass<Rat> twist;  // short model over Q
  Int d;                   // squarefree, nonzero

  TwistPair(const Weierstrass<Rat>& base_short, const Int& dd)
      : base(base_short), twist(quadratic_twist(base_short, dd).curve), d(dd) {
    if (!(base_short.a1 == 0 && base_short.a2 == 0 && base_short.a3 == 0))
      throw domain_error("TwistPair: base curve must be a short model");
    if (squarefree_decompose(d).square_root_of_cofactor != 1)
      throw domain_error("TwistPair: d must be squarefree");
  }

  // (X, Y) on the twist  ->  (X/d, (Y/d^2) sqrt d) on E over K
  CurvePoint<QuadElem> to_K(const CurvePoint<Rat>& P) const {
    if (!twist.on_curve(P)) throw domain_error("twist_point_to_K: point not on twist");
    if (P.infinity) return CurvePoint<QuadElem>::at_infinity();
    if (d == 1) return CurvePoint<QuadElem>(QuadElem(d, P.x, Rat(0)), QuadElem(d, P.y, Rat(0)));
    Rat dr(d);
    return CurvePoint<QuadElem>(QuadElem(d, P.x / dr, Rat(0)),
                                QuadElem(d, Rat(0), P.y / (dr * dr)));
  }

  // inverse: (x, y sqrt d) with x, y rational  ->  (dx, d^2 y) on the twist
  CurvePoint<Rat> from_K(const CurvePoint<QuadElem>& P) const {
    auto EK = curve_to_K(base, d);
    if (!EK.on_curve(P)) throw domain_error("twist_point_from_K: point not on E over K");
    if (P.infinity) return CurvePoint<Rat>::at_infinity();
    if (d == 1) {
      if (P.x.b != 0 || P.y.b != 0) throw domain_error("twist_point_from_K: point not rational");
      return CurvePoint<Rat>(P.x.a, P.y.a);
    }
    if (P.x.b != 0 || P.y.a != 0)
      throw domain_error("twist_point_from_K: point is not of the form (x, y*sqrt(d))");
    Rat dr(d);
    return CurvePoint<Rat>(P.x.a * dr, P.y.b * dr * dr);
  }
};

struct DescentResult {
  CurvePoint<Rat> p_plus;           // on the base short model, P + sigma(P)
  CurvePoint<Rat> p_minus;          // on the twist, from P - sigma(P)
  CurvePoint<QuadElem> defect;      // 2-torsion discrepancy in the 2P identity
};

// Splits a K-point on a rational short-model curve into its invariant and
// anti-invariant components. Exactness contract:
//   2P = p_plus (+) to_K(p_minus) (+) defect,  with 2*defect = O.
inline DescentResult descend(const TwistPair& T, const CurvePoint<QuadElem>& P) {
  auto EK = curve_to_K(T.base, T.d);
  if (!EK.on_curve(P)) throw domain_error("descend: point not on E over K");
  CurvePoint<QuadElem> sP = conjugate_point(P);
  CurvePoint<QuadElem> plusK = add(EK, P, sP);
  CurvePoint<QuadElem> minusK = add(EK, P, negate(EK, sP));
  // invariant part is rational
  CurvePoint<Rat> p_plus;
  if (plusK.infinity) p_plus = CurvePoint<Rat>::at_infinity();
  else {
    if (plusK.x.b != 0 || plusK.y.b != 0)
      throw domain_error("descend: invariant component not rational (arithmetic bug)");
    p_plus = CurvePoint<Rat>(plusK.x.a, plusK.y.a);
  }
  CurvePoint<Rat> p_minus = T.from_K(minusK);
  // exact verification of the 2P identity, tracking the 2-torsion defect
  CurvePoint<QuadElem> twoP = multiply(EK, 2, P);
  CurvePoint<QuadElem> recomposed = add(EK, plusK, minusK);
  CurvePoint<QuadElem> defect = add(EK, twoP, negate(EK, recomposed));
  if (!multiply(EK, 2, defect).infinity)
    throw domain_error("descend: defect is not 2-torsion (arithmetic bug)");
  return DescentResult{p_plus, p_minus, defect};
}

struct RankLedger {
  std::string curve_id;
  Int field_d;
  int rank_lb_Q_base = 0;
  int rank_lb_Q_twist = 0;
  int rank_lb_K = 0;
  std::string provenance;
};

}  // namespace quadrank
