#pragma once

// Long Weierstrass models over an exact field, standard invariants, the
// chord-tangent group law, short-model transformations, quadratic twists and
// Tate normal forms.

#include "quadrank/quadfield.hpp"

namespace quadrank {

// field constant constructors, extensible per coefficient type
inline Rat qr_from_int(const Rat&, long n) { return Rat(n); }
inline QuadElem qr_from_int(const QuadElem& like, long n) { return q_int(like, n); }
inline std::string qr_to_string(const Rat& r) { return rat_to_string(r); }
inline std::string qr_to_string(const QuadElem& x) { return quadelem_to_string(x); }

template <class F>
struct CurvePoint {
  bool infinity = true;
  F x{}, y{};

  CurvePoint() = default;
  CurvePoint(F xx, F yy) : infinity(false), x(std::move(xx)), y(std::move(yy)) {}
  static CurvePoint at_infinity() { return CurvePoint(); }
  bool operator==(const CurvePoint& o) const {
    if (infinity || o.infinity) return infinity == o.infinity;
    return x == o.x && y == o.y;
  }
};

template <class F>
struct Weierstrass {
  F a1, a2, a3, a4, a6;
  // cached invariants
  F b2, b4, b6, b8, c4, c6, disc, j;

  Weierstrass(F A1, F A2, F A3, F A4, F A6)
      : a1(std::move(A1)), a2(std::move(A2)), a3(std::move(A3)), a4(std::move(A4)),
        a6(std::move(A6)) {
    auto k = [&](long n) { return qr_from_int(a1, n); };
    b2 = a1 * a1 + k(4) * a2;
    b4 = k(2) * a4 + a1 * a3;
    b6 = a3 * a3 + k(4) * a6;
    b8 = a1 * a1 * a6 + k(4) * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
    c4 = b2 * b2 - k(24) * b4;
    c6 = qr_zero_like(b2) - b2 * b2 * b2 + k(36) * b2 * b4 - k(216) * b6;
    disc = qr_zero_like(b2) - b2 * b2 * b8 - k(8) * b4 * b4 * b4 - k(27) * b6 * b6 +
           k(9) * b2 * b4 * b6;
    if (qr_is_zero(disc)) throw domain_error("singular curve: discriminant is zero");
    j = c4 * c4 * c4 / disc;
  }

  bool on_curve(const CurvePoint<F>& P) const {
    if (P.infinity) return true;
    F lhs = P.y * P.y + a1 * P.x * P.y + a3 * P.y;
    F rhs = P.x * P.x * P.x + a2 * P.x * P.x + a4 * P.x + a6;
    return qr_is_zero(lhs - rhs);
  }

  bool operator==(const Weierstrass& o) const {
    return a1 == o.a1 && a2 == o.a2 && a3 == o.a3 && a4 == o.a4 && a6 == o.a6;
  }
};

template <class F>
CurvePoint<F> negate(const Weierstrass<F>& E, const CurvePoint<F>& P) {
  if (P.infinity) return P;
  return CurvePoint<F>(P.x, qr_zero_like(P.y) - P.y - E.a1 * P.x - E.a3);
}

template <class F>
CurvePoint<F> add(const Weierstrass<F>& E, const CurvePoint<F>& P, const CurvePoint<F>& Q) {
  if (!E.on_curve(P) || !E.on_curve(Q)) throw domain_error("add: point not on curve");
  if (P.infinity) return Q;
  if (Q.infinity) return P;
  auto k = [&](long n) { return qr_from_int(E.a1, n); };
  F lambda, nu;
  if (P.x == Q.x) {
    if (Q == negate(E, P)) return CurvePoint<F>::at_infinity();
    // doubling
    F denom = k(2) * P.y + E.a1 * P.x + E.a3;
    lambda = (k(3) * P.x * P.x + k(2) * E.a2 * P.x + E.a4 - E.a1 * P.y) / denom;
    nu = (qr_zero_like(P.x) - P.x * P.x * P.x + E.a4 * P.x + k(2) * E.a6 - E.a3 * P.y) / denom;
  } else {
    F dx = Q.x - P.x;
    lambda = (Q.y - P.y) / dx;
    nu = (P.y * Q.x - Q.y * P.x) / dx;
  }
  F x3 = lambda * lambda + E.a1 * lambda - E.a2 - P.x - Q.x;
  F y3 = qr_zero_like(x3) - (lambda + E.a1) * x3 - nu - E.a3;
  return CurvePoint<F>(x3, y3);
}

template <class F>
CurvePoint<F> multiply(const Weierstrass<F>& E, Int n, const CurvePoint<F>& P0) {
  if (!E.on_curve(P0)) throw domain_error("multiply: point not on curve");
  CurvePoint<F> P = P0;
  if (n < 0) {
    P = negate(E, P);
    n = -n;
  }
  CurvePoint<F> acc = CurvePoint<F>::at_infinity();
  while (n > 0) {
    if (mpz_odd_p(n.get_mpz_t())) acc = add(E, acc, P);
    n >>= 1;
    if (n > 0) P = add(E, P, P);
  }
  return acc;
}

// ---- short model ------------------------------------------------------------
// X = u^2 (x + b2/12), Y = u^3 (y + (a1 x + a3)/2) maps E to
// Y^2 = X^3 - (c4 u^4 / 48) X - (c6 u^6 / 864). A curve that is already short
// keeps u = 1 (identity maps); otherwise u = 6, giving the integral
// X = 36x + 3 b2, Y = 108 (2y + a1 x + a3) transformation with A = -27 c4,
// B = -54 c6.
template <class F>
struct ShortModel {
  Weierstrass<F> curve;  // [0,0,0,A,B]
  long u;                // scaling of the coordinate maps
  F b2, a1, a3;          // data needed to map back

  CurvePoint<F> forward(const CurvePoint<F>& P) const {
    if (P.infinity) return P;
    auto k = [&](long n) { return qr_from_int(b2, n); };
    F x1 = P.x + b2 / k(12);
    F y1 = P.y + (a1 * P.x + a3) / k(2);
    return CurvePoint<F>(k(u * u) * x1, k(u * u * u) * y1);
  }
  CurvePoint<F> backward(const CurvePoint<F>& P) const {
    if (P.infinity) return P;
    auto k = [&](long n) { return qr_from_int(b2, n); };
    F x = P.x / k(u * u) - b2 / k(12);
    F y = P.y / k(u * u * u) - (a1 * x + a3) / k(2);
    return CurvePoint<F>(x, y);
  }
};

template <class F>
ShortModel<F> to_short_model(const Weierstrass<F>& E) {
  auto k = [&](long n) { return qr_from_int(E.a1, n); };
  F zero = qr_zero_like(E.a1);
  bool already_short = qr_is_zero(E.a1) && qr_is_zero(E.a2) && qr_is_zero(E.a3);
  long u = already_short ? 1 : 6;
  F u4 = k(u * u * u * u), u6 = k(u * u * u * u * u * u);
  F A = zero - E.c4 * u4 / k(48);
  F B = zero - E.c6 * u6 / k(864);
  return ShortModel<F>{Weierstrass<F>(zero, zero, zero, A, B), u, E.b2, E.a1, E.a3};
}

// ---- quadratic twist (over Q) ----------------------------------------------
struct TwistResult {
  Weierstrass<Rat> curve;
  Int d_used;              // the squarefree d actually applied
  bool d_was_normalized;   // input d had a square factor
};

inline TwistResult quadratic_twist(const Weierstrass<Rat>& E, const Int& d_in) {
  if (d_in == 0) throw domain_error("quadratic_twist: d must be nonzero");
  auto sf = squarefree_decompose(d_in);
  Int d = sf.squarefree_part;
  auto S = to_short_model(E);
  Rat A = S.curve.a4, B = S.curve.a6;
  Rat d2 = Rat(d) * Rat(d), d3 = d2 * Rat(d);
  return TwistResult{Weierstrass<Rat>(Rat(0), Rat(0), Rat(0), A * d2, B * d3), d,
                     sf.square_root_of_cofactor != 1};
}

// ---- Tate normal form -------------------------------------------------------
template <class F>
Weierstrass<F> tate_normal(const F& b, const F& c) {
  F one = qr_from_int(b, 1);
  F zero = qr_zero_like(b);
  return Weierstrass<F>(one - c, zero - b, zero - b, zero, zero);
}

// ---- printing / parsing -----------------------------------------------------
template <class F>
std::string curve_to_string(const Weierstrass<F>& E) {
  return "[" + qr_to_string(E.a1) + "," + qr_to_string(E.a2) + "," + qr_to_string(E.a3) + "," +
         qr_to_string(E.a4) + "," + qr_to_string(E.a6) + "]";
}

inline std::vector<std::string> split_bracket_list(const std::string& s) {
  std::string body = s;
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']')
    body = body.substr(1, body.size() - 2);
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : body) {
    if (ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (!isspace((unsigned char)ch)) {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline Weierstrass<Rat> parse_curve_q(const std::string& s) {
  auto parts = split_bracket_list(s);
  if (parts.size() != 5) throw domain_error("curve literal needs 5 coefficients: " + s);
  return Weierstrass<Rat>(parse_rat(parts[0]), parse_rat(parts[1]), parse_rat(parts[2]),
                          parse_rat(parts[3]), parse_rat(parts[4]));
}

inline Weierstrass<QuadElem> parse_curve_k(const std::string& s, const Int& d) {
  auto parts = split_bracket_list(s);
  if (parts.size() != 5) throw domain_error("curve literal needs 5 coefficients: " + s);
  return Weierstrass<QuadElem>(parse_quadelem(parts[0], d), parse_quadelem(parts[1], d),
                               parse_quadelem(parts[2], d), parse_quadelem(parts[3], d),
                               parse_quadelem(parts[4], d));
}

// lift a rational curve into K
inline Weierstrass<QuadElem> curve_to_K(const Weierstrass<Rat>& E, const Int& d) {
  auto lift = [&](const Rat& r) { return QuadElem(d, r, Rat(0)); };
  return Weierstrass<QuadElem>(lift(E.a1), lift(E.a2), lift(E.a3), lift(E.a4), lift(E.a6));
}

}  // namespace quadrank
