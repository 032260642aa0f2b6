#pragma once

// Arbitrary-precision integers/rationals (GMP-backed) and the number-theoretic
// utilities the rest of the library is built on: Jacobi symbols, primality,
// bounded factorization and squarefree decomposition.

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace quadrank {

using Int = mpz_class;
using Rat = mpq_class;

struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an integer resists factorization within the configured budget.
// Carries the partial factorization and the unfactored cofactor.
struct unfactored_error : std::runtime_error {
  std::map<Int, unsigned> partial;
  Int cofactor;
  unfactored_error(std::map<Int, unsigned> part, Int cof)
      : std::runtime_error("factorization budget exceeded; unfactored cofactor with " +
                           std::to_string(mpz_sizeinbase(cof.get_mpz_t(), 10)) + " digits"),
        partial(std::move(part)),
        cofactor(std::move(cof)) {}
};

inline int jacobi(const Int& a, const Int& n) {
  if (n <= 0 || mpz_even_p(n.get_mpz_t()))
    throw domain_error("jacobi: modulus must be odd and positive");
  return mpz_jacobi(a.get_mpz_t(), n.get_mpz_t());
}

inline int jacobi(long a, long n) { return jacobi(Int(a), Int(n)); }

inline bool is_probable_prime(const Int& n) {
  return mpz_probab_prime_p(n.get_mpz_t(), 32) != 0;
}

// Primes below `limit` by Eratosthenes. limit is capped to keep memory sane.
inline const std::vector<uint32_t>& small_primes() {
  static const std::vector<uint32_t> table = [] {
    const uint32_t limit = 1u << 20;
    std::vector<bool> comp(limit, false);
    std::vector<uint32_t> ps;
    for (uint32_t i = 2; i < limit; ++i) {
      if (!comp[i]) {
        ps.push_back(i);
        for (uint64_t j = uint64_t(i) * i; j < limit; j += i) comp[j] = true;
      }
    }
    return ps;
  }();
  return table;
}

namespace detail {

// Pollard rho (Brent variant). Returns a nontrivial factor or nullopt when the
// iteration budget runs out.
inline std::optional<Int> pollard_rho(const Int& n, unsigned long budget, unsigned long seed) {
  if (mpz_even_p(n.get_mpz_t())) return Int(2);
  gmp_randclass rng(gmp_randinit_default);
  rng.seed(seed);
  for (int attempt = 0; attempt < 16; ++attempt) {
    Int c = rng.get_z_range(n - 3) + 1;
    Int y = rng.get_z_range(n - 2) + 1;
    Int g = 1, q = 1, x, ys;
    unsigned long r = 1, iters = 0;
    const unsigned long m = 128;
    while (g == 1) {
      x = y;
      for (unsigned long i = 0; i < r; ++i) y = (y * y + c) % n;
      unsigned long k = 0;
      while (k < r && g == 1) {
        ys = y;
        unsigned long lim = std::min(m, r - k);
        for (unsigned long i = 0; i < lim; ++i) {
          y = (y * y + c) % n;
          q = q * (x - y) % n;
        }
        g = gcd(q, n);
        k += m;
        iters += lim;
        if (iters > budget) return std::nullopt;
      }
      r *= 2;
    }
    if (g == n) {
      // backtrack
      do {
        ys = (ys * ys + c) % n;
        g = gcd(Int(x - ys), n);
      } while (g == 1);
    }
    if (g != n) return abs(g);
  }
  return std::nullopt;
}

inline void factor_rec(Int n, unsigned mult, std::map<Int, unsigned>& out, unsigned long rho_budget) {
  if (n == 1) return;
  if (is_probable_prime(n)) {
    out[n] += mult;
    return;
  }
  // perfect powers peel off cheaply and are common in discriminants
  if (mpz_perfect_power_p(n.get_mpz_t())) {
    for (unsigned k = 2; k <= mpz_sizeinbase(n.get_mpz_t(), 2); ++k) {
      Int root;
      if (mpz_root(root.get_mpz_t(), n.get_mpz_t(), k)) {
        factor_rec(root, mult * k, out, rho_budget);
        return;
      }
    }
  }
  auto f = pollard_rho(n, rho_budget, 0xC0FFEEul + mult);
  if (!f) throw unfactored_error(out, n);
  factor_rec(*f, mult, out, rho_budget);
  factor_rec(Int(n / *f), mult, out, rho_budget);
}

}  // namespace detail

struct FactorOptions {
  uint32_t trial_limit = 1000000;
  unsigned long rho_budget = 40000000;  // rho iterations per composite
};

// Full factorization of |n| within budget; throws unfactored_error past it.
inline std::map<Int, unsigned> factorize(Int n, const FactorOptions& opt = {}) {
  if (n == 0) throw domain_error("factorize: n must be nonzero");
  n = abs(n);
  std::map<Int, unsigned> out;
  for (uint32_t p : small_primes()) {
    if (p > opt.trial_limit) break;
    if (Int(p) * p > n) break;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      unsigned e = 0;
      while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
        mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
        ++e;
      }
      out[Int(p)] = e;
    }
  }
  if (n > 1) {
    try {
      detail::factor_rec(n, 1, out, opt.rho_budget);
    } catch (unfactored_error&) {
      throw unfactored_error(out, n);
    }
  }
  return out;
}

struct SquarefreeDecomp {
  Int squarefree_part;          // nonzero, no repeated prime factor, carries sign of input
  Int square_root_of_cofactor;  // positive; input = squarefree_part * cofactor_root^2
};

inline SquarefreeDecomp squarefree_decompose(const Int& n, const FactorOptions& opt = {}) {
  if (n == 0) throw domain_error("squarefree_decompose: n must be nonzero");
  auto fac = factorize(n, opt);
  Int s = n < 0 ? -1 : 1, r = 1;
  for (auto& [p, e] : fac) {
    if (e & 1) s *= p;
    for (unsigned i = 0; i < e / 2; ++i) r *= p;
  }
  return {s, r};
}

// ---- Rat helpers ------------------------------------------------------------

inline Rat make_rat(const Int& num, const Int& den) {
  if (den == 0) throw domain_error("rational with zero denominator");
  Rat r(num, den);
  r.canonicalize();
  return r;
}

inline std::string rat_to_string(const Rat& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

// Parses "p" or "p/q"; canonical lowest terms on output.
inline Rat parse_rat(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rat(Int(s));
    return make_rat(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
  } catch (std::invalid_argument&) {
    throw domain_error("cannot parse rational: '" + s + "'");
  }
}

// true iff r is the square of a rational; if so *root is the nonnegative root
inline bool rat_is_square(const Rat& r, Rat* root = nullptr) {
  if (r < 0) return false;
  if (!mpz_perfect_square_p(r.get_num().get_mpz_t())) return false;
  if (!mpz_perfect_square_p(r.get_den().get_mpz_t())) return false;
  if (root) {
    Int n, d;
    mpz_sqrt(n.get_mpz_t(), r.get_num().get_mpz_t());
    mpz_sqrt(d.get_mpz_t(), r.get_den().get_mpz_t());
    *root = make_rat(n, d);
  }
  return true;
}

inline Int rat_height_max(const Rat& r) {
  // max(|num|, den), the quantity entering the logarithmic Weil height
  Int n = abs(r.get_num());
  return n > r.get_den() ? n : Int(r.get_den());
}

}  // namespace quadrank
