#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "quadrank/exactnum.hpp"
#include "test_util.hpp"

using namespace quadrank;

TEST_CASE("jacobi symbol on pinned values") {
  CHECK(jacobi(1, 3) == 1);
  CHECK(jacobi(2, 7) == 1);   // 3^2 = 2 mod 7
  CHECK(jacobi(5, 9) == 1);   // (5|3)^2 = (-1)^2
  CHECK(jacobi(2, 3) == -1);
  CHECK(jacobi(3, 9) == 0);
  CHECK(jacobi(-1, 5) == 1);
  CHECK(jacobi(-1, 7) == -1);
}

TEST_CASE("jacobi agrees with an exhaustive residue table for small prime moduli") {
  for (long p : {3L, 5L, 7L, 11L, 13L}) {
    for (long a = 0; a < p; ++a) {
      bool is_square = false;
      for (long s = 1; s < p; ++s) is_square = is_square || (s * s) % p == a;
      int expect = a % p == 0 ? 0 : (is_square ? 1 : -1);
      CHECK(jacobi(a, p) == expect);
    }
  }
}

TEST_CASE("jacobi rejects even or nonpositive moduli") {
  CHECK_THROWS_AS(jacobi(3, 4), domain_error);
  CHECK_THROWS_AS(jacobi(3, 0), domain_error);
  CHECK_THROWS_AS(jacobi(3, -5), domain_error);
}

TEST_CASE("jacobi is completely multiplicative in the first argument") {
  auto g = qt::rng(101);
  std::uniform_int_distribution<long> av(-2000, 2000), nv(1, 2000);
  int tested = 0;
  while (tested < 500) {
    long a = av(g), b = av(g), n = 2 * nv(g) + 1;
    CHECK(jacobi(Int(a) * Int(b), Int(n)) == jacobi(a, n) * jacobi(b, n));
    ++tested;
  }
}

TEST_CASE("squarefree_decompose on pinned values") {
  auto d12 = squarefree_decompose(12);
  CHECK(d12.squarefree_part == 3);
  CHECK(d12.square_root_of_cofactor == 2);
  auto dm4 = squarefree_decompose(-4);
  CHECK(dm4.squarefree_part == -1);
  CHECK(dm4.square_root_of_cofactor == 2);
  auto big = squarefree_decompose(Int("1065333545"));
  CHECK(big.squarefree_part == Int("1065333545"));
  CHECK(big.square_root_of_cofactor == 1);
  CHECK_THROWS_AS(squarefree_decompose(0), domain_error);
}

TEST_CASE("squarefree_decompose round-trips and yields squarefree parts") {
  auto g = qt::rng(202);
  std::uniform_int_distribution<long> v(-100000, 100000);
  int tested = 0;
  while (tested < 200) {
    long n = v(g);
    if (n == 0) continue;
    auto d = squarefree_decompose(n);
    CHECK(d.squarefree_part * d.square_root_of_cofactor * d.square_root_of_cofactor == n);
    CHECK(d.square_root_of_cofactor > 0);
    // squarefree: decomposing the squarefree part again is the identity
    auto again = squarefree_decompose(d.squarefree_part);
    CHECK(again.squarefree_part == d.squarefree_part);
    CHECK(again.square_root_of_cofactor == 1);
    ++tested;
  }
}

TEST_CASE("rationals are always canonical lowest terms") {
  Rat r = make_rat(6, -4);
  CHECK(r.get_num() == -3);
  CHECK(r.get_den() == 2);
  CHECK(rat_to_string(r) == "-3/2");
  CHECK(parse_rat("-3/2") == r);
  CHECK(parse_rat("7") == Rat(7));
  CHECK(rat_to_string(parse_rat("10/5")) == "2");
  auto g = qt::rng(303);
  std::uniform_int_distribution<long> v(-500, 500);
  for (int i = 0; i < 200; ++i) {
    long a = v(g), b = v(g), c = v(g), d = v(g);
    if (b == 0 || d == 0) continue;
    Rat x = make_rat(a, b), y = make_rat(c, d);
    for (Rat z : {Rat(x + y), Rat(x - y), Rat(x * y)}) {
      Int gg;
      mpz_gcd(gg.get_mpz_t(), z.get_num().get_mpz_t(), z.get_den().get_mpz_t());
      CHECK(gg == 1);
      CHECK(z.get_den() >= 1);
    }
  }
}

TEST_CASE("rat_is_square") {
  Rat root;
  CHECK(rat_is_square(make_rat(9, 4), &root));
  CHECK(root == make_rat(3, 2));
  CHECK(!rat_is_square(Rat(2)));
  CHECK(!rat_is_square(Rat(-1)));
  CHECK(rat_is_square(Rat(0), &root));
  CHECK(root == 0);
}
