#pragma once

// Mestre-Nagao indicator sums over quadratic twist families and the
// high-throughput twist sieve built on precomputed a_p tables. Sums are
// heuristic rank indicators only; the sieve never claims ranks.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "quadrank/modp.hpp"

namespace quadrank {

enum class MnVariant { S0, S1 };

inline std::string mn_variant_name(MnVariant v) { return v == MnVariant::S0 ? "S0" : "S1"; }

struct SieveConfig {
  std::string curve_id;  // must match the table's curve id
  uint64_t pmax = 100;
  long long d_min = 2, d_max = 100;
  size_t top_k = 10;
  double min_sum = -std::numeric_limits<double>::infinity();
  MnVariant variant = MnVariant::S1;
  bool fundamental_only = false;  // default: squarefree enumeration
};

struct SieveHit {
  long long d;
  double sum;
};

// total order: sum descending, then |d| ascending, then positive before negative
inline bool hit_before(const SieveHit& a, const SieveHit& b) {
  if (a.sum != b.sum) return a.sum > b.sum;
  long long aa = a.d < 0 ? -a.d : a.d, ab = b.d < 0 ? -b.d : b.d;
  if (aa != ab) return aa < ab;
  return a.d > b.d;
}

struct MnSumResult {
  double sum = 0.0;
  unsigned skipped_primes = 0;  // p = 2, p | d, or bad reduction
};

namespace sieve_detail {

// Hot path: assumes d squarefree and nonzero. Skips p = 2, p | d and primes
// flagged bad in the table; for the rest a_p(E^(d)) = (d|p) a_p(E).
inline MnSumResult mn_sum_core(const Int& d, const ApTable& table, MnVariant variant,
                               uint64_t pmax) {
  MnSumResult r;
  const mpz_srcptr dz = d.get_mpz_t();
  for (const ApEntry& e : table.entries) {
    if (e.p > pmax) break;
    if (e.p == 2 || !e.good || mpz_divisible_ui_p(dz, e.p)) {
      ++r.skipped_primes;
      continue;
    }
    int chi = mpz_kronecker_ui(dz, e.p);
    double ap = double(chi * e.ap);
    double N = double(e.p) + 1.0 - ap;
    double lp = std::log(double(e.p));
    if (variant == MnVariant::S1)
      r.sum += (1.0 - (double(e.p) - 1.0) / N) * lp;
    else
      r.sum += ((2.0 - ap) / N) * lp;
  }
  return r;
}

}  // namespace sieve_detail

inline MnSumResult mn_sum_detail(const Weierstrass<Rat>& E, const Int& d, const ApTable& table,
                                 MnVariant variant, uint64_t pmax = 0) {
  if (d == 0) throw domain_error("mn_sum: d must be nonzero");
  if (squarefree_decompose(d).square_root_of_cofactor != 1)
    throw domain_error("mn_sum: d must be squarefree");
  if (curve_cache_id(E) != table.curve_id)
    throw domain_error("mn_sum: a_p table belongs to a different curve");
  if (pmax == 0) pmax = table.pmax;
  if (pmax > table.pmax) throw domain_error("mn_sum: table does not cover pmax");
  return sieve_detail::mn_sum_core(d, table, variant, pmax);
}

inline double mn_sum(const Weierstrass<Rat>& E, const Int& d, const ApTable& table,
                     MnVariant variant, uint64_t pmax = 0) {
  return mn_sum_detail(E, d, table, variant, pmax).sum;
}

// Slow-path oracle: recompute each twisted trace by reducing a model of E^(d)
// mod p and counting points directly. The model used completes the square,
// y^2 = x^3 + (b2/4) d x^2 + (b4/2) d^2 x + (b6/4) d^3, whose only extra bad
// primes over those of E divide 2d -- both always skipped.
inline MnSumResult mn_sum_slow(const Weierstrass<Rat>& E, const Int& d, MnVariant variant,
                               uint64_t pmax) {
  if (d == 0) throw domain_error("mn_sum_slow: d must be nonzero");
  if (squarefree_decompose(d).square_root_of_cofactor != 1)
    throw domain_error("mn_sum_slow: d must be squarefree");
  Rat dr(d);
  Weierstrass<Rat> twisted(Rat(0), E.b2 / 4 * dr, Rat(0), E.b4 / 2 * dr * dr,
                           E.b6 / 4 * dr * dr * dr);
  MnSumResult r;
  for (uint32_t p : small_primes()) {
    if (p > pmax) break;
    bool divides_d = mpz_divisible_ui_p(d.get_mpz_t(), p);
    if (p == 2 || divides_d || !reduce_mod_p(E, p).good) {
      ++r.skipped_primes;
      continue;
    }
    auto red = reduce_mod_p(twisted, p);
    if (!red.good) throw domain_error("mn_sum_slow: unexpected bad twisted reduction");
    int64_t ap = trace_of_frobenius(*red.curve);
    double N = double(p) + 1.0 - double(ap);
    double lp = std::log(double(p));
    if (variant == MnVariant::S1)
      r.sum += (1.0 - (double(p) - 1.0) / N) * lp;
    else
      r.sum += ((2.0 - double(ap)) / N) * lp;
  }
  return r;
}

// ---- candidate enumeration ---------------------------------------------------

// fundamental discriminant: d = 1 mod 4 squarefree (d != 1), or d = 4m with m
// squarefree and m = 2, 3 mod 4
inline bool is_fundamental_discriminant(long long d) {
  auto mod4 = [](long long v) { return ((v % 4) + 4) % 4; };
  auto sqfree = [](long long v) {
    return squarefree_decompose(Int((long)v)).square_root_of_cofactor == 1;
  };
  if (d == 1 || d == 0) return false;
  if (mod4(d) == 1) return sqfree(d);
  if (mod4(d) == 0) {
    long long m = d / 4;
    return (mod4(m) == 2 || mod4(m) == 3) && sqfree(m);
  }
  return false;
}

namespace sieve_detail {

constexpr long long kChunk = 1 << 16;  // candidates per checkpointable chunk

// Marks non-squarefree values in [lo, lo + n): mark[i] set when lo + i has a
// square prime factor. Complete because any square divisor of v has a prime
// square divisor <= v.
inline void mark_non_squarefree(long long lo, long long n, std::vector<bool>& mark) {
  mark.assign((size_t)n, false);
  long long hi_abs = std::max(std::llabs(lo), std::llabs(lo + n - 1));
  for (uint32_t p : small_primes()) {
    long long p2 = (long long)p * p;
    if (p2 > hi_abs) break;
    // first multiple of p2 that is >= lo
    long long q = lo / p2;
    if (q * p2 < lo) ++q;
    for (long long v = q * p2; v < lo + n; v += p2) mark[(size_t)(v - lo)] = true;
  }
}

inline void merge_top(std::vector<SieveHit>& top, std::vector<SieveHit>& incoming,
                      size_t top_k) {
  std::sort(incoming.begin(), incoming.end(), hit_before);
  std::vector<SieveHit> merged;
  merged.reserve(std::min(top.size() + incoming.size(), top_k));
  std::merge(top.begin(), top.end(), incoming.begin(), incoming.end(),
             std::back_inserter(merged), hit_before);
  if (merged.size() > top_k) merged.resize(top_k);
  top = std::move(merged);
}

}  // namespace sieve_detail

// configuration identity string: reproducibility header line and checkpoint key
inline std::string sieve_config_key(const SieveConfig& c) {
  char buf[256];
  snprintf(buf, sizeof buf,
           "curve=%s pmax=%llu dmin=%lld dmax=%lld top=%zu min_sum=%a variant=%s filter=%s",
           c.curve_id.c_str(), (unsigned long long)c.pmax, c.d_min, c.d_max, c.top_k,
           c.min_sum, mn_variant_name(c.variant).c_str(),
           c.fundamental_only ? "fundamental" : "squarefree");
  return buf;
}

// FNV-1a over the serialized table, for the reproducibility header
inline std::string ap_table_hash(const ApTable& t) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const auto& e : t.entries) {
    mix(e.p);
    mix((uint64_t)e.ap);
    mix(e.good ? 1 : 0);
  }
  char buf[32];
  snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

namespace sieve_detail {

struct Checkpoint {
  long long chunks_done = 0;
  std::vector<SieveHit> top;
};

inline std::optional<Checkpoint> load_checkpoint(const std::string& path,
                                                 const std::string& key) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != "# sieve checkpoint v1") return std::nullopt;
  if (!std::getline(in, line) || line != "# " + key)
    throw domain_error("checkpoint does not match this sieve configuration: " + path);
  Checkpoint ck;
  std::string word;
  while (in >> word) {
    if (word == "chunks_done") {
      in >> ck.chunks_done;
    } else if (word == "hit") {
      SieveHit h{};
      std::string sum_hex;
      in >> h.d >> sum_hex;
      h.sum = std::strtod(sum_hex.c_str(), nullptr);
      ck.top.push_back(h);
    } else {
      throw domain_error("malformed checkpoint: " + path);
    }
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const std::string& key,
                            const Checkpoint& ck) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw domain_error("cannot write checkpoint: " + tmp);
    out << "# sieve checkpoint v1\n# " << key << "\n";
    out << "chunks_done " << ck.chunks_done << "\n";
    char hex[40];
    for (const auto& h : ck.top) {
      snprintf(hex, sizeof hex, "%a", h.sum);
      out << "hit " << h.d << " " << hex << "\n";
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw domain_error("cannot finalize checkpoint: " + path);
}

}  // namespace sieve_detail

// Enumerates eligible d in [d_min, d_max], scores each with the fast-path sum
// and keeps a running top_k. Chunks of 2^16 candidates are processed in order
// (workers parallelize within a batch of chunks; the in-order merge keeps the
// result independent of the worker count) and checkpointed when a path is given.
inline std::vector<SieveHit> run_sieve(const SieveConfig& cfg, const ApTable& table,
                                       unsigned jobs = 1,
                                       const std::string& checkpoint_path = "") {
  using namespace sieve_detail;
  if (cfg.d_min > cfg.d_max) throw domain_error("run_sieve: d_min > d_max");
  if (cfg.pmax < 2 || cfg.top_k < 1) throw domain_error("run_sieve: pmax >= 2, top_k >= 1");
  if (table.pmax < cfg.pmax) throw domain_error("run_sieve: table does not cover pmax");
  if (!cfg.curve_id.empty() && cfg.curve_id != table.curve_id)
    throw domain_error("run_sieve: table belongs to a different curve");
  long long hi_abs = std::max(std::llabs(cfg.d_min), std::llabs(cfg.d_max));
  if (hi_abs >= (1ll << 40))
    throw domain_error("run_sieve: |d| >= 2^40 exceeds the squarefree sieve bound");
  if (jobs < 1) jobs = 1;

  const std::string key = sieve_config_key(cfg);
  Checkpoint ck;
  if (!checkpoint_path.empty()) {
    if (auto prev = load_checkpoint(checkpoint_path, key)) ck = *prev;
  }

  long long span = cfg.d_max - cfg.d_min + 1;
  long long nchunks = (span + kChunk - 1) / kChunk;

  auto score_chunk = [&](long long ci) {
    long long lo = cfg.d_min + ci * kChunk;
    long long n = std::min(kChunk, cfg.d_max - lo + 1);
    std::vector<bool> mark;
    mark_non_squarefree(lo, n, mark);
    std::vector<SieveHit> hits;
    for (long long i = 0; i < n; ++i) {
      long long d = lo + i;
      if (d == 0 || mark[(size_t)i]) continue;
      if (cfg.fundamental_only && !is_fundamental_discriminant(d)) continue;
      MnSumResult r = mn_sum_core(Int((long)d), table, cfg.variant, cfg.pmax);
      if (r.sum >= cfg.min_sum) hits.push_back(SieveHit{d, r.sum});
    }
    return hits;
  };

  for (long long base = ck.chunks_done; base < nchunks; base += jobs) {
    unsigned batch = (unsigned)std::min<long long>(jobs, nchunks - base);
    std::vector<std::vector<SieveHit>> results(batch);
    if (batch == 1) {
      results[0] = score_chunk(base);
    } else {
      std::vector<std::thread> th;
      for (unsigned j = 0; j < batch; ++j)
        th.emplace_back([&, j] { results[j] = score_chunk(base + j); });
      for (auto& t : th) t.join();
    }
    for (unsigned j = 0; j < batch; ++j) merge_top(ck.top, results[j], cfg.top_k);
    ck.chunks_done = base + batch;
    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, key, ck);
  }
  return ck.top;
}

}  // namespace quadrank
