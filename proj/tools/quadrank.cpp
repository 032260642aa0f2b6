// quadrank: command-line entry point exposing curve invariants, twists,
// torsion, a_p tables, Mestre-Nagao sums, the twist sieve, canonical heights,
// independence certificates, twist descent, Tate normal forms and corpus
// verification. Logging goes to stderr; stdout carries results prefixed by a
// reproducibility header echoing the effective configuration.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "quadrank/records.hpp"
#include "quadrank/sieve.hpp"
#include "quadrank/twistdecomp.hpp"

using namespace quadrank;

namespace {

struct GlobalOpts {
  unsigned precision_bits = 320;
  uint64_t pmax = 1000;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string format = "text";

  // certified error target for height computations, derived from the
  // requested precision and capped by the environment ceiling
  double height_eps() const {
    unsigned bits = precision_bits;
    if (const char* ceil = std::getenv("QUADRANK_PRECISION_CEILING")) {
      unsigned c = (unsigned)std::strtoul(ceil, nullptr, 10);
      if (c >= 64 && c < bits) bits = c;
    }
    int exp = -(int)std::min(bits / 8, 48u);
    return std::max(std::ldexp(1.0, exp), 1e-14);
  }
  bool machine() const { return format == "machine"; }
};

std::string cache_dir() {
  if (const char* dir = std::getenv("QUADRANK_CACHE_DIR")) return dir;
  return "";
}

ApTable table_for(const Weierstrass<Rat>& E, uint64_t pmax, unsigned jobs) {
  std::string id = curve_cache_id(E);
  std::string dir = cache_dir();
  std::string path = dir.empty() ? "" : dir + "/ap_" + id + ".txt";
  if (!path.empty()) {
    if (auto cached = load_ap_table(path, id, pmax)) {
      std::cerr << "loaded a_p cache " << path << "\n";
      return *cached;
    }
  }
  ApTable t = ap_table(E, pmax, jobs);
  if (!path.empty()) {
    save_ap_table(t, path);
    std::cerr << "saved a_p cache " << path << "\n";
  }
  return t;
}

void print_header(const GlobalOpts& g, const std::string& sub, const std::string& extra) {
  std::cout << "# quadrank " << sub << " precision-bits=" << g.precision_bits
            << " pmax=" << g.pmax << " jobs=" << g.jobs << " format=" << g.format;
  if (!extra.empty()) std::cout << " " << extra;
  std::cout << "\n";
}

std::string point_to_string(const CurvePoint<QuadElem>& P) {
  if (P.infinity) return "O";
  return "(" + quadelem_to_string(P.x) + ";" + quadelem_to_string(P.y) + ")";
}

std::string point_to_string(const CurvePoint<Rat>& P) {
  if (P.infinity) return "O";
  return "(" + rat_to_string(P.x) + ";" + rat_to_string(P.y) + ")";
}

CurvePoint<QuadElem> resolve_point(const Weierstrass<QuadElem>& E, const Int& d,
                                   const PointSpec& ps) {
  QuadElem x = parse_quadelem(ps.x, d);
  if (ps.has_y) {
    CurvePoint<QuadElem> P(x, parse_quadelem(ps.y, d));
    if (!E.on_curve(P)) throw domain_error("point " + ps.to_string() + " is not on the curve");
    return P;
  }
  QuadElem p = E.a1 * x + E.a3;
  QuadElem q = -(x * x * x + E.a2 * x * x + E.a4 * x + E.a6);
  auto roots = solve_quadratic_in_K(p, q);
  if (roots.empty()) throw domain_error("x-coordinate not on curve over K");
  return CurvePoint<QuadElem>(x, roots[0]);
}

MnVariant parse_variant(const std::string& s) {
  if (s == "S0" || s == "s0") return MnVariant::S0;
  if (s == "S1" || s == "s1") return MnVariant::S1;
  throw domain_error("variant must be S0 or S1");
}

int run(int argc, char** argv) {
  CLI::App app{"exact arithmetic for elliptic curves over quadratic fields: "
               "torsion, twists, heights, independence, twist sieve, corpus verify"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--precision-bits", g.precision_bits, "working precision for heights");
  app.add_option("--pmax", g.pmax, "default prime bound");
  app.add_option("--jobs", g.jobs, "worker parallelism cap");
  app.add_option("--format", g.format, "output format")
      ->check(CLI::IsMember({"text", "machine"}));

  // shared option storage
  std::string curve_str, field_d_str = "1", d_str, points_str, x_str, y_str;
  std::string b_str, c_str, records_path, only_id, report_path, resume_path;
  std::string variant_str = "S1";
  long long dmin = 2, dmax = 100;
  size_t top_k = 10;
  double min_sum = -std::numeric_limits<double>::infinity();
  bool fundamental = false;

  auto add_curve = [&](CLI::App* s, bool with_field) {
    s->add_option("--curve", curve_str, "curve [a1,a2,a3,a4,a6]")->required();
    if (with_field) s->add_option("--field-d", field_d_str, "squarefree d of Q(sqrt(d)); 1 = Q");
  };

  auto* sc_inv = app.add_subcommand("invariants", "b-, c-invariants, discriminant and j");
  add_curve(sc_inv, true);

  auto* sc_twist = app.add_subcommand("twist", "quadratic twist of a rational curve");
  add_curve(sc_twist, false);
  sc_twist->add_option("--d", d_str, "twist parameter")->required();

  auto* sc_tors = app.add_subcommand("torsion", "torsion subgroup over Q or Q(sqrt(d))");
  add_curve(sc_tors, true);

  auto* sc_ap = app.add_subcommand("ap", "trace-of-Frobenius table");
  add_curve(sc_ap, false);

  auto* sc_mn = app.add_subcommand("mn-sum", "Mestre-Nagao sum of a twist");
  add_curve(sc_mn, false);
  sc_mn->add_option("--d", d_str, "twist parameter (squarefree)")->required();
  sc_mn->add_option("--variant", variant_str, "S0 or S1");

  auto* sc_sieve = app.add_subcommand("sieve", "rank the Mestre-Nagao sums of a twist range");
  add_curve(sc_sieve, false);
  sc_sieve->add_option("--dmin", dmin, "range start")->required();
  sc_sieve->add_option("--dmax", dmax, "range end")->required();
  sc_sieve->add_option("--top", top_k, "hits to keep");
  sc_sieve->add_option("--min-sum", min_sum, "threshold");
  sc_sieve->add_option("--variant", variant_str, "S0 or S1");
  sc_sieve->add_flag("--fundamental", fundamental, "enumerate fundamental discriminants");
  sc_sieve->add_option("--resume", resume_path, "checkpoint file");

  auto* sc_h = app.add_subcommand("height", "canonical height of a point");
  add_curve(sc_h, true);
  sc_h->add_option("--x", x_str, "x-coordinate")->required();
  sc_h->add_option("--y", y_str, "y-coordinate (omitted: solved over K)");

  auto* sc_ind = app.add_subcommand("independence", "Gram-determinant independence certificate");
  add_curve(sc_ind, true);
  sc_ind->add_option("--points", points_str, "point list (x;y),(x;?),...")->required();

  auto* sc_desc = app.add_subcommand("descend", "split a K-point into base and twist parts");
  add_curve(sc_desc, false);
  sc_desc->add_option("--d", d_str, "twist parameter (squarefree)")->required();
  sc_desc->add_option("--x", x_str, "x over K")->required();
  sc_desc->add_option("--y", y_str, "y over K")->required();

  auto* sc_tate = app.add_subcommand("tate-normal", "Tate normal form from (b, c)");
  sc_tate->add_option("--b", b_str, "b parameter")->required();
  sc_tate->add_option("--c", c_str, "c parameter")->required();
  sc_tate->add_option("--field-d", field_d_str, "squarefree d of Q(sqrt(d)); 1 = Q");

  auto* sc_ver = app.add_subcommand("verify", "verify a record corpus claim by claim");
  sc_ver->add_option("--records", records_path, "record file")->required();
  sc_ver->add_option("--only", only_id, "verify a single record id");
  sc_ver->add_option("--report", report_path, "also write the report to a file");

  // let global flags (--pmax, --jobs, ...) appear after the subcommand name
  for (auto* s : app.get_subcommands([](const CLI::App*) { return true; })) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Int field_d(field_d_str);

  if (*sc_inv) {
    print_header(g, "invariants", "curve=" + curve_str + " field-d=" + field_d_str);
    auto emit = [&](const auto& E) {
      std::cout << "b2=" << qr_to_string(E.b2) << "\nb4=" << qr_to_string(E.b4)
                << "\nb6=" << qr_to_string(E.b6) << "\nb8=" << qr_to_string(E.b8)
                << "\nc4=" << qr_to_string(E.c4) << "\nc6=" << qr_to_string(E.c6)
                << "\ndisc=" << qr_to_string(E.disc) << "\nj=" << qr_to_string(E.j) << "\n";
    };
    if (field_d == 1) emit(parse_curve_q(curve_str));
    else emit(parse_curve_k(curve_str, field_d));
  } else if (*sc_twist) {
    print_header(g, "twist", "curve=" + curve_str + " d=" + d_str);
    auto res = quadratic_twist(parse_curve_q(curve_str), Int(d_str));
    std::cout << "curve=" << curve_to_string(res.curve) << "\nd_used=" << res.d_used
              << "\nd_was_normalized=" << (res.d_was_normalized ? 1 : 0) << "\n";
  } else if (*sc_tors) {
    print_header(g, "torsion", "curve=" + curve_str + " field-d=" + field_d_str);
    auto E = field_d == 1 ? curve_to_K(parse_curve_q(curve_str), Int(1))
                          : parse_curve_k(curve_str, field_d);
    auto t = torsion_over_K(E, field_d);
    std::cout << "torsion=" << torsion_to_string(t.group) << "\norder=" << t.group.order()
              << "\n";
    for (size_t i = 0; i < t.generators.size(); ++i)
      std::cout << "generator" << i + 1 << "=" << point_to_string(t.generators[i]) << "\n";
  } else if (*sc_ap) {
    auto E = parse_curve_q(curve_str);
    auto t = table_for(E, g.pmax, g.jobs);
    print_header(g, "ap", "curve=" + curve_str + " curve-id=" + t.curve_id +
                              " table-hash=" + ap_table_hash(t));
    for (auto& e : t.entries)
      std::cout << e.p << " " << e.ap << " " << (e.good ? 1 : 0) << "\n";
  } else if (*sc_mn) {
    auto E = parse_curve_q(curve_str);
    auto t = table_for(E, g.pmax, g.jobs);
    auto r = mn_sum_detail(E, Int(d_str), t, parse_variant(variant_str));
    print_header(g, "mn-sum", "curve=" + curve_str + " d=" + d_str + " variant=" +
                                  variant_str + " table-hash=" + ap_table_hash(t));
    char buf[64];
    snprintf(buf, sizeof buf, "%.17g", r.sum);
    std::cout << "sum=" << buf << "\nskipped_primes=" << r.skipped_primes << "\n";
  } else if (*sc_sieve) {
    auto E = parse_curve_q(curve_str);
    auto t = table_for(E, g.pmax, g.jobs);
    SieveConfig cfg;
    cfg.curve_id = t.curve_id;
    cfg.pmax = g.pmax;
    cfg.d_min = dmin;
    cfg.d_max = dmax;
    cfg.top_k = top_k;
    cfg.min_sum = min_sum;
    cfg.variant = parse_variant(variant_str);
    cfg.fundamental_only = fundamental;
    print_header(g, "sieve", sieve_config_key(cfg) + " table-hash=" + ap_table_hash(t));
    auto hits = run_sieve(cfg, t, g.jobs, resume_path);
    char buf[64];
    for (auto& h : hits) {
      snprintf(buf, sizeof buf, "%.17g", h.sum);
      std::cout << h.d << "\t" << buf << "\n";
    }
  } else if (*sc_h) {
    print_header(g, "height", "curve=" + curve_str + " field-d=" + field_d_str);
    auto E = field_d == 1 ? curve_to_K(parse_curve_q(curve_str), Int(1))
                          : parse_curve_k(curve_str, field_d);
    PointSpec ps{x_str, y_str, !y_str.empty()};
    auto P = resolve_point(E, field_d, ps);
    auto h = canonical_height(E, P, g.height_eps());
    char buf[64];
    snprintf(buf, sizeof buf, "%.17g", h.value);
    std::cout << "point=" << point_to_string(P) << "\nhhat=" << buf;
    snprintf(buf, sizeof buf, "%.3g", h.error_bound);
    std::cout << "\nerror_bound=" << buf << "\nprecision_bits=" << h.precision_bits
              << "\nindeterminate=" << (h.indeterminate ? 1 : 0) << "\n";
  } else if (*sc_ind) {
    print_header(g, "independence", "curve=" + curve_str + " field-d=" + field_d_str);
    auto E = field_d == 1 ? curve_to_K(parse_curve_q(curve_str), Int(1))
                          : parse_curve_k(curve_str, field_d);
    std::vector<CurvePoint<QuadElem>> pts;
    for (auto& ps : records_detail::parse_point_list(points_str))
      pts.push_back(resolve_point(E, field_d, ps));
    auto res = independence(E, pts, g.height_eps());
    std::cout << "verdict="
              << (res.verdict == IndependenceVerdict::independent    ? "independent"
                  : res.verdict == IndependenceVerdict::dependent    ? "dependent"
                                                                     : "indeterminate")
              << "\nrank_lb=" << res.rank_lb << "\n";
    char buf[64];
    snprintf(buf, sizeof buf, "%.17g", res.gram.det.value);
    std::cout << "gram_det=" << buf;
    snprintf(buf, sizeof buf, "%.3g", res.gram.det.error_bound);
    std::cout << "\ngram_det_error=" << buf << "\n";
    if (!res.relation.empty()) {
      std::cout << "relation=";
      for (size_t i = 0; i < res.relation.size(); ++i)
        std::cout << (i ? "," : "") << res.relation[i];
      std::cout << "\n";
    }
  } else if (*sc_desc) {
    print_header(g, "descend", "curve=" + curve_str + " d=" + d_str);
    Int d(d_str);
    TwistPair T(parse_curve_q(curve_str), d);
    auto EK = curve_to_K(T.base, d);
    CurvePoint<QuadElem> P(parse_quadelem(x_str, d), parse_quadelem(y_str, d));
    if (!EK.on_curve(P)) throw domain_error("point not on the curve over K");
    auto r = descend(T, P);
    std::cout << "p_plus=" << point_to_string(r.p_plus)
              << "\np_minus=" << point_to_string(r.p_minus)
              << "\ndefect=" << point_to_string(r.defect)
              << "\ntwist=" << curve_to_string(T.twist) << "\n";
  } else if (*sc_tate) {
    print_header(g, "tate-normal", "b=" + b_str + " c=" + c_str + " field-d=" + field_d_str);
    if (field_d == 1) {
      auto E = tate_normal(parse_rat(b_str), parse_rat(c_str));
      std::cout << "curve=" << curve_to_string(E) << "\n";
    } else {
      auto E = tate_normal(parse_quadelem(b_str, field_d), parse_quadelem(c_str, field_d));
      std::cout << "curve=" << curve_to_string(E) << "\n";
    }
  } else if (*sc_ver) {
    print_header(g, "verify", "records=" + records_path +
                                  (only_id.empty() ? "" : " only=" + only_id));
    auto recs = ingest(records_path);
    VerifyOptions opt;
    opt.only_id = only_id;
    opt.jobs = g.jobs;
    opt.eps = g.height_eps();
    auto rep = verify(recs, opt);
    std::string text;
    if (g.machine()) {
      std::ostringstream os;
      for (const auto& c : rep.claims) {
        os << "record=" << c.record_id << " torsion=" << verdict_name(c.torsion_verdict)
           << " torsion_computed=" << c.torsion_computed
           << " points=" << c.points.size() << " rank=" << verdict_name(c.rank_verdict)
           << " certified_rank_lb=" << c.certified_rank_lb << "\n";
      }
      os << "summary torsion_verified=" << rep.torsion_verified
         << " torsion_failed=" << rep.torsion_failed
         << " points_verified=" << rep.points_verified
         << " points_failed=" << rep.points_failed
         << " rank_verified=" << rep.rank_verified << " rank_failed=" << rep.rank_failed
         << " rank_skipped=" << rep.rank_skipped << "\n";
      text = os.str();
    } else {
      text = report_to_text(rep);
    }
    std::cout << text;
    if (!report_path.empty()) {
      std::ofstream out(report_path);
      if (!out) throw domain_error("cannot write report: " + report_path);
      out << text;
    }
    if (rep.any_failed()) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
