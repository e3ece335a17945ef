// Batch front end over the library. One subcommand per operation; every run
// prints a single json document on stdout (or a line-per-field text form
// with --format text) and the exit code carries the outcome: 0 for success
// or a computed-true verdict, 1 for a computed-false verdict, 2 for invalid
// input or a failed precondition. Structured inputs (modules, candidates)
// travel as json files in the formats of json_io.hpp; small inputs travel
// as flags with the polynomial and operator grammars of the library.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <frobstruct/affine_orbits.hpp>
#include <frobstruct/combin.hpp>
#include <frobstruct/diffop.hpp>
#include <frobstruct/dmod.hpp>
#include <frobstruct/indigenous.hpp>
#include <frobstruct/json_io.hpp>
#include <frobstruct/tango.hpp>

using namespace frobstruct;

namespace {

struct Report {
  Json doc = Json::object();
  int rc = 0;
};

Report report;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

ChartPtr build_chart(std::int64_t p, const std::string& vars,
                     const std::string& laurent) {
  const std::vector<std::string> names = split_csv(vars);
  if (names.empty())
    throw std::invalid_argument("--vars must name at least one variable");
  std::vector<bool> flags(names.size(), false);
  for (const std::string& l : split_csv(laurent)) {
    bool found = false;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == l) {
        flags[i] = true;
        found = true;
      }
    if (!found)
      throw std::invalid_argument("--laurent names unknown variable " + l);
  }
  return make_chart(p, names, flags);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return Json::parse(in);
}

// FROBSTRUCT_CAP, when set, overrides every enumeration cap flag.
std::int64_t effective_cap(std::int64_t flag_cap) {
  if (const char* env = std::getenv("FROBSTRUCT_CAP")) {
    const std::string text(env);
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(text, &used);
    } catch (...) {
      used = 0;
    }
    if (used != text.size() || v < 1)
      throw std::invalid_argument("FROBSTRUCT_CAP must be a positive integer");
    return v;
  }
  return flag_cap;
}

LevelIndex parse_level_token(const std::string& s) {
  if (s == "inf") return LevelIndex::infinity();
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (...) {
    used = 0;
  }
  if (used != s.size() || v < 0)
    throw std::invalid_argument("level must be a nonnegative integer or inf");
  return LevelIndex(v);
}

void emit(const std::string& format, const Json& doc) {
  if (format == "json") {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  for (const auto& [key, val] : doc.items()) {
    std::cout << key << ": ";
    if (val.is_string())
      std::cout << val.get<std::string>();
    else
      std::cout << val.dump();
    std::cout << "\n";
  }
}

Json start(const std::string& command, Json inputs) {
  Json doc = Json::object();
  doc["command"] = command;
  doc["inputs"] = std::move(inputs);
  return doc;
}

void set_verdict(Json doc, bool verdict, Json witness = Json()) {
  doc["verdict"] = verdict;
  if (!witness.is_null()) doc["witness"] = std::move(witness);
  report.doc = std::move(doc);
  report.rc = verdict ? 0 : 1;
}

void set_value(Json doc, Json value, Json witness = Json()) {
  doc["value"] = std::move(value);
  if (!witness.is_null()) doc["witness"] = std::move(witness);
  report.doc = std::move(doc);
  report.rc = 0;
}

// Options shared by the flag-driven groups that build a chart inline.
struct ChartOpts {
  std::int64_t p = 0;
  std::string vars;
  std::string laurent;

  void attach(CLI::App* cmd, const std::string& default_vars) {
    vars = default_vars;
    cmd->add_option("--p", p, "field characteristic (prime)")->required();
    cmd->add_option("--vars", vars,
                    "comma-separated variable names (default " +
                        default_vars + ")");
    cmd->add_option("--laurent", laurent,
                    "comma-separated variables allowed negative exponents");
  }

  ChartPtr chart() const { return build_chart(p, vars, laurent); }

  Json echo() const {
    Json j = Json::object();
    j["p"] = p;
    j["vars"] = split_csv(vars);
    if (!laurent.empty()) j["laurent"] = split_csv(laurent);
    return j;
  }
};

void register_dop(CLI::App& app) {
  auto* dop = app.add_subcommand("dop", "differential operator calculus");
  dop->require_subcommand(1);

  static ChartOpts chart_mul, chart_apply, chart_map;
  static int m_mul = 0, m_apply = 0, m_map = 0;
  static std::string P_mul, Q_mul, P_apply, f_apply, P_map, to_map;

  auto* mul = dop->add_subcommand("mul", "product of two operators");
  chart_mul.attach(mul, "x");
  mul->add_option("--m", m_mul, "operator level (default 0)");
  mul->add_option("--P", P_mul, "left operator")->required();
  mul->add_option("--Q", Q_mul, "right operator")->required();
  mul->callback([] {
    const ChartPtr c = chart_mul.chart();
    const DiffOp P = parse_diffop(c, LevelIndex(m_mul), P_mul);
    const DiffOp Q = parse_diffop(c, LevelIndex(m_mul), Q_mul);
    Json in = chart_mul.echo();
    in["m"] = m_mul;
    in["P"] = P_mul;
    in["Q"] = Q_mul;
    set_value(start("dop mul", std::move(in)),
              frobstruct::mul(P, Q).to_string());
  });

  auto* ap = dop->add_subcommand("apply", "apply an operator to a function");
  chart_apply.attach(ap, "x");
  ap->add_option("--m", m_apply, "operator level (default 0)");
  ap->add_option("--P", P_apply, "operator")->required();
  ap->add_option("--f", f_apply, "polynomial argument")->required();
  ap->callback([] {
    const ChartPtr c = chart_apply.chart();
    const DiffOp P = parse_diffop(c, LevelIndex(m_apply), P_apply);
    const RingElem f = parse_poly(c, f_apply);
    Json in = chart_apply.echo();
    in["m"] = m_apply;
    in["P"] = P_apply;
    in["f"] = f_apply;
    set_value(start("dop apply", std::move(in)), apply(P, f).to_string());
  });

  auto* lm = dop->add_subcommand("levelmap",
                                 "push an operator to a coarser level");
  chart_map.attach(lm, "x");
  lm->add_option("--m", m_map, "source level (default 0)");
  lm->add_option("--to", to_map, "target level, an integer or inf")
      ->required();
  lm->add_option("--P", P_map, "operator")->required();
  lm->callback([] {
    const ChartPtr c = chart_map.chart();
    const DiffOp P = parse_diffop(c, LevelIndex(m_map), P_map);
    Json in = chart_map.echo();
    in["m"] = m_map;
    in["to"] = to_map;
    in["P"] = P_map;
    set_value(start("dop levelmap", std::move(in)),
              level_map(P, parse_level_token(to_map)).to_string());
  });
}

void register_dmod(CLI::App& app) {
  auto* dm = app.add_subcommand("dmod", "level-m module operations");
  dm->require_subcommand(1);

  static std::string file_validate, file_pcurv, file_sol, file_dormant;
  static std::int64_t rows_validate = 0;
  static std::string var_pcurv;
  static ChartOpts chart_pb;
  static std::int64_t rank_pb = 2;
  static int N_pb = 1;
  static std::string unit_pb = "1";

  auto* val = dm->add_subcommand("validate",
                                 "check a module against the operator ring");
  val->add_option("--module", file_validate, "module json file")->required();
  val->add_option("--rows", rows_validate,
                  "extra multiplication-table rows to replay");
  val->callback([] {
    const DMod m = dmod_from_json(read_json_file(file_validate));
    const ValidationReport rep = validate(m, rows_validate);
    Json in{{"module", file_validate}, {"rows", rows_validate}};
    Json witness;
    if (!rep.ok) witness = Json{{"message", rep.message}};
    set_verdict(start("dmod validate", std::move(in)), rep.ok,
                std::move(witness));
  });

  auto* pc = dm->add_subcommand("pcurv",
                                "classical p-curvature of a level-0 module");
  pc->add_option("--module", file_pcurv, "module json file")->required();
  pc->add_option("--var", var_pcurv, "direction variable (default first)");
  pc->callback([] {
    const DMod m = dmod_from_json(read_json_file(file_pcurv));
    std::size_t var = 0;
    if (!var_pcurv.empty()) {
      const auto idx = m.chart()->var_index(var_pcurv);
      if (!idx)
        throw std::invalid_argument("--var names unknown variable " +
                                    var_pcurv);
      var = *idx;
    }
    Json in{{"module", file_pcurv},
            {"var", m.chart()->var_name(var)}};
    set_value(start("dmod pcurv", std::move(in)),
              matrix_to_json(p_curvature(m, var)));
  });

  auto* so = dm->add_subcommand("sol",
                                "horizontal sections of a level-0 module");
  so->add_option("--module", file_sol, "module json file")->required();
  so->callback([] {
    const DMod m = dmod_from_json(read_json_file(file_sol));
    Json in{{"module", file_sol}};
    Json doc = start("dmod sol", std::move(in));
    try {
      const SolBasis sol = sol_level0(m);
      Json vectors = Json::array();
      for (const auto& v : sol.vectors) vectors.push_back(section_to_json(v));
      set_verdict(std::move(doc), true, Json{{"vectors", std::move(vectors)}});
    } catch (const NotDormant& e) {
      set_verdict(std::move(doc), false, Json{{"reason", e.what()}});
    }
  });

  auto* dor = dm->add_subcommand("dormant", "iterated level-lowering test");
  dor->add_option("--module", file_dormant, "module json file")->required();
  dor->callback([] {
    const DMod m = dmod_from_json(read_json_file(file_dormant));
    const DormancyResult dr = dormancy(m);
    Json in{{"module", file_dormant}};
    Json witness;
    if (dr.dormant)
      witness = Json{{"stages", dr.chain.size()}};
    else
      witness = Json{{"failed_stage", dr.failed_stage}, {"reason", dr.reason}};
    set_verdict(start("dmod dormant", std::move(in)), dr.dormant,
                std::move(witness));
  });

  auto* pb = dm->add_subcommand(
      "pullback", "trivial module pulled back along the N-fold Frobenius");
  chart_pb.attach(pb, "x");
  pb->add_option("--rank", rank_pb, "module rank (default 2)");
  pb->add_option("--N", N_pb, "Frobenius exponent")->required();
  pb->add_option("--unit", unit_pb, "unit rescaling the basis (default 1)");
  pb->callback([] {
    const ChartPtr c = chart_pb.chart();
    const RingElem u = parse_poly(c, unit_pb);
    Json in = chart_pb.echo();
    in["rank"] = rank_pb;
    in["N"] = N_pb;
    in["unit"] = unit_pb;
    set_value(start("dmod pullback", std::move(in)),
              dmod_to_json(frobenius_pullback(
                  static_cast<std::size_t>(rank_pb), N_pb, u)));
  });
}

void register_indig(CLI::App& app) {
  auto* ig = app.add_subcommand("indig", "indigenous candidate operations");
  ig->require_subcommand(1);

  static std::string file_check, file_twist_cand, file_twist_mod;
  static std::string file_norm_cand, file_norm_theta;
  static ChartOpts chart_triv;
  static int N_triv = 1;

  auto* ck = ig->add_subcommand("check",
                                "Kodaira-Spencer and splitting criteria");
  ck->add_option("--candidate", file_check, "candidate json file")
      ->required();
  ck->callback([] {
    const Json j = read_json_file(file_check);
    Json in{{"candidate", file_check}};
    Json doc = start("indig check", std::move(in));
    if (j.contains("delta")) {
      const AffineIndigenousCandidate c = affine_from_json(j);
      const bool indig = is_indigenous(c);
      const bool stable = indig && affine_check(c);
      Json witness{{"indigenous", indig}, {"kernel_stable", stable}};
      if (indig)
        witness["ks_det"] = determinant(ks_matrix(c)).to_string();
      set_verdict(std::move(doc), indig && stable, std::move(witness));
    } else {
      const IndigenousCandidate c = indigenous_from_json(j);
      const bool indig = is_indigenous(c);
      Json witness{{"indigenous", indig}};
      if (indig)
        witness["ks_det"] = determinant(ks_matrix(c)).to_string();
      set_verdict(std::move(doc), indig, std::move(witness));
    }
  });

  auto* tv = ig->add_subcommand(
      "trivial", "trivial affine-indigenous candidate on a chart");
  chart_triv.attach(tv, "x");
  tv->add_option("--N", N_triv, "level N >= 1 (module level is N-1)")
      ->required();
  tv->callback([] {
    const ChartPtr c = chart_triv.chart();
    Json in = chart_triv.echo();
    in["N"] = N_triv;
    set_value(start("indig trivial", std::move(in)),
              candidate_to_json(trivial_on_affine_chart(c, N_triv)));
  });

  auto* tw = ig->add_subcommand("twist", "tensor by a rank-one module");
  tw->add_option("--candidate", file_twist_cand, "candidate json file")
      ->required();
  tw->add_option("--twist", file_twist_mod, "rank-one module json file")
      ->required();
  tw->callback([] {
    const Json j = read_json_file(file_twist_cand);
    const DMod L = dmod_from_json(read_json_file(file_twist_mod));
    Json in{{"candidate", file_twist_cand}, {"twist", file_twist_mod}};
    Json doc = start("indig twist", std::move(in));
    if (j.contains("delta"))
      set_value(std::move(doc), candidate_to_json(twist(affine_from_json(j), L)));
    else
      set_value(std::move(doc),
                candidate_to_json(twist(indigenous_from_json(j), L)));
  });

  auto* nm = ig->add_subcommand("normalized",
                                "determinant module against a theta module");
  nm->add_option("--candidate", file_norm_cand, "candidate json file")
      ->required();
  nm->add_option("--theta", file_norm_theta, "rank-one module json file")
      ->required();
  nm->callback([] {
    const IndigenousCandidate c =
        indigenous_from_json(read_json_file(file_norm_cand));
    const DMod theta = dmod_from_json(read_json_file(file_norm_theta));
    Json in{{"candidate", file_norm_cand}, {"theta", file_norm_theta}};
    set_verdict(start("indig normalized", std::move(in)),
                is_normalized(c, theta));
  });
}

void register_tango(CLI::App& app) {
  auto* tg = app.add_subcommand("tango", "Tango structure operations");
  tg->require_subcommand(1);

  static ChartOpts chart_proj, chart_verify, chart_trunc, chart_recon;
  static ChartOpts chart_kappa, chart_filt, chart_prod;
  static int N_proj = 1, N_verify = 1, N_trunc = 2, N_recon = 1;
  static int N_kappa = 1, N_filt = 1, N_prod = 1, to_trunc = 1;
  static std::string f_proj, file_dual;
  static std::vector<std::string> gens_verify, gens_trunc, gens_recon;
  static std::vector<std::string> gens_prod1, gens_prod2;
  static std::string vars_prod2;

  auto* pj = tg->add_subcommand("project",
                                "canonical representative mod p^N-th powers");
  chart_proj.attach(pj, "t");
  pj->add_option("--N", N_proj, "level")->required();
  pj->add_option("--f", f_proj, "polynomial")->required();
  pj->callback([] {
    const ChartPtr c = chart_proj.chart();
    Json in = chart_proj.echo();
    in["N"] = N_proj;
    in["f"] = f_proj;
    set_value(start("tango project", std::move(in)),
              b_project(parse_poly(c, f_proj), N_proj).rep.to_string());
  });

  auto* vf = tg->add_subcommand("verify", "unit Jacobian criterion");
  chart_verify.attach(vf, "t");
  vf->add_option("--N", N_verify, "level")->required();
  vf->add_option("--gen", gens_verify, "generator (one per chart variable)")
      ->required();
  vf->callback([] {
    const ChartPtr c = chart_verify.chart();
    std::vector<RingElem> reps;
    for (const std::string& g : gens_verify)
      reps.push_back(parse_poly(c, g));
    const TangoCandidate U(c, N_verify, reps);
    Json in = chart_verify.echo();
    in["N"] = N_verify;
    in["gen"] = gens_verify;
    set_verdict(start("tango verify", std::move(in)), tango_verify(U));
  });

  auto* tr = tg->add_subcommand("truncate", "re-project to a lower level");
  chart_trunc.attach(tr, "t");
  tr->add_option("--N", N_trunc, "current level")->required();
  tr->add_option("--to", to_trunc, "target level")->required();
  tr->add_option("--gen", gens_trunc, "generator (one per chart variable)")
      ->required();
  tr->callback([] {
    const ChartPtr c = chart_trunc.chart();
    std::vector<RingElem> reps;
    for (const std::string& g : gens_trunc) reps.push_back(parse_poly(c, g));
    const TangoCandidate low =
        truncate(TangoCandidate(c, N_trunc, reps), to_trunc);
    Json in = chart_trunc.echo();
    in["N"] = N_trunc;
    in["to"] = to_trunc;
    in["gen"] = gens_trunc;
    Json gens = Json::array();
    for (const BSection& b : low.gens) gens.push_back(b.rep.to_string());
    set_value(start("tango truncate", std::move(in)),
              Json{{"N", to_trunc}, {"generators", std::move(gens)}});
  });

  auto* dc = tg->add_subcommand("dualconn",
                                "dual affine connection criterion");
  dc->add_option("--module", file_dual, "rank-one module json file")
      ->required();
  dc->callback([] {
    const DMod m = dmod_from_json(read_json_file(file_dual));
    Json in{{"module", file_dual}};
    set_verdict(start("tango dualconn", std::move(in)),
                dual_affine_check(m));
  });

  auto* rc = tg->add_subcommand(
      "reconstruct", "affine-indigenous module of a Tango structure");
  chart_recon.attach(rc, "t");
  rc->add_option("--N", N_recon, "level")->required();
  rc->add_option("--gen", gens_recon, "generator (one per chart variable)")
      ->required();
  rc->callback([] {
    const ChartPtr c = chart_recon.chart();
    std::vector<RingElem> reps;
    for (const std::string& g : gens_recon) reps.push_back(parse_poly(c, g));
    const AffineIndigenousCandidate cand =
        tango_to_module(TangoCandidate(c, N_recon, reps));
    Json in = chart_recon.echo();
    in["N"] = N_recon;
    in["gen"] = gens_recon;
    set_value(start("tango reconstruct", std::move(in)),
              candidate_to_json(cand));
  });

  auto* pr = tg->add_subcommand("product", "juxtaposition on a product chart");
  chart_prod.attach(pr, "t");
  pr->add_option("--N", N_prod, "level")->required();
  pr->add_option("--gen", gens_prod1, "first factor generator")->required();
  pr->add_option("--vars2", vars_prod2,
                 "second factor variables (default u)");
  pr->add_option("--gen2", gens_prod2, "second factor generator")->required();
  pr->callback([] {
    const ChartPtr c1 = chart_prod.chart();
    const ChartPtr c2 = build_chart(
        chart_prod.p, vars_prod2.empty() ? "u" : vars_prod2, "");
    std::vector<RingElem> reps1, reps2;
    for (const std::string& g : gens_prod1) reps1.push_back(parse_poly(c1, g));
    for (const std::string& g : gens_prod2) reps2.push_back(parse_poly(c2, g));
    const TangoCandidate prod = product(TangoCandidate(c1, N_prod, reps1),
                                        TangoCandidate(c2, N_prod, reps2));
    Json in = chart_prod.echo();
    in["N"] = N_prod;
    in["gen"] = gens_prod1;
    in["vars2"] = c2->vars();
    in["gen2"] = gens_prod2;
    Json gens = Json::array();
    for (const BSection& b : prod.gens) gens.push_back(b.rep.to_string());
    set_value(start("tango product", std::move(in)),
              Json{{"vars", prod.chart->vars()},
                   {"N", prod.N},
                   {"generators", std::move(gens)},
                   {"verified", tango_verify(prod)}});
  });

  auto* ka = tg->add_subcommand("kappa",
                                "staircase basis matrix of the big bundle");
  chart_kappa.attach(ka, "t");
  ka->add_option("--N", N_kappa, "level")->required();
  ka->callback([] {
    const KappaResult res = kappa_matrix(chart_kappa.chart(), N_kappa);
    Json in = chart_kappa.echo();
    in["N"] = N_kappa;
    set_value(start("tango kappa", std::move(in)),
              Json{{"det", res.det.to_string()},
                   {"matrix", matrix_to_json(res.matrix)}});
  });

  auto* fl = tg->add_subcommand("filtration",
                                "containments and graded isomorphisms");
  chart_filt.attach(fl, "t");
  fl->add_option("--N", N_filt, "level")->required();
  fl->callback([] {
    const ValidationReport rep = filtration_check(chart_filt.chart(), N_filt);
    Json in = chart_filt.echo();
    in["N"] = N_filt;
    set_verdict(start("tango filtration", std::move(in)), rep.ok,
                Json{{"message", rep.message}});
  });
}

void register_comb(CLI::App& app) {
  auto* cb = app.add_subcommand("comb", "Tate module counting combinatorics");
  cb->require_subcommand(1);

  static int n_count = 1, N_count = 1, n_cls = 1, N_cls = 1;
  static int n_ratio = 1, N_ratio = 1, N_inv = 1, N_chern = 1;
  static int N_table = 1, N_pchern = 1, g_genus = 2;
  static std::int64_t p_count = 3, p_cls = 3, p_ratio = 3, p_inv = 5;
  static std::int64_t p_chern = 3, p_table = 3, p_pchern = 3, p_genus = 3;
  static std::int64_t cap_count = 1000000, cap_cls = 1000000;
  static std::int64_t cap_ratio = 1000000, cap_inv = 1000000;
  static std::int64_t c1sq = 0, c2 = 0, c1 = 0, genus_table = 0;
  static std::int64_t g1_pchern = 0, g2_pchern = 0;
  static std::string kind_cls = "sn", kind_inv = "sn";
  static std::string mode_chern = "proj", type_inv = "Z/2";

  auto* ct = cb->add_subcommand("count", "number of basis tuples");
  ct->add_option("--n", n_count, "tuple length")->required();
  ct->add_option("--N", N_count, "level")->required();
  ct->add_option("--p", p_count, "prime")->required();
  ct->add_option("--cap", cap_count, "enumeration cap (default 1000000)");
  ct->callback([] {
    const TateLevel lvl{n_count, N_count, p_count};
    const auto tuples = enumerate_B(lvl, effective_cap(cap_count));
    const auto formula = formula_count_B(lvl);
    if (boost::multiprecision::cpp_int(tuples.size()) != formula)
      throw std::logic_error("count: enumeration disagrees with closed form");
    Json in{{"n", n_count}, {"N", N_count}, {"p", p_count}};
    set_value(start("comb count", std::move(in)),
              static_cast<std::int64_t>(tuples.size()));
  });

  auto* cl = cb->add_subcommand("classes", "quotient class representatives");
  cl->add_option("--n", n_cls, "tuple length")->required();
  cl->add_option("--N", N_cls, "level")->required();
  cl->add_option("--p", p_cls, "prime")->required();
  cl->add_option("--kind", kind_cls, "sn or delta")
      ->check(CLI::IsMember({"sn", "delta"}));
  cl->add_option("--cap", cap_cls, "enumeration cap (default 1000000)");
  cl->callback([] {
    const TateLevel lvl{n_cls, N_cls, p_cls};
    const auto tuples = enumerate_B(lvl, effective_cap(cap_cls));
    const auto reps =
        kind_cls == "sn" ? sn_classes(tuples) : delta_classes(tuples, lvl);
    Json in{{"n", n_cls}, {"N", N_cls}, {"p", p_cls}, {"kind", kind_cls}};
    set_value(start("comb classes", std::move(in)),
              static_cast<std::int64_t>(reps.size()),
              Json{{"representatives", reps}});
  });

  auto* rt = cb->add_subcommand("ratio", "symmetric to delta class ratio");
  rt->add_option("--n", n_ratio, "tuple length")->required();
  rt->add_option("--N", N_ratio, "level")->required();
  rt->add_option("--p", p_ratio, "prime")->required();
  rt->add_option("--cap", cap_ratio, "enumeration cap (default 1000000)");
  rt->callback([] {
    const TateLevel lvl{n_ratio, N_ratio, p_ratio};
    const std::int64_t r = quotient_ratio(lvl, effective_cap(cap_ratio));
    Json in{{"n", n_ratio}, {"N", N_ratio}, {"p", p_ratio}};
    set_value(start("comb ratio", std::move(in)), r);
  });

  auto* iv = cb->add_subcommand("invariants",
                                "classes fixed by a hyperelliptic action");
  iv->add_option("--type", type_inv, "group type, e.g. Z/2 or Z/4xZ/2")
      ->required();
  iv->add_option("--p", p_inv, "prime >= 5")->required();
  iv->add_option("--N", N_inv, "level")->required();
  iv->add_option("--kind", kind_inv, "sn or delta")
      ->check(CLI::IsMember({"sn", "delta"}));
  iv->add_option("--cap", cap_inv, "enumeration cap (default 1000000)");
  iv->callback([] {
    const GroupAction action = hyperelliptic_action(type_inv, p_inv, N_inv);
    const auto reps = invariant_classes(
        action, kind_inv == "sn" ? ClassKind::SN : ClassKind::DELTA,
        effective_cap(cap_inv));
    Json in{{"type", type_inv},
            {"p", p_inv},
            {"N", N_inv},
            {"kind", kind_inv}};
    set_value(start("comb invariants", std::move(in)),
              static_cast<std::int64_t>(reps.size()),
              Json{{"generators", action.generators},
                   {"representatives", reps}});
  });

  auto* ch = cb->add_subcommand("chern", "Chern number obstruction");
  ch->add_option("--mode", mode_chern, "proj or aff")
      ->check(CLI::IsMember({"proj", "aff"}));
  ch->add_option("--c1sq", c1sq, "c1^2 (projective mode)");
  ch->add_option("--c2", c2, "c2");
  ch->add_option("--c1", c1, "c1 (affine mode)");
  ch->add_option("--p", p_chern, "prime")->required();
  ch->add_option("--N", N_chern, "level")->required();
  ch->callback([] {
    const ChernVerdict v = chern_obstruction(
        {c1sq, c2, c1},
        mode_chern == "proj" ? ChernMode::PROJ : ChernMode::AFF, p_chern,
        N_chern);
    Json in{{"mode", mode_chern}, {"c1sq", c1sq}, {"c2", c2},
            {"c1", c1},           {"p", p_chern}, {"N", N_chern}};
    set_verdict(start("comb chern", std::move(in)), v.obstructed,
                Json{{"message", v.message}});
  });

  auto* tb = cb->add_subcommand("table", "standard surface classes");
  tb->add_option("--p", p_table, "prime")->required();
  tb->add_option("--N", N_table, "level")->required();
  tb->add_option("--genus", genus_table, "base genus of the ruled row");
  tb->callback([] {
    Json rows = Json::array();
    for (const SurfaceEntry& e : surface_table(genus_table)) {
      const ChernVerdict v =
          chern_obstruction(e.chern, ChernMode::PROJ, p_table, N_table);
      rows.push_back(Json{{"name", e.name},
                          {"c1sq", e.chern.c1sq},
                          {"c2", e.chern.c2},
                          {"obstructed", v.obstructed}});
    }
    Json in{{"p", p_table}, {"N", N_table}, {"genus", genus_table}};
    set_value(start("comb table", std::move(in)), std::move(rows));
  });

  auto* pc = cb->add_subcommand("product-chern",
                                "obstruction for a product of curves");
  pc->add_option("--g1", g1_pchern, "genus of the first factor")->required();
  pc->add_option("--g2", g2_pchern, "genus of the second factor")->required();
  pc->add_option("--p", p_pchern, "prime")->required();
  pc->add_option("--N", N_pchern, "level")->required();
  pc->callback([] {
    const ChernData data = product_chern(g1_pchern, g2_pchern);
    const bool obstructed =
        product_obstructed(g1_pchern, g2_pchern, p_pchern, N_pchern);
    Json in{{"g1", g1_pchern}, {"g2", g2_pchern}, {"p", p_pchern},
            {"N", N_pchern}};
    set_verdict(start("comb product-chern", std::move(in)), obstructed,
                Json{{"c1sq", data.c1sq}, {"c2", data.c2}});
  });

  auto* gc = cb->add_subcommand("genus-count",
                                "closed trigonometric counting formula");
  gc->add_option("--p", p_genus, "odd prime, 3 <= p <= 50")->required();
  gc->add_option("--g", g_genus, "genus, 2 <= g <= 5")->required();
  gc->callback([] {
    const GenusCount res = genus_count(p_genus, g_genus);
    Json in{{"p", p_genus}, {"g", g_genus}};
    set_value(start("comb genus-count", std::move(in)), res.count,
              Json{{"residual", res.residual}});
  });
}

void register_orbits(CLI::App& app) {
  auto* ob = app.add_subcommand("orbits",
                                "etale endomorphisms of the affine line");
  ob->require_subcommand(1);

  static ChartOpts chart_canon;
  static int N_canon = 1, N_count = 1;
  static std::int64_t p_count = 3, deg_count = 1, cap_count = 1000000;
  static std::string f_canon;

  auto* cn = ob->add_subcommand("canon", "canonical orbit representative");
  chart_canon.attach(cn, "t");
  cn->add_option("--N", N_canon, "level")->required();
  cn->add_option("--f", f_canon, "etale polynomial")->required();
  cn->callback([] {
    const ChartPtr c = chart_canon.chart();
    const EtaleRep rep(parse_poly(c, f_canon), N_canon);
    Json in = chart_canon.echo();
    in["N"] = N_canon;
    in["f"] = f_canon;
    set_value(start("orbits canon", std::move(in)),
              canonical_rep(rep).f.to_string());
  });

  auto* ct = ob->add_subcommand("count", "orbits within a degree bound");
  ct->add_option("--p", p_count, "prime")->required();
  ct->add_option("--N", N_count, "level")->required();
  ct->add_option("--deg", deg_count, "degree bound")->required();
  ct->add_option("--cap", cap_count, "enumeration cap (default 1000000)");
  ct->callback([] {
    const auto count =
        count_orbits(p_count, N_count, deg_count, effective_cap(cap_count));
    Json in{{"p", p_count}, {"N", N_count}, {"deg", deg_count}};
    set_value(start("orbits count", std::move(in)),
              count.convert_to<std::int64_t>());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frobstruct: Frobenius-geometry toolkit in characteristic p"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string format = "json";
  app.add_option("--format", format, "output format: json (default) or text")
      ->check(CLI::IsMember({"json", "text"}));

  register_dop(app);
  register_dmod(app);
  register_indig(app);
  register_tango(app);
  register_comb(app);
  register_orbits(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  emit(format, report.doc);
  return report.rc;
}
