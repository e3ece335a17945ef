#include <catch2/catch_amalgamated.hpp>

#include <frobstruct/dmod.hpp>
#include <frobstruct/json_io.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace frobstruct;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'')
      q += "'\\''";
    else
      q += c;
  }
  return q + "'";
}

// Runs the installed binary with the given arguments, capturing stdout.
// Diagnostics go to /dev/null; failure paths assert on the exit code only.
RunResult run_cli(const std::vector<std::string>& args,
                  const std::string& env_prefix = "") {
  std::string cmd = env_prefix + FROBSTRUCT_CLI_PATH;
  for (const std::string& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>/dev/null";
  RunResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

Json parse_out(const RunResult& res) { return Json::parse(res.out); }

std::filesystem::path scratch_dir() {
  const auto dir =
      std::filesystem::temp_directory_path() / "frobstruct_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_json(const std::string& name, const Json& j) {
  const auto path = scratch_dir() / name;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  return path.string();
}

}  // namespace

TEST_CASE("documented invocations return the documented results") {
  const RunResult verify =
      run_cli({"tango", "verify", "--p", "3", "--N", "2", "--gen", "t - t^3"});
  CHECK(verify.exit_code == 0);
  const Json jv = parse_out(verify);
  CHECK(jv["command"] == "tango verify");
  CHECK(jv["verdict"] == true);

  const RunResult ratio =
      run_cli({"comb", "ratio", "--n", "2", "--N", "1", "--p", "3"});
  CHECK(ratio.exit_code == 0);
  CHECK(parse_out(ratio)["value"] == 3);

  const RunResult count =
      run_cli({"orbits", "count", "--p", "3", "--N", "1", "--deg", "9"});
  CHECK(count.exit_code == 0);
  CHECK(parse_out(count)["value"] == 1);
}

TEST_CASE("exit codes separate false verdicts from input errors") {
  const RunResult not_tango =
      run_cli({"tango", "verify", "--p", "3", "--N", "2", "--gen", "t^2"});
  CHECK(not_tango.exit_code == 1);
  CHECK(parse_out(not_tango)["verdict"] == false);

  CHECK(run_cli({"dmod", "validate", "--module", "/no/such/file.json"})
            .exit_code == 2);
  CHECK(run_cli({"tango", "verify", "--p", "3", "--N", "2", "--gen", "t +"})
            .exit_code == 2);
  CHECK(run_cli({"tango", "verify", "--p", "4", "--N", "1", "--gen", "t"})
            .exit_code == 2);
  CHECK(run_cli({"no-such-command"}).exit_code == 2);
  CHECK(run_cli({"comb", "count", "--n", "2", "--N", "2", "--p", "3"},
                "FROBSTRUCT_CAP=100 ")
            .exit_code == 2);
  CHECK(run_cli({"comb", "count", "--n", "2", "--N", "2", "--p", "3"},
                "FROBSTRUCT_CAP=bogus ")
            .exit_code == 2);
}

TEST_CASE("json output is byte-identical across repeated runs") {
  const std::vector<std::string> kappa{"tango", "kappa", "--p", "3",
                                       "--N", "2"};
  CHECK(run_cli(kappa).out == run_cli(kappa).out);

  const std::vector<std::string> classes{"comb", "classes", "--n", "2",
                                         "--N", "1", "--p", "3",
                                         "--kind", "delta"};
  const RunResult first = run_cli(classes);
  CHECK(first.out == run_cli(classes).out);
  CHECK(!first.out.empty());
}

TEST_CASE("pullback output feeds validation, dormancy, and pcurv") {
  const RunResult pb = run_cli({"dmod", "pullback", "--p", "3", "--vars", "x",
                                "--laurent", "x", "--rank", "1", "--N", "2",
                                "--unit", "x"});
  REQUIRE(pb.exit_code == 0);
  const std::string file = write_json("pullback.json", parse_out(pb)["value"]);

  const RunResult val = run_cli({"dmod", "validate", "--module", file});
  CHECK(val.exit_code == 0);
  CHECK(parse_out(val)["verdict"] == true);

  const RunResult dor = run_cli({"dmod", "dormant", "--module", file});
  CHECK(dor.exit_code == 0);
  const Json jd = parse_out(dor);
  CHECK(jd["verdict"] == true);
  CHECK(jd["witness"]["stages"] == 2);

  const RunResult pb0 = run_cli({"dmod", "pullback", "--p", "3", "--vars",
                                 "x", "--laurent", "x", "--rank", "1", "--N",
                                 "1", "--unit", "x"});
  REQUIRE(pb0.exit_code == 0);
  const std::string file0 =
      write_json("pullback0.json", parse_out(pb0)["value"]);
  const RunResult curv = run_cli({"dmod", "pcurv", "--module", file0});
  CHECK(curv.exit_code == 0);
  CHECK(parse_out(curv)["value"] == Json::array({Json::array({"0"})}));
}

TEST_CASE("emitted solution bases re-verify as horizontal sections") {
  const RunResult pb0 = run_cli({"dmod", "pullback", "--p", "3", "--vars",
                                 "x", "--laurent", "x", "--rank", "1", "--N",
                                 "1", "--unit", "x"});
  REQUIRE(pb0.exit_code == 0);
  const Json module_json = parse_out(pb0)["value"];
  const std::string file = write_json("solmod.json", module_json);

  const RunResult sol = run_cli({"dmod", "sol", "--module", file});
  REQUIRE(sol.exit_code == 0);
  const Json js = parse_out(sol);
  REQUIRE(js["verdict"] == true);

  const DMod m = dmod_from_json(module_json);
  ActionContext ctx(m);
  const Json& vectors = js["witness"]["vectors"];
  REQUIRE(vectors.size() == m.rank());
  for (const Json& jvec : vectors) {
    const std::vector<RingElem> v =
        section_from_json(m.chart(), jvec, "vector");
    for (const RingElem& w : ctx.basis_action(0, 1).apply(v))
      CHECK(w.is_zero());
  }

  SECTION("a non-dormant module reports the obstruction with exit 1") {
    const std::string bad = write_json(
        "nondormant.json",
        Json{{"p", 3},
             {"vars", Json::array({"x"})},
             {"level", 0},
             {"rank", 1},
             {"actions", Json{{"x:0", Json::array({Json::array({"1"})})}}}});
    const RunResult res = run_cli({"dmod", "sol", "--module", bad});
    CHECK(res.exit_code == 1);
    CHECK(parse_out(res)["verdict"] == false);
  }
}

TEST_CASE("candidate producers round-trip through the check subcommand") {
  const RunResult triv = run_cli({"indig", "trivial", "--p", "3", "--vars",
                                  "x,y", "--N", "2"});
  REQUIRE(triv.exit_code == 0);
  const std::string cand =
      write_json("trivial.json", parse_out(triv)["value"]);
  const RunResult check = run_cli({"indig", "check", "--candidate", cand});
  CHECK(check.exit_code == 0);
  const Json jc = parse_out(check);
  CHECK(jc["verdict"] == true);
  CHECK(jc["witness"]["indigenous"] == true);
  CHECK(jc["witness"]["kernel_stable"] == true);

  const RunResult rec = run_cli({"tango", "reconstruct", "--p", "3", "--N",
                                 "2", "--gen", "t - t^3"});
  REQUIRE(rec.exit_code == 0);
  const std::string rcand =
      write_json("reconstruct.json", parse_out(rec)["value"]);
  const RunResult rcheck = run_cli({"indig", "check", "--candidate", rcand});
  CHECK(rcheck.exit_code == 0);
  CHECK(parse_out(rcheck)["verdict"] == true);

  const RunResult dor = run_cli({"dmod", "dormant", "--module", rcand});
  CHECK(dor.exit_code == 0);
  CHECK(parse_out(dor)["verdict"] == true);

  SECTION("the degenerate splitting fails the check with exit 1") {
    Json degenerate = parse_out(triv)["value"];
    degenerate["line"] = Json::array({"1", "0", "0"});
    const std::string bad = write_json("degenerate.json", degenerate);
    const RunResult res = run_cli({"indig", "check", "--candidate", bad});
    CHECK(res.exit_code == 1);
    CHECK(parse_out(res)["verdict"] == false);
  }
}

TEST_CASE("canonical representatives are fixed points of the canon command") {
  const RunResult first = run_cli({"orbits", "canon", "--p", "3", "--N", "2",
                                   "--f", "2*t + t^9"});
  REQUIRE(first.exit_code == 0);
  const std::string rep = parse_out(first)["value"];
  CHECK(rep == "t");

  const RunResult again =
      run_cli({"orbits", "canon", "--p", "3", "--N", "2", "--f", rep});
  CHECK(parse_out(again)["value"] == rep);

  const RunResult twisted = run_cli({"orbits", "canon", "--p", "3", "--N",
                                     "2", "--f", "t - t^3"});
  const std::string trep = parse_out(twisted)["value"];
  CHECK(trep == "2*t^3 + t");
  const RunResult tagain =
      run_cli({"orbits", "canon", "--p", "3", "--N", "2", "--f", trep});
  CHECK(parse_out(tagain)["value"] == trep);
}

TEST_CASE("class representatives re-verify and counts are consistent") {
  const RunResult sn = run_cli({"comb", "classes", "--n", "2", "--N", "1",
                                "--p", "3", "--kind", "sn"});
  const RunResult delta = run_cli({"comb", "classes", "--n", "2", "--N", "1",
                                   "--p", "3", "--kind", "delta"});
  REQUIRE(sn.exit_code == 0);
  REQUIRE(delta.exit_code == 0);
  const Json jsn = parse_out(sn);
  const Json jdl = parse_out(delta);
  CHECK(jsn["value"].get<std::int64_t>() ==
        3 * jdl["value"].get<std::int64_t>());

  for (const Json& rep : jdl["witness"]["representatives"]) {
    REQUIRE(rep.size() == 2);
    const std::int64_t det = rep[0][0].get<std::int64_t>() *
                                 rep[1][1].get<std::int64_t>() -
                             rep[0][1].get<std::int64_t>() *
                                 rep[1][0].get<std::int64_t>();
    CHECK(((det % 3) + 3) % 3 != 0);
    CHECK(rep[0] <= rep[1]);
  }
}

TEST_CASE("truncated structures verify at the lower level") {
  const RunResult tr = run_cli({"tango", "truncate", "--p", "3", "--N", "2",
                                "--to", "1", "--gen", "t - t^3"});
  REQUIRE(tr.exit_code == 0);
  const Json jt = parse_out(tr);
  REQUIRE(jt["value"]["generators"].size() == 1);
  const std::string gen = jt["value"]["generators"][0];
  CHECK(gen == "t");

  const RunResult check =
      run_cli({"tango", "verify", "--p", "3", "--N", "1", "--gen", gen});
  CHECK(check.exit_code == 0);
}

TEST_CASE("operator products round-trip through the text grammar") {
  const std::string P = "(x) D<3> + (1) D<1>";
  const std::string Q = "(x^2) D<1>";
  const std::string f = "x^4 + x";
  const RunResult prod = run_cli({"dop", "mul", "--p", "3", "--m", "1",
                                  "--P", P, "--Q", Q});
  REQUIRE(prod.exit_code == 0);
  const std::string pq = parse_out(prod)["value"];

  const RunResult qf = run_cli({"dop", "apply", "--p", "3", "--m", "1",
                                "--P", Q, "--f", f});
  const std::string qf_val = parse_out(qf)["value"];
  const RunResult pqf = run_cli({"dop", "apply", "--p", "3", "--m", "1",
                                 "--P", P, "--f", qf_val});
  const RunResult direct = run_cli({"dop", "apply", "--p", "3", "--m", "1",
                                    "--P", pq, "--f", f});
  CHECK(parse_out(direct)["value"] == parse_out(pqf)["value"]);
}

TEST_CASE("text format renders one field per line") {
  const RunResult res = run_cli({"comb", "ratio", "--n", "1", "--N", "2",
                                 "--p", "3", "--format", "text"});
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("command: comb ratio") == 0);
  CHECK(res.out.find("value: 2") != std::string::npos);
}
