#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "genbound/cli.hpp"

using namespace genbound;
using namespace genbound::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("genbound_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d / name;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

std::size_t count_lines(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

int tool(const std::string& args) {
  std::string cmd = std::string(GENBOUND_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(CanonicalJson, SortedKeysAndFloats) {
  Json j = {{"b", 1}, {"a", 0.1}, {"c", 2.0}, {"d", std::nan("")}, {"e", -kInf}};
  EXPECT_EQ(canonical_dump(j), R"({"a":0.10000000000000001,"b":1,"c":2.0,"d":"nan","e":"-inf"})");
  Json back = Json::parse(canonical_dump(j));
  EXPECT_EQ(as_double(back["a"]), 0.1);
  EXPECT_TRUE(std::isnan(as_double(back["d"])));
  EXPECT_EQ(as_double(back["e"]), -kInf);
  EXPECT_THROW(as_double(Json("abc")), Error);
}

TEST(CanonicalJson, BoundReportRoundTrip) {
  BoundReport r = thm1_bound(1.3, 0.5, 30, 0.1, 0.02);
  r.terms["huge"] = kInf;
  r.flags.push_back("x");
  Json back = Json::parse(canonical_dump(to_json(r)));
  EXPECT_EQ(back["kind"], "thm1");
  EXPECT_EQ(as_double(back["value"]), r.value);
  for (const auto& [k, v] : r.terms) EXPECT_EQ(as_double(back["terms"][k]), v) << k;
  for (const auto& [k, v] : r.params) EXPECT_EQ(as_double(back["params"][k]), v) << k;
  EXPECT_EQ(back["flags"], Json::array({"x"}));
}

TEST(CanonicalJson, HashStability) {
  // FIPS 180 test vector.
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  BoundReport r = fixed_size_bound(1.0, 1.0, 100, 0.1, 0.01);
  fs::path a = scratch("h1.json"), b = scratch("h2.json");
  write_file(a.string(), canonical_dump(to_json(r)));
  write_file(b.string(), canonical_dump(to_json(r)));
  EXPECT_EQ(sha256_hex(read_file(a.string())), sha256_hex(read_file(b.string())));
}

TEST(CanonicalJson, CoveringCsvRowCount) {
  std::vector<CoveringRow> rows(3);
  for (std::size_t i = 0; i < 3; ++i) rows[i].m = 4 * (i + 1);
  std::string csv = covering_csv(rows);
  EXPECT_EQ(count_lines(csv), 4u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "m,trials,failures,failure_prob,exponent,censored,rule_of_three");
}

TEST(StrictJson, DuplicateKeyNamed) {
  std::string e = error_of([] { parse_json_strict(R"({"params": {"kind": "thm1", "kind": "eq4"}})", "config"); });
  EXPECT_TRUE(contains(e, "duplicate key")) << e;
  EXPECT_TRUE(contains(e, "params.kind")) << e;
  EXPECT_TRUE(contains(error_of([] { parse_json_strict("{", "config"); }), "config"));
}

TEST(ParseConfig, EmptyFilePlusFlags) {
  Overrides ov;
  ov.subcommand = "bound";
  ov.seed = "7";
  ov.threads = "2";
  ov.out = "r.json";
  ov.params = {{"kind", "thm1"}, {"n", "50"}, {"delta", "0.05"}};
  RunConfig c = parse_config(std::string(""), ov);
  EXPECT_EQ(c.subcommand, "bound");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_EQ(c.out, "r.json");
  EXPECT_EQ(c.params["n"], 50);
  EXPECT_EQ(c.params["delta"], 0.05);
  EXPECT_EQ(c.params["epsilon"], 0.0);  // default filled
}

TEST(ParseConfig, FlagsOverrideFile) {
  std::string file = R"({"subcommand": "covering", "seed": 3, "params": {"trials": 500, "nu1": 0.2}})";
  Overrides ov;
  ov.params["trials"] = "900";
  ov.seed = "4";
  RunConfig c = parse_config(file, ov);
  EXPECT_EQ(c.params["trials"], 900);
  EXPECT_EQ(c.params["nu1"], 0.2);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.out, "covering.csv");
}

TEST(ParseConfig, PathQualifiedErrors) {
  auto err = [](const std::string& text) { return error_of([&] { parse_config(text, {}); }); };
  EXPECT_TRUE(contains(err(R"({"subcommand": "covering", "colour": 1})"), "colour: unknown key"));
  EXPECT_TRUE(contains(err(R"({"subcommand": "covering", "params": {"kind": "x"}})"), "params.kind: unknown key"));
  EXPECT_TRUE(contains(err(R"({"subcommand": "covering", "params": {"trials": "many"}})"),
                       "params.trials: expected integer"));
  EXPECT_TRUE(contains(err(R"({"subcommand": "bound"})"), "params.kind: missing required field"));
  EXPECT_TRUE(contains(err(R"({"seed": 1})"), "subcommand: missing required field"));
  EXPECT_TRUE(contains(err(R"({"subcommand": "covering", "threads": 0})"), "threads"));
  EXPECT_TRUE(contains(err(R"({"subcommand": "teleport"})"), "teleport"));
  Overrides ov;
  ov.subcommand = "covering";
  ov.params["m_grid"] = "4,x";
  EXPECT_TRUE(contains(error_of([&] { parse_config(std::nullopt, ov); }), "params.m_grid"));
}

TEST(ParseConfig, CanonicalRoundTrip) {
  for (const auto& spec : subcommands()) {
    Overrides ov;
    ov.subcommand = spec.name;
    ov.seed = "18446744073709551615";
    if (spec.name == "bound") ov.params["kind"] = "seeger";
    if (spec.name == "sweep") ov.params["values"] = "10,20,40";
    RunConfig c = parse_config(std::nullopt, ov);
    std::string text = canonical_dump(config_to_json(c));
    RunConfig back = parse_config(text, {});
    EXPECT_TRUE(back == c) << spec.name;
    EXPECT_EQ(canonical_dump(config_to_json(back)), text);
  }
}

TEST(Loaders, InlineLearningProblem) {
  Json p = Json::parse(R"({"loss": [[0.1, 0.9], [0.8, 0.3]], "mu": [0.4, 0.6], "B": 1.0, "beta": 2.5})");
  LearningSetup s = load_learning_problem(p);
  EXPECT_EQ(s.problem.loss(1, 0), 0.8);
  EXPECT_EQ(s.problem.mu[1], 0.6);
  EXPECT_EQ(s.beta, 2.5);
  EXPECT_EQ(s.prior.size(), 2u);
  EXPECT_TRUE(contains(error_of([] { load_learning_problem(Json::parse(R"({"loss": [[0.1]], "extra": 1})")); }),
                       "problem.extra"));
  EXPECT_EQ(load_learning_problem(Json()).problem.loss.rows, demo_gibbs_problem().loss.rows);
  EXPECT_EQ(load_toy_spec(Json()).points.size(), default_logistic_spec().points.size());
}

TEST(Run, BoundDispatchIdentity) {
  Overrides ov;
  ov.subcommand = "bound";
  ov.out = scratch("report.json").string();
  ov.params = {{"kind", "thm1"}, {"rate", "2"}, {"sigma", "1"}, {"n", "50"}, {"delta", "0.05"}};
  RunManifest m = run(parse_config(std::nullopt, ov));
  EXPECT_EQ(m.exit_code, 0);
  Json rep = Json::parse(read_file(ov.out.value()));
  EXPECT_EQ(as_double(rep["value"]), thm1_bound(2.0, 1.0, 50, 0.05, 0.0).value);
  ASSERT_EQ(m.outputs.size(), 1u);
  EXPECT_EQ(m.outputs[0].sha256, sha256_hex(read_file(ov.out.value())));
  Json man = Json::parse(read_file(ov.out.value() + ".manifest.json"));
  EXPECT_EQ(man["version"], kVersion);
  EXPECT_EQ(man["config"]["params"]["kind"], "thm1");
}

TEST(Run, SameSeedSameHashes) {
  for (const std::string& sub : {"mc-validate", "covering", "counterexample"}) {
    Overrides ov;
    ov.subcommand = sub;
    ov.seed = "11";
    ov.threads = "3";
    ov.out = scratch(sub + ".out").string();
    ov.params["trials"] = sub == "covering" ? "2000" : "200";
    if (sub == "counterexample") ov.params["n_list"] = "4,6";
    RunConfig c = parse_config(std::nullopt, ov);
    RunManifest a = run(c);
    std::string first = read_file(c.out);
    c.threads = 1;
    RunManifest b = run(c);
    EXPECT_EQ(a.outputs[0].sha256, b.outputs[0].sha256) << sub;
    EXPECT_EQ(first, read_file(c.out)) << sub;
  }
}

TEST(Run, CounterexampleSingleRow) {
  Overrides ov;
  ov.subcommand = "counterexample";
  ov.out = scratch("scaling.csv").string();
  ov.params = {{"n_list", "4"}, {"trials", "200"}};
  run(parse_config(std::nullopt, ov));
  EXPECT_EQ(count_lines(read_file(ov.out.value())), 2u);
}

TEST(Run, CsvRowsMatchInputs) {
  Overrides ov;
  ov.subcommand = "sweep";
  ov.out = scratch("sweep.csv").string();
  ov.params = {{"values", "10,20,40,80"}, {"kind", "eq4"}};
  run(parse_config(std::nullopt, ov));
  std::string csv = read_file(ov.out.value());
  EXPECT_EQ(count_lines(csv), 5u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,value,infinite");

  ov.subcommand = "rd";
  ov.out = scratch("rd.csv").string();
  ov.params = {{"source", "0.5,0.5"}, {"eps_grid", "0.05,0.1,0.25"}};
  run(parse_config(std::nullopt, ov));
  EXPECT_EQ(count_lines(read_file(ov.out.value())), 4u);
}

TEST(Tool, ExitCodes) {
  std::string out = scratch("tool.json").string();
  EXPECT_EQ(tool("bound --kind thm1 --out " + out), 0);
  EXPECT_TRUE(fs::exists(out + ".manifest.json"));
  EXPECT_EQ(tool("bound --kind nonsense --out " + out), 1);
  EXPECT_EQ(tool("bound --no-such-flag 3"), 1);
  EXPECT_EQ(tool("mc-validate --trials 500 --n 10 --out " + scratch("mc.json").string()), 0);
  // Block lengths 4 and 8 with no rate slack stop short of the log(1/delta) - 0.2 target.
  EXPECT_EQ(tool("covering --nu1 0 --m-grid 4,8 --trials 5000 --out " + scratch("cov.csv").string()), 2);

  std::string cfg = scratch("cfg.json").string();
  write_file(cfg, R"({"subcommand": "bound", "params": {"kind": "eq4"}, "out": ")" + out + "\"}");
  EXPECT_EQ(tool("--config " + cfg), 0);
  EXPECT_EQ(Json::parse(read_file(out))["kind"], "eq4");
}
