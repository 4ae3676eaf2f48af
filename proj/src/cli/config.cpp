#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>

#include "genbound/cli.hpp"

namespace genbound::cli {

namespace {

ParamSpec req(std::string key, ParamType t, std::string help) { return {std::move(key), t, Json(), std::move(help)}; }
ParamSpec opt(std::string key, ParamType t, Json def, std::string help) {
  return {std::move(key), t, std::move(def), std::move(help)};
}

std::vector<SubcommandSpec> build_specs() {
  using P = ParamType;
  std::vector<double> lr_grid = default_lr_grid();
  return {
      {"bound",
       "Evaluate one bound on a finite learning problem",
       "report.json",
       "problem",
       {req("kind", P::String, "thm1, eq4, eq21, seeger, eq22, prop5i, prop5ii, toy, thm5i or thm5ii"),
        opt("n", P::Int, 25, "sample size"), opt("delta", P::Real, 0.1, "confidence parameter"),
        opt("epsilon", P::Real, 0.0, "distortion level"),
        opt("rate", P::Real, 1.0, "rate R for thm1 and eq4"),
        opt("sigma", P::Real, 0.0, "subgaussian parameter; 0 uses B/2 of the problem"),
        opt("emp_risk", P::Real, 0.1, "empirical risk for seeger"),
        opt("sup_mi", P::Real, 1.0, "information term for seeger"),
        opt("log_mgf", P::Real, 0.0, "log-MGF term for eq22"),
        opt("lambda", P::Real, 0.0, "scale of f = lambda gen; 0 means sqrt(n) for prop5, optimized for thm5"),
        opt("alpha", P::Real, 2.0, "Renyi order for thm5ii"),
        opt("mgf", P::String, "exact", "exact or subgaussian log-MGF for thm5i"),
        opt("msq", P::Real, 1.0, "sum of squared sample means for toy"),
        opt("lipschitz", P::Real, 1.0, "Lipschitz constant for toy"), opt("d", P::Int, 1, "dimension for toy"),
        opt("budget", P::Int, 60, "search budget for the eq21 supremum")}},
      {"rd",
       "Rate-distortion curve of a finite source",
       "rd.csv",
       "",
       {opt("source", P::RealList, Json::array(), "source pmf (ignored when grid_points > 0)"),
        opt("distortion", P::String, "hamming", "hamming or abs (|i - j| / (k - 1))"),
        opt("grid_points", P::Int, 0, "uniform source on k grid points of [0, 1] with abs distortion"),
        opt("eps_grid", P::RealList, Json::array({0.05, 0.1, 0.25}), "distortion levels")}},
      {"mc-validate",
       "Monte Carlo check of a tail bound's violation rate",
       "validation.json",
       "problem",
       {opt("n", P::Int, 25, "sample size"), opt("delta", P::Real, 0.1, "confidence parameter"),
        opt("trials", P::Int, 10000, "Monte Carlo trials"), opt("epsilon", P::Real, 0.0, "distortion level"),
        opt("bound", P::String, "thm1", "thm1 (information-density rate) or eq4 (rate log |W|)")}},
      {"covering",
       "Excess-distortion probability of variable-size random coding",
       "covering.csv",
       "",
       {opt("nu1", P::Real, 0.1, "rate slack"), opt("epsilon", P::Real, 0.016, "distortion level"),
        opt("delta", P::Real, 0.5, "target failure probability"),
        opt("m_grid", P::IntList, Json::array({4, 8, 12}), "block lengths"),
        opt("trials", P::Int, 100000, "trials per block length")}},
      {"trajectory",
       "Learning-rate sweep of trajectory gen and RD",
       "sweep.csv",
       "spec",
       {opt("lr_grid", P::RealList, lr_grid, "learning rates"), opt("trials", P::Int, 50, "trials per rate"),
        opt("epsilon", P::Real, 0.0, "RD distortion level; 0 uses 10% of the visited range")}},
      {"counterexample",
       "Scaling study of the convex counter-example",
       "scaling.csv",
       "",
       {opt("n_list", P::IntList, Json::array({4, 6, 8, 10}), "sample sizes"),
        opt("trials", P::Int, 2000, "Monte Carlo trials per n"),
        opt("mode", P::String, "both", "expectation, tail or both"),
        opt("r", P::Real, 0.0, "quantizer parameter; 0 uses 1 - 1/n^2"),
        opt("delta", P::Real, 0.1, "confidence parameter for the tail bound")}},
      {"sweep",
       "Evaluate a scalar bound over a grid of one parameter",
       "bound_sweep.csv",
       "problem",
       {req("values", P::RealList, "grid of values for the swept parameter"),
        opt("kind", P::String, "thm1", "thm1, eq4, seeger or toy"),
        opt("param", P::String, "n", "swept parameter"), opt("n", P::Int, 25, "sample size"),
        opt("delta", P::Real, 0.1, "confidence parameter"), opt("epsilon", P::Real, 0.0, "distortion level"),
        opt("rate", P::Real, 1.0, "rate R"),
        opt("sigma", P::Real, 0.0, "subgaussian parameter; 0 uses B/2 of the problem"),
        opt("emp_risk", P::Real, 0.1, "empirical risk for seeger"),
        opt("sup_mi", P::Real, 1.0, "information term for seeger"),
        opt("msq", P::Real, 1.0, "sum of squared sample means for toy"),
        opt("lipschitz", P::Real, 1.0, "Lipschitz constant for toy"), opt("d", P::Int, 1, "dimension for toy")}},
  };
}

const char* type_name(ParamType t) {
  switch (t) {
    case ParamType::Int: return "integer";
    case ParamType::Real: return "number";
    case ParamType::String: return "string";
    case ParamType::Bool: return "boolean";
    case ParamType::IntList: return "list of integers";
    case ParamType::RealList: return "list of numbers";
  }
  return "?";
}

std::string json_type(const Json& j) {
  if (j.is_number_integer()) return "integer";
  if (j.is_number()) return "number";
  return j.type_name();
}

bool is_nonfinite_text(const Json& j) {
  if (!j.is_string()) return false;
  const std::string s = j.get<std::string>();
  return s == "inf" || s == "-inf" || s == "nan";
}

Json coerce_json(const Json& v, ParamType t, const std::string& path) {
  auto mismatch = [&](const Json& got) {
    return Error(path + ": expected " + type_name(t) + ", got " + json_type(got));
  };
  switch (t) {
    case ParamType::Int:
      if (!v.is_number_integer()) throw mismatch(v);
      return Json(v.get<std::int64_t>());
    case ParamType::Real:
      if (!v.is_number() && !is_nonfinite_text(v)) throw mismatch(v);
      return Json(as_double(v));
    case ParamType::String:
      if (!v.is_string()) throw mismatch(v);
      return v;
    case ParamType::Bool:
      if (!v.is_boolean()) throw mismatch(v);
      return v;
    case ParamType::IntList:
    case ParamType::RealList: {
      if (!v.is_array()) throw mismatch(v);
      const ParamType elem = t == ParamType::IntList ? ParamType::Int : ParamType::Real;
      Json out = Json::array();
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(coerce_json(v[i], elem, path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }
  throw Error(path + ": unsupported type");
}

std::int64_t parse_int_text(const std::string& s, const std::string& path) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw Error(path + ": expected integer, got '" + s + "'");
  return v;
}

double parse_real_text(const std::string& s, const std::string& path) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw Error(path + ": expected number, got '" + s + "'");
  return v;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    std::size_t p = s.find(',', start);
    out.push_back(s.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

Json coerce_text(const std::string& s, ParamType t, const std::string& path) {
  switch (t) {
    case ParamType::Int: return Json(parse_int_text(s, path));
    case ParamType::Real: return Json(parse_real_text(s, path));
    case ParamType::String: return Json(s);
    case ParamType::Bool:
      if (s == "true" || s == "1") return Json(true);
      if (s == "false" || s == "0") return Json(false);
      throw Error(path + ": expected boolean, got '" + s + "'");
    case ParamType::IntList:
    case ParamType::RealList: {
      Json out = Json::array();
      auto parts = split_commas(s);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (t == ParamType::IntList)
          out.push_back(parse_int_text(parts[i], p));
        else
          out.push_back(parse_real_text(parts[i], p));
      }
      return out;
    }
  }
  throw Error(path + ": unsupported type");
}

std::uint64_t parse_u64_text(const std::string& s, const std::string& path) {
  errno = 0;
  char* end = nullptr;
  if (s.empty() || s[0] == '-') throw Error(path + ": expected non-negative integer, got '" + s + "'");
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) throw Error(path + ": expected non-negative integer, got '" + s + "'");
  return v;
}

std::uint64_t json_u64(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  throw Error(path + ": expected non-negative integer, got " + json_type(j));
}

const ParamSpec* find_param(const SubcommandSpec& spec, const std::string& key) {
  for (const auto& p : spec.params)
    if (p.key == key) return &p;
  return nullptr;
}

}  // namespace

const std::vector<SubcommandSpec>& subcommands() {
  static const std::vector<SubcommandSpec> specs = build_specs();
  return specs;
}

const SubcommandSpec& subcommand_spec(const std::string& name) {
  for (const auto& s : subcommands())
    if (s.name == name) return s;
  throw Error("subcommand: unknown value '" + name + "'");
}

bool RunConfig::operator==(const RunConfig& o) const {
  return subcommand == o.subcommand && problem == o.problem && seed == o.seed && threads == o.threads &&
         out == o.out && params == o.params;
}

RunConfig parse_config(const std::optional<std::string>& file_text, const Overrides& flags) {
  Json file = Json::object();
  if (file_text && file_text->find_first_not_of(" \t\r\n") != std::string::npos) {
    file = parse_json_strict(*file_text, "config");
    if (!file.is_object()) throw Error("config: top level must be an object");
  }
  static const std::vector<std::string> top = {"subcommand", "problem", "seed", "threads", "out", "params"};
  for (const auto& [k, v] : file.items()) {
    if (std::find(top.begin(), top.end(), k) == top.end()) throw Error(k + ": unknown key");
  }

  RunConfig c;
  if (flags.subcommand) {
    c.subcommand = *flags.subcommand;
  } else if (file.contains("subcommand")) {
    if (!file["subcommand"].is_string()) throw Error("subcommand: expected string, got " + json_type(file["subcommand"]));
    c.subcommand = file["subcommand"].get<std::string>();
  } else {
    throw Error("subcommand: missing required field");
  }
  const SubcommandSpec& spec = subcommand_spec(c.subcommand);

  if (flags.seed)
    c.seed = parse_u64_text(*flags.seed, "seed");
  else if (file.contains("seed"))
    c.seed = json_u64(file["seed"], "seed");

  std::uint64_t threads = 1;
  if (flags.threads)
    threads = parse_u64_text(*flags.threads, "threads");
  else if (file.contains("threads"))
    threads = json_u64(file["threads"], "threads");
  if (threads < 1 || threads > 1024) throw Error("threads: must lie in [1, 1024]");
  c.threads = static_cast<unsigned>(threads);

  if (flags.out) {
    c.out = *flags.out;
  } else if (file.contains("out")) {
    if (!file["out"].is_string()) throw Error("out: expected string, got " + json_type(file["out"]));
    c.out = file["out"].get<std::string>();
  } else {
    c.out = spec.default_out;
  }
  if (c.out.empty()) throw Error("out: must not be empty");

  if (flags.problem) {
    c.problem = *flags.problem;
  } else if (file.contains("problem")) {
    const Json& p = file["problem"];
    if (!p.is_null() && !p.is_string() && !p.is_object())
      throw Error("problem: expected path string or object, got " + json_type(p));
    c.problem = p;
  }
  if (!c.problem.is_null() && spec.problem_flag.empty())
    throw Error("problem: subcommand " + spec.name + " takes no problem");

  c.params = Json::object();
  if (file.contains("params")) {
    const Json& ps = file["params"];
    if (!ps.is_object()) throw Error("params: expected object, got " + json_type(ps));
    for (const auto& [k, v] : ps.items()) {
      const ParamSpec* p = find_param(spec, k);
      if (!p) throw Error("params." + k + ": unknown key for subcommand " + spec.name);
      c.params[k] = coerce_json(v, p->type, "params." + k);
    }
  }
  for (const auto& [k, text] : flags.params) {
    const ParamSpec* p = find_param(spec, k);
    if (!p) throw Error("params." + k + ": unknown key for subcommand " + spec.name);
    c.params[k] = coerce_text(text, p->type, "params." + k);
  }
  for (const auto& p : spec.params) {
    if (c.params.contains(p.key)) continue;
    if (p.default_value.is_null()) throw Error("params." + p.key + ": missing required field");
    c.params[p.key] = coerce_json(p.default_value, p.type, "params." + p.key);
  }
  return c;
}

Json config_to_json(const RunConfig& c) {
  Json j;
  j["subcommand"] = c.subcommand;
  if (!c.problem.is_null()) j["problem"] = c.problem;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out;
  j["params"] = c.params;
  return j;
}

}  // namespace genbound::cli
