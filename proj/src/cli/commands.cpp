#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>

#include "CLI11.hpp"
#include "genbound/cli.hpp"
#include "genbound/counterexample.hpp"
#include "genbound/rate_distortion.hpp"
#include "genbound/rng.hpp"

namespace genbound::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Typed accessors over RunConfig::params; parse_config already fixed the types.
struct Params {
  const Json& j;

  double real(const std::string& k) const { return as_double(j.at(k)); }
  std::string str(const std::string& k) const { return j.at(k).get<std::string>(); }
  std::size_t size(const std::string& k) const {
    std::int64_t v = j.at(k).get<std::int64_t>();
    if (v < 0) throw Error("params." + k + ": must be non-negative");
    return static_cast<std::size_t>(v);
  }
  std::vector<double> reals(const std::string& k) const {
    std::vector<double> out;
    for (const auto& v : j.at(k)) out.push_back(as_double(v));
    return out;
  }
  std::vector<std::int64_t> ints(const std::string& k) const { return j.at(k).get<std::vector<std::int64_t>>(); }
};

std::vector<double> real_vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(path + ": expected list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(path + "[" + std::to_string(i) + "]: expected number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

Matrix real_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw Error(path + ": expected non-empty list of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(real_vector(j[i], path + "[" + std::to_string(i) + "]"));
  for (const auto& r : rows)
    if (r.size() != rows[0].size() || r.empty()) throw Error(path + ": rows must have equal, positive length");
  return Matrix::from_rows(rows);
}

Json resolve_problem(const Json& problem, const std::string& what) {
  if (problem.is_string()) {
    const std::string path = problem.get<std::string>();
    Json j = parse_json_strict(read_file(path), path);
    if (!j.is_object()) throw Error(path + ": " + what + " must be a JSON object");
    return j;
  }
  return problem;
}

void reject_unknown(const Json& obj, const std::vector<std::string>& allowed, const std::string& prefix) {
  for (const auto& [k, v] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) throw Error(prefix + "." + k + ": unknown key");
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Outcome {
  std::string bytes;
  int exit_code = 0;
};

double sigma_of(const Params& p, const LearningSetup& setup) {
  double s = p.real("sigma");
  return s > 0.0 ? s : setup.problem.sigma();
}

// Kinds that only need scalar inputs; shared by `bound` and `sweep`.
BoundReport scalar_bound(const std::string& kind, const std::map<std::string, double>& v) {
  auto count = [&](const char* k) {
    double x = v.at(k);
    if (!(x >= 1.0) || x != std::floor(x)) throw Error(std::string("params.") + k + ": must be a positive integer");
    return static_cast<std::size_t>(x);
  };
  if (kind == "thm1") return thm1_bound(v.at("rate"), v.at("sigma"), count("n"), v.at("delta"), v.at("epsilon"));
  if (kind == "eq4") return fixed_size_bound(v.at("rate"), v.at("sigma"), count("n"), v.at("delta"), v.at("epsilon"));
  if (kind == "seeger")
    return seeger_fast_rate_bound(v.at("emp_risk"), v.at("sup_mi"), v.at("sigma"), count("n"), v.at("delta"));
  if (kind == "toy")
    return toy_example_bound(v.at("msq"), v.at("lipschitz"), count("d"), v.at("sigma"), count("n"), v.at("delta"));
  throw Error("params.kind: '" + kind + "' is not a scalar bound kind (thm1, eq4, seeger, toy)");
}

std::map<std::string, double> scalar_values(const Params& p, const LearningSetup& setup) {
  std::map<std::string, double> v;
  for (const char* k : {"delta", "epsilon", "rate", "emp_risk", "sup_mi", "msq", "lipschitz"}) v[k] = p.real(k);
  v["n"] = double(p.size("n"));
  v["d"] = double(p.size("d"));
  v["sigma"] = sigma_of(p, setup);
  return v;
}

Outcome cmd_bound(const RunConfig& c) {
  const Params p{c.params};
  const LearningSetup setup = load_learning_problem(c.problem);
  const FiniteLearningProblem& prob = setup.problem;
  const Algorithm alg = gibbs_algorithm(prob, setup.prior, setup.beta);
  const std::string kind = p.str("kind");
  const std::size_t n = p.size("n");
  const double delta = p.real("delta"), eps = p.real("epsilon");
  if (n == 0) throw Error("params.n: must be positive");

  BoundReport r;
  if (kind == "thm1" || kind == "eq4" || kind == "seeger" || kind == "toy") {
    r = scalar_bound(kind, scalar_values(p, setup));
  } else if (kind == "eq21") {
    RdTailOptions o;
    o.search_budget = static_cast<int>(p.size("budget"));
    o.seed = c.seed;
    r = rd_tail_bound(prob, alg, n, delta, eps, o);
  } else if (kind == "eq22" || kind == "prop5i" || kind == "prop5ii") {
    const Dataset s = sample_dataset(prob, n, c.seed);
    const Pmf pi = alg.posterior(s);
    if (kind == "eq22") {
      r = pac_bayes_eq22(pi, setup.prior, p.real("log_mgf"), delta);
    } else {
      // f = g = lambda gen with the identity quantizer W_hat = W.
      const double lambda = p.real("lambda") > 0.0 ? p.real("lambda") : std::sqrt(double(n));
      const InducedJoint ij = induced_joint_auto(prob, alg, n);
      Matrix g = ij.gen_table(prob);
      for (double& x : g.data) x *= lambda;
      const double lm = log_mgf(ij.p_s(), Channel::constant(ij.datasets.size(), setup.prior), g);
      std::vector<double> f_row(prob.w_size());
      for (std::size_t w = 0; w < f_row.size(); ++w) f_row[w] = lambda * gen_error(prob, s, w);
      if (kind == "prop5i") {
        r = prop5_bound(Prop5iInput{pi, f_row, pi, f_row, setup.prior, lm, delta, eps});
      } else {
        Rng rng = make_rng(derive_seed(c.seed, 1));
        Prop5iiInput in;
        in.w = sample_index(pi.probs(), rng);
        in.kernel = Channel::identity(prob.w_size());
        in.p_w_given_s = pi;
        in.q_hat = setup.prior;
        in.log_mgf = lm;
        in.delta = delta;
        in.epsilon = eps;
        r = prop5_bound(in);
      }
    }
  } else if (kind == "thm5i" || kind == "thm5ii") {
    const InducedJoint ij = induced_joint_auto(prob, alg, n);
    const Matrix g = ij.gen_table(prob);
    Thm5Input in;
    in.P = ij.joint;
    in.p_hat = ij.joint.conditional();
    in.q_hat = Channel::constant(ij.datasets.size(), ij.joint.col_marginal());
    in.f = g;
    in.g = g;
    if (kind == "thm5ii")  // part ii needs f > 0: bound E[exp(gen)]
      for (double& x : in.f.data) x = std::exp(x);
    in.lambda = p.real("lambda");
    in.epsilon = eps;
    in.alpha = p.real("alpha");
    const std::string mgf = p.str("mgf");
    if (mgf != "exact" && mgf != "subgaussian") throw Error("params.mgf: expected exact or subgaussian");
    in.mgf = mgf == "exact" ? MgfMode::Exact : MgfMode::Subgaussian;
    in.sigma = sigma_of(p, setup);
    in.n = n;
    r = thm5_expectation_bound(kind == "thm5i" ? 1 : 2, in);
  } else {
    throw Error("params.kind: unknown bound kind '" + kind + "'");
  }
  return {canonical_dump(to_json(r)) + "\n", 0};
}

Outcome cmd_sweep(const RunConfig& c) {
  const Params p{c.params};
  const LearningSetup setup = load_learning_problem(c.problem);
  const std::string kind = p.str("kind"), param = p.str("param");
  std::map<std::string, double> base = scalar_values(p, setup);
  if (!base.count(param)) throw Error("params.param: '" + param + "' cannot be swept");
  std::string out = param + ",value,infinite\n";
  for (double x : p.reals("values")) {
    auto v = base;
    v[param] = x;
    BoundReport r = scalar_bound(kind, v);
    out += csv_num(x) + "," + csv_num(r.value) + "," + (std::isinf(r.value) ? "true" : "false") + "\n";
  }
  return {out, 0};
}

Outcome cmd_rd(const RunConfig& c) {
  const Params p{c.params};
  const std::size_t k_grid = p.size("grid_points");
  Pmf source;
  Matrix d;
  std::string dist = p.str("distortion");
  if (k_grid > 0) {
    source = Pmf::uniform(k_grid);
    dist = "abs";
  } else {
    source = Pmf(p.reals("source"));
  }
  const std::size_t k = source.size();
  if (k == 0) throw Error("params.source: empty source");
  d = Matrix(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      if (dist == "hamming")
        d(i, j) = i == j ? 0.0 : 1.0;
      else if (dist == "abs")
        d(i, j) = k > 1 ? std::fabs(double(i) - double(j)) / double(k - 1) : 0.0;
      else
        throw Error("params.distortion: expected hamming or abs");
    }
  std::string out = "epsilon,rate_nats,achieved_distortion,lagrange,iterations,converged\n";
  for (double eps : p.reals("eps_grid")) {
    RdSolution s = rd_curve(source, d, eps);
    out += csv_num(eps) + "," + csv_num(s.rate_nats) + "," + csv_num(s.achieved_distortion) + "," +
           csv_num(s.lagrange_lambda) + "," + std::to_string(s.iterations) + "," + (s.converged ? "true" : "false") +
           "\n";
  }
  return {out, 0};
}

Outcome cmd_mc_validate(const RunConfig& c) {
  const Params p{c.params};
  const LearningSetup setup = load_learning_problem(c.problem);
  const Algorithm alg = gibbs_algorithm(setup.problem, setup.prior, setup.beta);
  const std::size_t n = p.size("n"), trials = p.size("trials");
  const double delta = p.real("delta"), eps = p.real("epsilon");
  if (n == 0) throw Error("params.n: must be positive");
  TailBoundFn fn;
  const std::string which = p.str("bound");
  if (which == "thm1") {
    fn = information_density_bound(setup.problem, alg, n, delta, eps);
  } else if (which == "eq4") {
    const double v =
        fixed_size_bound(std::log(double(setup.problem.w_size())), setup.problem.sigma(), n, delta, eps).value;
    fn = [v](const Dataset&, std::size_t) { return v; };
  } else {
    throw Error("params.bound: expected thm1 or eq4");
  }
  ValidationReport r = mc_tail_validate(setup.problem, alg, fn, n, delta, trials, c.seed, c.threads);
  Json j = to_json(r);
  j["bound"] = which;
  j["n"] = n;
  return {canonical_dump(j) + "\n", r.pass ? 0 : 2};
}

Outcome cmd_covering(const RunConfig& c) {
  const Params p{c.params};
  const double delta = p.real("delta");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("params.delta: must lie in (0, 1)");
  std::vector<std::size_t> m_grid;
  for (auto m : p.ints("m_grid")) {
    if (m < 1) throw Error("params.m_grid: block lengths must be positive");
    m_grid.push_back(static_cast<std::size_t>(m));
  }
  if (m_grid.empty()) throw Error("params.m_grid: empty");
  auto rows = covering_failure_estimate(default_covering_instance(p.real("nu1")), p.real("epsilon"), m_grid,
                                        p.size("trials"), c.seed, c.threads);
  bool ok = rows.back().exponent >= std::log(1.0 / delta) - 0.2;
  for (std::size_t i = 1; i < rows.size(); ++i) ok = ok && rows[i].exponent >= rows[i - 1].exponent;
  return {covering_csv(rows), ok ? 0 : 2};
}

Outcome cmd_trajectory(const RunConfig& c) {
  const Params p{c.params};
  const ToySpec spec = load_toy_spec(c.problem);
  const double eps = p.real("epsilon");
  LrSweep sweep = lr_sweep(spec, p.reals("lr_grid"), p.size("trials"), eps > 0.0 ? std::optional<double>(eps)
                                                                                 : std::nullopt,
                           c.seed, c.threads);
  bool ok = true;
  for (const auto& r : sweep.rows)
    if (r.flag == "ok" && !r.curve_ok) ok = false;
  return {sweep.to_csv(), ok ? 0 : 2};
}

Outcome cmd_counterexample(const RunConfig& c) {
  const Params p{c.params};
  std::vector<int> ns;
  for (auto n : p.ints("n_list")) {
    if (n < 2 || n > 62) throw Error("params.n_list: each n must lie in [2, 62]");
    ns.push_back(static_cast<int>(n));
  }
  const std::string mode = p.str("mode");
  if (mode != "expectation" && mode != "tail" && mode != "both")
    throw Error("params.mode: expected expectation, tail or both");
  const double r = p.real("r"), delta = p.real("delta");
  std::function<double(int)> rule;
  if (r > 0.0) rule = [r](int) { return r; };
  const std::size_t trials = p.size("trials");
  ScalingStudy st = scaling_study(ns, trials, rule, c.seed, delta, c.threads);

  bool ok = true;
  const bool want_exp = mode != "tail", want_tail = mode != "expectation";
  for (auto& row : st.rows) {
    if (trials > 0) {
      if (want_exp && !row.dominance_ok) ok = false;
      const double se = std::sqrt(delta * (1.0 - delta) / double(trials));
      if (want_tail && row.tail_violation_rate > delta + 3.0 * se) ok = false;
    }
    if (!want_exp) row.bound_expectation = kNaN;
    if (!want_tail) row.bound_tail = row.tail_violation_rate = kNaN;
  }
  if (!want_exp) st.bound_slope = kNaN;
  return {st.to_csv(), ok ? 0 : 2};
}

}  // namespace

LearningSetup load_learning_problem(const Json& problem) {
  if (problem.is_null()) {
    FiniteLearningProblem prob = demo_gibbs_problem();
    Pmf prior = Pmf::uniform(prob.w_size());
    return {std::move(prob), std::move(prior), 1.0};
  }
  const Json j = resolve_problem(problem, "problem");
  reject_unknown(j, {"z_alphabet", "w_alphabet", "loss", "mu", "B", "prior", "beta"}, "problem");
  if (!j.contains("loss")) throw Error("problem.loss: missing required field");
  Matrix loss = real_matrix(j["loss"], "problem.loss");
  for (auto [key, dim] : {std::pair<const char*, std::size_t>{"z_alphabet", loss.rows}, {"w_alphabet", loss.cols}}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_number_integer() || j[key].get<std::int64_t>() != std::int64_t(dim))
      throw Error(std::string("problem.") + key + ": must be an integer equal to the loss table dimension");
  }
  Pmf mu = j.contains("mu") ? Pmf(real_vector(j["mu"], "problem.mu")) : Pmf::uniform(loss.rows);
  std::optional<double> B;
  if (j.contains("B")) {
    if (!j["B"].is_number()) throw Error("problem.B: expected number");
    B = j["B"].get<double>();
  }
  FiniteLearningProblem prob(std::move(loss), std::move(mu), B);
  Pmf prior = j.contains("prior") ? Pmf(real_vector(j["prior"], "problem.prior")) : Pmf::uniform(prob.w_size());
  if (prior.size() != prob.w_size()) throw Error("problem.prior: size differs from the number of hypotheses");
  double beta = 1.0;
  if (j.contains("beta")) {
    if (!j["beta"].is_number()) throw Error("problem.beta: expected number");
    beta = j["beta"].get<double>();
  }
  return {std::move(prob), std::move(prior), beta};
}

ToySpec load_toy_spec(const Json& problem) {
  ToySpec s = default_logistic_spec();
  if (problem.is_null()) return s;
  const Json j = resolve_problem(problem, "spec");
  reject_unknown(j, {"kind", "points", "labels", "mu", "reg", "bins", "lo", "hi", "n", "steps", "full_batch", "w0"},
                 "spec");
  auto number = [&](const char* k) {
    if (!j[k].is_number()) throw Error(std::string("spec.") + k + ": expected number");
    return j[k].get<double>();
  };
  auto count = [&](const char* k) {
    if (!j[k].is_number_integer() || j[k].get<std::int64_t>() < 0)
      throw Error(std::string("spec.") + k + ": expected non-negative integer");
    return static_cast<std::size_t>(j[k].get<std::int64_t>());
  };
  if (j.contains("kind")) {
    const std::string k = j["kind"].is_string() ? j["kind"].get<std::string>() : "";
    if (k == "logistic")
      s.kind = ToyKind::Logistic;
    else if (k == "quadratic")
      s.kind = ToyKind::Quadratic;
    else
      throw Error("spec.kind: expected logistic or quadratic");
  }
  if (j.contains("points")) {
    s.points.clear();
    const Json& pts = j["points"];
    if (!pts.is_array()) throw Error("spec.points: expected list of points");
    for (std::size_t i = 0; i < pts.size(); ++i)
      s.points.push_back(real_vector(pts[i], "spec.points[" + std::to_string(i) + "]"));
    if (!s.points.empty()) s.quantizer.dim = s.points[0].size();
  }
  if (j.contains("labels")) {
    s.labels.clear();
    for (const auto& y : j["labels"]) {
      if (!y.is_number_integer()) throw Error("spec.labels: expected integers");
      s.labels.push_back(y.get<int>());
    }
  }
  if (j.contains("mu")) s.mu = real_vector(j["mu"], "spec.mu");
  if (j.contains("reg")) s.reg = number("reg");
  if (j.contains("bins")) s.quantizer.bins = count("bins");
  if (j.contains("lo")) s.quantizer.lo = number("lo");
  if (j.contains("hi")) s.quantizer.hi = number("hi");
  if (j.contains("n")) s.n = count("n");
  if (j.contains("steps")) s.steps = count("steps");
  if (j.contains("full_batch")) {
    if (!j["full_batch"].is_boolean()) throw Error("spec.full_batch: expected boolean");
    s.full_batch = j["full_batch"].get<bool>();
  }
  if (j.contains("w0")) s.w0 = real_vector(j["w0"], "spec.w0");
  s.validate();
  return s;
}

Json RunManifest::to_json() const {
  Json j;
  j["config"] = config;
  j["version"] = version;
  j["wall_seconds"] = wall_seconds;
  j["exit_code"] = exit_code;
  j["outputs"] = Json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"sha256", o.sha256}});
  if (problem_sha256) j["problem_sha256"] = *problem_sha256;
  return j;
}

RunManifest run(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    const std::string& s = config.subcommand;
    if (s == "bound")
      o = cmd_bound(config);
    else if (s == "sweep")
      o = cmd_sweep(config);
    else if (s == "rd")
      o = cmd_rd(config);
    else if (s == "mc-validate")
      o = cmd_mc_validate(config);
    else if (s == "covering")
      o = cmd_covering(config);
    else if (s == "trajectory")
      o = cmd_trajectory(config);
    else if (s == "counterexample")
      o = cmd_counterexample(config);
    else
      throw Error("subcommand: unknown value '" + s + "'");
  } catch (const Error& e) {
    throw Error(config.subcommand + ": " + e.what());
  }
  write_file(config.out, o.bytes);

  RunManifest m;
  m.config = config_to_json(config);
  m.version = kVersion;
  m.outputs.push_back({config.out, sha256_hex(o.bytes)});
  if (config.problem.is_string()) m.problem_sha256 = sha256_hex(read_file(config.problem.get<std::string>()));
  m.exit_code = o.exit_code;
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(config.out + ".manifest.json", canonical_dump(m.to_json()) + "\n");
  return m;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"genbound: generalization bounds and their Monte Carlo checks on finite learning problems"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, seed, threads, out;
  auto* o_config = app.add_option("--config", config_path, "JSON config file; flags override its values");
  auto* o_seed = app.add_option("--seed", seed, "64-bit root seed");
  auto* o_threads = app.add_option("--threads", threads, "worker threads");
  auto* o_out = app.add_option("--out", out, "output file (a manifest is written next to it)");

  struct Slot {
    std::string sub, key;
    CLI::Option* opt;
    std::string value;
  };
  std::vector<std::unique_ptr<Slot>> slots;
  std::map<std::string, std::pair<CLI::Option*, std::unique_ptr<std::string>>> problem_opts;
  for (const auto& spec : subcommands()) {
    CLI::App* sc = app.add_subcommand(spec.name, spec.help);
    for (const auto& p : spec.params) {
      auto slot = std::make_unique<Slot>(Slot{spec.name, p.key, nullptr, {}});
      std::string flag = "--" + p.key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      slot->opt = sc->add_option(flag, slot->value, p.help);
      slots.push_back(std::move(slot));
    }
    if (!spec.problem_flag.empty()) {
      auto holder = std::make_unique<std::string>();
      CLI::Option* po = sc->add_option("--" + spec.problem_flag, *holder, "problem file (JSON)");
      problem_opts[spec.name] = {po, std::move(holder)};
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    Overrides ov;
    const auto chosen = app.get_subcommands();
    if (!chosen.empty()) ov.subcommand = chosen.front()->get_name();
    if (o_seed->count()) ov.seed = seed;
    if (o_threads->count()) ov.threads = threads;
    if (o_out->count()) ov.out = out;
    for (const auto& s : slots)
      if (ov.subcommand && s->sub == *ov.subcommand && s->opt->count()) ov.params[s->key] = s->value;
    if (ov.subcommand && problem_opts.count(*ov.subcommand)) {
      auto& [po, holder] = problem_opts[*ov.subcommand];
      if (po->count()) ov.problem = *holder;
    }
    std::optional<std::string> text;
    if (o_config->count()) text = read_file(config_path);
    RunConfig cfg = parse_config(text, ov);
    RunManifest m = run(cfg);
    std::cout << cfg.subcommand << ": wrote " << cfg.out << " (" << (m.exit_code == 0 ? "pass" : "validation failed")
              << ")\n";
    return m.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace genbound::cli
