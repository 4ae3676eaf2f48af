#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genbound/bounds.hpp"
#include "genbound/trajectory.hpp"
#include "genbound/validation.hpp"
#include "json.hpp"

namespace genbound::cli {

using Json = nlohmann::json;

// ---- canonical output ----

// Sorted keys, no whitespace, doubles with 17 significant digits (always with
// a '.' or exponent so they re-parse as floats), non-finite doubles as the
// strings "inf", "-inf" and "nan".
std::string canonical_dump(const Json& j);

// Number or one of the strings written for non-finite values.
double as_double(const Json& j);

Json to_json(const BoundReport& r);
Json to_json(const ValidationReport& r);
std::string covering_csv(const std::vector<CoveringRow>& rows);

std::string sha256_hex(const std::string& bytes);

// Writes bytes to path, throwing Error on IO failure.
void write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

// Parses JSON text and rejects duplicate object keys; `origin` prefixes errors.
Json parse_json_strict(const std::string& text, const std::string& origin);

// ---- configuration ----

enum class ParamType { Int, Real, String, Bool, IntList, RealList };

struct ParamSpec {
  std::string key;  // JSON key; the flag is --key with '_' replaced by '-'
  ParamType type;
  Json default_value;  // null means required
  std::string help;
};

struct SubcommandSpec {
  std::string name;
  std::string help;
  std::string default_out;
  std::string problem_flag;  // "" when the subcommand takes no problem file
  std::vector<ParamSpec> params;
};

const std::vector<SubcommandSpec>& subcommands();
const SubcommandSpec& subcommand_spec(const std::string& name);

struct RunConfig {
  std::string subcommand;
  Json problem;  // null, a path string, or an inline object
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
  Json params = Json::object();  // every schema key, typed, defaults filled

  bool operator==(const RunConfig& o) const;
};

// Values given on the command line; each wins over the file.
struct Overrides {
  std::optional<std::string> subcommand;
  std::optional<std::string> problem;
  std::optional<std::string> seed;
  std::optional<std::string> threads;
  std::optional<std::string> out;
  std::map<std::string, std::string> params;  // by JSON key
};

// Strict parse of an optional config file text merged with flag overrides.
// Errors name the offending path, e.g. "params.trials: expected integer".
RunConfig parse_config(const std::optional<std::string>& file_text, const Overrides& flags);

// Canonical config JSON; parse_config(config_to_json(c).dump(), {}) == c.
Json config_to_json(const RunConfig& c);

// ---- execution ----

struct OutputFile {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  Json config;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<OutputFile> outputs;
  std::optional<std::string> problem_sha256;
  int exit_code = 0;  // 0 pass, 2 validation failure

  Json to_json() const;
};

inline constexpr const char* kVersion = "0.1.0";

// Dispatches to the library, writes the output file at config.out and the
// manifest at config.out + ".manifest.json". Throws Error on failure.
RunManifest run(const RunConfig& config);

// Problem loaders used by run(); exposed for tests.
struct LearningSetup {
  FiniteLearningProblem problem;
  Pmf prior;
  double beta = 1.0;
};
LearningSetup load_learning_problem(const Json& problem);  // null -> demo_gibbs_problem
ToySpec load_toy_spec(const Json& problem);                // null -> default_logistic_spec

// argv front end: 0 pass, 2 validation failure, 1 error.
int main_entry(int argc, char** argv);

}  // namespace genbound::cli
