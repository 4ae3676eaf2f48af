#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "genbound/cli.hpp"

namespace genbound::cli {

namespace {

std::string float_text(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void dump_into(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {  // std::map keeps keys sorted
        if (!first) out += ',';
        first = false;
        out += Json(k).dump();
        out += ':';
        dump_into(v, out);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump_into(j[i], out);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      out += float_text(j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

}  // namespace

std::string canonical_dump(const Json& j) {
  std::string out;
  dump_into(j, out);
  return out;
}

double as_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
  }
  throw Error("expected a number, got " + j.dump());
}

Json to_json(const BoundReport& r) {
  Json j;
  j["kind"] = r.kind;
  j["value"] = r.value;
  j["terms"] = Json::object();
  for (const auto& [k, v] : r.terms) j["terms"][k] = v;
  j["params"] = Json::object();
  for (const auto& [k, v] : r.params) j["params"][k] = v;
  j["flags"] = r.flags;
  return j;
}

Json to_json(const ValidationReport& r) {
  return Json{{"trials", r.trials},
              {"violations", r.violations},
              {"violation_rate", r.violation_rate},
              {"target_delta", r.target_delta},
              {"binomial_se", r.binomial_se},
              {"pass", r.pass}};
}

std::string covering_csv(const std::vector<CoveringRow>& rows) {
  std::string out = "m,trials,failures,failure_prob,exponent,censored,rule_of_three\n";
  for (const auto& r : rows) {
    out += std::to_string(r.m) + "," + std::to_string(r.trials) + "," + std::to_string(r.failures) + "," +
           csv_num(r.failure_prob) + "," + csv_num(r.exponent) + "," + (r.censored ? "true" : "false") + "," +
           csv_num(r.rule_of_three) + "\n";
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  f.close();
  if (!f) throw Error("write to " + path + " failed");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Json parse_json_strict(const std::string& text, const std::string& origin) {
  struct Frame {
    bool object;
    std::set<std::string> keys;
    std::string key;
  };
  std::vector<Frame> stack;
  auto path_to = [&](const std::string& leaf) {
    std::string p;
    for (std::size_t i = 0; i + 1 < stack.size(); ++i) {
      if (stack[i].object) {
        if (!p.empty()) p += '.';
        p += stack[i].key;
      } else {
        p += "[]";
      }
    }
    if (!p.empty()) p += '.';
    return p + leaf;
  };
  Json::parser_callback_t cb = [&](int, Json::parse_event_t ev, Json& parsed) {
    switch (ev) {
      case Json::parse_event_t::object_start:
        stack.push_back({true, {}, ""});
        break;
      case Json::parse_event_t::array_start:
        stack.push_back({false, {}, ""});
        break;
      case Json::parse_event_t::object_end:
      case Json::parse_event_t::array_end:
        stack.pop_back();
        break;
      case Json::parse_event_t::key: {
        std::string k = parsed.get<std::string>();
        Frame& f = stack.back();
        if (!f.keys.insert(k).second) throw Error(origin + ": duplicate key " + path_to(k));
        f.key = k;
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return Json::parse(text, cb);
  } catch (const Json::parse_error& e) {
    throw Error(origin + ": " + e.what());
  }
}

}  // namespace genbound::cli
