#include "eiv/sim_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eiv/errors.hpp"

namespace eiv::mc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw InvalidInputError("sim config: " + msg);
}

double as_number(const json& j, const char* key) {
  if (!j.is_number()) fail(std::string(key) + " must be a number");
  return j.get<double>();
}

long long as_integer(const json& j, const char* key) {
  if (!j.is_number_integer()) fail(std::string(key) + " must be an integer");
  return j.get<long long>();
}

SimConfig from_json(const json& doc) {
  if (!doc.is_object()) fail("top level must be a JSON object");
  static const std::set<std::string> known = {
      "n",     "r",    "beta",       "alpha", "theta", "tau2", "sigma2",
      "xi",    "estimators", "pairs", "bayes", "reps",  "seed", "level"};
  for (const auto& item : doc.items())
    if (!known.count(item.key())) fail("unknown key '" + item.key() + "'");

  SimConfig cfg;
  if (!doc.contains("n")) fail("missing required key 'n'");
  cfg.n = static_cast<int>(as_integer(doc.at("n"), "n"));
  if (doc.contains("r")) cfg.r = static_cast<int>(as_integer(doc.at("r"), "r"));
  if (doc.contains("beta")) cfg.beta = as_number(doc.at("beta"), "beta");
  if (doc.contains("alpha")) cfg.alpha = as_number(doc.at("alpha"), "alpha");
  if (doc.contains("theta")) cfg.theta = as_number(doc.at("theta"), "theta");
  if (doc.contains("tau2")) cfg.tau2 = as_number(doc.at("tau2"), "tau2");
  if (doc.contains("sigma2")) cfg.sigma2 = as_number(doc.at("sigma2"), "sigma2");

  if (doc.contains("xi")) {
    const json& xi = doc.at("xi");
    if (xi.is_number()) {
      cfg.xi.mode = XiSpec::Mode::constant_fill;
      cfg.xi.value = xi.get<double>();
    } else if (xi.is_array()) {
      cfg.xi.mode = XiSpec::Mode::explicit_vector;
      for (const json& c : xi) {
        if (!c.is_number()) fail("xi array entries must be numbers");
        cfg.xi.values.push_back(c.get<double>());
      }
    } else {
      fail("xi must be a number (constant fill) or an array of length n-1");
    }
  }

  if (doc.contains("estimators")) {
    const json& est = doc.at("estimators");
    if (!est.is_array()) fail("estimators must be an array of names");
    for (const json& e : est) {
      if (!e.is_string()) fail("estimator entries must be strings");
      cfg.estimators.push_back(e.get<std::string>());
    }
  }

  if (doc.contains("pairs")) {
    const json& pairs = doc.at("pairs");
    if (!pairs.is_array()) fail("pairs must be an array of [a, b] name pairs");
    for (const json& pr : pairs) {
      if (!pr.is_array() || pr.size() != 2 || !pr[0].is_string() ||
          !pr[1].is_string())
        fail("each pair must be a two-element array of estimator names");
      cfg.pairs.emplace_back(pr[0].get<std::string>(),
                             pr[1].get<std::string>());
    }
  }

  if (doc.contains("bayes")) {
    const json& b = doc.at("bayes");
    if (!b.is_object()) fail("bayes must be an object with keys c1, c2");
    for (const auto& item : b.items())
      if (item.key() != "c1" && item.key() != "c2")
        fail("unknown bayes key '" + item.key() + "'");
    if (b.contains("c1")) cfg.bayes.c1 = as_number(b.at("c1"), "bayes.c1");
    if (b.contains("c2")) cfg.bayes.c2 = as_number(b.at("c2"), "bayes.c2");
  }

  if (doc.contains("reps")) cfg.reps = as_integer(doc.at("reps"), "reps");
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_integer() && !s.is_number_unsigned())
      fail("seed must be an integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("level")) {
    const json& lv = doc.at("level");
    if (!lv.is_string()) fail("level must be \"canonical\" or \"raw\"");
    const std::string name = lv.get<std::string>();
    if (name == "canonical")
      cfg.level = SimConfig::Level::canonical;
    else if (name == "raw")
      cfg.level = SimConfig::Level::raw;
    else
      fail("level must be \"canonical\" or \"raw\"");
  }

  cfg.validate();
  return cfg;
}

std::string fmt_num(double v, bool full_precision) {
  if (std::isnan(v)) return "na";
  char buf[64];
  std::snprintf(buf, sizeof buf, full_precision ? "%.17g" : "%.6g", v);
  return buf;
}

std::string xi_desc(const XiSpec& xi, bool full_precision) {
  if (xi.mode == XiSpec::Mode::constant_fill)
    return "constant:" + fmt_num(xi.value, full_precision);
  std::string out = "explicit:[";
  for (std::size_t i = 0; i < xi.values.size(); ++i) {
    if (i) out += ",";
    out += fmt_num(xi.values[i], full_precision);
  }
  return out + "]";
}

void write_header(std::ostream& os, const SimResult& res, bool fp) {
  const SimConfig& c = res.config;
  os << "# simulation study results\n";
  os << "# n=" << c.n << " r=" << c.r << " beta=" << fmt_num(c.beta, fp)
     << " alpha=" << fmt_num(c.alpha, fp) << " theta=" << fmt_num(c.theta, fp)
     << " tau2=" << fmt_num(c.tau2, fp) << " sigma2=" << fmt_num(c.sigma2, fp)
     << "\n";
  os << "# xi=" << xi_desc(c.xi, fp) << " reps=" << c.reps
     << " seed=" << c.seed
     << " level=" << (c.level == SimConfig::Level::raw ? "raw" : "canonical")
     << "\n";
  os << "# lambda=" << fmt_num(res.lambda, fp) << "\n";
}

void write_pairs(std::ostream& os, const SimResult& res, bool fp) {
  for (const PairRow& pr : res.pairs)
    os << "# pair " << pr.a << " vs " << pr.b
       << ": mse_diff=" << fmt_num(pr.mse_diff, fp)
       << " se_diff=" << fmt_num(pr.se_diff, fp) << " used=" << pr.used
       << "\n";
}

void write_delimited(std::ostream& os, const SimResult& res, char delim,
                     bool fp) {
  write_header(os, res, fp);
  os << "estimator" << delim << "bias" << delim << "se_bias" << delim << "mse"
     << delim << "se_mse" << delim << "failures\n";
  for (const EstimatorRow& row : res.rows)
    os << row.id << delim << fmt_num(row.bias, fp) << delim
       << fmt_num(row.se_bias, fp) << delim << fmt_num(row.mse, fp) << delim
       << fmt_num(row.se_mse, fp) << delim << row.failures << "\n";
  write_pairs(os, res, fp);
}

void write_pretty(std::ostream& os, const SimResult& res, bool fp) {
  write_header(os, res, fp);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %12s %12s %12s %12s %9s\n",
                "estimator", "bias", "se_bias", "mse", "se_mse", "failures");
  os << buf;
  for (const EstimatorRow& row : res.rows) {
    std::snprintf(buf, sizeof buf, "%-10s %12s %12s %12s %12s %9lld\n",
                  row.id.c_str(), fmt_num(row.bias, fp).c_str(),
                  fmt_num(row.se_bias, fp).c_str(),
                  fmt_num(row.mse, fp).c_str(),
                  fmt_num(row.se_mse, fp).c_str(), row.failures);
    os << buf;
  }
  write_pairs(os, res, fp);
}

}  // namespace

SimConfig parse_sim_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  return from_json(doc);
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("sim config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sim_config(ss.str());
}

OutputFormat parse_output_format(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "tsv") return OutputFormat::tsv;
  if (name == "pretty") return OutputFormat::pretty;
  throw InvalidInputError("format must be one of csv, tsv, pretty");
}

void write_result(std::ostream& os, const SimResult& result, OutputFormat fmt,
                  bool full_precision) {
  switch (fmt) {
    case OutputFormat::csv:
      write_delimited(os, result, ',', full_precision);
      break;
    case OutputFormat::tsv:
      write_delimited(os, result, '\t', full_precision);
      break;
    case OutputFormat::pretty:
      write_pretty(os, result, full_precision);
      break;
  }
}

}  // namespace eiv::mc
