#include "sib/config.hpp"

#include "sib/error.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace sib {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& text) {
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',' || c == ';' || c == '[' || c == ']') c = ' ';
  std::istringstream ss(cleaned);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument("not a number: '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty value");
  return out;
}

struct Entry {
  std::string value;
  int line;
};

}  // namespace

Matrix parse_matrix(const std::string& text, Index m) {
  const auto v = parse_numbers(text);
  if (v.size() == 1) return v[0] * Matrix::Identity(m, m);
  if (static_cast<Index>(v.size()) != m * m)
    throw std::invalid_argument("expected 1 or " + std::to_string(m * m) + " values, got " +
                                std::to_string(v.size()));
  Matrix a(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) a(i, j) = v[static_cast<std::size_t>(i * m + j)];
  return a;
}

double RunConfig::run_positive(const std::string& name, double fallback) const {
  const auto it = run.find(name);
  if (it == run.end()) return fallback;
  try {
    const auto v = parse_numbers(it->second);
    if (v.size() == 1 && v[0] > 0.0) return v[0];
  } catch (const std::invalid_argument&) {
  }
  throw Error(Errc::parse, "run." + name + " must be a positive number");
}

RunConfig parse_config(std::istream& in) {
  std::map<std::string, Entry> entries;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::parse, "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw Error(Errc::parse, "line " + std::to_string(line_no) + ": empty key or value");
    if (!entries.emplace(key, Entry{value, line_no}).second)
      throw Error(Errc::parse, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  if (entries.empty()) throw Error(Errc::parse, "configuration is empty");

  auto fail = [&](const std::string& key, const std::string& what) -> Error {
    const auto it = entries.find(key);
    const std::string where = it == entries.end() ? "" : "line " + std::to_string(it->second.line) + ": ";
    return Error(Errc::parse, where + "key '" + key + "': " + what);
  };
  auto get_int = [&](const std::string& key, std::optional<int> fallback) {
    const auto it = entries.find(key);
    if (it == entries.end()) {
      if (!fallback) throw Error(Errc::parse, "missing required key '" + key + "'");
      return *fallback;
    }
    try {
      std::size_t used = 0;
      const int v = std::stoi(it->second.value, &used);
      if (used == it->second.value.size() && v >= 1) return v;
    } catch (const std::exception&) {
    }
    throw fail(key, "expected a positive integer");
  };
  auto matrix = [&](const std::string& key, Index m) {
    try {
      return parse_matrix(entries.at(key).value, m);
    } catch (const std::invalid_argument& e) {
      throw fail(key, e.what());
    }
  };
  auto numbers = [&](const std::string& key) {
    try {
      return parse_numbers(entries.at(key).value);
    } catch (const std::invalid_argument& e) {
      throw fail(key, e.what());
    }
  };

  static const std::regex stage_key(R"(model\.stages\[(\d+)\]\.(sigma_t|sigma_0t|gamma))");
  static const std::regex omega_key(R"(chain\.omegas\[(\d+)\])");
  static const std::regex plain_keys(R"(model\.(m|T|sigma_x|sigma_0|sigma_si|gamma))");
  static const std::regex run_key(R"(run\.[A-Za-z0-9_.\-]+)");

  const Index m = get_int("model.m", 1);
  const int T = get_int("model.T", std::nullopt);
  RunConfig cfg;

  std::vector<std::optional<Matrix>> sigma_t(static_cast<std::size_t>(T)), sigma_0t(static_cast<std::size_t>(T));
  std::vector<std::optional<double>> gamma(static_cast<std::size_t>(T));
  std::vector<std::optional<Matrix>> omegas;
  auto stage_index = [&](const std::string& key, const std::string& digits, int limit) {
    const int t = std::stoi(digits);
    if (t < 1 || t > limit) throw fail(key, "stage index outside 1.." + std::to_string(limit));
    return static_cast<std::size_t>(t - 1);
  };

  for (const auto& [key, entry] : entries) {
    std::smatch match;
    if (std::regex_match(key, plain_keys)) continue;
    if (std::regex_match(key, match, stage_key)) {
      const auto i = stage_index(key, match[1], T);
      if (match[2] == "sigma_t") sigma_t[i] = matrix(key, m);
      else if (match[2] == "sigma_0t") sigma_0t[i] = matrix(key, m);
      else {
        const auto v = numbers(key);
        if (v.size() != 1) throw fail(key, "gamma must be a single number");
        gamma[i] = v[0];
      }
    } else if (std::regex_match(key, match, omega_key)) {
      const auto i = stage_index(key, match[1], T);
      if (omegas.empty()) omegas.resize(static_cast<std::size_t>(T));
      omegas[i] = matrix(key, m);
    } else if (std::regex_match(key, run_key)) {
      cfg.run[key.substr(4)] = entry.value;
    } else {
      throw fail(key, "unknown key");
    }
  }

  if (!entries.count("model.sigma_x")) throw Error(Errc::parse, "missing required key 'model.sigma_x'");
  if (!entries.count("model.sigma_0")) throw Error(Errc::parse, "missing required key 'model.sigma_0'");
  cfg.spec.sigma_x = matrix("model.sigma_x", m);
  cfg.spec.sigma_0 = matrix("model.sigma_0", m);

  if (entries.count("model.sigma_si")) {
    const auto v = numbers("model.sigma_si");
    if (v.size() != 1 && static_cast<int>(v.size()) != T)
      throw fail("model.sigma_si", "expected 1 or T values");
    for (std::size_t i = 0; i < sigma_t.size(); ++i) {
      if (sigma_t[i]) throw fail("model.sigma_si", "conflicts with model.stages[" + std::to_string(i + 1) + "].sigma_t");
      sigma_t[i] = (v.size() == 1 ? v[0] : v[i]) * Matrix::Identity(m, m);
    }
  }
  std::optional<double> default_gamma;
  if (entries.count("model.gamma")) {
    const auto v = numbers("model.gamma");
    if (v.size() != 1) throw fail("model.gamma", "must be a single number");
    default_gamma = v[0];
  }

  for (std::size_t i = 0; i < sigma_t.size(); ++i) {
    const std::string prefix = "model.stages[" + std::to_string(i + 1) + "]";
    if (!sigma_t[i]) throw Error(Errc::parse, "missing " + prefix + ".sigma_t (or model.sigma_si)");
    StageNoise st;
    st.sigma_t = *sigma_t[i];
    if (sigma_0t[i]) {
      if (gamma[i]) throw fail(prefix + ".gamma", "give either sigma_0t or gamma, not both");
      st.sigma_0t = *sigma_0t[i];
    } else if (gamma[i] || default_gamma) {
      st.sigma_0t = (gamma[i] ? *gamma[i] : *default_gamma) * st.sigma_t;
    } else {
      st.sigma_0t = Matrix::Zero(m, m);
    }
    cfg.spec.stages.push_back(std::move(st));
  }

  if (!omegas.empty()) {
    OmegaChain chain;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      if (!omegas[i]) throw Error(Errc::parse, "missing chain.omegas[" + std::to_string(i + 1) + "]");
      chain.omegas.push_back(*omegas[i]);
    }
    cfg.chain = std::move(chain);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::usage, "cannot open config '" + path + "'");
  return parse_config(in);
}

}  // namespace sib
