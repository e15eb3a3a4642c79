#include "qlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qlab/error.hpp"

namespace qlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    require(pos == v.size(), ErrorCode::kParse, "config: bad number for " + key);
    return x;
  } catch (const std::logic_error&) {
    fail(ErrorCode::kParse, "config: bad number for " + key + ": " + v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    require(!v.empty() && v[0] != '-', ErrorCode::kParse,
            "config: bad integer for " + key);
    const unsigned long long x = std::stoull(v, &pos);
    require(pos == v.size(), ErrorCode::kParse, "config: bad integer for " + key);
    return x;
  } catch (const std::logic_error&) {
    fail(ErrorCode::kParse, "config: bad integer for " + key + ": " + v);
  }
}

Index parse_index(const std::string& key, const std::string& v) {
  return static_cast<Index>(parse_u64(key, v));
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& v, F f) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(f(key, item));
  require(!out.empty(), ErrorCode::kParse, "config: empty list for " + key);
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F f) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += f(xs[i]);
  }
  return s;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& section,
                      const std::string& key, const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "experiment") {
    if (key == "kind") cfg.kind = value;
    else if (key == "seed") cfg.seed = parse_u64(full, value);
    else if (key == "epsilon") cfg.epsilon = parse_double(full, value);
    else if (key == "workers") cfg.workers = parse_index(full, value);
    else if (key == "out") cfg.out = value;
    else fail(ErrorCode::kParse, "config: unknown key " + full);
  } else if (section == "grid") {
    if (key == "d") cfg.d = parse_list<Index>(full, value, parse_index);
    else if (key == "r") cfg.r = parse_list<Index>(full, value, parse_index);
    else if (key == "gap") cfg.gap = parse_list<double>(full, value, parse_double);
    else if (key == "solver") {
      cfg.solver = split_list(value);
      require(!cfg.solver.empty(), ErrorCode::kParse, "config: empty solver list");
    } else if (key == "budget") cfg.budget = parse_list<Index>(full, value, parse_index);
    else if (key == "batch") cfg.batch = parse_list<Index>(full, value, parse_index);
    else fail(ErrorCode::kParse, "config: unknown key " + full);
  } else if (section == "trials") {
    if (key == "n") cfg.trials = parse_index(full, value);
    else fail(ErrorCode::kParse, "config: unknown key " + full);
  } else if (section == "verify") {
    if (key == "claims") cfg.claims = split_list(value);
    else cfg.params[key] = value;
  } else {
    fail(ErrorCode::kParse, "config: unknown section [" + section + "]");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  bool seen_seed = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', ErrorCode::kParse,
              "config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kParse,
            "config line " + std::to_string(lineno) + ": expected key = value");
    require(!section.empty(), ErrorCode::kParse,
            "config line " + std::to_string(lineno) + ": key outside a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    set_config_value(cfg, section, key, value);
    if (section == "experiment" && key == "seed") seen_seed = true;
  }
  require(seen_seed, ErrorCode::kParse, "config: [experiment] seed is required");
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
  require(cfg.kind == "sweep" || cfg.kind == "verify" || cfg.kind == "gen" ||
              cfg.kind == "report",
          ErrorCode::kInvalidArgument, "config: unknown experiment kind " + cfg.kind);
  require(cfg.epsilon > 0.0 && cfg.epsilon < 1.0, ErrorCode::kOutOfRange,
          "config: epsilon must lie in (0,1)");
  require(cfg.workers >= 1, ErrorCode::kInvalidArgument, "config: workers >= 1");
  require(!cfg.d.empty() && !cfg.r.empty() && !cfg.gap.empty() &&
              !cfg.solver.empty() && !cfg.budget.empty() && !cfg.batch.empty(),
          ErrorCode::kInvalidArgument, "config: grids must be non-empty");
  for (double g : cfg.gap) {
    require(g > 0.0 && g < 1.0, ErrorCode::kOutOfRange, "config: gap outside (0,1)");
  }
  for (Index x : cfg.d) {
    require(x >= 2 && x <= kMaxConfigDimension, ErrorCode::kInvalidDimension,
            "config: d must lie in [2, 8192]");
  }
  for (Index x : cfg.r) require(x >= 1, ErrorCode::kInvalidRank, "config: r >= 1");
  for (Index x : cfg.budget) require(x >= 1, ErrorCode::kInvalidArgument, "config: budget >= 1");
  for (Index x : cfg.batch) require(x >= 1, ErrorCode::kInvalidArgument, "config: batch >= 1");
  require(cfg.trials >= 1, ErrorCode::kInvalidArgument, "config: trials >= 1");
}

std::string serialize_config(const ExperimentConfig& cfg) {
  auto idx = [](Index x) { return std::to_string(x); };
  auto str = [](const std::string& s) { return s; };
  std::ostringstream os;
  os << "[experiment]\n"
     << "kind = " << cfg.kind << "\n"
     << "seed = " << cfg.seed << "\n"
     << "epsilon = " << fmt_double(cfg.epsilon) << "\n"
     << "workers = " << cfg.workers << "\n"
     << "out = " << cfg.out << "\n\n"
     << "[grid]\n"
     << "d = " << join(cfg.d, idx) << "\n"
     << "r = " << join(cfg.r, idx) << "\n"
     << "gap = " << join(cfg.gap, fmt_double) << "\n"
     << "solver = " << join(cfg.solver, str) << "\n"
     << "budget = " << join(cfg.budget, idx) << "\n"
     << "batch = " << join(cfg.batch, idx) << "\n\n"
     << "[trials]\n"
     << "n = " << cfg.trials << "\n\n"
     << "[verify]\n"
     << "claims = " << join(cfg.claims, str) << "\n";
  for (const auto& [k, v] : cfg.params) os << k << " = " << v << "\n";
  return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace qlab
