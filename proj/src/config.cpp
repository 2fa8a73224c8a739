#include "kho/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kho/diag.hpp"
#include "kho/problem.hpp"

namespace kho {

namespace {

struct Entry {
  std::string section, key, value;
  int line = 0;
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<Entry> tokenize(const std::string& text) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(lineno) +
                                                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "model" && section != "train" && section != "rates")
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unknown section [" + section + "]");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    if (section.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": key before any section");
    out.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
  }
  return out;
}

int to_int(const Entry& e) {
  size_t pos = 0;
  int v = std::stoi(e.value, &pos);
  if (pos != e.value.size()) throw std::invalid_argument("config: bad integer for " + e.key);
  return v;
}
double to_double(const Entry& e) {
  size_t pos = 0;
  double v = std::stod(e.value, &pos);
  if (pos != e.value.size()) throw std::invalid_argument("config: bad number for " + e.key);
  return v;
}
bool to_bool(const Entry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + e.key);
}
template <class T, class F>
std::vector<T> to_list(const Entry& e, F conv) {
  std::vector<T> out;
  std::istringstream in(e.value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("config: empty list item for " + e.key);
    out.push_back(conv(item));
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + e.key);
  return out;
}

void apply_entry(RunConfig& cfg, const Entry& e) {
  auto& k = e.key;
  if (e.section == "run") {
    if (k == "problem") cfg.problem = e.value;
    else if (k == "jmax") cfg.jmax = to_int(e);
    else if (k == "preset") cfg.preset = e.value;
    else if (k == "out") cfg.out = e.value;
    else if (k == "seeds")
      cfg.seeds = to_list<uint64_t>(e, [](const std::string& s) { return std::stoull(s); });
    else if (k == "threads") cfg.threads = to_int(e);
    else throw std::invalid_argument("config line " + std::to_string(e.line) + ": unknown key [run] " + k);
  } else if (e.section == "model") {
    if (k == "family") cfg.model.family = family_from_string(e.value);
    else if (k == "act") cfg.model.act = act_from_string(e.value);
    else if (k == "p") cfg.model.p = to_int(e);
    else if (k == "L") cfg.model.L = to_int(e);
    else if (k == "W") cfg.model.W = to_int(e);
    else if (k == "hd") cfg.model.hd = to_int(e);
    else if (k == "hw") cfg.model.hw = to_int(e);
    else if (k == "gd") cfg.model.gd = to_int(e);
    else if (k == "gw") cfg.model.gw = to_int(e);
    else throw std::invalid_argument("config line " + std::to_string(e.line) + ": unknown key [model] " + k);
  } else if (e.section == "train") {
    if (k == "epochs") cfg.train.epochs = to_int(e);
    else if (k == "nf") cfg.train.nf = to_int(e);
    else if (k == "nb") cfg.train.nb = to_int(e);
    else if (k == "lr0") cfg.train.lr0 = to_double(e);
    else if (k == "decay") cfg.train.decay = to_double(e);
    else if (k == "decay_every") cfg.train.decay_every = to_int(e);
    else if (k == "beta_mode") {
      if (e.value == "annealed") cfg.train.beta_mode = BetaMode::Annealed;
      else if (e.value == "fixed") cfg.train.beta_mode = BetaMode::Fixed;
      else throw std::invalid_argument("config: beta_mode must be annealed|fixed");
    } else if (k == "beta0") cfg.train.beta0 = to_double(e);
    else if (k == "anneal_every") cfg.train.anneal_every = to_int(e);
    else if (k == "anneal_alpha") cfg.train.anneal_alpha = to_double(e);
    else if (k == "rel_every") cfg.train.rel_every = to_int(e);
    else if (k == "analytic_rhs") cfg.train.analytic_rhs = to_bool(e);
    else throw std::invalid_argument("config line " + std::to_string(e.line) + ": unknown key [train] " + k);
  } else {  // rates
    if (k == "sweep") cfg.sweep = e.value;
    else if (k == "values")
      cfg.values = to_list<double>(e, [](const std::string& s) { return std::stod(s); });
    else if (k == "synthetic_errs")
      cfg.synthetic_errs = to_list<double>(e, [](const std::string& s) { return std::stod(s); });
    else throw std::invalid_argument("config line " + std::to_string(e.line) + ": unknown key [rates] " + k);
  }
}

// architecture and sampling of the reference experiments, per problem
struct PresetRow {
  int hw, hd, gw, gd, L, W, nf, nb;
};

PresetRow preset_row(const std::string& id) {
  if (id == "fit2d_eq41") return {45, 3, 90, 2, 6, 90, 16000, 0};
  if (id == "fit10d_eq43") return {210, 1, 210, 2, 4, 210, 35000, 0};
  if (id == "fit20d_eq43") return {205, 1, 205, 2, 4, 205, 35000, 0};
  if (id == "fit50d_eq43") return {202, 1, 202, 2, 4, 202, 35000, 0};
  if (id == "poisson2d_eq41" || id == "poisson2d_sin8" || id == "helmholtz2d_eq410")
    return {45, 3, 90, 2, 6, 90, 5000, 1000};
  if (id == "poisson_lshape") return {90, 3, 90, 3, 7, 90, 6000, 400};
  if (id == "poisson_tensor_5d") return {105, 1, 105, 2, 4, 105, 8000, 2000};
  if (id == "poisson_nontensor_5d") return {220, 1, 220, 2, 4, 220, 8000, 2000};
  if (id == "poisson_nontensor_10d") return {315, 1, 315, 2, 4, 315, 8000, 2000};
  // remaining high-dimensional problems share one configuration
  return {210, 1, 210, 2, 4, 210, 8000, 2000};
}

}  // namespace

void apply_preset(RunConfig& cfg, const std::string& preset) {
  if (preset.empty()) return;
  if (preset != "desk" && preset != "paper")
    throw std::invalid_argument("unknown preset '" + preset + "' (desk|paper)");
  Problem prob = make_problem(cfg.problem);  // validates the id
  PresetRow row = preset_row(cfg.problem);
  cfg.model.hw = row.hw;
  cfg.model.hd = row.hd;
  cfg.model.gw = row.gw;
  cfg.model.gd = row.gd;
  cfg.model.L = row.L;
  cfg.model.W = row.W;
  cfg.model.act = prob.kind == PKind::Fit ? Act::ReLU : Act::Tanh;
  cfg.train.nf = row.nf;
  cfg.train.nb = row.nb;
  if (preset == "paper") {
    cfg.model.p = 9;
    cfg.train.epochs = 50000;
  } else {
    cfg.model.p = 5;
    cfg.train.epochs = 5000;
    cfg.jmax = 2;
    cfg.model.hw = (cfg.model.hw + 1) / 2;
    cfg.model.gw = (cfg.model.gw + 1) / 2;
    cfg.model.W = (cfg.model.W + 1) / 2;
  }
}

RunConfig parse_config(const std::string& text) {
  std::vector<Entry> entries = tokenize(text);
  RunConfig cfg;
  cfg.model.family = Family::KHOrder;
  for (const auto& e : entries) {  // problem/preset/jmax steer the preset table
    if (e.section != "run") continue;
    if (e.key == "problem") cfg.problem = e.value;
    if (e.key == "preset") cfg.preset = e.value;
  }
  apply_preset(cfg, cfg.preset);
  for (const auto& e : entries) apply_entry(cfg, e);
  make_problem(cfg.problem);  // reject bad ids here, not at run time
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string manifest_of(const RunConfig& cfg) {
  std::ostringstream o;
  o << "[run]\n";
  o << "problem = " << cfg.problem << "\n";
  o << "jmax = " << cfg.jmax << "\n";
  o << "preset = " << cfg.preset << "\n";
  o << "out = " << cfg.out << "\n";
  o << "seeds = ";
  for (size_t i = 0; i < cfg.seeds.size(); ++i) o << (i ? "," : "") << cfg.seeds[i];
  o << "\n";
  o << "threads = " << cfg.threads << "\n";
  o << "[model]\n";
  o << "family = " << family_name(cfg.model.family) << "\n";
  o << "act = " << act_name(cfg.model.act) << "\n";
  o << "p = " << cfg.model.p << "\n";
  o << "L = " << cfg.model.L << "\n";
  o << "W = " << cfg.model.W << "\n";
  o << "hd = " << cfg.model.hd << "\n";
  o << "hw = " << cfg.model.hw << "\n";
  o << "gd = " << cfg.model.gd << "\n";
  o << "gw = " << cfg.model.gw << "\n";
  o << "[train]\n";
  o << "epochs = " << cfg.train.epochs << "\n";
  o << "nf = " << cfg.train.nf << "\n";
  o << "nb = " << cfg.train.nb << "\n";
  o << "lr0 = " << fmt_g17(cfg.train.lr0) << "\n";
  o << "decay = " << fmt_g17(cfg.train.decay) << "\n";
  o << "decay_every = " << cfg.train.decay_every << "\n";
  o << "beta_mode = " << (cfg.train.beta_mode == BetaMode::Annealed ? "annealed" : "fixed") << "\n";
  o << "beta0 = " << fmt_g17(cfg.train.beta0) << "\n";
  o << "anneal_every = " << cfg.train.anneal_every << "\n";
  o << "anneal_alpha = " << fmt_g17(cfg.train.anneal_alpha) << "\n";
  o << "rel_every = " << cfg.train.rel_every << "\n";
  o << "analytic_rhs = " << (cfg.train.analytic_rhs ? "true" : "false") << "\n";
  o << "[rates]\n";
  o << "sweep = " << cfg.sweep << "\n";
  if (!cfg.values.empty()) {
    o << "values = ";
    for (size_t i = 0; i < cfg.values.size(); ++i) o << (i ? "," : "") << fmt_g17(cfg.values[i]);
    o << "\n";
  }
  if (!cfg.synthetic_errs.empty()) {
    o << "synthetic_errs = ";
    for (size_t i = 0; i < cfg.synthetic_errs.size(); ++i)
      o << (i ? "," : "") << fmt_g17(cfg.synthetic_errs[i]);
    o << "\n";
  }
  return o.str();
}

std::string resolve_out_dir(const RunConfig& cfg) {
  const char* root = std::getenv("KHO_OUT_ROOT");
  if (cfg.out.empty()) return std::string(root ? root : "runs") + "/" + cfg.problem;
  if (root && !cfg.out.empty() && cfg.out.front() != '/') return std::string(root) + "/" + cfg.out;
  return cfg.out;
}

}  // namespace kho
