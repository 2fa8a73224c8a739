#include "kho/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace kho {

namespace {

constexpr const char* kMagic = "KHO-CHECKPOINT";
constexpr int kVersion = 1;

std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Arr {
  std::string name;
  double* data;
  long rows, cols;  // cols = 0 marks a vector
};

std::vector<Arr> walk(Model& m) {
  std::vector<Arr> out;
  auto add = [&](const char* tag, Stack& s) {
    for (size_t l = 0; l < s.size(); ++l) {
      std::string base = std::string(tag) + "." + std::to_string(l);
      out.push_back({base + ".W", s[l].W.data(), s[l].W.rows(), s[l].W.cols()});
      out.push_back({base + ".b", s[l].b.data(), s[l].b.size(), 0});
    }
  };
  add("stack", m.stack);
  add("inner", m.inner);
  add("outer", m.outer);
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  const ModelSpec& s = m.spec;
  out << kMagic << ' ' << kVersion << '\n';
  out << "family " << family_name(s.family) << '\n';
  out << "d " << s.d << '\n';
  out << "act " << act_name(s.act) << '\n';
  out << "p " << s.p << '\n';
  out << "L " << s.L << " W " << s.W << '\n';
  out << "hd " << s.hd << " hw " << s.hw << '\n';
  out << "gd " << s.gd << " gw " << s.gw << '\n';
  out << "lo " << g17(s.lo) << " hi " << g17(s.hi) << '\n';
  auto arrays = walk(const_cast<Model&>(m));
  out << "arrays " << arrays.size() << '\n';
  for (const auto& a : arrays) out << "array " << a.name << ' ' << a.rows << ' ' << a.cols << '\n';
  out << "DATA\n";
  for (const auto& a : arrays) {
    long n = a.rows * (a.cols ? a.cols : 1);
    out.write(reinterpret_cast<const char*>(a.data), n * long(sizeof(double)));
  }
  if (!out) throw std::runtime_error("short write to checkpoint " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  std::string magic, word;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic || version != kVersion)
    throw std::runtime_error("not a recognized checkpoint: " + path);
  ModelSpec s;
  std::string fam, act;
  in >> word >> fam;
  in >> word >> s.d;
  in >> word >> act;
  in >> word >> s.p;
  in >> word >> s.L >> word >> s.W;
  in >> word >> s.hd >> word >> s.hw;
  in >> word >> s.gd >> word >> s.gw;
  in >> word >> s.lo >> word >> s.hi;
  s.family = family_from_string(fam);
  s.act = act_from_string(act);
  size_t count = 0;
  in >> word >> count;
  if (word != "arrays") throw std::runtime_error("malformed checkpoint header: " + path);

  Model m = build_model(s, 0);  // shapes and activations; values overwritten below
  auto arrays = walk(m);
  if (arrays.size() != count)
    throw std::runtime_error("checkpoint array count mismatch: " + path);
  for (auto& a : arrays) {
    std::string name;
    long rows = 0, cols = 0;
    in >> word >> name >> rows >> cols;
    if (word != "array" || name != a.name || rows != a.rows || cols != a.cols)
      throw std::runtime_error("checkpoint shape mismatch at " + a.name + ": " + path);
  }
  in >> word;
  if (word != "DATA") throw std::runtime_error("missing checkpoint payload marker: " + path);
  in.get();  // the newline before the raw payload
  for (auto& a : arrays) {
    long n = a.rows * (a.cols ? a.cols : 1);
    in.read(reinterpret_cast<char*>(a.data), n * long(sizeof(double)));
  }
  if (!in) throw std::runtime_error("truncated checkpoint payload: " + path);
  return m;
}

}  // namespace kho
