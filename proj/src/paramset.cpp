#include "hint/paramset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hint {

void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (double& v : t.data) v = rng.uniform(-bound, bound);
}

void add_linear(ParamSet& p, const std::string& prefix, std::size_t in,
                std::size_t out, Rng& rng) {
  Tensor w = Tensor::zeros({out, in});
  Tensor b = Tensor::zeros({out});
  init_uniform(w, in, rng);
  init_uniform(b, in, rng);
  p.add(prefix + ".w", std::move(w));
  p.add(prefix + ".b", std::move(b));
}

const char* role_name(ParamSet::Role role) {
  switch (role) {
    case ParamSet::Role::TeacherHigh: return "teacher_high";
    case ParamSet::Role::TeacherValue: return "teacher_value";
    case ParamSet::Role::TeacherLow: return "teacher_low";
    case ParamSet::Role::Student: return "student";
    case ParamSet::Role::Generic: return "generic";
  }
  return "generic";
}

ParamSet::Role role_from_name(const std::string& name) {
  if (name == "teacher_high") return ParamSet::Role::TeacherHigh;
  if (name == "teacher_value") return ParamSet::Role::TeacherValue;
  if (name == "teacher_low") return ParamSet::Role::TeacherLow;
  if (name == "student") return ParamSet::Role::Student;
  if (name == "generic") return ParamSet::Role::Generic;
  throw std::invalid_argument("unknown paramset role: " + name);
}

void save_paramset(const ParamSet& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "HINT-PARAMSET 1\n";
  out << "role " << role_name(p.role()) << "\n";
  out << "entries " << p.size() << "\n";
  char buf[64];
  for (const auto& [name, t] : p) {
    out << name << " " << t.rank();
    for (std::size_t d : t.shape) out << " " << d;
    out << "\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%a", t.data[i]);
      out << buf << (i + 1 == t.size() ? "" : " ");
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ParamSet load_paramset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "HINT-PARAMSET" || version != 1)
    throw std::runtime_error("bad paramset header in " + path);
  std::string key, rname;
  in >> key >> rname;
  if (key != "role") throw std::runtime_error("bad paramset role in " + path);
  std::size_t count = 0;
  in >> key >> count;
  if (key != "entries")
    throw std::runtime_error("bad paramset entry count in " + path);
  ParamSet p(role_from_name(rname));
  for (std::size_t e = 0; e < count; ++e) {
    std::string name;
    std::size_t rank = 0;
    in >> name >> rank;
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) in >> d;
    Tensor t = Tensor::zeros(shape);
    for (auto& v : t.data) {
      std::string tok;
      in >> tok;
      v = std::strtod(tok.c_str(), nullptr);
    }
    if (!in) throw std::runtime_error("truncated paramset file " + path);
    p.add(name, std::move(t));
  }
  return p;
}

}  // namespace hint
