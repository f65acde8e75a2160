#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hint/rng.hpp"
#include "hint/tensor.hpp"

namespace hint {

// Named flat collection of parameters for one network role.
class ParamSet {
 public:
  enum class Role { TeacherHigh, TeacherValue, TeacherLow, Student, Generic };

  ParamSet() : role_(Role::Generic) {}
  explicit ParamSet(Role role) : role_(role) {}

  Role role() const { return role_; }

  void add(const std::string& name, Tensor t) {
    if (entries_.count(name))
      throw std::invalid_argument("ParamSet: duplicate entry " + name);
    if (!t.all_finite())
      throw std::invalid_argument("ParamSet: non-finite values in " + name);
    entries_.emplace(name, std::move(t));
  }

  bool has(const std::string& name) const { return entries_.count(name) > 0; }

  Tensor& get(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw std::invalid_argument("ParamSet: unknown entry " + name);
    return it->second;
  }

  const Tensor& get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw std::invalid_argument("ParamSet: unknown entry " + name);
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t value_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : entries_) n += v.size();
    return n;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool operator==(const ParamSet& o) const {
    if (role_ != o.role_ || entries_.size() != o.entries_.size()) return false;
    for (const auto& [k, v] : entries_) {
      auto it = o.entries_.find(k);
      if (it == o.entries_.end()) return false;
      if (v.shape != it->second.shape || v.data != it->second.data)
        return false;
    }
    return true;
  }

 private:
  Role role_;
  std::map<std::string, Tensor> entries_;
};

// Uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng);

// Adds "<prefix>.w" [out x in] and "<prefix>.b" [out].
void add_linear(ParamSet& p, const std::string& prefix, std::size_t in,
                std::size_t out, Rng& rng);

// Checkpoint round trip. Values are written as hex floats so the round trip
// is bit-exact.
void save_paramset(const ParamSet& p, const std::string& path);
ParamSet load_paramset(const std::string& path);

const char* role_name(ParamSet::Role role);
ParamSet::Role role_from_name(const std::string& name);

}  // namespace hint
