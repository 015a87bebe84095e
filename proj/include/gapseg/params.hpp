#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gapseg/tape.hpp"

namespace gapseg::nn {

using ParamId = std::size_t;

// Ordered, named parameter collection. Components hold ParamIds rather than
// pointers so the store can be copied with the model.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value);

  Parameter& operator[](ParamId id) { return params_.at(id); }
  const Parameter& operator[](ParamId id) const { return params_.at(id); }
  std::optional<ParamId> find(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;
  std::span<Parameter> all() { return params_; }
  std::span<const Parameter> all() const { return params_; }
  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

// Binds parameters to a tape on first use. With a recording tape parameters
// become gradient leaves (frozen ones become constants); otherwise every
// parameter is a read-only constant and the store may be shared.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, const ParameterStore& store);
  ParamBinder(Tape& tape, ParameterStore& store);

  Var operator()(ParamId id);
  void freeze(ParamId id) { frozen_.at(id) = true; }
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  const ParameterStore& store_;
  ParameterStore* mutable_store_ = nullptr;
  std::vector<std::optional<Var>> bound_;
  std::vector<bool> frozen_;
};

}  // namespace gapseg::nn
