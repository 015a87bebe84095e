#include "gapseg/params.hpp"

#include "gapseg/error.hpp"

namespace gapseg::nn {

ParamId ParameterStore::add(std::string name, Tensor value) {
  if (find(name)) throw ContractError("duplicate parameter name '" + name + "'");
  params_.emplace_back(std::move(name), std::move(value));
  return params_.size() - 1;
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  for (ParamId i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

ParamBinder::ParamBinder(Tape& tape, const ParameterStore& store)
    : tape_(tape), store_(store), bound_(store.size()), frozen_(store.size(), false) {
  if (tape.recording()) {
    throw ContractError("a recording tape needs a mutable parameter store");
  }
}

ParamBinder::ParamBinder(Tape& tape, ParameterStore& store)
    : tape_(tape),
      store_(store),
      mutable_store_(tape.recording() ? &store : nullptr),
      bound_(store.size()),
      frozen_(store.size(), false) {}

Var ParamBinder::operator()(ParamId id) {
  auto& slot = bound_.at(id);
  if (!slot) {
    if (mutable_store_ && !frozen_[id]) {
      slot = tape_.parameter((*mutable_store_)[id]);
    } else {
      slot = tape_.constant_ref(store_[id].value);
    }
  }
  return *slot;
}

}  // namespace gapseg::nn
