#include "parallax/nn/optim.hpp"

#include <cmath>

namespace parallax::nn {

template <typename T> Index ParamStore<T>::add(std::string name, Tensor<T> value)
{
  for (auto const &p : params_) {
    if (p.name == name) { fail(ErrorCategory::Config, "duplicate parameter name " + name); }
  }
  Tensor<T> accum(value.shape());
  params_.push_back(Param<T>{std::move(name), std::move(value), std::move(accum)});
  return count() - 1;
}

template <typename T> Index ParamStore<T>::index_of(std::string const &name) const
{
  for (std::size_t i = 0; i < params_.size(); i++) {
    if (params_[i].name == name) { return static_cast<Index>(i); }
  }
  fail(ErrorCategory::Config, "unknown parameter " + name);
}

template <typename T> Index ParamStore<T>::scalar_count() const
{
  Index n = 0;
  for (auto const &p : params_) { n += p.value.size(); }
  return n;
}

template <typename T> std::vector<Var> ParamStore<T>::bind(Tape<T> &tape) const
{
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (auto const &p : params_) { vars.push_back(tape.parameter(p.value, p.name)); }
  return vars;
}

template <typename T> void ParamStore<T>::zero()
{
  for (auto &p : params_) { std::fill(p.value.data().begin(), p.value.data().end(), T{0}); }
}

template <typename T> void rmsprop_step(ParamStore<T> &store, std::vector<Tensor<T>> const &grads, RmsPropOptions const &opt)
{
  if (static_cast<Index>(grads.size()) != store.count()) { fail(ErrorCategory::ShapeMismatch, "one gradient per parameter expected"); }
  for (Index i = 0; i < store.count(); i++) {
    auto const &g = grads[static_cast<std::size_t>(i)];
    require_same_shape(g.shape(), store[i].value.shape(), "rmsprop gradient");
    if (!all_finite(g)) { fail(ErrorCategory::Numerical, "non-finite gradient for parameter " + store[i].name); }
  }
  auto const decay = static_cast<T>(opt.decay);
  auto const lr = static_cast<T>(opt.lr);
  auto const eps = static_cast<T>(opt.eps);
  for (Index i = 0; i < store.count(); i++) {
    auto &p = store[i];
    auto const &g = grads[static_cast<std::size_t>(i)];
    for (Index j = 0; j < g.size(); j++) {
      p.accum[j] = decay * p.accum[j] + (T{1} - decay) * g[j] * g[j];
      p.value[j] -= lr * g[j] / (std::sqrt(p.accum[j]) + eps);
    }
    if (!all_finite(p.value)) { fail(ErrorCategory::Numerical, "parameter " + p.name + " became non-finite"); }
  }
}

template <typename T> std::vector<Tensor<T>> collect_grads(Tape<T> &tape, std::vector<Var> const &bound)
{
  std::vector<Tensor<T>> grads;
  grads.reserve(bound.size());
  for (auto v : bound) { grads.push_back(tape.grad(v)); }
  return grads;
}

template class ParamStore<float>;
template class ParamStore<double>;
template void rmsprop_step(ParamStore<float> &, std::vector<Tensor<float>> const &, RmsPropOptions const &);
template void rmsprop_step(ParamStore<double> &, std::vector<Tensor<double>> const &, RmsPropOptions const &);
template std::vector<Tensor<float>> collect_grads(Tape<float> &, std::vector<Var> const &);
template std::vector<Tensor<double>> collect_grads(Tape<double> &, std::vector<Var> const &);

} // namespace parallax::nn
