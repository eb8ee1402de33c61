#pragma once

#include "tape.hpp"

#include <string>
#include <vector>

namespace parallax::nn {

template <typename T> struct Param
{
  std::string name;
  Tensor<T> value;
  Tensor<T> accum; // RMSProp running mean of squared gradients
};

template <typename T> class ParamStore
{
public:
  std::string init_scheme = "he_normal";

  Index add(std::string name, Tensor<T> value);
  Index index_of(std::string const &name) const;
  Index count() const { return static_cast<Index>(params_.size()); }
  Index scalar_count() const;

  Param<T> &operator[](Index i) { return params_.at(static_cast<std::size_t>(i)); }
  Param<T> const &operator[](Index i) const { return params_.at(static_cast<std::size_t>(i)); }
  std::vector<Param<T>> &params() { return params_; }
  std::vector<Param<T>> const &params() const { return params_; }

  // Registers every weight as a tape leaf; the result is indexed like the store.
  std::vector<Var> bind(Tape<T> &tape) const;

  // Every weight set to zero, accumulators untouched.
  void zero();

private:
  std::vector<Param<T>> params_;
};

struct RmsPropOptions
{
  double lr = 3e-4;
  double decay = 0.99;
  double eps = 1e-8;
};

/*
 * acc <- decay * acc + (1 - decay) * g^2
 * p   <- p - lr * g / (sqrt(acc) + eps)
 * grads is indexed like the store. A non-finite gradient throws before any
 * parameter is touched.
 */
template <typename T> void rmsprop_step(ParamStore<T> &store, std::vector<Tensor<T>> const &grads, RmsPropOptions const &opt);

// Gradients of the bound leaves after backward(), zero where a leaf was unused.
template <typename T> std::vector<Tensor<T>> collect_grads(Tape<T> &tape, std::vector<Var> const &bound);

} // namespace parallax::nn
