#pragma once

#include "../tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace parallax::nn {

struct Var
{
  Index id = -1;
};

/*
 * Reverse-mode record. Nodes are appended after their inputs, so walking the
 * node list backwards is a reverse topological order; backward() visits each
 * node at most once.
 */
template <typename T> class Tape
{
public:
  using Tensor = parallax::Tensor<T>;
  using BackwardFn = std::function<void(Tape &, Var self)>;

  Var constant(Tensor value) { return push(std::move(value), false, {}, {}); }

  Var parameter(Tensor value, std::string name)
  {
    auto v = push(std::move(value), true, {}, std::move(name));
    leaves_.push_back(v);
    return v;
  }

  // Records an op; the backward rule runs only if some input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn)
  {
    bool needs = false;
    for (auto in : inputs) { needs = needs || nodes_[static_cast<std::size_t>(in.id)].requires_grad; }
    return push(std::move(value), needs, needs ? std::move(fn) : BackwardFn{}, {});
  }

  Tensor const &value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::string const &name(Var v) const { return node(v).name; }
  Index size() const { return static_cast<Index>(nodes_.size()); }
  std::vector<Var> const &parameters() const { return leaves_; }
  Index visits() const { return visits_; }

  // Inputs of piecewise-linear ops, whose sign pattern locates the kinks.
  void mark_kink(Var input) { kinks_.push_back(input); }
  std::vector<Var> const &kinks() const { return kinks_; }

  // Zero-initialized on first access.
  Tensor &grad(Var v)
  {
    auto &n = node(v);
    if (n.grad.shape() != n.value.shape()) { n.grad = Tensor(n.value.shape()); }
    return n.grad;
  }

  bool has_grad(Var v) const { return node(v).grad.shape() == node(v).value.shape() && !node(v).grad.empty(); }

  // Seeds d out / d out = 1 for a single-element output.
  void backward(Var out)
  {
    if (value(out).size() != 1) { fail(ErrorCategory::InvalidInput, "backward() needs a scalar output"); }
    grad(out)[0] = T{1};
    for (Index id = out.id; id >= 0; id--) {
      auto &n = nodes_[static_cast<std::size_t>(id)];
      if (!n.backward || !has_grad(Var{id})) { continue; }
      visits_++;
      n.backward(*this, Var{id});
    }
  }

private:
  struct Node
  {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    std::string name;
  };

  Node &node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id)); }
  Node const &node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }

  Var push(Tensor value, bool requires_grad, BackwardFn fn, std::string name)
  {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(fn), std::move(name)});
    return Var{static_cast<Index>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Var> leaves_;
  std::vector<Var> kinks_;
  Index visits_ = 0;
};

} // namespace parallax::nn
