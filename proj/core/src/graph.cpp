#include "jecrl/graph.hpp"

#include "jecrl/error.hpp"

namespace jecrl {

int Graph::add_input(std::string name) {
  nodes_.push_back(Node{std::move(name), nullptr, {}, Tensor{}});
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::add(std::string name, std::unique_ptr<Layer> layer, std::vector<int> inputs) {
  if (inputs.empty()) throw DataError("Graph::add: layer needs at least one input");
  for (int id : inputs)
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
      throw DataError("Graph::add: input node out of range");
  nodes_.push_back(Node{std::move(name), std::move(layer), std::move(inputs), Tensor{}});
  return static_cast<int>(nodes_.size()) - 1;
}

void Graph::forward(bool training) {
  for (Node& node : nodes_) {
    if (!node.layer) {
      if (node.out.size() == 0) throw DataError("Graph: input '" + node.name + "' not set");
      continue;
    }
    std::vector<Tensor*> ins;
    ins.reserve(node.inputs.size());
    for (int id : node.inputs) ins.push_back(&nodes_[static_cast<size_t>(id)].out);
    node.layer->forward(ins, node.out, training);
    node.out.check_finite(node.name);
  }
  ran_forward_ = true;
}

void Graph::zero_grads() {
  for (Node& node : nodes_) node.out.zero_grad();
  for (Param* p : params()) p->t.zero_grad();
}

void Graph::backward() {
  if (!ran_forward_) throw DataError("Graph::backward before forward");
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->layer) continue;
    std::vector<Tensor*> ins;
    ins.reserve(it->inputs.size());
    for (int id : it->inputs) ins.push_back(&nodes_[static_cast<size_t>(id)].out);
    it->layer->backward(ins, it->out);
  }
}

std::vector<Param*> Graph::params(bool learnable_only) {
  std::vector<Param*> out;
  for (Node& node : nodes_) {
    if (!node.layer) continue;
    for (Param* p : node.layer->params())
      if (!learnable_only || p->learnable) out.push_back(p);
  }
  return out;
}

void Graph::init_params(Rng& rng) {
  for (Node& node : nodes_)
    if (node.layer) node.layer->init_params(rng);
}

}  // namespace jecrl
