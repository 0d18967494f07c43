#pragma once
#include <memory>
#include <string>
#include <vector>

#include "jecrl/layers.hpp"

namespace jecrl {

// A static DAG of layers, built once, evaluated many times. Nodes are added
// in topological order (inputs must already exist); forward walks the list,
// backward walks it in reverse, accumulating gradients. Input nodes hold
// externally assigned tensors, and their .g after backward is the network
// input gradient.
class Graph {
 public:
  int add_input(std::string name);
  int add(std::string name, std::unique_ptr<Layer> layer, std::vector<int> inputs);

  Tensor& tensor(int node) { return nodes_[static_cast<size_t>(node)].out; }
  const Tensor& tensor(int node) const { return nodes_[static_cast<size_t>(node)].out; }
  const std::string& name(int node) const { return nodes_[static_cast<size_t>(node)].name; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  // Runs every non-input node; every output is checked finite.
  void forward(bool training);
  // Zeroes node and parameter gradients (call before seeding loss grads).
  void zero_grads();
  // Requires a prior forward; reads seeded grads from node tensors.
  void backward();

  std::vector<Param*> params(bool learnable_only = false);
  // Deterministic sequential initialization in node order.
  void init_params(Rng& rng);

 private:
  struct Node {
    std::string name;
    std::unique_ptr<Layer> layer;  // null for inputs
    std::vector<int> inputs;
    Tensor out;
  };
  std::vector<Node> nodes_;
  bool ran_forward_ = false;
};

}  // namespace jecrl
