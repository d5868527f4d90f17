#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "backdiff/autodiff.hpp"
#include "backdiff/graph.hpp"

namespace backdiff {

struct DenoiserDims {
  int node_types = 4;
  int edge_types = 4;
  int hidden_node = 32;
  int hidden_edge = 16;
  int hidden_global = 16;
  int layers = 2;
  int max_nodes = 9;

  void validate() const;
  friend bool operator==(const DenoiserDims&, const DenoiserDims&) = default;
};

struct NamedTensor {
  std::string name;  // "layer{idx}.{block}.{tensor}", "embed.*" or "head.*"
  Eigen::MatrixXd value;
};

// Parameter-shaped gradient buffers, parallel to DenoiserModel::tensors().
using Gradients = std::vector<Eigen::MatrixXd>;

// Graph transformer over (nodes, pairs, global vector).
//
// Each layer: edge-biased node self-attention with a global-to-node term,
// residual + layer norm, node MLP + layer norm, an edge update from the
// endpoint pair (sum and product terms) + layer norm, then a global update
// from pooled nodes and edges. Edge logits are symmetrised before the
// softmax. All values are stored as float-representable doubles so the
// float32 checkpoint round-trip is exact.
class DenoiserModel {
 public:
  DenoiserModel() = default;
  DenoiserModel(const DenoiserDims& dims, std::uint64_t seed);

  const DenoiserDims& dims() const noexcept { return dims_; }
  std::vector<NamedTensor>& tensors() noexcept { return tensors_; }
  const std::vector<NamedTensor>& tensors() const noexcept { return tensors_; }
  std::size_t parameter_count() const;

  Gradients zero_gradients() const;

  // Rounds every parameter to the nearest float.
  void round_to_float();

  // Replaces tensors by name; throws ShapeMismatch when names or shapes differ.
  void load_tensors(std::vector<NamedTensor> tensors);

  friend bool operator==(const DenoiserModel& x, const DenoiserModel& y);

  // Indices of tensors within tensors(), grouped by role.
  struct LayerIndex {
    int wq, wk, wv, wo, edge_bias, global_to_node;
    int ln1_gamma, ln1_beta;
    int mlp_w1, mlp_b1, mlp_w2, mlp_b2;
    int ln2_gamma, ln2_beta;
    int edge_self, edge_sum, edge_prod, edge_global, edge_bias_vec, edge_out, edge_out_bias;
    int ln_edge_gamma, ln_edge_beta;
    int glob_node, glob_edge, glob_self, glob_bias;
  };
  struct Index {
    int embed_node_w, embed_node_b, embed_edge_w, embed_edge_b, embed_global_w, embed_global_b;
    std::vector<LayerIndex> layers;
    int head_node_w, head_node_b, head_edge_w, head_edge_b;
  };
  const Index& index() const noexcept { return index_; }

 private:
  int add(const std::string& name, int rows, int cols);
  void build_index();

  DenoiserDims dims_;
  std::vector<NamedTensor> tensors_;
  Index index_{};
};

DenoiserModel init_model(const DenoiserDims& dims, std::uint64_t seed);

// Logit outputs recorded on a tape.
struct DenoiserTrace {
  ad::Var node_logits;  // n x a
  ad::Var edge_logits;  // n^2 x d, symmetric
  std::vector<ad::Var> params;
};

DenoiserTrace record_forward(ad::Tape& tape, const DenoiserModel& model, const Graph& g_t, int t, int steps,
                             Gradients* sinks);

// Predicted clean-graph distributions p_hat^X, p_hat^E.
SoftGraph denoiser_forward(const DenoiserModel& model, const Graph& g_t, int t, int steps);

struct LossResult {
  double loss = 0.0;
  double node_loss = 0.0;
  double edge_loss = 0.0;
};

// Cross entropy of the prediction against g_target: every node plus every
// unordered pair i < j once.
LossResult denoiser_loss(const DenoiserModel& model, const Graph& g_target, const Graph& g_t, int t, int steps);

// Same loss; gradients are added into *grads (which must match the model).
// Throws NonFiniteLoss when the loss or any gradient is not finite.
LossResult loss_and_gradients(const DenoiserModel& model, const Graph& g_target, const Graph& g_t, int t, int steps,
                              Gradients& grads);

}  // namespace backdiff
