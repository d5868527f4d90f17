#include "backdiff/denoiser.hpp"

#include <cmath>

#include "backdiff/error.hpp"
#include "backdiff/features.hpp"
#include "backdiff/rng.hpp"

namespace backdiff {

void DenoiserDims::validate() const {
  if (node_types < 1 || edge_types < 2 || hidden_node < 1 || hidden_edge < 1 || hidden_global < 1 ||
      layers < 0 || max_nodes < 1) {
    throw Error(ErrorCode::BadDims, "non-positive denoiser dimension");
  }
}

int DenoiserModel::add(const std::string& name, int rows, int cols) {
  tensors_.push_back(NamedTensor{name, Eigen::MatrixXd::Zero(rows, cols)});
  return static_cast<int>(tensors_.size()) - 1;
}

void DenoiserModel::build_index() {
  const auto& d = dims_;
  const int h = d.hidden_node, e = d.hidden_edge, y = d.hidden_global;
  tensors_.clear();
  Index& ix = index_;
  ix.embed_node_w = add("embed.node.weight", d.node_types + kNodeFeatureDim, h);
  ix.embed_node_b = add("embed.node.bias", 1, h);
  ix.embed_edge_w = add("embed.edge.weight", d.edge_types, e);
  ix.embed_edge_b = add("embed.edge.bias", 1, e);
  ix.embed_global_w = add("embed.global.weight", kGlobalFeatureDim, y);
  ix.embed_global_b = add("embed.global.bias", 1, y);
  ix.layers.clear();
  for (int l = 0; l < d.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerIndex li{};
    li.wq = add(p + "attn.wq", h, h);
    li.wk = add(p + "attn.wk", h, h);
    li.wv = add(p + "attn.wv", h, h);
    li.wo = add(p + "attn.wo", h, h);
    li.edge_bias = add(p + "attn.edge_bias", e, 1);
    li.global_to_node = add(p + "attn.global", y, h);
    li.ln1_gamma = add(p + "ln_attn.gamma", 1, h);
    li.ln1_beta = add(p + "ln_attn.beta", 1, h);
    li.mlp_w1 = add(p + "mlp.w1", h, 2 * h);
    li.mlp_b1 = add(p + "mlp.b1", 1, 2 * h);
    li.mlp_w2 = add(p + "mlp.w2", 2 * h, h);
    li.mlp_b2 = add(p + "mlp.b2", 1, h);
    li.ln2_gamma = add(p + "ln_mlp.gamma", 1, h);
    li.ln2_beta = add(p + "ln_mlp.beta", 1, h);
    li.edge_self = add(p + "edge.self", e, e);
    li.edge_sum = add(p + "edge.endpoint_sum", h, e);
    li.edge_prod = add(p + "edge.endpoint_prod", h, e);
    li.edge_global = add(p + "edge.global", y, e);
    li.edge_bias_vec = add(p + "edge.bias", 1, e);
    li.edge_out = add(p + "edge.out", e, e);
    li.edge_out_bias = add(p + "edge.out_bias", 1, e);
    li.ln_edge_gamma = add(p + "ln_edge.gamma", 1, e);
    li.ln_edge_beta = add(p + "ln_edge.beta", 1, e);
    li.glob_node = add(p + "global.node", h, y);
    li.glob_edge = add(p + "global.edge", e, y);
    li.glob_self = add(p + "global.self", y, y);
    li.glob_bias = add(p + "global.bias", 1, y);
    ix.layers.push_back(li);
  }
  ix.head_node_w = add("head.node.weight", h, d.node_types);
  ix.head_node_b = add("head.node.bias", 1, d.node_types);
  ix.head_edge_w = add("head.edge.weight", e, d.edge_types);
  ix.head_edge_b = add("head.edge.bias", 1, d.edge_types);
}

DenoiserModel::DenoiserModel(const DenoiserDims& dims, std::uint64_t seed) : dims_(dims) {
  dims_.validate();
  build_index();
  Rng rng(seed);
  for (std::size_t k = 0; k < tensors_.size(); ++k) {
    NamedTensor& t = tensors_[k];
    const auto ends_with = [&](std::string_view suffix) {
      return t.name.size() >= suffix.size() && t.name.compare(t.name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".gamma")) {
      t.value.setOnes();
    } else if (ends_with(".beta") || ends_with("bias") || ends_with(".b1") || ends_with(".b2")) {
      t.value.setZero();
    } else {
      // Fan-in scaled uniform; output heads start small so the initial
      // prediction is close to uniform.
      double bound = 1.0 / std::sqrt(static_cast<double>(t.value.rows()));
      if (t.name.rfind("head.", 0) == 0) bound *= 0.1;
      for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
    }
  }
  round_to_float();
}

std::size_t DenoiserModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& t : tensors_) count += static_cast<std::size_t>(t.value.size());
  return count;
}

Gradients DenoiserModel::zero_gradients() const {
  Gradients g;
  g.reserve(tensors_.size());
  for (const auto& t : tensors_) g.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
  return g;
}

void DenoiserModel::round_to_float() {
  for (auto& t : tensors_)
    for (Eigen::Index i = 0; i < t.value.size(); ++i)
      t.value.data()[i] = static_cast<double>(static_cast<float>(t.value.data()[i]));
}

void DenoiserModel::load_tensors(std::vector<NamedTensor> tensors) {
  if (tensors.size() != tensors_.size()) throw Error(ErrorCode::ShapeMismatch, "tensor count differs");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    if (tensors[k].name != tensors_[k].name || tensors[k].value.rows() != tensors_[k].value.rows() ||
        tensors[k].value.cols() != tensors_[k].value.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "tensor '" + tensors[k].name + "' does not match '" + tensors_[k].name + "'");
    }
  }
  tensors_ = std::move(tensors);
}

bool operator==(const DenoiserModel& x, const DenoiserModel& y) {
  if (!(x.dims_ == y.dims_) || x.tensors_.size() != y.tensors_.size()) return false;
  for (std::size_t k = 0; k < x.tensors_.size(); ++k) {
    if (x.tensors_[k].name != y.tensors_[k].name || x.tensors_[k].value != y.tensors_[k].value) return false;
  }
  return true;
}

DenoiserModel init_model(const DenoiserDims& dims, std::uint64_t seed) { return DenoiserModel(dims, seed); }

DenoiserTrace record_forward(ad::Tape& tape, const DenoiserModel& model, const Graph& g_t, int t, int steps,
                             Gradients* sinks) {
  const DenoiserDims& d = model.dims();
  if (g_t.node_types() != d.node_types || g_t.edge_types() != d.edge_types) {
    throw Error(ErrorCode::ShapeMismatch, "graph type counts differ from the model");
  }
  if (t < 1 || t > steps) throw Error(ErrorCode::OutOfRange, "timestep " + std::to_string(t));
  if (g_t.n() < 1) throw Error(ErrorCode::ShapeMismatch, "empty graph");
  if (sinks && sinks->size() != model.tensors().size()) throw Error(ErrorCode::ShapeMismatch, "gradient buffer");

  DenoiserTrace trace;
  trace.params.reserve(model.tensors().size());
  for (std::size_t k = 0; k < model.tensors().size(); ++k) {
    trace.params.push_back(tape.parameter(model.tensors()[k].value, sinks ? &(*sinks)[k] : nullptr));
  }
  const auto P = [&](int idx) { return trace.params[static_cast<std::size_t>(idx)]; };
  const auto linear = [&](ad::Var x, int w, int b) { return tape.add_row(tape.matmul(x, P(w)), P(b)); };

  const StructuralFeatures feats = structural_features(g_t, t, steps, d.max_nodes);
  Eigen::MatrixXd node_in(g_t.n(), d.node_types + kNodeFeatureDim);
  node_in << g_t.node_one_hot(), feats.node;

  const auto& ix = model.index();
  ad::Var h = tape.relu(linear(tape.constant(std::move(node_in)), ix.embed_node_w, ix.embed_node_b));
  ad::Var z = tape.relu(linear(tape.constant(g_t.edge_one_hot()), ix.embed_edge_w, ix.embed_edge_b));
  ad::Var y = tape.relu(linear(tape.constant(feats.global), ix.embed_global_w, ix.embed_global_b));

  const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(d.hidden_node));
  for (const auto& L : ix.layers) {
    // Edge-biased self-attention over nodes.
    ad::Var q = tape.matmul(h, P(L.wq));
    ad::Var k = tape.matmul(h, P(L.wk));
    ad::Var v = tape.matmul(h, P(L.wv));
    ad::Var scores = tape.add(tape.scale(tape.matmul_nt(q, k), inv_sqrt_h),
                              tape.reshape_square(tape.matmul(z, P(L.edge_bias))));
    ad::Var attn = tape.matmul(tape.matmul(tape.softmax_rows(scores), v), P(L.wo));
    ad::Var node_global = tape.matmul(y, P(L.global_to_node));
    ad::Var h1 = tape.layer_norm(tape.add_row(tape.add(h, attn), node_global), P(L.ln1_gamma), P(L.ln1_beta));
    ad::Var mlp = linear(tape.relu(linear(h1, L.mlp_w1, L.mlp_b1)), L.mlp_w2, L.mlp_b2);
    h = tape.layer_norm(tape.add(h1, mlp), P(L.ln2_gamma), P(L.ln2_beta));

    // Edge update from the endpoint pair; both terms are symmetric in (i, j).
    ad::Var pre = tape.add(tape.matmul(z, P(L.edge_self)), tape.pair_sum(tape.matmul(h, P(L.edge_sum))));
    pre = tape.add(pre, tape.pair_mul(tape.matmul(h, P(L.edge_prod))));
    pre = tape.add_row(tape.add_row(pre, tape.matmul(y, P(L.edge_global))), P(L.edge_bias_vec));
    ad::Var upd = linear(tape.relu(pre), L.edge_out, L.edge_out_bias);
    z = tape.layer_norm(tape.add(z, upd), P(L.ln_edge_gamma), P(L.ln_edge_beta));

    // Global update from pooled nodes and edges.
    ad::Var gpre = tape.add(tape.matmul(tape.mean_rows(h), P(L.glob_node)), tape.matmul(tape.mean_rows(z), P(L.glob_edge)));
    gpre = tape.add_row(tape.add(gpre, tape.matmul(y, P(L.glob_self))), P(L.glob_bias));
    y = tape.add(y, tape.relu(gpre));
  }

  trace.node_logits = linear(h, ix.head_node_w, ix.head_node_b);
  ad::Var edge_raw = linear(z, ix.head_edge_w, ix.head_edge_b);
  trace.edge_logits = tape.scale(tape.add(edge_raw, tape.transpose_pairs(edge_raw)), 0.5);
  return trace;
}

namespace {

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& x) {
  Eigen::RowVectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

// Loss terms over node rows and unordered pair rows.
LossResult build_loss(ad::Tape& tape, const DenoiserTrace& trace, const Graph& target, ad::Var& total) {
  const int n = target.n();
  std::vector<int> node_rows(static_cast<std::size_t>(n)), node_targets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    node_rows[static_cast<std::size_t>(i)] = i;
    node_targets[static_cast<std::size_t>(i)] = target.node(i);
  }
  std::vector<int> edge_rows, edge_targets;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      edge_rows.push_back(static_cast<int>(pair_index(i, j, n)));
      edge_targets.push_back(target.edge(i, j));
    }
  ad::Var node_ce = tape.cross_entropy(trace.node_logits, node_rows, node_targets);
  ad::Var edge_ce = tape.cross_entropy(trace.edge_logits, edge_rows, edge_targets);
  total = tape.add(node_ce, edge_ce);
  LossResult r;
  r.node_loss = tape.value(node_ce)(0, 0);
  r.edge_loss = tape.value(edge_ce)(0, 0);
  r.loss = tape.value(total)(0, 0);
  return r;
}

void check_target(const DenoiserModel& model, const Graph& target, const Graph& g_t) {
  if (target.n() != g_t.n() || target.node_types() != model.dims().node_types ||
      target.edge_types() != model.dims().edge_types) {
    throw Error(ErrorCode::ShapeMismatch, "target and noisy graph shapes differ");
  }
}

}  // namespace

SoftGraph denoiser_forward(const DenoiserModel& model, const Graph& g_t, int t, int steps) {
  ad::Tape tape;
  const DenoiserTrace trace = record_forward(tape, model, g_t, t, steps, nullptr);
  const int n = g_t.n();
  const Eigen::MatrixXd& xl = tape.value(trace.node_logits);
  const Eigen::MatrixXd& el = tape.value(trace.edge_logits);
  SoftGraph out(n, model.dims().node_types, model.dims().edge_types);
  for (int i = 0; i < n; ++i) {
    out.px.row(i) = softmax(xl.row(i));
    out.pe(static_cast<Eigen::Index>(pair_index(i, i, n)), kNoEdge) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const auto ij = static_cast<Eigen::Index>(pair_index(i, j, n));
      out.pe.row(ij) = softmax(el.row(ij));
      out.pe.row(static_cast<Eigen::Index>(pair_index(j, i, n))) = out.pe.row(ij);
    }
  }
  return out;
}

LossResult denoiser_loss(const DenoiserModel& model, const Graph& g_target, const Graph& g_t, int t, int steps) {
  check_target(model, g_target, g_t);
  ad::Tape tape;
  const DenoiserTrace trace = record_forward(tape, model, g_t, t, steps, nullptr);
  ad::Var total;
  return build_loss(tape, trace, g_target, total);
}

LossResult loss_and_gradients(const DenoiserModel& model, const Graph& g_target, const Graph& g_t, int t, int steps,
                              Gradients& grads) {
  check_target(model, g_target, g_t);
  ad::Tape tape;
  Gradients local = model.zero_gradients();
  const DenoiserTrace trace = record_forward(tape, model, g_t, t, steps, &local);
  ad::Var total;
  const LossResult r = build_loss(tape, trace, g_target, total);
  if (!std::isfinite(r.loss)) throw Error(ErrorCode::NonFiniteLoss, "loss is " + std::to_string(r.loss));
  tape.backward(total);
  if (grads.size() != local.size()) throw Error(ErrorCode::ShapeMismatch, "gradient buffer");
  for (std::size_t k = 0; k < local.size(); ++k) {
    if (!local[k].allFinite()) throw Error(ErrorCode::NonFiniteLoss, "non-finite gradient in " + model.tensors()[k].name);
    grads[k] += local[k];
  }
  return r;
}

}  // namespace backdiff
