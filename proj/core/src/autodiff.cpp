#include "backdiff/autodiff.hpp"

#include <cmath>

#include "backdiff/error.hpp"

namespace backdiff::ad {

int pair_side(Eigen::Index rows) {
  const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rows))));
  if (static_cast<Eigen::Index>(n) * n != rows) throw Error(ErrorCode::ShapeMismatch, "not a pair tensor");
  return n;
}

Var Tape::push(Matrix value, std::function<void()> backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backward), nullptr});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::g(Var v) {
  Node& nd = node(v);
  if (nd.grad.size() == 0) nd.grad = Matrix::Zero(nd.value.rows(), nd.value.cols());
  return nd.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value)); }

Var Tape::parameter(const Matrix& value, Matrix* sink) {
  Var v = push(value);
  node(v).sink = sink;
  return v;
}

void Tape::backward(Var out) {
  if (value(out).size() != 1) throw Error(ErrorCode::ShapeMismatch, "backward needs a scalar output");
  g(out)(0, 0) = 1.0;
  for (int id = out.id; id >= 0; --id) {
    Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.grad.size() == 0) continue;
    if (nd.backward) nd.backward();
    if (nd.sink) *nd.sink += nd.grad;
  }
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  require(value(a).cols() == value(b).rows(), "matmul inner dims");
  Var out = push(value(a) * value(b));
  node(out).backward = [this, a, b, out] {
    const Matrix& go = grad(out);
    g(a).noalias() += go * value(b).transpose();
    g(b).noalias() += value(a).transpose() * go;
  };
  return out;
}

Var Tape::matmul_nt(Var a, Var b) {
  require(value(a).cols() == value(b).cols(), "matmul_nt inner dims");
  Var out = push(value(a) * value(b).transpose());
  node(out).backward = [this, a, b, out] {
    const Matrix& go = grad(out);
    g(a).noalias() += go * value(b);
    g(b).noalias() += go.transpose() * value(a);
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add shapes");
  Var out = push(value(a) + value(b));
  node(out).backward = [this, a, b, out] {
    g(a) += grad(out);
    g(b) += grad(out);
  };
  return out;
}

Var Tape::add_row(Var a, Var row) {
  require(value(row).rows() == 1 && value(row).cols() == value(a).cols(), "add_row shapes");
  Matrix v = value(a);
  v.rowwise() += value(row).row(0);
  Var out = push(std::move(v));
  node(out).backward = [this, a, row, out] {
    g(a) += grad(out);
    g(row) += grad(out).colwise().sum();
  };
  return out;
}

Var Tape::mul(Var a, Var b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "mul shapes");
  Var out = push(value(a).cwiseProduct(value(b)));
  node(out).backward = [this, a, b, out] {
    g(a) += grad(out).cwiseProduct(value(b));
    g(b) += grad(out).cwiseProduct(value(a));
  };
  return out;
}

Var Tape::scale(Var a, double s) {
  Var out = push(value(a) * s);
  node(out).backward = [this, a, s, out] { g(a) += grad(out) * s; };
  return out;
}

Var Tape::relu(Var a) {
  Var out = push(value(a).cwiseMax(0.0));
  node(out).backward = [this, a, out] {
    g(a) += (value(a).array() > 0.0).select(grad(out), 0.0);
  };
  return out;
}

Var Tape::softmax_rows(Var a) {
  const Matrix& x = value(a);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - mx).exp();
    y.row(r) /= y.row(r).sum();
  }
  Var out = push(std::move(y));
  node(out).backward = [this, a, out] {
    const Matrix& y = value(out);
    const Matrix& go = grad(out);
    const Eigen::VectorXd dot = (go.cwiseProduct(y)).rowwise().sum();
    g(a) += y.cwiseProduct(go - dot.replicate(1, go.cols()));
  };
  return out;
}

Var Tape::layer_norm(Var a, Var gamma, Var beta, double eps) {
  const Matrix& x = value(a);
  const auto c = x.cols();
  require(value(gamma).rows() == 1 && value(gamma).cols() == c, "layer_norm gamma");
  require(value(beta).rows() == 1 && value(beta).cols() == c, "layer_norm beta");
  const Eigen::VectorXd mean = x.rowwise().mean();
  Matrix xc = x.colwise() - mean;
  const Eigen::VectorXd inv_std =
      ((xc.array().square().rowwise().sum() / static_cast<double>(c)) + eps).rsqrt().matrix();
  Matrix xhat = xc.array().colwise() * inv_std.array();
  Matrix y = xhat.array().rowwise() * value(gamma).row(0).array();
  y.rowwise() += value(beta).row(0);
  Var out = push(std::move(y));
  node(out).backward = [this, a, gamma, beta, out, xhat = std::move(xhat), inv_std] {
    const Matrix& go = grad(out);
    const auto cols = static_cast<double>(go.cols());
    g(gamma) += go.cwiseProduct(xhat).colwise().sum();
    g(beta) += go.colwise().sum();
    const Matrix gx = go.array().rowwise() * value(gamma).row(0).array();
    const Eigen::VectorXd mean_g = gx.rowwise().mean();
    const Eigen::VectorXd mean_gx = gx.cwiseProduct(xhat).rowwise().sum() / cols;
    Matrix d = gx.colwise() - mean_g;
    d -= (xhat.array().colwise() * mean_gx.array()).matrix();
    g(a) += (d.array().colwise() * inv_std.array()).matrix();
  };
  return out;
}

Var Tape::pair_sum(Var a) {
  const Matrix& x = value(a);
  const auto n = x.rows();
  Matrix y(n * n, x.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) y.row(i * n + j) = x.row(i) + x.row(j);
  Var out = push(std::move(y));
  node(out).backward = [this, a, out] {
    const Matrix& go = grad(out);
    Matrix& ga = g(a);
    const auto n = ga.rows();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        ga.row(i) += go.row(i * n + j);
        ga.row(j) += go.row(i * n + j);
      }
  };
  return out;
}

Var Tape::pair_mul(Var a) {
  const Matrix& x = value(a);
  const auto n = x.rows();
  Matrix y(n * n, x.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) y.row(i * n + j) = x.row(i).cwiseProduct(x.row(j));
  Var out = push(std::move(y));
  node(out).backward = [this, a, out] {
    const Matrix& go = grad(out);
    const Matrix& x = value(a);
    Matrix& ga = g(a);
    const auto n = x.rows();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        ga.row(i) += go.row(i * n + j).cwiseProduct(x.row(j));
        ga.row(j) += go.row(i * n + j).cwiseProduct(x.row(i));
      }
  };
  return out;
}

Var Tape::reshape_square(Var column) {
  require(value(column).cols() == 1, "reshape_square needs a column");
  const int n = pair_side(value(column).rows());
  Matrix y(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) y(i, j) = value(column)(static_cast<Eigen::Index>(i) * n + j, 0);
  Var out = push(std::move(y));
  node(out).backward = [this, column, out, n] {
    Matrix& gc = g(column);
    const Matrix& go = grad(out);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) gc(static_cast<Eigen::Index>(i) * n + j, 0) += go(i, j);
  };
  return out;
}

Var Tape::transpose_pairs(Var p) {
  const Matrix& x = value(p);
  const int n = pair_side(x.rows());
  Matrix y(x.rows(), x.cols());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) y.row(static_cast<Eigen::Index>(i) * n + j) = x.row(static_cast<Eigen::Index>(j) * n + i);
  Var out = push(std::move(y));
  node(out).backward = [this, p, out, n] {
    Matrix& gp = g(p);
    const Matrix& go = grad(out);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        gp.row(static_cast<Eigen::Index>(j) * n + i) += go.row(static_cast<Eigen::Index>(i) * n + j);
  };
  return out;
}

Var Tape::mean_rows(Var a) {
  require(value(a).rows() > 0, "mean_rows of empty matrix");
  Var out = push(value(a).colwise().mean());
  node(out).backward = [this, a, out] {
    const auto rows = static_cast<double>(value(a).rows());
    g(a).rowwise() += grad(out).row(0) / rows;
  };
  return out;
}

Var Tape::concat_cols(Var a, Var b) {
  require(value(a).rows() == value(b).rows(), "concat_cols rows");
  Matrix y(value(a).rows(), value(a).cols() + value(b).cols());
  y << value(a), value(b);
  Var out = push(std::move(y));
  node(out).backward = [this, a, b, out] {
    const Matrix& go = grad(out);
    g(a) += go.leftCols(value(a).cols());
    g(b) += go.rightCols(value(b).cols());
  };
  return out;
}

Var Tape::cross_entropy(Var logits, std::span<const int> rows, std::span<const int> targets,
                        std::span<const double> weights) {
  require(rows.size() == targets.size(), "cross_entropy rows/targets");
  require(weights.empty() || weights.size() == rows.size(), "cross_entropy weights");
  const Matrix& x = value(logits);
  Matrix probs(static_cast<Eigen::Index>(rows.size()), x.cols());
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(rows[k]);
    const double mx = x.row(r).maxCoeff();
    const Eigen::RowVectorXd ex = (x.row(r).array() - mx).exp();
    const double z = ex.sum();
    probs.row(static_cast<Eigen::Index>(k)) = ex / z;
    const double w = weights.empty() ? 1.0 : weights[k];
    loss += w * (std::log(z) + mx - x(r, targets[k]));
  }
  Var out = push(Matrix::Constant(1, 1, loss));
  std::vector<int> rows_copy(rows.begin(), rows.end());
  std::vector<int> targets_copy(targets.begin(), targets.end());
  std::vector<double> weights_copy(weights.begin(), weights.end());
  node(out).backward = [this, logits, out, probs = std::move(probs), rows_copy = std::move(rows_copy),
                        targets_copy = std::move(targets_copy), weights_copy = std::move(weights_copy)] {
    const double go = grad(out)(0, 0);
    Matrix& gl = g(logits);
    for (std::size_t k = 0; k < rows_copy.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(rows_copy[k]);
      const double w = (weights_copy.empty() ? 1.0 : weights_copy[k]) * go;
      gl.row(r) += w * probs.row(static_cast<Eigen::Index>(k));
      gl(r, targets_copy[k]) -= w;
    }
  };
  return out;
}

}  // namespace backdiff::ad
