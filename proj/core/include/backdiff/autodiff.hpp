#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace backdiff::ad {

using Matrix = Eigen::MatrixXd;

struct Var {
  int id = -1;
};

// Minimal reverse-mode tape over dense matrices.
//
// Every op records its value and a closure that pushes the output gradient to
// its inputs. Pair tensors of an n-node graph are stored as n^2 x c matrices
// with row i*n+j.
class Tape {
 public:
  Var constant(Matrix value);
  // Leaf whose gradient is added into *sink by backward().
  Var parameter(const Matrix& value, Matrix* sink);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Seeds d(out)/d(out) = 1 for a 1x1 output and runs the tape backwards.
  void backward(Var scalar_output);

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcast a 1 x c row over every row of a
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var softmax_rows(Var a);
  Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
  Var pair_sum(Var a);               // out[i*n+j] = a[i] + a[j]
  Var pair_mul(Var a);               // out[i*n+j] = a[i] .* a[j]
  Var reshape_square(Var column);    // n^2 x 1 -> n x n
  Var transpose_pairs(Var p);        // out[i*n+j] = p[j*n+i]
  Var mean_rows(Var a);              // -> 1 x c
  Var concat_cols(Var a, Var b);
  // sum_k weight_k * -log softmax(logits.row(rows[k]))[targets[k]], as 1x1.
  Var cross_entropy(Var logits, std::span<const int> rows, std::span<const int> targets,
                    std::span<const double> weights = {});

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backward;
    Matrix* sink = nullptr;
  };

  Var push(Matrix value, std::function<void()> backward = {});
  Matrix& g(Var v);  // gradient buffer, zero-initialised on first use
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }

  std::vector<Node> nodes_;
};

// Square side of a pair tensor with `rows` rows.
int pair_side(Eigen::Index rows);

}  // namespace backdiff::ad
