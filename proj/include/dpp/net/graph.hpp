#pragma once

#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace dpp::net {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/// A trainable tensor and its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(Matrix<T>::Zero(rows, cols)), grad(Matrix<T>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  void init_uniform(std::mt19937_64& rng, double range);
};

/// Handle to a node of a Graph.
struct Expr {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Dynamic computation graph with reverse-mode differentiation.
///
/// Values are column-batched: a (d x B) matrix holds one d-vector per batch
/// element. A graph is built for one forward pass, differentiated at most
/// once, and discarded. Parameter gradients accumulate into Parameter::grad.
template <typename T>
class Graph {
 public:
  using Mat = Matrix<T>;

  // `train` enables dropout; rng is required when dropout is active.
  explicit Graph(bool train = false, std::mt19937_64* rng = nullptr) : train_(train), rng_(rng) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool train() const { return train_; }
  std::size_t size() const { return nodes_.size(); }
  const Mat& value(Expr e) const { return nodes_.at(static_cast<std::size_t>(e.id)).value; }
  T scalar(Expr e) const { return value(e)(0, 0); }

  Expr constant(Mat m);
  Expr zeros(int rows, int cols) { return constant(Mat::Zero(rows, cols)); }
  // Each parameter enters the graph once; repeated calls return the same node.
  Expr param(Parameter<T>& p);
  // Columns `ids` of `table` (d x V) -> (d x |ids|).
  Expr lookup(Parameter<T>& table, std::span<const int> ids);

  Expr matmul(Expr a, Expr b);
  // Elementwise sum; `b` may be a single column broadcast across a's columns.
  Expr add(Expr a, Expr b);
  Expr add_n(std::span<const Expr> xs);
  Expr sub(Expr a, Expr b);
  Expr cmul(Expr a, Expr b);
  Expr scale(Expr a, T s);
  Expr tanh(Expr a);
  Expr sigmoid(Expr a);
  Expr relu(Expr a);
  Expr concat_rows(std::span<const Expr> xs);
  Expr slice_rows(Expr a, int start, int n);
  // Column gather: result column j is a.col(cols[j]); columns may repeat.
  Expr select_cols(Expr a, std::span<const int> cols);
  // a (d x B) with every column j scaled by w(0, j).
  Expr scale_columns(Expr a, Expr w);
  // mask (1 x B, constant 0/1): mask * a + (1 - mask) * b per column.
  Expr blend(Expr a, Expr b, const Mat& mask);
  Expr dropout(Expr a, T p);
  Expr sum(Expr a);

  // Column-wise softmax / log-softmax of a (n x B).
  Expr softmax_cols(Expr a);
  Expr log_softmax_cols(Expr a);

  // (1 x B) row: weights(j) * -log softmax(logits.col(j))[targets[j]].
  Expr nll(Expr logits, std::span<const int> targets, std::span<const T> weights);
  // (1 x B) row: weights(j) * binary cross entropy of sigmoid(logit(0,j)) vs labels[j].
  Expr bce_with_logits(Expr logit, std::span<const T> labels, std::span<const T> weights);

  // Fused LSTM cell. gates (4h x B) hold pre-activations in [input, forget,
  // output, candidate] order. Returns [h; c] stacked (2h x B).
  Expr lstm_cell(Expr gates, Expr c_prev);

  // Additive attention scores: row i of the (L x B) result is
  // v * tanh(keys[i] + query), plus mask_bias(i, j).
  Expr attention_scores(std::span<const Expr> keys, Expr query, Expr v, const Mat& mask_bias);
  // sum_i values[i] scaled column-wise by weights(i, :).
  Expr weighted_sum(std::span<const Expr> values, Expr weights);
  // Elementwise max over xs, restricted per column to entries with valid(i, j) != 0.
  Expr max_pool(std::span<const Expr> xs, const Mat& valid);

  // Seeds d(loss)/d(loss) = 1 for a (1 x 1) loss and back-propagates.
  void backward(Expr loss);

 private:
  struct Node {
    Mat value;
    Mat grad;
    Mat aux;
    std::function<void(Graph&, int)> backprop;
  };

  Expr push(Mat value, std::function<void(Graph&, int)> backprop = nullptr, Mat aux = Mat());
  Mat& grad(int id);
  bool has_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad.size() != 0; }
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Mat& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  bool train_;
  std::mt19937_64* rng_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int> param_nodes_;
};

extern template struct Parameter<float>;
extern template struct Parameter<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace dpp::net
