#include "dpp/net/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace dpp::net {

template <typename T>
void Parameter<T>::init_uniform(std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> u(-range, range);
  for (Eigen::Index j = 0; j < value.cols(); ++j)
    for (Eigen::Index i = 0; i < value.rows(); ++i) value(i, j) = static_cast<T>(u(rng));
  zero_grad();
}

template <typename T>
Expr Graph<T>::push(Mat value, std::function<void(Graph&, int)> backprop, Mat aux) {
  nodes_.push_back(Node{std::move(value), Mat(), std::move(aux), std::move(backprop)});
  return Expr{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
typename Graph<T>::Mat& Graph<T>::grad(int id) {
  Node& n = node(id);
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
Expr Graph<T>::constant(Mat m) {
  return push(std::move(m));
}

template <typename T>
Expr Graph<T>::param(Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Expr{it->second};
  Parameter<T>* pp = &p;
  if (pp->grad.rows() != pp->value.rows() || pp->grad.cols() != pp->value.cols()) pp->zero_grad();
  Expr e = push(p.value, [pp](Graph& g, int self) { pp->grad += g.node(self).grad; });
  param_nodes_.emplace(&p, e.id);
  return e;
}

template <typename T>
Expr Graph<T>::lookup(Parameter<T>& table, std::span<const int> ids) {
  Mat out(table.value.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] < 0 || ids[j] >= table.value.cols())
      throw std::out_of_range("token id " + std::to_string(ids[j]) + " out of range for " + table.name);
    out.col(static_cast<Eigen::Index>(j)) = table.value.col(ids[j]);
  }
  Parameter<T>* tp = &table;
  std::vector<int> idv(ids.begin(), ids.end());
  return push(std::move(out), [tp, idv](Graph& g, int self) {
    if (tp->grad.rows() != tp->value.rows() || tp->grad.cols() != tp->value.cols()) tp->zero_grad();
    const Mat& G = g.node(self).grad;
    for (std::size_t j = 0; j < idv.size(); ++j) tp->grad.col(idv[j]) += G.col(static_cast<Eigen::Index>(j));
  });
}

template <typename T>
Expr Graph<T>::matmul(Expr a, Expr b) {
  if (val(a.id).cols() != val(b.id).rows()) throw std::invalid_argument("matmul shape mismatch");
  Mat out = val(a.id) * val(b.id);
  return push(std::move(out), [a, b](Graph& g, int self) {
    const Mat& G = g.node(self).grad;
    g.grad(a.id).noalias() += G * g.val(b.id).transpose();
    g.grad(b.id).noalias() += g.val(a.id).transpose() * G;
  });
}

template <typename T>
Expr Graph<T>::add(Expr a, Expr b) {
  const Mat& A = val(a.id);
  const Mat& B = val(b.id);
  if (A.rows() != B.rows()) throw std::invalid_argument("add shape mismatch");
  if (A.cols() == B.cols()) {
    Mat out = A + B;
    return push(std::move(out), [a, b](Graph& g, int self) {
      const Mat& G = g.node(self).grad;
      g.grad(a.id) += G;
      g.grad(b.id) += G;
    });
  }
  if (B.cols() != 1) throw std::invalid_argument("add broadcast requires a column vector");
  Mat out = A.colwise() + B.col(0);
  return push(std::move(out), [a, b](Graph& g, int self) {
    const Mat& G = g.node(self).grad;
    g.grad(a.id) += G;
    g.grad(b.id) += G.rowwise().sum();
  });
}

template <typename T>
Expr Graph<T>::add_n(std::span<const Expr> xs) {
  if (xs.empty()) throw std::invalid_argument("add_n of nothing");
  Mat out = val(xs[0].id);
  for (std::size_t i = 1; i < xs.size(); ++i) out += val(xs[i].id);
  std::vector<Expr> in(xs.begin(), xs.end());
  return push(std::move(out), [in](Graph& g, int self) {
    for (Expr x : in) g.grad(x.id) += g.node(self).grad;
  });
}

template <typename T>
Expr Graph<T>::sub(Expr a, Expr b) {
  Mat out = val(a.id) - val(b.id);
  return push(std::move(out), [a, b](Graph& g, int self) {
    const Mat& G = g.node(self).grad;
    g.grad(a.id) += G;
    g.grad(b.id) -= G;
  });
}

template <typename T>
Expr Graph<T>::cmul(Expr a, Expr b) {
  Mat out = val(a.id).cwiseProduct(val(b.id));
  return push(std::move(out), [a, b](Graph& g, int self) {
    const Mat& G = g.node(self).grad;
    g.grad(a.id) += G.cwiseProduct(g.val(b.id));
    g.grad(b.id) += G.cwiseProduct(g.val(a.id));
  });
}

template <typename T>
Expr Graph<T>::scale(Expr a, T s) {
  Mat out = val(a.id) * s;
  return push(std::move(out), [a, s](Graph& g, int self) { g.grad(a.id) += g.node(self).grad * s; });
}

template <typename T>
Expr Graph<T>::tanh(Expr a) {
  Mat out = val(a.id).array().tanh().matrix();
  return push(std::move(out), [a](Graph& g, int self) {
    const Node& n = g.node(self);
    g.grad(a.id).array() += n.grad.array() * (T(1) - n.value.array().square());
  });
}

template <typename T>
Expr Graph<T>::sigmoid(Expr a) {
  Mat out = (T(1) / (T(1) + (-val(a.id).array()).exp())).matrix();
  return push(std::move(out), [a](Graph& g, int self) {
    const Node& n = g.node(self);
    g.grad(a.id).array() += n.grad.array() * n.value.array() * (T(1) - n.value.array());
  });
}

template <typename T>
Expr Graph<T>::relu(Expr a) {
  Mat out = val(a.id).cwiseMax(T(0));
  return push(std::move(out), [a](Graph& g, int self) {
    const Node& n = g.node(self);
    g.grad(a.id).array() += (g.val(a.id).array() > T(0)).select(n.grad.array(), T(0));
  });
}

template <typename T>
Expr Graph<T>::concat_rows(std::span<const Expr> xs) {
  if (xs.empty()) throw std::invalid_argument("concat of nothing");
  Eigen::Index rows = 0;
  const Eigen::Index cols = val(xs[0].id).cols();
  for (Expr x : xs) {
    if (val(x.id).cols() != cols) throw std::invalid_argument("concat_rows column mismatch");
    rows += val(x.id).rows();
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (Expr x : xs) {
    out.middleRows(r, val(x.id).rows()) = val(x.id);
    r += val(x.id).rows();
  }
  std::vector<Expr> in(xs.begin(), xs.end());
  return push(std::move(out), [in](Graph& g, int self) {
    const Mat& G = g.node(self).grad;
    Eigen::Index off = 0;
    for (Expr x : in) {
      const Eigen::Index n = g.val(x.id).rows();
      g.grad(x.id) += G.middleRows(off, n);
      off += n;
    }
  });
}

template <typename T>
Expr Graph<T>::slice_rows(Expr a, int start, int n) {
  if (start < 0 || start + n > val(a.id).rows()) throw std::invalid_argument("slice_rows out of range");
  Mat out = val(a.id).middleRows(start, n);
  return push(std::move(out), [a, start, n](Graph& g, int self) {
    g.grad(a.id).middleRows(start, n) += g.node(self).grad;
  });
}

template <typename T>
Expr Graph<T>::select_cols(Expr a, std::span<const int> cols) {
  const Mat& A = val(a.id);
  Mat out(A.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= A.cols()) throw std::out_of_range("select_cols index out of range");
    out.col(static_cast<Eigen::Index>(j)) = A.col(cols[j]);
  }
  std::vector<int> cv(cols.begin(), cols.end());
  return push(std::move(out), [a, cv](Graph& g, int self) {
    const Mat& G = g.node(self).grad;
    Mat& GA = g.grad(a.id);
    for (std::size_t j = 0; j < cv.size(); ++j) GA.col(cv[j]) += G.col(static_cast<Eigen::Index>(j));
  });
}

template <typename T>
Expr Graph<T>::scale_columns(Expr a, Expr w) {
  const Mat& A = val(a.id);
  const Mat& W = val(w.id);
  if (W.rows() != 1 || W.cols() != A.cols()) throw std::invalid_argument("scale_columns shape mismatch");
  Mat out = A * W.row(0).asDiagonal();
  return push(std::move(out), [a, w](Graph& g, int self) {
    const Mat& G = g.node(self).grad;
    g.grad(a.id) += G * g.val(w.id).row(0).asDiagonal();
    g.grad(w.id) += G.cwiseProduct(g.val(a.id)).colwise().sum();
  });
}

template <typename T>
Expr Graph<T>::blend(Expr a, Expr b, const Mat& mask) {
  Mat out = val(a.id) * mask.row(0).asDiagonal();
  out += val(b.id) * (Mat::Ones(1, mask.cols()) - mask).row(0).asDiagonal();
  return push(
      std::move(out),
      [a, b](Graph& g, int self) {
        const Node& n = g.node(self);
        g.grad(a.id) += n.grad * n.aux.row(0).asDiagonal();
        g.grad(b.id) += n.grad * (Mat::Ones(1, n.aux.cols()) - n.aux).row(0).asDiagonal();
      },
      mask);
}

template <typename T>
Expr Graph<T>::dropout(Expr a, T p) {
  if (!train_ || p <= T(0)) return a;
  if (rng_ == nullptr) throw std::logic_error("dropout in train mode requires an rng");
  const Mat& A = val(a.id);
  Mat mask(A.rows(), A.cols());
  std::bernoulli_distribution keep(1.0 - static_cast<double>(p));
  const T s = T(1) / (T(1) - p);
  for (Eigen::Index j = 0; j < mask.cols(); ++j)
    for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(*rng_) ? s : T(0);
  Mat out = A.cwiseProduct(mask);
  return push(
      std::move(out),
      [a](Graph& g, int self) {
        const Node& n = g.node(self);
        g.grad(a.id) += n.grad.cwiseProduct(n.aux);
      },
      std::move(mask));
}

template <typename T>
Expr Graph<T>::sum(Expr a) {
  Mat out(1, 1);
  out(0, 0) = val(a.id).sum();
  return push(std::move(out), [a](Graph& g, int self) {
    g.grad(a.id).array() += g.node(self).grad(0, 0);
  });
}

namespace {

template <typename T>
Matrix<T> column_softmax(const Matrix<T>& a) {
  Matrix<T> out(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const T m = a.col(j).maxCoeff();
    out.col(j) = (a.col(j).array() - m).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

}  // namespace

template <typename T>
Expr Graph<T>::softmax_cols(Expr a) {
  Mat out = column_softmax<T>(val(a.id));
  return push(std::move(out), [a](Graph& g, int self) {
    const Node& n = g.node(self);
    const Mat gy = n.grad.cwiseProduct(n.value);
    Mat d = gy;
    d -= n.value * gy.colwise().sum().asDiagonal();
    g.grad(a.id) += d;
  });
}

template <typename T>
Expr Graph<T>::log_softmax_cols(Expr a) {
  const Mat& A = val(a.id);
  Mat sm = column_softmax<T>(A);
  Mat out(A.rows(), A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    const T m = A.col(j).maxCoeff();
    const T lse = m + std::log((A.col(j).array() - m).exp().sum());
    out.col(j) = (A.col(j).array() - lse).matrix();
  }
  return push(
      std::move(out),
      [a](Graph& g, int self) {
        const Node& n = g.node(self);
        Mat d = n.grad;
        d -= n.aux * n.grad.colwise().sum().asDiagonal();
        g.grad(a.id) += d;
      },
      std::move(sm));
}

template <typename T>
Expr Graph<T>::nll(Expr logits, std::span<const int> targets, std::span<const T> weights) {
  const Mat& L = val(logits.id);
  if (static_cast<Eigen::Index>(targets.size()) != L.cols() || weights.size() != targets.size())
    throw std::invalid_argument("nll batch size mismatch");
  Mat sm = column_softmax<T>(L);
  Mat out(1, L.cols());
  for (Eigen::Index j = 0; j < L.cols(); ++j) {
    const int t = targets[static_cast<std::size_t>(j)];
    if (t < 0 || t >= L.rows()) throw std::out_of_range("nll target out of range");
    const T m = L.col(j).maxCoeff();
    const T lse = m + std::log((L.col(j).array() - m).exp().sum());
    out(0, j) = weights[static_cast<std::size_t>(j)] * (lse - L(t, j));
  }
  std::vector<int> tv(targets.begin(), targets.end());
  std::vector<T> wv(weights.begin(), weights.end());
  return push(
      std::move(out),
      [logits, tv, wv](Graph& g, int self) {
        const Node& n = g.node(self);
        Mat& GL = g.grad(logits.id);
        for (Eigen::Index j = 0; j < n.aux.cols(); ++j) {
          const T c = n.grad(0, j) * wv[static_cast<std::size_t>(j)];
          if (c == T(0)) continue;
          GL.col(j) += c * n.aux.col(j);
          GL(tv[static_cast<std::size_t>(j)], j) -= c;
        }
      },
      std::move(sm));
}

template <typename T>
Expr Graph<T>::bce_with_logits(Expr logit, std::span<const T> labels, std::span<const T> weights) {
  const Mat& X = val(logit.id);
  if (X.rows() != 1 || static_cast<Eigen::Index>(labels.size()) != X.cols() || weights.size() != labels.size())
    throw std::invalid_argument("bce_with_logits shape mismatch");
  Mat out(1, X.cols());
  Mat sig(1, X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const T x = X(0, j);
    const T y = labels[static_cast<std::size_t>(j)];
    const T softplus = std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
    out(0, j) = weights[static_cast<std::size_t>(j)] * (softplus - y * x);
    sig(0, j) = T(1) / (T(1) + std::exp(-x));
  }
  std::vector<T> yv(labels.begin(), labels.end());
  std::vector<T> wv(weights.begin(), weights.end());
  return push(
      std::move(out),
      [logit, yv, wv](Graph& g, int self) {
        const Node& n = g.node(self);
        Mat& G = g.grad(logit.id);
        for (Eigen::Index j = 0; j < n.aux.cols(); ++j)
          G(0, j) += n.grad(0, j) * wv[static_cast<std::size_t>(j)] * (n.aux(0, j) - yv[static_cast<std::size_t>(j)]);
      },
      std::move(sig));
}

template <typename T>
Expr Graph<T>::lstm_cell(Expr gates, Expr c_prev) {
  const Mat& Gt = val(gates.id);
  const Mat& C0 = val(c_prev.id);
  const Eigen::Index h = C0.rows();
  if (Gt.rows() != 4 * h || Gt.cols() != C0.cols()) throw std::invalid_argument("lstm_cell shape mismatch");
  const Eigen::Index B = Gt.cols();
  // aux rows: [i; f; o; u; tanh(c)]
  Mat aux(5 * h, B);
  auto sig = [](const auto& x) { return (T(1) / (T(1) + (-x.array()).exp())).matrix(); };
  aux.middleRows(0, h) = sig(Gt.middleRows(0, h));
  aux.middleRows(h, h) = sig(Gt.middleRows(h, h));
  aux.middleRows(2 * h, h) = sig(Gt.middleRows(2 * h, h));
  aux.middleRows(3 * h, h) = Gt.middleRows(3 * h, h).array().tanh().matrix();
  Mat out(2 * h, B);
  out.middleRows(h, h) = aux.middleRows(h, h).cwiseProduct(C0) + aux.middleRows(0, h).cwiseProduct(aux.middleRows(3 * h, h));
  aux.middleRows(4 * h, h) = out.middleRows(h, h).array().tanh().matrix();
  out.middleRows(0, h) = aux.middleRows(2 * h, h).cwiseProduct(aux.middleRows(4 * h, h));
  return push(
      std::move(out),
      [gates, c_prev, h](Graph& g, int self) {
        const Node& n = g.node(self);
        const auto& A = n.aux;
        const auto i = A.middleRows(0, h).array();
        const auto f = A.middleRows(h, h).array();
        const auto o = A.middleRows(2 * h, h).array();
        const auto u = A.middleRows(3 * h, h).array();
        const auto tc = A.middleRows(4 * h, h).array();
        const auto dh = n.grad.middleRows(0, h).array();
        const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic> dc =
            n.grad.middleRows(h, h).array() + dh * o * (T(1) - tc.square());
        Mat& dG = g.grad(gates.id);
        dG.middleRows(0, h).array() += dc * u * i * (T(1) - i);
        dG.middleRows(h, h).array() += dc * g.val(c_prev.id).array() * f * (T(1) - f);
        dG.middleRows(2 * h, h).array() += dh * tc * o * (T(1) - o);
        dG.middleRows(3 * h, h).array() += dc * i * (T(1) - u.square());
        g.grad(c_prev.id).array() += dc * f;
      },
      std::move(aux));
}

template <typename T>
Expr Graph<T>::attention_scores(std::span<const Expr> keys, Expr query, Expr v, const Mat& mask_bias) {
  const Eigen::Index L = static_cast<Eigen::Index>(keys.size());
  const Mat& Q = val(query.id);
  const Mat& V = val(v.id);
  const Eigen::Index a = Q.rows();
  const Eigen::Index B = Q.cols();
  if (V.rows() != 1 || V.cols() != a) throw std::invalid_argument("attention_scores: v must be 1 x a");
  if (mask_bias.rows() != L || mask_bias.cols() != B) throw std::invalid_argument("attention_scores: mask shape");
  Mat aux(L * a, B);
  Mat out(L, B);
  for (Eigen::Index i = 0; i < L; ++i) {
    aux.middleRows(i * a, a) = (val(keys[static_cast<std::size_t>(i)].id) + Q).array().tanh().matrix();
    out.row(i) = V * aux.middleRows(i * a, a);
  }
  out += mask_bias;
  std::vector<Expr> kv(keys.begin(), keys.end());
  return push(
      std::move(out),
      [kv, query, v, a](Graph& g, int self) {
        const Node& n = g.node(self);
        const Mat& Vv = g.val(v.id);
        Mat dv = Mat::Zero(1, a);
        Mat dq = Mat::Zero(a, n.grad.cols());
        for (std::size_t i = 0; i < kv.size(); ++i) {
          const auto t = n.aux.middleRows(static_cast<Eigen::Index>(i) * a, a);
          const auto gs = n.grad.row(static_cast<Eigen::Index>(i));
          dv.noalias() += gs * t.transpose();
          Mat dt = (Vv.transpose() * gs).cwiseProduct((T(1) - t.array().square()).matrix());
          g.grad(kv[i].id) += dt;
          dq += dt;
        }
        g.grad(v.id) += dv;
        g.grad(query.id) += dq;
      },
      std::move(aux));
}

template <typename T>
Expr Graph<T>::weighted_sum(std::span<const Expr> values, Expr weights) {
  const Mat& W = val(weights.id);
  if (W.rows() != static_cast<Eigen::Index>(values.size())) throw std::invalid_argument("weighted_sum shape mismatch");
  Mat out = Mat::Zero(val(values[0].id).rows(), W.cols());
  for (std::size_t i = 0; i < values.size(); ++i)
    out.noalias() += val(values[i].id) * W.row(static_cast<Eigen::Index>(i)).asDiagonal();
  std::vector<Expr> vv(values.begin(), values.end());
  return push(std::move(out), [vv, weights](Graph& g, int self) {
    const Mat& G = g.node(self).grad;
    const Mat& Wt = g.val(weights.id);
    Mat& dW = g.grad(weights.id);
    for (std::size_t i = 0; i < vv.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      g.grad(vv[i].id).noalias() += G * Wt.row(r).asDiagonal();
      dW.row(r) += G.cwiseProduct(g.val(vv[i].id)).colwise().sum();
    }
  });
}

template <typename T>
Expr Graph<T>::max_pool(std::span<const Expr> xs, const Mat& valid) {
  if (xs.empty()) throw std::invalid_argument("max_pool of nothing");
  const Eigen::Index F = val(xs[0].id).rows();
  const Eigen::Index B = val(xs[0].id).cols();
  Mat out(F, B);
  Mat arg(F, B);
  for (Eigen::Index j = 0; j < B; ++j) {
    for (Eigen::Index f = 0; f < F; ++f) {
      bool found = false;
      T best = T(0);
      Eigen::Index best_i = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (valid(static_cast<Eigen::Index>(i), j) == T(0)) continue;
        const T x = val(xs[i].id)(f, j);
        if (!found || x > best) {
          best = x;
          best_i = static_cast<Eigen::Index>(i);
          found = true;
        }
      }
      if (!found) throw std::invalid_argument("max_pool column without valid entries");
      out(f, j) = best;
      arg(f, j) = static_cast<T>(best_i);
    }
  }
  std::vector<Expr> in(xs.begin(), xs.end());
  return push(
      std::move(out),
      [in](Graph& g, int self) {
        const Node& n = g.node(self);
        for (Eigen::Index j = 0; j < n.grad.cols(); ++j)
          for (Eigen::Index f = 0; f < n.grad.rows(); ++f) {
            const auto i = static_cast<std::size_t>(n.aux(f, j));
            g.grad(in[i].id)(f, j) += n.grad(f, j);
          }
      },
      std::move(arg));
}

template <typename T>
void Graph<T>::backward(Expr loss) {
  if (val(loss.id).size() != 1) throw std::invalid_argument("backward requires a scalar loss");
  grad(loss.id).setOnes();
  for (int i = loss.id; i >= 0; --i) {
    Node& n = node(i);
    if (n.grad.size() == 0 || !n.backprop) continue;
    n.backprop(*this, i);
  }
}

template struct Parameter<float>;
template struct Parameter<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace dpp::net
