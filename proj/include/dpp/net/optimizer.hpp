#pragma once

#include <functional>
#include <vector>

#include "dpp/net/graph.hpp"

namespace dpp::net {

/// Adam over a fixed parameter list, with an optional global-norm clip
/// applied to the gradients before each update.
class Adam {
 public:
  struct Options {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 5.0;  // <= 0 disables clipping
  };

  Adam(std::vector<Parameter<float>*> params, Options options);

  // Clips, updates and zeroes gradients. Returns the pre-clip global norm.
  double step();
  void zero_grad();
  long steps() const { return t_; }

 private:
  std::vector<Parameter<float>*> params_;
  std::vector<Matrix<float>> m_;
  std::vector<Matrix<float>> v_;
  Options opt_;
  long t_ = 0;
};

// Euclidean norm of the concatenation of every gradient.
double global_grad_norm(const std::vector<Parameter<float>*>& params);

// Central finite-difference check of d(loss)/d(params). `loss` must rebuild
// its graph from the current parameter values and return the scalar loss;
// `analytic` must leave the reverse-mode gradient in each Parameter::grad.
// Returns the largest relative error max|a - n| / max(|a|, |n|, floor).
double max_relative_grad_error(const std::vector<Parameter<double>*>& params, const std::function<double()>& loss,
                               const std::function<void()>& analytic, double h = 1e-5, double floor = 1e-6);

}  // namespace dpp::net
