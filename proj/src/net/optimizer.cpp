#include "dpp/net/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace dpp::net {

Adam::Adam(std::vector<Parameter<float>*> params, Options options) : params_(std::move(params)), opt_(options) {
  for (auto* p : params_) {
    m_.push_back(Matrix<float>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix<float>::Zero(p->value.rows(), p->value.cols()));
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) p->zero_grad();
  }
}

double global_grad_norm(const std::vector<Parameter<float>*>& params) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

double Adam::step() {
  const double norm = global_grad_norm(params_);
  const float scale = (opt_.clip_norm > 0 && norm > opt_.clip_norm) ? static_cast<float>(opt_.clip_norm / norm) : 1.0f;
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  const auto b1 = static_cast<float>(opt_.beta1);
  const auto b2 = static_cast<float>(opt_.beta2);
  const auto step_size = static_cast<float>(opt_.lr * std::sqrt(bc2) / bc1);
  const auto eps = static_cast<float>(opt_.eps * std::sqrt(bc2));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto* p = params_[i];
    const Matrix<float> g = p->grad * scale;
    m_[i] = b1 * m_[i] + (1.0f - b1) * g;
    v_[i] = b2 * v_[i] + (1.0f - b2) * g.cwiseProduct(g);
    p->value.array() -= step_size * m_[i].array() / (v_[i].array().sqrt() + eps);
    p->zero_grad();
  }
  return norm;
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

double max_relative_grad_error(const std::vector<Parameter<double>*>& params, const std::function<double()>& loss,
                               const std::function<void()>& analytic, double h, double floor) {
  for (auto* p : params) p->zero_grad();
  analytic();
  double worst = 0.0;
  for (auto* p : params) {
    const Matrix<double> a = p->grad;
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      double& w = p->value.data()[k];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double an = a.data()[k];
      const double denom = std::max({std::abs(an), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(an - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace dpp::net
