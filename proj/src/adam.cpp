#include "contraseg/adam.hpp"

#include <cmath>

namespace contraseg::model {

Adam::Adam(std::vector<ParamRef> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  check(lr_ > 0.0, "adam: learning rate must be > 0");
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].value->size(), 0.0f);
    v_[i].assign(params_[i].value->size(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& value = *params_[i].value;
    auto& grad = *params_[i].grad;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      double g = grad[k];
      m[k] = static_cast<float>(beta1_ * m[k] + (1.0 - beta1_) * g);
      v[k] = static_cast<float>(beta2_ * v[k] + (1.0 - beta2_) * g * g);
      double mhat = m[k] / bc1;
      double vhat = v[k] / bc2;
      value[k] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

}  // namespace contraseg::model
