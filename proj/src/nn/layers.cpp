// SPDX-License-Identifier: Apache-2.0

#include "radmot/nn/layers.hpp"

#include "radmot/common/errors.hpp"
#include "radmot/kernels/kernels.hpp"

namespace radmot::nn {

Matrix linear(const Matrix& x, const Tensor& w, const Tensor* b) {
  const std::size_t out = w.rows();
  const std::size_t in = w.cols();
  RADMOT_EXPECT(x.cols() == in, "linear: input width does not match weight");
  Matrix y(x.rows(), out);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xi = x.row(i).data();
    double* yi = y.row(i).data();
    for (std::size_t o = 0; o < out; ++o) {
      yi[o] = kernels::dot(xi, w.data() + o * in, in) + (b ? b->values[o] : 0.0);
    }
  }
  return y;
}

void linear_backward(const Matrix& x, const Matrix& dy, const Tensor& w, double* dw, double* db,
                     Matrix* dx) {
  const std::size_t out = w.rows();
  const std::size_t in = w.cols();
  RADMOT_EXPECT(dy.cols() == out && dy.rows() == x.rows(), "linear_backward: shape mismatch");
  if (dx) *dx = Matrix(x.rows(), in);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xi = x.row(i).data();
    const double* gi = dy.row(i).data();
    double* dxi = dx ? dx->row(i).data() : nullptr;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = gi[o];
      if (g == 0.0) continue;
      if (dw) kernels::axpy(g, xi, dw + o * in, in);
      if (db) db[o] += g;
      if (dxi) kernels::axpy(g, w.data() + o * in, dxi, in);
    }
  }
}

std::vector<double> matvec(const Tensor& w, const std::vector<double>& x) {
  const std::size_t out = w.rows();
  const std::size_t in = w.cols();
  RADMOT_EXPECT(x.size() == in, "matvec: width mismatch");
  std::vector<double> y(out);
  for (std::size_t o = 0; o < out; ++o) y[o] = kernels::dot(w.data() + o * in, x.data(), in);
  return y;
}

void matvec_backward(const Tensor& w, const std::vector<double>& x, const std::vector<double>& dy,
                     double* dw, std::vector<double>* dx) {
  const std::size_t out = w.rows();
  const std::size_t in = w.cols();
  if (dx) dx->assign(in, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    if (dy[o] == 0.0) continue;
    if (dw) kernels::axpy(dy[o], x.data(), dw + o * in, in);
    if (dx) kernels::axpy(dy[o], w.data() + o * in, dx->data(), in);
  }
}

void leaky_relu_inplace(Matrix& m) {
  for (auto& v : m.storage()) v = leaky(v);
}

void leaky_relu_backward(const Matrix& pre, Matrix& grad) {
  auto& g = grad.storage();
  const auto& p = pre.storage();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= leaky_grad(p[i]);
}

Mlp::Mlp(std::string prefix, std::vector<std::size_t> dims, bool activate_output)
    : prefix_(std::move(prefix)), dims_(std::move(dims)), activate_output_(activate_output) {
  RADMOT_EXPECT(dims_.size() >= 2, "Mlp needs at least one layer");
}

std::vector<TensorSpec> Mlp::specs() const {
  std::vector<TensorSpec> out;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const std::string base = prefix_ + ".layer" + std::to_string(l);
    out.push_back({base + ".w", {dims_[l + 1], dims_[l]}});
    out.push_back({base + ".b", {dims_[l + 1]}});
  }
  return out;
}

Matrix Mlp::forward(const Matrix& x, const WeightStore& w, Cache* cache) const {
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix h = x;
  const std::size_t layers = dims_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string base = prefix_ + ".layer" + std::to_string(l);
    Matrix pre = linear(h, w.at(base + ".w"), &w.at(base + ".b"));
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(pre);
    }
    if (l + 1 < layers || activate_output_) leaky_relu_inplace(pre);
    h = std::move(pre);
  }
  return h;
}

Matrix Mlp::backward(const Cache& cache, Matrix dy, const WeightStore& w, GradientStore& g,
                     bool need_input_grad) const {
  const std::size_t layers = dims_.size() - 1;
  for (std::size_t l = layers; l-- > 0;) {
    const std::string base = prefix_ + ".layer" + std::to_string(l);
    if (l + 1 < layers || activate_output_) leaky_relu_backward(cache.pre[l], dy);
    Matrix dx;
    const bool want_dx = l > 0 || need_input_grad;
    linear_backward(cache.inputs[l], dy, w.at(base + ".w"), g[base + ".w"], g[base + ".b"],
                    want_dx ? &dx : nullptr);
    dy = std::move(dx);
  }
  return need_input_grad ? dy : Matrix();
}

void Adam::step(WeightStore& w, const GradientStore& g,
                const std::function<bool(const std::string&)>& trainable) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, tensor] : w.tensors()) {
    if (!trainable(name)) continue;
    const auto& grad = g.at(name);
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(grad.size(), 0.0);
      v.assign(grad.size(), 0.0);
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
      tensor.values[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

}  // namespace radmot::nn
