// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "radmot/common/matrix.hpp"
#include "radmot/nn/weight_store.hpp"

namespace radmot::nn {

inline constexpr double kLeakySlope = 0.1;

inline double leaky(double x) { return x > 0.0 ? x : kLeakySlope * x; }
inline double leaky_grad(double pre) { return pre > 0.0 ? 1.0 : kLeakySlope; }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// y = x W^T + b, W stored out x in. `b` may be null.
Matrix linear(const Matrix& x, const Tensor& w, const Tensor* b);

/// Accumulates dW += dy^T x and db += column sums of dy; writes dx = dy W when
/// `dx` is non-null. Rows of dy that are entirely zero are skipped.
void linear_backward(const Matrix& x, const Matrix& dy, const Tensor& w, double* dw, double* db,
                     Matrix* dx);

/// Single-vector variants used by the recurrent cell.
std::vector<double> matvec(const Tensor& w, const std::vector<double>& x);
void matvec_backward(const Tensor& w, const std::vector<double>& x, const std::vector<double>& dy,
                     double* dw, std::vector<double>* dx);

void leaky_relu_inplace(Matrix& m);
/// grad *= leaky'(pre), elementwise.
void leaky_relu_backward(const Matrix& pre, Matrix& grad);

/// Stack of affine layers named `<prefix>.layer<i>.{w,b}` with leaky-rectifier
/// activations between them.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre;
  };

  Mlp() = default;
  Mlp(std::string prefix, std::vector<std::size_t> dims, bool activate_output);

  std::vector<TensorSpec> specs() const;
  std::size_t in_dim() const { return dims_.front(); }
  std::size_t out_dim() const { return dims_.back(); }
  const std::string& prefix() const { return prefix_; }

  Matrix forward(const Matrix& x, const WeightStore& w, Cache* cache = nullptr) const;
  /// Returns dL/dx when `need_input_grad`, otherwise an empty matrix.
  Matrix backward(const Cache& cache, Matrix dy, const WeightStore& w, GradientStore& g,
                  bool need_input_grad) const;

 private:
  std::string prefix_;
  std::vector<std::size_t> dims_;
  bool activate_output_ = false;
};

/// Adaptive-moment optimizer over the tensors selected by `trainable`.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step(WeightStore& w, const GradientStore& g,
            const std::function<bool(const std::string&)>& trainable);

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace radmot::nn
