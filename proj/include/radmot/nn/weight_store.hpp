// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace radmot::nn {

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double* data() noexcept { return values.data(); }
  const double* data() const noexcept { return values.data(); }
  /// Leading dimension (rows of a 2-D weight).
  std::size_t rows() const noexcept { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const noexcept { return shape.size() < 2 ? 1 : shape[1]; }
};

std::size_t element_count(const std::vector<std::size_t>& shape);

/// Named learnable tensors plus the architecture manifest they were built from.
///
/// On disk (little-endian):
///   "RMWS" magic, u32 version(1), u64 manifest length, manifest JSON bytes,
///   u32 tensor count, then per tensor (sorted by name):
///   u32 name length, name bytes, u32 rank, rank x u64 dims, float32 values (row-major).
class WeightStore {
 public:
  WeightStore() = default;

  /// Zero-initialised tensors for every spec.
  static WeightStore zeros(const std::vector<TensorSpec>& specs, nlohmann::json manifest = {});

  /// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)) for 2-D
  /// weights, zero biases. Values are rounded to float so the archive round-trips exactly.
  static WeightStore glorot(const std::vector<TensorSpec>& specs, std::uint64_t seed,
                            nlohmann::json manifest = {});

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  void set(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }

  const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }
  std::map<std::string, Tensor>& tensors() noexcept { return tensors_; }

  const nlohmann::json& manifest() const noexcept { return manifest_; }
  void set_manifest(nlohmann::json m) { manifest_ = std::move(m); }

  /// Throws ValidationError naming the first missing, extra, or mis-shaped tensor.
  void verify(const std::vector<TensorSpec>& specs) const;

  void save(const std::filesystem::path& file) const;
  static WeightStore load(const std::filesystem::path& file);

  bool operator==(const WeightStore& other) const;

 private:
  std::map<std::string, Tensor> tensors_;
  nlohmann::json manifest_ = nlohmann::json::object();
};

/// Gradient buffers shaped like a WeightStore.
class GradientStore {
 public:
  GradientStore() = default;
  explicit GradientStore(const WeightStore& like);

  double* operator[](const std::string& name);
  const std::vector<double>& at(const std::string& name) const;
  bool contains(const std::string& name) const { return grads_.count(name) != 0; }
  void zero();
  const std::map<std::string, std::vector<double>>& all() const noexcept { return grads_; }
  std::map<std::string, std::vector<double>>& all() noexcept { return grads_; }

 private:
  std::map<std::string, std::vector<double>> grads_;
};

}  // namespace radmot::nn
