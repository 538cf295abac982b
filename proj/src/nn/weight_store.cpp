// SPDX-License-Identifier: Apache-2.0

#include "radmot/nn/weight_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "radmot/common/errors.hpp"

namespace radmot::nn {

namespace {

constexpr char kMagic[4] = {'R', 'M', 'W', 'S'};
constexpr std::uint32_t kVersion = 1;

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& file) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError(file + ": truncated weight archive");
  return v;
}

}  // namespace

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

WeightStore WeightStore::zeros(const std::vector<TensorSpec>& specs, nlohmann::json manifest) {
  WeightStore ws;
  for (const auto& s : specs) {
    ws.tensors_[s.name] = Tensor{s.shape, std::vector<double>(element_count(s.shape), 0.0)};
  }
  ws.manifest_ = std::move(manifest);
  return ws;
}

WeightStore WeightStore::glorot(const std::vector<TensorSpec>& specs, std::uint64_t seed,
                                nlohmann::json manifest) {
  WeightStore ws = zeros(specs, std::move(manifest));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  // Iterate in spec order so adding a tensor does not reshuffle earlier ones.
  for (const auto& s : specs) {
    if (s.shape.size() < 2) continue;
    auto& t = ws.tensors_[s.name];
    const double fan_out = static_cast<double>(s.shape[0]);
    const double fan_in = static_cast<double>(element_count(s.shape)) / fan_out;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.values) v = static_cast<double>(static_cast<float>(limit * unit(rng)));
  }
  return ws;
}

const Tensor& WeightStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractViolation("missing weight tensor: " + name);
  return it->second;
}

Tensor& WeightStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractViolation("missing weight tensor: " + name);
  return it->second;
}

void WeightStore::verify(const std::vector<TensorSpec>& specs) const {
  for (const auto& s : specs) {
    auto it = tensors_.find(s.name);
    if (it == tensors_.end()) throw ValidationError("weights: missing tensor " + s.name);
    if (it->second.shape != s.shape) {
      throw ValidationError("weights: tensor " + s.name + " has shape " +
                            shape_str(it->second.shape) + ", expected " + shape_str(s.shape));
    }
  }
  if (tensors_.size() != specs.size()) {
    for (const auto& [name, t] : tensors_) {
      bool found = false;
      for (const auto& s : specs) found = found || s.name == name;
      if (!found) throw ValidationError("weights: unexpected tensor " + name);
    }
  }
}

void WeightStore::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  const std::string manifest = manifest_.dump();
  put<std::uint64_t>(out, manifest.size());
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& [name, t] : tensors_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(out, d);
    for (double v : t.values) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw IoError("write failure on " + file.string());
}

WeightStore WeightStore::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  const std::string fname = file.string();
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError(fname + ": not a weight archive");
  if (get<std::uint32_t>(in, fname) != kVersion) throw IoError(fname + ": unsupported version");
  WeightStore ws;
  const auto mlen = get<std::uint64_t>(in, fname);
  std::string manifest(mlen, '\0');
  in.read(manifest.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw IoError(fname + ": truncated manifest");
  try {
    ws.manifest_ = nlohmann::json::parse(manifest);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fname + ": bad manifest: " + e.what());
  }
  const auto count = get<std::uint32_t>(in, fname);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto nlen = get<std::uint32_t>(in, fname);
    std::string name(nlen, '\0');
    in.read(name.data(), nlen);
    const auto rank = get<std::uint32_t>(in, fname);
    Tensor t;
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(get<std::uint64_t>(in, fname));
    t.values.resize(element_count(t.shape));
    for (auto& v : t.values) v = static_cast<double>(get<float>(in, fname));
    ws.tensors_[name] = std::move(t);
  }
  return ws;
}

bool WeightStore::operator==(const WeightStore& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (const auto& [name, t] : tensors_) {
    auto it = other.tensors_.find(name);
    if (it == other.tensors_.end()) return false;
    if (t.shape != it->second.shape || t.values != it->second.values) return false;
  }
  return true;
}

GradientStore::GradientStore(const WeightStore& like) {
  for (const auto& [name, t] : like.tensors()) grads_[name].assign(t.size(), 0.0);
}

double* GradientStore::operator[](const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ContractViolation("missing gradient buffer: " + name);
  return it->second.data();
}

const std::vector<double>& GradientStore::at(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw ContractViolation("missing gradient buffer: " + name);
  return it->second;
}

void GradientStore::zero() {
  for (auto& [name, g] : grads_) std::fill(g.begin(), g.end(), 0.0);
}

}  // namespace radmot::nn
