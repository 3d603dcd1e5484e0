#include "nprf/nn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nprf {

void Linear::resize(int in_dim, int out_dim) {
  if (in_dim <= 0 || out_dim <= 0)
    throw std::invalid_argument("Linear::resize: dimensions must be positive");
  in = in_dim;
  out = out_dim;
  w.assign(static_cast<size_t>(in) * static_cast<size_t>(out), 0.0);
  b.assign(static_cast<size_t>(out), 0.0);
}

Vec Linear::forward(const Vec& x) const {
  if (x.size() != static_cast<size_t>(in))
    throw std::invalid_argument("Linear::forward: input size mismatch");
  Vec y(static_cast<size_t>(out));
  for (int i = 0; i < out; i++) {
    double acc = b[static_cast<size_t>(i)];
    const double* row = &w[static_cast<size_t>(i) * static_cast<size_t>(in)];
    for (int j = 0; j < in; j++) acc += row[j] * x[static_cast<size_t>(j)];
    y[static_cast<size_t>(i)] = acc;
  }
  return y;
}

Vec Linear::backward(const Vec& x, const Vec& dy, Linear& grad) const {
  if (x.size() != static_cast<size_t>(in) || dy.size() != static_cast<size_t>(out))
    throw std::invalid_argument("Linear::backward: size mismatch");
  if (grad.in != in || grad.out != out)
    throw std::invalid_argument("Linear::backward: grad shape mismatch");
  Vec dx(static_cast<size_t>(in), 0.0);
  for (int i = 0; i < out; i++) {
    double d = dy[static_cast<size_t>(i)];
    const double* row = &w[static_cast<size_t>(i) * static_cast<size_t>(in)];
    double* grow = &grad.w[static_cast<size_t>(i) * static_cast<size_t>(in)];
    for (int j = 0; j < in; j++) {
      grow[j] += d * x[static_cast<size_t>(j)];
      dx[static_cast<size_t>(j)] += d * row[j];
    }
    grad.b[static_cast<size_t>(i)] += d;
  }
  return dx;
}

Vec tanh_vec(const Vec& x) {
  Vec y(x.size());
  for (size_t i = 0; i < x.size(); i++) y[i] = std::tanh(x[i]);
  return y;
}

double init_bound(int fan_in, int fan_out) {
  if (fan_in <= 0 || fan_out <= 0)
    throw std::invalid_argument("init_bound: fan sizes must be positive");
  return std::sqrt(6.0 / (static_cast<double>(fan_in) + static_cast<double>(fan_out)));
}

void init_uniform(Linear& layer, Rng& rng) {
  double r = init_bound(layer.in, layer.out);
  for (auto& v : layer.w) v = rng.uniform(-r, r);
  for (auto& v : layer.b) v = rng.uniform(-r, r);
}

void save_params(std::ostream& out, std::string_view model_name, std::string_view shape,
                 const ConstParamRefs& blocks) {
  out << "NPRFMDL1 " << model_name << " " << shape << "\n";
  for (const auto& [name, vec] : blocks) {
    out << name << " " << vec->size() << "\n";
    for (size_t i = 0; i < vec->size(); i++) {
      out << format_double((*vec)[i]);
      out << (i + 1 == vec->size() ? "\n" : " ");
    }
    if (vec->empty()) out << "\n";
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

void save_params_file(const std::string& path, std::string_view model_name,
                      std::string_view shape, const ConstParamRefs& blocks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint file: " + path);
  save_params(out, model_name, shape, blocks);
}

LoadedParams load_params(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != "NPRFMDL1")
    throw std::runtime_error("not a checkpoint file (bad magic)");
  LoadedParams out;
  if (!(in >> out.model_name >> out.shape))
    throw std::runtime_error("checkpoint: truncated header");
  std::string name;
  while (in >> name) {
    size_t len = 0;
    if (!(in >> len)) throw std::runtime_error("checkpoint: missing length for block " + name);
    Vec vec(len);
    for (size_t i = 0; i < len; i++) {
      if (!(in >> vec[i]))
        throw std::runtime_error("checkpoint: truncated block " + name);
    }
    if (!out.blocks.emplace(name, std::move(vec)).second)
      throw std::runtime_error("checkpoint: duplicate block " + name);
  }
  return out;
}

LoadedParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
  return load_params(in);
}

void apply_loaded_params(const LoadedParams& loaded, const ParamRefs& refs) {
  if (loaded.blocks.size() != refs.size())
    throw std::runtime_error("checkpoint: expected " + std::to_string(refs.size()) +
                             " blocks, found " + std::to_string(loaded.blocks.size()));
  for (const auto& [name, vec] : refs) {
    auto it = loaded.blocks.find(name);
    if (it == loaded.blocks.end())
      throw std::runtime_error("checkpoint: missing block " + name);
    if (it->second.size() != vec->size())
      throw std::runtime_error("checkpoint: block " + name + " has length " +
                               std::to_string(it->second.size()) + ", expected " +
                               std::to_string(vec->size()));
    *vec = it->second;
  }
}

}  // namespace nprf
