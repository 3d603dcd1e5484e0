#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nprf/common.hpp"

namespace nprf {

using Vec = std::vector<double>;

// Dense layer, weights row-major [out][in].
struct Linear {
  int in = 0;
  int out = 0;
  Vec w;
  Vec b;

  void resize(int in_dim, int out_dim);
  Vec forward(const Vec& x) const;
  // Accumulates d(loss)/dw and d(loss)/db into grad (same shape as *this)
  // given the layer input x and upstream dy; returns d(loss)/dx.
  Vec backward(const Vec& x, const Vec& dy, Linear& grad) const;
};

Vec tanh_vec(const Vec& x);

// √(6 / (fan_in + fan_out)): bound for the uniform weight init.
double init_bound(int fan_in, int fan_out);

// Fills w then b with draws from U[-r, r], r = init_bound(in, out).
void init_uniform(Linear& layer, Rng& rng);

// Named views over a model's parameter vectors, in a fixed declared order.
// The same order is used for initialization, gradients and checkpoints.
using ParamRefs = std::vector<std::pair<std::string, Vec*>>;
using ConstParamRefs = std::vector<std::pair<std::string, const Vec*>>;

// Checkpoint file: header `NPRFMDL1 <model-name> <shape-descriptor>`, then one
// `name length` line per block followed by its values. Values are printed
// with enough digits that reloaded parameters reproduce scores to 1e-12.
void save_params(std::ostream& out, std::string_view model_name, std::string_view shape,
                 const ConstParamRefs& blocks);
void save_params_file(const std::string& path, std::string_view model_name,
                      std::string_view shape, const ConstParamRefs& blocks);

struct LoadedParams {
  std::string model_name;
  std::string shape;
  std::map<std::string, Vec> blocks;
};

LoadedParams load_params(std::istream& in);
LoadedParams load_params_file(const std::string& path);

// Copies loaded blocks into the refs; missing/extra/size-mismatched blocks
// are errors naming the block.
void apply_loaded_params(const LoadedParams& loaded, const ParamRefs& refs);

}  // namespace nprf
