#include "uicq/net.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "uicq/error.hpp"

namespace uicq {

// ---------------------------------------------------------------------------
// Layers

FeatureMap FeatureMap::from_image(const ImageTensor& img) {
  FeatureMap m;
  m.height = img.height();
  m.width = img.width();
  m.channels = img.channels();
  m.data.assign(img.data().begin(), img.data().end());
  return m;
}

ConvLayer::ConvLayer(int in_ch, int out_ch, int k, int stride_, int pad)
    : in_channels(in_ch),
      out_channels(out_ch),
      kernel(k),
      stride(stride_),
      padding(pad < 0 ? k / 2 : pad),
      weights(static_cast<std::size_t>(out_ch) * in_ch * k * k, 0.0),
      bias(static_cast<std::size_t>(out_ch), 0.0) {}

namespace {

int conv_output_size(int n, int kernel, int stride, int padding) {
  const int span = n + 2 * padding - kernel;
  if (span < 0 || stride < 1) return 0;
  return span / stride + 1;
}

void check_layer(const ConvLayer& layer) {
  if (layer.kernel < 1 || layer.kernel % 2 == 0 || layer.out_channels < 1 || layer.in_channels < 1 ||
      layer.stride < 1 || layer.padding < 0) {
    throw Error(ErrorCode::InvalidArgument, "conv layer needs an odd kernel and positive channels");
  }
  if (layer.weights.size() !=
          static_cast<std::size_t>(layer.out_channels) * layer.in_channels * layer.kernel * layer.kernel ||
      layer.bias.size() != static_cast<std::size_t>(layer.out_channels)) {
    throw Error(ErrorCode::ShapeMismatch, "conv layer weight/bias arrays do not match its shape");
  }
}

// Reorders out x in x k x k weights to k x k x in x out so the innermost loop
// runs contiguously over output channels.
std::vector<double> transpose_kernel(const ConvLayer& layer) {
  const int k = layer.kernel, ic_n = layer.in_channels, oc_n = layer.out_channels;
  std::vector<double> t(layer.weights.size());
  for (int oc = 0; oc < oc_n; ++oc)
    for (int ic = 0; ic < ic_n; ++ic)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx)
          t[((static_cast<std::size_t>(ky) * k + kx) * ic_n + ic) * oc_n + oc] =
              layer.weights[layer.weight_index(oc, ic, ky, kx)];
  return t;
}

}  // namespace

FeatureMap conv_forward(const FeatureMap& input, const ConvLayer& layer) {
  check_layer(layer);
  if (input.channels != layer.in_channels) {
    throw Error(ErrorCode::ShapeMismatch, "conv input has " + std::to_string(input.channels) +
                                              " channels, layer expects " + std::to_string(layer.in_channels));
  }
  const int oh = conv_output_size(input.height, layer.kernel, layer.stride, layer.padding);
  const int ow = conv_output_size(input.width, layer.kernel, layer.stride, layer.padding);
  if (oh < 1 || ow < 1) {
    throw Error(ErrorCode::ShapeMismatch, "conv input smaller than the kernel");
  }
  const int k = layer.kernel, ic_n = layer.in_channels, oc_n = layer.out_channels;
  const std::vector<double> wt = transpose_kernel(layer);

  FeatureMap out(oh, ow, oc_n);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* acc = &out.data[out.index(oy, ox, 0)];
      std::copy(layer.bias.begin(), layer.bias.end(), acc);
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * layer.stride - layer.padding + ky;
        if (iy < 0 || iy >= input.height) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * layer.stride - layer.padding + kx;
          if (ix < 0 || ix >= input.width) continue;
          const double* px = &input.data[input.index(iy, ix, 0)];
          const double* wk = &wt[(static_cast<std::size_t>(ky) * k + kx) * ic_n * oc_n];
          for (int ic = 0; ic < ic_n; ++ic) {
            const double v = px[ic];
            const double* wr = wk + static_cast<std::size_t>(ic) * oc_n;
            for (int oc = 0; oc < oc_n; ++oc) acc[oc] += v * wr[oc];
          }
        }
      }
    }
  }
  return out;
}

FeatureMap relu(const FeatureMap& map) {
  FeatureMap out = map;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

namespace {

FeatureMap maxpool2_with_argmax(const FeatureMap& map, std::vector<std::size_t>* argmax) {
  const int oh = map.height / 2;
  const int ow = map.width / 2;
  FeatureMap out(oh, ow, map.channels);
  if (argmax != nullptr) argmax->assign(out.data.size(), 0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int c = 0; c < map.channels; ++c) {
        // First maximum in scan order wins ties.
        std::size_t best = map.index(2 * y, 2 * x, c);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t i = map.index(2 * y + dy, 2 * x + dx, c);
            if (map.data[i] > map.data[best]) best = i;
          }
        }
        const std::size_t o = out.index(y, x, c);
        out.data[o] = map.data[best];
        if (argmax != nullptr) (*argmax)[o] = best;
      }
    }
  }
  return out;
}

}  // namespace

FeatureMap maxpool2(const FeatureMap& map) { return maxpool2_with_argmax(map, nullptr); }

std::vector<double> global_avg_pool(const FeatureMap& map) {
  std::vector<double> out(static_cast<std::size_t>(map.channels), 0.0);
  const std::size_t n = map.spatial_size();
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < map.channels; ++c) out[static_cast<std::size_t>(c)] += map.data[p * map.channels + c];
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

namespace {

void channel_mean_std(const FeatureMap& map, std::vector<double>& mean, std::vector<double>& stdev) {
  mean = global_avg_pool(map);
  stdev.assign(static_cast<std::size_t>(map.channels), 0.0);
  const std::size_t n = map.spatial_size();
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < map.channels; ++c) {
      const double d = map.data[p * map.channels + c] - mean[static_cast<std::size_t>(c)];
      stdev[static_cast<std::size_t>(c)] += d * d;
    }
  }
  for (double& v : stdev) v = std::sqrt(v / static_cast<double>(n));

  // Constant channels (common after ReLU) get exact statistics rather than rounding residue.
  for (int c = 0; c < map.channels; ++c) {
    const double first = map.data[static_cast<std::size_t>(c)];
    bool constant = true;
    for (std::size_t p = 1; p < n && constant; ++p) constant = map.data[p * map.channels + c] == first;
    if (constant) {
      mean[static_cast<std::size_t>(c)] = first;
      stdev[static_cast<std::size_t>(c)] = 0.0;
    }
  }
}

}  // namespace

std::vector<double> shallow_stats(std::span<const FeatureMap> maps) {
  if (maps.empty()) {
    throw Error(ErrorCode::EmptyInput, "shallow_stats needs at least one feature map");
  }
  std::vector<double> out;
  std::vector<double> mean, stdev;
  for (const auto& m : maps) {
    channel_mean_std(m, mean, stdev);
    out.insert(out.end(), mean.begin(), mean.end());
    out.insert(out.end(), stdev.begin(), stdev.end());
  }
  return out;
}

FeatureVector build_feature_vector(std::span<const FeatureMap> maps, int shallow_count) {
  if (shallow_count < 1 || static_cast<std::size_t>(shallow_count) >= maps.size()) {
    throw Error(ErrorCode::BadLayerSelection, "shallow layer count " + std::to_string(shallow_count) +
                                                  " must be in [1, " + std::to_string(maps.size()) + ")");
  }
  FeatureVector fv;
  fv.data = global_avg_pool(maps.back());
  fv.gap_length = fv.data.size();
  const auto shallow = maps.first(static_cast<std::size_t>(shallow_count));
  const std::vector<double> stats = shallow_stats(shallow);
  fv.data.insert(fv.data.end(), stats.begin(), stats.end());
  for (const auto& m : shallow) fv.stats_lengths.push_back(2 * static_cast<std::size_t>(m.channels));
  return fv;
}

// ---------------------------------------------------------------------------
// Architecture and parameters

Architecture Architecture::standard(int input_size) {
  Architecture a;
  a.input_height = input_size;
  a.input_width = input_size;
  a.layers = {
      {3, 8, 3, 1, 1, true},
      {8, 16, 3, 1, 1, true},
      {16, 32, 3, 1, 1, false},
  };
  a.shallow_count = 2;
  return a;
}

Architecture Architecture::toy() {
  Architecture a;
  a.input_height = 8;
  a.input_width = 8;
  a.layers = {
      {3, 2, 3, 1, 1, true},
      {2, 3, 3, 1, 1, false},
  };
  a.shallow_count = 1;
  return a;
}

void Architecture::validate() const {
  if (input_height < 1 || input_width < 1) {
    throw Error(ErrorCode::InvalidArgument, "architecture input size must be positive");
  }
  if (layers.empty()) {
    throw Error(ErrorCode::InvalidArgument, "architecture has no layers");
  }
  if (shallow_count < 1 || static_cast<std::size_t>(shallow_count) >= layers.size()) {
    throw Error(ErrorCode::BadLayerSelection, "shallow layer count must be in [1, layer count)");
  }
  int h = input_height, w = input_width, c = ImageTensor::kChannels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.in_channels != c || l.out_channels < 1 || l.kernel < 1 || l.kernel % 2 == 0 || l.stride < 1 ||
        l.padding < 0) {
      throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(i) + " is inconsistent with its input");
    }
    h = conv_output_size(h, l.kernel, l.stride, l.padding);
    w = conv_output_size(w, l.kernel, l.stride, l.padding);
    if (l.pool) {
      if (i + 1 == layers.size()) {
        throw Error(ErrorCode::InvalidArgument, "the deepest layer must not pool");
      }
      h /= 2;
      w /= 2;
    }
    if (h < 1 || w < 1) {
      throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(i) + " collapses the spatial size");
    }
    c = l.out_channels;
  }
}

std::size_t Architecture::feature_length() const {
  std::size_t n = static_cast<std::size_t>(layers.back().out_channels);
  for (int i = 0; i < shallow_count; ++i) n += 2 * static_cast<std::size_t>(layers[static_cast<std::size_t>(i)].out_channels);
  return n;
}

ModelParams ModelParams::zeros(const Architecture& arch) {
  arch.validate();
  ModelParams p;
  p.arch = arch;
  for (const auto& l : arch.layers) p.layers.emplace_back(l.in_channels, l.out_channels, l.kernel, l.stride, l.padding);
  p.head_weights.assign(arch.feature_length(), 0.0);
  return p;
}

std::vector<std::span<double>> ModelParams::blocks() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
  }
  out.emplace_back(head_weights);
  out.emplace_back(&head_bias, 1);
  return out;
}

std::vector<std::span<const double>> ModelParams::blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
  }
  out.emplace_back(head_weights);
  out.emplace_back(&head_bias, 1);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.size();
  return n;
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by rejection; portable unlike std::uniform_int_distribution.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(arch);
  p.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& l : p.layers) {
    const double fan_in = static_cast<double>(l.in_channels) * l.kernel * l.kernel;
    const double fan_out = static_cast<double>(l.out_channels) * l.kernel * l.kernel;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : l.weights) w = (2.0 * unit_uniform(rng) - 1.0) * limit;
  }
  const double limit = std::sqrt(6.0 / (static_cast<double>(p.head_weights.size()) + 1.0));
  for (double& w : p.head_weights) w = (2.0 * unit_uniform(rng) - 1.0) * limit;
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

struct LayerCache {
  FeatureMap activation;               // F_l, post-ReLU
  FeatureMap pooled;                   // only when the layer pools
  std::vector<std::size_t> argmax;     // pooled index -> activation index
};

struct ForwardCache {
  FeatureMap input;
  std::vector<LayerCache> layers;
  FeatureVector features;
  double logit = 0.0;
  double prediction = 0.0;
};

double logistic(double s) {
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

void check_input(const ImageTensor& img, const ModelParams& params) {
  if (img.height() != params.arch.input_height || img.width() != params.arch.input_width) {
    throw Error(ErrorCode::ShapeMismatch,
                "image is " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                    ", model expects " + std::to_string(params.arch.input_height) + "x" +
                    std::to_string(params.arch.input_width));
  }
  if (params.head_weights.size() != params.arch.feature_length() || params.layers.size() != params.arch.layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "model parameters do not match the architecture");
  }
}

const FeatureMap& layer_output(const LayerCache& c, bool pooled) { return pooled ? c.pooled : c.activation; }

ForwardCache run_forward(const ImageTensor& img, const ModelParams& params) {
  check_input(img, params);
  ForwardCache cache;
  cache.input = FeatureMap::from_image(img);
  for (double& v : cache.input.data) v -= kInputCenter;
  cache.layers.resize(params.layers.size());
  const FeatureMap* x = &cache.input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    LayerCache& lc = cache.layers[l];
    lc.activation = conv_forward(*x, params.layers[l]);
    for (double& v : lc.activation.data) v = v > 0.0 ? v : 0.0;
    const bool pool = params.arch.layers[l].pool;
    if (pool) lc.pooled = maxpool2_with_argmax(lc.activation, &lc.argmax);
    x = &layer_output(lc, pool);
  }
  std::vector<FeatureMap> maps;
  maps.reserve(cache.layers.size());
  for (const auto& lc : cache.layers) maps.push_back(lc.activation);
  cache.features = build_feature_vector(maps, params.arch.shallow_count);

  double s = params.head_bias;
  for (std::size_t i = 0; i < cache.features.data.size(); ++i) s += params.head_weights[i] * cache.features.data[i];
  cache.logit = s;
  cache.prediction = logistic(s);
  return cache;
}

// Accumulates dL/dtheta into `grad` for one sample given dL/dlogit.
void run_backward(const ForwardCache& cache, const ModelParams& params, double dlogit, ModelParams& grad) {
  const auto& z = cache.features.data;
  for (std::size_t i = 0; i < z.size(); ++i) grad.head_weights[i] += dlogit * z[i];
  grad.head_bias += dlogit;

  const std::size_t n_layers = params.layers.size();
  std::vector<FeatureMap> d_act(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const FeatureMap& a = cache.layers[l].activation;
    d_act[l] = FeatureMap(a.height, a.width, a.channels);
  }

  // GAP segment.
  {
    FeatureMap& d = d_act.back();
    const double inv_n = 1.0 / static_cast<double>(d.spatial_size());
    for (std::size_t p = 0; p < d.spatial_size(); ++p)
      for (int c = 0; c < d.channels; ++c)
        d.data[p * d.channels + c] += dlogit * params.head_weights[static_cast<std::size_t>(c)] * inv_n;
  }

  // Shallow stats segments: mean block then std block per layer.
  std::size_t offset = cache.features.gap_length;
  for (int l = 0; l < params.arch.shallow_count; ++l) {
    const FeatureMap& a = cache.layers[static_cast<std::size_t>(l)].activation;
    FeatureMap& d = d_act[static_cast<std::size_t>(l)];
    const int ch = a.channels;
    const double n = static_cast<double>(a.spatial_size());
    for (int c = 0; c < ch; ++c) {
      const double g_mean = dlogit * params.head_weights[offset + static_cast<std::size_t>(c)];
      const double g_std = dlogit * params.head_weights[offset + static_cast<std::size_t>(ch + c)];
      const double mean = z[offset + static_cast<std::size_t>(c)];
      const double sd = z[offset + static_cast<std::size_t>(ch + c)];
      const double std_scale = sd > 0.0 ? g_std / (n * sd) : 0.0;
      for (std::size_t p = 0; p < a.spatial_size(); ++p) {
        const std::size_t i = p * ch + c;
        d.data[i] += g_mean / n + std_scale * (a.data[i] - mean);
      }
    }
    offset += 2 * static_cast<std::size_t>(ch);
  }

  for (std::size_t li = n_layers; li-- > 0;) {
    const ConvLayer& layer = params.layers[li];
    ConvLayer& g = grad.layers[li];
    const FeatureMap& act = cache.layers[li].activation;
    FeatureMap& d_pre = d_act[li];
    for (std::size_t i = 0; i < d_pre.data.size(); ++i)
      if (!(act.data[i] > 0.0)) d_pre.data[i] = 0.0;

    const FeatureMap& input = li == 0 ? cache.input : layer_output(cache.layers[li - 1], params.arch.layers[li - 1].pool);
    FeatureMap d_input;
    if (li > 0) d_input = FeatureMap(input.height, input.width, input.channels);

    const int k = layer.kernel, ic_n = layer.in_channels, oc_n = layer.out_channels;
    const std::vector<double> wt = transpose_kernel(layer);
    std::vector<double> dwt(wt.size(), 0.0);
    for (int oy = 0; oy < d_pre.height; ++oy) {
      for (int ox = 0; ox < d_pre.width; ++ox) {
        const double* gout = &d_pre.data[d_pre.index(oy, ox, 0)];
        for (int oc = 0; oc < oc_n; ++oc) g.bias[static_cast<std::size_t>(oc)] += gout[oc];
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * layer.stride - layer.padding + ky;
          if (iy < 0 || iy >= input.height) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * layer.stride - layer.padding + kx;
            if (ix < 0 || ix >= input.width) continue;
            const double* px = &input.data[input.index(iy, ix, 0)];
            const std::size_t base = (static_cast<std::size_t>(ky) * k + kx) * ic_n * oc_n;
            for (int ic = 0; ic < ic_n; ++ic) {
              const double v = px[ic];
              double* dw = &dwt[base + static_cast<std::size_t>(ic) * oc_n];
              for (int oc = 0; oc < oc_n; ++oc) dw[oc] += v * gout[oc];
            }
            if (li > 0) {
              double* dpx = &d_input.data[d_input.index(iy, ix, 0)];
              for (int ic = 0; ic < ic_n; ++ic) {
                const double* wr = &wt[base + static_cast<std::size_t>(ic) * oc_n];
                double s = 0.0;
                for (int oc = 0; oc < oc_n; ++oc) s += wr[oc] * gout[oc];
                dpx[ic] += s;
              }
            }
          }
        }
      }
    }
    for (int oc = 0; oc < oc_n; ++oc)
      for (int ic = 0; ic < ic_n; ++ic)
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx)
            g.weights[layer.weight_index(oc, ic, ky, kx)] +=
                dwt[((static_cast<std::size_t>(ky) * k + kx) * ic_n + ic) * oc_n + oc];

    if (li > 0) {
      FeatureMap& d_prev = d_act[li - 1];
      if (params.arch.layers[li - 1].pool) {
        const auto& argmax = cache.layers[li - 1].argmax;
        for (std::size_t i = 0; i < d_input.data.size(); ++i) d_prev.data[argmax[i]] += d_input.data[i];
      } else {
        for (std::size_t i = 0; i < d_input.data.size(); ++i) d_prev.data[i] += d_input.data[i];
      }
    }
  }
}

void add_into(ModelParams& acc, const ModelParams& g) {
  auto dst = acc.blocks();
  const auto src = g.blocks();
  for (std::size_t b = 0; b < dst.size(); ++b)
    for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += src[b][i];
}

void check_labels(std::span<const TrainingSample> batch) {
  for (const auto& s : batch) {
    if (!(s.label >= 0.0 && s.label <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "label outside [0,1]");
    }
  }
}

// Runs `fn(i)` for i in [0, n) on up to `threads` workers, contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

LossAndGrad loss_and_grad_indexed(std::span<const TrainingSample> data, std::span<const std::size_t> indices,
                                  const ModelParams& params, unsigned threads) {
  if (indices.empty()) {
    throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
  }
  const std::size_t n = indices.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<ModelParams> per_sample(n);
  std::vector<double> sq_err(n), logits(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const TrainingSample& s = data[indices[i]];
    const ForwardCache cache = run_forward(s.image, params);
    const double r = cache.prediction - s.label;
    sq_err[i] = r * r;
    logits[i] = cache.logit;
    per_sample[i] = ModelParams::zeros(params.arch);
    const double dlogit = 2.0 * r * inv_n * cache.prediction * (1.0 - cache.prediction);
    run_backward(cache, params, dlogit, per_sample[i]);
  });

  LossAndGrad out;
  out.grad = ModelParams::zeros(params.arch);
  out.grad.seed = params.seed;
  out.grad.target = params.target;
  for (std::size_t i = 0; i < n; ++i) {
    out.loss += sq_err[i];
    add_into(out.grad, per_sample[i]);
    out.max_abs_logit = std::max(out.max_abs_logit, std::abs(logits[i]));
  }
  out.loss *= inv_n;
  return out;
}

}  // namespace

std::vector<FeatureMap> extract_features(const ImageTensor& img, const ModelParams& params) {
  ForwardCache cache = run_forward(img, params);
  std::vector<FeatureMap> maps;
  for (auto& lc : cache.layers) maps.push_back(std::move(lc.activation));
  return maps;
}

FeatureVector feature_vector(const ImageTensor& img, const ModelParams& params) {
  return run_forward(img, params).features;
}

double forward(const ImageTensor& img, const ModelParams& params) { return run_forward(img, params).prediction; }

LossAndGrad loss_and_grad(std::span<const TrainingSample> batch, const ModelParams& params, unsigned threads) {
  if (batch.empty()) {
    throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
  }
  check_labels(batch);
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  return loss_and_grad_indexed(batch, idx, params, threads);
}

double batch_loss(std::span<const TrainingSample> batch, const ModelParams& params) {
  if (batch.empty()) {
    throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
  }
  double s = 0.0;
  for (const auto& sample : batch) {
    const double r = forward(sample.image, params) - sample.label;
    s += r * r;
  }
  return s / static_cast<double>(batch.size());
}

double initial_head_bias(std::span<const TrainingSample> data) {
  if (data.empty()) return 0.0;
  double mean = 0.0;
  for (const auto& s : data) mean += s.label;
  mean = std::clamp(mean / static_cast<double>(data.size()), 1e-3, 1.0 - 1e-3);
  return std::log(mean / (1.0 - mean));
}

TrainResult train(std::span<const TrainingSample> data, const TrainConfig& cfg,
                  const std::function<void(int, double)>& on_epoch) {
  if (data.empty()) {
    throw Error(ErrorCode::EmptyDataset, "training set is empty");
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0, batch size and learning rate positive");
  }
  check_labels(data);

  TrainResult result;
  result.params = init_params(cfg.arch, cfg.seed);
  result.params.head_bias = initial_head_bias(data);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_below(shuffle_rng, i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      const auto idx = std::span<const std::size_t>(order).subspan(start, count);
      LossAndGrad lg = loss_and_grad_indexed(data, idx, result.params, cfg.threads);
      if (!std::isfinite(lg.loss) || lg.max_abs_logit > kLogitDivergenceLimit) {
        throw Error(ErrorCode::DivergedLoss, "training diverged in epoch " + std::to_string(epoch + 1) +
                                                 " (loss " + std::to_string(lg.loss) + ", |logit| " +
                                                 std::to_string(lg.max_abs_logit) + ")");
      }
      epoch_loss += lg.loss * static_cast<double>(count);
      auto dst = result.params.blocks();
      const auto src = lg.grad.blocks();
      bool finite = true;
      for (std::size_t b = 0; b < dst.size(); ++b) {
        for (std::size_t i = 0; i < dst[b].size(); ++i) {
          dst[b][i] -= cfg.learning_rate * src[b][i];
          finite = finite && std::isfinite(dst[b][i]);
        }
      }
      if (!finite) {
        throw Error(ErrorCode::DivergedLoss, "parameters became non-finite in epoch " + std::to_string(epoch + 1));
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    result.loss_trace.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch + 1, epoch_loss);
  }
  return result;
}

GradCheckResult gradient_check(std::span<const TrainingSample> batch, const ModelParams& params, double step,
                               double floor) {
  const LossAndGrad analytic = loss_and_grad(batch, params);
  ModelParams probe = params;
  auto probe_blocks = probe.blocks();
  const auto grad_blocks = analytic.grad.blocks();

  GradCheckResult out;
  std::size_t flat = 0;
  for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
    for (std::size_t i = 0; i < probe_blocks[b].size(); ++i, ++flat) {
      double& w = probe_blocks[b][i];
      const double saved = w;
      w = saved + step;
      const double up = batch_loss(batch, probe);
      w = saved - step;
      const double down = batch_loss(batch, probe);
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grad_blocks[b][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst_index = flat;
      }
      ++out.checked;
    }
  }
  return out;
}

}  // namespace uicq
