#include "srprom/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "srprom/io.hpp"

namespace srprom::fusion {

namespace {

constexpr std::string_view kModelMagic = "SRPM\n";

// Pre-activations of every layer for one pixel; input lives in act[0].
struct Workspace {
  std::vector<std::vector<double>> act;  // act[l] = input of layer l (post-ReLU), act.back() = output
  std::vector<std::vector<double>> pre;  // pre[l] = W_l a_l + b_l

  explicit Workspace(const std::vector<DenseLayer>& layers) {
    act.resize(layers.size() + 1);
    pre.resize(layers.size());
    act[0].resize(kFeatureCount);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      pre[l].resize(static_cast<std::size_t>(layers[l].outputs));
      act[l + 1].resize(static_cast<std::size_t>(layers[l].outputs));
    }
  }
};

double run_forward(const std::vector<DenseLayer>& layers, Workspace& ws) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    const auto& in = ws.act[l];
    auto& z = ws.pre[l];
    auto& out = ws.act[l + 1];
    const bool last = l + 1 == layers.size();
    for (int o = 0; o < L.outputs; ++o) {
      const double* w = L.weights.data() + static_cast<std::size_t>(o) * L.inputs;
      double acc = L.bias[static_cast<std::size_t>(o)];
      for (int i = 0; i < L.inputs; ++i) acc += w[i] * in[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = acc;
      out[static_cast<std::size_t>(o)] = last ? acc : std::max(0.0, acc);
    }
  }
  return ws.act.back()[0];
}

// Accumulates upstream * d(output)/d(params) into grad (layout of parameters()).
void run_backward(const std::vector<DenseLayer>& layers, const Workspace& ws, double upstream,
                  const std::vector<std::size_t>& offsets, std::vector<double>& grad, std::vector<double>& delta,
                  std::vector<double>& next_delta) {
  delta.assign(1, upstream);
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& L = layers[li];
    const auto& in = ws.act[li];
    double* gw = grad.data() + offsets[li];
    double* gb = gw + static_cast<std::size_t>(L.outputs) * L.inputs;
    for (int o = 0; o < L.outputs; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      double* row = gw + static_cast<std::size_t>(o) * L.inputs;
      for (int i = 0; i < L.inputs; ++i) row[i] += d * in[static_cast<std::size_t>(i)];
      gb[o] += d;
    }
    if (li == 0) break;
    next_delta.assign(static_cast<std::size_t>(L.inputs), 0.0);
    for (int o = 0; o < L.outputs; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      const double* w = L.weights.data() + static_cast<std::size_t>(o) * L.inputs;
      for (int i = 0; i < L.inputs; ++i) next_delta[static_cast<std::size_t>(i)] += w[i] * d;
    }
    // ReLU derivative of the previous layer's pre-activation.
    const auto& z = ws.pre[li - 1];
    for (std::size_t i = 0; i < next_delta.size(); ++i) {
      if (z[i] <= 0.0) next_delta[i] = 0.0;
    }
    std::swap(delta, next_delta);
  }
}

std::vector<std::size_t> parameter_offsets(const std::vector<DenseLayer>& layers) {
  std::vector<std::size_t> offsets;
  std::size_t pos = 0;
  for (const auto& L : layers) {
    offsets.push_back(pos);
    pos += static_cast<std::size_t>(L.outputs) * L.inputs + static_cast<std::size_t>(L.outputs);
  }
  return offsets;
}

void load_input(Workspace& ws, const Standardizer& s, const double* x) {
  const auto z = s.apply(x);
  std::copy(z.begin(), z.end(), ws.act[0].begin());
}

}  // namespace

std::array<double, kFeatureCount> Standardizer::apply(const double* x) const {
  std::array<double, kFeatureCount> z{};
  for (int c = 0; c < kFeatureCount; ++c) z[c] = (x[c] - mean[c]) / scale[c];
  return z;
}

std::array<double, kFeatureCount> Standardizer::invert(const double* z) const {
  std::array<double, kFeatureCount> x{};
  for (int c = 0; c < kFeatureCount; ++c) x[c] = z[c] * scale[c] + mean[c];
  return x;
}

FeatureStack stack_features(const Heatmap& dists, const Heatmap& ssm, const Heatmap& bd) {
  const Heatmap* inputs[kFeatureCount] = {&dists, &ssm, &bd};
  for (int c = 0; c < kFeatureCount; ++c) {
    const auto& tag = inputs[c]->provider();
    if (!tag.empty() && tag != kFeatureChannels[c]) {
      throw ValidationError("feature channel " + std::to_string(c) + " must be '" + kFeatureChannels[c] +
                            "' but got '" + tag + "'");
    }
    if (inputs[c]->size() != dists.size()) throw ValidationError("feature heatmaps differ in size");
  }
  FeatureStack s;
  s.width = dists.width();
  s.height = dists.height();
  s.values.resize(s.pixels() * kFeatureCount);
  for (std::size_t p = 0; p < s.pixels(); ++p)
    for (int c = 0; c < kFeatureCount; ++c) s.values[p * kFeatureCount + c] = inputs[c]->values()[p];
  return s;
}

FusionModel::FusionModel(std::vector<DenseLayer> layers, Standardizer standardizer)
    : layers_(std::move(layers)), standardizer_(standardizer) {
  if (layers_.empty()) throw ValidationError("fusion model needs at least one layer");
  if (layers_.front().inputs != kFeatureCount) throw ValidationError("fusion model input width must be 3");
  if (layers_.back().outputs != 1) throw ValidationError("fusion model output width must be 1");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    if (L.weights.size() != static_cast<std::size_t>(L.inputs) * L.outputs || L.bias.size() != static_cast<std::size_t>(L.outputs))
      throw ValidationError("fusion layer " + std::to_string(l) + " has inconsistent parameter sizes");
    if (l > 0 && layers_[l - 1].outputs != L.inputs) throw ValidationError("fusion layers do not chain");
  }
}

FusionModel FusionModel::initialize(const std::vector<int>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw ValidationError("fusion model needs at least input and output widths");
  std::mt19937_64 engine(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer L;
    L.inputs = widths[l];
    L.outputs = widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.inputs));
    std::uniform_real_distribution<double> dist(-bound, bound);
    L.weights.resize(static_cast<std::size_t>(L.inputs) * L.outputs);
    L.bias.resize(static_cast<std::size_t>(L.outputs));
    for (auto& w : L.weights) w = static_cast<float>(dist(engine));
    for (auto& b : L.bias) b = static_cast<float>(dist(engine));
    layers.push_back(std::move(L));
  }
  FusionModel m(std::move(layers), Standardizer{});
  m.seed = seed;
  return m;
}

std::vector<int> FusionModel::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(layers_.front().inputs);
  for (const auto& L : layers_) w.push_back(L.outputs);
  return w;
}

double FusionModel::forward_standardized(const double* z) const {
  Workspace ws(layers_);
  std::copy(z, z + kFeatureCount, ws.act[0].begin());
  return run_forward(layers_, ws);
}

double FusionModel::forward_pixel(const double* x) const {
  const auto z = standardizer_.apply(x);
  return forward_standardized(z.data());
}

std::size_t FusionModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& L : layers_) n += L.weights.size() + L.bias.size();
  return n;
}

std::vector<double> FusionModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& L : layers_) {
    flat.insert(flat.end(), L.weights.begin(), L.weights.end());
    flat.insert(flat.end(), L.bias.begin(), L.bias.end());
  }
  return flat;
}

void FusionModel::set_parameters(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) throw ValidationError("parameter vector has the wrong length");
  std::size_t pos = 0;
  for (auto& L : layers_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), L.weights.size(), L.weights.begin());
    pos += L.weights.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), L.bias.size(), L.bias.begin());
    pos += L.bias.size();
  }
}

void FusionModel::round_to_float() {
  for (auto& L : layers_) {
    for (auto& w : L.weights) w = static_cast<float>(w);
    for (auto& b : L.bias) b = static_cast<float>(b);
  }
}

bool FusionModel::finite() const {
  for (const auto& L : layers_) {
    for (double w : L.weights)
      if (!std::isfinite(w)) return false;
    for (double b : L.bias)
      if (!std::isfinite(b)) return false;
  }
  for (int c = 0; c < kFeatureCount; ++c) {
    if (!std::isfinite(standardizer_.mean[c]) || !std::isfinite(standardizer_.scale[c]) || standardizer_.scale[c] == 0.0)
      return false;
  }
  return true;
}

std::vector<double> forward_raw(const FusionModel& model, const FeatureStack& stack) {
  if (!model.finite()) throw ValidationError("fusion model has non-finite parameters");
  if (stack.channels != kFeatureChannels) throw ValidationError("feature stack channel order does not match the model");
  Workspace ws(model.layers());
  std::vector<double> out(stack.pixels());
  for (std::size_t p = 0; p < out.size(); ++p) {
    load_input(ws, model.standardizer(), stack.pixel(p));
    out[p] = run_forward(model.layers(), ws);
    if (!std::isfinite(out[p])) throw ValidationError("fusion model produced a non-finite output (model corruption)");
  }
  return out;
}

Heatmap forward(const FusionModel& model, const FeatureStack& stack) {
  auto raw = forward_raw(model, stack);
  for (double& v : raw) v = std::clamp(v, 0.0, 1.0);
  Heatmap h(stack.width, stack.height, Polarity::DistortionHigh, std::move(raw));
  h.set_provider("baseline");
  return h;
}

namespace {

void split_regions(const TrainingExample& ex, std::vector<std::size_t>& inside, std::vector<std::size_t>& outside) {
  inside.clear();
  outside.clear();
  for (std::size_t i = 0; i < ex.mask.bits().size(); ++i) (ex.mask.bits()[i] ? inside : outside).push_back(i);
}

void check_example(const TrainingExample& ex) {
  if (ex.mask.width() != ex.features.width || ex.mask.height() != ex.features.height)
    throw ValidationError("training example mask and features differ in size");
}

}  // namespace

std::optional<double> loss(const FusionModel& model, const TrainingExample& example) {
  check_example(example);
  const auto out = forward_raw(model, example.features);
  double sin = 0.0;
  double sout = 0.0;
  std::size_t nin = 0;
  std::size_t nout = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (example.mask.bits()[i]) {
      sin += out[i];
      ++nin;
    } else {
      sout += out[i];
      ++nout;
    }
  }
  if (nin == 0 || nout == 0) return std::nullopt;
  const double mi = sin / static_cast<double>(nin);
  const double mo = sout / static_cast<double>(nout);
  return (mi - example.prominence) * (mi - example.prominence) + mo * mo;
}

std::optional<double> loss_and_gradient(const FusionModel& model, const TrainingExample& example,
                                        std::vector<double>& gradient, const std::vector<std::size_t>* inside_subset,
                                        const std::vector<std::size_t>* outside_subset) {
  check_example(example);
  std::vector<std::size_t> all_in;
  std::vector<std::size_t> all_out;
  if (!inside_subset || !outside_subset) split_regions(example, all_in, all_out);
  const auto& inside = inside_subset ? *inside_subset : all_in;
  const auto& outside = outside_subset ? *outside_subset : all_out;
  if (inside.empty() || outside.empty()) return std::nullopt;

  const auto& layers = model.layers();
  Workspace ws(layers);
  auto mean_over = [&](const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t p : idx) {
      load_input(ws, model.standardizer(), example.features.pixel(p));
      s += run_forward(layers, ws);
    }
    return s / static_cast<double>(idx.size());
  };
  const double mi = mean_over(inside);
  const double mo = mean_over(outside);
  const double value = (mi - example.prominence) * (mi - example.prominence) + mo * mo;

  gradient.assign(model.parameter_count(), 0.0);
  const auto offsets = parameter_offsets(layers);
  std::vector<double> delta;
  std::vector<double> next;
  auto backprop = [&](const std::vector<std::size_t>& idx, double upstream) {
    for (std::size_t p : idx) {
      load_input(ws, model.standardizer(), example.features.pixel(p));
      run_forward(layers, ws);
      run_backward(layers, ws, upstream, offsets, gradient, delta, next);
    }
  };
  backprop(inside, 2.0 * (mi - example.prominence) / static_cast<double>(inside.size()));
  backprop(outside, 2.0 * mo / static_cast<double>(outside.size()));
  return value;
}

Standardizer fit_standardizer(const std::vector<TrainingExample>& examples) {
  Standardizer s;
  std::array<double, kFeatureCount> sum{};
  std::size_t n = 0;
  for (const auto& ex : examples) {
    for (std::size_t p = 0; p < ex.features.pixels(); ++p)
      for (int c = 0; c < kFeatureCount; ++c) sum[c] += ex.features.pixel(p)[c];
    n += ex.features.pixels();
  }
  if (n == 0) return s;
  for (int c = 0; c < kFeatureCount; ++c) s.mean[c] = sum[c] / static_cast<double>(n);
  std::array<double, kFeatureCount> var{};
  for (const auto& ex : examples) {
    for (std::size_t p = 0; p < ex.features.pixels(); ++p)
      for (int c = 0; c < kFeatureCount; ++c) {
        const double d = ex.features.pixel(p)[c] - s.mean[c];
        var[c] += d * d;
      }
  }
  for (int c = 0; c < kFeatureCount; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(n));
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

TrainResult train(const std::vector<TrainingExample>& examples, const TrainOptions& options) {
  if (examples.empty()) throw ValidationError("train: no examples");
  if (options.epochs < 0) throw ValidationError("train: epochs must be >= 0");
  for (const auto& ex : examples) check_example(ex);

  std::vector<int> widths{kFeatureCount};
  widths.insert(widths.end(), options.hidden.begin(), options.hidden.end());
  widths.push_back(1);
  FusionModel model = FusionModel::initialize(widths, options.seed);
  if (options.fit_standardization) model.set_standardizer(fit_standardizer(examples));

  TrainResult result{model, {}};
  std::vector<double> params = model.parameters();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  // Separate stream from the initializer so both are reproducible from one seed.
  std::mt19937_64 shuffle_engine(options.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> inside;
  std::vector<std::size_t> outside;
  std::vector<std::size_t> inside_s;
  std::vector<std::size_t> outside_s;
  long long step = 0;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_engine);
    double epoch_sum = 0.0;
    std::size_t steps = 0;
    std::size_t skipped = 0;
    for (std::size_t idx : order) {
      const auto& ex = examples[idx];
      split_regions(ex, inside, outside);
      const std::vector<std::size_t>* in_ptr = &inside;
      const std::vector<std::size_t>* out_ptr = &outside;
      if (options.pixel_sample > 0) {
        inside_s.clear();
        outside_s.clear();
        std::sample(inside.begin(), inside.end(), std::back_inserter(inside_s), options.pixel_sample, shuffle_engine);
        std::sample(outside.begin(), outside.end(), std::back_inserter(outside_s), options.pixel_sample, shuffle_engine);
        in_ptr = &inside_s;
        out_ptr = &outside_s;
      }
      model.set_parameters(params);
      const auto value = loss_and_gradient(model, ex, grad, in_ptr, out_ptr);
      if (!value) {
        ++skipped;
        continue;
      }
      if (!std::isfinite(*value)) {
        result.log.epoch_loss.push_back(*value);
        throw ValidationError("training diverged at epoch " + std::to_string(epoch + 1) + " (non-finite loss)");
      }
      ++step;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * grad[i];
        v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * grad[i] * grad[i];
        params[i] -= options.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + options.epsilon);
      }
      epoch_sum += *value;
      ++steps;
    }
    result.log.skipped_examples = skipped;
    result.log.epoch_loss.push_back(steps ? epoch_sum / static_cast<double>(steps) : 0.0);
  }
  model.set_parameters(params);
  model.round_to_float();
  model.epochs = options.epochs;
  if (!model.finite()) throw ValidationError("training produced non-finite parameters");
  result.model = std::move(model);
  return result;
}

std::string encode_model(const FusionModel& model) {
  nlohmann::ordered_json header;
  header["layers"] = model.widths();
  header["channels"] = kFeatureChannels;
  header["mean"] = model.standardizer().mean;
  header["scale"] = model.standardizer().scale;
  header["seed"] = model.seed;
  header["epochs"] = model.epochs;
  std::string out(kModelMagic);
  out += header.dump();
  out.push_back('\n');
  for (double p : model.parameters()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(p));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
  }
  return out;
}

FusionModel decode_model(std::string_view bytes) {
  if (bytes.substr(0, kModelMagic.size()) != kModelMagic) throw ValidationError("model file: bad magic");
  const auto end = bytes.find('\n', kModelMagic.size());
  if (end == std::string_view::npos) throw ValidationError("model file: unterminated header");
  nlohmann::json header;
  std::vector<int> widths;
  Standardizer s;
  std::uint64_t seed = 0;
  int epochs = 0;
  try {
    header = nlohmann::json::parse(bytes.substr(kModelMagic.size(), end - kModelMagic.size()));
    widths = header.at("layers").get<std::vector<int>>();
    const auto channels = header.at("channels").get<std::vector<std::string>>();
    if (channels.size() != kFeatureChannels.size() || !std::equal(channels.begin(), channels.end(), kFeatureChannels.begin()))
      throw ValidationError("model file: unexpected feature channel order");
    s.mean = header.at("mean").get<std::array<double, kFeatureCount>>();
    s.scale = header.at("scale").get<std::array<double, kFeatureCount>>();
    seed = header.at("seed").get<std::uint64_t>();
    epochs = header.at("epochs").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: malformed header: ") + e.what());
  }
  if (widths.size() < 2) throw ValidationError("model file: need at least two layer widths");
  std::vector<DenseLayer> layers;
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] < 1 || widths[l + 1] < 1) throw ValidationError("model file: non-positive layer width");
    DenseLayer L;
    L.inputs = widths[l];
    L.outputs = widths[l + 1];
    L.weights.resize(static_cast<std::size_t>(L.inputs) * L.outputs);
    L.bias.resize(static_cast<std::size_t>(L.outputs));
    count += L.weights.size() + L.bias.size();
    layers.push_back(std::move(L));
  }
  const auto payload = bytes.substr(end + 1);
  if (payload.size() != count * 4) throw ValidationError("model file: parameter payload length mismatch");
  std::vector<double> flat(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * i + b])) << (8 * b);
    flat[i] = std::bit_cast<float>(bits);
  }
  FusionModel model(std::move(layers), s);
  model.set_parameters(flat);
  model.seed = seed;
  model.epochs = epochs;
  if (!model.finite()) throw ValidationError("model file: non-finite parameters");
  return model;
}

void write_model(const std::filesystem::path& path, const FusionModel& model) {
  io::write_file_bytes(path, encode_model(model));
}

FusionModel read_model(const std::filesystem::path& path) { return decode_model(io::read_file_bytes(path)); }

}  // namespace srprom::fusion
