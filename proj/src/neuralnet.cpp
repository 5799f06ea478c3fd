#include "iotprint/neuralnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "iotprint/errors.hpp"
#include "iotprint/kernels.hpp"
#include "iotprint/log.hpp"

namespace iotprint::nn {

using json = nlohmann::json;

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
  }
  throw ConfigError("unknown activation value");
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "softmax") return Activation::softmax;
  throw FormatError("unknown activation name: " + name);
}

size_t MlpModel::parameter_count() const {
  size_t n = 0;
  for (const DenseLayer& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

MlpModel init_model(size_t input_width, const std::vector<size_t>& hidden_widths,
                    size_t class_count, const InitSpec& spec) {
  if (input_width == 0) throw ConfigError("init_model: input width must be >= 1");
  if (class_count == 0) throw ConfigError("init_model: class count must be >= 1");
  for (size_t w : hidden_widths) {
    if (w == 0) throw ConfigError("init_model: hidden widths must be >= 1");
  }
  if (!(spec.stddev > 0.0)) throw ConfigError("init_model: stddev must be positive");

  std::vector<size_t> widths;
  widths.push_back(input_width);
  widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
  widths.push_back(class_count);

  MlpModel model;
  model.input_width = input_width;
  model.init = spec;
  Rng rng(spec.seed);
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.weights = Matrix(widths[l], widths[l + 1]);
    layer.bias.assign(widths[l + 1], 0.0);  // biases start at zero
    layer.activation = (l + 2 == widths.size()) ? Activation::softmax : Activation::relu;
    for (size_t i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = rng.normal(spec.mean, spec.stddev);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

void softmax_rows(Matrix& x) {
  for (size_t r = 0; r < x.rows(); ++r) {
    double* row = x.row(r);
    double hi = row[0];
    for (size_t c = 1; c < x.cols(); ++c) hi = std::max(hi, row[c]);
    double sum = 0.0;
    for (size_t c = 0; c < x.cols(); ++c) {
      row[c] = std::exp(row[c] - hi);
      sum += row[c];
    }
    for (size_t c = 0; c < x.cols(); ++c) row[c] /= sum;
  }
}

namespace {

void ensure_shape(Matrix& m, size_t rows, size_t cols) {
  if (m.rows() != rows || m.cols() != cols) m = Matrix(rows, cols);
}

void apply_layer(const DenseLayer& layer, const Matrix& input, Matrix& pre, Matrix& post) {
  const kern::Kernels& k = kern::active();
  const size_t batch = input.rows();
  ensure_shape(pre, batch, layer.out_width());
  k.gemm(input.data(), layer.weights.data(), pre.data(), batch, layer.in_width(),
         layer.out_width());
  k.add_bias(pre.data(), layer.bias.data(), batch, layer.out_width());
  post = pre;
  if (layer.activation == Activation::relu) {
    k.relu(post.data(), post.size());
  } else {
    softmax_rows(post);
  }
}

void check_input(const MlpModel& model, const Matrix& x) {
  if (model.layers.empty()) throw ConfigError("model has no layers");
  if (x.cols() != model.input_width) {
    throw ConfigError("input width " + std::to_string(x.cols()) + " does not match model width " +
                      std::to_string(model.input_width));
  }
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

const Matrix& forward_cached(const MlpModel& model, const Matrix& x, ForwardCache& cache) {
  check_input(model, x);
  cache.pre.resize(model.layers.size());
  cache.post.resize(model.layers.size());
  const Matrix* input = &x;
  for (size_t l = 0; l < model.layers.size(); ++l) {
    apply_layer(model.layers[l], *input, cache.pre[l], cache.post[l]);
    input = &cache.post[l];
  }
  return cache.post.back();
}

Matrix forward(const MlpModel& model, const Matrix& x) {
  ForwardCache cache;
  return forward_cached(model, x, cache);
}

double cross_entropy(const Matrix& probs, std::span<const uint8_t> labels) {
  if (probs.rows() != labels.size()) throw ConfigError("cross_entropy: rows != labels");
  if (probs.rows() == 0) return 0.0;
  double total = 0.0;
  for (size_t r = 0; r < probs.rows(); ++r) {
    if (labels[r] >= probs.cols()) throw ConfigError("cross_entropy: label out of range");
    total += -std::log(std::max(probs.at(r, labels[r]), 1e-12));
  }
  return total / static_cast<double>(probs.rows());
}

size_t argmax_row(const double* row, size_t n) {
  size_t best = 0;
  for (size_t i = 1; i < n; ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

double loss_and_gradients(const MlpModel& model, const Matrix& x,
                          std::span<const uint8_t> labels, Gradients& grads,
                          ForwardCache& cache) {
  const Matrix& probs = forward_cached(model, x, cache);
  const double loss = cross_entropy(probs, labels);

  const kern::Kernels& k = kern::active();
  const size_t batch = x.rows();
  const size_t layer_count = model.layers.size();
  grads.dw.resize(layer_count);
  grads.db.resize(layer_count);

  // dZ for the softmax/cross-entropy head: (P - Y) / batch.
  Matrix dz = probs;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (size_t r = 0; r < batch; ++r) {
    double* row = dz.row(r);
    row[labels[r]] -= 1.0;
    for (size_t c = 0; c < dz.cols(); ++c) row[c] *= inv_batch;
  }

  Matrix da;
  for (size_t l = layer_count; l-- > 0;) {
    const DenseLayer& layer = model.layers[l];
    const Matrix& a_prev = (l == 0) ? x : cache.post[l - 1];
    ensure_shape(grads.dw[l], layer.in_width(), layer.out_width());
    k.gemm_at_b(a_prev.data(), dz.data(), grads.dw[l].data(), batch, layer.in_width(),
                layer.out_width());
    grads.db[l].assign(layer.out_width(), 0.0);
    k.col_sums(dz.data(), grads.db[l].data(), batch, layer.out_width());
    if (l > 0) {
      ensure_shape(da, batch, layer.in_width());
      k.gemm_a_bt(dz.data(), layer.weights.data(), da.data(), batch, layer.out_width(),
                  layer.in_width());
      k.relu_backward(cache.pre[l - 1].data(), da.data(), da.size());
      std::swap(dz, da);
    }
  }
  return loss;
}

AdamState init_adam(const MlpModel& model) {
  AdamState state;
  for (const DenseLayer& layer : model.layers) {
    state.mw.emplace_back(layer.weights.rows(), layer.weights.cols());
    state.vw.emplace_back(layer.weights.rows(), layer.weights.cols());
    state.mb.emplace_back(layer.bias.size(), 0.0);
    state.vb.emplace_back(layer.bias.size(), 0.0);
  }
  return state;
}

void adam_step(MlpModel& model, AdamState& state, const Gradients& grads,
               const AdamParams& params) {
  if (state.mw.size() != model.layers.size() || grads.dw.size() != model.layers.size()) {
    throw ConfigError("adam_step: state/gradient layer count mismatch");
  }
  const kern::Kernels& k = kern::active();
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double one_minus_b1t = 1.0 - std::pow(params.beta1, t);
  const double one_minus_b2t = 1.0 - std::pow(params.beta2, t);
  for (size_t l = 0; l < model.layers.size(); ++l) {
    DenseLayer& layer = model.layers[l];
    k.adam_update(layer.weights.data(), state.mw[l].data(), state.vw[l].data(),
                  grads.dw[l].data(), layer.weights.size(), params.learning_rate, params.beta1,
                  params.beta2, params.epsilon, one_minus_b1t, one_minus_b2t);
    k.adam_update(layer.bias.data(), state.mb[l].data(), state.vb[l].data(), grads.db[l].data(),
                  layer.bias.size(), params.learning_rate, params.beta1, params.beta2,
                  params.epsilon, one_minus_b1t, one_minus_b2t);
  }
}

void fill_batch(const data::LabeledDataset& set, std::span<const size_t> row_ids, Matrix& out) {
  ensure_shape(out, row_ids.size(), fp::kFingerprintBytes);
  for (size_t i = 0; i < row_ids.size(); ++i) {
    const std::span<const uint8_t> src = set.row(row_ids[i]);
    double* dst = out.row(i);
    for (size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<double>(src[j]) / 255.0;
  }
}

TrainResult train(MlpModel& model, const data::LabeledDataset& train_set,
                  const data::LabeledDataset& val_set, const TrainingConfig& config) {
  if (train_set.size() == 0) throw ConfigError("train: training set is empty");
  if (config.epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (config.batch_size == 0) throw ConfigError("train: batch size must be >= 1");
  check_input(model, Matrix(0, fp::kFingerprintBytes));
  model.train_seed = config.shuffle_seed;

  TrainResult result;
  AdamState adam = init_adam(model);
  Rng rng(config.shuffle_seed);
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  Matrix batch;
  Gradients grads;
  ForwardCache cache;
  std::vector<uint8_t> batch_labels;

  for (size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    size_t correct = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t count = std::min(config.batch_size, order.size() - start);
      const std::span<const size_t> ids(order.data() + start, count);
      fill_batch(train_set, ids, batch);
      batch_labels.resize(count);
      for (size_t i = 0; i < count; ++i) batch_labels[i] = train_set.labels[ids[i]];

      const double loss = loss_and_gradients(model, batch, batch_labels, grads, cache);
      loss_sum += loss * static_cast<double>(count);
      const Matrix& probs = cache.post.back();
      for (size_t i = 0; i < count; ++i) {
        if (argmax_row(probs.row(i), probs.cols()) == batch_labels[i]) ++correct;
      }
      adam_step(model, adam, grads, config.adam);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (val_set.size() > 0) {
      const EvalResult val = evaluate(model, val_set, config.batch_size);
      stats.val_loss = val.loss;
      stats.val_accuracy = val.accuracy;
    }
    result.history.push_back(stats);
    log::debug("train: epoch ", epoch, " train_loss=", stats.train_loss,
               " val_acc=", stats.val_accuracy);
  }
  return result;
}

EvalResult evaluate(const MlpModel& model, const data::LabeledDataset& set, size_t batch_size) {
  if (batch_size == 0) throw ConfigError("evaluate: batch size must be >= 1");
  EvalResult result;
  if (set.size() == 0) return result;

  Matrix batch;
  ForwardCache cache;
  std::vector<size_t> ids(batch_size);
  double loss_sum = 0.0;
  size_t correct = 0;
  result.predictions.resize(set.size());
  for (size_t start = 0; start < set.size(); start += batch_size) {
    const size_t count = std::min(batch_size, set.size() - start);
    ids.resize(count);
    std::iota(ids.begin(), ids.end(), start);
    fill_batch(set, ids, batch);
    const Matrix& probs = forward_cached(model, batch, cache);
    const std::span<const uint8_t> labels(set.labels.data() + start, count);
    loss_sum += cross_entropy(probs, labels) * static_cast<double>(count);
    for (size_t i = 0; i < count; ++i) {
      const size_t pick = argmax_row(probs.row(i), probs.cols());
      result.predictions[start + i] = static_cast<uint8_t>(pick);
      if (pick == labels[i]) ++correct;
    }
  }
  result.loss = loss_sum / static_cast<double>(set.size());
  result.accuracy = static_cast<double>(correct) / static_cast<double>(set.size());
  return result;
}

Matrix predict_probs(const MlpModel& model, const data::LabeledDataset& set, size_t batch_size) {
  if (batch_size == 0) throw ConfigError("predict_probs: batch size must be >= 1");
  Matrix all(set.size(), model.class_count());
  Matrix batch;
  ForwardCache cache;
  std::vector<size_t> ids;
  for (size_t start = 0; start < set.size(); start += batch_size) {
    const size_t count = std::min(batch_size, set.size() - start);
    ids.resize(count);
    std::iota(ids.begin(), ids.end(), start);
    fill_batch(set, ids, batch);
    const Matrix& probs = forward_cached(model, batch, cache);
    std::memcpy(all.row(start), probs.data(), count * all.cols() * sizeof(double));
  }
  return all;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  if (model.layers.empty()) throw ConfigError("save_model: model has no layers");
  json doc;
  doc["schema_version"] = 1;
  doc["input_width"] = model.input_width;
  doc["label_names"] = model.label_names;
  doc["init"] = {{"mean", model.init.mean}, {"stddev", model.init.stddev},
                 {"seed", model.init.seed}};
  doc["train_seed"] = model.train_seed;
  json layers = json::array();
  for (const DenseLayer& layer : model.layers) {
    json jl;
    jl["activation"] = activation_name(layer.activation);
    jl["in"] = layer.in_width();
    jl["out"] = layer.out_width();
    jl["weights"] = std::vector<double>(layer.weights.data(),
                                        layer.weights.data() + layer.weights.size());
    jl["bias"] = layer.bias;
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw ConfigError("write failed: " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid model JSON: " + e.what());
  }
  try {
    if (doc.at("schema_version").get<int>() != 1) {
      throw FormatError(path.string() + ": unsupported model schema version");
    }
    MlpModel model;
    model.input_width = doc.at("input_width").get<size_t>();
    model.label_names = doc.at("label_names").get<std::vector<std::string>>();
    const json& init = doc.at("init");
    model.init.mean = init.at("mean").get<double>();
    model.init.stddev = init.at("stddev").get<double>();
    model.init.seed = init.at("seed").get<uint64_t>();
    model.train_seed = doc.at("train_seed").get<uint64_t>();
    const json& layers = doc.at("layers");
    if (!layers.is_array() || layers.empty()) {
      throw FormatError(path.string() + ": model has no layers");
    }
    size_t expect_in = model.input_width;
    for (size_t l = 0; l < layers.size(); ++l) {
      const json& jl = layers.at(l);
      DenseLayer layer;
      layer.activation = activation_from_name(jl.at("activation").get<std::string>());
      const size_t in = jl.at("in").get<size_t>();
      const size_t out = jl.at("out").get<size_t>();
      if (in == 0 || out == 0) throw FormatError(path.string() + ": zero layer width");
      if (in != expect_in) throw FormatError(path.string() + ": layer widths do not chain");
      const bool last = (l + 1 == layers.size());
      if (last != (layer.activation == Activation::softmax)) {
        throw FormatError(path.string() + ": softmax must be the final activation");
      }
      auto weights = jl.at("weights").get<std::vector<double>>();
      if (weights.size() != in * out) {
        throw FormatError(path.string() + ": weight count does not match layer dims");
      }
      layer.weights = Matrix(in, out);
      std::copy(weights.begin(), weights.end(), layer.weights.data());
      layer.bias = jl.at("bias").get<std::vector<double>>();
      if (layer.bias.size() != out) {
        throw FormatError(path.string() + ": bias count does not match layer dims");
      }
      model.layers.push_back(std::move(layer));
      expect_in = out;
    }
    if (!model.label_names.empty() && model.label_names.size() != model.class_count()) {
      throw FormatError(path.string() + ": label name count does not match class count");
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid model JSON: " + e.what());
  }
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  for (const EpochStats& s : history) {
    out += std::to_string(s.epoch);
    out += ',';
    out += format_double(s.train_loss);
    out += ',';
    out += format_double(s.train_accuracy);
    out += ',';
    out += format_double(s.val_loss);
    out += ',';
    out += format_double(s.val_accuracy);
    out += '\n';
  }
  return out;
}

}  // namespace iotprint::nn
