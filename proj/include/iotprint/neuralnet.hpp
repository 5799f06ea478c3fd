#pragma once

// Minimal dense-network engine: row-major f64 matrices, ReLU hidden layers,
// softmax output, categorical cross-entropy, Adam. All heavy loops go through
// the kern:: dispatch table; everything else is plain scalar code.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iotprint/dataset.hpp"
#include "iotprint/rng.hpp"

namespace iotprint::nn {

class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(size_t r) { return data_.data() + r * cols_; }
  const double* row(size_t r) const { return data_.data() + r * cols_; }
  double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  bool operator==(const Matrix&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { relu, softmax };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
  Matrix weights;            // in x out
  std::vector<double> bias;  // out
  Activation activation = Activation::relu;

  size_t in_width() const { return weights.rows(); }
  size_t out_width() const { return weights.cols(); }
};

struct InitSpec {
  double mean = 0.0;
  double stddev = 0.05;
  uint64_t seed = 1;
};

struct MlpModel {
  size_t input_width = 0;
  std::vector<DenseLayer> layers;
  std::vector<std::string> label_names;
  InitSpec init;            // records how the weights were drawn
  uint64_t train_seed = 0;  // shuffle seed of the last training run

  size_t class_count() const { return layers.empty() ? 0 : layers.back().out_width(); }
  size_t parameter_count() const;
};

// Builds input -> hidden_widths... (ReLU) -> class_count (softmax). Weights
// are drawn i.i.d. normal(mean, stddev) layer by layer from one generator
// seeded with spec.seed; biases start at zero. A given (dims, spec) pair
// always yields the same model.
MlpModel init_model(size_t input_width, const std::vector<size_t>& hidden_widths,
                    size_t class_count, const InitSpec& spec);

// Row-wise softmax in place, stabilised by subtracting each row's max.
void softmax_rows(Matrix& x);

struct ForwardCache {
  std::vector<Matrix> pre;   // pre-activation, one per layer
  std::vector<Matrix> post;  // post-activation; post.back() holds probabilities
};

Matrix forward(const MlpModel& model, const Matrix& x);
const Matrix& forward_cached(const MlpModel& model, const Matrix& x, ForwardCache& cache);

// Mean over rows of -ln(p[label]); probabilities are clamped to >= 1e-12
// before the log so an all-wrong batch yields a finite loss.
double cross_entropy(const Matrix& probs, std::span<const uint8_t> labels);

// Lowest index wins argmax ties everywhere a class is picked from scores.
size_t argmax_row(const double* row, size_t n);

struct Gradients {
  std::vector<Matrix> dw;
  std::vector<std::vector<double>> db;
};

// Forward + analytic backprop; gradients are means over the batch
// (dZ_final = (P - Y) / batch). Returns the batch cross-entropy.
double loss_and_gradients(const MlpModel& model, const Matrix& x,
                          std::span<const uint8_t> labels, Gradients& grads,
                          ForwardCache& cache);

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<std::vector<double>> mb, vb;
  uint64_t step = 0;
};

AdamState init_adam(const MlpModel& model);
void adam_step(MlpModel& model, AdamState& state, const Gradients& grads,
               const AdamParams& params);

struct TrainingConfig {
  size_t epochs = 7;
  size_t batch_size = 100;
  uint64_t shuffle_seed = 1;
  AdamParams adam;
};

struct EpochStats {
  size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
};

// Fills `out` (batch.size() x 784) with rows of `set` scaled by 1/255.
void fill_batch(const data::LabeledDataset& set, std::span<const size_t> row_ids, Matrix& out);

// Shuffles row order each epoch with one generator seeded from
// config.shuffle_seed; the final short batch is trained on as-is. Train
// loss/accuracy are the running values seen during the epoch (each batch
// scored by the forward pass that precedes its update); validation is scored
// after the epoch completes.
TrainResult train(MlpModel& model, const data::LabeledDataset& train_set,
                  const data::LabeledDataset& val_set, const TrainingConfig& config);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<uint8_t> predictions;
};

EvalResult evaluate(const MlpModel& model, const data::LabeledDataset& set,
                    size_t batch_size = 256);

// N x class_count probabilities for every row of the set, in row order.
Matrix predict_probs(const MlpModel& model, const data::LabeledDataset& set,
                     size_t batch_size = 256);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

std::string history_csv(const std::vector<EpochStats>& history);

}  // namespace iotprint::nn
