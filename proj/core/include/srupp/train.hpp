// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Desk-scale training and evaluation: an encoder plus a linear classifier
// head, Adam on frame-wise cross-entropy, deterministic batch sampling, and
// length-generalization evaluation.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "srupp/checkpoint.hpp"
#include "srupp/config.hpp"
#include "srupp/encoder.hpp"
#include "srupp/task.hpp"

namespace srupp {

// Each encoder output frame t' is supervised with the label at original
// index 4*t' + kLabelOffset, the center of the two-stage convolution
// receptive field.
inline constexpr std::int64_t kLabelOffset = 3;

struct Model {
  Encoder enc;
  Tensor head_w, head_b;  // num_classes x encoder width, num_classes
  std::int64_t num_classes = 0;

  // Seeded from cfg.train.seed; requires feat_dim == vocab_size.
  static Model init(const RunConfig& cfg);

  std::vector<std::pair<std::string, Tensor*>> named_params();

  void save(const std::string& path) const;
  static Model load(const RunConfig& cfg, const std::string& path);
};

struct ModelForward {
  Tensor logits;   // T'' x num_classes
  Tensor enc_out;  // T'' x encoder width (the head input)
  EncoderTape tape;
};

ModelForward model_forward(const Model& m, const Tensor& feats);

struct TrainHistory {
  std::vector<double> loss;      // per optimization step
  std::vector<double> accuracy;  // batch frame accuracy per step
};

struct TrainResult {
  Model model;
  TrainHistory history;
};

// Runs the full pipeline: build the model, generate the task data, optimize.
// Divergence (non-finite loss or intermediate) raises TrainError naming the
// step.  Deterministic mode makes the history bitwise reproducible.
TrainResult train(const RunConfig& cfg);

// Frame accuracy of the model over a dataset, with subsampling-aligned
// labels.  Returns {correct, total} frame counts.
std::pair<std::int64_t, std::int64_t> count_correct(const Model& m,
                                                    const Dataset& ds);
double evaluate_accuracy(const Model& m, const Dataset& ds);

struct LengthAccuracy {
  std::int64_t length = 0;
  std::int64_t frames = 0;
  double accuracy = 0.0;
};

// Accuracy per requested evaluation length, including lengths well past the
// training length.  Sample counts are sized so every length sees at least
// ~2500 output frames.
std::vector<LengthAccuracy> eval_length_generalization(
    const Model& m, const TaskSpec& task, const std::vector<std::int64_t>& lengths);

}  // namespace srupp
