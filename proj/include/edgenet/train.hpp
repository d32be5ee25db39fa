#pragma once

#include <cstdint>
#include <vector>

#include "edgenet/cascade.hpp"

namespace edgenet {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 0.05;
  uint64_t seed = 1;
};

struct TrainReport {
  // loss_per_epoch[head][epoch], mean cross-entropy over the training set.
  std::vector<std::vector<double>> loss_per_epoch;
};

// Frozen-backbone head training: backbone activations at each attach point
// are computed once, then every head is fit with minibatch SGD on softmax
// cross-entropy of its own logits. Head math runs in double internally;
// updated weights are stored back as f32. Backbone weights are bit-identical
// before and after. Errors: EmptyTrainingSet, LabelOutOfRange,
// UnsupportedLayerKind for head layers without a backward pass.
TrainReport train_exit_heads(CascadeModel& m, const std::vector<Tensor>& inputs,
                             const std::vector<int>& labels,
                             const TrainConfig& cfg);

// Re-fits the final FullyConnected classifier of a plain graph with the same
// trainer (the rest of the graph is frozen). Returns the refit graph.
Graph fit_final_classifier(const Graph& g, const std::vector<Tensor>& inputs,
                           const std::vector<int>& labels,
                           const TrainConfig& cfg);

// Mean softmax cross-entropy of one head over pre-computed attach-point
// features, plus the gradient for every head parameter (weights then biases,
// layer by layer). Both in double. Used by the trainer and by the
// finite-difference checks.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d parameter
};

LossGrad head_loss_and_grad(const Graph& head,
                            const std::vector<Tensor>& features,
                            const std::vector<int>& labels);

// Flat view of a head's trainable parameters in the same order the gradient
// uses. get reads them; add applies a delta and writes back f32.
std::vector<double> head_parameters(const Graph& head);
void head_add_to_parameters(Graph& head, const std::vector<double>& delta);

}  // namespace edgenet
