#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nt/features.hpp"

namespace nt {

// Normalized power cost per feature kind (max entry is 1).
struct EnergyTable {
  std::map<FeatureKind, double> beta;

  static EnergyTable defaults();
  double cost(FeatureKind k) const;
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 100;
  int batch_size = 0;  // 0 = full batch
  double energy_tradeoff = 0.0;  // C in the training objective
  double prune_threshold = 0.0;
  uint64_t seed = 1;
  int depth = 4;
};

// Per-node 12-bit quantization payload. Weight format is chosen per node by
// max-|theta| scaling: frac_bits fraction bits out of a signed 12-bit word.
struct QuantizedNode {
  uint8_t frac_bits = 0;
  std::vector<int16_t> weights_q;
  int16_t bias_q = 0;
};

struct TreeNode {
  bool is_leaf = false;
  int left = -1;
  int right = -1;
  // internal nodes: oblique affine split through a sigmoid
  std::vector<int> feature_ids;  // indices into NeuralTreeModel::feature_specs
  std::vector<double> weights;
  double bias = 0;
  std::optional<QuantizedNode> quant;
  // leaves: class distribution
  std::vector<double> phi;
  std::vector<uint16_t> phi_q;  // 12-bit, present when quantized
};

struct NeuralTreeModel {
  int depth = 0;
  int num_classes = 0;
  bool quantized = false;
  std::vector<FeatureSpec> feature_specs;  // global feature pool (<= 64)
  std::vector<Band> bands;                 // band definitions the specs use
  std::vector<TreeNode> nodes;             // nodes[0] is the root

  // Complete binary tree of the given depth; every internal node sees the
  // full feature pool, every leaf starts uniform.
  static NeuralTreeModel complete(int depth, int num_classes,
                                  std::vector<FeatureSpec> specs, std::vector<Band> bands);

  std::vector<int> leaf_indices() const;
  std::vector<int> internal_indices() const;
  size_t feature_dim() const { return feature_specs.size(); }
  void validate() const;
};

struct LabeledDataset {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  int num_classes = 2;
  std::vector<FeatureSpec> specs;  // provenance of the feature columns
  std::vector<Band> bands;

  size_t size() const { return X.size(); }
  void validate() const;
};

// --- probabilistic routing -------------------------------------------------

// p(l | x): per-leaf probability (order of leaf_indices()); sums to 1.
std::vector<double> route_probabilities(const NeuralTreeModel& m, std::span<const double> x);

// Per-sample visit probability of every node (root = 1).
std::vector<double> visit_probabilities(const NeuralTreeModel& m, std::span<const double> x);

// p(y | x): mixture of leaf distributions weighted by routing probabilities.
std::vector<double> predict_proba(const NeuralTreeModel& m, std::span<const double> x);

int predict_label(const NeuralTreeModel& m, std::span<const double> x);

// Energy-aware regularizer: sum_i p_i * sum_j beta_j |theta_ij| with p_i the
// batch-mean visit probability.
double energy_regularizer(const NeuralTreeModel& m, const std::vector<std::vector<double>>& batch,
                          const EnergyTable& energy);

// Expected inference energy: sum_i p_i * sum over active (nonzero-weight)
// features of beta.
double expected_energy(const NeuralTreeModel& m, const std::vector<std::vector<double>>& X,
                       const EnergyTable& energy);

// --- training --------------------------------------------------------------

// Flat parameter layout: per internal node (node order) weights then bias,
// then per leaf (node order) K unconstrained logits. Leaf distributions are
// materialized through a softmax so gradient steps keep them valid.
size_t param_count(const NeuralTreeModel& topo);
std::vector<double> pack_params(const NeuralTreeModel& m);  // phi -> log phi
NeuralTreeModel materialize(const NeuralTreeModel& topo, std::span<const double> params);

// Total objective: sum of -log p(y|x) over the batch plus C * regularizer.
double tree_loss(const NeuralTreeModel& topo, std::span<const double> params,
                 const LabeledDataset& batch, double energy_tradeoff, const EnergyTable& energy);
std::vector<double> tree_gradients(const NeuralTreeModel& topo, std::span<const double> params,
                                   const LabeledDataset& batch, double energy_tradeoff,
                                   const EnergyTable& energy);

struct TrainLog {
  std::vector<double> epoch_loss;
};

// Adam minimization of the energy-aware objective; deterministic given the
// seed. Throws on an empty or single-class dataset.
NeuralTreeModel train(const LabeledDataset& data, const TrainConfig& cfg,
                      const EnergyTable& energy, TrainLog* log = nullptr);

// Zero |w| < threshold, drop all-zero features per node, cap 64 features per
// node by weight magnitude, collapse subtrees visited with probability
// < 1e-3 over X into leaves. threshold == 0 returns the model unchanged.
NeuralTreeModel prune(const NeuralTreeModel& m, double threshold,
                      const std::vector<std::vector<double>>& X);

// 12-bit weight/bias quantization (per-node format by max-|theta| scaling)
// and 12-bit leaf distributions. Idempotent.
NeuralTreeModel quantize(const NeuralTreeModel& m);

double accuracy(const NeuralTreeModel& m, const LabeledDataset& data);

// --- single-path inference ---------------------------------------------------

struct InferenceLog {
  struct WindowTrace {
    std::vector<int> visited_nodes;
    std::vector<FeatureSpec> extracted;
    int label = 0;
  };
  std::vector<WindowTrace> windows;
};

// Greedy top-down traversal: at each node extract only that node's features,
// run the fixed-point MAC, branch on the sign (>= 0 goes right). Requires a
// quantized model.
std::vector<int> infer_single_path(std::span<const SignalWindow> windows,
                                   const NeuralTreeModel& m, const FirBank& bank,
                                   InferenceLog* log = nullptr);

// Per-channel extraction counts normalized to [0, 1] by the maximum.
std::map<uint32_t, double> channel_importance(const InferenceLog& log);

// --- serialization (versioned binary, 12-bit payloads) ----------------------

std::vector<uint8_t> serialize_model(const NeuralTreeModel& m);
NeuralTreeModel deserialize_model(std::span<const uint8_t> bytes);
void save_model(const NeuralTreeModel& m, const std::string& path);
NeuralTreeModel load_model(const std::string& path);

}  // namespace nt
