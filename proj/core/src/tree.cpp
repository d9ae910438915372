#include "nt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nt {

// ---- EnergyTable ------------------------------------------------------------

EnergyTable EnergyTable::defaults() {
  EnergyTable t;
  t.beta = {
      {FeatureKind::LL, 0.20},  {FeatureKind::ACT, 0.15}, {FeatureKind::MOB, 0.25},
      {FeatureKind::COM, 0.30}, {FeatureKind::LMP, 0.10}, {FeatureKind::SE, 0.50},
      {FeatureKind::HFO_RATIO, 0.80}, {FeatureKind::PLV, 1.00}, {FeatureKind::PAC, 1.00},
  };
  return t;
}

double EnergyTable::cost(FeatureKind k) const {
  auto it = beta.find(k);
  if (it == beta.end())
    throw std::invalid_argument(std::string("no energy entry for ") + to_string(k));
  return it->second;
}

void EnergyTable::validate() const {
  if (beta.empty()) throw std::invalid_argument("empty energy table");
  double mx = 0;
  for (const auto& [k, v] : beta) {
    if (v <= 0) throw std::invalid_argument("energy costs must be positive");
    mx = std::max(mx, v);
  }
  if (std::abs(mx - 1.0) > 1e-12)
    throw std::invalid_argument("energy table must be normalized to max 1");
}

// ---- model ------------------------------------------------------------------

NeuralTreeModel NeuralTreeModel::complete(int depth, int num_classes,
                                          std::vector<FeatureSpec> specs,
                                          std::vector<Band> bands) {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (specs.empty()) throw std::invalid_argument("need at least one feature spec");
  if (specs.size() > kMaxChannels) throw std::invalid_argument("more than 64 features");
  NeuralTreeModel m;
  m.depth = depth;
  m.num_classes = num_classes;
  m.feature_specs = std::move(specs);
  m.bands = std::move(bands);
  size_t internal = (size_t(1) << depth) - 1;
  size_t total = (size_t(1) << (depth + 1)) - 1;
  m.nodes.resize(total);
  std::vector<int> all_ids(m.feature_specs.size());
  std::iota(all_ids.begin(), all_ids.end(), 0);
  for (size_t i = 0; i < total; ++i) {
    TreeNode& n = m.nodes[i];
    if (i < internal) {
      n.is_leaf = false;
      n.left = int(2 * i + 1);
      n.right = int(2 * i + 2);
      n.feature_ids = all_ids;
      n.weights.assign(all_ids.size(), 0.0);
      n.bias = 0;
    } else {
      n.is_leaf = true;
      n.phi.assign(size_t(num_classes), 1.0 / double(num_classes));
    }
  }
  return m;
}

std::vector<int> NeuralTreeModel::leaf_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].is_leaf) out.push_back(int(i));
  return out;
}

std::vector<int> NeuralTreeModel::internal_indices() const {
  std::vector<int> out;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (!nodes[i].is_leaf) out.push_back(int(i));
  return out;
}

void NeuralTreeModel::validate() const {
  if (nodes.empty()) throw std::invalid_argument("empty model");
  if (num_classes < 2) throw std::invalid_argument("num_classes < 2");
  for (size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& n = nodes[i];
    if (n.is_leaf) {
      if (n.phi.size() != size_t(num_classes))
        throw std::invalid_argument("leaf distribution size mismatch");
      double sum = std::accumulate(n.phi.begin(), n.phi.end(), 0.0);
      double tol = quantized ? 0.01 : 1e-9;
      if (std::abs(sum - 1.0) > tol)
        throw std::invalid_argument("leaf distribution does not sum to 1");
      for (double p : n.phi)
        if (p < 0) throw std::invalid_argument("negative leaf probability");
    } else {
      if (n.left <= int(i) || n.right <= int(i) || size_t(n.left) >= nodes.size() ||
          size_t(n.right) >= nodes.size())
        throw std::invalid_argument("bad child indices");
      if (n.weights.size() != n.feature_ids.size())
        throw std::invalid_argument("weight/feature count mismatch");
      if (n.feature_ids.size() > kMaxChannels)
        throw std::invalid_argument("more than 64 features at a node");
      for (int id : n.feature_ids)
        if (id < 0 || size_t(id) >= feature_specs.size())
          throw std::invalid_argument("feature id out of range");
    }
  }
}

void LabeledDataset::validate() const {
  if (X.empty()) throw std::invalid_argument("empty dataset");
  if (X.size() != y.size()) throw std::invalid_argument("feature/label count mismatch");
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  size_t d = X.front().size();
  for (const auto& row : X)
    if (row.size() != d) throw std::invalid_argument("inconsistent feature dimensions");
  int lo = *std::min_element(y.begin(), y.end());
  int hi = *std::max_element(y.begin(), y.end());
  if (lo < 0 || hi >= num_classes) throw std::invalid_argument("label out of range");
  if (lo == hi) throw std::invalid_argument("single-class dataset");
  if (!specs.empty() && specs.size() != d)
    throw std::invalid_argument("spec count does not match feature dimension");
}

// ---- routing ----------------------------------------------------------------

static double sigmoid(double m) {
  if (m >= 0) {
    double e = std::exp(-m);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(m);
  return e / (1.0 + e);
}

static double node_margin(const TreeNode& n, std::span<const double> x) {
  double acc = n.bias;
  for (size_t j = 0; j < n.feature_ids.size(); ++j) acc += n.weights[j] * x[size_t(n.feature_ids[j])];
  return acc;
}

namespace {

struct Forward {
  std::vector<double> margin;
  std::vector<double> g;      // sigmoid(margin), probability of the right child
  std::vector<double> visit;  // visit probability per node
};

// Children always have larger indices than their parent, so one ascending
// pass propagates visit probabilities.
Forward forward_pass(const NeuralTreeModel& m, std::span<const double> x) {
  Forward f;
  f.margin.assign(m.nodes.size(), 0.0);
  f.g.assign(m.nodes.size(), 0.0);
  f.visit.assign(m.nodes.size(), 0.0);
  f.visit[0] = 1.0;
  for (size_t i = 0; i < m.nodes.size(); ++i) {
    const TreeNode& n = m.nodes[i];
    if (n.is_leaf) continue;
    f.margin[i] = node_margin(n, x);
    f.g[i] = sigmoid(f.margin[i]);
    f.visit[size_t(n.left)] += f.visit[i] * (1.0 - f.g[i]);
    f.visit[size_t(n.right)] += f.visit[i] * f.g[i];
  }
  return f;
}

void check_dim(const NeuralTreeModel& m, std::span<const double> x) {
  if (x.size() != m.feature_dim())
    throw std::invalid_argument("feature vector dimension mismatch");
}

}  // namespace

std::vector<double> route_probabilities(const NeuralTreeModel& m, std::span<const double> x) {
  check_dim(m, x);
  Forward f = forward_pass(m, x);
  std::vector<double> out;
  for (size_t i = 0; i < m.nodes.size(); ++i)
    if (m.nodes[i].is_leaf) out.push_back(f.visit[i]);
  return out;
}

std::vector<double> visit_probabilities(const NeuralTreeModel& m, std::span<const double> x) {
  check_dim(m, x);
  return forward_pass(m, x).visit;
}

std::vector<double> predict_proba(const NeuralTreeModel& m, std::span<const double> x) {
  check_dim(m, x);
  Forward f = forward_pass(m, x);
  std::vector<double> p(size_t(m.num_classes), 0.0);
  for (size_t i = 0; i < m.nodes.size(); ++i) {
    if (!m.nodes[i].is_leaf) continue;
    for (int k = 0; k < m.num_classes; ++k) p[size_t(k)] += f.visit[i] * m.nodes[i].phi[size_t(k)];
  }
  return p;
}

int predict_label(const NeuralTreeModel& m, std::span<const double> x) {
  auto p = predict_proba(m, x);
  return int(std::max_element(p.begin(), p.end()) - p.begin());
}

double accuracy(const NeuralTreeModel& m, const LabeledDataset& data) {
  size_t hits = 0;
  for (size_t i = 0; i < data.size(); ++i)
    if (predict_label(m, data.X[i]) == data.y[i]) ++hits;
  return double(hits) / double(data.size());
}

// ---- energy -----------------------------------------------------------------

// per-node weighted L1: sum_j beta_kind(j) |w_j|
static std::vector<double> node_l1_cost(const NeuralTreeModel& m, const EnergyTable& energy) {
  std::vector<double> e(m.nodes.size(), 0.0);
  for (size_t i = 0; i < m.nodes.size(); ++i) {
    const TreeNode& n = m.nodes[i];
    if (n.is_leaf) continue;
    double acc = 0;
    for (size_t j = 0; j < n.feature_ids.size(); ++j)
      acc += energy.cost(m.feature_specs[size_t(n.feature_ids[j])].kind) * std::abs(n.weights[j]);
    e[i] = acc;
  }
  return e;
}

static std::vector<double> mean_visits(const NeuralTreeModel& m,
                                       const std::vector<std::vector<double>>& X) {
  std::vector<double> p(m.nodes.size(), 0.0);
  for (const auto& x : X) {
    Forward f = forward_pass(m, x);
    for (size_t i = 0; i < m.nodes.size(); ++i) p[i] += f.visit[i];
  }
  for (auto& v : p) v /= double(X.size());
  return p;
}

double energy_regularizer(const NeuralTreeModel& m, const std::vector<std::vector<double>>& batch,
                          const EnergyTable& energy) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  auto e = node_l1_cost(m, energy);
  auto p = mean_visits(m, batch);
  double psi = 0;
  for (size_t i = 0; i < m.nodes.size(); ++i)
    if (!m.nodes[i].is_leaf) psi += p[i] * e[i];
  return psi;
}

double expected_energy(const NeuralTreeModel& m, const std::vector<std::vector<double>>& X,
                       const EnergyTable& energy) {
  if (X.empty()) throw std::invalid_argument("empty dataset");
  auto p = mean_visits(m, X);
  double total = 0;
  for (size_t i = 0; i < m.nodes.size(); ++i) {
    const TreeNode& n = m.nodes[i];
    if (n.is_leaf) continue;
    double cost = 0;
    for (size_t j = 0; j < n.feature_ids.size(); ++j)
      if (n.weights[j] != 0.0)
        cost += energy.cost(m.feature_specs[size_t(n.feature_ids[j])].kind);
    total += p[i] * cost;
  }
  return total;
}

// ---- parameter packing --------------------------------------------------------

size_t param_count(const NeuralTreeModel& topo) {
  size_t n = 0;
  for (const auto& node : topo.nodes) {
    if (node.is_leaf)
      n += size_t(topo.num_classes);
    else
      n += node.feature_ids.size() + 1;
  }
  return n;
}

std::vector<double> pack_params(const NeuralTreeModel& m) {
  std::vector<double> p;
  p.reserve(param_count(m));
  for (const auto& n : m.nodes) {
    if (n.is_leaf) {
      for (double v : n.phi) p.push_back(std::log(std::max(v, 1e-12)));
    } else {
      p.insert(p.end(), n.weights.begin(), n.weights.end());
      p.push_back(n.bias);
    }
  }
  return p;
}

NeuralTreeModel materialize(const NeuralTreeModel& topo, std::span<const double> params) {
  if (params.size() != param_count(topo))
    throw std::invalid_argument("parameter vector size mismatch");
  NeuralTreeModel m = topo;
  size_t off = 0;
  for (auto& n : m.nodes) {
    if (n.is_leaf) {
      // stable softmax
      size_t k = size_t(m.num_classes);
      double mx = params[off];
      for (size_t j = 1; j < k; ++j) mx = std::max(mx, params[off + j]);
      double sum = 0;
      n.phi.resize(k);
      for (size_t j = 0; j < k; ++j) {
        n.phi[j] = std::exp(params[off + j] - mx);
        sum += n.phi[j];
      }
      for (size_t j = 0; j < k; ++j) n.phi[j] /= sum;
      off += k;
    } else {
      size_t d = n.feature_ids.size();
      n.weights.assign(params.begin() + long(off), params.begin() + long(off + d));
      n.bias = params[off + d];
      off += d + 1;
    }
  }
  return m;
}

// ---- loss and gradients -------------------------------------------------------

namespace {

struct LossAccum {
  double loss = 0;
  std::vector<double> grad;  // flat layout, empty when not requested
};

// Objective over the index subset: sum of -log p(y|x) plus C * Psi, with Psi
// using the subset-mean visit probabilities.
LossAccum loss_and_grad(const NeuralTreeModel& topo, std::span<const double> params,
                        const LabeledDataset& data, std::span<const size_t> idx, double C,
                        const EnergyTable& energy, bool want_grad) {
  NeuralTreeModel m = materialize(topo, params);
  const size_t nn = m.nodes.size();
  const size_t B = idx.size();
  if (B == 0) throw std::invalid_argument("empty batch");
  const bool use_energy = C != 0.0;
  std::vector<double> node_cost;
  if (use_energy) {
    if (m.feature_specs.empty())
      throw std::invalid_argument("energy regularization needs feature specs");
    node_cost = node_l1_cost(m, energy);
  }

  LossAccum out;
  if (want_grad) out.grad.assign(params.size(), 0.0);

  // flat offsets per node
  std::vector<size_t> off(nn, 0);
  {
    size_t o = 0;
    for (size_t i = 0; i < nn; ++i) {
      off[i] = o;
      o += m.nodes[i].is_leaf ? size_t(m.num_classes) : m.nodes[i].feature_ids.size() + 1;
    }
  }

  std::vector<double> pbar(nn, 0.0);  // subset-mean visit probabilities
  std::vector<double> S(nn), T(nn);

  for (size_t bi = 0; bi < B; ++bi) {
    const auto& x = data.X[idx[bi]];
    const int y = data.y[idx[bi]];
    if (x.size() != m.feature_dim())
      throw std::invalid_argument("feature vector dimension mismatch");
    Forward f = forward_pass(m, x);
    for (size_t i = 0; i < nn; ++i) pbar[i] += f.visit[i];

    double P = 0;
    for (size_t i = 0; i < nn; ++i)
      if (m.nodes[i].is_leaf) P += f.visit[i] * m.nodes[i].phi[size_t(y)];
    P = std::max(P, 1e-300);
    out.loss += -std::log(P);

    if (!want_grad) continue;

    // bottom-up sums: S = sum of visit*phi_y below, T = sum of visit*cost
    // over internal nodes below (inclusive)
    for (size_t ri = nn; ri-- > 0;) {
      const TreeNode& n = m.nodes[ri];
      if (n.is_leaf) {
        S[ri] = f.visit[ri] * n.phi[size_t(y)];
        T[ri] = 0;
      } else {
        S[ri] = S[size_t(n.left)] + S[size_t(n.right)];
        T[ri] = (use_energy ? f.visit[ri] * node_cost[ri] : 0.0) + T[size_t(n.left)] +
                T[size_t(n.right)];
      }
    }

    for (size_t i = 0; i < nn; ++i) {
      const TreeNode& n = m.nodes[i];
      if (n.is_leaf) {
        // d(-log P)/d psi_k through the softmax
        double vl_over_p = f.visit[i] / P;
        for (int k = 0; k < m.num_classes; ++k) {
          double ind = (k == y) ? 1.0 : 0.0;
          out.grad[off[i] + size_t(k)] +=
              -vl_over_p * n.phi[size_t(y)] * (ind - n.phi[size_t(k)]);
        }
      } else {
        double g = f.g[i];
        double gm = -((1.0 - g) * S[size_t(n.right)] - g * S[size_t(n.left)]) / P;
        if (use_energy)
          gm += (C / double(B)) *
                ((1.0 - g) * T[size_t(n.right)] - g * T[size_t(n.left)]);
        for (size_t j = 0; j < n.feature_ids.size(); ++j)
          out.grad[off[i] + j] += gm * x[size_t(n.feature_ids[j])];
        out.grad[off[i] + n.feature_ids.size()] += gm;
      }
    }
  }

  for (auto& v : pbar) v /= double(B);

  if (use_energy) {
    double psi = 0;
    for (size_t i = 0; i < nn; ++i)
      if (!m.nodes[i].is_leaf) psi += pbar[i] * node_cost[i];
    out.loss += C * psi;
    if (want_grad) {
      // direct |w| subgradient
      for (size_t i = 0; i < nn; ++i) {
        const TreeNode& n = m.nodes[i];
        if (n.is_leaf) continue;
        for (size_t j = 0; j < n.feature_ids.size(); ++j) {
          double w = n.weights[j];
          if (w == 0.0) continue;
          double beta = energy.cost(m.feature_specs[size_t(n.feature_ids[j])].kind);
          out.grad[off[i] + j] += C * pbar[i] * beta * (w > 0 ? 1.0 : -1.0);
        }
      }
    }
  }
  return out;
}

std::vector<size_t> all_indices(size_t n) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

double tree_loss(const NeuralTreeModel& topo, std::span<const double> params,
                 const LabeledDataset& batch, double C, const EnergyTable& energy) {
  auto idx = all_indices(batch.size());
  return loss_and_grad(topo, params, batch, idx, C, energy, false).loss;
}

std::vector<double> tree_gradients(const NeuralTreeModel& topo, std::span<const double> params,
                                   const LabeledDataset& batch, double C,
                                   const EnergyTable& energy) {
  auto idx = all_indices(batch.size());
  return loss_and_grad(topo, params, batch, idx, C, energy, true).grad;
}

// ---- training -----------------------------------------------------------------

NeuralTreeModel train(const LabeledDataset& data, const TrainConfig& cfg,
                      const EnergyTable& energy, TrainLog* log) {
  data.validate();
  if (cfg.learning_rate <= 0) throw std::invalid_argument("learning rate must be positive");
  if (cfg.energy_tradeoff < 0) throw std::invalid_argument("energy trade-off must be >= 0");
  if (cfg.energy_tradeoff > 0) energy.validate();

  const size_t D = data.X.front().size();
  std::vector<FeatureSpec> specs = data.specs;
  if (specs.empty() && cfg.energy_tradeoff > 0)
    throw std::invalid_argument("energy regularization needs feature specs");
  if (specs.empty()) {
    // anonymous features: give them LL provenance so the model stays usable
    for (size_t j = 0; j < D; ++j) specs.push_back({FeatureKind::LL, uint32_t(j), {}, "", ""});
  }
  NeuralTreeModel topo =
      NeuralTreeModel::complete(cfg.depth, data.num_classes, specs, data.bands);

  // feature RMS over the training set scales the init so initial margins are
  // O(1) regardless of raw feature magnitudes
  std::vector<double> rms(D, 0.0);
  for (const auto& x : data.X)
    for (size_t j = 0; j < D; ++j) rms[j] += x[j] * x[j];
  for (auto& v : rms) v = std::max(std::sqrt(v / double(data.size())), 1e-9);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> params(param_count(topo), 0.0);
  {
    size_t off = 0;
    for (const auto& n : topo.nodes) {
      if (n.is_leaf) {
        off += size_t(topo.num_classes);  // logits start at 0 (uniform)
      } else {
        for (size_t j = 0; j < n.feature_ids.size(); ++j)
          params[off + j] = gauss(rng) * 0.5 / (rms[size_t(n.feature_ids[j])] * std::sqrt(double(D)));
        params[off + n.feature_ids.size()] = 0.0;
        off += n.feature_ids.size() + 1;
      }
    }
  }

  // Adam state
  std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  size_t step = 0;

  auto idx = all_indices(data.size());
  const size_t bs = cfg.batch_size > 0 ? size_t(cfg.batch_size) : data.size();

  if (log) {
    log->epoch_loss.clear();
    log->epoch_loss.push_back(
        loss_and_grad(topo, params, data, idx, cfg.energy_tradeoff, energy, false).loss);
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (size_t start = 0; start < idx.size(); start += bs) {
      size_t end = std::min(idx.size(), start + bs);
      std::span<const size_t> batch(idx.data() + start, end - start);
      auto la = loss_and_grad(topo, params, data, batch, cfg.energy_tradeoff, energy, true);
      ++step;
      double c1 = 1.0 - std::pow(b1, double(step));
      double c2 = 1.0 - std::pow(b2, double(step));
      for (size_t p = 0; p < params.size(); ++p) {
        m1[p] = b1 * m1[p] + (1.0 - b1) * la.grad[p];
        m2[p] = b2 * m2[p] + (1.0 - b2) * la.grad[p] * la.grad[p];
        params[p] -= cfg.learning_rate * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + eps);
      }
    }
    if (log) {
      auto full = all_indices(data.size());
      log->epoch_loss.push_back(
          loss_and_grad(topo, params, data, full, cfg.energy_tradeoff, energy, false).loss);
    }
  }
  return materialize(topo, params);
}

// ---- pruning ------------------------------------------------------------------

namespace {

// Renumber nodes so only reachable ones remain, parents before children.
NeuralTreeModel compact(const NeuralTreeModel& m) {
  std::vector<int> order;
  std::vector<int> remap(m.nodes.size(), -1);
  order.push_back(0);
  for (size_t qi = 0; qi < order.size(); ++qi) {
    const TreeNode& n = m.nodes[size_t(order[qi])];
    if (!n.is_leaf) {
      order.push_back(n.left);
      order.push_back(n.right);
    }
  }
  NeuralTreeModel out = m;
  out.nodes.clear();
  out.nodes.reserve(order.size());
  for (size_t i = 0; i < order.size(); ++i) remap[size_t(order[i])] = int(i);
  for (int oi : order) {
    TreeNode n = m.nodes[size_t(oi)];
    if (!n.is_leaf) {
      n.left = remap[size_t(n.left)];
      n.right = remap[size_t(n.right)];
    }
    out.nodes.push_back(std::move(n));
  }
  return out;
}

// All node indices in the subtree rooted at root_idx (inclusive).
std::vector<int> subtree_nodes(const NeuralTreeModel& m, int root_idx) {
  std::vector<int> stack{root_idx}, out;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    out.push_back(i);
    const TreeNode& n = m.nodes[size_t(i)];
    if (!n.is_leaf) {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return out;
}

}  // namespace

NeuralTreeModel prune(const NeuralTreeModel& m, double threshold,
                      const std::vector<std::vector<double>>& X) {
  if (threshold == 0.0) return m;
  NeuralTreeModel out = m;
  out.quantized = false;

  // 1) zero small weights
  for (auto& n : out.nodes) {
    if (n.is_leaf) continue;
    for (auto& w : n.weights)
      if (std::abs(w) < threshold) w = 0.0;
    n.quant.reset();
  }

  // 2) drop zero-weight features; 3) cap 64 per node by |w|
  for (auto& n : out.nodes) {
    if (n.is_leaf) continue;
    std::vector<size_t> keep;
    for (size_t j = 0; j < n.weights.size(); ++j)
      if (n.weights[j] != 0.0) keep.push_back(j);
    if (keep.size() > kMaxChannels) {
      std::stable_sort(keep.begin(), keep.end(), [&](size_t a, size_t b) {
        return std::abs(n.weights[a]) > std::abs(n.weights[b]);
      });
      keep.resize(kMaxChannels);
      std::sort(keep.begin(), keep.end());
    }
    std::vector<int> ids;
    std::vector<double> ws;
    for (size_t j : keep) {
      ids.push_back(n.feature_ids[j]);
      ws.push_back(n.weights[j]);
    }
    n.feature_ids = std::move(ids);
    n.weights = std::move(ws);
  }

  // 4) collapse rarely visited subtrees into leaves
  if (!X.empty()) {
    std::vector<double> visit_sum(out.nodes.size(), 0.0);
    for (const auto& x : X) {
      Forward f = forward_pass(out, x);
      for (size_t i = 0; i < out.nodes.size(); ++i) visit_sum[i] += f.visit[i];
    }

    constexpr double kVisitFloor = 1e-3;
    std::vector<bool> skip(out.nodes.size(), false);
    for (size_t i = 0; i < out.nodes.size(); ++i) {
      if (out.nodes[i].is_leaf || skip[i]) continue;
      if (visit_sum[i] / double(X.size()) >= kVisitFloor) continue;
      auto sub = subtree_nodes(out, int(i));
      // conditional leaf mixture under this node over the training set
      std::vector<double> phi(size_t(out.num_classes), 0.0);
      double mass = 0;
      size_t leaf_count = 0;
      for (int s : sub) {
        if (s != int(i)) skip[size_t(s)] = true;
        const TreeNode& ls = out.nodes[size_t(s)];
        if (!ls.is_leaf) continue;
        ++leaf_count;
        mass += visit_sum[size_t(s)];
        for (int k = 0; k < out.num_classes; ++k)
          phi[size_t(k)] += visit_sum[size_t(s)] * ls.phi[size_t(k)];
      }
      if (mass <= 1e-30) {
        phi.assign(size_t(out.num_classes), 0.0);
        for (int s : sub) {
          const TreeNode& ls = out.nodes[size_t(s)];
          if (ls.is_leaf)
            for (int k = 0; k < out.num_classes; ++k)
              phi[size_t(k)] += ls.phi[size_t(k)] / double(leaf_count);
        }
      } else {
        for (auto& p : phi) p /= mass;
      }
      TreeNode& n = out.nodes[i];
      n.is_leaf = true;
      n.left = n.right = -1;
      n.feature_ids.clear();
      n.weights.clear();
      n.bias = 0;
      n.quant.reset();
      n.phi = std::move(phi);
    }
  }
  return compact(out);
}

// ---- quantization ---------------------------------------------------------------

namespace {

int16_t quantize_value(double v, int frac_bits) {
  double scaled = std::ldexp(v, frac_bits);
  double r = std::round(scaled);
  if (r > 2047) r = 2047;
  if (r < -2048) r = -2048;
  return int16_t(r);
}

}  // namespace

NeuralTreeModel quantize(const NeuralTreeModel& m) {
  NeuralTreeModel out = m;
  for (auto& n : out.nodes) {
    if (n.is_leaf) {
      n.phi_q.resize(n.phi.size());
      for (size_t k = 0; k < n.phi.size(); ++k) {
        double r = std::round(n.phi[k] * 4096.0);
        n.phi_q[k] = uint16_t(std::clamp(r, 0.0, 4095.0));
        n.phi[k] = double(n.phi_q[k]) / 4096.0;
      }
      continue;
    }
    double maxabs = std::abs(n.bias);
    for (double w : n.weights) maxabs = std::max(maxabs, std::abs(w));
    int frac = 11;
    while (frac > 0 && std::round(std::ldexp(maxabs, frac)) > 2047.0) --frac;
    QuantizedNode q;
    q.frac_bits = uint8_t(frac);
    q.weights_q.resize(n.weights.size());
    for (size_t j = 0; j < n.weights.size(); ++j) {
      q.weights_q[j] = quantize_value(n.weights[j], frac);
      n.weights[j] = std::ldexp(double(q.weights_q[j]), -frac);
    }
    q.bias_q = quantize_value(n.bias, frac);
    n.bias = std::ldexp(double(q.bias_q), -frac);
    n.quant = std::move(q);
  }
  out.quantized = true;
  return out;
}

// ---- single-path inference -------------------------------------------------------

std::vector<int> infer_single_path(std::span<const SignalWindow> windows,
                                   const NeuralTreeModel& m, const FirBank& bank,
                                   InferenceLog* log) {
  if (!m.quantized) throw std::invalid_argument("single-path inference needs a quantized model");
  m.validate();
  constexpr int kMacFrac = 24;
  std::vector<int> labels;
  labels.reserve(windows.size());
  for (const auto& w : windows) {
    InferenceLog::WindowTrace trace;
    int node_idx = 0;
    while (!m.nodes[size_t(node_idx)].is_leaf) {
      const TreeNode& n = m.nodes[size_t(node_idx)];
      trace.visited_nodes.push_back(node_idx);
      std::vector<FeatureSpec> specs;
      specs.reserve(n.feature_ids.size());
      for (int id : n.feature_ids) specs.push_back(m.feature_specs[size_t(id)]);
      FeatureVector fv = extract(w, bank, specs);
      for (const auto& s : specs) trace.extracted.push_back(s);

      const QuantizedNode& q = *n.quant;
      int64_t acc = 0;
      for (size_t j = 0; j < fv.values.size(); ++j) {
        const FixedPoint& x = fv.values[j];
        __int128 prod = __int128(q.weights_q[j]) * __int128(x.raw);
        acc += shift_round(prod, int(q.frac_bits) + int(x.fmt.fraction_bits) - kMacFrac);
      }
      acc += shift_round(__int128(q.bias_q), int(q.frac_bits) - kMacFrac);
      node_idx = (acc >= 0) ? n.right : n.left;  // exact zero branches right
    }
    trace.visited_nodes.push_back(node_idx);
    const auto& phi = m.nodes[size_t(node_idx)].phi;
    int label = int(std::max_element(phi.begin(), phi.end()) - phi.begin());
    trace.label = label;
    labels.push_back(label);
    if (log) log->windows.push_back(std::move(trace));
  }
  return labels;
}

std::map<uint32_t, double> channel_importance(const InferenceLog& log) {
  if (log.windows.empty()) throw std::invalid_argument("empty inference log");
  std::map<uint32_t, double> counts;
  for (const auto& w : log.windows) {
    for (const auto& s : w.extracted) {
      counts[s.channel] += 1.0;
      if (s.channel2) counts[*s.channel2] += 1.0;
    }
  }
  double mx = 0;
  for (const auto& [ch, c] : counts) mx = std::max(mx, c);
  if (mx > 0)
    for (auto& [ch, c] : counts) c /= mx;
  return counts;
}

}  // namespace nt
