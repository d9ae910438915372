#pragma once

#include <map>
#include <string>
#include <vector>

#include "nt/config.hpp"
#include "nt/dataset.hpp"
#include "nt/oracle.hpp"
#include "nt/tree.hpp"

namespace nt {

struct PipelineConfig {
  double window_len_s = 1.0;
  std::vector<FeatureSpec> specs;
  size_t folds = 5;
  TrainConfig train;
  EnergyTable energy = EnergyTable::defaults();
  int debounce = 2;             // consecutive positive windows before an alarm
  double label_overlap = 0.5;   // window labeled by majority event overlap
  double adc_lsb = 1.0;
  double csv_rate_hz = 0;       // required for csv ingestion
  std::map<std::string, std::pair<double, double>> band_overrides;

  static PipelineConfig from_config(const Config& cfg);
};

FirBank build_bank(const PipelineConfig& cfg, double sample_rate_hz);

// Contiguous time blocks assigned to folds; block boundaries sit on the
// window grid, between event groups. Folds reduce to the event count when
// there are fewer events than requested folds (leave-one-out on events).
struct FoldPlan {
  struct Event {
    size_t first_window = 0;  // global window index range touched
    size_t last_window = 0;
    int fold = -1;
    std::string label;
    double start_s = 0, end_s = 0;
  };
  size_t n_windows = 0;
  std::vector<std::pair<size_t, size_t>> fold_ranges;  // [begin, end) global windows
  std::vector<Event> events;
};

struct WindowedDataset {
  std::vector<SignalWindow> windows;       // global order
  std::vector<int> labels;                 // class per window
  std::vector<size_t> recording_of;        // window -> recording index
  std::vector<double> start_s;             // window start within its recording
  int num_classes = 2;
  std::vector<std::string> class_labels;
};

WindowedDataset window_dataset(const Dataset& ds, const PipelineConfig& cfg);
FoldPlan blockwise_folds(const Dataset& ds, const WindowedDataset& wd, size_t k);

struct EvalReport {
  double event_sensitivity = 0;
  double window_specificity = 0;
  struct FoldStats {
    size_t fold = 0;
    size_t events = 0;
    size_t detected = 0;
    size_t test_windows = 0;
    double sensitivity = 0;
    double specificity = 0;
    double energy_score = 0;
  };
  std::vector<FoldStats> folds;
  std::vector<std::vector<size_t>> confusion;  // [true][predicted], window level
  double latency_mean_s = 0;
  double latency_max_s = 0;
  double energy_score = 0;  // mean per-window extraction energy
  bool leakage_free = true;
};

struct RunArtifacts {
  std::vector<NeuralTreeModel> fold_models;
  EvalReport report;
  InferenceLog combined_log;
  FoldPlan plan;
};

// Per fold: extract features on training blocks, train + prune + quantize,
// then single-path inference on the held-out block. An event counts as
// detected when at least one (debounced) alarm window overlaps it.
RunArtifacts run_training(const Dataset& ds, const PipelineConfig& cfg);

// Evaluate a trained model over a whole dataset (no folds).
EvalReport evaluate_model(const NeuralTreeModel& m, const Dataset& ds, const PipelineConfig& cfg,
                          InferenceLog* log = nullptr);

void write_eval_csv(const EvalReport& rep, const std::string& path, uint64_t seed,
                    const std::vector<std::string>& class_labels);

// Per-channel extraction counts from the inference logs, normalized and
// emitted sorted by score.
void write_importance_csv(const InferenceLog& log, const std::string& path, uint64_t seed);

// Feature dump rows: window_index, channel, kind, band, value_fixed,
// value_float_oracle.
void write_feature_csv(const WindowedDataset& wd, const FirBank& bank,
                       const std::vector<FeatureSpec>& specs, const std::string& path,
                       uint64_t seed);

}  // namespace nt
