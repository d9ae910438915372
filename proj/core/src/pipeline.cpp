#include "nt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nt/csv.hpp"

namespace nt {

PipelineConfig PipelineConfig::from_config(const Config& cfg) {
  PipelineConfig p;
  p.window_len_s = cfg.get_double("window_len_s", p.window_len_s);
  for (const auto& s : cfg.get_list("features")) p.specs.push_back(parse_feature_spec(s));
  p.folds = size_t(cfg.get_int("folds", int64_t(p.folds)));
  p.debounce = int(cfg.get_int("debounce", p.debounce));
  p.label_overlap = cfg.get_double("label_overlap", p.label_overlap);
  p.adc_lsb = cfg.get_double("adc.lsb", p.adc_lsb);
  p.csv_rate_hz = cfg.get_double("sample_rate_hz", p.csv_rate_hz);
  p.train.learning_rate = cfg.get_double("train.lr", p.train.learning_rate);
  p.train.epochs = int(cfg.get_int("train.epochs", p.train.epochs));
  p.train.batch_size = int(cfg.get_int("train.batch", p.train.batch_size));
  p.train.energy_tradeoff = cfg.get_double("train.C", p.train.energy_tradeoff);
  p.train.prune_threshold = cfg.get_double("train.prune_threshold", p.train.prune_threshold);
  p.train.seed = uint64_t(cfg.get_int("seed", int64_t(p.train.seed)));
  p.train.depth = int(cfg.get_int("depth", p.train.depth));
  for (const auto& [name, value] : cfg.with_prefix("band.")) {
    std::stringstream ss(value);
    double lo = 0, hi = 0;
    if (!(ss >> lo >> hi)) throw std::runtime_error("band." + name + " wants 'lo_hz hi_hz'");
    p.band_overrides[name] = {lo, hi};
  }
  for (const auto& [kind, value] : cfg.with_prefix("energy.")) {
    p.energy.beta[feature_kind_from_string(kind)] = std::stod(value);
  }
  if (p.debounce < 1) throw std::runtime_error("debounce must be >= 1");
  return p;
}

FirBank build_bank(const PipelineConfig& cfg, double sample_rate_hz) {
  FirBank bank = FirBank::default_bank(sample_rate_hz);
  for (const auto& [name, edges] : cfg.band_overrides)
    bank.add_bandpass(name, edges.first, edges.second);
  return bank;
}

WindowedDataset window_dataset(const Dataset& ds, const PipelineConfig& cfg) {
  if (ds.recordings.empty()) throw std::invalid_argument("empty dataset");
  WindowedDataset wd;
  wd.class_labels = ds.class_labels;
  wd.num_classes = std::max<int>(2, int(ds.class_labels.size()));
  const double wlen = cfg.window_len_s;
  for (size_t r = 0; r < ds.recordings.size(); ++r) {
    const auto& rec = ds.recordings[r];
    auto wins = make_windows(rec.stream, wlen);
    for (size_t wi = 0; wi < wins.size(); ++wi) {
      double w0 = double(wi) * wlen;
      double w1 = w0 + wlen;
      int label = 0;
      double best_overlap = 0;
      for (const auto& ev : rec.events) {
        double ov = std::min(w1, ev.end_s) - std::max(w0, ev.start_s);
        if (ov > best_overlap) {
          best_overlap = ov;
          if (ov >= cfg.label_overlap * wlen) {
            auto it = std::find(ds.class_labels.begin(), ds.class_labels.end(), ev.label);
            label = int(it - ds.class_labels.begin());
          }
        }
      }
      wd.windows.push_back(std::move(wins[wi]));
      wd.labels.push_back(label);
      wd.recording_of.push_back(r);
      wd.start_s.push_back(w0);
    }
  }
  if (wd.windows.empty()) throw std::invalid_argument("dataset shorter than one window");
  return wd;
}

FoldPlan blockwise_folds(const Dataset& ds, const WindowedDataset& wd, size_t k) {
  if (k < 2) throw std::invalid_argument("fold count must be >= 2");
  FoldPlan plan;
  plan.n_windows = wd.windows.size();

  // recording -> global window offset
  std::vector<size_t> rec_offset(ds.recordings.size(), 0);
  {
    std::vector<size_t> counts(ds.recordings.size(), 0);
    for (size_t w = 0; w < wd.windows.size(); ++w) counts[wd.recording_of[w]]++;
    size_t acc = 0;
    for (size_t r = 0; r < counts.size(); ++r) {
      rec_offset[r] = acc;
      acc += counts[r];
    }
  }
  const double wlen = wd.windows.front().window_len_s();

  for (size_t r = 0; r < ds.recordings.size(); ++r) {
    size_t rec_windows = 0;
    for (size_t w = 0; w < wd.windows.size(); ++w)
      if (wd.recording_of[w] == r) ++rec_windows;
    for (const auto& ev : ds.recordings[r].events) {
      FoldPlan::Event fe;
      fe.label = ev.label;
      fe.start_s = ev.start_s;
      fe.end_s = ev.end_s;
      size_t first = size_t(std::floor(ev.start_s / wlen));
      size_t last = size_t(std::ceil(ev.end_s / wlen));
      if (last > rec_windows) last = rec_windows;  // events can outlast full windows
      if (first >= rec_windows) continue;          // entirely in the dropped tail
      fe.first_window = rec_offset[r] + first;
      fe.last_window = rec_offset[r] + (last > first ? last - 1 : first);
      plan.events.push_back(fe);
    }
  }
  if (plan.events.empty()) throw std::invalid_argument("no labeled events in dataset");
  std::sort(plan.events.begin(), plan.events.end(),
            [](const auto& a, const auto& b) { return a.first_window < b.first_window; });

  size_t folds = std::min(k, plan.events.size());  // leave-one-out when scarce
  size_t n_ev = plan.events.size();
  // contiguous event groups, remainder spread over the leading groups
  std::vector<size_t> group_of(n_ev);
  {
    size_t base = n_ev / folds, rem = n_ev % folds, e = 0;
    for (size_t g = 0; g < folds; ++g) {
      size_t cnt = base + (g < rem ? 1 : 0);
      for (size_t j = 0; j < cnt; ++j) group_of[e++] = g;
    }
  }
  std::vector<size_t> bounds;  // fold g covers [bounds[g], bounds[g+1])
  bounds.push_back(0);
  for (size_t g = 0; g + 1 < folds; ++g) {
    size_t last_of_g = 0, first_of_next = 0;
    for (size_t e = 0; e < n_ev; ++e) {
      if (group_of[e] == g) last_of_g = std::max(last_of_g, plan.events[e].last_window);
      if (group_of[e] == g + 1 && first_of_next == 0) first_of_next = plan.events[e].first_window;
    }
    size_t boundary = std::max(last_of_g + 1, (last_of_g + 1 + first_of_next) / 2);
    boundary = std::min(boundary, first_of_next);
    boundary = std::max(boundary, bounds.back() + 1);
    bounds.push_back(boundary);
  }
  bounds.push_back(plan.n_windows);
  for (size_t g = 0; g < folds; ++g) plan.fold_ranges.emplace_back(bounds[g], bounds[g + 1]);
  for (size_t e = 0; e < n_ev; ++e) plan.events[e].fold = int(group_of[e]);
  return plan;
}

namespace {

std::vector<bool> debounced_alarms(const std::vector<int>& preds, int debounce) {
  std::vector<bool> alarm(preds.size(), false);
  int run = 0;
  for (size_t w = 0; w < preds.size(); ++w) {
    run = (preds[w] != 0) ? run + 1 : 0;
    alarm[w] = run >= debounce;
  }
  return alarm;
}

double inference_energy(const InferenceLog& log, const EnergyTable& energy) {
  if (log.windows.empty()) return 0;
  double total = 0;
  for (const auto& w : log.windows)
    for (const auto& s : w.extracted) total += energy.cost(s.kind);
  return total / double(log.windows.size());
}

struct FoldEval {
  size_t events = 0, detected = 0, test_windows = 0;
  size_t tn = 0, fp = 0;
  std::vector<double> latencies_s;
};

// Window-level evaluation of one contiguous test range.
FoldEval eval_range(const WindowedDataset& wd, const FoldPlan& plan, size_t begin, size_t end,
                    const std::vector<int>& preds, int debounce,
                    std::vector<std::vector<size_t>>& confusion) {
  FoldEval fe;
  fe.test_windows = end - begin;
  auto alarm = debounced_alarms(preds, debounce);
  for (size_t w = begin; w < end; ++w) {
    int truth = wd.labels[w];
    int pred = preds[w - begin];
    confusion[size_t(truth)][size_t(pred)]++;
    if (truth == 0) {
      if (alarm[w - begin])
        ++fe.fp;
      else
        ++fe.tn;
    }
  }
  for (const auto& ev : plan.events) {
    if (ev.first_window < begin || ev.first_window >= end) continue;
    ++fe.events;
    bool hit = false;
    double first_hit_s = 0;
    for (size_t w = std::max(begin, ev.first_window); w <= std::min(end - 1, ev.last_window);
         ++w) {
      if (alarm[w - begin]) {
        hit = true;
        first_hit_s = wd.start_s[w];
        break;
      }
    }
    if (hit) {
      ++fe.detected;
      fe.latencies_s.push_back(std::max(0.0, first_hit_s - ev.start_s));
    }
  }
  return fe;
}

LabeledDataset to_labeled(const WindowedDataset& wd, const std::vector<size_t>& idx,
                          const FirBank& bank, const std::vector<FeatureSpec>& specs,
                          const std::vector<std::vector<double>>& feature_rows) {
  LabeledDataset d;
  d.num_classes = wd.num_classes;
  d.specs = specs;
  d.bands = bank.bands();
  for (size_t i : idx) {
    d.X.push_back(feature_rows[i]);
    d.y.push_back(wd.labels[i]);
  }
  return d;
}

}  // namespace

RunArtifacts run_training(const Dataset& ds, const PipelineConfig& cfg) {
  if (cfg.specs.empty()) throw std::invalid_argument("no feature specs configured");
  const double rate = ds.sample_rate_hz();
  FirBank bank = build_bank(cfg, rate);
  WindowedDataset wd = window_dataset(ds, cfg);
  FoldPlan plan = blockwise_folds(ds, wd, cfg.folds);

  // bit-accurate features once per window, reused across folds
  std::vector<std::vector<double>> feature_rows(wd.windows.size());
  for (size_t w = 0; w < wd.windows.size(); ++w) {
    FeatureVector fv = extract(wd.windows[w], bank, cfg.specs);
    feature_rows[w].reserve(fv.size());
    for (const auto& v : fv.values) feature_rows[w].push_back(v.value());
  }

  RunArtifacts out;
  out.plan = plan;
  EvalReport& rep = out.report;
  rep.confusion.assign(size_t(wd.num_classes), std::vector<size_t>(size_t(wd.num_classes), 0));

  size_t total_events = 0, total_detected = 0, total_tn = 0, total_fp = 0;
  std::vector<double> latencies;
  double energy_sum = 0;
  size_t energy_windows = 0;

  for (size_t f = 0; f < plan.fold_ranges.size(); ++f) {
    auto [begin, end] = plan.fold_ranges[f];
    std::vector<size_t> train_idx;
    for (size_t w = 0; w < wd.windows.size(); ++w)
      if (w < begin || w >= end) train_idx.push_back(w);
    if (train_idx.empty()) throw std::runtime_error("fold leaves no training windows");

    // leakage check: training and test window sets must be disjoint
    for (size_t w : train_idx)
      if (w >= begin && w < end) {
        rep.leakage_free = false;
        throw std::logic_error("train/test window overlap detected");
      }

    TrainConfig tc = cfg.train;
    tc.seed = cfg.train.seed + f;  // per-fold stream, reproducible
    LabeledDataset train_set = to_labeled(wd, train_idx, bank, cfg.specs, feature_rows);
    std::vector<std::vector<double>> train_X = train_set.X;

    NeuralTreeModel model = train(train_set, tc, cfg.energy);
    if (tc.prune_threshold > 0) model = prune(model, tc.prune_threshold, train_X);
    model = quantize(model);

    std::span<const SignalWindow> test_span(wd.windows.data() + begin, end - begin);
    InferenceLog log;
    std::vector<int> preds = infer_single_path(test_span, model, bank, &log);

    FoldEval fe = eval_range(wd, plan, begin, end, preds, cfg.debounce, rep.confusion);

    EvalReport::FoldStats fs;
    fs.fold = f;
    fs.events = fe.events;
    fs.detected = fe.detected;
    fs.test_windows = fe.test_windows;
    fs.sensitivity = fe.events ? double(fe.detected) / double(fe.events) : 1.0;
    fs.specificity = (fe.tn + fe.fp) ? double(fe.tn) / double(fe.tn + fe.fp) : 1.0;
    fs.energy_score = inference_energy(log, cfg.energy);
    rep.folds.push_back(fs);

    total_events += fe.events;
    total_detected += fe.detected;
    total_tn += fe.tn;
    total_fp += fe.fp;
    latencies.insert(latencies.end(), fe.latencies_s.begin(), fe.latencies_s.end());
    energy_sum += fs.energy_score * double(log.windows.size());
    energy_windows += log.windows.size();

    for (auto& t : log.windows) out.combined_log.windows.push_back(std::move(t));
    out.fold_models.push_back(std::move(model));
  }

  rep.event_sensitivity = total_events ? double(total_detected) / double(total_events) : 0.0;
  rep.window_specificity =
      (total_tn + total_fp) ? double(total_tn) / double(total_tn + total_fp) : 1.0;
  if (!latencies.empty()) {
    rep.latency_mean_s =
        std::accumulate(latencies.begin(), latencies.end(), 0.0) / double(latencies.size());
    rep.latency_max_s = *std::max_element(latencies.begin(), latencies.end());
  }
  rep.energy_score = energy_windows ? energy_sum / double(energy_windows) : 0.0;
  return out;
}

EvalReport evaluate_model(const NeuralTreeModel& m, const Dataset& ds, const PipelineConfig& cfg,
                          InferenceLog* log_out) {
  const double rate = ds.sample_rate_hz();
  FirBank bank = build_bank(cfg, rate);
  WindowedDataset wd = window_dataset(ds, cfg);

  InferenceLog log;
  std::vector<int> preds = infer_single_path(wd.windows, m, bank, &log);

  EvalReport rep;
  rep.confusion.assign(size_t(wd.num_classes), std::vector<size_t>(size_t(wd.num_classes), 0));
  auto alarm = debounced_alarms(preds, cfg.debounce);
  size_t tn = 0, fp = 0;
  for (size_t w = 0; w < wd.windows.size(); ++w) {
    rep.confusion[size_t(wd.labels[w])][size_t(preds[w])]++;
    if (wd.labels[w] == 0) {
      if (alarm[w])
        ++fp;
      else
        ++tn;
    }
  }
  size_t events = 0, detected = 0;
  std::vector<double> latencies;
  const double wlen = cfg.window_len_s;
  for (size_t r = 0; r < ds.recordings.size(); ++r) {
    size_t rec_offset = 0;
    for (size_t w = 0; w < wd.windows.size(); ++w)
      if (wd.recording_of[w] < r) ++rec_offset;
    for (const auto& ev : ds.recordings[r].events) {
      ++events;
      size_t first = rec_offset + size_t(std::floor(ev.start_s / wlen));
      size_t last = rec_offset + size_t(std::ceil(ev.end_s / wlen));
      bool hit = false;
      for (size_t w = first; w < std::min(last, wd.windows.size()); ++w) {
        if (wd.recording_of[w] != r) break;
        if (alarm[w]) {
          hit = true;
          latencies.push_back(std::max(0.0, wd.start_s[w] - ev.start_s));
          break;
        }
      }
      if (hit) ++detected;
    }
  }
  rep.event_sensitivity = events ? double(detected) / double(events) : 0.0;
  rep.window_specificity = (tn + fp) ? double(tn) / double(tn + fp) : 1.0;
  if (!latencies.empty()) {
    rep.latency_mean_s =
        std::accumulate(latencies.begin(), latencies.end(), 0.0) / double(latencies.size());
    rep.latency_max_s = *std::max_element(latencies.begin(), latencies.end());
  }
  rep.energy_score = inference_energy(log, cfg.energy);
  if (log_out) *log_out = std::move(log);
  return rep;
}

void write_eval_csv(const EvalReport& rep, const std::string& path, uint64_t seed,
                    const std::vector<std::string>& class_labels) {
  CsvWriter csv(path);
  csv.comment_line(seed);
  csv.header({"metric", "value"});
  csv.field(std::string("event_sensitivity"));
  csv.field(rep.event_sensitivity);
  csv.end_row();
  csv.field(std::string("window_specificity"));
  csv.field(rep.window_specificity);
  csv.end_row();
  csv.field(std::string("latency_mean_s"));
  csv.field(rep.latency_mean_s);
  csv.end_row();
  csv.field(std::string("latency_max_s"));
  csv.field(rep.latency_max_s);
  csv.end_row();
  csv.field(std::string("energy_score"));
  csv.field(rep.energy_score);
  csv.end_row();
  csv.field(std::string("leakage_free"));
  csv.field(int64_t(rep.leakage_free ? 1 : 0));
  csv.end_row();
  for (const auto& f : rep.folds) {
    csv.field(std::string("fold") + std::to_string(f.fold) + "_sensitivity");
    csv.field(f.sensitivity);
    csv.end_row();
    csv.field(std::string("fold") + std::to_string(f.fold) + "_specificity");
    csv.field(f.specificity);
    csv.end_row();
    csv.field(std::string("fold") + std::to_string(f.fold) + "_energy");
    csv.field(f.energy_score);
    csv.end_row();
  }
  for (size_t t = 0; t < rep.confusion.size(); ++t) {
    for (size_t p = 0; p < rep.confusion[t].size(); ++p) {
      std::string tl = t < class_labels.size() ? class_labels[t] : std::to_string(t);
      std::string pl = p < class_labels.size() ? class_labels[p] : std::to_string(p);
      csv.field("confusion_" + tl + "_as_" + pl);
      csv.field(uint64_t(rep.confusion[t][p]));
      csv.end_row();
    }
  }
}

void write_importance_csv(const InferenceLog& log, const std::string& path, uint64_t seed) {
  auto scores = channel_importance(log);
  std::vector<std::pair<uint32_t, double>> rows(scores.begin(), scores.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  CsvWriter csv(path);
  csv.comment_line(seed);
  csv.header({"channel", "importance"});
  for (const auto& [ch, score] : rows) {
    csv.field(uint64_t(ch));
    csv.field(score);
    csv.end_row();
  }
}

void write_feature_csv(const WindowedDataset& wd, const FirBank& bank,
                       const std::vector<FeatureSpec>& specs, const std::string& path,
                       uint64_t seed) {
  CsvWriter csv(path);
  csv.comment_line(seed);
  csv.header({"window_index", "channel", "kind", "band", "value_fixed", "value_float_oracle"});
  for (size_t w = 0; w < wd.windows.size(); ++w) {
    FeatureVector fv = extract(wd.windows[w], bank, specs);
    for (size_t s = 0; s < specs.size(); ++s) {
      std::string band = specs[s].band;
      if (!specs[s].band2.empty()) band += "|" + specs[s].band2;
      csv.field(uint64_t(w));
      csv.field(uint64_t(specs[s].channel));
      csv.field(std::string(to_string(specs[s].kind)));
      csv.field(band.empty() ? std::string("-") : band);
      csv.field(fv.values[s].value());
      csv.field(oracle::ideal_feature(wd.windows[w], specs[s], bank));
      csv.end_row();
    }
  }
}

}  // namespace nt
