// Copyright 2026 The pqcxpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "pqcxpr/catalog.hpp"
#include "pqcxpr/expressibility.hpp"

namespace pqcxpr {

/// The seven elementary kinds in dataset column order.
inline constexpr std::array<GateKind, 7> kElementaryKinds = {
    GateKind::RX, GateKind::RY, GateKind::RZ,   GateKind::FRZ,
    GateKind::H,  GateKind::CNOT, GateKind::CZ};

/// The six model features (elementary kinds minus FRZ).
inline constexpr std::array<GateKind, 6> kFeatureKinds = {
    GateKind::RX, GateKind::RY, GateKind::RZ,
    GateKind::H,  GateKind::CNOT, GateKind::CZ};

inline constexpr const char* kDatasetHeader =
    "template_id,n_qubits,n_layers,rx,ry,rz,frz,h,cnot,cz,n_params,kl_mean,"
    "kl_std,S,B,R,seed";

/// One dataset row: instance descriptor, decomposed gate counts, KL estimate
/// and the sampling configuration that produced it.
struct ExpressibilityRecord {
  int template_id = 0;
  int n_qubits = 0;
  int n_layers = 0;
  std::array<long, 7> counts{};  // kElementaryKinds order
  int n_params = 0;
  double kl_mean = 0.0;
  double kl_std = 0.0;
  int n_pairs = 0;
  int n_bins = 0;
  int n_repetitions = 0;
  std::uint64_t master_seed = 0;

  using Key = std::tuple<int, int, int, int, int, int, std::uint64_t>;
  Key key() const {
    return {template_id, n_qubits, n_layers, n_pairs, n_bins, n_repetitions,
            master_seed};
  }
};

struct GridFilter {
  int qubit_lo = 2;
  int qubit_hi = 18;
  int layer_lo = 1;
  int layer_hi = 5;
  int max_layers = 5;
  bool param_cap_enabled = false;  // keep only n_params <= 2^n_qubits

  void validate() const {
    if (qubit_lo < 2 || qubit_hi < qubit_lo)
      throw std::invalid_argument("filter: empty qubit range");
    if (layer_lo < 1 || layer_hi < layer_lo)
      throw std::invalid_argument("filter: empty layer range");
  }
};

struct GridEntry {
  int template_id;
  int n_qubits;
  int n_layers;
};

/// Cartesian product templates x qubits x layers minus filtered entries, in
/// (template, qubits, layers) ascending order.
inline std::vector<GridEntry> enumerate_grid(const Catalog& catalog,
                                             const GridFilter& filter) {
  filter.validate();
  std::vector<GridEntry> grid;
  const int layer_hi = std::min(filter.layer_hi, filter.max_layers);
  for (const CircuitTemplate& t : catalog) {
    for (int n = filter.qubit_lo; n <= filter.qubit_hi; ++n) {
      for (int layers = filter.layer_lo; layers <= layer_hi; ++layers) {
        if (filter.param_cap_enabled) {
          const CircuitInstance inst = instantiate(t, n, layers);
          const double cap = std::pow(2.0, n);
          if (static_cast<double>(inst.n_params) > cap) continue;
        }
        grid.push_back({t.id, n, layers});
      }
    }
  }
  return grid;
}

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

inline std::string record_to_csv(const ExpressibilityRecord& r) {
  std::ostringstream os;
  os << r.template_id << ',' << r.n_qubits << ',' << r.n_layers;
  for (long c : r.counts) os << ',' << c;
  os << ',' << r.n_params << ',' << detail::format_double(r.kl_mean) << ','
     << detail::format_double(r.kl_std) << ',' << r.n_pairs << ',' << r.n_bins
     << ',' << r.n_repetitions << ',' << r.master_seed;
  return os.str();
}

inline std::optional<ExpressibilityRecord> record_from_csv(const std::string& line) {
  const auto f = detail::split_csv(line);
  if (f.size() != 17) return std::nullopt;
  ExpressibilityRecord r;
  try {
    std::size_t pos = 0;
    r.template_id = std::stoi(f[0]);
    r.n_qubits = std::stoi(f[1]);
    r.n_layers = std::stoi(f[2]);
    for (int i = 0; i < 7; ++i)
      r.counts[static_cast<std::size_t>(i)] = std::stol(f[static_cast<std::size_t>(3 + i)]);
    r.n_params = std::stoi(f[10]);
    r.kl_mean = std::stod(f[11], &pos);
    if (pos != f[11].size()) return std::nullopt;
    r.kl_std = std::stod(f[12], &pos);
    if (pos != f[12].size()) return std::nullopt;
    r.n_pairs = std::stoi(f[13]);
    r.n_bins = std::stoi(f[14]);
    r.n_repetitions = std::stoi(f[15]);
    r.master_seed = std::stoull(f[16]);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return r;
}

/// Reads a dataset file, skipping '#' comment lines and the header. A
/// malformed final line (truncated checkpoint) is tolerated silently; a
/// malformed interior line raises with its row number.
inline std::vector<ExpressibilityRecord> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open dataset");
  std::vector<ExpressibilityRecord> records;
  std::string line;
  long line_no = 0;
  std::optional<long> bad_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == kDatasetHeader) continue;
    if (bad_line)
      throw std::runtime_error(path + ": corrupted row at line " +
                               std::to_string(*bad_line));
    auto rec = record_from_csv(line);
    if (!rec) {
      bad_line = line_no;  // only fatal if any valid row follows
      continue;
    }
    records.push_back(*rec);
  }
  return records;
}

/// Computes one record (instantiate -> decompose -> count -> estimate).
inline ExpressibilityRecord compute_record(const Catalog& catalog,
                                           const GridEntry& entry,
                                           const SamplingConfig& config,
                                           int n_threads = 1) {
  const CircuitInstance inst = decompose(
      instantiate(find_template(catalog, entry.template_id), entry.n_qubits,
                  entry.n_layers));
  const GateCountVector counts = gate_counts(inst);
  const ExpressibilityEstimate est = estimate_expressibility(inst, config, n_threads);
  ExpressibilityRecord r;
  r.template_id = entry.template_id;
  r.n_qubits = entry.n_qubits;
  r.n_layers = entry.n_layers;
  for (std::size_t i = 0; i < kElementaryKinds.size(); ++i)
    r.counts[i] = counts[kElementaryKinds[i]];
  r.n_params = inst.n_params;
  r.kl_mean = est.mean_kl;
  r.kl_std = est.std_kl;
  r.n_pairs = config.n_pairs;
  r.n_bins = config.n_bins;
  r.n_repetitions = config.n_repetitions;
  r.master_seed = config.master_seed;
  return r;
}

/// Generates the dataset for a grid, appending rows in enumeration order and
/// flushing after each record. With resume, rows already present under the
/// same (key, config) are kept and skipped. Returns the number of newly
/// computed records.
inline long generate_dataset(
    const Catalog& catalog, const GridFilter& filter, const SamplingConfig& config,
    const std::string& out_path, bool resume, int n_threads = 1,
    const std::vector<std::string>& header_comments = {},
    const std::function<void(const GridEntry&, long, long)>& progress = nullptr) {
  config.validate();
  const std::vector<GridEntry> grid = enumerate_grid(catalog, filter);
  std::map<ExpressibilityRecord::Key, ExpressibilityRecord> done;
  if (resume) {
    std::ifstream probe(out_path);
    if (probe.good()) {
      probe.close();
      for (const auto& r : read_dataset(out_path)) done[r.key()] = r;
    }
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error(out_path + ": cannot open for writing");
  for (const std::string& c : header_comments) out << "# " << c << '\n';
  out << kDatasetHeader << '\n';
  long computed = 0;
  long index = 0;
  for (const GridEntry& entry : grid) {
    ++index;
    ExpressibilityRecord::Key key{entry.template_id, entry.n_qubits,
                                  entry.n_layers,    config.n_pairs,
                                  config.n_bins,     config.n_repetitions,
                                  config.master_seed};
    ExpressibilityRecord rec;
    auto it = done.find(key);
    if (it != done.end()) {
      rec = it->second;
    } else {
      rec = compute_record(catalog, entry, config, n_threads);
      ++computed;
    }
    out << record_to_csv(rec) << '\n';
    out.flush();
    if (progress) progress(entry, index, static_cast<long>(grid.size()));
  }
  return computed;
}

/// Per-feature min-max metadata for the 6-feature matrix.
struct FeatureScaling {
  std::array<double, 6> min{};
  std::array<double, 6> max{};
  std::array<bool, 6> constant{};  // zero-variance feature, scaled to 0

  double scale(int feature, double raw) const {
    const auto i = static_cast<std::size_t>(feature);
    if (constant[i]) return 0.0;
    return (raw - min[i]) / (max[i] - min[i]);
  }
};

struct FeatureMatrix {
  std::vector<std::array<double, 6>> rows;  // min-max scaled
  std::vector<double> targets;              // kl_mean
  FeatureScaling scaling;
};

inline std::array<long, 6> feature_counts(const ExpressibilityRecord& r) {
  // counts[] is in kElementaryKinds order: rx, ry, rz, frz, h, cnot, cz
  return {r.counts[0], r.counts[1], r.counts[2], r.counts[4], r.counts[5],
          r.counts[6]};
}

/// Min-max scaled 6-gate-count features (FRZ excluded) and kl_mean targets.
inline FeatureMatrix feature_matrix(const std::vector<ExpressibilityRecord>& records) {
  if (records.size() < 2)
    throw std::invalid_argument("feature_matrix: need at least 2 records");
  FeatureMatrix m;
  for (std::size_t j = 0; j < 6; ++j) {
    m.scaling.min[j] = std::numeric_limits<double>::infinity();
    m.scaling.max[j] = -std::numeric_limits<double>::infinity();
  }
  for (const auto& r : records) {
    const auto fc = feature_counts(r);
    for (std::size_t j = 0; j < 6; ++j) {
      m.scaling.min[j] = std::min(m.scaling.min[j], static_cast<double>(fc[j]));
      m.scaling.max[j] = std::max(m.scaling.max[j], static_cast<double>(fc[j]));
    }
  }
  for (std::size_t j = 0; j < 6; ++j)
    m.scaling.constant[j] = m.scaling.max[j] == m.scaling.min[j];
  for (const auto& r : records) {
    std::array<double, 6> row{};
    const auto fc = feature_counts(r);
    for (std::size_t j = 0; j < 6; ++j)
      row[j] = m.scaling.scale(static_cast<int>(j), static_cast<double>(fc[j]));
    m.rows.push_back(row);
    m.targets.push_back(r.kl_mean);
  }
  return m;
}

/// Sentinel for correlations undefined due to a zero-variance column.
inline constexpr double kUndefinedCorrelation = -2.0;

/// 7x7 Pearson correlation of elementary gate counts (kElementaryKinds order).
inline std::array<std::array<double, 7>, 7> correlation_matrix(
    const std::vector<ExpressibilityRecord>& records) {
  if (records.size() < 3)
    throw std::invalid_argument("correlation_matrix: need at least 3 records");
  const double n = static_cast<double>(records.size());
  std::array<double, 7> mean{};
  for (const auto& r : records)
    for (std::size_t j = 0; j < 7; ++j) mean[j] += static_cast<double>(r.counts[j]);
  for (double& m : mean) m /= n;
  std::array<std::array<double, 7>, 7> cov{};
  for (const auto& r : records)
    for (std::size_t a = 0; a < 7; ++a)
      for (std::size_t b = 0; b < 7; ++b)
        cov[a][b] += (static_cast<double>(r.counts[a]) - mean[a]) *
                     (static_cast<double>(r.counts[b]) - mean[b]);
  std::array<std::array<double, 7>, 7> corr{};
  for (std::size_t a = 0; a < 7; ++a)
    for (std::size_t b = 0; b < 7; ++b) {
      if (a == b) {
        corr[a][b] = 1.0;
      } else if (cov[a][a] == 0.0 || cov[b][b] == 0.0) {
        corr[a][b] = kUndefinedCorrelation;
      } else {
        corr[a][b] = cov[a][b] / std::sqrt(cov[a][a] * cov[b][b]);
      }
    }
  return corr;
}

/// kl_mean histogram per filter variant, for the 0-bin saturation comparison.
struct ExpressibilityHistogram {
  double bin_width = 0.0;
  std::vector<long> counts;  // bin i covers [i*w, (i+1)*w)
};

inline ExpressibilityHistogram expressibility_histogram(
    const std::vector<ExpressibilityRecord>& records, double bin_width) {
  if (bin_width <= 0.0)
    throw std::invalid_argument("expressibility_histogram: bin_width <= 0");
  ExpressibilityHistogram h;
  h.bin_width = bin_width;
  for (const auto& r : records) {
    const auto bin = static_cast<std::size_t>(r.kl_mean / bin_width);
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
  }
  return h;
}

/// Applies a grid filter to already-computed records (used for histogram
/// variants without resimulating).
inline std::vector<ExpressibilityRecord> filter_records(
    const std::vector<ExpressibilityRecord>& records, const GridFilter& filter) {
  filter.validate();
  std::vector<ExpressibilityRecord> out;
  for (const auto& r : records) {
    if (r.n_qubits < filter.qubit_lo || r.n_qubits > filter.qubit_hi) continue;
    if (r.n_layers < filter.layer_lo ||
        r.n_layers > std::min(filter.layer_hi, filter.max_layers))
      continue;
    if (filter.param_cap_enabled &&
        static_cast<double>(r.n_params) > std::pow(2.0, r.n_qubits))
      continue;
    out.push_back(r);
  }
  return out;
}

}  // namespace pqcxpr
