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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pqcxpr/dataset.hpp"
#include "pqcxpr/lasso.hpp"
#include "pqcxpr/shap.hpp"

namespace {

using namespace pqcxpr;

constexpr int kExitRuntime = 1;  // I/O failures, invalid inputs at runtime
constexpr int kExitUsage = 2;    // bad arguments, unknown template ids
constexpr int kExitSchema = 3;   // malformed artifact files

constexpr const char* kFeatureNames[6] = {"rx", "ry", "rz", "h", "cnot", "cz"};

struct RunConfig {
  std::string catalog_path;  // empty means the builtin catalog
  int qubit_lo = 2, qubit_hi = 18;
  int layer_lo = 1, layer_hi = 5;
  int samples = 20000;
  int bins = 75;
  int reps = 10;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 means hardware concurrency
  std::string out;
  bool resume = false;
  bool param_cap = false;
  double test_fraction = 0.1;
  std::string model = "gbt";

  int resolved_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }

  Catalog load() const {
    return catalog_path.empty() ? default_catalog() : load_catalog(catalog_path);
  }

  GridFilter filter() const {
    GridFilter f;
    f.qubit_lo = qubit_lo;
    f.qubit_hi = qubit_hi;
    f.layer_lo = layer_lo;
    f.layer_hi = layer_hi;
    f.param_cap_enabled = param_cap;
    return f;
  }

  SamplingConfig sampling() const {
    SamplingConfig c;
    c.n_pairs = samples;
    c.n_bins = bins;
    c.n_repetitions = reps;
    c.master_seed = seed;
    return c;
  }

  /// Comment-header lines reproducing this configuration verbatim; no
  /// timestamps so reruns are byte-identical.
  std::vector<std::string> header_lines(const std::string& subcommand) const {
    std::vector<std::string> lines;
    lines.push_back("pqcxpr " PQCXPR_VERSION);
    std::ostringstream os;
    os << "cmd=" << subcommand << " catalog="
       << (catalog_path.empty() ? "<builtin>" : catalog_path) << " qubits="
       << qubit_lo << ".." << qubit_hi << " layers=" << layer_lo << ".."
       << layer_hi;
    lines.push_back(os.str());
    os.str("");
    os << "samples=" << samples << " bins=" << bins << " reps=" << reps
       << " seed=" << seed << " param_cap=" << (param_cap ? 1 : 0)
       << " test_fraction=" << test_fraction << " model=" << model;
    lines.push_back(os.str());
    return lines;
  }
};

/// Accepts "A..B", "A-B" or a single "A".
std::pair<int, int> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  const auto dash = text.find('-', 1);
  std::size_t sep = std::string::npos, sep_len = 0;
  if (dots != std::string::npos) {
    sep = dots;
    sep_len = 2;
  } else if (dash != std::string::npos) {
    sep = dash;
    sep_len = 1;
  }
  try {
    if (sep == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    return {std::stoi(text.substr(0, sep)), std::stoi(text.substr(sep + sep_len))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("range", "expected A..B or a single integer: " + text);
  }
}

void add_range_option(CLI::App* cmd, const char* name, const char* env,
                      int& lo, int& hi, const char* help) {
  cmd->add_option_function<std::string>(
         name,
         [&lo, &hi](const std::string& v) { std::tie(lo, hi) = parse_range(v); },
         help)
      ->envname(env);
}

void add_shared_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--catalog", config.catalog_path, "Catalog file (default: builtin)")
      ->envname("PQCXPR_CATALOG");
  add_range_option(cmd, "--qubits", "PQCXPR_QUBITS", config.qubit_lo,
                   config.qubit_hi, "Qubit range A..B");
  add_range_option(cmd, "--layers", "PQCXPR_LAYERS", config.layer_lo,
                   config.layer_hi, "Layer range A..B");
  cmd->add_option("--samples", config.samples, "Fidelity pairs per repetition (S)")
      ->envname("PQCXPR_SAMPLES");
  cmd->add_option("--bins", config.bins, "Histogram bins (B)")->envname("PQCXPR_BINS");
  cmd->add_option("--reps", config.reps, "Repetitions (R)")->envname("PQCXPR_REPS");
  cmd->add_option("--seed", config.seed, "Master seed")->envname("PQCXPR_SEED");
  cmd->add_option("--threads", config.threads, "Worker threads (0 = all cores)")
      ->envname("PQCXPR_THREADS");
  cmd->add_option("--out", config.out, "Output path or prefix")->envname("PQCXPR_OUT");
  cmd->add_flag("--resume", config.resume, "Keep completed dataset rows")
      ->envname("PQCXPR_RESUME");
  cmd->add_flag("--param-cap", config.param_cap,
                "Drop instances with more than 2^n parameters")
      ->envname("PQCXPR_PARAM_CAP");
  cmd->add_option("--test-fraction", config.test_fraction, "Hold-out fraction")
      ->envname("PQCXPR_TEST_FRACTION");
  cmd->add_option("--model", config.model, "Model kind")
      ->check(CLI::IsMember({"gbt", "lasso"}))
      ->envname("PQCXPR_MODEL");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

void write_header(std::ostream& out, const RunConfig& config,
                  const std::string& subcommand) {
  for (const std::string& line : config.header_lines(subcommand))
    out << "# " << line << '\n';
}

const CircuitTemplate& template_or_exit(const Catalog& catalog, int id) {
  try {
    return find_template(catalog, id);
  } catch (const CatalogError& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::exit(kExitUsage);
  }
}

// --- catalog ---

int cmd_catalog(const RunConfig& config, bool list_only, bool aggregate, int id) {
  const Catalog catalog = config.load();
  if (list_only) {
    for (const auto& t : catalog)
      std::cout << t.id << '\t' << t.description << '\n';
    return 0;
  }
  const int n = config.qubit_lo;
  const int layers = config.layer_lo;
  std::cout << "# gate counts at n=" << n << " L=" << layers << '\n';
  std::cout << "template,stage";
  for (GateKind k : kAllGateKinds) std::cout << ',' << gate_name(k);
  std::cout << ",n_params\n";
  GateCountVector agg_before, agg_after;
  auto print_row = [&](int tid, const char* stage, const GateCountVector& c,
                       int n_params) {
    std::cout << tid << ',' << stage;
    for (GateKind k : kAllGateKinds) std::cout << ',' << c[k];
    std::cout << ',' << n_params << '\n';
  };
  auto emit = [&](const CircuitTemplate& t) {
    const CircuitInstance inst = instantiate(t, n, layers);
    const GateCountVector before = gate_counts(inst);
    const GateCountVector after = gate_counts(decompose(inst));
    agg_before += before;
    agg_after += after;
    if (!aggregate) {
      print_row(t.id, "before", before, inst.n_params);
      print_row(t.id, "after", after, inst.n_params);
    }
  };
  if (id > 0) {
    emit(template_or_exit(catalog, id));
  } else {
    for (const auto& t : catalog) emit(t);
  }
  if (aggregate) {
    print_row(0, "before", agg_before, 0);
    print_row(0, "after", agg_after, 0);
  }
  return 0;
}

// --- decompose ---

int cmd_decompose(const RunConfig& config, int id, bool raw) {
  const Catalog catalog = config.load();
  const CircuitTemplate& tmpl = template_or_exit(catalog, id);
  CircuitInstance inst = instantiate(tmpl, config.qubit_lo, config.layer_lo);
  if (!raw) inst = decompose(inst);
  std::cout << "# template " << id << " n=" << inst.n_qubits << " L="
            << inst.n_layers << " gates=" << inst.gates.size() << " params="
            << inst.n_params << (raw ? " (before decomposition)" : "") << '\n';
  for (const GateOp& g : inst.gates) {
    std::cout << gate_name(g.kind) << " target=" << g.target;
    if (g.control >= 0) std::cout << " control=" << g.control;
    if (g.param_slot >= 0) {
      std::cout << " slot=" << g.param_slot;
      if (g.angle_scale != 1.0) std::cout << " scale=" << g.angle_scale;
    }
    if (g.kind == GateKind::FRZ) std::cout << " angle=" << g.fixed_angle;
    std::cout << '\n';
  }
  return 0;
}

// --- expr ---

int cmd_expr(const RunConfig& config, int id, bool probe, bool json) {
  CircuitInstance inst;
  if (probe) {
    inst.template_id = 0;
    inst.n_qubits = 1;
    inst.n_layers = 1;  // no gates: deterministic point mass at F = 1
  } else {
    const Catalog catalog = config.load();
    inst = decompose(instantiate(template_or_exit(catalog, id), config.qubit_lo,
                                 config.layer_lo));
  }
  const ExpressibilityEstimate est =
      estimate_expressibility(inst, config.sampling(), config.resolved_threads());
  std::cout << std::setprecision(17);
  if (json) {
    std::cout << "{\"template_id\":" << inst.template_id << ",\"n_qubits\":"
              << inst.n_qubits << ",\"n_layers\":" << inst.n_layers
              << ",\"kl_mean\":" << est.mean_kl << ",\"kl_std\":" << est.std_kl
              << ",\"per_repetition\":[";
    for (std::size_t i = 0; i < est.per_repetition.size(); ++i)
      std::cout << (i ? "," : "") << est.per_repetition[i];
    std::cout << "],\"S\":" << config.samples << ",\"B\":" << config.bins
              << ",\"R\":" << config.reps << ",\"seed\":" << config.seed << "}\n";
    return 0;
  }
  std::cout << "template " << inst.template_id << " n=" << inst.n_qubits
            << " L=" << inst.n_layers << " S=" << config.samples << " B="
            << config.bins << " R=" << config.reps << " seed=" << config.seed
            << '\n';
  std::cout << "kl_mean " << est.mean_kl << '\n';
  std::cout << "kl_std " << est.std_kl << '\n';
  for (std::size_t i = 0; i < est.per_repetition.size(); ++i)
    std::cout << "rep " << i << ' ' << est.per_repetition[i] << '\n';
  return 0;
}

// --- dataset ---

int cmd_dataset(const RunConfig& config) {
  if (config.out.empty()) {
    std::cerr << "error: dataset requires --out\n";
    return kExitUsage;
  }
  const Catalog catalog = config.load();
  const long computed = generate_dataset(
      catalog, config.filter(), config.sampling(), config.out, config.resume,
      config.resolved_threads(), config.header_lines("dataset"),
      [](const GridEntry& e, long index, long total) {
        std::cerr << "\r[" << index << '/' << total << "] template " << e.template_id
                  << " n=" << e.n_qubits << " L=" << e.n_layers << "   " << std::flush;
      });
  std::cerr << '\n';
  std::cout << "computed " << computed << " new records -> " << config.out << '\n';
  return 0;
}

// --- train ---

struct LoadedData {
  std::vector<ExpressibilityRecord> records;
  FeatureMatrix matrix;
};

LoadedData load_features(const std::string& path, const GridFilter& filter) {
  LoadedData d;
  d.records = filter_records(read_dataset(path), filter);
  if (d.records.size() < 20)
    throw std::runtime_error(path + ": insufficient data (" +
                             std::to_string(d.records.size()) + " rows)");
  d.matrix = feature_matrix(d.records);
  return d;
}

std::vector<double> row_vector(const std::array<double, 6>& a) {
  return {a.begin(), a.end()};
}

int cmd_train(const RunConfig& config, const std::string& data_path,
              const std::string& model_out, const GBTParams& gbt_params,
              double lambda, bool cv) {
  const LoadedData d = load_features(data_path, config.filter());
  const SplitIndices split =
      train_test_split(d.records.size(), config.test_fraction, config.seed);

  std::vector<std::vector<double>> xtr, xte;
  std::vector<double> ytr, yte;
  for (std::size_t i : split.train) {
    xtr.push_back(row_vector(d.matrix.rows[i]));
    ytr.push_back(d.matrix.targets[i]);
  }
  for (std::size_t i : split.test) {
    xte.push_back(row_vector(d.matrix.rows[i]));
    yte.push_back(d.matrix.targets[i]);
  }

  std::vector<double> pred_tr, pred_te;
  if (config.model == "gbt") {
    const GBTModel model = fit_gbt(xtr, ytr, gbt_params, d.matrix.scaling);
    for (const auto& r : xtr) pred_tr.push_back(model.predict(r));
    for (const auto& r : xte) pred_te.push_back(model.predict(r));
    if (!model_out.empty()) {
      std::ofstream out = open_out(model_out);
      write_header(out, config, "train");
      save_gbt(model, out);
    }
  } else {
    const LassoModel model =
        cv ? fit_lasso_cv(xtr, ytr,
                          {0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1},
                          config.seed)
           : fit_lasso(xtr, ytr, lambda);
    for (const auto& r : xtr) pred_tr.push_back(model.predict(r));
    for (const auto& r : xte) pred_te.push_back(model.predict(r));
    if (!model_out.empty()) {
      std::ofstream out = open_out(model_out);
      write_header(out, config, "train");
      save_lasso(model, out);
    }
  }
  std::cout << std::setprecision(6);
  std::cout << "model " << config.model << '\n';
  std::cout << "rows " << d.records.size() << " train " << xtr.size() << " test "
            << xte.size() << '\n';
  std::cout << "r2_train " << r2_score(pred_tr, ytr) << '\n';
  std::cout << "r2_test " << r2_score(pred_te, yte) << '\n';
  if (!model_out.empty()) std::cout << "model_file " << model_out << '\n';
  return 0;
}

// --- explain ---

int cmd_explain(const RunConfig& config, const std::string& data_path,
                const std::string& model_path, bool self_check) {
  const LoadedData d = load_features(data_path, config.filter());
  GBTModel model;
  try {
    model = load_gbt(model_path);
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  }

  std::vector<ShapExplanation> explanations;
  std::vector<std::vector<double>> scaled, raw;
  double max_residual = 0.0;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const std::vector<double> x = row_vector(d.matrix.rows[i]);
    ShapExplanation ex = tree_shap(model, x);
    max_residual = std::max(max_residual, std::abs(ex.total() - model.predict(x)));
    explanations.push_back(std::move(ex));
    scaled.push_back(x);
    const auto fc = feature_counts(d.records[i]);
    raw.push_back(std::vector<double>(fc.begin(), fc.end()));
  }
  const ShapSummary summary = shap_summary(explanations, scaled, raw);

  const std::string prefix = config.out.empty() ? "shap" : config.out;
  {
    std::ofstream out = open_out(prefix + "_beeswarm.csv");
    write_header(out, config, "explain");
    out << std::setprecision(17) << "feature,normalized_value,phi\n";
    for (std::size_t j = 0; j < 6; ++j)
      for (const auto& p : summary.points[j])
        out << kFeatureNames[j] << ',' << p[0] << ',' << p[2] << '\n';
  }
  {
    std::ofstream out = open_out(prefix + "_importance.csv");
    write_header(out, config, "explain");
    out << std::setprecision(17) << "feature,mean_abs_phi,mean_phi\n";
    for (std::size_t j = 0; j < 6; ++j)
      out << kFeatureNames[j] << ',' << summary.mean_abs_phi[j] << ','
          << summary.mean_phi[j] << '\n';
  }
  for (std::size_t j = 0; j < 6; ++j) {
    std::ofstream out =
        open_out(prefix + "_dependence_" + kFeatureNames[j] + ".csv");
    write_header(out, config, "explain");
    out << std::setprecision(17) << "gate_count,phi\n";
    for (const auto& p : summary.points[j]) out << p[1] << ',' << p[2] << '\n';
  }
  std::cout << "explained " << d.records.size() << " instances -> " << prefix
            << "_*.csv\n";
  if (self_check) {
    std::cout << std::setprecision(3) << "max_local_accuracy_residual "
              << max_residual << '\n';
    if (max_residual > 1e-9) return kExitRuntime;
  }
  return 0;
}

// --- report ---

int cmd_report(const RunConfig& config, const std::string& data_path,
               double hist_bin_width) {
  const std::vector<ExpressibilityRecord> records =
      filter_records(read_dataset(data_path), config.filter());
  if (records.size() < 3) {
    std::cerr << "error: " << data_path << ": insufficient data ("
              << records.size() << " rows)\n";
    return kExitRuntime;
  }
  const std::string prefix = config.out.empty() ? "report" : config.out;
  {
    const auto corr = correlation_matrix(records);
    std::ofstream out = open_out(prefix + "_correlation.csv");
    write_header(out, config, "report");
    out << std::setprecision(6) << "gate";
    for (GateKind k : kElementaryKinds) out << ',' << gate_name(k);
    out << '\n';
    for (std::size_t a = 0; a < 7; ++a) {
      out << gate_name(kElementaryKinds[a]);
      for (std::size_t b = 0; b < 7; ++b) out << ',' << corr[a][b];
      out << '\n';
    }
  }
  auto write_histogram = [&](const std::string& name,
                             const std::vector<ExpressibilityRecord>& rs) {
    const ExpressibilityHistogram h = expressibility_histogram(rs, hist_bin_width);
    std::ofstream out = open_out(prefix + "_histogram_" + name + ".csv");
    write_header(out, config, "report");
    out << std::setprecision(17) << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      out << static_cast<double>(i) * h.bin_width << ','
          << static_cast<double>(i + 1) * h.bin_width << ',' << h.counts[i]
          << '\n';
  };
  write_histogram("all", records);
  GridFilter capped = config.filter();
  capped.param_cap_enabled = true;
  write_histogram("param_cap", filter_records(records, capped));
  std::cout << "report -> " << prefix << "_*.csv (" << records.size()
            << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expressibility analysis of parameterized quantum circuits"};
  app.set_version_flag("--version", PQCXPR_VERSION);
  app.require_subcommand(1);

  RunConfig config;
  config.qubit_lo = config.qubit_hi = 4;  // single-instance default shape
  config.layer_lo = config.layer_hi = 1;

  int template_id = 0;
  bool list_only = false, aggregate = false, raw = false;
  bool probe = false, json = false, self_check = false, cv = false;
  std::string data_path, model_path;
  GBTParams gbt_params;
  double lambda = 1e-3;
  double hist_bin_width = 0.05;

  CLI::App* c_catalog = app.add_subcommand("catalog", "List templates and gate counts");
  add_shared_options(c_catalog, config);
  c_catalog->add_flag("--list", list_only, "One line per template");
  c_catalog->add_flag("--aggregate", aggregate, "Sum counts over all templates");
  c_catalog->add_option("--id", template_id, "Restrict to one template");

  CLI::App* c_decompose = app.add_subcommand("decompose", "Print an instance gate list");
  add_shared_options(c_decompose, config);
  c_decompose->add_option("--id", template_id, "Template id")->required();
  c_decompose->add_flag("--raw", raw, "Skip controlled-rotation decomposition");

  CLI::App* c_expr = app.add_subcommand("expr", "Estimate KL expressibility");
  add_shared_options(c_expr, config);
  c_expr->add_option("--id", template_id, "Template id");
  c_expr->add_flag("--probe", probe,
                   "Use the parameterless 1-qubit probe (point mass at F=1)");
  c_expr->add_flag("--json", json, "Machine-readable output");

  CLI::App* c_dataset = app.add_subcommand("dataset", "Generate the instance-grid dataset");
  add_shared_options(c_dataset, config);

  CLI::App* c_train = app.add_subcommand("train", "Fit a regressor on gate-count features");
  add_shared_options(c_train, config);
  c_train->add_option("--in", data_path, "Dataset CSV")->required();
  c_train->add_option("--model-out", model_path, "Model file to write");
  c_train->add_option("--rounds", gbt_params.rounds, "Boosting rounds");
  c_train->add_option("--learning-rate", gbt_params.learning_rate, "Shrinkage");
  c_train->add_option("--max-leaves", gbt_params.max_leaves, "Leaves per tree");
  c_train->add_option("--min-samples-leaf", gbt_params.min_samples_leaf,
                      "Minimum samples per leaf");
  c_train->add_option("--lambda", lambda, "LASSO penalty");
  c_train->add_flag("--cv", cv, "Select lambda by 5-fold cross-validation");

  CLI::App* c_explain = app.add_subcommand("explain", "Export SHAP attributions");
  add_shared_options(c_explain, config);
  c_explain->add_option("--in", data_path, "Dataset CSV")->required();
  c_explain->add_option("--model-file", model_path, "Trained tree model")->required();
  c_explain->add_flag("--self-check", self_check,
                      "Verify attributions sum to predictions");

  CLI::App* c_report = app.add_subcommand("report", "Correlation and histogram tables");
  add_shared_options(c_report, config);
  c_report->add_option("--in", data_path, "Dataset CSV")->required();
  c_report->add_option("--hist-bin-width", hist_bin_width,
                       "Expressibility histogram bin width");

  // dataset/train/report default to the full grid shape unless overridden
  for (CLI::App* wide : {c_dataset, c_train, c_explain, c_report}) {
    wide->parse_complete_callback([&config, wide] {
      if (wide->count("--qubits") == 0) {
        config.qubit_lo = 2;
        config.qubit_hi = 18;
      }
      if (wide->count("--layers") == 0) {
        config.layer_lo = 1;
        config.layer_hi = 5;
      }
    });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_catalog->parsed()) return cmd_catalog(config, list_only, aggregate, template_id);
    if (c_decompose->parsed()) return cmd_decompose(config, template_id, raw);
    if (c_expr->parsed()) {
      if (!probe && template_id <= 0) {
        std::cerr << "error: expr requires --id or --probe\n";
        return kExitUsage;
      }
      return cmd_expr(config, template_id, probe, json);
    }
    if (c_dataset->parsed()) return cmd_dataset(config);
    if (c_train->parsed())
      return cmd_train(config, data_path, model_path, gbt_params, lambda, cv);
    if (c_explain->parsed())
      return cmd_explain(config, data_path, model_path, self_check);
    if (c_report->parsed()) return cmd_report(config, data_path, hist_bin_width);
  } catch (const CatalogError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
