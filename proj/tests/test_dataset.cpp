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

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pqcxpr/dataset.hpp"

using namespace pqcxpr;

namespace {

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name) : path("pqcxpr_ds_" + name) {}
  ~TempPath() { std::remove(path.c_str()); }
};

/// Gate counts for every grid entry without any simulation.
std::vector<ExpressibilityRecord> count_only_records(const Catalog& catalog,
                                                     const GridFilter& filter) {
  std::vector<ExpressibilityRecord> records;
  for (const GridEntry& e : enumerate_grid(catalog, filter)) {
    const CircuitInstance inst =
        decompose(instantiate(find_template(catalog, e.template_id), e.n_qubits,
                              e.n_layers));
    const GateCountVector c = gate_counts(inst);
    ExpressibilityRecord r;
    r.template_id = e.template_id;
    r.n_qubits = e.n_qubits;
    r.n_layers = e.n_layers;
    for (std::size_t i = 0; i < kElementaryKinds.size(); ++i)
      r.counts[i] = c[kElementaryKinds[i]];
    r.n_params = inst.n_params;
    r.kl_mean = 0.0;
    records.push_back(r);
  }
  return records;
}

}  // namespace

TEST_CASE("unfiltered grid over qubits 2-18, layers 1-5 has 1615 entries") {
  const auto grid = enumerate_grid(default_catalog(), GridFilter{});
  CHECK(grid.size() == 1615);
}

TEST_CASE("degenerate single-cell ranges") {
  GridFilter f;
  f.qubit_hi = 2;
  f.layer_hi = 1;
  CHECK(enumerate_grid(default_catalog(), f).size() == 19);
}

TEST_CASE("grid ordering is (template, qubits, layers) ascending") {
  GridFilter f;
  f.qubit_hi = 3;
  f.layer_hi = 2;
  const auto grid = enumerate_grid(default_catalog(), f);
  REQUIRE(grid.size() == 19 * 2 * 2);
  CHECK(grid[0].template_id == 1);
  CHECK(grid[0].n_qubits == 2);
  CHECK(grid[0].n_layers == 1);
  CHECK(grid[1].n_layers == 2);
  CHECK(grid[2].n_qubits == 3);
  CHECK(grid[4].template_id == 2);
}

TEST_CASE("param cap at n=2 keeps only instances with at most 4 parameters") {
  GridFilter f;
  f.qubit_hi = 2;
  f.param_cap_enabled = true;
  const auto grid = enumerate_grid(default_catalog(), f);
  long expected = 0;
  for (const auto& tmpl : default_catalog())
    for (int layers = 1; layers <= 5; ++layers)
      if (instantiate(tmpl, 2, layers).n_params <= 4) ++expected;
  CHECK(static_cast<long>(grid.size()) == expected);
  CHECK(grid.size() < 19 * 5);
  for (const auto& e : grid) {
    const auto inst = instantiate(find_template(default_catalog(), e.template_id),
                                  e.n_qubits, e.n_layers);
    CHECK(inst.n_params <= 4);
  }
}

TEST_CASE("filter validation") {
  GridFilter f;
  f.qubit_hi = 1;
  CHECK_THROWS_AS(enumerate_grid(default_catalog(), f), std::invalid_argument);
}

TEST_CASE("record CSV round trip preserves doubles bitwise") {
  ExpressibilityRecord r;
  r.template_id = 7;
  r.n_qubits = 5;
  r.n_layers = 3;
  r.counts = {10, 20, 30, 6, 4, 40, 2};
  r.n_params = 33;
  r.kl_mean = 0.12345678901234567;
  r.kl_std = 1e-9;
  r.n_pairs = 20000;
  r.n_bins = 75;
  r.n_repetitions = 10;
  r.master_seed = 1234567890123456789ULL;
  const auto back = record_from_csv(record_to_csv(r));
  REQUIRE(back.has_value());
  CHECK(back->kl_mean == r.kl_mean);
  CHECK(back->kl_std == r.kl_std);
  CHECK(back->counts == r.counts);
  CHECK(back->master_seed == r.master_seed);
  CHECK(back->key() == r.key());
}

TEST_CASE("generate: empty-range grid produces a header-only file") {
  TempPath tmp("empty.csv");
  GridFilter f;
  f.qubit_lo = f.qubit_hi = 2;
  f.layer_lo = f.layer_hi = 1;
  // filter everything out via the param cap and a catalog slice
  Catalog one = {find_template(default_catalog(), 5)};  // 20 params at n=2 > 4
  f.param_cap_enabled = true;
  SamplingConfig config;
  config.n_pairs = 10;
  config.n_repetitions = 1;
  generate_dataset(one, f, config, tmp.path, false);
  CHECK(read_dataset(tmp.path).empty());
  std::ifstream in(tmp.path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == kDatasetHeader);
}

TEST_CASE("generate and resume") {
  TempPath tmp("resume.csv");
  GridFilter f;
  f.qubit_lo = f.qubit_hi = 2;
  f.layer_lo = 1;
  f.layer_hi = 2;
  SamplingConfig config;
  config.n_pairs = 200;
  config.n_repetitions = 2;
  config.master_seed = 3;
  Catalog small = {find_template(default_catalog(), 1),
                   find_template(default_catalog(), 9)};
  const long first = generate_dataset(small, f, config, tmp.path, false);
  CHECK(first == 4);
  const auto records = read_dataset(tmp.path);
  REQUIRE(records.size() == 4);

  SUBCASE("rerun with resume recomputes nothing and preserves rows bitwise") {
    std::ifstream in_before(tmp.path);
    std::stringstream before;
    before << in_before.rdbuf();
    const long second = generate_dataset(small, f, config, tmp.path, true);
    CHECK(second == 0);
    std::ifstream in_after(tmp.path);
    std::stringstream after;
    after << in_after.rdbuf();
    CHECK(before.str() == after.str());
  }

  SUBCASE("resume tolerates a truncated final line") {
    {
      std::ofstream app(tmp.path, std::ios::app);
      app << "3,2,1,4,0,4";  // torn write
    }
    const long second = generate_dataset(small, f, config, tmp.path, true);
    CHECK(second == 0);
    CHECK(read_dataset(tmp.path).size() == 4);
  }

  SUBCASE("corrupted interior row is reported with its line number") {
    {
      std::ofstream out(tmp.path, std::ios::trunc);
      out << kDatasetHeader << '\n';
      out << "not,a,row\n";
      out << record_to_csv(records[0]) << '\n';
    }
    CHECK_THROWS_WITH_AS(read_dataset(tmp.path), doctest::Contains("line 2"),
                         std::runtime_error);
  }

  SUBCASE("config change invalidates the checkpoint match") {
    SamplingConfig other = config;
    other.master_seed = 4;
    const long second = generate_dataset(small, f, other, tmp.path, true);
    CHECK(second == 4);
  }
}

TEST_CASE("generated records carry decomposed counts satisfying the identities") {
  TempPath tmp("counts.csv");
  GridFilter f;
  f.qubit_lo = f.qubit_hi = 3;
  f.layer_lo = f.layer_hi = 1;
  SamplingConfig config;
  config.n_pairs = 100;
  config.n_repetitions = 1;
  Catalog small = {find_template(default_catalog(), 4),
                   find_template(default_catalog(), 14)};
  generate_dataset(small, f, config, tmp.path, false);
  for (const auto& r : read_dataset(tmp.path)) {
    const CircuitInstance before =
        instantiate(find_template(default_catalog(), r.template_id), r.n_qubits,
                    r.n_layers);
    const GateCountVector b = gate_counts(before);
    // stored rows are post-decomposition
    CHECK(r.counts[3] == 2 * b[GateKind::CRX]);  // frz column
    CHECK(r.counts[5] ==
          b[GateKind::CNOT] + 2 * (b[GateKind::CRX] + b[GateKind::CRY] + b[GateKind::CRZ]));
    CHECK(r.n_params == before.n_params);
  }
}

TEST_CASE("feature matrix: min-max scaling, FRZ excluded") {
  std::vector<ExpressibilityRecord> records(3);
  records[0].counts = {1, 2, 3, 9, 0, 10, 5};
  records[1].counts = {2, 2, 6, 9, 0, 50, 10};
  records[2].counts = {3, 2, 9, 9, 0, 30, 15};
  records[0].kl_mean = 0.5;
  records[1].kl_mean = 0.25;
  records[2].kl_mean = 0.125;
  const FeatureMatrix m = feature_matrix(records);
  REQUIRE(m.rows.size() == 3);
  // feature order: rx, ry, rz, h, cnot, cz
  CHECK(m.rows[0][0] == 0.0);
  CHECK(m.rows[2][0] == 1.0);
  CHECK(m.rows[0][4] == 0.0);
  CHECK(m.rows[1][4] == 1.0);
  CHECK(m.rows[1][2] == doctest::Approx(0.5));
  // ry and h are constant -> flagged and scaled to 0
  CHECK(m.scaling.constant[1]);
  CHECK(m.scaling.constant[3]);
  CHECK(m.rows[1][1] == 0.0);
  // record at per-feature minima maps to the all-zero row
  for (double v : m.rows[0])
    CHECK((v == 0.0 || v == doctest::Approx(0.0)));
  CHECK(m.targets[1] == 0.25);
}

TEST_CASE("feature matrix needs at least two records") {
  std::vector<ExpressibilityRecord> one(1);
  CHECK_THROWS_AS(feature_matrix(one), std::invalid_argument);
}

TEST_CASE("correlation matrix: diagonal, symmetry, zero-variance sentinel") {
  std::vector<ExpressibilityRecord> records(4);
  records[0].counts = {1, 2, 5, 0, 1, 10, 3};
  records[1].counts = {2, 4, 4, 0, 1, 20, 1};
  records[2].counts = {3, 6, 3, 0, 1, 30, 4};
  records[3].counts = {4, 8, 2, 0, 1, 40, 1};
  const auto corr = correlation_matrix(records);
  for (std::size_t i = 0; i < 7; ++i) CHECK(corr[i][i] == 1.0);
  CHECK(corr[0][1] == doctest::Approx(1.0));   // rx vs ry perfectly correlated
  CHECK(corr[0][2] == doctest::Approx(-1.0));  // rx vs rz anti-correlated
  CHECK(corr[2][0] == corr[0][2]);
  CHECK(corr[0][3] == kUndefinedCorrelation);  // frz constant
  CHECK(corr[0][4] == kUndefinedCorrelation);  // h constant
  CHECK_THROWS_AS(correlation_matrix({records[0], records[1]}), std::invalid_argument);
}

TEST_CASE("RY-FRZ correlation over the full 1615-entry count table is ~0.99") {
  const auto records = count_only_records(default_catalog(), GridFilter{});
  REQUIRE(records.size() == 1615);
  const auto corr = correlation_matrix(records);
  // kElementaryKinds order: rx=0, ry=1, rz=2, frz=3
  CHECK(corr[1][3] >= 0.98);
  CHECK(corr[1][3] <= 1.00);
}

TEST_CASE("expressibility histogram basics") {
  std::vector<ExpressibilityRecord> records(5);
  for (auto& r : records) r.kl_mean = 0.0;
  const auto all_zero = expressibility_histogram(records, 0.1);
  REQUIRE(all_zero.counts.size() == 1);
  CHECK(all_zero.counts[0] == 5);

  CHECK(expressibility_histogram({}, 0.1).counts.empty());

  records[3].kl_mean = 0.25;
  records[4].kl_mean = 1.0;
  const auto h = expressibility_histogram(records, 0.1);
  REQUIRE(h.counts.size() == 11);
  CHECK(h.counts[0] == 3);
  CHECK(h.counts[2] == 1);
  CHECK(h.counts[10] == 1);
}

TEST_CASE("param-cap variant removes rows and cannot increase the 0-bin") {
  // cheap proxy for the saturation comparison on count-only records: the
  // capped variant is a subset, so every bin count is <= the uncapped one
  GridFilter uncapped;
  uncapped.qubit_hi = 6;
  const auto records = count_only_records(default_catalog(), uncapped);
  GridFilter capped = uncapped;
  capped.param_cap_enabled = true;
  const auto subset = filter_records(records, capped);
  CHECK(subset.size() < records.size());
  for (const auto& r : subset)
    CHECK(static_cast<double>(r.n_params) <= std::pow(2.0, r.n_qubits));
}
