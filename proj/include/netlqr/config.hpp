#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netlqr/controller.hpp"
#include "netlqr/graph_coupling.hpp"
#include "netlqr/model.hpp"

namespace netlqr {

enum class RunMode { Decompose, Synthesize, Simulate, Verify, Consensus, Bench };
enum class LawKind { Closed, Open, Mixed };

const char* to_string(RunMode mode);
RunMode parse_mode(const std::string& text);

struct InitialState {
  std::optional<Matrix> explicit_value;  // d_x x n
  std::uint64_t seed = 1;
  double low = -1.0;
  double high = 1.0;

  // Explicit value, or uniform entries in [low, high) from the seed.
  Matrix resolve(Eigen::Index rows, int n) const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string source;
  RunMode mode = RunMode::Simulate;

  GraphSpec graph;
  std::string graph_description;
  // Set when the graph is a kron expansion; bench varies c over base.
  std::optional<GraphSpec> kron_base;
  int kron_c = 1;

  CouplingKind coupling = AdjacencyCoupling{};
  std::string coupling_name = "adjacency";
  CostCoupling cost;
  SystemModel model;

  Horizon horizon = Horizon::Finite;
  double T = 1.0;
  InitialState initial;

  double dt = 0.0;            // 0: T / 4000
  double riccati_step = 0.0;  // 0: T / 2000
  std::uint64_t seed = 1;
  std::size_t paths = 1000;
  std::size_t keep_paths = 1;
  double tolerance = 1e-5;
  Eigen::Index max_oracle_dimension = 400;
  std::size_t output_stride = 0;  // 0: about 400 rows per node
  Tolerances tolerances;

  LawKind law = LawKind::Closed;
  std::optional<InformationStructure> information;
  std::vector<int> bench_sizes{1, 2, 5, 10};

  std::string output = "out";
  bool svg = false;

  double effective_dt() const { return dt > 0.0 ? dt : T / 4000.0; }
  double effective_riccati_step() const { return riccati_step > 0.0 ? riccati_step : T / 2000.0; }
  Matrix coupling_matrix() const;
};

// Throws ParseError (with line numbers) on malformed input and
// ValidationError naming the offending field.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<text>");

// The resolved configuration, defaults included, as YAML.
std::string echo_config(const ExperimentConfig& config);

// Graph generators.
GraphSpec fig3_graph(double a, double b);
GraphSpec complete_graph(int n, double weight = 1.0, bool self_loops = false);
GraphSpec graph_from_matrix(const Matrix& W);
GraphSpec kron_graph(const GraphSpec& base, int c);

}  // namespace netlqr
