#include "netlqr/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "netlqr/errors.hpp"

namespace netlqr {

namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

[[noreturn]] void invalid(const YAML::Node& node, const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::ValidationError, "field '" + field + "'" + where(node) + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown(const YAML::Node& node, const std::string& path,
                    const std::set<std::string>& allowed) {
  if (!node.IsMap()) invalid(node, path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) invalid(kv.first, join(path, key), "unknown field");
  }
}

YAML::Node require(const YAML::Node& node, const std::string& key, const std::string& path) {
  YAML::Node child = node[key];
  if (!child) {
    throw Error(ErrorCode::ValidationError,
                "missing required field '" + join(path, key) + "'" + where(node));
  }
  return child;
}

double as_double(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) invalid(node, field, "expected a number");
  try {
    const double v = node.as<double>();
    if (!std::isfinite(v)) invalid(node, field, "must be finite");
    return v;
  } catch (const YAML::BadConversion&) {
    invalid(node, field, "expected a number, got '" + node.Scalar() + "'");
  }
}

long long as_integer(const YAML::Node& node, const std::string& field) {
  const double v = as_double(node, field);
  if (v != std::floor(v)) invalid(node, field, "expected an integer");
  return static_cast<long long>(v);
}

std::string as_string(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) invalid(node, field, "expected a string");
  return node.Scalar();
}

bool as_bool(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<bool>();
  } catch (const YAML::BadConversion&) {
    invalid(node, field, "expected true or false");
  }
}

// Scalar -> 1x1, flat list -> column, list of lists -> rows.
Matrix as_matrix(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar()) return Matrix::Constant(1, 1, as_double(node, field));
  if (!node.IsSequence() || node.size() == 0) invalid(node, field, "expected a number or row list");
  const bool rows = node[0].IsSequence();
  if (!rows) {
    Matrix m(static_cast<Eigen::Index>(node.size()), 1);
    for (std::size_t i = 0; i < node.size(); ++i) {
      m(static_cast<Eigen::Index>(i), 0) = as_double(node[i], field);
    }
    return m;
  }
  const std::size_t cols = node[0].size();
  if (cols == 0) invalid(node, field, "empty row");
  Matrix m(static_cast<Eigen::Index>(node.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < node.size(); ++i) {
    const YAML::Node row = node[i];
    if (!row.IsSequence() || row.size() != cols) invalid(row, field, "rows must have equal length");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = as_double(row[j], field);
    }
  }
  return m;
}

WeightFunction parse_weight(const YAML::Node& node, const std::string& field) {
  if (node.IsSequence()) {
    Polynomial p;
    for (const auto& c : node) p.coefficients.push_back(as_double(c, field));
    return p;
  }
  if (node.IsScalar()) {
    const std::string name = node.Scalar();
    if (name == "identity") return Polynomial{{1.0}};
    if (name == "square") return Polynomial{{0.0, 0.0, 1.0}};
    if (name == "shifted_square") return Polynomial{{1.0, -2.0, 1.0}};
    return Polynomial{{as_double(node, field)}};
  }
  reject_unknown(node, field, {"polynomial", "exponential", "inverse"});
  if (node["polynomial"]) return parse_weight(node["polynomial"], join(field, "polynomial"));
  if (node["exponential"]) return Exponential{as_double(node["exponential"], join(field, "exponential"))};
  if (node["inverse"]) return Inverse{as_double(node["inverse"], join(field, "inverse"))};
  invalid(node, field, "expected polynomial, exponential or inverse");
}

GraphSpec parse_graph(const YAML::Node& node, const std::string& path, ExperimentConfig* top,
                      std::string& description) {
  if (!node.IsMap()) invalid(node, path, "expected a mapping");
  const std::string gen = as_string(require(node, "generator", path), join(path, "generator"));
  if (gen == "fig3") {
    reject_unknown(node, path, {"generator", "a", "b"});
    const double a = as_double(require(node, "a", path), join(path, "a"));
    const double b = as_double(require(node, "b", path), join(path, "b"));
    std::ostringstream os;
    os << "fig3(a=" << a << ", b=" << b << ")";
    description = os.str();
    return fig3_graph(a, b);
  }
  if (gen == "kron") {
    reject_unknown(node, path, {"generator", "base", "c"});
    std::string inner;
    GraphSpec base = parse_graph(require(node, "base", path), join(path, "base"), nullptr, inner);
    const long long c = as_integer(require(node, "c", path), join(path, "c"));
    if (c < 1) invalid(node["c"], join(path, "c"), "must be >= 1");
    description = "kron(" + inner + ", " + std::to_string(c) + ")";
    if (top) {
      top->kron_base = base;
      top->kron_c = static_cast<int>(c);
    }
    return kron_graph(base, static_cast<int>(c));
  }
  if (gen == "complete") {
    reject_unknown(node, path, {"generator", "n", "weight", "self_loops"});
    const long long n = as_integer(require(node, "n", path), join(path, "n"));
    if (n < 1) invalid(node["n"], join(path, "n"), "must be >= 1");
    const double w = node["weight"] ? as_double(node["weight"], join(path, "weight")) : 1.0;
    const bool loops = node["self_loops"] && as_bool(node["self_loops"], join(path, "self_loops"));
    std::ostringstream os;
    os << "complete(n=" << n << ", weight=" << w << (loops ? ", self_loops" : "") << ")";
    description = os.str();
    return complete_graph(static_cast<int>(n), w, loops);
  }
  if (gen == "edges") {
    reject_unknown(node, path, {"generator", "n", "edges"});
    GraphSpec g;
    const long long n = as_integer(require(node, "n", path), join(path, "n"));
    if (n < 1) invalid(node["n"], join(path, "n"), "must be >= 1");
    g.n = static_cast<int>(n);
    const YAML::Node edges = require(node, "edges", path);
    if (!edges.IsSequence()) invalid(edges, join(path, "edges"), "expected a list of [i, j, w]");
    for (const auto& e : edges) {
      if (!e.IsSequence() || e.size() < 2 || e.size() > 3) {
        invalid(e, join(path, "edges"), "each edge is [i, j] or [i, j, weight]");
      }
      Edge edge;
      edge.i = static_cast<int>(as_integer(e[0], join(path, "edges")));
      edge.j = static_cast<int>(as_integer(e[1], join(path, "edges")));
      edge.weight = e.size() == 3 ? as_double(e[2], join(path, "edges")) : 1.0;
      if (edge.i < 1 || edge.i > g.n || edge.j < 1 || edge.j > g.n) {
        invalid(e, join(path, "edges"), "node index outside 1.." + std::to_string(g.n));
      }
      g.edges.push_back(edge);
    }
    description = "edges(n=" + std::to_string(g.n) + ", m=" + std::to_string(g.edges.size()) + ")";
    return g;
  }
  if (gen == "matrix") {
    reject_unknown(node, path, {"generator", "matrix"});
    const Matrix W = as_matrix(require(node, "matrix", path), join(path, "matrix"));
    if (W.rows() != W.cols() || !is_symmetric(W, 1e-12)) {
      invalid(node["matrix"], join(path, "matrix"), "weight matrix must be square and symmetric");
    }
    description = "matrix(n=" + std::to_string(W.rows()) + ")";
    return graph_from_matrix(W);
  }
  invalid(node["generator"], join(path, "generator"),
          "unknown generator '" + gen + "' (fig3, kron, complete, edges, matrix)");
}

void emit_matrix(YAML::Emitter& out, const Matrix& m) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << m(i, j);
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

void emit_weight(YAML::Emitter& out, const WeightFunction& f) {
  out << YAML::BeginMap;
  if (const auto* p = std::get_if<Polynomial>(&f)) {
    out << YAML::Key << "polynomial" << YAML::Value << YAML::Flow << p->coefficients;
  } else if (const auto* e = std::get_if<Exponential>(&f)) {
    out << YAML::Key << "exponential" << YAML::Value << e->gamma;
  } else {
    out << YAML::Key << "inverse" << YAML::Value << std::get<Inverse>(f).gamma;
  }
  out << YAML::EndMap;
}

ExperimentConfig parse_root(const YAML::Node& root, const std::string& source) {
  ExperimentConfig c;
  c.source = source;
  reject_unknown(root, "", {"name", "mode", "graph", "coupling", "cost", "model", "horizon",
                            "initial_state", "solver", "control", "bench", "output"});
  if (root["name"]) c.name = as_string(root["name"], "name");
  if (root["mode"]) {
    try {
      c.mode = parse_mode(as_string(root["mode"], "mode"));
    } catch (const Error& e) {
      invalid(root["mode"], "mode", e.what());
    }
  }
  c.graph = parse_graph(require(root, "graph", ""), "graph", &c, c.graph_description);

  if (const YAML::Node k = root["coupling"]) {
    if (k.IsScalar()) {
      c.coupling_name = k.Scalar();
      if (c.coupling_name == "adjacency") c.coupling = AdjacencyCoupling{};
      else if (c.coupling_name == "laplacian") c.coupling = LaplacianCoupling{};
      else invalid(k, "coupling", "expected adjacency, laplacian or {custom: matrix}");
    } else {
      reject_unknown(k, "coupling", {"custom"});
      c.coupling_name = "custom";
      c.coupling = CustomCoupling{as_matrix(require(k, "custom", "coupling"), "coupling.custom")};
    }
  }
  if (c.mode == RunMode::Consensus) {
    c.coupling = LaplacianCoupling{};
    c.coupling_name = "laplacian";
  }

  if (const YAML::Node cost = root["cost"]) {
    reject_unknown(cost, "cost", {"state", "control"});
    if (cost["state"]) c.cost.state = parse_weight(cost["state"], "cost.state");
    if (cost["control"]) c.cost.control = parse_weight(cost["control"], "cost.control");
  }

  const YAML::Node model = require(root, "model", "");
  reject_unknown(model, "model", {"A", "B", "D", "E", "F", "Q", "R", "QT"});
  auto mat = [&](const char* key, bool required) -> Matrix {
    if (required) return as_matrix(require(model, key, "model"), std::string("model.") + key);
    if (model[key]) return as_matrix(model[key], std::string("model.") + key);
    return Matrix();
  };
  const bool consensus = c.mode == RunMode::Consensus;
  c.model.Q = mat("Q", true);
  c.model.R = mat("R", true);
  c.model.A = mat("A", !consensus);
  c.model.B = mat("B", !consensus);
  c.model.D = mat("D", false);
  c.model.E = mat("E", false);
  c.model.F = mat("F", false);
  c.model.QT = mat("QT", false);
  if (consensus) {
    c.model.A = Matrix::Zero(c.model.Q.rows(), c.model.Q.rows());
    c.model.B = Matrix::Identity(c.model.Q.rows(), c.model.Q.rows());
    c.model.D = Matrix();
    c.model.E = Matrix();
  }
  c.model.normalize();
  if (consensus) c.cost = {Polynomial{{0.0, 0.0, 1.0}}, Polynomial{{1.0}}};

  if (const YAML::Node h = root["horizon"]) {
    reject_unknown(h, "horizon", {"kind", "T"});
    const std::string kind = h["kind"] ? as_string(h["kind"], "horizon.kind") : "finite";
    if (kind == "finite") c.horizon = Horizon::Finite;
    else if (kind == "infinite") c.horizon = Horizon::Infinite;
    else invalid(h["kind"], "horizon.kind", "expected finite or infinite");
    if (h["T"]) c.T = as_double(h["T"], "horizon.T");
    else if (!consensus && c.horizon == Horizon::Finite)
      invalid(h, "horizon.T", "missing required field 'horizon.T'");
    if (!(c.T > 0.0)) invalid(h["T"], "horizon.T", "must be positive");
  } else if (!consensus) {
    throw Error(ErrorCode::ValidationError, "missing required field 'horizon'");
  } else {
    c.T = 0.0;
  }

  if (const YAML::Node x0 = root["initial_state"]) {
    if (x0.IsMap()) {
      reject_unknown(x0, "initial_state", {"random"});
      const YAML::Node r = require(x0, "random", "initial_state");
      reject_unknown(r, "initial_state.random", {"seed", "low", "high"});
      if (r["seed"]) c.initial.seed = static_cast<std::uint64_t>(as_integer(r["seed"], "initial_state.random.seed"));
      if (r["low"]) c.initial.low = as_double(r["low"], "initial_state.random.low");
      if (r["high"]) c.initial.high = as_double(r["high"], "initial_state.random.high");
      if (!(c.initial.low < c.initial.high)) invalid(r, "initial_state.random", "need low < high");
    } else {
      c.initial.explicit_value = as_matrix(x0, "initial_state");
      require_shape(*c.initial.explicit_value, c.model.state_dim(), c.graph.n, "initial_state");
    }
  }

  if (const YAML::Node s = root["solver"]) {
    reject_unknown(s, "solver", {"dt", "riccati_step", "seed", "paths", "keep_paths", "tolerance",
                                 "max_oracle_dimension", "output_stride", "tolerances"});
    if (s["dt"]) c.dt = as_double(s["dt"], "solver.dt");
    if (s["riccati_step"]) c.riccati_step = as_double(s["riccati_step"], "solver.riccati_step");
    if (s["seed"]) c.seed = static_cast<std::uint64_t>(as_integer(s["seed"], "solver.seed"));
    auto count = [&](const char* key) {
      const long long v = as_integer(s[key], std::string("solver.") + key);
      if (v < 0) invalid(s[key], std::string("solver.") + key, "must be >= 0");
      return static_cast<std::size_t>(v);
    };
    if (s["paths"]) c.paths = count("paths");
    if (s["keep_paths"]) c.keep_paths = count("keep_paths");
    if (s["output_stride"]) c.output_stride = count("output_stride");
    if (s["tolerance"]) c.tolerance = as_double(s["tolerance"], "solver.tolerance");
    if (s["max_oracle_dimension"]) {
      c.max_oracle_dimension =
          static_cast<Eigen::Index>(as_integer(s["max_oracle_dimension"], "solver.max_oracle_dimension"));
    }
    if (const YAML::Node t = s["tolerances"]) {
      reject_unknown(t, "solver.tolerances", {"rank_tol", "group_tol", "sym_tol", "orth_tol",
                                              "pd_tol", "pbh_tol", "pbh_margin"});
      auto tol = [&](const char* key, double& slot) {
        if (t[key]) slot = as_double(t[key], std::string("solver.tolerances.") + key);
      };
      tol("rank_tol", c.tolerances.rank_tol);
      tol("group_tol", c.tolerances.group_tol);
      tol("sym_tol", c.tolerances.sym_tol);
      tol("orth_tol", c.tolerances.orth_tol);
      tol("pd_tol", c.tolerances.pd_tol);
      tol("pbh_tol", c.tolerances.pbh_tol);
      tol("pbh_margin", c.tolerances.pbh_margin);
    }
    if (c.dt < 0.0 || c.riccati_step < 0.0) invalid(s, "solver", "steps must be positive");
  }

  if (const YAML::Node k = root["control"]) {
    reject_unknown(k, "control", {"law", "information"});
    if (k["law"]) {
      const std::string law = as_string(k["law"], "control.law");
      if (law == "closed") c.law = LawKind::Closed;
      else if (law == "open") c.law = LawKind::Open;
      else if (law == "mixed") c.law = LawKind::Mixed;
      else invalid(k["law"], "control.law", "expected closed, open or mixed");
    }
    if (k["information"]) {
      const std::string info = as_string(k["information"], "control.information");
      if (info == "global") c.information = InformationStructure::GlobalState;
      else if (info == "local") c.information = InformationStructure::LocalEigenstates;
      else if (info == "aggregates") c.information = InformationStructure::Aggregates;
      else invalid(k["information"], "control.information", "expected global, local or aggregates");
    }
  }
  if (c.law != LawKind::Closed && !c.information) c.information = InformationStructure::GlobalState;

  if (const YAML::Node b = root["bench"]) {
    reject_unknown(b, "bench", {"sizes"});
    if (const YAML::Node sizes = b["sizes"]) {
      c.bench_sizes.clear();
      if (!sizes.IsSequence()) invalid(sizes, "bench.sizes", "expected a list");
      for (const auto& v : sizes) {
        const long long k = as_integer(v, "bench.sizes");
        if (k < 1) invalid(v, "bench.sizes", "sizes must be >= 1");
        c.bench_sizes.push_back(static_cast<int>(k));
      }
    }
  }
  if (root["output"]) c.output = as_string(root["output"], "output");
  return c;
}

}  // namespace

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Decompose: return "decompose";
    case RunMode::Synthesize: return "synthesize";
    case RunMode::Simulate: return "simulate";
    case RunMode::Verify: return "verify";
    case RunMode::Consensus: return "consensus";
    case RunMode::Bench: return "bench";
  }
  return "?";
}

RunMode parse_mode(const std::string& text) {
  for (RunMode m : {RunMode::Decompose, RunMode::Synthesize, RunMode::Simulate, RunMode::Verify,
                    RunMode::Consensus, RunMode::Bench}) {
    if (text == to_string(m)) return m;
  }
  throw Error(ErrorCode::ValidationError, "unknown mode '" + text + "'");
}

Matrix InitialState::resolve(Eigen::Index rows, int n) const {
  if (explicit_value) {
    require_shape(*explicit_value, rows, n, "initial_state");
    return *explicit_value;
  }
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> dist(low, high);
  Matrix x(rows, n);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < rows; ++r) x(r, i) = dist(engine);
  }
  return x;
}

Matrix ExperimentConfig::coupling_matrix() const { return build_coupling(graph, coupling, tolerances); }

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ParseError, source + ":" + std::to_string(e.mark.line + 1) + ":" +
                                           std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw Error(ErrorCode::ParseError, source + ": empty configuration");
  try {
    return parse_root(root, source);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ParseError, source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open configuration '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string echo_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;
  out << YAML::Key << "mode" << YAML::Value << to_string(c.mode);
  out << YAML::Key << "graph" << YAML::Value << YAML::Comment(c.graph_description)
      << YAML::BeginMap;
  out << YAML::Key << "generator" << YAML::Value << "edges";
  out << YAML::Key << "n" << YAML::Value << c.graph.n;
  out << YAML::Key << "edges" << YAML::Value << YAML::BeginSeq;
  for (const Edge& e : c.graph.edges) {
    out << YAML::Flow << YAML::BeginSeq << e.i << e.j << e.weight << YAML::EndSeq;
  }
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "coupling" << YAML::Value;
  if (const auto* custom = std::get_if<CustomCoupling>(&c.coupling)) {
    out << YAML::BeginMap << YAML::Key << "custom" << YAML::Value;
    emit_matrix(out, custom->matrix);
    out << YAML::EndMap;
  } else {
    out << c.coupling_name;
  }
  out << YAML::Key << "cost" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "state" << YAML::Value;
  emit_weight(out, c.cost.state);
  out << YAML::Key << "control" << YAML::Value;
  emit_weight(out, c.cost.control);
  out << YAML::EndMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  const std::pair<const char*, const Matrix*> mats[] = {
      {"A", &c.model.A}, {"B", &c.model.B}, {"D", &c.model.D}, {"E", &c.model.E},
      {"F", &c.model.F}, {"Q", &c.model.Q}, {"R", &c.model.R}, {"QT", &c.model.QT}};
  for (const auto& [key, m] : mats) {
    out << YAML::Key << key << YAML::Value;
    emit_matrix(out, *m);
  }
  out << YAML::EndMap;
  out << YAML::Key << "horizon" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value
      << (c.horizon == Horizon::Finite ? "finite" : "infinite");
  out << YAML::Key << "T" << YAML::Value << c.T << YAML::EndMap;
  out << YAML::Key << "initial_state" << YAML::Value;
  if (c.initial.explicit_value) {
    emit_matrix(out, *c.initial.explicit_value);
  } else {
    out << YAML::BeginMap << YAML::Key << "random" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "seed" << YAML::Value << c.initial.seed;
    out << YAML::Key << "low" << YAML::Value << c.initial.low;
    out << YAML::Key << "high" << YAML::Value << c.initial.high;
    out << YAML::EndMap << YAML::EndMap;
  }
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << c.effective_dt();
  out << YAML::Key << "riccati_step" << YAML::Value << c.effective_riccati_step();
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "paths" << YAML::Value << c.paths;
  out << YAML::Key << "keep_paths" << YAML::Value << c.keep_paths;
  out << YAML::Key << "tolerance" << YAML::Value << c.tolerance;
  out << YAML::Key << "max_oracle_dimension" << YAML::Value << c.max_oracle_dimension;
  out << YAML::Key << "output_stride" << YAML::Value << c.output_stride;
  out << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "rank_tol" << YAML::Value << c.tolerances.rank_tol;
  out << YAML::Key << "group_tol" << YAML::Value << c.tolerances.group_tol;
  out << YAML::Key << "sym_tol" << YAML::Value << c.tolerances.sym_tol;
  out << YAML::Key << "orth_tol" << YAML::Value << c.tolerances.orth_tol;
  out << YAML::Key << "pd_tol" << YAML::Value << c.tolerances.pd_tol;
  out << YAML::Key << "pbh_tol" << YAML::Value << c.tolerances.pbh_tol;
  out << YAML::Key << "pbh_margin" << YAML::Value << c.tolerances.pbh_margin;
  out << YAML::EndMap << YAML::EndMap;
  out << YAML::Key << "control" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "law" << YAML::Value
      << (c.law == LawKind::Closed ? "closed" : c.law == LawKind::Open ? "open" : "mixed");
  if (c.information) {
    out << YAML::Key << "information" << YAML::Value
        << (*c.information == InformationStructure::GlobalState        ? "global"
            : *c.information == InformationStructure::LocalEigenstates ? "local"
                                                                      : "aggregates");
  }
  out << YAML::EndMap;
  out << YAML::Key << "bench" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "sizes" << YAML::Value << YAML::Flow << c.bench_sizes << YAML::EndMap;
  out << YAML::Key << "output" << YAML::Value << c.output;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

GraphSpec fig3_graph(double a, double b) {
  return GraphSpec{4, {{1, 2, a}, {2, 3, a}, {1, 4, b}, {3, 4, b}}};
}

GraphSpec complete_graph(int n, double weight, bool self_loops) {
  GraphSpec g;
  g.n = n;
  for (int i = 1; i <= n; ++i) {
    for (int j = self_loops ? i : i + 1; j <= n; ++j) g.edges.push_back({i, j, weight});
  }
  return g;
}

GraphSpec graph_from_matrix(const Matrix& W) {
  GraphSpec g;
  g.n = static_cast<int>(W.rows());
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = i; j < W.cols(); ++j) {
      if (W(i, j) != 0.0) g.edges.push_back({static_cast<int>(i + 1), static_cast<int>(j + 1), W(i, j)});
    }
  }
  return g;
}

GraphSpec kron_graph(const GraphSpec& base, int c) {
  if (c < 1) throw Error(ErrorCode::InvalidArgument, "kron factor must be >= 1");
  return graph_from_matrix(kron(base.adjacency(), Matrix::Constant(c, c, 1.0 / c)));
}

}  // namespace netlqr
