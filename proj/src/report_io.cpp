#include "gna/report_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gna {
namespace {

nlohmann::json matrix_json(const std::vector<double>& flat, int n) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < n; ++j) row.push_back(flat[static_cast<std::size_t>(i) * n + j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* kind_name(NodeOp::Kind k) {
  switch (k) {
    case NodeOp::Kind::Match: return "match";
    case NodeOp::Kind::Substitute: return "substitute";
    case NodeOp::Kind::Insert: return "insert";
  }
  return "unknown";
}

std::string node_label(const Graph& g, int idx) {
  const int l = g.node_labels[idx];
  if (l == -1) return std::to_string(idx);
  return std::to_string(idx) + ":" + std::to_string(l);
}

std::ofstream open_or_throw(const std::string& path, const char* what) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(std::string(what) + ": cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void save_alignment_json(const std::string& path, const AlignmentReport& report,
                         const Graph& g1, const Graph& g2) {
  nlohmann::json matching = nlohmann::json::array();
  for (int i = 0; i < report.n2; ++i)
    matching.push_back(nlohmann::json::array({i, report.hard_permutation[i]}));

  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : report.node_ops) {
    ops.push_back(nlohmann::json{{"kind", kind_name(op.kind)},
                                 {"g1_node", op.g1_node},
                                 {"g2_node", op.g2_node},
                                 {"g1_label", op.g1_label},
                                 {"g2_label", op.g2_label}});
  }

  nlohmann::json j{{"g1", g1.id},
                   {"g2", g2.id},
                   {"n1", report.n1},
                   {"n2", report.n2},
                   {"predicted_score", report.predicted_score},
                   {"predicted_ged", report.predicted_ged},
                   {"matching", std::move(matching)},
                   {"cost_matrix", matrix_json(report.cost_matrix, report.n2)},
                   {"soft_matching", matrix_json(report.soft_matching, report.n2)},
                   {"node_ops", std::move(ops)}};

  auto out = open_or_throw(path, "alignment json");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("alignment json: failed writing '" + path + "'");
}

void save_alignment_dot(const std::string& path, const AlignmentReport& report,
                        const Graph& g1, const Graph& g2) {
  auto out = open_or_throw(path, "alignment dot");
  out << "graph alignment {\n"
      << "  rankdir=LR;\n"
      << "  subgraph cluster_g1 {\n"
      << "    label=\"" << g1.id << "\";\n";
  for (int i = 0; i < g1.num_nodes(); ++i)
    out << "    a" << i << " [label=\"" << node_label(g1, i) << "\"];\n";
  for (const auto& [u, v] : g1.edges) out << "    a" << u << " -- a" << v << ";\n";
  out << "  }\n"
      << "  subgraph cluster_g2 {\n"
      << "    label=\"" << g2.id << "\";\n";
  for (const auto& op : report.node_ops) {
    const int j = op.g2_node;
    out << "    b" << j << " [label=\"" << node_label(g2, j) << "\"";
    if (op.kind == NodeOp::Kind::Insert) out << ", shape=box, color=red";
    out << "];\n";
  }
  for (const auto& [u, v] : g2.edges) out << "    b" << u << " -- b" << v << ";\n";
  out << "  }\n";
  for (const auto& op : report.node_ops) {
    if (op.g1_node < 0) continue;
    out << "  a" << op.g1_node << " -- b" << op.g2_node << " [style=dashed, constraint=false";
    if (op.kind == NodeOp::Kind::Substitute) out << ", color=orange";
    out << "];\n";
  }
  out << "}\n";
  if (!out) throw std::runtime_error("alignment dot: failed writing '" + path + "'");
}

}  // namespace gna
