#pragma once

#include <string>

#include "gna/graph.hpp"
#include "gna/model.hpp"

namespace gna {

/// Alignment report as JSON: pair ids, predicted score/GED, the hard matching
/// as [i, j] pairs, the cost and soft-matching matrices, and the node ops.
void save_alignment_json(const std::string& path, const AlignmentReport& report,
                         const Graph& g1, const Graph& g2);

/// DOT rendering: both graphs as clusters, dashed inter-cluster edges for the
/// hard alignment, and red boxes on g2 nodes without a real counterpart.
void save_alignment_dot(const std::string& path, const AlignmentReport& report,
                        const Graph& g1, const Graph& g2);

}  // namespace gna
