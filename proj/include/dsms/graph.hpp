#pragma once

#include "dsms/rational.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dsms {

struct WeightedEdge {
    int u = 0;
    int v = 0;
    Rational w;
};

/// Undirected, connected network graph with positive edge weights.
struct WeightedGraph {
    int node_count = 0;
    std::vector<WeightedEdge> edges;

    void validate() const; // connected, no self-loops, weights > 0
    bool is_connected() const;
    Rational min_weight() const;

    std::string to_json() const;
    static WeightedGraph from_json(const std::string& text);
};

/// All-pairs shortest-path distances of a normalized graph.
struct Metric {
    int size = 0;
    std::vector<Rational> dist; // row-major size*size

    const Rational& at(int u, int v) const { return dist[static_cast<std::size_t>(u) * size + v]; }
    Rational& at(int u, int v) { return dist[static_cast<std::size_t>(u) * size + v]; }

    void validate() const; // symmetry, zero diagonal, triangle inequality, off-diagonal >= 1
    Rational min_off_diagonal() const;

    static Metric uniform(int n); // all off-diagonal distances 1
};

/// Scales all weights by 1/min-weight so the smallest weight becomes 1.
WeightedGraph normalize_weights(const WeightedGraph& g);

/// All-pairs shortest paths (Dijkstra from every source, exact arithmetic).
Metric metric_closure(const WeightedGraph& g);

enum class GraphModel { CompleteUniform, ErdosRenyi };

/// Deterministic random graph: connected and normalized for any seed.
WeightedGraph random_graph(int n, GraphModel model, std::uint64_t seed);

} // namespace dsms
