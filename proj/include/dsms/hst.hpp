#pragma once

#include "dsms/graph.hpp"
#include "dsms/rational.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dsms {

using NodeId = std::int32_t;
constexpr NodeId kNoNode = -1;

/// Rooted alpha-HST. An edge from a node at hop-level j to its child has
/// weight alpha^(h-1-j); all leaves sit at hop-level h. Leaves are in
/// bijection with the underlying points: leaf index <-> tree node.
///
/// Node ids are preorder over the construction (root == 0), which makes the
/// serialization byte-stable for a fixed input.
struct Hst {
    Rational alpha{2};
    int depth = 0; // h
    std::vector<NodeId> parent;                // kNoNode for the root
    std::vector<std::vector<NodeId>> children; // preorder-stable
    std::vector<int> level;                    // hops from the root
    std::vector<NodeId> leaf_node;             // leaf index -> node id
    std::vector<int> leaf_index_of;            // node id -> leaf index, -1 otherwise

    int node_count() const { return static_cast<int>(parent.size()); }
    int leaf_count() const { return static_cast<int>(leaf_node.size()); }
    bool is_leaf(NodeId v) const { return leaf_index_of[v] >= 0; }
    NodeId root() const { return 0; }

    /// Weight of the edge between v and its parent.
    Rational edge_weight_above(NodeId v) const;
    /// Sum alpha^0 + ... + alpha^(i-1): leaf-to-ancestor path weight over i hops.
    Rational climb_weight(int hops) const;

    NodeId lca(NodeId u, NodeId v) const;
    /// Distance between two leaf nodes along the unique tree path.
    Rational distance_between_nodes(NodeId u, NodeId v) const;

    void validate() const;

    std::string to_json() const;
    static Hst from_json(const std::string& text);

private:
    friend Hst finalize_hst(Hst h);
    std::vector<Rational> pow_alpha_;   // alpha^i for i in [0, depth]
    std::vector<Rational> climb_sum_;   // climb_weight cache
};

/// Uniform-branching alpha-HST: branching[j] children for every node at
/// hop-level j. Deterministic.
Hst build_explicit_hst(const Rational& alpha, int depth, const std::vector<int>& branching);

/// alpha-HST from an explicit nested child structure (one vector per node in
/// preorder is awkward to pass; this takes nested arrays encoded as a
/// recursive structure). Used by the JSON loader and scripted scenarios.
struct HstShape {
    std::vector<HstShape> children; // empty == leaf
};
Hst build_hst_from_shape(const Rational& alpha, const HstShape& shape);

/// Randomized embedding of a metric into an alpha-HST.
///
/// Hierarchical ball partitioning: a random point permutation plus a random
/// radius scale beta in [1,2) define per-level center assignments; the tree is
/// the trie of center tuples. The output always dominates the metric exactly,
/// and the expected stretch between any fixed pair is O(log n).
Hst embed_frt(const Metric& metric, const Rational& alpha, std::uint64_t seed);

/// Distance between two leaves given by leaf index. Rejects non-leaf indices.
Rational hst_distance(const Hst& t, int leaf_u, int leaf_v);

/// Weight of the longest direct path between two leaves of the subtree rooted
/// at the given node; 0 for a leaf.
Rational subtree_diameter(const Hst& t, NodeId root_of_subtree);

} // namespace dsms
