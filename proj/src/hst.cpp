#include "dsms/hst.hpp"
#include "dsms/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dsms {

Hst finalize_hst(Hst h) {
    h.pow_alpha_.resize(h.depth + 1);
    h.climb_sum_.resize(h.depth + 1);
    Rational p(1), s(0);
    for (int i = 0; i <= h.depth; ++i) {
        h.pow_alpha_[i] = p;
        h.climb_sum_[i] = s;
        s += p;
        p *= h.alpha;
    }
    h.validate();
    return h;
}

Rational Hst::edge_weight_above(NodeId v) const {
    if (parent[v] == kNoNode) throw std::invalid_argument("root has no parent edge");
    // level(v) >= 1; weight alpha^(h - level(v)).
    return pow_alpha_[depth - level[v]];
}

Rational Hst::climb_weight(int hops) const { return climb_sum_[hops]; }

NodeId Hst::lca(NodeId u, NodeId v) const {
    while (u != v) {
        if (level[u] >= level[v]) u = parent[u];
        else v = parent[v];
    }
    return u;
}

Rational Hst::distance_between_nodes(NodeId u, NodeId v) const {
    if (u == v) return Rational(0);
    NodeId a = lca(u, v);
    // Leaves sit at level h, so both climb h - level(lca) hops.
    return Rational(2) * climb_weight(depth - level[a]);
}

void Hst::validate() const {
    if (!(Rational(1) < alpha)) throw std::invalid_argument("hst requires alpha > 1");
    if (node_count() == 0) throw std::invalid_argument("hst has no nodes");
    if (parent[0] != kNoNode) throw std::invalid_argument("node 0 must be the root");
    for (NodeId v = 0; v < node_count(); ++v) {
        if (v > 0) {
            if (parent[v] < 0 || parent[v] >= node_count())
                throw std::invalid_argument("hst parent out of range");
            if (level[v] != level[parent[v]] + 1)
                throw std::invalid_argument("hst level inconsistent with parent");
        }
        if (children[v].empty() != is_leaf(v))
            throw std::invalid_argument("hst leaves must be exactly the childless nodes");
        if (is_leaf(v) && level[v] != depth)
            throw std::invalid_argument("hst leaves must all sit at the stated depth");
    }
    for (int i = 0; i < leaf_count(); ++i)
        if (leaf_index_of[leaf_node[i]] != i)
            throw std::invalid_argument("hst leaf map is not a bijection");
}

namespace {

void build_uniform(Hst& h, NodeId node, int lvl, const std::vector<int>& branching) {
    if (lvl == h.depth) {
        h.leaf_index_of[node] = static_cast<int>(h.leaf_node.size());
        h.leaf_node.push_back(node);
        return;
    }
    for (int c = 0; c < branching[lvl]; ++c) {
        NodeId child = static_cast<NodeId>(h.parent.size());
        h.parent.push_back(node);
        h.children.emplace_back();
        h.level.push_back(lvl + 1);
        h.leaf_index_of.push_back(-1);
        h.children[node].push_back(child);
        build_uniform(h, child, lvl + 1, branching);
    }
}

void build_shape(Hst& h, NodeId node, int lvl, const HstShape& shape) {
    if (shape.children.empty()) {
        h.leaf_index_of[node] = static_cast<int>(h.leaf_node.size());
        h.leaf_node.push_back(node);
        return;
    }
    for (const auto& cs : shape.children) {
        NodeId child = static_cast<NodeId>(h.parent.size());
        h.parent.push_back(node);
        h.children.emplace_back();
        h.level.push_back(lvl + 1);
        h.leaf_index_of.push_back(-1);
        h.children[node].push_back(child);
        build_shape(h, child, lvl + 1, cs);
    }
}

int shape_depth(const HstShape& s) {
    if (s.children.empty()) return 0;
    int d = shape_depth(s.children.front());
    for (const auto& c : s.children)
        if (shape_depth(c) != d)
            throw std::invalid_argument("hst shape has leaves at different depths");
    return d + 1;
}

} // namespace

Hst build_explicit_hst(const Rational& alpha, int depth, const std::vector<int>& branching) {
    if (!(Rational(1) < alpha)) throw std::invalid_argument("build_explicit_hst requires alpha > 1");
    if (depth < 0) throw std::invalid_argument("depth must be non-negative");
    if (static_cast<int>(branching.size()) != depth)
        throw std::invalid_argument("branching must list one child count per level");
    for (int b : branching)
        if (b < 1) throw std::invalid_argument("branching counts must be positive");
    Hst h;
    h.alpha = alpha;
    h.depth = depth;
    h.parent.push_back(kNoNode);
    h.children.emplace_back();
    h.level.push_back(0);
    h.leaf_index_of.push_back(-1);
    build_uniform(h, 0, 0, branching);
    return finalize_hst(std::move(h));
}

Hst build_hst_from_shape(const Rational& alpha, const HstShape& shape) {
    if (!(Rational(1) < alpha)) throw std::invalid_argument("hst requires alpha > 1");
    Hst h;
    h.alpha = alpha;
    h.depth = shape_depth(shape);
    h.parent.push_back(kNoNode);
    h.children.emplace_back();
    h.level.push_back(0);
    h.leaf_index_of.push_back(-1);
    build_shape(h, 0, 0, shape);
    return finalize_hst(std::move(h));
}

Hst embed_frt(const Metric& metric, const Rational& alpha, std::uint64_t seed) {
    metric.validate();
    if (!(Rational(1) < alpha)) throw std::invalid_argument("embed_frt requires alpha > 1");
    const int n = metric.size;
    if (n == 1) {
        Hst h;
        h.alpha = alpha;
        h.depth = 0;
        h.parent.push_back(kNoNode);
        h.children.emplace_back();
        h.level.push_back(0);
        h.leaf_index_of.push_back(0);
        h.leaf_node.push_back(0);
        return finalize_hst(std::move(h));
    }
    if (metric.min_off_diagonal() < Rational(1))
        throw std::invalid_argument("embed_frt requires a normalized metric (min distance >= 1)");

    std::mt19937_64 rng(seed);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    // beta in [1,2) with denominator 1024.
    Rational beta(1024 + static_cast<std::int64_t>(rng() % 1024), 1024);

    Rational diam(0);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (diam < metric.at(u, v)) diam = metric.at(u, v);

    // Radius at tuple level i is beta * alpha^i / 4. Level-0 radius < 1/2
    // separates all points; the top level holds once the radius reaches the
    // metric diameter. Same-cluster points at level i are within 2*radius,
    // which stays below the tree distance 2*(alpha^i - 1)/(alpha - 1), so the
    // tree dominates the metric exactly.
    std::vector<Rational> radius{beta / Rational(4)};
    while (radius.back() < diam) radius.push_back(radius.back() * alpha);
    const int h = static_cast<int>(radius.size()) - 1;

    // center[i][x]: first point in permutation order within radius[i] of x.
    std::vector<std::vector<int>> center(h + 1, std::vector<int>(n, -1));
    for (int i = 0; i <= h; ++i) {
        for (int x = 0; x < n; ++x) {
            for (int p : perm) {
                if (metric.at(x, p) <= radius[i]) {
                    center[i][x] = p;
                    break;
                }
            }
        }
    }
    for (int x = 0; x < n; ++x) {
        if (center[0][x] != x)
            throw std::logic_error("frt level-0 clusters must be singletons");
    }

    // Trie over tuples (center[h][x], ..., center[0][x]); children ordered by
    // center id for a stable serialization.
    struct TrieNode {
        std::map<int, int> kids; // center -> trie node index
        int point = -1;
    };
    std::vector<TrieNode> trie(1);
    for (int x = 0; x < n; ++x) {
        int cur = 0;
        for (int i = h - 1; i >= 0; --i) {
            auto [it, inserted] = trie[cur].kids.try_emplace(center[i][x], 0);
            if (inserted) {
                trie.push_back({});
                it->second = static_cast<int>(trie.size()) - 1;
            }
            cur = it->second;
        }
        trie[cur].point = x;
    }

    Hst out;
    out.alpha = alpha;
    out.depth = h;
    out.parent.push_back(kNoNode);
    out.children.emplace_back();
    out.level.push_back(0);
    out.leaf_index_of.push_back(-1);
    out.leaf_node.assign(n, kNoNode);

    // Preorder materialization of the trie.
    struct Frame { int trie_node; NodeId hst_node; int lvl; };
    std::vector<Frame> stack{{0, 0, 0}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (f.lvl == h) {
            int point = trie[f.trie_node].point;
            out.leaf_index_of[f.hst_node] = point;
            out.leaf_node[point] = f.hst_node;
            continue;
        }
        // push in reverse so preorder visits children in ascending center id
        std::vector<std::pair<int, int>> kids(trie[f.trie_node].kids.begin(),
                                              trie[f.trie_node].kids.end());
        std::vector<Frame> frames;
        for (const auto& [c, t] : kids) {
            NodeId child = static_cast<NodeId>(out.parent.size());
            out.parent.push_back(f.hst_node);
            out.children.emplace_back();
            out.level.push_back(f.lvl + 1);
            out.leaf_index_of.push_back(-1);
            out.children[f.hst_node].push_back(child);
            frames.push_back({t, child, f.lvl + 1});
        }
        for (auto it = frames.rbegin(); it != frames.rend(); ++it) stack.push_back(*it);
    }
    return finalize_hst(std::move(out));
}

Rational hst_distance(const Hst& t, int leaf_u, int leaf_v) {
    if (leaf_u < 0 || leaf_u >= t.leaf_count() || leaf_v < 0 || leaf_v >= t.leaf_count())
        throw std::invalid_argument("hst_distance arguments must be leaf indices");
    return t.distance_between_nodes(t.leaf_node[leaf_u], t.leaf_node[leaf_v]);
}

Rational subtree_diameter(const Hst& t, NodeId v) {
    if (v < 0 || v >= t.node_count()) throw std::invalid_argument("no such node");
    // Every node has at least one leaf below it; with >= 2 children the
    // farthest leaf pair meets at v, with one child the diameter is the
    // child's.
    while (t.children[v].size() == 1) v = t.children[v].front();
    if (t.is_leaf(v)) return Rational(0);
    return Rational(2) * t.climb_weight(t.depth - t.level[v]);
}

std::string Hst::to_json() const {
    nlohmann::ordered_json j;
    j["alpha"] = {alpha.num(), alpha.den()};
    j["depth"] = depth;
    // Nested child arrays in preorder; a leaf is [].
    std::function<nlohmann::ordered_json(NodeId)> rec = [&](NodeId v) {
        auto arr = nlohmann::ordered_json::array();
        for (NodeId c : children[v]) arr.push_back(rec(c));
        return arr;
    };
    j["children"] = rec(0);
    auto lm = nlohmann::ordered_json::object();
    for (int i = 0; i < leaf_count(); ++i) lm[std::to_string(i)] = leaf_node[i];
    j["leaf_map"] = lm;
    return j.dump();
}

Hst Hst::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    auto a = j.at("alpha");
    Rational alpha(a.at(0).get<std::int64_t>(), a.at(1).get<std::int64_t>());
    std::function<HstShape(const nlohmann::json&)> rec = [&](const nlohmann::json& node) {
        HstShape s;
        for (const auto& c : node) s.children.push_back(rec(c));
        return s;
    };
    HstShape shape = rec(j.at("children"));
    Hst h = build_hst_from_shape(alpha, shape);
    if (h.depth != j.at("depth").get<int>())
        throw std::invalid_argument("hst json depth does not match the child structure");
    if (j.contains("leaf_map")) {
        // Leaf ids may be remapped by the file as long as the map stays a bijection.
        const auto& lm = j.at("leaf_map");
        if (lm.size() != static_cast<std::size_t>(h.leaf_count()))
            throw std::invalid_argument("hst leaf_map must cover every leaf exactly once");
        std::vector<NodeId> leaf_node(h.leaf_count(), kNoNode);
        std::vector<int> seen(h.node_count(), 0);
        for (auto it = lm.begin(); it != lm.end(); ++it) {
            int leaf = std::stoi(it.key());
            NodeId node = it.value().get<NodeId>();
            if (leaf < 0 || leaf >= h.leaf_count() || node < 0 || node >= h.node_count() ||
                !h.is_leaf(node) || seen[node]++)
                throw std::invalid_argument("hst leaf_map is not a bijection onto the leaves");
            leaf_node[leaf] = node;
        }
        std::fill(h.leaf_index_of.begin(), h.leaf_index_of.end(), -1);
        h.leaf_node = leaf_node;
        for (int i = 0; i < h.leaf_count(); ++i) h.leaf_index_of[h.leaf_node[i]] = i;
    }
    h.validate();
    return h;
}

} // namespace dsms
