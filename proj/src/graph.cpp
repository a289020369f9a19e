#include "dsms/graph.hpp"
#include "dsms/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

namespace dsms {

namespace {

std::vector<std::vector<std::pair<int, Rational>>> adjacency(const WeightedGraph& g) {
    std::vector<std::vector<std::pair<int, Rational>>> adj(g.node_count);
    for (const auto& e : g.edges) {
        adj[e.u].push_back({e.v, e.w});
        adj[e.v].push_back({e.u, e.w});
    }
    return adj;
}

} // namespace

bool WeightedGraph::is_connected() const {
    if (node_count <= 0) return false;
    auto adj = adjacency(*this);
    std::vector<char> seen(node_count, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int visited = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const auto& [v, w] : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++visited;
                stack.push_back(v);
            }
        }
    }
    return visited == node_count;
}

Rational WeightedGraph::min_weight() const {
    if (edges.empty()) throw std::invalid_argument("graph has no edges");
    Rational m = edges.front().w;
    for (const auto& e : edges)
        if (e.w < m) m = e.w;
    return m;
}

void WeightedGraph::validate() const {
    if (node_count < 1) throw std::invalid_argument("graph must have at least one node");
    for (const auto& e : edges) {
        if (e.u == e.v) throw std::invalid_argument("graph has a self-loop edge");
        if (e.u < 0 || e.u >= node_count || e.v < 0 || e.v >= node_count)
            throw std::invalid_argument("graph edge endpoint out of range");
        if (!(Rational(0) < e.w)) throw std::invalid_argument("graph edge with non-positive weight");
    }
    if (!is_connected()) throw std::invalid_argument("graph is not connected");
}

WeightedGraph normalize_weights(const WeightedGraph& g) {
    g.validate();
    WeightedGraph out = g;
    if (g.edges.empty()) return out;
    Rational m = g.min_weight();
    for (auto& e : out.edges) e.w = e.w / m;
    return out;
}

Metric metric_closure(const WeightedGraph& g) {
    g.validate();
    const int n = g.node_count;
    Metric metric;
    metric.size = n;
    metric.dist.assign(static_cast<std::size_t>(n) * n, Rational(0));
    auto adj = adjacency(g);

    for (int s = 0; s < n; ++s) {
        std::vector<Rational> d(n, Rational(-1));
        std::vector<char> done(n, 0);
        using Item = std::pair<Rational, int>;
        auto cmp = [](const Item& a, const Item& b) { return b.first < a.first; };
        std::priority_queue<Item, std::vector<Item>, decltype(cmp)> pq(cmp);
        d[s] = Rational(0);
        pq.push({Rational(0), s});
        while (!pq.empty()) {
            auto [du, u] = pq.top();
            pq.pop();
            if (done[u]) continue;
            done[u] = 1;
            for (const auto& [v, w] : adj[u]) {
                Rational nd = du + w;
                if (d[v].is_negative() || nd < d[v]) {
                    d[v] = nd;
                    pq.push({nd, v});
                }
            }
        }
        for (int v = 0; v < n; ++v) metric.at(s, v) = d[v];
    }
    return metric;
}

Rational Metric::min_off_diagonal() const {
    if (size < 2) throw std::invalid_argument("metric has no off-diagonal entries");
    Rational m = at(0, 1);
    for (int u = 0; u < size; ++u)
        for (int v = 0; v < size; ++v)
            if (u != v && at(u, v) < m) m = at(u, v);
    return m;
}

void Metric::validate() const {
    if (size < 1) throw std::invalid_argument("metric must have at least one point");
    for (int u = 0; u < size; ++u) {
        if (!at(u, u).is_zero()) throw std::invalid_argument("metric diagonal must be zero");
        for (int v = 0; v < size; ++v) {
            if (at(u, v) != at(v, u)) throw std::invalid_argument("metric must be symmetric");
            if (u != v && at(u, v) < Rational(1))
                throw std::invalid_argument("metric off-diagonal entries must be >= 1");
        }
    }
    for (int u = 0; u < size; ++u)
        for (int v = 0; v < size; ++v)
            for (int w = 0; w < size; ++w)
                if (at(u, w) > at(u, v) + at(v, w))
                    throw std::invalid_argument("metric violates the triangle inequality");
}

Metric Metric::uniform(int n) {
    Metric m;
    m.size = n;
    m.dist.assign(static_cast<std::size_t>(n) * n, Rational(1));
    for (int i = 0; i < n; ++i) m.at(i, i) = Rational(0);
    return m;
}

WeightedGraph random_graph(int n, GraphModel model, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("random_graph requires n >= 1");
    WeightedGraph g;
    g.node_count = n;
    // Weights are j/8 with j in [8, 128] so everything stays a small rational.
    auto draw_weight = [&](std::uint64_t salt) {
        std::uint64_t r = mix(seed, salt, 0x57e16f7ULL);
        return Rational(8 + static_cast<std::int64_t>(r % 121), 8);
    };
    if (model == GraphModel::CompleteUniform) {
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                g.edges.push_back({u, v, draw_weight(static_cast<std::uint64_t>(u) * 100003 + v)});
    } else {
        // Edge probability ~ 2.5 ln(n)/n keeps small instances sparse but usually connected.
        for (int u = 0; u < n; ++u) {
            for (int v = u + 1; v < n; ++v) {
                std::uint64_t r = mix(seed, static_cast<std::uint64_t>(u) * 100003 + v, 1);
                double p = n <= 2 ? 1.0 : std::min(1.0, 2.5 * std::log(static_cast<double>(n)) / n);
                if (static_cast<double>(r % 1000000) / 1000000.0 < p)
                    g.edges.push_back({u, v, draw_weight(static_cast<std::uint64_t>(u) * 100003 + v)});
            }
        }
        // Connectivity repair: link components with random edges until connected.
        std::uint64_t salt = 0;
        while (!g.is_connected() && n > 1) {
            std::vector<int> comp(n, -1);
            int ncomp = 0;
            for (int s = 0; s < n; ++s) {
                if (comp[s] != -1) continue;
                std::vector<int> stack{s};
                comp[s] = ncomp;
                while (!stack.empty()) {
                    int u = stack.back();
                    stack.pop_back();
                    for (const auto& e : g.edges) {
                        int other = -1;
                        if (e.u == u) other = e.v;
                        if (e.v == u) other = e.u;
                        if (other >= 0 && comp[other] == -1) {
                            comp[other] = ncomp;
                            stack.push_back(other);
                        }
                    }
                }
                ++ncomp;
            }
            int u = static_cast<int>(mix(seed, salt, 2) % n);
            int v = static_cast<int>(mix(seed, salt, 3) % n);
            ++salt;
            if (comp[u] == comp[v]) continue;
            g.edges.push_back({std::min(u, v), std::max(u, v), draw_weight(0xC0DE + salt)});
        }
    }
    return normalize_weights(g);
}

std::string WeightedGraph::to_json() const {
    nlohmann::ordered_json j;
    j["n"] = node_count;
    auto edges_json = nlohmann::ordered_json::array();
    for (const auto& e : edges)
        edges_json.push_back({e.u, e.v, e.w.num(), e.w.den()});
    j["edges"] = edges_json;
    return j.dump();
}

WeightedGraph WeightedGraph::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    WeightedGraph g;
    g.node_count = j.at("n").get<int>();
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 4)
            throw std::invalid_argument("graph edge must be [u, v, w_num, w_den]");
        g.edges.push_back({e[0].get<int>(), e[1].get<int>(),
                           Rational(e[2].get<std::int64_t>(), e[3].get<std::int64_t>())});
    }
    return g;
}

} // namespace dsms
