#include "dsms/checker.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>

namespace dsms {

std::string CheckReport::to_json() const {
    nlohmann::ordered_json j;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& i : items)
        arr.push_back({{"check", i.name}, {"pass", i.pass}, {"witness", i.witness}});
    j["checks"] = arr;
    j["all_pass"] = all_pass();
    j["first_violation_event"] = first_violation_event;
    return j.dump(2);
}

CheckReport check_state(const OverlayState& state, const std::vector<InFlight>& in_flight) {
    const Hst& hst = *state.hst;
    CheckReport rep;
    auto add = [&](const std::string& name, bool pass, const std::string& witness = "") {
        rep.items.push_back({name, pass, pass ? "" : witness});
    };

    // Lemma: v.links is never empty.
    {
        bool ok = true;
        std::string w;
        for (NodeId v = 0; v < hst.node_count(); ++v) {
            if (state.links[v].empty()) {
                ok = false;
                w = "node " + std::to_string(v);
                break;
            }
        }
        add("links-non-empty", ok, w);
    }

    // Link sets stay within neighbors, with self-loops only at leaves.
    {
        bool ok = true;
        std::string w;
        for (NodeId v = 0; v < hst.node_count() && ok; ++v) {
            for (NodeId t : state.links[v]) {
                bool neighbor = t == hst.parent[v] ||
                                (t != v && hst.parent[t] == v) ||
                                (t == v && hst.is_leaf(v));
                if (!neighbor) {
                    ok = false;
                    w = "node " + std::to_string(v) + " -> " + std::to_string(t);
                    break;
                }
            }
            if (hst.is_leaf(v) && state.links[v].size() != 1) {
                ok = false;
                w = "leaf " + std::to_string(v) + " with multiple links";
            }
        }
        add("links-well-formed", ok, w);
    }

    // Lemma: each edge carries exactly one of {up link, down link, message}.
    {
        bool ok = true;
        std::string w;
        std::map<std::pair<NodeId, NodeId>, int> transit;
        for (const auto& f : in_flight)
            ++transit[{std::min(f.from, f.to), std::max(f.from, f.to)}];
        for (NodeId v = 1; v < hst.node_count() && ok; ++v) {
            NodeId p = hst.parent[v];
            int cnt = 0;
            if (state.points_to(v, p)) ++cnt;
            if (state.points_to(p, v)) ++cnt;
            auto it = transit.find({std::min(v, p), std::max(v, p)});
            if (it != transit.end()) cnt += it->second;
            if (cnt != 1) {
                ok = false;
                w = "edge (" + std::to_string(p) + "," + std::to_string(v) + ") carries " +
                    std::to_string(cnt);
            }
        }
        add("edge-exclusivity", ok, w);
    }

    // Lemma: H stays acyclic apart from leaf self-loops. On a tree any
    // directed cycle would need both directions of some edge.
    {
        bool ok = true;
        std::string w;
        for (NodeId v = 1; v < hst.node_count() && ok; ++v) {
            NodeId p = hst.parent[v];
            if (state.points_to(v, p) && state.points_to(p, v)) {
                ok = false;
                w = "two-cycle on edge (" + std::to_string(p) + "," + std::to_string(v) + ")";
            }
        }
        for (NodeId v = 0; v < hst.node_count() && ok; ++v) {
            if (state.points_to(v, v) && !hst.is_leaf(v)) {
                ok = false;
                w = "self-loop at internal node " + std::to_string(v);
            }
        }
        add("acyclic", ok, w);
    }

    // Lemma: every leaf has a directed path to a leaf that points to itself.
    // Reverse reachability from self-loop leaves over inverted links.
    {
        std::vector<std::vector<NodeId>> rev(hst.node_count());
        std::vector<NodeId> frontier;
        std::vector<char> reach(hst.node_count(), 0);
        for (NodeId v = 0; v < hst.node_count(); ++v) {
            for (NodeId t : state.links[v]) {
                if (t == v) {
                    if (!reach[v]) {
                        reach[v] = 1;
                        frontier.push_back(v);
                    }
                } else {
                    rev[t].push_back(v);
                }
            }
        }
        while (!frontier.empty()) {
            NodeId u = frontier.back();
            frontier.pop_back();
            for (NodeId s : rev[u]) {
                if (!reach[s]) {
                    reach[s] = 1;
                    frontier.push_back(s);
                }
            }
        }
        bool ok = true;
        std::string w;
        for (int i = 0; i < hst.leaf_count(); ++i) {
            if (!reach[hst.leaf_node[i]]) {
                ok = false;
                w = "leaf " + std::to_string(hst.leaf_node[i]);
                break;
            }
        }
        add("path-to-server-leaf", ok, w);
    }

    return rep;
}

CheckReport check_trace(const Trace& trace) {
    const Hst& hst = *trace.hst;
    CheckReport rep;
    auto add = [&](const std::string& name, bool pass, const std::string& witness = "") {
        rep.items.push_back({name, pass, pass ? "" : witness});
    };

    // Theorem: every invoked request is scheduled, exactly once.
    {
        std::map<RequestId, int> times_scheduled;
        for (const auto& r : trace.requests)
            if (!r.is_dummy) times_scheduled[r.id] = 0;
        bool ok = true;
        std::string w;
        for (const auto& e : trace.forest.edges) {
            auto it = times_scheduled.find(e.succ);
            if (it == times_scheduled.end()) {
                ok = false;
                w = "schedule edge for unknown request " + std::to_string(e.succ);
                break;
            }
            ++it->second;
        }
        for (const auto& [id, n] : times_scheduled) {
            if (n != 1) {
                ok = false;
                w = "request " + std::to_string(id) + " scheduled " + std::to_string(n) + " times";
                break;
            }
        }
        add("all-requests-scheduled-once", ok, w);
    }

    // Theorem: a message is never at a node twice, and its hops are the
    // direct tree path between its source and scheduling leaves.
    {
        bool ok = true;
        std::string w;
        for (const auto& m : trace.messages) {
            std::set<NodeId> seen(m.hops.begin(), m.hops.end());
            if (seen.size() != m.hops.size()) {
                ok = false;
                w = "message " + std::to_string(m.id) + " revisits a node";
                break;
            }
            if (m.dest_node == kNoNode) {
                ok = false;
                w = "message " + std::to_string(m.id) + " never scheduled";
                break;
            }
            for (std::size_t i = 0; i + 1 < m.hops.size(); ++i) {
                NodeId a = m.hops[i], b = m.hops[i + 1];
                if (hst.parent[a] != b && hst.parent[b] != a) {
                    ok = false;
                    w = "message " + std::to_string(m.id) + " jumps a non-edge";
                    break;
                }
            }
            if (!ok) break;
            // A simple path between two nodes of a tree is the unique direct path.
            if (m.hops.front() != hst.leaf_node[trace.request_by_id(m.origin).leaf] ||
                m.hops.back() != m.dest_node) {
                ok = false;
                w = "message " + std::to_string(m.id) + " endpoints mismatch";
                break;
            }
        }
        add("message-paths-direct", ok, w);
    }

    // Latency bound: per-message total latency <= tree distance of the edge it
    // constructed; equality when every hop ran at full edge weight.
    {
        bool ok = true;
        std::string w;
        for (const auto& m : trace.messages) {
            if (m.dest_node == kNoNode) continue;
            Rational d = hst.distance_between_nodes(m.hops.front(), m.dest_node);
            if (d < m.total_latency()) {
                ok = false;
                w = "message " + std::to_string(m.id) + " latency exceeds tree distance";
                break;
            }
        }
        add("latency-within-tree-distance", ok, w);
    }

    // Event stream sanity: times non-decreasing, receive = send + latency.
    {
        bool ok = true;
        std::string w;
        for (std::size_t i = 1; i < trace.events.size(); ++i) {
            if (trace.events[i].time < trace.events[i - 1].time) {
                ok = false;
                w = "event " + std::to_string(i) + " goes back in time";
                break;
            }
        }
        std::map<int, std::pair<Rational, Rational>> open_sends; // msg -> (send t, latency)
        for (const auto& e : trace.events) {
            if (!ok) break;
            if (e.kind == EventKind::Send) {
                open_sends[e.msg] = {e.time, e.latency};
            } else if (e.kind == EventKind::Receive) {
                auto it = open_sends.find(e.msg);
                if (it == open_sends.end() ||
                    it->second.first + it->second.second != e.time) {
                    ok = false;
                    w = "receive of message " + std::to_string(e.msg) +
                        " does not match send time + latency";
                }
                if (it != open_sends.end()) open_sends.erase(it);
            }
        }
        add("event-times-consistent", ok, w);
    }

    // Lemma: the schedule forest is k directed paths, one per dummy head.
    {
        bool ok = true;
        std::string w;
        std::map<RequestId, RequestId> pred_of;
        std::map<RequestId, int> succ_count;
        for (const auto& e : trace.forest.edges) {
            if (pred_of.count(e.succ)) {
                ok = false;
                w = "request " + std::to_string(e.succ) + " has two predecessors";
                break;
            }
            pred_of[e.succ] = e.pred;
            ++succ_count[e.pred];
            if (succ_count[e.pred] > 1) {
                ok = false;
                w = "request " + std::to_string(e.pred) + " has two successors";
                break;
            }
        }
        std::set<RequestId> heads(trace.forest.heads.begin(), trace.forest.heads.end());
        if (ok && static_cast<int>(heads.size()) != trace.k) {
            ok = false;
            w = "heads are not k distinct dummies";
        }
        if (ok) {
            for (const auto& r : trace.requests) {
                if (r.is_dummy && !heads.count(r.id)) {
                    ok = false;
                    w = "dummy " + std::to_string(r.id) + " is not a head";
                    break;
                }
                if (!r.is_dummy) {
                    // Walking the predecessor chain must end at a dummy without loops.
                    std::set<RequestId> seen;
                    RequestId cur = r.id;
                    while (pred_of.count(cur)) {
                        if (!seen.insert(cur).second) break;
                        cur = pred_of[cur];
                    }
                    if (!heads.count(cur)) {
                        ok = false;
                        w = "request " + std::to_string(r.id) + " chain does not reach a dummy";
                        break;
                    }
                }
            }
        }
        add("forest-k-directed-paths", ok, w);
    }

    return rep;
}

} // namespace dsms
