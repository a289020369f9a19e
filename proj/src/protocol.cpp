#include "dsms/protocol.hpp"
#include "dsms/util.hpp"

#include <algorithm>
#include <stdexcept>

namespace dsms {

std::uint64_t TiePolicy::arrival_key(NodeId node, int msg) const {
    switch (kind) {
    case Kind::LowestId:
        return static_cast<std::uint64_t>(msg);
    case Kind::SeededRandom:
        return mix(seed, static_cast<std::uint64_t>(node), static_cast<std::uint64_t>(msg), 0xA1);
    case Kind::Scripted: {
        auto it = arrival_rank.find({node, msg});
        std::uint64_t rank = it != arrival_rank.end() ? static_cast<std::uint64_t>(it->second)
                                                      : 0x7fffffffULL;
        return (rank << 32) | static_cast<std::uint64_t>(msg);
    }
    }
    return static_cast<std::uint64_t>(msg);
}

NodeId TiePolicy::pick_child(NodeId node, int msg, const std::vector<NodeId>& candidates) const {
    switch (kind) {
    case Kind::LowestId:
        return candidates.front();
    case Kind::SeededRandom: {
        std::uint64_t r = mix(seed, static_cast<std::uint64_t>(node),
                              static_cast<std::uint64_t>(msg), 0xC2);
        return candidates[r % candidates.size()];
    }
    case Kind::Scripted: {
        auto it = child_choice.find({node, msg});
        if (it == child_choice.end()) return candidates.front();
        if (std::find(candidates.begin(), candidates.end(), it->second) == candidates.end())
            throw std::runtime_error("scripted child choice is not a current downward link");
        return it->second;
    }
    }
    return candidates.front();
}

bool OverlayState::points_to(NodeId from, NodeId to) const {
    const auto& l = links[from];
    return std::binary_search(l.begin(), l.end(), to);
}

void OverlayState::remove_link(NodeId from, NodeId to) {
    auto& l = links[from];
    auto it = std::lower_bound(l.begin(), l.end(), to);
    if (it == l.end() || *it != to) throw std::logic_error("removing a link that does not exist");
    l.erase(it);
}

void OverlayState::add_link(NodeId from, NodeId to) {
    auto& l = links[from];
    auto it = std::lower_bound(l.begin(), l.end(), to);
    if (it != l.end() && *it == to) throw std::logic_error("adding a link that already exists");
    l.insert(it, to);
}

bool OverlayState::has_self_loop(NodeId leaf) const { return points_to(leaf, leaf); }

std::vector<NodeId> OverlayState::child_links(NodeId v) const {
    std::vector<NodeId> out;
    for (NodeId t : links[v])
        if (t != v && hst->parent[t] == v) out.push_back(t);
    return out;
}

OverlayState init_overlay(const Hst& hst, const std::vector<int>& server_leaves) {
    if (server_leaves.empty()) throw std::invalid_argument("at least one server leaf required");
    std::vector<char> is_server(hst.node_count(), 0);
    for (int leaf : server_leaves) {
        if (leaf < 0 || leaf >= hst.leaf_count())
            throw std::invalid_argument("server location must be a leaf");
        NodeId node = hst.leaf_node[leaf];
        if (is_server[node]) throw std::invalid_argument("server leaves must be distinct");
        is_server[node] = 1;
    }
    // has_server[v]: some server leaf lies in the subtree of v.
    std::vector<char> has_server(hst.node_count(), 0);
    for (int leaf : server_leaves) {
        NodeId v = hst.leaf_node[leaf];
        while (v != kNoNode && !has_server[v]) {
            has_server[v] = 1;
            v = hst.parent[v];
        }
    }
    OverlayState st;
    st.hst = &hst;
    st.links.assign(hst.node_count(), {});
    st.last_invoked.assign(hst.node_count(), kNoRequest);
    for (NodeId v = 0; v < hst.node_count(); ++v) {
        if (hst.is_leaf(v)) {
            st.links[v].push_back(is_server[v] ? v : hst.parent[v]);
            continue;
        }
        for (NodeId c : hst.children[v])
            if (has_server[c]) st.links[v].push_back(c);
        if (st.links[v].empty()) st.links[v].push_back(hst.parent[v]);
        std::sort(st.links[v].begin(), st.links[v].end());
    }
    return st;
}

InvokeOutcome on_invoke(OverlayState& state, int leaf, const Request& r) {
    const Hst& hst = *state.hst;
    if (leaf != r.leaf) throw std::invalid_argument("request must be invoked at its own leaf");
    NodeId u = hst.leaf_node[leaf];
    InvokeOutcome out;
    if (state.has_self_loop(u)) {
        out.scheduled_locally = true;
        out.predecessor = state.last_invoked[u];
        if (out.predecessor == kNoRequest)
            throw std::logic_error("self-loop leaf without a previously invoked request");
    } else {
        if (state.links[u].size() != 1 || state.links[u].front() != hst.parent[u])
            throw std::logic_error("a leaf points either to itself or to its parent");
        out.message_emitted = true;
        out.message_to = hst.parent[u];
        state.remove_link(u, hst.parent[u]);
        state.add_link(u, u);
    }
    state.last_invoked[u] = r.id;
    return out;
}

ReceiveOutcome on_receive(OverlayState& state, NodeId w, int msg, NodeId from,
                          const TiePolicy& policy) {
    ReceiveOutcome out;
    auto kids = state.child_links(w);
    NodeId z;
    if (!kids.empty()) {
        z = policy.pick_child(w, msg, kids);
    } else {
        if (state.links[w].size() != 1)
            throw std::logic_error("node without downward links must hold exactly one link");
        z = state.links[w].front();
    }
    state.remove_link(w, z);
    state.add_link(w, from);
    out.link_removed = z;
    out.link_added = from;
    if (z != w) {
        out.forwarded = true;
        out.next_hop = z;
    } else {
        out.scheduled = true;
        out.predecessor = state.last_invoked[w];
        if (out.predecessor == kNoRequest)
            throw std::logic_error("self-loop leaf without a previously invoked request");
    }
    return out;
}

} // namespace dsms
