#pragma once

#include "dsms/hst.hpp"
#include "dsms/rational.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dsms {

using RequestId = std::int32_t;
constexpr RequestId kNoRequest = -1;

struct Request {
    RequestId id = kNoRequest;
    int leaf = -1; // leaf index in the overlay tree
    Rational time;
    bool is_dummy = false;
};

/// How a node breaks ties: the processing order of messages that arrive at it
/// simultaneously, and which downward link to follow when several exist.
/// The optimality result must hold for every policy, so tests sweep these.
struct TiePolicy {
    enum class Kind { LowestId, SeededRandom, Scripted };
    Kind kind = Kind::LowestId;
    std::uint64_t seed = 0;
    // Scripted overrides; anything unspecified falls back to lowest-id.
    std::map<std::pair<NodeId, int>, int> arrival_rank;      // (node, msg) -> rank
    std::map<std::pair<NodeId, int>, NodeId> child_choice;   // (node, msg) -> child

    /// Sort key for messages in one atomic arrival batch at `node`.
    std::uint64_t arrival_key(NodeId node, int msg) const;
    /// Pick the downward link to follow; `candidates` is sorted and non-empty.
    NodeId pick_child(NodeId node, int msg, const std::vector<NodeId>& candidates) const;
};

/// The directed overlay tree H: per-node link sets plus the per-leaf tail of
/// locally invoked requests. Mutated only by the single-threaded event loop.
struct OverlayState {
    const Hst* hst = nullptr;
    std::vector<std::vector<NodeId>> links;   // sorted; a leaf may point to itself
    std::vector<RequestId> last_invoked;      // per node, kNoRequest if none

    bool points_to(NodeId from, NodeId to) const;
    void remove_link(NodeId from, NodeId to);
    void add_link(NodeId from, NodeId to);
    bool has_self_loop(NodeId leaf) const;
    /// Children of v currently in v's link set (sorted).
    std::vector<NodeId> child_links(NodeId v) const;
};

/// Initial orientation: every edge points toward the subtree holding a server;
/// server leaves get self-loops, everything else points to its parent. This is
/// the unique orientation in which every edge carries exactly one link and
/// every leaf has a directed path to a server leaf.
OverlayState init_overlay(const Hst& hst, const std::vector<int>& server_leaves);

struct ScheduleEdge {
    RequestId pred = kNoRequest;
    RequestId succ = kNoRequest;
    int msg = -1; // -1 when the request was scheduled locally without a message
};

/// The k TSP paths produced by a run: one directed path of requests per dummy.
struct ScheduleForest {
    std::vector<ScheduleEdge> edges;
    std::vector<RequestId> heads; // the k dummy request ids
};

struct InvokeOutcome {
    bool scheduled_locally = false;
    RequestId predecessor = kNoRequest; // when scheduled locally
    bool message_emitted = false;
    NodeId message_to = kNoNode;        // parent, when emitted
};

/// Request invocation at leaf u (atomic): with a self-loop the request chains
/// behind the last request invoked at u; otherwise the find-predecessor
/// message goes to the parent and u points to itself.
InvokeOutcome on_invoke(OverlayState& state, int leaf, const Request& r);

struct ReceiveOutcome {
    bool forwarded = false;
    NodeId next_hop = kNoNode;
    bool scheduled = false;
    RequestId predecessor = kNoRequest;
    NodeId link_removed = kNoNode;
    NodeId link_added = kNoNode;
};

/// Message receipt at node w from neighbor `from` (atomic): follow a downward
/// link if one exists (tie policy picks), else the unique remaining link; a
/// self-loop terminates the search and schedules the request behind the last
/// request invoked at w. The traversed link flips toward the sender.
ReceiveOutcome on_receive(OverlayState& state, NodeId w, int msg, NodeId from,
                          const TiePolicy& policy);

} // namespace dsms
