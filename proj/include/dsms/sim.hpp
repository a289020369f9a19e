#pragma once

#include "dsms/hst.hpp"
#include "dsms/protocol.hpp"
#include "dsms/rational.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsms {

/// Per-hop message latency. Every hop satisfies 0 < latency <= edge weight;
/// synchronous mode pins latency to the edge weight exactly.
struct LatencyModel {
    enum class Kind { Synchronous, RandomFraction, Scripted };
    Kind kind = Kind::Synchronous;
    std::uint64_t seed = 0;
    // RandomFraction draws w * j / denominator_bound with j in [1, bound].
    int denominator_bound = 64;
    // Scripted entries keyed by (message id, edge as (min,max) node pair);
    // hops without an entry fall back to the edge weight.
    std::map<std::pair<int, std::pair<NodeId, NodeId>>, Rational> script;

    Rational hop_latency(int msg, NodeId a, NodeId b, const Rational& weight) const;
    void validate(const Hst& hst) const;
};

struct Scenario {
    std::shared_ptr<const Hst> hst;
    std::vector<int> server_leaves;
    std::vector<Request> requests; // non-dummy; ids must be unique and >= k
    LatencyModel latency;
    TiePolicy tie_policy;
    bool inline_checks = true;

    int k() const { return static_cast<int>(server_leaves.size()); }
    bool one_shot() const;
    void validate() const;

    std::string to_json() const;
    static Scenario from_json(const std::string& text);
};

enum class EventKind { Invoke, Send, Receive, Process, ScheduleEdge };

struct TraceEvent {
    int seq = 0;
    Rational time;
    EventKind kind = EventKind::Invoke;
    int msg = -1;
    NodeId node = kNoNode;          // invoke leaf node / receive-process node
    NodeId from = kNoNode;          // send source / receive sender
    NodeId to = kNoNode;            // send target
    RequestId request = kNoRequest; // invoke
    RequestId pred = kNoRequest;    // schedule edge
    RequestId succ = kNoRequest;    // schedule edge
    Rational latency;               // send
    NodeId link_removed = kNoNode;  // process
    NodeId link_added = kNoNode;    // process
};

/// Everything known about one find-predecessor message after the run.
/// hops[0] is the origin leaf; hops[i] was reached at arrival_time[i] with
/// per-hop latency hop_latency[i-1]; process_seq[i] is the trace sequence
/// number of the processing event at hops[i] (index 0 holds the send event).
struct MessageRecord {
    int id = -1;
    RequestId origin = kNoRequest;
    std::vector<NodeId> hops;
    std::vector<Rational> hop_latency;
    std::vector<Rational> arrival_time; // aligned with hops; [0] is the send time
    std::vector<int> process_seq;
    NodeId dest_node = kNoNode;
    RequestId scheduled_behind = kNoRequest;

    Rational total_latency() const;
};

struct Trace {
    std::shared_ptr<const Hst> hst;
    std::vector<Request> requests; // dummies first, ascending id
    int k = 0;
    bool one_shot = true;
    std::vector<TraceEvent> events;
    std::vector<MessageRecord> messages; // ascending message id
    ScheduleForest forest;

    const Request& request_by_id(RequestId id) const;
    const MessageRecord* message_by_id(int id) const;

    std::string to_jsonl() const;
    static Trace from_jsonl(const std::string& text);
    std::string summary_csv() const;
};

/// Raised when an execution violates a protocol invariant mid-run.
struct SimulationAbort : std::runtime_error {
    SimulationAbort(const std::string& what, int event_index)
        : std::runtime_error(what + " (event " + std::to_string(event_index) + ")"),
          event_index(event_index) {}
    int event_index;
};

/// Executes the scenario to completion and returns the full trace.
/// Deterministic: identical scenarios produce byte-identical traces.
Trace run(const Scenario& scenario);

/// Total communication cost: sum of message latencies over schedule edges.
Rational total_cost(const Trace& trace);

} // namespace dsms
