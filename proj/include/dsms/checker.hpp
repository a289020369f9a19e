#pragma once

#include "dsms/protocol.hpp"
#include "dsms/sim.hpp"

#include <string>
#include <vector>

namespace dsms {

struct InFlight {
    int msg = -1;
    NodeId from = kNoNode;
    NodeId to = kNoNode;
};

struct CheckItem {
    std::string name;
    bool pass = true;
    std::string witness;
};

struct CheckReport {
    std::vector<CheckItem> items;
    int first_violation_event = -1;

    bool all_pass() const {
        for (const auto& i : items)
            if (!i.pass) return false;
        return true;
    }
    std::string first_failure() const {
        for (const auto& i : items)
            if (!i.pass) return i.name + (i.witness.empty() ? "" : " [" + i.witness + "]");
        return "";
    }
    std::string to_json() const;
};

/// Structural invariants of a snapshot: non-empty link sets, exactly one of
/// {link, reverse link, in-transit message} per tree edge, acyclicity apart
/// from leaf self-loops, and a directed path from every leaf to a self-loop
/// leaf. Reports, never throws.
CheckReport check_state(const OverlayState& state, const std::vector<InFlight>& in_flight);

/// End-of-run guarantees: every request scheduled exactly once, no message
/// visits a node twice, message paths are the direct tree path between their
/// endpoint leaves, latencies respect the per-hop bound (with equality in
/// synchronous runs), and the schedule forest is k directed paths each headed
/// by a distinct dummy.
CheckReport check_trace(const Trace& trace);

} // namespace dsms
