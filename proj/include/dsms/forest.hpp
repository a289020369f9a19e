#pragma once

#include "dsms/graph.hpp"
#include "dsms/hst.hpp"
#include "dsms/protocol.hpp"
#include "dsms/rational.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dsms {

/// Distance between two points (leaf indices / graph nodes).
using DistFn = std::function<Rational(int, int)>;

DistFn dist_from(const Hst& hst);
DistFn dist_from(const Metric& metric);

/// Undirected spanning k-forest over the request set: exactly k trees, each
/// holding exactly one dummy request.
struct RequestForest {
    std::vector<Request> requests; // dummies included
    std::vector<std::pair<RequestId, RequestId>> edges;
    std::vector<RequestId> heads; // the dummy ids

    int k() const { return static_cast<int>(heads.size()); }
    const Request& request_by_id(RequestId id) const;
    void validate() const; // spanning, k components, one dummy per component

    std::string to_json(const DistFn& dist) const;
};

/// Converts the directed schedule forest of a run into a RequestForest.
RequestForest to_request_forest(const std::vector<Request>& requests,
                                const ScheduleForest& schedule);

Rational forest_weight(const RequestForest& f, const DistFn& dist);

/// Exact minimum-weight dummy-respecting spanning k-forest, by exhaustive
/// assignment of the non-dummy requests to dummies (subset dynamic program
/// over all 2^m group choices, minimum spanning tree per group).
/// Rejects instances with more than 12 requests.
RequestForest min_k_forest_bruteforce(const std::vector<Request>& requests, const DistFn& dist);

/// Greedy locality-based forest on an HST: bottom-up per subtree, dummy-free
/// components merge into one and attach to a dummy component at the subtree's
/// level. Satisfies the intra/inter-component locality properties by
/// construction; tie_seed only varies which equal-weight edges are chosen.
RequestForest build_locality_forest(const Hst& hst, const std::vector<Request>& requests,
                                    std::uint64_t tie_seed);

struct ExchangeResult {
    bool holds = true;
    std::pair<RequestId, RequestId> edge{kNoRequest, kNoRequest};       // violating edge
    std::pair<RequestId, RequestId> replacement{kNoRequest, kNoRequest}; // its best e*
    Rational edge_weight;
    Rational replacement_weight;
};

/// For every forest edge e, finds the minimum-weight replacement edge e* that
/// keeps the forest spanning and dummy-respecting and checks
/// w(e*) >= w(e) / lambda. With lambda = 1 this certifies minimality.
ExchangeResult verify_exchange_property(const RequestForest& f, const DistFn& dist,
                                        const Rational& lambda);

/// Lower bound on the cost of any protocol for a one-shot instance.
Rational opt_lower_bound(const std::vector<Request>& requests, const DistFn& dist);

struct LocalityCheck {
    bool intra_ok = true;
    bool inter_ok = true;
    NodeId witness_subtree = kNoNode;
    bool ok() const { return intra_ok && inter_ok; }
};

/// Structural test of the two locality properties on every subtree.
LocalityCheck check_locality_properties(const RequestForest& f, const Hst& hst);

} // namespace dsms
