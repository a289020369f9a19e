#include "dsms/sim.hpp"
#include "dsms/checker.hpp"
#include "dsms/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

namespace dsms {

namespace {

std::pair<NodeId, NodeId> edge_key(NodeId a, NodeId b) {
    return {std::min(a, b), std::max(a, b)};
}

} // namespace

Rational LatencyModel::hop_latency(int msg, NodeId a, NodeId b, const Rational& weight) const {
    switch (kind) {
    case Kind::Synchronous:
        return weight;
    case Kind::RandomFraction: {
        std::uint64_t r = mix(seed, static_cast<std::uint64_t>(msg),
                              static_cast<std::uint64_t>(std::min(a, b)),
                              static_cast<std::uint64_t>(std::max(a, b)));
        std::int64_t j = 1 + static_cast<std::int64_t>(r % denominator_bound);
        return weight * Rational(j, denominator_bound);
    }
    case Kind::Scripted: {
        auto it = script.find({msg, edge_key(a, b)});
        return it != script.end() ? it->second : weight;
    }
    }
    return weight;
}

void LatencyModel::validate(const Hst& hst) const {
    if (kind == Kind::RandomFraction && denominator_bound < 1)
        throw std::invalid_argument("random-fraction latency needs a positive denominator bound");
    if (kind != Kind::Scripted) return;
    for (const auto& [key, lat] : script) {
        auto [u, v] = key.second;
        if (u < 0 || v < 0 || u >= hst.node_count() || v >= hst.node_count())
            throw std::invalid_argument("latency script references a node outside the tree");
        NodeId child = hst.parent[v] == u ? v : (hst.parent[u] == v ? u : kNoNode);
        if (child == kNoNode)
            throw std::invalid_argument("latency script references a non-edge");
        Rational w = hst.edge_weight_above(child);
        if (!(Rational(0) < lat) || w < lat)
            throw std::invalid_argument("scripted latency must satisfy 0 < latency <= edge weight");
    }
}

bool Scenario::one_shot() const {
    for (const auto& r : requests)
        if (!r.time.is_zero()) return false;
    return true;
}

void Scenario::validate() const {
    if (!hst) throw std::invalid_argument("scenario has no tree");
    if (server_leaves.empty()) throw std::invalid_argument("scenario needs at least one server");
    std::set<int> distinct(server_leaves.begin(), server_leaves.end());
    if (distinct.size() != server_leaves.size())
        throw std::invalid_argument("server leaves must be distinct");
    for (int leaf : server_leaves)
        if (leaf < 0 || leaf >= hst->leaf_count())
            throw std::invalid_argument("server leaf out of range");
    std::set<RequestId> ids;
    for (const auto& r : requests) {
        if (r.is_dummy) throw std::invalid_argument("scenario requests must not be dummies");
        if (r.id < k()) throw std::invalid_argument("request ids below k are reserved for dummies");
        if (!ids.insert(r.id).second) throw std::invalid_argument("duplicate request id");
        if (r.leaf < 0 || r.leaf >= hst->leaf_count())
            throw std::invalid_argument("request leaf out of range");
        if (r.time.is_negative()) throw std::invalid_argument("request time must be >= 0");
    }
    latency.validate(*hst);
}

Rational MessageRecord::total_latency() const {
    Rational sum(0);
    for (const auto& l : hop_latency) sum += l;
    return sum;
}

const Request& Trace::request_by_id(RequestId id) const {
    for (const auto& r : requests)
        if (r.id == id) return r;
    throw std::invalid_argument("no such request id");
}

const MessageRecord* Trace::message_by_id(int id) const {
    for (const auto& m : messages)
        if (m.id == id) return &m;
    return nullptr;
}

namespace {

struct Arrival {
    Rational time;
    NodeId node;
    int msg;
    NodeId from;
};

struct ArrivalLater {
    bool operator()(const Arrival& a, const Arrival& b) const {
        if (a.time != b.time) return b.time < a.time;
        if (a.node != b.node) return a.node > b.node;
        return a.msg > b.msg;
    }
};

class Engine {
public:
    explicit Engine(const Scenario& sc) : sc_(sc), hst_(*sc.hst) {}

    Trace execute() {
        sc_.validate();
        const int k = sc_.k();
        trace_.hst = sc_.hst;
        trace_.k = k;
        trace_.one_shot = sc_.one_shot();
        for (int z = 0; z < k; ++z) {
            trace_.requests.push_back({z, sc_.server_leaves[z], Rational(0), true});
            trace_.forest.heads.push_back(z);
        }
        std::vector<Request> pending = sc_.requests;
        std::stable_sort(pending.begin(), pending.end(), [](const Request& a, const Request& b) {
            if (a.time != b.time) return a.time < b.time;
            return a.id < b.id;
        });
        {
            std::vector<Request> sorted = pending;
            std::sort(sorted.begin(), sorted.end(),
                      [](const Request& a, const Request& b) { return a.id < b.id; });
            for (const auto& r : sorted) trace_.requests.push_back(r);
        }

        state_ = init_overlay(hst_, sc_.server_leaves);
        for (int z = 0; z < k; ++z)
            state_.last_invoked[hst_.leaf_node[sc_.server_leaves[z]]] = z;

        std::size_t next_invoke = 0;
        while (next_invoke < pending.size() || !arrivals_.empty()) {
            bool take_invoke;
            if (next_invoke >= pending.size()) take_invoke = false;
            else if (arrivals_.empty()) take_invoke = true;
            else take_invoke = !(arrivals_.top().time < pending[next_invoke].time);
            if (take_invoke) {
                Rational t = pending[next_invoke].time;
                while (next_invoke < pending.size() && pending[next_invoke].time == t)
                    handle_invoke(pending[next_invoke++]);
            } else {
                drain_arrival_batch();
            }
        }

        if (scheduled_count_ != sc_.requests.size())
            throw SimulationAbort("run ended with unscheduled requests",
                                  static_cast<int>(trace_.events.size()) - 1);
        std::sort(trace_.messages.begin(), trace_.messages.end(),
                  [](const MessageRecord& a, const MessageRecord& b) { return a.id < b.id; });
        return std::move(trace_);
    }

private:
    TraceEvent& push_event(EventKind kind, const Rational& time) {
        TraceEvent ev;
        ev.seq = static_cast<int>(trace_.events.size());
        ev.time = time;
        ev.kind = kind;
        trace_.events.push_back(ev);
        return trace_.events.back();
    }

    MessageRecord& msg_record(int id) {
        for (auto& m : trace_.messages)
            if (m.id == id) return m;
        throw std::logic_error("unknown message id");
    }

    void inline_check() {
        if (!sc_.inline_checks) return;
        std::vector<InFlight> flight;
        for (const auto& [msg, edge] : in_flight_) flight.push_back({msg, edge.first, edge.second});
        CheckReport rep = check_state(state_, flight);
        if (!rep.all_pass())
            throw SimulationAbort("state invariant violated: " + rep.first_failure(),
                                  static_cast<int>(trace_.events.size()) - 1);
    }

    void emit_send(int msg, NodeId from, NodeId to, const Rational& now) {
        NodeId child = hst_.parent[to] == from ? to : from;
        Rational w = hst_.edge_weight_above(child);
        Rational lat = sc_.latency.hop_latency(msg, from, to, w);
        if (!(Rational(0) < lat) || w < lat)
            throw SimulationAbort("hop latency outside (0, edge weight]",
                                  static_cast<int>(trace_.events.size()));
        auto& ev = push_event(EventKind::Send, now);
        ev.msg = msg;
        ev.from = from;
        ev.to = to;
        ev.latency = lat;
        msg_record(msg).hop_latency.push_back(lat);
        in_flight_[msg] = {from, to};
        arrivals_.push({now + lat, to, msg, from});
    }

    void handle_invoke(const Request& r) {
        NodeId leaf = hst_.leaf_node[r.leaf];
        auto& ev = push_event(EventKind::Invoke, r.time);
        ev.node = leaf;
        ev.request = r.id;
        InvokeOutcome out = on_invoke(state_, r.leaf, r);
        if (out.scheduled_locally) {
            auto& se = push_event(EventKind::ScheduleEdge, r.time);
            se.pred = out.predecessor;
            se.succ = r.id;
            se.msg = -1;
            trace_.forest.edges.push_back({out.predecessor, r.id, -1});
            ++scheduled_count_;
        } else {
            MessageRecord m;
            m.id = r.id;
            m.origin = r.id;
            m.hops.push_back(leaf);
            m.arrival_time.push_back(r.time);
            m.process_seq.push_back(static_cast<int>(trace_.events.size()));
            trace_.messages.push_back(std::move(m));
            emit_send(r.id, leaf, out.message_to, r.time);
        }
        inline_check();
    }

    void drain_arrival_batch() {
        Rational t = arrivals_.top().time;
        std::vector<Arrival> batch;
        while (!arrivals_.empty() && arrivals_.top().time == t) {
            batch.push_back(arrivals_.top());
            arrivals_.pop();
        }
        std::stable_sort(batch.begin(), batch.end(), [&](const Arrival& a, const Arrival& b) {
            if (a.node != b.node) return a.node < b.node;
            auto ka = sc_.tie_policy.arrival_key(a.node, a.msg);
            auto kb = sc_.tie_policy.arrival_key(b.node, b.msg);
            if (ka != kb) return ka < kb;
            return a.msg < b.msg;
        });
        for (const auto& a : batch) handle_arrival(a);
    }

    void handle_arrival(const Arrival& a) {
        auto& rev = push_event(EventKind::Receive, a.time);
        rev.msg = a.msg;
        rev.node = a.node;
        rev.from = a.from;
        in_flight_.erase(a.msg);

        MessageRecord& m = msg_record(a.msg);
        m.hops.push_back(a.node);
        m.arrival_time.push_back(a.time);
        if (m.hops.size() > static_cast<std::size_t>(hst_.node_count()) + 1)
            throw SimulationAbort("message revisited a node",
                                  static_cast<int>(trace_.events.size()) - 1);

        ReceiveOutcome out = on_receive(state_, a.node, a.msg, a.from, sc_.tie_policy);
        auto& pev = push_event(EventKind::Process, a.time);
        pev.msg = a.msg;
        pev.node = a.node;
        pev.from = a.from;
        pev.link_removed = out.link_removed;
        pev.link_added = out.link_added;
        m.process_seq.push_back(pev.seq);

        if (out.forwarded) {
            emit_send(a.msg, a.node, out.next_hop, a.time);
        } else {
            m.dest_node = a.node;
            m.scheduled_behind = out.predecessor;
            auto& se = push_event(EventKind::ScheduleEdge, a.time);
            se.msg = a.msg;
            se.pred = out.predecessor;
            se.succ = a.msg; // message id == origin request id
            trace_.forest.edges.push_back({out.predecessor, a.msg, a.msg});
            ++scheduled_count_;
        }
        inline_check();
    }

    Scenario sc_;
    const Hst& hst_;
    OverlayState state_;
    Trace trace_;
    std::priority_queue<Arrival, std::vector<Arrival>, ArrivalLater> arrivals_;
    std::map<int, std::pair<NodeId, NodeId>> in_flight_;
    std::size_t scheduled_count_ = 0;
};

} // namespace

Trace run(const Scenario& scenario) { return Engine(scenario).execute(); }

Rational total_cost(const Trace& trace) {
    Rational sum(0);
    for (const auto& e : trace.forest.edges) {
        if (e.msg < 0) continue;
        const MessageRecord* m = trace.message_by_id(e.msg);
        if (!m) throw std::logic_error("schedule edge references unknown message");
        sum += m->total_latency();
    }
    return sum;
}

// --- serialization ----------------------------------------------------------

namespace {

using njson = nlohmann::ordered_json;

njson rat_json(const Rational& r) { return njson::array({r.num(), r.den()}); }

Rational rat_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("rational must be [num, den]");
    return Rational(j[0].get<std::int64_t>(), j[1].get<std::int64_t>());
}

const char* kind_name(EventKind k) {
    switch (k) {
    case EventKind::Invoke: return "invoke";
    case EventKind::Send: return "send";
    case EventKind::Receive: return "receive";
    case EventKind::Process: return "process";
    case EventKind::ScheduleEdge: return "schedule-edge";
    }
    return "?";
}

EventKind kind_from(const std::string& s) {
    if (s == "invoke") return EventKind::Invoke;
    if (s == "send") return EventKind::Send;
    if (s == "receive") return EventKind::Receive;
    if (s == "process") return EventKind::Process;
    if (s == "schedule-edge") return EventKind::ScheduleEdge;
    throw std::invalid_argument("unknown event kind: " + s);
}

} // namespace

std::string Scenario::to_json() const {
    njson j;
    j["hst"] = njson::parse(hst->to_json());
    j["servers"] = server_leaves;
    auto reqs = njson::array();
    for (const auto& r : requests)
        reqs.push_back({{"id", r.id}, {"node", r.leaf}, {"time", rat_json(r.time)}});
    j["requests"] = reqs;
    njson lat;
    switch (latency.kind) {
    case LatencyModel::Kind::Synchronous: lat["kind"] = "synchronous"; break;
    case LatencyModel::Kind::RandomFraction:
        lat["kind"] = "random-fraction";
        lat["seed"] = latency.seed;
        lat["denominator_bound"] = latency.denominator_bound;
        break;
    case LatencyModel::Kind::Scripted: {
        lat["kind"] = "scripted";
        auto entries = njson::array();
        for (const auto& [key, l] : latency.script)
            entries.push_back({{"msg", key.first},
                               {"edge", {key.second.first, key.second.second}},
                               {"latency", rat_json(l)}});
        lat["script"] = entries;
        break;
    }
    }
    j["latency"] = lat;
    njson tie;
    switch (tie_policy.kind) {
    case TiePolicy::Kind::LowestId: tie["kind"] = "lowest-id"; break;
    case TiePolicy::Kind::SeededRandom:
        tie["kind"] = "seeded-random";
        tie["seed"] = tie_policy.seed;
        break;
    case TiePolicy::Kind::Scripted: {
        tie["kind"] = "scripted";
        auto ranks = njson::array();
        for (const auto& [key, rank] : tie_policy.arrival_rank)
            ranks.push_back({{"node", key.first}, {"msg", key.second}, {"rank", rank}});
        tie["arrival_rank"] = ranks;
        auto picks = njson::array();
        for (const auto& [key, child] : tie_policy.child_choice)
            picks.push_back({{"node", key.first}, {"msg", key.second}, {"child", child}});
        tie["child_choice"] = picks;
        break;
    }
    }
    j["tie_policy"] = tie;
    return j.dump();
}

Scenario Scenario::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Scenario sc;
    sc.hst = std::make_shared<Hst>(Hst::from_json(j.at("hst").dump()));
    sc.server_leaves = j.at("servers").get<std::vector<int>>();
    for (const auto& r : j.at("requests"))
        sc.requests.push_back({r.at("id").get<RequestId>(), r.at("node").get<int>(),
                               rat_from(r.at("time")), false});
    const auto& lat = j.at("latency");
    std::string lk = lat.at("kind").get<std::string>();
    if (lk == "synchronous") {
        sc.latency.kind = LatencyModel::Kind::Synchronous;
    } else if (lk == "random-fraction") {
        sc.latency.kind = LatencyModel::Kind::RandomFraction;
        sc.latency.seed = lat.value("seed", 0ULL);
        sc.latency.denominator_bound = lat.value("denominator_bound", 64);
    } else if (lk == "scripted") {
        sc.latency.kind = LatencyModel::Kind::Scripted;
        for (const auto& e : lat.at("script")) {
            auto edge = e.at("edge");
            NodeId a = edge.at(0).get<NodeId>(), b = edge.at(1).get<NodeId>();
            sc.latency.script[{e.at("msg").get<int>(), {std::min(a, b), std::max(a, b)}}] =
                rat_from(e.at("latency"));
        }
    } else {
        throw std::invalid_argument("unknown latency kind: " + lk);
    }
    if (j.contains("tie_policy")) {
        const auto& tie = j.at("tie_policy");
        std::string tk = tie.at("kind").get<std::string>();
        if (tk == "lowest-id") {
            sc.tie_policy.kind = TiePolicy::Kind::LowestId;
        } else if (tk == "seeded-random") {
            sc.tie_policy.kind = TiePolicy::Kind::SeededRandom;
            sc.tie_policy.seed = tie.value("seed", 0ULL);
        } else if (tk == "scripted") {
            sc.tie_policy.kind = TiePolicy::Kind::Scripted;
            for (const auto& e : tie.value("arrival_rank", nlohmann::json::array()))
                sc.tie_policy.arrival_rank[{e.at("node").get<NodeId>(), e.at("msg").get<int>()}] =
                    e.at("rank").get<int>();
            for (const auto& e : tie.value("child_choice", nlohmann::json::array()))
                sc.tie_policy.child_choice[{e.at("node").get<NodeId>(), e.at("msg").get<int>()}] =
                    e.at("child").get<NodeId>();
        } else {
            throw std::invalid_argument("unknown tie policy kind: " + tk);
        }
    }
    return sc;
}

std::string Trace::to_jsonl() const {
    std::ostringstream out;
    njson header;
    header["type"] = "header";
    header["hst"] = njson::parse(hst->to_json());
    header["k"] = k;
    header["one_shot"] = one_shot;
    auto reqs = njson::array();
    for (const auto& r : requests)
        reqs.push_back({{"id", r.id}, {"node", r.leaf}, {"time", rat_json(r.time)},
                        {"dummy", r.is_dummy}});
    header["requests"] = reqs;
    out << header.dump() << "\n";
    for (const auto& e : events) {
        njson j;
        j["type"] = "event";
        j["seq"] = e.seq;
        j["t"] = rat_json(e.time);
        j["kind"] = kind_name(e.kind);
        switch (e.kind) {
        case EventKind::Invoke:
            j["request"] = e.request;
            j["node"] = e.node;
            break;
        case EventKind::Send:
            j["msg"] = e.msg;
            j["edge"] = {e.from, e.to};
            j["latency"] = rat_json(e.latency);
            break;
        case EventKind::Receive:
            j["msg"] = e.msg;
            j["node"] = e.node;
            j["from"] = e.from;
            break;
        case EventKind::Process:
            j["msg"] = e.msg;
            j["node"] = e.node;
            j["removed"] = e.link_removed;
            j["added"] = e.link_added;
            break;
        case EventKind::ScheduleEdge:
            j["pred"] = e.pred;
            j["succ"] = e.succ;
            j["msg"] = e.msg;
            break;
        }
        out << j.dump() << "\n";
    }
    njson tail;
    tail["type"] = "forest";
    auto edges = njson::array();
    for (const auto& e : forest.edges) edges.push_back({e.pred, e.succ, e.msg});
    tail["edges"] = edges;
    tail["heads"] = forest.heads;
    out << tail.dump() << "\n";
    return out.str();
}

Trace Trace::from_jsonl(const std::string& text) {
    Trace tr;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool have_header = false, have_forest = false;
    auto fail = [&](const std::string& why) {
        throw std::invalid_argument("trace line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            fail(e.what());
        }
        std::string type = j.value("type", "");
        if (type == "header") {
            tr.hst = std::make_shared<Hst>(Hst::from_json(j.at("hst").dump()));
            tr.k = j.at("k").get<int>();
            tr.one_shot = j.at("one_shot").get<bool>();
            for (const auto& r : j.at("requests"))
                tr.requests.push_back({r.at("id").get<RequestId>(), r.at("node").get<int>(),
                                       rat_from(r.at("time")), r.at("dummy").get<bool>()});
            have_header = true;
        } else if (type == "event") {
            if (!have_header) fail("event before header");
            TraceEvent e;
            e.seq = j.at("seq").get<int>();
            if (e.seq != static_cast<int>(tr.events.size())) fail("event sequence gap");
            e.time = rat_from(j.at("t"));
            e.kind = kind_from(j.at("kind").get<std::string>());
            switch (e.kind) {
            case EventKind::Invoke:
                e.request = j.at("request").get<RequestId>();
                e.node = j.at("node").get<NodeId>();
                break;
            case EventKind::Send:
                e.msg = j.at("msg").get<int>();
                e.from = j.at("edge").at(0).get<NodeId>();
                e.to = j.at("edge").at(1).get<NodeId>();
                e.latency = rat_from(j.at("latency"));
                break;
            case EventKind::Receive:
                e.msg = j.at("msg").get<int>();
                e.node = j.at("node").get<NodeId>();
                e.from = j.at("from").get<NodeId>();
                break;
            case EventKind::Process:
                e.msg = j.at("msg").get<int>();
                e.node = j.at("node").get<NodeId>();
                e.link_removed = j.at("removed").get<NodeId>();
                e.link_added = j.at("added").get<NodeId>();
                break;
            case EventKind::ScheduleEdge:
                e.pred = j.at("pred").get<RequestId>();
                e.succ = j.at("succ").get<RequestId>();
                e.msg = j.at("msg").get<int>();
                break;
            }
            tr.events.push_back(e);
        } else if (type == "forest") {
            if (!have_header) fail("forest before header");
            for (const auto& e : j.at("edges"))
                tr.forest.edges.push_back({e.at(0).get<RequestId>(), e.at(1).get<RequestId>(),
                                           e.at(2).get<int>()});
            tr.forest.heads = j.at("heads").get<std::vector<RequestId>>();
            have_forest = true;
        } else {
            fail("unknown line type");
        }
    }
    if (!have_header || !have_forest)
        throw std::invalid_argument("trace file is missing header or forest line");

    // Reconstruct message records from the event stream.
    for (const auto& e : tr.events) {
        if (e.kind == EventKind::Send) {
            MessageRecord* m = nullptr;
            for (auto& cand : tr.messages)
                if (cand.id == e.msg) m = &cand;
            if (!m) {
                MessageRecord rec;
                rec.id = e.msg;
                rec.origin = e.msg;
                rec.hops.push_back(e.from);
                rec.arrival_time.push_back(e.time);
                rec.process_seq.push_back(e.seq);
                tr.messages.push_back(rec);
                m = &tr.messages.back();
            }
            m->hop_latency.push_back(e.latency);
        } else if (e.kind == EventKind::Receive) {
            for (auto& m : tr.messages) {
                if (m.id == e.msg) {
                    m.hops.push_back(e.node);
                    m.arrival_time.push_back(e.time);
                }
            }
        } else if (e.kind == EventKind::Process) {
            for (auto& m : tr.messages)
                if (m.id == e.msg) m.process_seq.push_back(e.seq);
        } else if (e.kind == EventKind::ScheduleEdge && e.msg >= 0) {
            for (auto& m : tr.messages) {
                if (m.id == e.msg) {
                    m.dest_node = m.hops.back();
                    m.scheduled_behind = e.pred;
                }
            }
        }
    }
    std::sort(tr.messages.begin(), tr.messages.end(),
              [](const MessageRecord& a, const MessageRecord& b) { return a.id < b.id; });
    return tr;
}

std::string Trace::summary_csv() const {
    std::ostringstream out;
    out << "msg,src_leaf,dest_leaf,hops,latency,weight,pred,succ\n";
    for (const auto& e : forest.edges) {
        if (e.msg < 0) {
            const Request& succ = request_by_id(e.succ);
            out << "-," << succ.leaf << "," << succ.leaf << ",0,0,0," << e.pred << "," << e.succ
                << "\n";
            continue;
        }
        const MessageRecord& m = *message_by_id(e.msg);
        int src = hst->leaf_index_of[m.hops.front()];
        int dst = hst->leaf_index_of[m.dest_node];
        Rational w = hst->distance_between_nodes(m.hops.front(), m.dest_node);
        out << m.id << "," << src << "," << dst << "," << (m.hops.size() - 1) << ","
            << m.total_latency().str() << "," << w.str() << "," << e.pred << "," << e.succ << "\n";
    }
    return out.str();
}

} // namespace dsms
