#include "sagaqnet/scenario.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace sqn {

bool Scenario::operator==(const Scenario& other) const {
    return nodes == other.nodes && channels == other.channels && classical == other.classical &&
           entanglement == other.entanglement && objectives == other.objectives &&
           policy == other.policy && monitor == other.monitor && horizon == other.horizon;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Line {
    int number = 0;
    std::map<std::string, std::string> kv;
    std::vector<std::string> order;  // key order as written
};

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    ParseResult run() {
        collect();
        if (diags_.empty()) build();
        ParseResult res;
        res.diagnostics = diags_;
        if (diags_.empty()) res.scenario = std::move(scenario_);
        return res;
    }

private:
    void fail(int line, const std::string& msg) { diags_.push_back({line, msg}); }

    void collect() {
        std::istringstream is(text_);
        std::string raw;
        int number = 0;
        std::string section;
        while (std::getline(is, raw)) {
            ++number;
            auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            std::istringstream ls(raw);
            std::string tok;
            if (!(ls >> tok)) continue;
            if (tok.front() == '[') {
                if (tok.back() != ']') {
                    fail(number, "malformed section header '" + tok + "'");
                    continue;
                }
                section = tok.substr(1, tok.size() - 2);
                static const std::set<std::string> known{"nodes",      "channels",  "classical",
                                                         "entanglement", "objectives", "policy",
                                                         "monitor"};
                if (!known.count(section)) fail(number, "unknown section '" + section + "'");
                continue;
            }
            if (section.empty()) {
                fail(number, "record before any section header");
                continue;
            }
            Line line;
            line.number = number;
            bool ok = true;
            do {
                auto eq = tok.find('=');
                if (eq == std::string::npos || eq == 0) {
                    fail(number, "expected key=value, got '" + tok + "'");
                    ok = false;
                    break;
                }
                std::string key = tok.substr(0, eq);
                if (line.kv.count(key)) {
                    fail(number, "duplicate key '" + key + "'");
                    ok = false;
                    break;
                }
                line.kv[key] = tok.substr(eq + 1);
                line.order.push_back(key);
            } while (ls >> tok);
            if (ok) sections_[section].push_back(std::move(line));
        }
    }

    // -- typed readers --------------------------------------------------------

    std::optional<std::string> get(const Line& l, const std::string& key) {
        auto it = l.kv.find(key);
        if (it == l.kv.end()) return std::nullopt;
        return it->second;
    }

    std::string need(const Line& l, const std::string& key) {
        auto v = get(l, key);
        if (!v) {
            fail(l.number, "missing key '" + key + "'");
            return "";
        }
        return *v;
    }

    double number_of(const Line& l, const std::string& key, const std::string& text) {
        char* end = nullptr;
        double v = std::strtod(text.c_str(), &end);
        if (text.empty() || end != text.c_str() + text.size()) {
            fail(l.number, "key '" + key + "': '" + text + "' is not a number");
            return 0.0;
        }
        return v;
    }

    double num(const Line& l, const std::string& key, double fallback = 0.0) {
        auto v = get(l, key);
        if (!v) return fallback;
        return number_of(l, key, *v);
    }

    double need_num(const Line& l, const std::string& key) { return number_of(l, key, need(l, key)); }

    double probability(const Line& l, const std::string& key, double fallback = 0.0) {
        double v = num(l, key, fallback);
        if (v < 0.0 || v > 1.0) fail(l.number, "key '" + key + "': " + fmt(v) + " outside [0,1]");
        return v;
    }

    double nonneg(const Line& l, const std::string& key, double fallback = 0.0) {
        double v = num(l, key, fallback);
        if (v < 0.0) fail(l.number, "key '" + key + "': negative value");
        return v;
    }

    bool boolean(const Line& l, const std::string& key, bool fallback) {
        auto v = get(l, key);
        if (!v) return fallback;
        if (*v == "true") return true;
        if (*v == "false") return false;
        fail(l.number, "key '" + key + "': expected true or false");
        return fallback;
    }

    NodeId node_ref(const Line& l, const std::string& key) {
        std::string id = need(l, key);
        if (!id.empty() && !scenario_.nodes.count(id))
            fail(l.number, "key '" + key + "': undeclared node '" + id + "'");
        return id;
    }

    // -- section builders -----------------------------------------------------

    void build() {
        for (const auto& l : sections_["nodes"]) build_node(l);
        for (const auto& l : sections_["channels"]) build_channel(l);
        for (const auto& l : sections_["classical"]) build_classical(l);
        for (const auto& l : sections_["entanglement"]) build_record(l);
        for (const auto& l : sections_["objectives"]) build_objective(l);
        for (const auto& l : sections_["policy"]) build_policy(l);
        for (const auto& l : sections_["monitor"]) build_monitor(l);
    }

    void build_node(const Line& l) {
        CapabilitySet caps;
        caps.node = need(l, "id");
        std::string tasks = get(l, "tasks").value_or("all");
        if (tasks == "all") {
            caps.tasks = all_task_kinds();
        } else {
            std::map<std::string, TaskKind> by_name;
            for (TaskKind k : all_task_kinds()) by_name[to_string(k)] = k;
            std::istringstream ts(tasks);
            std::string name;
            while (std::getline(ts, name, ',')) {
                auto it = by_name.find(name);
                if (it == by_name.end()) fail(l.number, "unknown task kind '" + name + "'");
                else caps.tasks.insert(it->second);
            }
        }
        caps.noise.p_gate = probability(l, "p_gate");
        caps.noise.p_meas = probability(l, "p_meas");
        caps.noise.t_mem = num(l, "t_mem", 1.0);
        if (caps.noise.t_mem <= 0.0) fail(l.number, "key 't_mem': must be positive");
        caps.memory_slots = int(num(l, "memory_slots", 8));
        if (caps.node.empty()) return;
        if (scenario_.nodes.count(caps.node)) fail(l.number, "duplicate node '" + caps.node + "'");
        scenario_.nodes[caps.node] = caps;
    }

    void build_channel(const Line& l) {
        ChannelEdge e;
        e.a = node_ref(l, "a");
        e.b = node_ref(l, "b");
        e.length_km = nonneg(l, "length");
        e.p_loss = probability(l, "p_loss");
        e.q_depol = probability(l, "q_depol");
        e.latency = nonneg(l, "latency");
        scenario_.channels.push_back(e);
    }

    void build_classical(const Line& l) {
        ClassicalLink link;
        link.a = node_ref(l, "a");
        link.b = node_ref(l, "b");
        link.latency = nonneg(l, "latency");
        scenario_.classical.push_back(link);
    }

    void build_record(const Line& l) {
        EntanglementRecord rec;
        rec.id = need(l, "id");
        NodeId a = node_ref(l, "a"), b = node_ref(l, "b");
        int slot_a = int(num(l, "slot_a", 0)), slot_b = int(num(l, "slot_b", 0));
        double f = probability(l, "fidelity", 1.0);
        if (f < 0.25) fail(l.number, "key 'fidelity': below 0.25");
        rec.created_at = nonneg(l, "created_at");
        if (a.empty() || b.empty() || rec.id.empty()) return;
        if (a == b && slot_a == slot_b) {
            fail(l.number, "record endpoints collide");
            return;
        }
        rec.graph = bell_graph({a, slot_a}, {b, slot_b});
        rec.quality = werner(std::max(f, 0.25));
        scenario_.entanglement.push_back(rec);
    }

    void build_objective(const Line& l) {
        Objective o;
        o.id = need(l, "id");
        std::string kind = need(l, "kind");
        if (kind == "establish_bell") o.kind = ObjectiveKind::EstablishBell;
        else if (kind == "establish_graph") o.kind = ObjectiveKind::EstablishGraphState;
        else if (kind == "send_qubit") o.kind = ObjectiveKind::SendQubit;
        else if (kind == "send_classical") o.kind = ObjectiveKind::SendClassical;
        else {
            fail(l.number, "unknown objective kind '" + kind + "'");
            return;
        }
        if (o.kind == ObjectiveKind::EstablishGraphState) {
            std::istringstream ns(need(l, "nodes"));
            std::string id;
            while (std::getline(ns, id, ',')) {
                if (!scenario_.nodes.count(id))
                    fail(l.number, "key 'nodes': undeclared node '" + id + "'");
                o.graph.nodes.insert(id);
            }
            std::istringstream es(need(l, "edges"));
            std::string edge;
            while (std::getline(es, edge, ',')) {
                auto dash = edge.find('-');
                if (dash == std::string::npos) {
                    fail(l.number, "key 'edges': expected a-b, got '" + edge + "'");
                    continue;
                }
                NodeId x = edge.substr(0, dash), y = edge.substr(dash + 1);
                if (!o.graph.nodes.count(x) || !o.graph.nodes.count(y))
                    fail(l.number, "key 'edges': edge endpoint outside node list");
                o.graph.edges.insert({std::min(x, y), std::max(x, y)});
            }
        } else {
            o.a = node_ref(l, "a");
            o.b = node_ref(l, "b");
        }
        o.min_fidelity = probability(l, "min_fidelity");
        o.priority = int(num(l, "priority", 1));
        if (o.priority < 0) fail(l.number, "key 'priority': negative");
        o.arrival = nonneg(l, "arrival");
        std::string mode = get(l, "mode").value_or("orchestration");
        if (mode == "orchestration") o.mode = ExecMode::Orchestration;
        else if (mode == "choreography") o.mode = ExecMode::Choreography;
        else fail(l.number, "unknown mode '" + mode + "'");
        o.payload = get(l, "payload").value_or("");
        scenario_.objectives.push_back(o);
    }

    void build_policy(const Line& l) {
        auto& p = scenario_.policy;
        p.prefer_preshared = boolean(l, "prefer_preshared", p.prefer_preshared);
        p.purify_target_rounds = int(num(l, "purify_target_rounds", p.purify_target_rounds));
        p.retry_cap = int(num(l, "retry_cap", p.retry_cap));
        if (p.retry_cap < 1) fail(l.number, "key 'retry_cap': must be >= 1");
        p.latency_weight = num(l, "latency_weight", p.latency_weight);
        scenario_.horizon = nonneg(l, "horizon", scenario_.horizon);
    }

    void build_monitor(const Line& l) {
        if (get(l, "period")) {
            double p = need_num(l, "period");
            if (p <= 0.0) fail(l.number, "key 'period': must be positive");
            scenario_.monitor.period = p;
            return;
        }
        MaintainedPair mp;
        mp.a = node_ref(l, "a");
        mp.b = node_ref(l, "b");
        mp.low_water = int(num(l, "low_water", 1));
        mp.min_fidelity = probability(l, "min_fidelity", 0.5);
        scenario_.monitor.pairs.push_back(mp);
    }

    const std::string& text_;
    std::map<std::string, std::vector<Line>> sections_;
    std::vector<Diagnostic> diags_;
    Scenario scenario_;
};

}  // namespace

ParseResult parse_scenario(const std::string& text) { return Parser(text).run(); }

std::string print_scenario(const Scenario& s) {
    std::ostringstream os;
    os << "[nodes]\n";
    for (const auto& [id, caps] : s.nodes) {
        os << "id=" << id;
        if (caps.tasks == all_task_kinds()) {
            os << " tasks=all";
        } else {
            os << " tasks=";
            bool first = true;
            for (TaskKind k : caps.tasks) {
                if (!first) os << ",";
                os << to_string(k);
                first = false;
            }
        }
        os << " p_gate=" << fmt(caps.noise.p_gate) << " p_meas=" << fmt(caps.noise.p_meas)
           << " t_mem=" << fmt(caps.noise.t_mem) << " memory_slots=" << caps.memory_slots << "\n";
    }
    os << "[channels]\n";
    for (const auto& e : s.channels)
        os << "a=" << e.a << " b=" << e.b << " length=" << fmt(e.length_km)
           << " p_loss=" << fmt(e.p_loss) << " q_depol=" << fmt(e.q_depol)
           << " latency=" << fmt(e.latency) << "\n";
    os << "[classical]\n";
    for (const auto& l : s.classical)
        os << "a=" << l.a << " b=" << l.b << " latency=" << fmt(l.latency) << "\n";
    os << "[entanglement]\n";
    for (const auto& r : s.entanglement) {
        auto vs = r.graph.vertices();
        auto it = vs.begin();
        VertexRef va = *it++;
        VertexRef vb = *it;
        os << "id=" << r.id << " a=" << va.node << " b=" << vb.node << " slot_a=" << va.slot
           << " slot_b=" << vb.slot << " fidelity=" << fmt(fidelity_of(r.quality))
           << " created_at=" << fmt(r.created_at) << "\n";
    }
    os << "[objectives]\n";
    for (const auto& o : s.objectives) {
        os << "id=" << o.id << " kind=" << to_string(o.kind);
        if (o.kind == ObjectiveKind::EstablishGraphState) {
            os << " nodes=";
            bool first = true;
            for (const auto& n : o.graph.nodes) {
                if (!first) os << ",";
                os << n;
                first = false;
            }
            os << " edges=";
            first = true;
            for (const auto& [x, y] : o.graph.edges) {
                if (!first) os << ",";
                os << x << "-" << y;
                first = false;
            }
        } else {
            os << " a=" << o.a << " b=" << o.b;
        }
        os << " min_fidelity=" << fmt(o.min_fidelity) << " priority=" << o.priority
           << " arrival=" << fmt(o.arrival) << " mode=" << to_string(o.mode);
        if (!o.payload.empty()) os << " payload=" << o.payload;
        os << "\n";
    }
    os << "[policy]\n";
    os << "prefer_preshared=" << (s.policy.prefer_preshared ? "true" : "false")
       << " purify_target_rounds=" << s.policy.purify_target_rounds
       << " retry_cap=" << s.policy.retry_cap
       << " latency_weight=" << fmt(s.policy.latency_weight) << " horizon=" << fmt(s.horizon)
       << "\n";
    os << "[monitor]\n";
    os << "period=" << fmt(s.monitor.period) << "\n";
    for (const auto& mp : s.monitor.pairs)
        os << "a=" << mp.a << " b=" << mp.b << " low_water=" << mp.low_water
           << " min_fidelity=" << fmt(mp.min_fidelity) << "\n";
    return os.str();
}

}  // namespace sqn
