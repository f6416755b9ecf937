#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sagaqnet/saga.hpp"

using namespace sqn;

namespace {

// the repeater line used by the figure scenarios: nodes 1..n, uniform noise
ResourceView line_view(int n, double p_gate = 0.005, double p_meas = 0.005,
                       double q_depol = 0.02, double p_loss = 0.0) {
    ResourceView v;
    for (int i = 1; i <= n; ++i) {
        CapabilitySet caps;
        caps.node = std::to_string(i);
        caps.tasks = all_task_kinds();
        caps.noise.p_gate = p_gate;
        caps.noise.p_meas = p_meas;
        caps.noise.t_mem = 1e9;
        caps.memory_slots = 16;
        v.preload_capability(caps);
    }
    for (int i = 1; i < n; ++i) {
        v.preload_channel({std::to_string(i), std::to_string(i + 1), 10.0, p_loss, q_depol,
                           5e-5, {}});
        v.preload_classical({std::to_string(i), std::to_string(i + 1), 0.0});
    }
    return v;
}

EntanglementRecord preshared(const RecordId& id, const NodeId& a, int sa, const NodeId& b, int sb,
                             double f) {
    EntanglementRecord rec;
    rec.id = id;
    rec.graph = bell_graph({a, sa}, {b, sb});
    rec.quality = werner(f);
    return rec;
}

Objective bell_objective(const NodeId& a, const NodeId& b, double min_f) {
    Objective o;
    o.id = "obj";
    o.kind = ObjectiveKind::EstablishBell;
    o.a = a;
    o.b = b;
    o.min_fidelity = min_f;
    return o;
}

std::vector<TaskKind> kinds_of(const Saga& s) {
    std::vector<TaskKind> ks;
    for (const auto& t : s.tasks) ks.push_back(t.kind);
    return ks;
}

int count_kind(const Saga& s, TaskKind k) {
    int n = 0;
    for (const auto& t : s.tasks)
        if (t.kind == k) ++n;
    return n;
}

}  // namespace

TEST_CASE("end-to-end bell over a bare 5-node line: two swap trees feeding one purify") {
    ResourceView v = line_view(5);
    PlannerPolicy policy;
    Saga s = plan(bell_objective("1", "5", 0.93), v, policy, 0.0, "1", "s0");

    REQUIRE(kinds_of(s) == std::vector<TaskKind>{TaskKind::Midpoint, TaskKind::Midpoint,
                                                 TaskKind::Swap, TaskKind::Midpoint,
                                                 TaskKind::Midpoint, TaskKind::Swap,
                                                 TaskKind::Purify});
    std::set<std::pair<int, int>> deps(s.deps.begin(), s.deps.end());
    CHECK(deps == std::set<std::pair<int, int>>{
                      {0, 2}, {1, 2}, {3, 5}, {4, 5}, {2, 6}, {5, 6}});
    CHECK(s.input_locks.empty());
    REQUIRE(s.final_records.size() == 1);
    CHECK(s.tasks[6].params.output_records.at(0) == s.final_records[0]);
    // the swaps pivot at the middle repeater
    CHECK(s.tasks[2].params.participants == std::vector<NodeId>{"3"});
    CHECK(s.tasks[5].params.participants == std::vector<NodeId>{"3"});

    Estimate e = estimate(s, v, 0.0);
    CHECK(e.f_pred >= 0.93);
    CHECK(e.t_pred > 0.0);
}

TEST_CASE("preshared segments plan as purify+purify feeding a swap, no generation") {
    ResourceView v = line_view(5);
    v.preload_record(preshared("pre13a", "1", 0, "3", 0, 0.95));
    v.preload_record(preshared("pre13b", "1", 1, "3", 1, 0.95));
    v.preload_record(preshared("pre35a", "3", 2, "5", 0, 0.95));
    v.preload_record(preshared("pre35b", "3", 3, "5", 1, 0.95));
    PlannerPolicy policy;
    Saga s = plan(bell_objective("1", "5", 0.91), v, policy, 0.0, "1", "s0");

    REQUIRE(kinds_of(s) ==
            std::vector<TaskKind>{TaskKind::Purify, TaskKind::Purify, TaskKind::Swap});
    CHECK(count_kind(s, TaskKind::Midpoint) == 0);
    CHECK(count_kind(s, TaskKind::MidpointSource) == 0);
    std::set<RecordId> locks(s.input_locks.begin(), s.input_locks.end());
    CHECK(locks == std::set<RecordId>{"pre13a", "pre13b", "pre35a", "pre35b"});
    std::set<std::pair<int, int>> deps(s.deps.begin(), s.deps.end());
    CHECK(deps == std::set<std::pair<int, int>>{{0, 2}, {1, 2}});
}

TEST_CASE("a single good preshared pair is delivered without any task") {
    ResourceView v = line_view(3);
    v.preload_record(preshared("direct", "1", 0, "3", 0, 0.95));
    Saga s = plan(bell_objective("1", "3", 0.9), v, {}, 0.0, "1", "s0");
    CHECK(s.tasks.empty());
    CHECK(s.input_locks == std::vector<RecordId>{"direct"});
    CHECK(s.final_records == std::vector<RecordId>{"direct"});

    Estimate e = estimate(s, v, 0.0);
    CHECK(e.f_pred == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(e.t_pred == 0.0);
}

TEST_CASE("unreachable endpoints raise NoRoute") {
    ResourceView v = line_view(3);
    CapabilitySet island;
    island.node = "9";
    island.tasks = all_task_kinds();
    island.memory_slots = 4;
    v.preload_capability(island);
    CHECK_THROWS_WITH_AS(plan(bell_objective("1", "9", 0.5), v, {}, 0.0, "1", "s0"),
                         doctest::Contains("NoRoute"), PlanError);
}

TEST_CASE("planning is deterministic: repeated plans serialize byte-identically") {
    ResourceView v = line_view(5);
    v.preload_record(preshared("pre13a", "1", 0, "3", 0, 0.95));
    v.preload_record(preshared("pre13b", "1", 1, "3", 1, 0.95));
    Objective o = bell_objective("1", "5", 0.85);
    std::string first = serialize(plan(o, v, {}, 0.0, "1", "s0"));
    CHECK_FALSE(first.empty());
    for (int i = 0; i < 10; ++i) CHECK(serialize(plan(o, v, {}, 0.0, "1", "s0")) == first);

    // an independently rebuilt identical view plans the same bytes
    ResourceView v2 = line_view(5);
    v2.preload_record(preshared("pre13b", "1", 1, "3", 1, 0.95));
    v2.preload_record(preshared("pre13a", "1", 0, "3", 0, 0.95));
    CHECK(serialize(plan(o, v2, {}, 0.0, "1", "s0")) == first);
}

TEST_CASE("send_qubit without stored entanglement never plans a teleport") {
    ResourceView v = line_view(3);
    Objective o;
    o.id = "obj";
    o.kind = ObjectiveKind::SendQubit;
    o.a = "1";
    o.b = "3";
    o.payload = "q";
    Saga s = plan(o, v, {}, 0.0, "1", "s0");
    CHECK(count_kind(s, TaskKind::Teleport) == 0);
    CHECK(count_kind(s, TaskKind::SendQubit) >= 1);
}

TEST_CASE("send_classical plans one classical hop task") {
    ResourceView v = line_view(3);
    Objective o;
    o.id = "obj";
    o.kind = ObjectiveKind::SendClassical;
    o.a = "1";
    o.b = "3";
    o.payload = "hello";
    Saga s = plan(o, v, {}, 0.0, "1", "s0");
    REQUIRE(s.tasks.size() == 1);
    CHECK(s.tasks[0].kind == TaskKind::ClassicalSend);
    CHECK(s.tasks[0].params.payload == "hello");
}

TEST_CASE("estimate: empty saga predicts a perfect instantaneous outcome") {
    ResourceView v = line_view(3);
    Saga s;
    s.id = "s0";
    Estimate e = estimate(s, v, 0.0);
    CHECK(e.f_pred == 1.0);
    CHECK(e.t_pred == 0.0);
}

TEST_CASE("estimate: one noiseless midpoint costs its decomposition's critical path") {
    ResourceView v = line_view(3, 0.0, 0.0, 0.0, 0.0);
    TaskParams p;
    p.participants = {"1", "2", "3"};
    p.output_records = {"m"};
    Saga s;
    s.id = "s0";
    s.tasks = {instantiate(TaskKind::Midpoint, p, v, "s0.0")};
    s.final_records = {"m"};
    Estimate e = estimate(s, v, 0.0);
    CHECK(e.f_pred == doctest::Approx(1.0).epsilon(1e-12));
    OpDurations ops;
    CHECK(e.t_pred == doctest::Approx(ops.bell_prep + 5e-5 + ops.measurement).epsilon(1e-12));
}

TEST_CASE("estimate: lossy links stretch time by the expected attempt count") {
    ResourceView ideal = line_view(3, 0.0, 0.0, 0.0, 0.0);
    ResourceView lossy = line_view(3, 0.0, 0.0, 0.0, 0.5);  // p_succ = 0.25
    TaskParams p;
    p.participants = {"1", "2", "3"};
    p.output_records = {"m"};
    Saga s;
    s.id = "s0";
    s.tasks = {instantiate(TaskKind::Midpoint, p, ideal, "s0.0")};
    s.final_records = {"m"};
    double t0 = estimate(s, ideal, 0.0).t_pred;
    double t1 = estimate(s, lossy, 0.0).t_pred;
    CHECK(t1 == doctest::Approx(4.0 * t0).epsilon(1e-12));
}

TEST_CASE("estimate: predicted fidelity is monotone non-increasing in channel noise") {
    ResourceView base = line_view(5);
    PlannerPolicy policy;
    Saga s = plan(bell_objective("1", "5", 0.93), base, policy, 0.0, "1", "s0");
    double prev = 1.0;
    for (double q : {0.0, 0.01, 0.02, 0.04, 0.08}) {
        ResourceView v = line_view(5, 0.005, 0.005, q);
        double f = estimate(s, v, 0.0).f_pred;
        CHECK(f <= prev + 1e-12);
        prev = f;
    }
    prev = 1.0;
    for (double pg : {0.0, 0.005, 0.01, 0.02}) {
        ResourceView v = line_view(5, pg, 0.005, 0.02);
        double f = estimate(s, v, 0.0).f_pred;
        CHECK(f <= prev + 1e-12);
        prev = f;
    }
}

TEST_CASE("monitor_tick replenishes only below-stock or below-fidelity pairs") {
    MonitorConfig monitor;
    monitor.pairs = {{"1", "3", 1, 0.8}};

    SUBCASE("stocked pair: nothing to do") {
        ResourceView v = line_view(3);
        v.preload_record(preshared("ok", "1", 0, "3", 0, 0.9));
        CHECK(monitor_tick(v, monitor, {}, 0.0).empty());
    }
    SUBCASE("no records: one low-priority establish objective") {
        ResourceView v = line_view(3);
        auto objs = monitor_tick(v, monitor, {}, 0.0);
        REQUIRE(objs.size() == 1);
        CHECK(objs[0].kind == ObjectiveKind::EstablishBell);
        CHECK(objs[0].id == "mon.1-3");
        CHECK(objs[0].a == "1");
        CHECK(objs[0].b == "3");
        CHECK(objs[0].priority == 0);
        CHECK(objs[0].min_fidelity == doctest::Approx(0.8));
    }
    SUBCASE("decayed record counts as missing") {
        ResourceView v = line_view(3);
        v.preload_record(preshared("weak", "1", 0, "3", 0, 0.6));
        auto objs = monitor_tick(v, monitor, {}, 0.0);
        REQUIRE(objs.size() == 1);
        CHECK(objs[0].id == "mon.1-3");
    }
}

TEST_CASE("serialize lists tasks, dependencies, locks and finals") {
    ResourceView v = line_view(5);
    Saga s = plan(bell_objective("1", "5", 0.93), v, {}, 0.0, "1", "s7");
    std::string text = serialize(s);
    CHECK(text.find("saga id=s7") != std::string::npos);
    CHECK(text.find("kind=midpoint") != std::string::npos);
    CHECK(text.find("kind=purify") != std::string::npos);
    CHECK(text.find("dep 2->6") != std::string::npos);
    for (const auto& t : s.tasks) CHECK(text.find("id=" + t.id) != std::string::npos);
}
