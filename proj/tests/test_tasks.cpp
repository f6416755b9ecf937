#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracle_maps.hpp"
#include "sagaqnet/tasks.hpp"

using namespace sqn;

namespace {

struct Line3 {
    ResourceView view;

    Line3(NoiseParams n1 = {}, NoiseParams n2 = {}, NoiseParams n3 = {}, double p_loss = 0.0,
          double q_depol = 0.0) {
        const std::vector<std::pair<NodeId, NoiseParams>> nodes{{"1", n1}, {"2", n2}, {"3", n3}};
        for (const auto& [id, noise] : nodes) {
            CapabilitySet caps;
            caps.node = id;
            caps.tasks = all_task_kinds();
            caps.noise = noise;
            caps.noise.t_mem = 1e12;  // keep decay out of effect comparisons
            caps.memory_slots = 8;
            view.preload_capability(caps);
        }
        view.preload_channel({"1", "2", 10.0, p_loss, q_depol, 5e-5, {}});
        view.preload_channel({"2", "3", 10.0, p_loss, q_depol, 5e-5, {}});
        view.preload_classical({"1", "2", 1e-5});
        view.preload_classical({"2", "3", 1e-5});
    }

    void apply(const EffectResult& eff) {
        for (const auto& c : eff.changes) view.apply_change_direct(c);
    }
};

EntanglementRecord make_pair(const RecordId& id, const NodeId& a, int sa, const NodeId& b, int sb,
                             const BellDiag& q) {
    EntanglementRecord rec;
    rec.id = id;
    rec.graph = bell_graph({a, sa}, {b, sb});
    rec.quality = q;
    return rec;
}

BellDiag quality_of(const ResourceView& v, const RecordId& id) {
    const auto* rec = v.find_record(id);
    REQUIRE(rec != nullptr);
    REQUIRE(std::holds_alternative<BellDiag>(rec->quality));
    return std::get<BellDiag>(rec->quality);
}

TaskParams midpoint_params(const RecordId& out) {
    TaskParams p;
    p.participants = {"1", "2", "3"};
    p.output_records = {out};
    return p;
}

}  // namespace

TEST_CASE("instantiate: midpoint over a line is valid, missing capability is Incapable") {
    Line3 env;
    CHECK_NOTHROW(instantiate(TaskKind::Midpoint, midpoint_params("m"), env.view));

    SUBCASE("center without the kind") {
        CapabilitySet center = *env.view.find_capability("2");
        center.tasks.erase(TaskKind::Midpoint);
        env.view.preload_capability(center);
        CHECK_THROWS_WITH_AS(instantiate(TaskKind::Midpoint, midpoint_params("m"), env.view),
                             doctest::Contains("Incapable(2"), TaskError);
    }
    SUBCASE("missing channel") {
        TaskParams p;
        p.participants = {"1", "3", "2"};  // no channel 1-3
        p.output_records = {"m"};
        CHECK_THROWS_WITH_AS(instantiate(TaskKind::Midpoint, p, env.view),
                             doctest::Contains("NoChannel"), TaskError);
    }
    SUBCASE("unknown input record") {
        TaskParams p;
        p.participants = {"2"};
        p.input_records = {"ghost", "ghost2"};
        p.output_records = {"s"};
        CHECK_THROWS_WITH_AS(instantiate(TaskKind::Swap, p, env.view),
                             doctest::Contains("NoRecord"), TaskError);
    }
}

TEST_CASE("instantiate: swap at the pivot with records (1,2) and (2,3)") {
    Line3 env;
    env.view.preload_record(make_pair("a", "1", 0, "2", 0, werner(0.9)));
    env.view.preload_record(make_pair("b", "2", 1, "3", 0, werner(0.9)));
    TaskParams p;
    p.participants = {"2"};
    p.input_records = {"a", "b"};
    p.output_records = {"s"};
    CHECK_NOTHROW(instantiate(TaskKind::Swap, p, env.view));

    p.participants = {"1"};  // record b has no qubit at node 1
    CHECK_THROWS_AS(instantiate(TaskKind::Swap, p, env.view), TaskError);
}

TEST_CASE("midpoint: noiseless with rand=0 creates a perfect pair between the ends") {
    Line3 env;
    auto t = instantiate(TaskKind::Midpoint, midpoint_params("m"), env.view);
    auto eff = apply_effect(t, env.view, 0.0, 0.0, "s");
    CHECK(eff.outcome == TaskOutcome::Success);
    env.apply(eff);
    const auto* rec = env.view.find_record("m");
    REQUIRE(rec != nullptr);
    CHECK(rec->nodes() == std::set<NodeId>{"1", "3"});
    CHECK(rec->lock == "s");
    CHECK(quality_of(env.view, "m").fidelity() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("midpoint: p_loss=0.5 on both sides with rand=0.9 is a heralded failure") {
    Line3 env({}, {}, {}, /*p_loss=*/0.5);
    auto t = instantiate(TaskKind::Midpoint, midpoint_params("m"), env.view);
    auto eff = apply_effect(t, env.view, 0.0, 0.9, "s");
    CHECK(eff.outcome == TaskOutcome::HeraldedFailure);
    CHECK(eff.changes.empty());
    // success mass is 0.25, so 0.9 misses it; 0.2 lands inside
    CHECK(apply_effect(t, env.view, 0.0, 0.2, "s").outcome == TaskOutcome::Success);
}

TEST_CASE("swap effect equals the 16x16 dense oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        NoiseParams center;
        center.p_meas = (trial % 3 == 0) ? 0.0 : 0.05 * std::uniform_real_distribution<>()(rng);
        Line3 env({}, center, {});
        BellDiag qa = trial == 0 ? werner(0.9) : testing::random_bell_diag(rng);
        BellDiag qb = trial == 0 ? werner(0.9) : testing::random_bell_diag(rng);
        env.view.preload_record(make_pair("a", "1", 0, "2", 0, qa));
        env.view.preload_record(make_pair("b", "2", 1, "3", 0, qb));
        TaskParams p;
        p.participants = {"2"};
        p.input_records = {"a", "b"};
        p.output_records = {"s"};
        auto t = instantiate(TaskKind::Swap, p, env.view);
        auto eff = apply_effect(t, env.view, 0.0, 0.0, "");
        env.apply(eff);
        CHECK(env.view.find_record("a") == nullptr);
        CHECK(env.view.find_record("b") == nullptr);
        BellDiag got = quality_of(env.view, "s");
        BellDiag want = depolarize(testing::oracle_swap(qa, qb), center.p_meas);
        for (int i = 0; i < 4; ++i) CHECK(got.p[i] == doctest::Approx(want.p[i]).epsilon(1e-12));
    }
}

TEST_CASE("decompose_midpoint produces the five-task synchronized DAG") {
    Line3 env;
    auto t = instantiate(TaskKind::Midpoint, midpoint_params("m"), env.view);
    auto dag = decompose_midpoint(t, env.view);
    REQUIRE(dag.tasks.size() == 5);
    CHECK(dag.tasks[0].kind == TaskKind::PrepareBell);
    CHECK(dag.tasks[1].kind == TaskKind::PrepareBell);
    CHECK(dag.tasks[2].kind == TaskKind::SendQubit);
    CHECK(dag.tasks[3].kind == TaskKind::SendQubit);
    CHECK(dag.tasks[4].kind == TaskKind::Swap);
    // both sends wait on both preparations, the swap on both sends
    std::set<std::pair<int, int>> edges(dag.edges.begin(), dag.edges.end());
    CHECK(edges == std::set<std::pair<int, int>>{
                       {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 4}, {3, 4}});

    CHECK_THROWS_AS(decompose_midpoint(dag.tasks[4], env.view), TaskError);
}

TEST_CASE("composite midpoint equals the monolithic effect over random noise sets") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<> small(0.0, 0.08);
    for (int trial = 0; trial < 100; ++trial) {
        NoiseParams n1, n2, n3;
        n1.p_gate = small(rng);
        n3.p_gate = small(rng);
        n2.p_meas = small(rng);
        double q_depol = small(rng);
        Line3 mono(n1, n2, n3, 0.0, q_depol);
        Line3 comp(n1, n2, n3, 0.0, q_depol);

        auto t = instantiate(TaskKind::Midpoint, midpoint_params("m"), mono.view);
        mono.apply(apply_effect(t, mono.view, 0.0, 0.0, ""));
        BellDiag want = quality_of(mono.view, "m");

        auto dag = decompose_midpoint(instantiate(TaskKind::Midpoint, midpoint_params("m"),
                                                  comp.view),
                                      comp.view);
        for (int i : {0, 1, 2, 3, 4})
            comp.apply(apply_effect(dag.tasks[i], comp.view, 0.0, 0.0, ""));
        BellDiag got = quality_of(comp.view, "m");
        for (int i = 0; i < 4; ++i) CHECK(got.p[i] == doctest::Approx(want.p[i]).epsilon(1e-12));
        const auto* rec = comp.view.find_record("m");
        CHECK(rec->nodes() == std::set<NodeId>{"1", "3"});
    }
}

TEST_CASE("purify: success replaces both inputs, failure consumes both") {
    Line3 env;
    env.view.preload_record(make_pair("a", "1", 0, "3", 0, werner(0.8)));
    env.view.preload_record(make_pair("b", "1", 1, "3", 1, werner(0.8)));
    TaskParams p;
    p.participants = {"1", "3"};
    p.input_records = {"a", "b"};
    p.output_records = {"out"};
    auto t = instantiate(TaskKind::Purify, p, env.view);
    auto pr = purify_map(werner(0.8), werner(0.8), {}, PurifyMode::Purify);

    SUBCASE("success branch") {
        Line3 world;
        world.view = env.view;
        auto eff = apply_effect(t, world.view, 0.0, pr.p_succ - 1e-9, "s");
        CHECK(eff.outcome == TaskOutcome::Success);
        world.apply(eff);
        CHECK(world.view.find_record("a") == nullptr);
        CHECK(world.view.find_record("b") == nullptr);
        BellDiag got = quality_of(world.view, "out");
        CHECK(got.fidelity() == doctest::Approx(pr.out.fidelity()).epsilon(1e-12));
        CHECK(got.fidelity() > 0.8);
    }
    SUBCASE("failure branch") {
        Line3 world;
        world.view = env.view;
        auto eff = apply_effect(t, world.view, 0.0, pr.p_succ + 1e-9, "s");
        CHECK(eff.outcome == TaskOutcome::HeraldedFailure);
        world.apply(eff);
        CHECK(world.view.find_record("a") == nullptr);
        CHECK(world.view.find_record("b") == nullptr);
        CHECK(world.view.find_record("out") == nullptr);
    }
}

TEST_CASE("pump keeps the record id and re-derives quality on both branches") {
    Line3 env;
    env.view.preload_record(make_pair("kept", "1", 0, "3", 0, werner(0.85)));
    env.view.preload_record(make_pair("fresh", "1", 1, "3", 1, werner(0.8)));
    TaskParams p;
    p.participants = {"1", "3"};
    p.input_records = {"kept", "fresh"};
    auto t = instantiate(TaskKind::Pump, p, env.view);
    auto pr = purify_map(werner(0.85), werner(0.8), {}, PurifyMode::Pump);

    Line3 fail_world;
    fail_world.view = env.view;
    auto eff = apply_effect(t, fail_world.view, 0.0, pr.p_succ + 1e-9, "");
    CHECK(eff.outcome == TaskOutcome::HeraldedFailure);
    fail_world.apply(eff);
    CHECK(fail_world.view.find_record("fresh") == nullptr);
    BellDiag got = quality_of(fail_world.view, "kept");
    for (int i = 0; i < 4; ++i)
        CHECK(got.p[i] == doctest::Approx(pr.out_fail.p[i]).epsilon(1e-12));
}

TEST_CASE("send_qubit moves the record half and depolarizes; loss drops the record") {
    Line3 env({}, {}, {}, 0.0, /*q_depol=*/0.1);
    env.view.preload_record(make_pair("r", "1", 0, "1", 1, werner(0.95)));
    TaskParams p;
    p.participants = {"1", "2"};
    p.input_records = {"r"};
    auto t = instantiate(TaskKind::SendQubit, p, env.view);

    SUBCASE("delivery") {
        auto eff = apply_effect(t, env.view, 0.0, 0.5, "");
        CHECK(eff.outcome == TaskOutcome::Success);
        env.apply(eff);
        const auto* rec = env.view.find_record("r");
        REQUIRE(rec != nullptr);
        CHECK(rec->nodes() == std::set<NodeId>{"1", "2"});
        BellDiag want = depolarize(werner(0.95), 0.1);
        BellDiag got = quality_of(env.view, "r");
        for (int i = 0; i < 4; ++i) CHECK(got.p[i] == doctest::Approx(want.p[i]).epsilon(1e-12));
    }
    SUBCASE("loss") {
        Line3 lossy({}, {}, {}, 0.9, 0.1);
        lossy.view.preload_record(make_pair("r", "1", 0, "1", 1, werner(0.95)));
        auto t2 = instantiate(TaskKind::SendQubit, p, lossy.view);
        auto eff = apply_effect(t2, lossy.view, 0.0, 0.5, "");
        CHECK(eff.outcome == TaskOutcome::HeraldedFailure);
        lossy.apply(eff);
        CHECK(lossy.view.find_record("r") == nullptr);
    }
}

TEST_CASE("heralded failures of heralding tasks never mutate the entanglement map") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        Line3 env({}, {}, {}, /*p_loss=*/0.8);
        env.view.preload_record(make_pair("bystander", "1", 7, "3", 7, werner(0.9)));
        auto before = env.view.entanglement();
        auto t = instantiate(TaskKind::Midpoint, midpoint_params("m"), env.view);
        double r = 0.2 + 0.8 * std::uniform_real_distribution<>()(rng);  // miss 0.04 mass
        auto eff = apply_effect(t, env.view, 0.0, r, "s");
        REQUIRE(eff.outcome == TaskOutcome::HeraldedFailure);
        env.apply(eff);
        CHECK(env.view.entanglement() == before);
    }
}

TEST_CASE("graph tasks: merge, local complementation and cut on records") {
    Line3 env;
    env.view.preload_record(make_pair("ab", "1", 0, "2", 0, werner(0.95)));
    env.view.preload_record(make_pair("bc", "2", 1, "3", 0, werner(0.95)));

    TaskParams merge;
    merge.participants = {"2"};
    merge.input_records = {"ab", "bc"};
    merge.output_records = {"abc"};
    auto tm = instantiate(TaskKind::GraphMerge, merge, env.view);
    env.apply(apply_effect(tm, env.view, 0.0, 0.0, ""));
    const auto* rec = env.view.find_record("abc");
    REQUIRE(rec != nullptr);
    CHECK(rec->graph.vertices().size() == 3);
    CHECK(rec->nodes() == std::set<NodeId>{"1", "2", "3"});
    // path 1-2-3: scalar quality 0.95^2 (no gate noise configured)
    REQUIRE(std::holds_alternative<double>(rec->quality));
    CHECK(std::get<double>(rec->quality) == doctest::Approx(0.95 * 0.95).epsilon(1e-12));

    TaskParams lc;  // vertex resolved implicitly: the unique qubit at node 2
    lc.participants = {"2"};
    lc.input_records = {"abc"};
    auto tl = instantiate(TaskKind::GraphLC, lc, env.view);
    env.apply(apply_effect(tl, env.view, 0.0, 0.0, ""));
    rec = env.view.find_record("abc");
    // LC at the path center completes the triangle
    CHECK(rec->graph.edges().size() == 3);

    TaskParams cut;
    cut.participants = {"2"};
    cut.input_records = {"abc"};
    cut.output_records = {"residue"};
    auto tc = instantiate(TaskKind::GraphCut, cut, env.view);
    env.apply(apply_effect(tc, env.view, 0.0, 0.0, ""));
    CHECK(env.view.find_record("abc") == nullptr);
    rec = env.view.find_record("residue");
    REQUIRE(rec != nullptr);
    CHECK(rec->nodes() == std::set<NodeId>{"1", "3"});
    // back to two vertices: quality becomes a Bell-diagonal form again
    CHECK(std::holds_alternative<BellDiag>(rec->quality));
}

TEST_CASE("task durations: channel-bound kinds use latency, local kinds use op times") {
    Line3 env;
    OpDurations ops;
    auto t = instantiate(TaskKind::Midpoint, midpoint_params("m"), env.view);
    CHECK(task_duration(t, env.view, ops) ==
          doctest::Approx(ops.bell_prep + 5e-5 + ops.measurement));
    TaskParams cs;
    cs.participants = {"1", "3"};
    auto t2 = instantiate(TaskKind::ClassicalSend, cs, env.view);
    CHECK(task_duration(t2, env.view, ops) == 0.0);
}
