#include <gtest/gtest.h>

#include "dpdp/baselines.hpp"
#include "support.hpp"

using namespace dpdp;
using dpdp::testing::enumerate_optimum;
using dpdp::testing::line_instance;
using dpdp::testing::make_order;

namespace {

VehicleState row(double cur, double next, int used = 1) {
    VehicleState s;
    s.d_cur = cur;
    s.d_new = next;
    s.st_score = 0.5;
    s.used_flag = used;
    s.interval = 0;
    s.feasible = true;
    return s;
}

JointState state_of(std::vector<VehicleState> rows, std::vector<int> accepted) {
    JointState s;
    s.rows = std::move(rows);
    s.accepted = std::move(accepted);
    s.positions.assign(s.rows.size(), Point{});
    return s;
}

GeneratorOptions tiny(std::uint64_t seed, int vehicles, int orders) {
    GeneratorOptions opt;
    opt.seed = seed;
    opt.n_factories = 5;
    opt.n_vehicles = vehicles;
    opt.n_orders = orders;
    return opt;
}

}  // namespace

TEST(Greedy, IncrementalPicksSmallestDelta) {
    const JointState s = state_of({row(10, 13), row(0, 7, 0)}, {1, 0});
    EXPECT_EQ(greedy_dispatch(s, GreedyKind::incremental), 0);
    // Baseline 2 looks at total length instead.
    EXPECT_EQ(greedy_dispatch(s, GreedyKind::total), 1);
}

TEST(Greedy, MaxOrdersTieGoesToLowestId) {
    const JointState fresh = state_of({row(0, 5, 0), row(0, 3, 0), row(0, 4, 0)}, {0, 0, 0});
    EXPECT_EQ(greedy_dispatch(fresh, GreedyKind::max_orders), 0);
    const JointState busy = state_of({row(0, 5), row(0, 3), row(0, 4)}, {1, 3, 3});
    EXPECT_EQ(greedy_dispatch(busy, GreedyKind::max_orders), 1);
}

TEST(Greedy, SkipsInfeasibleRows) {
    JointState s = state_of({VehicleState{}, row(5, 9), VehicleState{}}, {9, 0, 9});
    for (auto kind : {GreedyKind::incremental, GreedyKind::total, GreedyKind::max_orders}) {
        EXPECT_EQ(greedy_dispatch(s, kind), 1);
    }
    s.rows[1] = VehicleState{};
    EXPECT_THROW(greedy_dispatch(s, GreedyKind::incremental), NoFeasibleVehicle);
}

TEST(Greedy, RandomPolicyStaysFeasible) {
    const JointState s = state_of({VehicleState{}, row(5, 9), VehicleState{}, row(1, 2)}, {0, 0, 0, 0});
    RandomPolicy p(3);
    int counts[4] = {0, 0, 0, 0};
    for (int i = 0; i < 400; ++i) ++counts[p.select(s)];
    EXPECT_EQ(counts[0] + counts[2], 0);
    EXPECT_GT(counts[1], 100);
    EXPECT_GT(counts[3], 100);
}

TEST(Exact, SingleVehicleSingleOrder) {
    Instance inst = line_instance({4, 9});
    inst.orders = {make_order(0, 2, 1, 1, 0, 500)};
    const ExactResult r = solve_exact(inst, 10);
    EXPECT_TRUE(r.proven_optimal);
    EXPECT_EQ(r.nuv, 1);
    EXPECT_DOUBLE_EQ(r.ttl, 18.0);
    EXPECT_DOUBLE_EQ(r.tc, 300.0 + 2.0 * (9 + 5 + 4));
    EXPECT_EQ(r.assignment.at(0), 0);
}

TEST(Exact, HugeFixedCostUsesOneVehicle) {
    Instance inst = line_instance({4, 9}, 2);
    inst.fleet.fixed_cost = 1e6;
    inst.orders = {make_order(0, 1, 2, 1, 0, 500), make_order(1, 1, 2, 1, 0, 500)};
    const ExactResult r = solve_exact(inst, 10);
    EXPECT_TRUE(r.proven_optimal);
    EXPECT_EQ(r.nuv, 1);
    EXPECT_DOUBLE_EQ(r.tc, 1e6 + 2.0 * 18);
}

TEST(Exact, Errors) {
    Instance inst = line_instance({4, 9});
    inst.orders = {make_order(0, 1, 2, 1, 0, 500)};
    EXPECT_THROW(solve_exact(inst, 0), std::invalid_argument);
    EXPECT_THROW(solve_exact(inst, -1), std::invalid_argument);
    inst.orders[0].latest_delivery = 5;
    EXPECT_THROW(solve_exact(inst, 10), InfeasibleInstance);
}

TEST(Exact, MatchesExhaustiveEnumeration) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const int vehicles = 2 + static_cast<int>(seed % 4);
        const int orders = seed <= 2 ? 6 : 3 + static_cast<int>(seed % 3);
        const Instance inst = generate_instance(tiny(seed, vehicles, orders));
        const ExactResult r = solve_exact(inst, 60);
        EXPECT_TRUE(r.proven_optimal);
        EXPECT_EQ(r.tc, enumerate_optimum(inst)) << "seed " << seed;
        EXPECT_EQ(r.tc, total_cost(r.nuv, r.ttl, inst.fleet.fixed_cost, inst.fleet.unit_cost));
        for (const auto& route : r.plan) EXPECT_TRUE(check_feasibility(route, inst.fleet).feasible());
        EXPECT_FALSE(dump_plan(r).empty());
    }
}

TEST(Exact, NoDispatchPolicyBeatsTheOracle) {
    for (std::uint64_t seed = 30; seed < 36; ++seed) {
        const Instance inst = generate_instance(tiny(seed, 5, 6));
        const ExactResult exact = solve_exact(inst, 60);
        GreedyPolicy g1(GreedyKind::incremental), g2(GreedyKind::total), g3(GreedyKind::max_orders);
        RandomPolicy rnd(seed);
        ExactPlanPolicy replay(exact.assignment);
        for (DispatchPolicy* p : std::vector<DispatchPolicy*>{&g1, &g2, &g3, &rnd, &replay}) {
            const EpisodeReport rep = run_episode(inst, *p).report;
            EXPECT_LE(exact.tc, rep.tc) << p->name() << " seed " << seed;
            EXPECT_TRUE(validate_routes(rep, inst).feasible()) << p->name();
        }
    }
}

TEST(Validator, AcceptsGreedyEpisodes) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Instance inst = generate_instance(seed, 8, 30, 8);
        for (auto kind : {GreedyKind::incremental, GreedyKind::total, GreedyKind::max_orders}) {
            GreedyPolicy p(kind);
            const Verdict v = validate_routes(run_episode(inst, p).report, inst);
            EXPECT_TRUE(v.feasible()) << to_string(v.kind) << " " << v.detail;
        }
    }
}

TEST(Validator, FlagsCrossedLifoPair) {
    Instance inst = line_instance({3, 7, 9});
    const auto a = make_order(0, 1, 3, 1, 0, 100);
    const auto b = make_order(1, 2, 3, 1, 0, 100);
    inst.orders = {a, b};
    Route r = make_idle_route(0, 0);
    r.stops.resize(1);
    for (auto [node, acts] : std::vector<std::pair<NodeId, std::vector<Action>>>{
             {1, {{ActionKind::pickup, a}}},
             {2, {{ActionKind::pickup, b}}},
             {3, {{ActionKind::deliver, a}, {ActionKind::deliver, b}}}}) {
        Stop s = Stop::at(node);
        s.actions = acts;
        r.stops.push_back(s);
    }
    r.stops.push_back(Stop::at(0));
    r.started = true;
    simulate_timeline(r, inst.network, 0);
    EpisodeReport rep;
    rep.routes = {r};
    rep.nuv = 1;
    rep.ttl = r.length;
    rep.tc = total_cost(1, r.length, 300, 2);
    const Verdict v = validate_routes(rep, inst);
    EXPECT_EQ(v.kind, Violation::lifo);
    EXPECT_EQ(v.stop, 3);
}

TEST(Validator, FlagsTamperedTotals) {
    const Instance inst = generate_instance(2, 6, 15, 5);
    GreedyPolicy p(GreedyKind::incremental);
    EpisodeReport rep = run_episode(inst, p).report;
    ASSERT_TRUE(validate_routes(rep, inst).feasible());
    EpisodeReport bad = rep;
    bad.tc += 1;
    EXPECT_EQ(validate_routes(bad, inst).kind, Violation::tc_identity);
    bad = rep;
    bad.nuv -= 1;
    EXPECT_EQ(validate_routes(bad, inst).kind, Violation::tc_identity);
}

TEST(Validator, FlagsDroppedOrderAndRewrittenPrefix) {
    const Instance inst = generate_instance(4, 6, 15, 5);
    GreedyPolicy p(GreedyKind::incremental);
    const EpisodeReport rep = run_episode(inst, p).report;

    Instance more = inst;
    more.orders.push_back(make_order(static_cast<OrderId>(inst.orders.size()), inst.orders[0].pickup,
                                     inst.orders[0].delivery, 1, 1300, 1440));
    EXPECT_EQ(validate_routes(rep, more).kind, Violation::unserved);

    // Shift the arrival of a stop the vehicle had already reached.
    EpisodeReport bad = rep;
    bool changed = false;
    for (std::size_t e = 1; e < bad.log.size() && !changed; ++e) {
        auto& entry = bad.log[e];
        if (entry.frozen_until >= 1 && entry.route_after.started) {
            entry.route_after.stops[1].arrival += 0.5;
            changed = true;
        }
    }
    ASSERT_TRUE(changed);
    EXPECT_EQ(validate_routes(bad, inst).kind, Violation::frozen_prefix);
}
