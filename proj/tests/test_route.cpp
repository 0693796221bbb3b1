#include <gtest/gtest.h>

#include "dpdp/route.hpp"
#include "support.hpp"

using namespace dpdp;
using dpdp::testing::line_instance;
using dpdp::testing::make_order;

namespace {

Action pick(const DeliveryOrder& o) { return {ActionKind::pickup, o}; }
Action drop(const DeliveryOrder& o) { return {ActionKind::deliver, o}; }

Route build(NodeId depot, std::vector<std::pair<NodeId, std::vector<Action>>> stops, const RoadNetwork& net,
            double start = 0.0) {
    Route r = make_idle_route(0, depot);
    r.stops.resize(1);
    for (auto& [node, actions] : stops) {
        Stop s = Stop::at(node);
        s.actions = std::move(actions);
        r.stops.push_back(std::move(s));
    }
    r.stops.push_back(Stop::at(depot));
    r.started = true;
    simulate_timeline(r, net, start);
    return r;
}

}  // namespace

TEST(Route, IdleRouteIsTwoDepotStops) {
    const Route r = make_idle_route(3, 1);
    ASSERT_EQ(r.stops.size(), 2u);
    EXPECT_EQ(r.stops[0].node, 1);
    EXPECT_EQ(r.stops[1].node, 1);
    EXPECT_EQ(r.vehicle, 3);
    EXPECT_FALSE(r.started);
    EXPECT_EQ(r.order_count(), 0);
}

TEST(Route, TimelineAccumulatesTravelAndWaits) {
    Instance inst = line_instance({3, 7});
    inst.network.service_time = 1.0;
    const auto o = make_order(0, 1, 2, 4, 10, 100);
    const Route r = build(0, {{1, {pick(o)}}, {2, {drop(o)}}}, inst.network);
    // depot -> 3 km -> wait until 10 -> load -> 4 km -> unload -> 7 km back.
    EXPECT_DOUBLE_EQ(r.stops[1].arrival, 3.0);
    EXPECT_DOUBLE_EQ(r.stops[1].departure, 11.0);
    EXPECT_DOUBLE_EQ(r.stops[2].arrival, 15.0);
    EXPECT_DOUBLE_EQ(r.stops[2].departure, 16.0);
    EXPECT_DOUBLE_EQ(r.stops[3].arrival, 23.0);
    EXPECT_DOUBLE_EQ(r.length, 14.0);
    EXPECT_EQ(r.load_profile, (std::vector<int>{0, 4, 0, 0}));
    EXPECT_DOUBLE_EQ(r.stops[1].wait(1.0), 7.0);
}

TEST(Route, NotBeforeHoldsTheVehicle) {
    const Instance inst = line_instance({5, 6});
    const auto o = make_order(0, 1, 2, 1, 0, 100);
    const Route r = build(0, {{1, {pick(o)}}, {2, {drop(o)}}}, inst.network, 40.0);
    EXPECT_DOUBLE_EQ(r.stops[0].departure, 40.0);
    EXPECT_DOUBLE_EQ(r.stops[1].arrival, 45.0);
    EXPECT_DOUBLE_EQ(r.start_time(), 40.0);
}

TEST(Route, FeasibleRoutePasses) {
    const Instance inst = line_instance({3, 7, 9});
    const auto a = make_order(0, 1, 3, 2, 0, 100);
    const auto b = make_order(1, 2, 3, 3, 0, 100);
    // LIFO: pick a, pick b, drop b, drop a.
    const Route r = build(0, {{1, {pick(a)}}, {2, {pick(b)}}, {3, {drop(b), drop(a)}}}, inst.network);
    EXPECT_TRUE(check_feasibility(r, inst.fleet).feasible());
    EXPECT_EQ(r.stack[2], (std::vector<OrderId>{0, 1}));
}

TEST(Route, CrossedPairIsALifoViolation) {
    const Instance inst = line_instance({3, 7, 9});
    const auto a = make_order(0, 1, 3, 2, 0, 100);
    const auto b = make_order(1, 2, 3, 3, 0, 100);
    const Route r = build(0, {{1, {pick(a)}}, {2, {pick(b)}}, {3, {drop(a), drop(b)}}}, inst.network);
    const Verdict v = check_feasibility(r, inst.fleet);
    EXPECT_EQ(v.kind, Violation::lifo);
    EXPECT_EQ(v.stop, 3);
    EXPECT_EQ(v.order, 0);
}

TEST(Route, LateDeliveryIsATimeWindowViolation) {
    const Instance inst = line_instance({3, 50});
    const auto o = make_order(0, 1, 2, 1, 0, 40);
    const Route r = build(0, {{1, {pick(o)}}, {2, {drop(o)}}}, inst.network);
    EXPECT_EQ(check_feasibility(r, inst.fleet).kind, Violation::time_window);
}

TEST(Route, DeliveryExactlyAtDeadlineIsOnTime) {
    const Instance inst = line_instance({3, 10});
    const auto o = make_order(0, 1, 2, 1, 0, 10);
    const Route r = build(0, {{1, {pick(o)}}, {2, {drop(o)}}}, inst.network);
    EXPECT_DOUBLE_EQ(r.stops[2].departure, 10.0);
    EXPECT_TRUE(check_feasibility(r, inst.fleet).feasible());
}

TEST(Route, OverloadIsACapacityViolation) {
    const Instance inst = line_instance({3, 7, 9}, 1, 4);
    const auto a = make_order(0, 1, 3, 3, 0, 100);
    const auto b = make_order(1, 2, 3, 2, 0, 100);
    const Route r = build(0, {{1, {pick(a)}}, {2, {pick(b)}}, {3, {drop(b), drop(a)}}}, inst.network);
    const Verdict v = check_feasibility(r, inst.fleet);
    EXPECT_EQ(v.kind, Violation::capacity);
    EXPECT_EQ(v.stop, 2);
}

TEST(Route, RouteMustCloseAtDepot) {
    const Instance inst = line_instance({3, 7});
    const auto o = make_order(0, 1, 2, 1, 0, 100);
    Route r = build(0, {{1, {pick(o)}}, {2, {drop(o)}}}, inst.network);
    r.stops.pop_back();
    EXPECT_EQ(check_feasibility(r, inst.fleet).kind, Violation::back_to_depot);
}

TEST(Route, CargoLeftOnBoardIsRejected) {
    const Instance inst = line_instance({3, 7});
    const auto o = make_order(0, 1, 2, 1, 0, 100);
    const Route r = build(0, {{1, {pick(o)}}}, inst.network);
    EXPECT_FALSE(check_feasibility(r, inst.fleet).feasible());
}

TEST(Route, LocateWaitingDrivingAndHome) {
    const Instance inst = line_instance({10, 20});
    const auto o = make_order(0, 1, 2, 1, 30, 200);
    const Route r = build(0, {{1, {pick(o)}}, {2, {drop(o)}}}, inst.network);
    // Arrive at 10, wait until 30, reach node 2 at 40, home at 60.
    VehicleStatus s = locate(r, 0.0, inst.network);
    EXPECT_EQ(s.frozen_until, 0u);
    s = locate(r, 5.0, inst.network);
    EXPECT_EQ(s.frozen_until, 1u);
    EXPECT_FALSE(s.at_stop);
    EXPECT_DOUBLE_EQ(s.position.x, 5.0);
    s = locate(r, 20.0, inst.network);
    EXPECT_EQ(s.frozen_until, 1u);
    EXPECT_TRUE(s.at_stop);
    EXPECT_DOUBLE_EQ(s.position.x, 10.0);
    s = locate(r, 35.0, inst.network);
    EXPECT_EQ(s.frozen_until, 2u);
    EXPECT_DOUBLE_EQ(s.position.x, 15.0);
    s = locate(r, 500.0, inst.network);
    EXPECT_EQ(s.frozen_until, 3u);
    EXPECT_DOUBLE_EQ(s.position.x, 0.0);
}

TEST(Route, LocateUnstartedVehicleStaysAtDepot) {
    const Instance inst = line_instance({10});
    const VehicleStatus s = locate(make_idle_route(0, 0), 700.0, inst.network);
    EXPECT_EQ(s.frozen_until, 0u);
    EXPECT_TRUE(s.at_stop);
    EXPECT_DOUBLE_EQ(s.position.x, 0.0);
}

TEST(Route, DumpListsActions) {
    const Instance inst = line_instance({3, 7});
    const auto o = make_order(4, 1, 2, 1, 0, 100);
    const Route r = build(0, {{1, {pick(o)}}, {2, {drop(o)}}}, inst.network);
    EXPECT_EQ(dump_route(r), "0 0.000 0.000\n1 3.000 3.000 +4\n2 7.000 7.000 -4\n0 14.000 14.000\n");
}
