// Shared fixtures and independent oracles for the test suites. The oracles
// never call the planner, the exact solver or the validator.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "dpdp/baselines.hpp"
#include "dpdp/env.hpp"
#include "dpdp/instance.hpp"
#include "dpdp/planner.hpp"
#include "dpdp/route.hpp"

namespace dpdp::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Nodes on the x axis: depot at x = 0, factories at the given positions.
// Distances are |x_i - x_j|, speed 1 km/min, no service time.
inline Instance line_instance(const std::vector<double>& factory_x, int vehicles = 1, int capacity = 10) {
    Instance inst;
    inst.network.nodes.push_back({0, NodeRole::depot, 0.0, 0.0});
    for (std::size_t i = 0; i < factory_x.size(); ++i) {
        inst.network.nodes.push_back({static_cast<NodeId>(i + 1), NodeRole::factory, factory_x[i], 0.0});
    }
    const std::size_t n = inst.network.nodes.size();
    inst.network.dist.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            inst.network.dist[i][j] = std::abs(inst.network.nodes[i].x - inst.network.nodes[j].x);
        }
    }
    for (int k = 0; k < vehicles; ++k) inst.fleet.vehicles.push_back({k, 0});
    inst.fleet.capacity = capacity;
    inst.fleet.fixed_cost = 300.0;
    inst.fleet.unit_cost = 2.0;
    return inst;
}

inline DeliveryOrder make_order(OrderId id, NodeId p, NodeId d, int q, int created, int latest) {
    return {id, p, d, q, created, latest};
}

struct PlacedAction {
    NodeId node;
    ActionKind kind;
    DeliveryOrder order;
};

// Walks a sequence of actions from `node` at time `t` carrying `load` and
// `stack`, then returns to `depot`. Returns the driven length or kInf.
inline double walk(const Instance& inst, NodeId node, double t, int load, std::vector<OrderId> stack,
                   const std::vector<PlacedAction>& seq, NodeId depot) {
    const auto& net = inst.network;
    double length = 0.0;
    for (const auto& a : seq) {
        const double d = net.dist[node][a.node];
        length += d;
        t += d / net.speed;
        node = a.node;
        if (a.kind == ActionKind::pickup) {
            t = std::max(t, static_cast<double>(a.order.created_at)) + net.service_time;
            load += a.order.quantity;
            if (load > inst.fleet.capacity) return kInf;
            stack.push_back(a.order.id);
        } else {
            if (stack.empty() || stack.back() != a.order.id) return kInf;
            stack.pop_back();
            load -= a.order.quantity;
            t += net.service_time;
            if (t > a.order.latest_delivery + 1e-9) return kInf;
        }
    }
    if (!stack.empty()) return kInf;
    return length + net.dist[node][depot];
}

// Brute-force insertion oracle. Keeps the vehicle's frozen prefix, then tries
// every permutation of (remaining actions + the new pickup and delivery) that
// keeps the remaining actions in their committed order. Returns the minimum
// total route length, or nullopt when no permutation is feasible.
inline std::optional<double> oracle_insertion(const Route& route, const DeliveryOrder& order, double now,
                                              const Instance& inst) {
    const auto& net = inst.network;
    const NodeId depot = route.depot;
    std::size_t frozen = route.started ? route.frozen_until : 0;
    const bool back_home = route.started && frozen + 1 >= route.stops.size();

    // Replay the frozen prefix.
    double t = route.started ? route.stops.front().not_before : now;
    double length = 0.0;
    int load = 0;
    std::vector<OrderId> stack;
    NodeId node = depot;
    for (std::size_t i = 0; i <= frozen; ++i) {
        const Stop& s = route.stops[i];
        if (i > 0) {
            length += net.dist[node][s.node];
            t += net.dist[node][s.node] / net.speed;
        }
        node = s.node;
        if (i > 0 || route.started) t = std::max(t, s.not_before);
        for (const auto& a : s.actions) {
            if (a.kind == ActionKind::pickup) {
                t = std::max(t, static_cast<double>(a.order.created_at));
                load += a.order.quantity;
                stack.push_back(a.order.id);
            } else {
                load -= a.order.quantity;
                stack.pop_back();
            }
            t += net.service_time;
        }
    }
    if (back_home) t = std::max(t, now);

    std::vector<PlacedAction> pool;
    if (!back_home) {
        for (std::size_t i = frozen + 1; i + 1 < route.stops.size(); ++i) {
            for (const auto& a : route.stops[i].actions) pool.push_back({route.stops[i].node, a.kind, a.order});
        }
    }
    const int existing = static_cast<int>(pool.size());
    pool.push_back({order.pickup, ActionKind::pickup, order});
    pool.push_back({order.delivery, ActionKind::deliver, order});

    std::vector<int> perm(pool.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    double best = kInf;
    do {
        int expected = 0;
        bool ok = true;
        int seen_pickup = -1;
        for (std::size_t pos = 0; pos < perm.size() && ok; ++pos) {
            const int idx = perm[pos];
            if (idx < existing) {
                ok = idx == expected;
                ++expected;
            } else if (idx == existing) {
                seen_pickup = static_cast<int>(pos);
            } else {
                ok = seen_pickup >= 0;
            }
        }
        if (!ok) continue;
        std::vector<PlacedAction> seq;
        for (int idx : perm) seq.push_back(pool[idx]);
        best = std::min(best, length + walk(inst, node, t, load, stack, seq, depot));
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (best == kInf) return std::nullopt;
    return best;
}

// Shortest feasible closed tour from `depot` at minute 0 serving the orders in
// `mask`, by enumerating every pickup-before-delivery action order.
inline double enumerate_tour(const Instance& inst, std::uint32_t mask, NodeId depot) {
    if (mask == 0) return 0.0;
    std::vector<PlacedAction> seq;
    double best = kInf;
    const std::size_t n = inst.orders.size();
    std::vector<int> state(n, 0);  // 0 waiting, 1 picked, 2 delivered
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) total += (mask >> i) & 1u ? 2 : 0;
    auto rec = [&](auto&& self) -> void {
        if (seq.size() == total) {
            best = std::min(best, walk(inst, depot, 0.0, 0, {}, seq, depot));
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!((mask >> i) & 1u) || state[i] == 2) continue;
            const DeliveryOrder& o = inst.orders[i];
            const bool pick = state[i] == 0;
            seq.push_back({pick ? o.pickup : o.delivery, pick ? ActionKind::pickup : ActionKind::deliver, o});
            ++state[i];
            self(self);
            --state[i];
            seq.pop_back();
        }
    };
    rec(rec);
    return best;
}

// Exhaustive static optimum: every order -> vehicle assignment, each vehicle's
// subset sequenced by enumerate_tour. Returns kInf when nothing is feasible.
inline double enumerate_optimum(const Instance& inst) {
    const std::size_t n = inst.orders.size();
    const int k = inst.fleet.size();
    std::map<std::pair<std::uint32_t, NodeId>, double> memo;
    auto tour = [&](std::uint32_t mask, NodeId depot) {
        const auto key = std::make_pair(mask, depot);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        return memo[key] = enumerate_tour(inst, mask, depot);
    };
    std::vector<int> assign(n, 0);
    double best = kInf;
    while (true) {
        std::vector<std::uint32_t> masks(k, 0);
        for (std::size_t i = 0; i < n; ++i) masks[assign[i]] |= 1u << i;
        int used = 0;
        double ttl = 0.0;
        for (int v = 0; v < k && ttl < kInf; ++v) {
            if (masks[v] == 0) continue;
            ++used;
            ttl += tour(masks[v], inst.fleet.vehicles[v].depot);
        }
        if (ttl < kInf) best = std::min(best, inst.fleet.fixed_cost * used + inst.fleet.unit_cost * ttl);
        std::size_t pos = 0;
        while (pos < n && ++assign[pos] == k) assign[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

struct PlannerCase {
    Instance instance;
    Route route;
    DeliveryOrder order;
    double now = 0.0;
};

// Fleets built by dispatching a random-length prefix of a generated day with
// baseline 1, then frozen at the next order's creation time. Only vehicles
// carrying at most `max_orders` committed orders become cases.
inline std::vector<PlannerCase> planner_cases(int count, std::uint64_t seed, int max_orders = 3) {
    std::vector<PlannerCase> out;
    std::mt19937_64 rng(seed);
    for (std::uint64_t s = seed; static_cast<int>(out.size()) < count; ++s) {
        GeneratorOptions opt;
        opt.seed = s;
        opt.n_factories = 5;
        opt.n_orders = 9;
        opt.n_vehicles = 2;
        opt.area_km = 20.0;
        opt.min_slack = 10;
        opt.max_slack = 200;
        opt.service_time = static_cast<double>(s % 3);
        const Instance inst = generate_instance(opt);
        const StdMatrix predicted = predicted_demand(inst);
        const PlanningContext ctx{inst.network, inst.fleet, predicted, inst.horizon};
        std::uniform_int_distribution<int> cut(0, opt.n_orders - 1);
        const int r = cut(rng);
        FleetState fleet = FleetState::idle(inst.fleet);
        bool aborted = false;
        for (int i = 0; i < r && !aborted; ++i) {
            const auto& o = inst.orders[i];
            auto positions = advance_fleet(fleet, o.created_at, inst.network);
            auto sp = build_joint_state(o, fleet, positions, ctx);
            if (!sp.state.any_feasible()) {
                aborted = true;
                break;
            }
            const VehicleId k = greedy_dispatch(sp.state, GreedyKind::incremental);
            fleet.routes[k] = sp.plans[k].best_route;
            fleet.accepted[k] += 1;
        }
        if (aborted) continue;
        const auto& next = inst.orders[r];
        advance_fleet(fleet, next.created_at, inst.network);
        for (const auto& route : fleet.routes) {
            if (route.order_count() > max_orders || static_cast<int>(out.size()) >= count) continue;
            out.push_back({inst, route, next, static_cast<double>(next.created_at)});
        }
    }
    return out;
}

// A joint state with plausible feature ranges and distinct positions. Rows
// listed in `infeasible` carry the sentinel.
inline JointState random_joint_state(int k, std::mt19937_64& rng, const std::vector<int>& infeasible = {}) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    JointState s;
    s.order_id = 0;
    s.interval = static_cast<int>(u(rng) * 144);
    for (int i = 0; i < k; ++i) {
        VehicleState r;
        r.d_cur = std::floor(u(rng) * 120);
        r.d_new = r.d_cur + std::floor(u(rng) * 60);
        r.st_score = u(rng);
        r.used_flag = u(rng) < 0.5 ? 0 : 1;
        r.interval = s.interval;
        r.feasible = true;
        if (std::find(infeasible.begin(), infeasible.end(), i) != infeasible.end()) r = VehicleState{};
        s.rows.push_back(r);
        s.positions.push_back({u(rng) * 30, u(rng) * 30});
        s.accepted.push_back(0);
    }
    return s;
}

}  // namespace dpdp::testing
