#pragma once

#include <string>
#include <vector>

#include "dpdp/instance.hpp"

namespace dpdp {

enum class ActionKind { pickup, deliver };

struct Action {
    ActionKind kind = ActionKind::pickup;
    DeliveryOrder order;

    bool operator==(const Action&) const = default;
};

struct Stop {
    NodeId node = 0;
    std::vector<Action> actions;
    double not_before = 0.0;  // service may not start before this minute (vehicle holds)
    double arrival = 0.0;
    double departure = 0.0;
    std::vector<double> finish;  // completion minute of each action, filled by simulate_timeline

    static Stop at(NodeId node) {
        Stop s;
        s.node = node;
        return s;
    }

    double wait(double service_time) const {
        return departure - arrival - service_time * static_cast<double>(actions.size());
    }
};

// A vehicle's committed plan. The first stop is the start depot and the last
// stop is the same depot; stops up to and including frozen_until may not change.
struct Route {
    VehicleId vehicle = 0;
    NodeId depot = 0;
    std::vector<Stop> stops;
    std::size_t frozen_until = 0;
    bool started = false;  // the vehicle has accepted at least one order
    double length = 0.0;
    std::vector<int> load_profile;                 // cargo on board after each stop
    std::vector<std::vector<OrderId>> stack;       // LIFO stack after each stop, bottom first

    double start_time() const { return stops.empty() ? 0.0 : stops.front().not_before; }
    int order_count() const;
};

Route make_idle_route(VehicleId vehicle, NodeId depot);

// Recomputes arrival/departure/finish, length, loads and stacks. A vehicle
// waits at a pickup until the order's creation time.
void simulate_timeline(Route& route, const RoadNetwork& network, double start_time);
void simulate_timeline(Route& route, const RoadNetwork& network);

enum class Violation {
    none,
    time_window,
    capacity,
    lifo,
    back_to_depot,
    frozen_prefix,
    tc_identity,
    unserved,
    timeline,
};

std::string to_string(Violation v);

struct Verdict {
    Violation kind = Violation::none;
    int stop = -1;
    OrderId order = -1;
    std::string detail;

    bool feasible() const { return kind == Violation::none; }
    static Verdict ok() { return {}; }
};

// First violation along the route in traversal order.
Verdict check_feasibility(const Route& route, const FleetConfig& fleet);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct VehicleStatus {
    std::size_t frozen_until = 0;
    bool at_stop = true;
    Point position;
};

// Where the vehicle is at `now`: waiting at a stop (that stop is frozen) or
// driving toward the next one (the destination is frozen).
VehicleStatus locate(const Route& route, double now, const RoadNetwork& network);

// One line per stop: `node arrival departure [+o|-o]...`
std::string dump_route(const Route& route);

}  // namespace dpdp
