#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpdp/instance.hpp"
#include "dpdp/planner.hpp"
#include "dpdp/route.hpp"
#include "dpdp/st_demand.hpp"

namespace dpdp {

inline constexpr int kStateWidth = 5;

// Per-vehicle state w.r.t. the current order: (d_cur, d_new, st_score, used_flag, interval).
struct VehicleState {
    double d_cur = -1.0;
    double d_new = -1.0;
    double st_score = -1.0;
    double used_flag = -1.0;
    double interval = -1.0;
    bool feasible = false;

    std::array<double, kStateWidth> features() const { return {d_cur, d_new, st_score, used_flag, interval}; }
    double delta_d() const { return d_new - d_cur; }

    static VehicleState from(const PlannerResult& plan);
};

struct JointState {
    OrderId order_id = -1;
    int interval = 0;
    std::vector<VehicleState> rows;
    std::vector<Point> positions;
    std::vector<int> accepted;  // orders accepted so far per vehicle (side channel)

    int size() const { return static_cast<int>(rows.size()); }
    bool any_feasible() const;
    std::vector<VehicleId> feasible_vehicles() const;
};

struct Transition {
    JointState state;
    VehicleId action = -1;
    bool interval_end = false;
    double reward = 0.0;
    std::optional<JointState> next_state;
};

class DispatchPolicy {
public:
    virtual ~DispatchPolicy() = default;
    // Must return a feasible row of `state`; the state has at least one.
    virtual VehicleId select(const JointState& state) = 0;
    virtual std::string name() const = 0;
};

struct FleetState {
    std::vector<Route> routes;
    std::vector<int> accepted;

    static FleetState idle(const FleetConfig& fleet);
};

// Updates every route's frozen prefix to the vehicle's situation at `now` and
// returns the vehicles' positions.
std::vector<Point> advance_fleet(FleetState& fleet, double now, const RoadNetwork& network);

struct StateWithPlans {
    JointState state;
    std::vector<PlannerResult> plans;
};

StateWithPlans build_joint_state(const DeliveryOrder& order, const FleetState& fleet, std::vector<Point> positions,
                                 const PlanningContext& ctx);

// Fixed cost is charged once, on the assignment that activates an unused vehicle.
double instant_reward(int used_flag, double delta_d, double fixed_cost, double unit_cost, double alpha);

// Mean instant reward per served order. Throws std::invalid_argument when empty.
double long_term_reward(std::span<const double> instant_rewards);
std::vector<double> final_rewards(std::span<const double> instant_rewards);

struct OrderLogEntry {
    OrderId order = -1;
    VehicleId vehicle = -1;
    double now = 0.0;
    double delta_d = 0.0;
    bool fixed_charge = false;
    double instant_reward = 0.0;
    double reward = 0.0;
    double decision_seconds = 0.0;
    std::size_t frozen_until = 0;
    Route route_after;  // committed route snapshot
};

struct EpisodeReport {
    std::string policy;
    int nuv = 0;
    double ttl = 0.0;
    double tc = 0.0;
    double fixed_cost = 0.0;
    double unit_cost = 0.0;
    std::vector<OrderLogEntry> log;
    std::vector<Route> routes;
    double max_decision_seconds = 0.0;
    double mean_decision_seconds = 0.0;
};

inline double total_cost(int nuv, double ttl, double fixed_cost, double unit_cost) {
    return fixed_cost * nuv + unit_cost * ttl;
}

struct EpisodeOptions {
    double alpha = 0.01;
    bool record = false;
};

struct EpisodeResult {
    EpisodeReport report;
    std::vector<Transition> transitions;
};

class EpisodeAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Serves the orders in creation order, one decision each, no buffering.
// Throws EpisodeAborted when an order has no feasible vehicle.
EpisodeResult run_episode(const Instance& instance, DispatchPolicy& policy, const EpisodeOptions& options = {});

std::string report_to_json(const EpisodeReport& report);
// Lines of `order_id vehicle_id delta_d reward`.
std::string trace_lines(const EpisodeReport& report);

}  // namespace dpdp
