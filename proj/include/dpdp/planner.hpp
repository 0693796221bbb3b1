#pragma once

#include "dpdp/instance.hpp"
#include "dpdp/route.hpp"
#include "dpdp/st_demand.hpp"

namespace dpdp {

struct PlanningContext {
    const RoadNetwork& network;
    const FleetConfig& fleet;
    const StdMatrix& predicted;
    int horizon = kDefaultHorizon;
};

// Route planner output for one (order, vehicle) pair. When infeasible every
// numeric field is -1 and best_route has no stops.
struct PlannerResult {
    bool feasible = false;
    double cur_len = -1.0;
    double new_len = -1.0;
    double st_score = -1.0;
    int used_flag = -1;
    int interval = -1;
    Route best_route;

    static PlannerResult infeasible();
};

// Tries every (pickup, delivery) insertion position pair after the frozen
// prefix, keeping the relative order of existing actions, and returns the
// shortest feasible candidate. Ties go to the lowest (pickup, delivery) pair.
PlannerResult plan_insertion(const Route& route, const DeliveryOrder& order, double now, const PlanningContext& ctx);

// The route insertions are applied to: an unstarted vehicle departs at `now`;
// a vehicle whose frozen stop is its final depot holds there until `now` and
// gets a fresh closing depot stop.
Route planning_base(const Route& route, double now);

}  // namespace dpdp
