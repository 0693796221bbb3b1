#include "dpdp/planner.hpp"

#include <algorithm>
#include <cmath>

namespace dpdp {

PlannerResult PlannerResult::infeasible() { return PlannerResult{}; }

Route planning_base(const Route& route, double now) {
    Route base = route;
    if (!base.started) {
        base.frozen_until = 0;
        base.stops.front().not_before = now;
    }
    if (base.frozen_until + 1 >= base.stops.size()) {
        base.stops.back().not_before = std::max(base.stops.back().not_before, now);
        base.stops.push_back(Stop::at(base.depot));
    }
    return base;
}

namespace {

struct PlacedAction {
    NodeId node;
    Action action;
};

void append_action(std::vector<Stop>& stops, std::size_t frozen_until, NodeId node, const Action& action) {
    if (stops.size() > frozen_until + 1 && stops.back().node == node) {
        stops.back().actions.push_back(action);
        return;
    }
    Stop s;
    s.node = node;
    s.actions.push_back(action);
    stops.push_back(std::move(s));
}

}  // namespace

PlannerResult plan_insertion(const Route& route, const DeliveryOrder& order, double now, const PlanningContext& ctx) {
    const Route base = planning_base(route, now);
    const std::size_t frozen = base.frozen_until;

    std::vector<PlacedAction> editable;
    for (std::size_t i = frozen + 1; i + 1 < base.stops.size(); ++i) {
        for (const auto& a : base.stops[i].actions) editable.push_back({base.stops[i].node, a});
    }
    const PlacedAction pickup{order.pickup, {ActionKind::pickup, order}};
    const PlacedAction deliver{order.delivery, {ActionKind::deliver, order}};

    const std::size_t m = editable.size();
    Route candidate = base;
    Route best;
    bool found = false;
    for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = i; j <= m; ++j) {
            candidate.stops.assign(base.stops.begin(), base.stops.begin() + static_cast<std::ptrdiff_t>(frozen) + 1);
            for (std::size_t k = 0; k <= m; ++k) {
                if (k == i) append_action(candidate.stops, frozen, pickup.node, pickup.action);
                if (k == j) append_action(candidate.stops, frozen, deliver.node, deliver.action);
                if (k < m) append_action(candidate.stops, frozen, editable[k].node, editable[k].action);
            }
            candidate.stops.push_back(Stop::at(base.depot));
            simulate_timeline(candidate, ctx.network);
            if (found && candidate.length >= best.length) continue;
            if (!check_feasibility(candidate, ctx.fleet).feasible()) continue;
            best = candidate;
            found = true;
        }
    }
    if (!found) return PlannerResult::infeasible();

    best.started = true;
    PlannerResult r;
    r.feasible = true;
    r.cur_len = route.length;
    r.new_len = best.length;
    r.used_flag = route.started ? 1 : 0;
    r.interval = std::clamp(static_cast<int>(std::floor(order.created_at / (static_cast<double>(kMinutesPerDay) / ctx.horizon))),
                            0, ctx.horizon - 1);
    r.st_score = st_score(capacity_vector(best, ctx.fleet.capacity, ctx.network, ctx.horizon),
                          demand_vector(best, ctx.predicted, ctx.network));
    r.best_route = std::move(best);
    return r;
}

}  // namespace dpdp
