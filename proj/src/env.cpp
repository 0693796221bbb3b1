#include "dpdp/env.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace dpdp {

VehicleState VehicleState::from(const PlannerResult& plan) {
    VehicleState s;
    if (!plan.feasible) return s;
    s.d_cur = plan.cur_len;
    s.d_new = plan.new_len;
    s.st_score = plan.st_score;
    s.used_flag = plan.used_flag;
    s.interval = plan.interval;
    s.feasible = true;
    return s;
}

bool JointState::any_feasible() const {
    return std::any_of(rows.begin(), rows.end(), [](const VehicleState& r) { return r.feasible; });
}

std::vector<VehicleId> JointState::feasible_vehicles() const {
    std::vector<VehicleId> out;
    for (int k = 0; k < size(); ++k) {
        if (rows[k].feasible) out.push_back(k);
    }
    return out;
}

FleetState FleetState::idle(const FleetConfig& fleet) {
    FleetState f;
    for (const auto& v : fleet.vehicles) f.routes.push_back(make_idle_route(v.id, v.depot));
    f.accepted.assign(fleet.vehicles.size(), 0);
    return f;
}

std::vector<Point> advance_fleet(FleetState& fleet, double now, const RoadNetwork& network) {
    std::vector<Point> positions;
    positions.reserve(fleet.routes.size());
    for (auto& route : fleet.routes) {
        const VehicleStatus st = locate(route, now, network);
        route.frozen_until = st.frozen_until;
        positions.push_back(st.position);
    }
    return positions;
}

StateWithPlans build_joint_state(const DeliveryOrder& order, const FleetState& fleet, std::vector<Point> positions,
                                 const PlanningContext& ctx) {
    StateWithPlans out;
    out.state.order_id = order.id;
    out.state.interval = std::clamp(order.created_at / (kMinutesPerDay / ctx.horizon), 0, ctx.horizon - 1);
    out.state.positions = std::move(positions);
    out.state.accepted = fleet.accepted;
    for (const auto& route : fleet.routes) {
        out.plans.push_back(plan_insertion(route, order, order.created_at, ctx));
        out.state.rows.push_back(VehicleState::from(out.plans.back()));
    }
    return out;
}

double instant_reward(int used_flag, double delta_d, double fixed_cost, double unit_cost, double alpha) {
    const double fixed_charge = used_flag == 0 ? 1.0 : 0.0;
    return -alpha * (fixed_cost * fixed_charge + unit_cost * delta_d);
}

double long_term_reward(std::span<const double> instant_rewards) {
    if (instant_rewards.empty()) throw std::invalid_argument("long-term reward needs at least one served order");
    return std::accumulate(instant_rewards.begin(), instant_rewards.end(), 0.0) /
           static_cast<double>(instant_rewards.size());
}

std::vector<double> final_rewards(std::span<const double> instant_rewards) {
    const double mean = long_term_reward(instant_rewards);
    std::vector<double> out(instant_rewards.begin(), instant_rewards.end());
    for (auto& r : out) r += mean;
    return out;
}

EpisodeResult run_episode(const Instance& instance, DispatchPolicy& policy, const EpisodeOptions& options) {
    using clock = std::chrono::steady_clock;
    const StdMatrix predicted = predicted_demand(instance);
    const PlanningContext ctx{instance.network, instance.fleet, predicted, instance.horizon};

    FleetState fleet = FleetState::idle(instance.fleet);
    EpisodeResult result;
    EpisodeReport& report = result.report;
    report.policy = policy.name();
    report.fixed_cost = instance.fleet.fixed_cost;
    report.unit_cost = instance.fleet.unit_cost;

    std::vector<double> instant;
    std::vector<JointState> states;
    std::vector<VehicleId> actions;
    const int width = instance.interval_length();

    for (const auto& order : instance.orders) {
        const auto started = clock::now();
        auto positions = advance_fleet(fleet, order.created_at, instance.network);
        StateWithPlans sp = build_joint_state(order, fleet, std::move(positions), ctx);
        if (!sp.state.any_feasible()) {
            throw EpisodeAborted("order " + std::to_string(order.id) + " created at minute " +
                                 std::to_string(order.created_at) + " has no feasible vehicle");
        }
        const VehicleId k = policy.select(sp.state);
        const double seconds = std::chrono::duration<double>(clock::now() - started).count();
        if (k < 0 || k >= sp.state.size() || !sp.state.rows[k].feasible) {
            throw EpisodeAborted("policy " + policy.name() + " chose infeasible vehicle " + std::to_string(k) +
                                 " for order " + std::to_string(order.id));
        }

        PlannerResult& plan = sp.plans[k];
        OrderLogEntry entry;
        entry.order = order.id;
        entry.vehicle = k;
        entry.now = order.created_at;
        entry.delta_d = plan.new_len - plan.cur_len;
        entry.fixed_charge = plan.used_flag == 0;
        entry.instant_reward = instant_reward(plan.used_flag, entry.delta_d, instance.fleet.fixed_cost,
                                              instance.fleet.unit_cost, options.alpha);
        entry.decision_seconds = seconds;
        entry.frozen_until = plan.best_route.frozen_until;
        entry.route_after = plan.best_route;
        instant.push_back(entry.instant_reward);
        report.log.push_back(std::move(entry));

        fleet.routes[k] = std::move(plan.best_route);
        fleet.accepted[k] += 1;
        if (options.record) {
            states.push_back(std::move(sp.state));
            actions.push_back(k);
        }
    }

    if (!instant.empty()) {
        const auto rewards = final_rewards(instant);
        for (std::size_t i = 0; i < rewards.size(); ++i) report.log[i].reward = rewards[i];
    }

    if (options.record) {
        const auto& orders = instance.orders;
        for (std::size_t i = 0; i < states.size(); ++i) {
            Transition tr;
            tr.action = actions[i];
            tr.reward = report.log[i].reward;
            tr.interval_end = i + 1 == orders.size() || orders[i + 1].created_at / width != orders[i].created_at / width;
            tr.state = states[i];
            if (i + 1 < states.size()) tr.next_state = states[i + 1];
            result.transitions.push_back(std::move(tr));
        }
    }

    report.routes = fleet.routes;
    for (const auto& r : fleet.routes) {
        if (r.started) ++report.nuv;
        report.ttl += r.length;
    }
    report.tc = total_cost(report.nuv, report.ttl, report.fixed_cost, report.unit_cost);
    if (!report.log.empty()) {
        double sum = 0.0;
        for (const auto& e : report.log) {
            sum += e.decision_seconds;
            report.max_decision_seconds = std::max(report.max_decision_seconds, e.decision_seconds);
        }
        report.mean_decision_seconds = sum / static_cast<double>(report.log.size());
    }
    return result;
}

namespace {

nlohmann::json route_to_json(const Route& r) {
    nlohmann::json stops = nlohmann::json::array();
    for (const auto& s : r.stops) {
        nlohmann::json actions = nlohmann::json::array();
        for (const auto& a : s.actions) {
            actions.push_back({{"kind", a.kind == ActionKind::pickup ? "pickup" : "deliver"}, {"order", a.order.id}});
        }
        stops.push_back({{"node", s.node},
                         {"arrival", s.arrival},
                         {"departure", s.departure},
                         {"not_before", s.not_before},
                         {"actions", actions}});
    }
    return {{"vehicle", r.vehicle}, {"depot", r.depot}, {"length", r.length}, {"used", r.started}, {"stops", stops}};
}

}  // namespace

std::string report_to_json(const EpisodeReport& report) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& e : report.log) {
        log.push_back({{"order", e.order},
                       {"vehicle", e.vehicle},
                       {"time", e.now},
                       {"delta_d", e.delta_d},
                       {"fixed_charge", e.fixed_charge},
                       {"instant_reward", e.instant_reward},
                       {"reward", e.reward}});
    }
    nlohmann::json routes = nlohmann::json::array();
    for (const auto& r : report.routes) routes.push_back(route_to_json(r));
    nlohmann::json doc{{"policy", report.policy},
                       {"nuv", report.nuv},
                       {"ttl", report.ttl},
                       {"tc", report.tc},
                       {"fixed_cost", report.fixed_cost},
                       {"unit_cost", report.unit_cost},
                       {"max_decision_seconds", report.max_decision_seconds},
                       {"mean_decision_seconds", report.mean_decision_seconds},
                       {"orders", log},
                       {"routes", routes}};
    return doc.dump(1) + "\n";
}

std::string trace_lines(const EpisodeReport& report) {
    std::ostringstream out;
    char buf[128];
    for (const auto& e : report.log) {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g\n", e.order, e.vehicle, e.delta_d, e.reward);
        out << buf;
    }
    return out.str();
}

}  // namespace dpdp
