#include "dpdp/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace dpdp {

std::string to_string(GreedyKind kind) {
    switch (kind) {
        case GreedyKind::incremental: return "greedy1";
        case GreedyKind::total: return "greedy2";
        case GreedyKind::max_orders: return "greedy3";
    }
    return "greedy";
}

VehicleId greedy_dispatch(const JointState& state, GreedyKind kind) {
    VehicleId best = -1;
    double best_key = 0.0;
    for (VehicleId k = 0; k < state.size(); ++k) {
        const VehicleState& row = state.rows[k];
        if (!row.feasible) continue;
        double key = 0.0;
        switch (kind) {
            case GreedyKind::incremental: key = row.delta_d(); break;
            case GreedyKind::total: key = row.d_new; break;
            case GreedyKind::max_orders: key = -static_cast<double>(state.accepted.at(k)); break;
        }
        if (best < 0 || key < best_key) {
            best = k;
            best_key = key;
        }
    }
    if (best < 0) throw NoFeasibleVehicle("order " + std::to_string(state.order_id) + " has no feasible vehicle");
    return best;
}

VehicleId RandomPolicy::select(const JointState& state) {
    const auto feasible = state.feasible_vehicles();
    if (feasible.empty()) throw NoFeasibleVehicle("order " + std::to_string(state.order_id) + " has no feasible vehicle");
    std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
    return feasible[pick(rng_)];
}

VehicleId ExactPlanPolicy::select(const JointState& state) {
    const auto it = assignment_.find(state.order_id);
    if (it != assignment_.end() && it->second >= 0 && it->second < state.size() && state.rows[it->second].feasible) {
        return it->second;
    }
    ++fallbacks_;
    return greedy_dispatch(state, GreedyKind::incremental);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Step {
    NodeId node;
    Action action;
};

// Shortest LIFO/TW/capacity-feasible closed tour from `depot` serving exactly
// the orders in `mask`, departing at minute 0.
class Sequencer {
public:
    Sequencer(const Instance& inst, bool metric) : inst_(inst), metric_(metric) {}

    struct Best {
        double length = kInf;
        std::vector<Step> steps;
    };

    const Best& solve(std::uint32_t mask, NodeId depot) {
        const auto key = std::make_pair(mask, depot);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        mask_ = mask;
        depot_ = depot;
        best_ = Best{};
        if (mask == 0) {
            best_.length = 0.0;
        } else {
            path_.clear();
            stack_.clear();
            dfs(depot, 0.0, 0, 0.0, 0, 0);
        }
        return memo_.emplace(key, best_).first->second;
    }

private:
    void dfs(NodeId node, double t, int load, double length, std::uint32_t picked, std::uint32_t delivered) {
        const auto& net = inst_.network;
        const double closing = length + net.distance(node, depot_);
        if (metric_ && closing >= best_.length) return;
        if (delivered == mask_) {
            if (closing < best_.length) {
                best_.length = closing;
                best_.steps = path_;
            }
            return;
        }
        if (!stack_.empty()) {
            const std::size_t idx = stack_.back();
            const DeliveryOrder& o = inst_.orders[idx];
            const double done = t + net.travel_time(node, o.delivery) + net.service_time;
            if (done <= o.latest_delivery + 1e-9) {
                stack_.pop_back();
                path_.push_back({o.delivery, {ActionKind::deliver, o}});
                dfs(o.delivery, done, load - o.quantity, length + net.distance(node, o.delivery), picked,
                    delivered | (1u << idx));
                path_.pop_back();
                stack_.push_back(idx);
            }
        }
        for (std::size_t idx = 0; idx < inst_.orders.size(); ++idx) {
            const std::uint32_t bit = 1u << idx;
            if (!(mask_ & bit) || (picked & bit)) continue;
            const DeliveryOrder& o = inst_.orders[idx];
            if (load + o.quantity > inst_.fleet.capacity) continue;
            const double start = std::max(t + net.travel_time(node, o.pickup), static_cast<double>(o.created_at));
            stack_.push_back(idx);
            path_.push_back({o.pickup, {ActionKind::pickup, o}});
            dfs(o.pickup, start + net.service_time, load + o.quantity, length + net.distance(node, o.pickup),
                picked | bit, delivered);
            path_.pop_back();
            stack_.pop_back();
        }
    }

    const Instance& inst_;
    bool metric_;
    std::map<std::pair<std::uint32_t, NodeId>, Best> memo_;
    std::uint32_t mask_ = 0;
    NodeId depot_ = 0;
    Best best_;
    std::vector<Step> path_;
    std::vector<std::size_t> stack_;
};

Route route_from_steps(VehicleId vehicle, NodeId depot, const std::vector<Step>& steps, const RoadNetwork& net) {
    Route r;
    r.vehicle = vehicle;
    r.depot = depot;
    r.stops.push_back(Stop::at(depot));
    for (const auto& s : steps) {
        if (r.stops.size() > 1 && r.stops.back().node == s.node) {
            r.stops.back().actions.push_back(s.action);
        } else {
            Stop stop;
            stop.node = s.node;
            stop.actions.push_back(s.action);
            r.stops.push_back(std::move(stop));
        }
    }
    r.stops.push_back(Stop::at(depot));
    r.started = !steps.empty();
    simulate_timeline(r, net, 0.0);
    return r;
}

class BranchAndBound {
public:
    BranchAndBound(const Instance& inst, double budget)
        : inst_(inst), metric_(inst.network.is_metric()), seq_(inst, metric_), budget_(budget),
          masks_(inst.fleet.vehicles.size(), 0), lengths_(inst.fleet.vehicles.size(), 0.0) {}

    void run() {
        started_ = std::chrono::steady_clock::now();
        recurse(0, 0);
    }

    bool timed_out() const { return timed_out_; }
    bool found() const { return best_tc_ < kInf; }
    double best_tc() const { return best_tc_; }
    const std::vector<std::uint32_t>& best_masks() const { return best_masks_; }
    std::uint64_t nodes() const { return nodes_; }
    Sequencer& sequencer() { return seq_; }

private:
    void recurse(std::size_t i, int used) {
        ++nodes_;
        if ((nodes_ & 0x3ff) == 0) {
            const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
            if (elapsed > budget_) timed_out_ = true;
        }
        if (timed_out_) return;

        double committed = 0.0;
        for (double l : lengths_) committed += l;
        const auto& fleet = inst_.fleet;
        // Sequenced subset lengths only grow with more orders on metric networks.
        const double bound = fleet.fixed_cost * used + (metric_ ? fleet.unit_cost * committed : 0.0);
        if (bound >= best_tc_) return;
        if (i == inst_.orders.size()) {
            best_tc_ = total_cost(used, committed, fleet.fixed_cost, fleet.unit_cost);
            best_masks_ = masks_;
            return;
        }

        struct Option {
            VehicleId vehicle;
            double length;
            double score;
        };
        std::vector<Option> options;
        std::vector<NodeId> opened_depots;
        for (VehicleId k = 0; k < fleet.size(); ++k) {
            const NodeId depot = fleet.vehicles[k].depot;
            const bool fresh = masks_[k] == 0;
            if (fresh) {
                // Unused vehicles at the same depot are interchangeable.
                if (std::find(opened_depots.begin(), opened_depots.end(), depot) != opened_depots.end()) continue;
                opened_depots.push_back(depot);
            }
            const auto& best = seq_.solve(masks_[k] | (1u << i), depot);
            if (best.length == kInf) continue;
            const double extra = fleet.unit_cost * (best.length - lengths_[k]) + (fresh ? fleet.fixed_cost : 0.0);
            options.push_back({k, best.length, extra});
        }
        std::stable_sort(options.begin(), options.end(),
                         [](const Option& a, const Option& b) { return a.score < b.score; });
        for (const auto& opt : options) {
            const VehicleId k = opt.vehicle;
            const std::uint32_t old_mask = masks_[k];
            const double old_len = lengths_[k];
            masks_[k] |= 1u << i;
            lengths_[k] = opt.length;
            recurse(i + 1, used + (old_mask == 0 ? 1 : 0));
            masks_[k] = old_mask;
            lengths_[k] = old_len;
            if (timed_out_) return;
        }
    }

    const Instance& inst_;
    bool metric_;
    Sequencer seq_;
    double budget_;
    std::vector<std::uint32_t> masks_;
    std::vector<double> lengths_;
    std::vector<std::uint32_t> best_masks_;
    double best_tc_ = kInf;
    std::uint64_t nodes_ = 0;
    bool timed_out_ = false;
    std::chrono::steady_clock::time_point started_;
};

}  // namespace

ExactResult solve_exact(const Instance& instance, double budget_seconds) {
    if (!(budget_seconds > 0.0)) throw std::invalid_argument("exact solver budget must be positive");
    if (instance.orders.size() > 31) throw std::invalid_argument("exact solver supports at most 31 orders");
    const auto started = std::chrono::steady_clock::now();

    BranchAndBound bb(instance, budget_seconds);
    bb.run();
    if (!bb.found()) {
        if (bb.timed_out()) throw InfeasibleInstance("exact solver found no plan within the budget");
        throw InfeasibleInstance("no plan serves every order");
    }

    ExactResult res;
    res.proven_optimal = !bb.timed_out();
    res.nodes = bb.nodes();
    const auto& fleet = instance.fleet;
    for (VehicleId k = 0; k < fleet.size(); ++k) {
        const std::uint32_t mask = bb.best_masks()[k];
        const NodeId depot = fleet.vehicles[k].depot;
        const auto& best = bb.sequencer().solve(mask, depot);
        res.plan.push_back(route_from_steps(k, depot, best.steps, instance.network));
        if (mask != 0) ++res.nuv;
        res.ttl += res.plan.back().length;
        for (std::size_t i = 0; i < instance.orders.size(); ++i) {
            if (mask & (1u << i)) res.assignment[instance.orders[i].id] = k;
        }
    }
    res.tc = total_cost(res.nuv, res.ttl, fleet.fixed_cost, fleet.unit_cost);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return res;
}

std::string dump_plan(const ExactResult& result) {
    std::ostringstream out;
    out << "# tc " << result.tc << " nuv " << result.nuv << " ttl " << result.ttl
        << (result.proven_optimal ? " optimal" : " budget-exhausted") << '\n';
    for (const auto& r : result.plan) {
        if (!r.started) continue;
        out << "vehicle " << r.vehicle << '\n' << dump_route(r);
    }
    return out.str();
}

namespace {

struct Resim {
    std::vector<double> arrival;
    std::vector<double> departure;
    double length = 0.0;
};

Verdict fail(Violation kind, int stop, OrderId order, std::string detail) {
    return {kind, stop, order, std::move(detail)};
}

// Independent walk over one executed route.
Verdict check_route(const Route& r, const Instance& inst, std::vector<int>& picked, std::vector<int>& dropped,
                    Resim& sim) {
    const auto& net = inst.network;
    const NodeId depot = inst.fleet.vehicles.at(r.vehicle).depot;
    if (r.stops.size() < 2 || r.stops.front().node != depot || r.stops.back().node != depot) {
        return fail(Violation::back_to_depot, 0, -1, "vehicle " + std::to_string(r.vehicle) + " route not closed at its depot");
    }
    double t = r.stops.front().not_before;
    if (t < 0.0) return fail(Violation::timeline, 0, -1, "negative start time");
    int load = 0;
    std::vector<OrderId> stack;
    for (std::size_t i = 0; i < r.stops.size(); ++i) {
        const Stop& s = r.stops[i];
        if (i > 0) {
            sim.length += net.dist[r.stops[i - 1].node][s.node];
            t += net.dist[r.stops[i - 1].node][s.node] / net.speed;
        }
        sim.arrival.push_back(t);
        if (s.not_before > t) t = s.not_before;
        for (const auto& a : s.actions) {
            const DeliveryOrder& o = inst.order(a.order.id);
            if (a.kind == ActionKind::pickup) {
                if (t < o.created_at) t = o.created_at;
                if (s.node != o.pickup) return fail(Violation::unserved, static_cast<int>(i), o.id, "pickup at wrong node");
                t += net.service_time;
                load += o.quantity;
                if (load > inst.fleet.capacity) return fail(Violation::capacity, static_cast<int>(i), o.id, "over capacity");
                stack.push_back(o.id);
                picked[&o - inst.orders.data()] += 1;
            } else {
                if (s.node != o.delivery) return fail(Violation::unserved, static_cast<int>(i), o.id, "delivery at wrong node");
                if (stack.empty() || stack.back() != o.id) {
                    return fail(Violation::lifo, static_cast<int>(i), o.id,
                                "stop " + std::to_string(i) + " unloads order " + std::to_string(o.id) + " from below the top");
                }
                stack.pop_back();
                load -= o.quantity;
                t += net.service_time;
                if (t > o.latest_delivery + 1e-9) {
                    return fail(Violation::time_window, static_cast<int>(i), o.id, "late delivery");
                }
                dropped[&o - inst.orders.data()] += 1;
            }
        }
        sim.departure.push_back(t);
        if (std::abs(sim.arrival.back() - s.arrival) > 1e-6 || std::abs(t - s.departure) > 1e-6) {
            return fail(Violation::timeline, static_cast<int>(i), -1, "recorded times disagree with re-simulation");
        }
    }
    if (!stack.empty()) return fail(Violation::lifo, static_cast<int>(r.stops.size()) - 1, stack.back(), "cargo left on board");
    return Verdict::ok();
}

bool same_stop(const Stop& a, const Stop& b) {
    if (a.node != b.node || a.actions.size() != b.actions.size() || a.arrival != b.arrival) return false;
    for (std::size_t i = 0; i < a.actions.size(); ++i) {
        if (a.actions[i].kind != b.actions[i].kind || a.actions[i].order.id != b.actions[i].order.id) return false;
    }
    return true;
}

}  // namespace

Verdict validate_routes(const EpisodeReport& report, const Instance& inst) {
    std::vector<int> picked(inst.orders.size(), 0);
    std::vector<int> dropped(inst.orders.size(), 0);
    int nuv = 0;
    double ttl = 0.0;
    for (const auto& r : report.routes) {
        if (r.vehicle < 0 || r.vehicle >= inst.fleet.size()) return fail(Violation::back_to_depot, -1, -1, "unknown vehicle");
        Resim sim;
        Verdict v = check_route(r, inst, picked, dropped, sim);
        if (!v.feasible()) return v;
        const bool used = std::any_of(r.stops.begin(), r.stops.end(), [](const Stop& s) { return !s.actions.empty(); });
        if (used) ++nuv;
        ttl += sim.length;
    }
    for (std::size_t i = 0; i < inst.orders.size(); ++i) {
        if (picked[i] != 1 || dropped[i] != 1) {
            return fail(Violation::unserved, -1, inst.orders[i].id, "order not served exactly once");
        }
    }

    // Frozen prefix: at every commit, stops the vehicle had reached or was
    // driving toward must survive unchanged.
    std::vector<Route> previous;
    for (const auto& v : inst.fleet.vehicles) previous.push_back(make_idle_route(v.id, v.depot));
    for (std::size_t e = 0; e < report.log.size(); ++e) {
        const OrderLogEntry& entry = report.log[e];
        const Route& before = previous.at(entry.vehicle);
        const Route& after = entry.route_after;
        std::size_t keep = 0;
        if (before.started) {
            for (std::size_t i = 0; i < before.stops.size(); ++i) {
                if (before.stops[i].arrival <= entry.now) keep = i;
            }
            if (entry.now > before.stops[keep].departure && keep + 1 < before.stops.size()) ++keep;
        }
        if (after.stops.size() <= keep) {
            return fail(Violation::frozen_prefix, static_cast<int>(keep), entry.order, "committed route dropped frozen stops");
        }
        for (std::size_t i = 0; i <= keep; ++i) {
            const bool ok = before.started ? same_stop(before.stops[i], after.stops[i]) : before.stops[i].node == after.stops[i].node;
            if (!ok) {
                return fail(Violation::frozen_prefix, static_cast<int>(i), entry.order,
                            "vehicle " + std::to_string(entry.vehicle) + " frozen stop changed");
            }
        }
        previous[entry.vehicle] = after;
    }
    for (const auto& r : report.routes) {
        const Route& last = previous.at(r.vehicle);
        if (last.stops.size() != r.stops.size()) {
            return fail(Violation::frozen_prefix, -1, -1, "executed route differs from last commit");
        }
        for (std::size_t i = 0; i < r.stops.size(); ++i) {
            if (!same_stop(last.stops[i], r.stops[i])) {
                return fail(Violation::frozen_prefix, static_cast<int>(i), -1, "executed route differs from last commit");
            }
        }
    }

    if (report.nuv != nuv || report.ttl != ttl || report.nuv > inst.fleet.size() ||
        report.tc != total_cost(report.nuv, report.ttl, inst.fleet.fixed_cost, inst.fleet.unit_cost)) {
        return fail(Violation::tc_identity, -1, -1, "TC does not equal fixed_cost*NUV + unit_cost*TTL");
    }
    return Verdict::ok();
}

}  // namespace dpdp
