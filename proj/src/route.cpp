#include "dpdp/route.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dpdp {

namespace {
constexpr double kTimeEps = 1e-9;
}

int Route::order_count() const {
    int n = 0;
    for (const auto& s : stops) {
        n += static_cast<int>(std::count_if(s.actions.begin(), s.actions.end(),
                                            [](const Action& a) { return a.kind == ActionKind::pickup; }));
    }
    return n;
}

Route make_idle_route(VehicleId vehicle, NodeId depot) {
    Route r;
    r.vehicle = vehicle;
    r.depot = depot;
    r.stops = {Stop::at(depot), Stop::at(depot)};
    r.load_profile = {0, 0};
    r.stack = {{}, {}};
    return r;
}

void simulate_timeline(Route& route, const RoadNetwork& network, double start_time) {
    if (!route.stops.empty()) route.stops.front().not_before = start_time;
    simulate_timeline(route, network);
}

void simulate_timeline(Route& route, const RoadNetwork& network) {
    route.length = 0.0;
    route.load_profile.assign(route.stops.size(), 0);
    route.stack.assign(route.stops.size(), {});
    double t = route.start_time();
    int load = 0;
    std::vector<OrderId> stack;
    for (std::size_t i = 0; i < route.stops.size(); ++i) {
        Stop& s = route.stops[i];
        if (i > 0) {
            const NodeId prev = route.stops[i - 1].node;
            route.length += network.distance(prev, s.node);
            t = route.stops[i - 1].departure + network.travel_time(prev, s.node);
        }
        s.arrival = t;
        t = std::max(t, s.not_before);
        s.finish.clear();
        for (const auto& a : s.actions) {
            if (a.kind == ActionKind::pickup) {
                t = std::max(t, static_cast<double>(a.order.created_at));
                load += a.order.quantity;
                stack.push_back(a.order.id);
            } else {
                load -= a.order.quantity;
                auto it = std::find(stack.rbegin(), stack.rend(), a.order.id);
                if (it != stack.rend()) stack.erase(std::next(it).base());
            }
            t += network.service_time;
            s.finish.push_back(t);
        }
        s.departure = t;
        route.load_profile[i] = load;
        route.stack[i] = stack;
    }
}

std::string to_string(Violation v) {
    switch (v) {
        case Violation::none: return "feasible";
        case Violation::time_window: return "time-window";
        case Violation::capacity: return "capacity";
        case Violation::lifo: return "LIFO";
        case Violation::back_to_depot: return "back-to-depot";
        case Violation::frozen_prefix: return "frozen-prefix";
        case Violation::tc_identity: return "TC-identity";
        case Violation::unserved: return "unserved";
        case Violation::timeline: return "timeline";
    }
    return "unknown";
}

Verdict check_feasibility(const Route& route, const FleetConfig& fleet) {
    if (route.stops.empty() || route.stops.front().node != route.depot || route.stops.back().node != route.depot) {
        return {Violation::back_to_depot, route.stops.empty() ? -1 : 0, -1, "route must start and end at its depot"};
    }
    int load = 0;
    std::vector<OrderId> stack;
    for (std::size_t i = 0; i < route.stops.size(); ++i) {
        const Stop& s = route.stops[i];
        const int stop = static_cast<int>(i);
        for (std::size_t a = 0; a < s.actions.size(); ++a) {
            const Action& act = s.actions[a];
            const double done = a < s.finish.size() ? s.finish[a] : s.departure;
            if (act.kind == ActionKind::pickup) {
                if (done + kTimeEps < act.order.created_at) {
                    return {Violation::time_window, stop, act.order.id, "pickup before creation"};
                }
                load += act.order.quantity;
                if (load > fleet.capacity) return {Violation::capacity, stop, act.order.id, "load exceeds capacity"};
                stack.push_back(act.order.id);
            } else {
                if (stack.empty() || stack.back() != act.order.id) {
                    return {Violation::lifo, stop, act.order.id, "delivered order is not on top of the stack"};
                }
                stack.pop_back();
                load -= act.order.quantity;
                if (done > act.order.latest_delivery + kTimeEps) {
                    return {Violation::time_window, stop, act.order.id, "delivered after latest_delivery"};
                }
            }
        }
    }
    if (!stack.empty()) {
        return {Violation::lifo, static_cast<int>(route.stops.size()) - 1, stack.back(), "order never delivered"};
    }
    return Verdict::ok();
}

VehicleStatus locate(const Route& route, double now, const RoadNetwork& network) {
    VehicleStatus st;
    const auto at_node = [&](NodeId n) { return Point{network.nodes[n].x, network.nodes[n].y}; };
    if (!route.started || route.stops.empty()) {
        st.frozen_until = 0;
        st.position = at_node(route.depot);
        return st;
    }
    std::size_t c = 0;
    for (std::size_t i = 0; i < route.stops.size(); ++i) {
        if (route.stops[i].arrival <= now) c = i;
    }
    const Stop& cur = route.stops[c];
    if (now <= cur.departure || c + 1 == route.stops.size()) {
        st.frozen_until = c;
        st.position = at_node(cur.node);
        return st;
    }
    const Stop& next = route.stops[c + 1];
    st.frozen_until = c + 1;
    st.at_stop = false;
    const double span = next.arrival - cur.departure;
    const double frac = span > 0.0 ? std::clamp((now - cur.departure) / span, 0.0, 1.0) : 1.0;
    const Point a = at_node(cur.node);
    const Point b = at_node(next.node);
    st.position = {a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y)};
    return st;
}

std::string dump_route(const Route& route) {
    std::ostringstream out;
    char buf[64];
    for (const auto& s : route.stops) {
        std::snprintf(buf, sizeof(buf), "%d %.3f %.3f", s.node, s.arrival, s.departure);
        out << buf;
        for (const auto& a : s.actions) {
            out << ' ' << (a.kind == ActionKind::pickup ? '+' : '-') << a.order.id;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace dpdp
