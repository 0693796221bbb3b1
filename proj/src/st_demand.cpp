#include "dpdp/st_demand.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dpdp {

StdMatrix::StdMatrix(int factories, int intervals)
    : factories_(factories), intervals_(intervals),
      values_(static_cast<std::size_t>(factories) * static_cast<std::size_t>(intervals), 0.0) {}

std::size_t StdMatrix::index(int factory, int interval) const {
    if (factory < 0 || factory >= factories_ || interval < 0 || interval >= intervals_) {
        throw std::out_of_range("STD matrix index (" + std::to_string(factory) + ", " + std::to_string(interval) +
                                ") outside " + std::to_string(factories_) + "x" + std::to_string(intervals_));
    }
    return static_cast<std::size_t>(factory) * intervals_ + interval;
}

double StdMatrix::total() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

namespace {

int interval_index(double minute, int intervals) {
    const double width = static_cast<double>(kMinutesPerDay) / intervals;
    return std::clamp(static_cast<int>(std::floor(minute / width)), 0, intervals - 1);
}

}  // namespace

StdMatrix build_std_matrix(std::span<const DeliveryOrder> orders, const RoadNetwork& network, int intervals) {
    StdMatrix m(network.factory_count(), intervals);
    const double width = static_cast<double>(kMinutesPerDay) / intervals;
    for (const auto& o : orders) {
        const int f = network.factory_index(o.pickup);
        const int j = static_cast<int>(std::floor(o.created_at / width));
        if (f < 0) throw std::out_of_range("order " + std::to_string(o.id) + " pickup is not a factory");
        m.at(f, j) += o.quantity;
    }
    return m;
}

StdMatrix predict_std(std::span<const StdMatrix> history) {
    if (history.empty()) throw std::invalid_argument("STD prediction needs at least one historical day");
    const int n = history.front().factories();
    const int t = history.front().intervals();
    StdMatrix out(n, t);
    for (const auto& day : history) {
        if (day.factories() != n || day.intervals() != t) {
            throw std::invalid_argument("historical STD matrices differ in dimensions");
        }
    }
    const double k = static_cast<double>(history.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < t; ++j) {
            double sum = 0.0;
            for (const auto& day : history) sum += day.at(i, j);
            out.at(i, j) = sum / k;
        }
    }
    return out;
}

StdMatrix predicted_demand(const Instance& instance) {
    if (instance.history.empty()) return StdMatrix(instance.network.factory_count(), instance.horizon);
    std::vector<StdMatrix> days;
    for (const auto& day : instance.history) days.push_back(build_std_matrix(day, instance.network, instance.horizon));
    return predict_std(days);
}

StVector capacity_vector(const Route& route, int capacity, const RoadNetwork& network, int intervals) {
    StVector v;
    v.kind = StVector::Kind::capacity;
    int load = 0;
    for (std::size_t i = 0; i < route.stops.size(); ++i) {
        const Stop& s = route.stops[i];
        const int f = network.factory_index(s.node);
        if (f >= 0) {
            v.coords.push_back({f, interval_index(s.arrival, intervals)});
            v.values.push_back(static_cast<double>(capacity - load));
        }
        for (const auto& a : s.actions) load += a.kind == ActionKind::pickup ? a.order.quantity : -a.order.quantity;
    }
    return v;
}

StVector demand_vector(const Route& route, const StdMatrix& predicted, const RoadNetwork& network) {
    StVector v;
    v.kind = StVector::Kind::demand;
    for (const auto& s : route.stops) {
        const int f = network.factory_index(s.node);
        if (f < 0) continue;
        const StCoordinate c{f, interval_index(s.arrival, predicted.intervals())};
        v.coords.push_back(c);
        v.values.push_back(predicted.at(c.factory, c.interval));
    }
    return v;
}

std::vector<double> normalize(std::span<const double> values) {
    std::vector<double> p(values.begin(), values.end());
    double sum = 0.0;
    for (auto& x : p) {
        x = std::max(x, 0.0) + kSmoothing;
        sum += x;
    }
    for (auto& x : p) x /= sum;
    return p;
}

double js_divergence(std::span<const double> p_raw, std::span<const double> q_raw) {
    if (p_raw.size() != q_raw.size()) throw std::invalid_argument("JS divergence inputs differ in length");
    if (p_raw.empty()) throw std::invalid_argument("JS divergence of empty vectors");
    const auto p = normalize(p_raw);
    const auto q = normalize(q_raw);
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        js += 0.5 * p[i] * std::log2(p[i] / m) + 0.5 * q[i] * std::log2(q[i] / m);
    }
    return std::clamp(js, 0.0, 1.0);
}

double st_score(const StVector& capacity, const StVector& demand) {
    return js_divergence(capacity.values, demand.values);
}

std::string to_csv(const StdMatrix& matrix) {
    std::ostringstream out;
    for (int i = 0; i < matrix.factories(); ++i) {
        for (int j = 0; j < matrix.intervals(); ++j) {
            if (j > 0) out << ',';
            out << matrix.at(i, j);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace dpdp
