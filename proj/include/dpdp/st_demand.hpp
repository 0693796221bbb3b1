#pragma once

#include <span>
#include <string>
#include <vector>

#include "dpdp/instance.hpp"
#include "dpdp/route.hpp"

namespace dpdp {

// Factories x intervals grid of cargo units created at each factory per interval.
class StdMatrix {
public:
    StdMatrix() = default;
    StdMatrix(int factories, int intervals);

    int factories() const { return factories_; }
    int intervals() const { return intervals_; }
    double& at(int factory, int interval) { return values_[index(factory, interval)]; }
    double at(int factory, int interval) const { return values_[index(factory, interval)]; }
    const std::vector<double>& values() const { return values_; }
    double total() const;

    bool operator==(const StdMatrix&) const = default;

private:
    std::size_t index(int factory, int interval) const;

    int factories_ = 0;
    int intervals_ = 0;
    std::vector<double> values_;
};

// Throws std::out_of_range when a pickup is not a factory of `network`.
StdMatrix build_std_matrix(std::span<const DeliveryOrder> orders, const RoadNetwork& network, int intervals);

// Element-wise mean over past days. Throws std::invalid_argument on empty
// history or mismatched dimensions.
StdMatrix predict_std(std::span<const StdMatrix> history);

// Prediction from the instance history, or an all-zero grid without history.
StdMatrix predicted_demand(const Instance& instance);

struct StCoordinate {
    int factory = 0;
    int interval = 0;

    bool operator==(const StCoordinate&) const = default;
};

struct StVector {
    enum class Kind { capacity, demand };

    Kind kind = Kind::capacity;
    std::vector<StCoordinate> coords;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

// Residual capacity on arrival at every non-depot stop, in stop order.
StVector capacity_vector(const Route& route, int capacity, const RoadNetwork& network, int intervals);

// Predicted demand at every non-depot stop's (factory, arrival interval).
// Arrivals past the horizon clamp to the final interval.
StVector demand_vector(const Route& route, const StdMatrix& predicted, const RoadNetwork& network);

inline constexpr double kSmoothing = 1e-9;

// Additive smoothing then renormalisation; an all-zero input becomes uniform.
std::vector<double> normalize(std::span<const double> values);

// Base-2 Jensen-Shannon divergence of the normalised inputs, in [0, 1].
double js_divergence(std::span<const double> p, std::span<const double> q);

double st_score(const StVector& capacity, const StVector& demand);

// n rows x T columns, no header.
std::string to_csv(const StdMatrix& matrix);

}  // namespace dpdp
