#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpdp {

using NodeId = int;
using OrderId = int;
using VehicleId = int;

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kDefaultHorizon = 144;

// Raised for schema or invariant violations; the message names the field.
class InstanceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class NodeRole { depot, factory };

struct Node {
    NodeId id = 0;
    NodeRole role = NodeRole::factory;
    double x = 0.0;  // km
    double y = 0.0;  // km

    bool operator==(const Node&) const = default;
};

struct RoadNetwork {
    std::vector<Node> nodes;
    std::vector<std::vector<double>> dist;  // km, dist[from][to]
    double speed = 1.0;                     // km per minute
    double service_time = 0.0;              // minutes per load/unload action

    int size() const { return static_cast<int>(nodes.size()); }
    double distance(NodeId from, NodeId to) const { return dist[from][to]; }
    double travel_time(NodeId from, NodeId to) const { return dist[from][to] / speed; }
    double euclidean(NodeId a, NodeId b) const;
    bool is_depot(NodeId n) const { return nodes[n].role == NodeRole::depot; }

    // Position of `n` among factory nodes, or -1 for depots.
    int factory_index(NodeId n) const;
    int factory_count() const;
    std::vector<NodeId> factories() const;

    // True when every triple satisfies d(i,k) <= d(i,j) + d(j,k).
    bool is_metric(double tolerance = 1e-9) const;

    bool operator==(const RoadNetwork&) const = default;
};

struct DeliveryOrder {
    OrderId id = 0;
    NodeId pickup = 0;
    NodeId delivery = 0;
    int quantity = 0;
    int created_at = 0;       // minutes from midnight
    int latest_delivery = 0;  // minutes from midnight

    bool operator==(const DeliveryOrder&) const = default;
};

struct VehicleConfig {
    VehicleId id = 0;
    NodeId depot = 0;

    bool operator==(const VehicleConfig&) const = default;
};

struct FleetConfig {
    std::vector<VehicleConfig> vehicles;
    int capacity = 0;
    double fixed_cost = 300.0;  // per used vehicle
    double unit_cost = 2.0;     // per km

    int size() const { return static_cast<int>(vehicles.size()); }

    bool operator==(const FleetConfig&) const = default;
};

struct Instance {
    RoadNetwork network;
    std::vector<DeliveryOrder> orders;  // ascending created_at
    FleetConfig fleet;
    int horizon = kDefaultHorizon;
    std::vector<std::vector<DeliveryOrder>> history;  // past days, most recent first

    int interval_length() const { return kMinutesPerDay / horizon; }
    // Left-closed right-open interval index of a minute-of-day, clamped to the horizon.
    int interval_of(double minute) const;
    const DeliveryOrder& order(OrderId id) const;

    bool operator==(const Instance&) const = default;
};

// Throws InstanceError naming the first offending field.
void validate(const Instance& instance);

std::string to_json(const Instance& instance);
Instance from_json(const std::string& text);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& instance, const std::filesystem::path& path);

struct GeneratorOptions {
    std::uint64_t seed = 1;
    int n_factories = 10;
    int n_orders = 30;
    int n_vehicles = 10;
    int horizon = kDefaultHorizon;
    int n_depots = 0;       // 0 picks 1 + n_vehicles / 10
    int history_days = 4;
    double hotspot_skew = 0.6;  // probability an order is drawn from a hot factory / hot hour
    double area_km = 30.0;
    double speed = 0.5;
    double service_time = 0.0;
    int capacity = 12;
    int max_quantity = 5;
    double fixed_cost = 300.0;
    double unit_cost = 2.0;
    int min_slack = 60;
    int max_slack = 240;
};

// Distances are the ceiling of the Euclidean distance, which keeps every
// route length integral and preserves the triangle inequality.
Instance generate_instance(const GeneratorOptions& options);
Instance generate_instance(std::uint64_t seed, int n_factories, int n_orders, int n_vehicles,
                           int horizon = kDefaultHorizon);

}  // namespace dpdp
