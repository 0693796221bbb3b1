#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dpdp/env.hpp"
#include "dpdp/instance.hpp"
#include "dpdp/route.hpp"

namespace dpdp {

enum class GreedyKind {
    incremental,  // baseline 1: shortest incremental route length
    total,        // baseline 2: shortest total route length after accepting
    max_orders,   // baseline 3: most accepted orders
};

std::string to_string(GreedyKind kind);

class NoFeasibleVehicle : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Ties go to the lowest vehicle id. Throws NoFeasibleVehicle.
VehicleId greedy_dispatch(const JointState& state, GreedyKind kind);

class GreedyPolicy final : public DispatchPolicy {
public:
    explicit GreedyPolicy(GreedyKind kind) : kind_(kind) {}
    VehicleId select(const JointState& state) override { return greedy_dispatch(state, kind_); }
    std::string name() const override { return to_string(kind_); }

private:
    GreedyKind kind_;
};

// Uniform over feasible vehicles; used for fuzzing.
class RandomPolicy final : public DispatchPolicy {
public:
    explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
    VehicleId select(const JointState& state) override;
    std::string name() const override { return "random"; }

private:
    std::mt19937_64 rng_;
};

// Replays a precomputed order -> vehicle assignment. Falls back to baseline 1
// when the assigned vehicle cannot take the order online.
class ExactPlanPolicy final : public DispatchPolicy {
public:
    explicit ExactPlanPolicy(std::map<OrderId, VehicleId> assignment) : assignment_(std::move(assignment)) {}
    VehicleId select(const JointState& state) override;
    std::string name() const override { return "exact-plan"; }
    int fallbacks() const { return fallbacks_; }

private:
    std::map<OrderId, VehicleId> assignment_;
    int fallbacks_ = 0;
};

struct ExactResult {
    double tc = 0.0;
    int nuv = 0;
    double ttl = 0.0;
    bool proven_optimal = false;
    std::vector<Route> plan;  // one route per vehicle, unused vehicles idle
    std::map<OrderId, VehicleId> assignment;
    double seconds = 0.0;
    std::uint64_t nodes = 0;
};

class InfeasibleInstance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Branch-and-bound over order -> vehicle assignments, with each vehicle's
// order subset sequenced by an inner depth-first search over LIFO-feasible
// action sequences. Orders are known up front and vehicles leave their depot
// at minute 0. Returns the incumbent with proven_optimal = false when the
// wall-time budget runs out. Throws std::invalid_argument for a non-positive
// budget and InfeasibleInstance when no plan serves every order.
ExactResult solve_exact(const Instance& instance, double budget_seconds);

// Per-vehicle ordered stop list.
std::string dump_plan(const ExactResult& result);

// Re-simulates every executed route from scratch and re-checks time windows,
// capacity, LIFO, back-to-depot, service of every order, the frozen prefix at
// each commit and the TC identity. Does not use the planner's own checks.
Verdict validate_routes(const EpisodeReport& report, const Instance& instance);

}  // namespace dpdp
