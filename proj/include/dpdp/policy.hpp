#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dpdp/env.hpp"
#include "dpdp/nn.hpp"

namespace dpdp {

inline constexpr double kInfeasibleQ = -1e9;

struct QNetworkConfig {
    int hidden = 64;
    int mlp_layers = 2;  // hidden layers per MLP
    int heads = 4;
    int head_dim = 16;
    int neighbors = 8;   // NE upper bound; clamped to (feasible vehicles - 1)
    bool use_attention = true;
    bool use_st_score = true;
    double distance_scale = 100.0;  // km per feature unit
    int horizon = kDefaultHorizon;  // interval feature is divided by this
    std::uint64_t seed = 0;

    bool operator==(const QNetworkConfig&) const = default;
};

// Shared-weight per-vehicle Q tower: initial MLP, two neighbourhood attention
// levels, final MLP over [h0 | h1 | h2]. Without attention the final MLP sees h0.
class QNetwork {
public:
    struct Cache {
        std::vector<int> rows;  // feasible vehicle ids, in id order
        std::vector<std::vector<int>> neighbors;
        nn::MlpCache initial;
        nn::AttentionBlock::Cache level1, level2;
        nn::MlpCache final;
    };

    explicit QNetwork(const QNetworkConfig& config = {});

    const QNetworkConfig& config() const { return config_; }

    // One score per vehicle; infeasible rows get kInfeasibleQ and are not evaluated.
    std::vector<double> q_values(const JointState& state, Cache* cache = nullptr) const;
    // dq holds d loss / d Q per vehicle; entries of infeasible rows are ignored.
    void backward(const Cache& cache, std::span<const double> dq);

    std::vector<nn::Param*> params();
    std::vector<const nn::Param*> params() const;
    void copy_weights_from(const QNetwork& other);

    nn::Matrix features(const JointState& state, std::span<const int> rows) const;

private:
    QNetworkConfig config_;
    nn::Mlp initial_;
    nn::AttentionBlock level1_, level2_;
    nn::Mlp final_;
};

// For each listed vehicle: itself first, then its `count` nearest listed
// vehicles by Euclidean distance (ties to the lower id). Returned indices are
// positions within `rows`.
std::vector<std::vector<int>> neighbor_sets(std::span<const Point> positions, std::span<const int> rows, int count);

// Feasible argmax, ties to the lowest id. Throws NoFeasibleVehicle.
VehicleId argmax_feasible(const JointState& state, std::span<const double> q);

// Uniform over feasible vehicles with probability epsilon, argmax otherwise.
VehicleId select_action(const JointState& state, const QNetwork& net, double epsilon, std::mt19937_64& rng);

class QPolicy final : public DispatchPolicy {
public:
    QPolicy(const QNetwork& net, double epsilon, std::mt19937_64& rng, std::string name = "st-ddgn")
        : net_(net), epsilon_(epsilon), rng_(rng), name_(std::move(name)) {}
    VehicleId select(const JointState& state) override { return select_action(state, net_, epsilon_, rng_); }
    std::string name() const override { return name_; }

private:
    const QNetwork& net_;
    double epsilon_;
    std::mt19937_64& rng_;
    std::string name_;
};

struct TrainerConfig {
    double gamma = 0.95;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.6;
    std::size_t buffer_capacity = 100000;
    int batch_size = 64;
    int target_period = 5;
    int steps_per_episode = 1;
    double learning_rate = 1e-3;
    double alpha = 0.01;
    std::uint64_t seed = 0;

    bool operator==(const TrainerConfig&) const = default;
};

// Linear decay from start to end over the first decay_fraction of episodes.
double epsilon_at(const TrainerConfig& config, int episode, int max_episodes);

struct EpisodeLog {
    int episode = 0;
    std::optional<double> loss;  // empty until the buffer holds a batch
    int nuv = 0;
    double ttl = 0.0;
    double tc = 0.0;
    double epsilon = 0.0;
};

using EpisodeSource = std::function<const Instance&(int episode)>;

class Trainer {
public:
    Trainer(const QNetworkConfig& net, const TrainerConfig& config);

    const QNetwork& online() const { return online_; }
    const QNetwork& target() const { return target_; }
    QNetwork& online() { return online_; }
    const TrainerConfig& config() const { return config_; }
    std::size_t buffer_size() const { return buffer_.size(); }
    int episodes_done() const { return episodes_done_; }
    double last_epsilon() const { return last_epsilon_; }
    std::mt19937_64& rng() { return rng_; }

    double double_q_target(const Transition& tr) const;

    void remember(std::vector<Transition> transitions);
    // One mini-batch step on the online network; returns the batch loss.
    // Returns nullopt while the buffer holds fewer than batch_size transitions.
    std::optional<double> train_step();
    void sync_target();

    // Roll out, store, learn and sync for max_episodes episodes.
    std::vector<EpisodeLog> train(const EpisodeSource& source, int max_episodes);

    // Archive of the online network plus a JSON sidecar (<path>.json) with
    // both configs, episode count, epsilon and rng state.
    void save_checkpoint(const std::filesystem::path& path) const;

private:
    QNetworkConfig net_config_;
    TrainerConfig config_;
    QNetwork online_;
    QNetwork target_;
    nn::Adam adam_;
    std::mt19937_64 rng_;
    std::deque<Transition> buffer_;
    int episodes_done_ = 0;
    double last_epsilon_ = 1.0;
};

struct LoadedCheckpoint {
    QNetwork network;
    TrainerConfig trainer;
    int episodes = 0;
};

// Reads the archive and its sidecar written by Trainer::save_checkpoint.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_hash(const QNetwork& net);

std::string learning_curve_csv(std::span<const EpisodeLog> log);

}  // namespace dpdp
