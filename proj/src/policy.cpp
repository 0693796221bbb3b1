#include "dpdp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dpdp/baselines.hpp"

namespace dpdp {

namespace {

std::vector<int> mlp_widths(int in, int hidden, int layers, int out) {
    std::vector<int> w{in};
    for (int i = 0; i < layers; ++i) w.push_back(hidden);
    w.push_back(out);
    return w;
}

}  // namespace

QNetwork::QNetwork(const QNetworkConfig& config) : config_(config) {
    if (config.hidden <= 0 || config.mlp_layers < 1 || config.heads <= 0 || config.head_dim <= 0 ||
        config.neighbors < 0 || config.distance_scale <= 0.0 || config.horizon <= 0) {
        throw std::invalid_argument("invalid Q-network configuration");
    }
    std::mt19937_64 rng(config.seed);
    const int h = config.hidden;
    const auto init = mlp_widths(kStateWidth, h, config.mlp_layers - 1, h);
    initial_ = nn::Mlp("initial", init, true, rng);
    int final_in = h;
    if (config.use_attention) {
        level1_ = nn::AttentionBlock("attention1", h, config.heads, config.head_dim, h, rng);
        level2_ = nn::AttentionBlock("attention2", h, config.heads, config.head_dim, h, rng);
        final_in = 3 * h;
    }
    const auto fin = mlp_widths(final_in, h, config.mlp_layers, 1);
    final_ = nn::Mlp("final", fin, false, rng);
}

nn::Matrix QNetwork::features(const JointState& state, std::span<const int> rows) const {
    nn::Matrix x(static_cast<int>(rows.size()), kStateWidth);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const VehicleState& s = state.rows[rows[i]];
        const int r = static_cast<int>(i);
        x(r, 0) = s.d_cur / config_.distance_scale;
        x(r, 1) = s.d_new / config_.distance_scale;
        x(r, 2) = config_.use_st_score ? s.st_score : 0.0;
        x(r, 3) = s.used_flag;
        x(r, 4) = s.interval / config_.horizon;
    }
    return x;
}

std::vector<std::vector<int>> neighbor_sets(std::span<const Point> positions, std::span<const int> rows, int count) {
    const int m = static_cast<int>(rows.size());
    const int ne = std::clamp(count, 0, std::max(0, m - 1));
    std::vector<std::vector<int>> out(m);
    for (int i = 0; i < m; ++i) {
        const Point& p = positions[rows[i]];
        std::vector<std::pair<double, int>> cand;
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const Point& q = positions[rows[j]];
            cand.emplace_back(std::hypot(p.x - q.x, p.y - q.y), j);
        }
        std::sort(cand.begin(), cand.end());
        out[i].push_back(i);
        for (int n = 0; n < ne; ++n) out[i].push_back(cand[n].second);
    }
    return out;
}

std::vector<double> QNetwork::q_values(const JointState& state, Cache* cache) const {
    std::vector<double> q(state.rows.size(), kInfeasibleQ);
    const std::vector<int> rows = state.feasible_vehicles();
    if (rows.empty()) return q;
    if (state.positions.size() != state.rows.size()) throw std::invalid_argument("state positions do not match rows");

    Cache local;
    Cache& c = cache ? *cache : local;
    c.rows = rows;
    const nn::Matrix x = features(state, rows);
    const nn::Matrix h0 = initial_.forward(x, &c.initial);
    nn::Matrix top = h0;
    if (config_.use_attention) {
        c.neighbors = neighbor_sets(state.positions, rows, config_.neighbors);
        const nn::Matrix h1 = level1_.forward(h0, c.neighbors, &c.level1);
        const nn::Matrix h2 = level2_.forward(h1, c.neighbors, &c.level2);
        top = nn::hconcat(nn::hconcat(h0, h1), h2);
    } else {
        c.neighbors.clear();
    }
    const nn::Matrix out = final_.forward(top, &c.final);
    for (std::size_t i = 0; i < rows.size(); ++i) q[rows[i]] = out(static_cast<int>(i), 0);
    return q;
}

void QNetwork::backward(const Cache& cache, std::span<const double> dq) {
    const int m = static_cast<int>(cache.rows.size());
    if (m == 0) return;
    nn::Matrix dout(m, 1);
    for (int i = 0; i < m; ++i) dout(i, 0) = dq[cache.rows[i]];
    const nn::Matrix dtop = final_.backward(cache.final, dout);
    if (!config_.use_attention) {
        initial_.backward(cache.initial, dtop);
        return;
    }
    const int h = config_.hidden;
    nn::Matrix dh0(m, h), dh1(m, h), dh2(m, h);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < h; ++j) {
            dh0(i, j) = dtop(i, j);
            dh1(i, j) = dtop(i, h + j);
            dh2(i, j) = dtop(i, 2 * h + j);
        }
    }
    const nn::Matrix from2 = level2_.backward(cache.level2, dh2);
    for (std::size_t i = 0; i < dh1.size(); ++i) dh1.data()[i] += from2.data()[i];
    const nn::Matrix from1 = level1_.backward(cache.level1, dh1);
    for (std::size_t i = 0; i < dh0.size(); ++i) dh0.data()[i] += from1.data()[i];
    initial_.backward(cache.initial, dh0);
}

std::vector<nn::Param*> QNetwork::params() {
    std::vector<nn::Param*> out;
    initial_.collect(out);
    if (config_.use_attention) {
        level1_.collect(out);
        level2_.collect(out);
    }
    final_.collect(out);
    return out;
}

std::vector<const nn::Param*> QNetwork::params() const {
    std::vector<const nn::Param*> out;
    initial_.collect(out);
    if (config_.use_attention) {
        level1_.collect(out);
        level2_.collect(out);
    }
    final_.collect(out);
    return out;
}

void QNetwork::copy_weights_from(const QNetwork& other) {
    if (!(other.config_ == config_)) throw std::invalid_argument("copying weights between different architectures");
    auto dst = params();
    const auto src = other.params();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
}

VehicleId argmax_feasible(const JointState& state, std::span<const double> q) {
    VehicleId best = -1;
    for (int k = 0; k < state.size(); ++k) {
        if (!state.rows[k].feasible) continue;
        if (best < 0 || q[k] > q[best]) best = k;
    }
    if (best < 0) throw NoFeasibleVehicle("order " + std::to_string(state.order_id) + " has no feasible vehicle");
    return best;
}

VehicleId select_action(const JointState& state, const QNetwork& net, double epsilon, std::mt19937_64& rng) {
    const auto feasible = state.feasible_vehicles();
    if (feasible.empty()) throw NoFeasibleVehicle("order " + std::to_string(state.order_id) + " has no feasible vehicle");
    if (epsilon > 0.0) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < epsilon) {
            std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
            return feasible[pick(rng)];
        }
    }
    return argmax_feasible(state, net.q_values(state));
}

double epsilon_at(const TrainerConfig& config, int episode, int max_episodes) {
    const double span = std::max(1.0, std::round(config.epsilon_decay_fraction * max_episodes));
    const double frac = std::min(1.0, static_cast<double>(episode) / span);
    return config.epsilon_start * (1.0 - frac) + config.epsilon_end * frac;
}

Trainer::Trainer(const QNetworkConfig& net, const TrainerConfig& config)
    : net_config_(net),
      config_(config),
      online_(net),
      target_(net),
      adam_(config.learning_rate),
      rng_(config.seed),
      last_epsilon_(config.epsilon_start) {
    if (config.batch_size <= 0 || config.buffer_capacity == 0 || config.target_period <= 0 ||
        config.steps_per_episode < 0 || config.gamma < 0.0 || config.gamma > 1.0) {
        throw std::invalid_argument("invalid trainer configuration");
    }
}

double Trainer::double_q_target(const Transition& tr) const {
    if (tr.interval_end || !tr.next_state) return tr.reward;
    const JointState& next = *tr.next_state;
    const auto q_online = online_.q_values(next);
    const VehicleId a = argmax_feasible(next, q_online);
    const auto q_target = target_.q_values(next);
    return tr.reward + config_.gamma * q_target[a];
}

void Trainer::remember(std::vector<Transition> transitions) {
    for (auto& t : transitions) {
        buffer_.push_back(std::move(t));
        if (buffer_.size() > config_.buffer_capacity) buffer_.pop_front();
    }
}

std::optional<double> Trainer::train_step() {
    const auto b = static_cast<std::size_t>(config_.batch_size);
    if (buffer_.size() < b) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, buffer_.size() - 1);
    std::vector<std::size_t> batch(b);
    for (auto& i : batch) i = pick(rng_);

    std::vector<double> targets(b);
    for (std::size_t i = 0; i < b; ++i) targets[i] = double_q_target(buffer_[batch[i]]);

    auto params = online_.params();
    nn::zero_grad(params);
    double loss = 0.0;
    QNetwork::Cache cache;
    for (std::size_t i = 0; i < b; ++i) {
        const Transition& tr = buffer_[batch[i]];
        const auto q = online_.q_values(tr.state, &cache);
        const double err = q[tr.action] - targets[i];
        loss += err * err;
        std::vector<double> dq(q.size(), 0.0);
        dq[tr.action] = 2.0 * err / static_cast<double>(b);
        online_.backward(cache, dq);
    }
    adam_.step(params);
    return loss / static_cast<double>(b);
}

void Trainer::sync_target() { target_.copy_weights_from(online_); }

std::vector<EpisodeLog> Trainer::train(const EpisodeSource& source, int max_episodes) {
    std::vector<EpisodeLog> log;
    for (int ep = 0; ep < max_episodes; ++ep) {
        const Instance& instance = source(ep);
        const double eps = epsilon_at(config_, ep, max_episodes);
        last_epsilon_ = eps;
        QPolicy policy(online_, eps, rng_, online_.config().use_attention ? "st-ddgn" : "ddqn");
        EpisodeResult result = run_episode(instance, policy, EpisodeOptions{config_.alpha, true});
        remember(std::move(result.transitions));

        EpisodeLog row;
        row.episode = ep;
        double sum = 0.0;
        int steps = 0;
        for (int s = 0; s < config_.steps_per_episode; ++s) {
            const auto l = train_step();
            if (!l) break;
            sum += *l;
            ++steps;
        }
        if (steps > 0) row.loss = sum / steps;
        ++episodes_done_;
        if (episodes_done_ % config_.target_period == 0) sync_target();

        row.nuv = result.report.nuv;
        row.ttl = result.report.ttl;
        row.tc = result.report.tc;
        row.epsilon = eps;
        log.push_back(row);
    }
    return log;
}

namespace {

nlohmann::json net_to_json(const QNetworkConfig& c) {
    return {{"hidden", c.hidden},
            {"mlp_layers", c.mlp_layers},
            {"heads", c.heads},
            {"head_dim", c.head_dim},
            {"neighbors", c.neighbors},
            {"use_attention", c.use_attention},
            {"use_st_score", c.use_st_score},
            {"distance_scale", c.distance_scale},
            {"horizon", c.horizon},
            {"seed", c.seed}};
}

QNetworkConfig net_from_json(const nlohmann::json& j) {
    QNetworkConfig c;
    c.hidden = j.at("hidden").get<int>();
    c.mlp_layers = j.at("mlp_layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.head_dim = j.at("head_dim").get<int>();
    c.neighbors = j.at("neighbors").get<int>();
    c.use_attention = j.at("use_attention").get<bool>();
    c.use_st_score = j.at("use_st_score").get<bool>();
    c.distance_scale = j.at("distance_scale").get<double>();
    c.horizon = j.at("horizon").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

nlohmann::json trainer_to_json(const TrainerConfig& c) {
    return {{"gamma", c.gamma},
            {"epsilon_start", c.epsilon_start},
            {"epsilon_end", c.epsilon_end},
            {"epsilon_decay_fraction", c.epsilon_decay_fraction},
            {"buffer_capacity", c.buffer_capacity},
            {"batch_size", c.batch_size},
            {"target_period", c.target_period},
            {"steps_per_episode", c.steps_per_episode},
            {"learning_rate", c.learning_rate},
            {"alpha", c.alpha},
            {"seed", c.seed}};
}

TrainerConfig trainer_from_json(const nlohmann::json& j) {
    TrainerConfig c;
    c.gamma = j.at("gamma").get<double>();
    c.epsilon_start = j.at("epsilon_start").get<double>();
    c.epsilon_end = j.at("epsilon_end").get<double>();
    c.epsilon_decay_fraction = j.at("epsilon_decay_fraction").get<double>();
    c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<int>();
    c.target_period = j.at("target_period").get<int>();
    c.steps_per_episode = j.at("steps_per_episode").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
    nn::save_archive(path, online_.params());
    std::ostringstream rng_state;
    rng_state << rng_;
    const nlohmann::json meta{{"network", net_to_json(net_config_)},
                              {"trainer", trainer_to_json(config_)},
                              {"episodes", episodes_done_},
                              {"epsilon", last_epsilon_},
                              {"rng_state", rng_state.str()},
                              {"sha256", checkpoint_hash(online_)}};
    std::ofstream out(sidecar(path));
    if (!out) throw std::runtime_error("cannot write " + sidecar(path).string());
    out << meta.dump(1) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(sidecar(path));
    if (!in) throw std::runtime_error("missing checkpoint metadata " + sidecar(path).string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad checkpoint metadata: " + std::string(e.what()));
    }
    std::optional<LoadedCheckpoint> out;
    std::string expected;
    try {
        out.emplace(LoadedCheckpoint{QNetwork(net_from_json(meta.at("network"))), trainer_from_json(meta.at("trainer")),
                                     meta.at("episodes").get<int>()});
        expected = meta.value("sha256", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad checkpoint metadata: " + std::string(e.what()));
    }
    nn::load_archive(path, out->network.params());
    if (!expected.empty() && checkpoint_hash(out->network) != expected) {
        throw std::runtime_error("checkpoint " + path.string() + " does not match its recorded sha256");
    }
    return std::move(*out);
}

std::string checkpoint_hash(const QNetwork& net) { return nn::sha256_hex(nn::encode_archive(net.params())); }

std::string learning_curve_csv(std::span<const EpisodeLog> log) {
    std::ostringstream out;
    out << "episode,loss,nuv,ttl,tc,epsilon\n";
    char buf[128];
    for (const auto& r : log) {
        out << r.episode << ',';
        if (r.loss) {
            std::snprintf(buf, sizeof(buf), "%.17g", *r.loss);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%d,%.17g,%.17g,%.17g\n", r.nuv, r.ttl, r.tc, r.epsilon);
        out << buf;
    }
    return out.str();
}

}  // namespace dpdp
