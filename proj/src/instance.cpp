#include "dpdp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dpdp {

using nlohmann::json;

double RoadNetwork::euclidean(NodeId a, NodeId b) const {
    return std::hypot(nodes[a].x - nodes[b].x, nodes[a].y - nodes[b].y);
}

int RoadNetwork::factory_index(NodeId n) const {
    if (n < 0 || n >= size() || nodes[n].role != NodeRole::factory) return -1;
    int index = 0;
    for (NodeId i = 0; i < n; ++i) {
        if (nodes[i].role == NodeRole::factory) ++index;
    }
    return index;
}

int RoadNetwork::factory_count() const {
    return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                          [](const Node& n) { return n.role == NodeRole::factory; }));
}

std::vector<NodeId> RoadNetwork::factories() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes) {
        if (n.role == NodeRole::factory) out.push_back(n.id);
    }
    return out;
}

bool RoadNetwork::is_metric(double tolerance) const {
    const int n = size();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                if (dist[i][k] > dist[i][j] + dist[j][k] + tolerance) return false;
            }
        }
    }
    return true;
}

int Instance::interval_of(double minute) const {
    const int idx = static_cast<int>(std::floor(minute / interval_length()));
    return std::clamp(idx, 0, horizon - 1);
}

const DeliveryOrder& Instance::order(OrderId id) const {
    for (const auto& o : orders) {
        if (o.id == id) return o;
    }
    throw InstanceError("unknown order id " + std::to_string(id));
}

namespace {

[[noreturn]] void fail(const std::string& message) { throw InstanceError(message); }

void validate_order(const DeliveryOrder& o, const RoadNetwork& net, const std::string& where) {
    const auto is_factory = [&](NodeId n) {
        return n >= 0 && n < net.size() && net.nodes[n].role == NodeRole::factory;
    };
    if (!is_factory(o.pickup)) fail(where + ".pickup must be a factory node");
    if (!is_factory(o.delivery)) fail(where + ".delivery must be a factory node");
    if (o.pickup == o.delivery) fail(where + ".delivery must differ from pickup");
    if (o.quantity <= 0) fail(where + ".quantity must be positive");
    if (o.created_at < 0) fail(where + ".created_at must be non-negative");
    if (o.latest_delivery <= o.created_at) fail(where + ".latest_delivery must exceed created_at");
    if (o.latest_delivery > kMinutesPerDay) fail(where + ".latest_delivery must not exceed 1440");
}

}  // namespace

void validate(const Instance& inst) {
    const auto& net = inst.network;
    if (net.nodes.empty()) fail("network.nodes must not be empty");
    for (int i = 0; i < net.size(); ++i) {
        if (net.nodes[i].id != i) fail("network.nodes[" + std::to_string(i) + "].id must equal its index");
        if (!std::isfinite(net.nodes[i].x) || !std::isfinite(net.nodes[i].y)) {
            fail("network.nodes[" + std::to_string(i) + "] coordinates must be finite");
        }
    }
    if (static_cast<int>(net.dist.size()) != net.size()) fail("network.dist must have one row per node");
    for (int i = 0; i < net.size(); ++i) {
        if (static_cast<int>(net.dist[i].size()) != net.size()) {
            fail("network.dist[" + std::to_string(i) + "] must have one entry per node");
        }
        for (int j = 0; j < net.size(); ++j) {
            const double d = net.dist[i][j];
            if (!std::isfinite(d) || d < 0.0) {
                fail("network.dist[" + std::to_string(i) + "][" + std::to_string(j) + "] must be finite and non-negative");
            }
        }
        if (net.dist[i][i] != 0.0) fail("network.dist[" + std::to_string(i) + "][" + std::to_string(i) + "] must be 0");
    }
    if (!(net.speed > 0.0)) fail("network.speed must be positive");
    if (!(net.service_time >= 0.0)) fail("network.service_time must be non-negative");

    if (inst.horizon <= 0 || kMinutesPerDay % inst.horizon != 0) fail("horizon must divide 1440");

    std::set<OrderId> ids;
    for (std::size_t i = 0; i < inst.orders.size(); ++i) {
        const auto& o = inst.orders[i];
        validate_order(o, net, "orders[" + std::to_string(i) + "]");
        if (!ids.insert(o.id).second) fail("orders[" + std::to_string(i) + "].id is duplicated");
        if (i > 0 && o.created_at < inst.orders[i - 1].created_at) {
            fail("orders must be sorted by created_at");
        }
    }
    for (std::size_t d = 0; d < inst.history.size(); ++d) {
        for (std::size_t i = 0; i < inst.history[d].size(); ++i) {
            validate_order(inst.history[d][i], net,
                           "history[" + std::to_string(d) + "][" + std::to_string(i) + "]");
        }
    }

    const auto& fleet = inst.fleet;
    if (fleet.vehicles.empty()) fail("fleet.vehicles must not be empty");
    if (fleet.capacity <= 0) fail("fleet.capacity must be positive");
    if (!(fleet.fixed_cost >= 0.0)) fail("fleet.fixed_cost must be non-negative");
    if (!(fleet.unit_cost >= 0.0)) fail("fleet.unit_cost must be non-negative");
    for (int k = 0; k < fleet.size(); ++k) {
        const auto& v = fleet.vehicles[k];
        if (v.id != k) fail("fleet.vehicles[" + std::to_string(k) + "].id must equal its index");
        if (v.depot < 0 || v.depot >= net.size() || !net.is_depot(v.depot)) {
            fail("fleet.vehicles[" + std::to_string(k) + "].depot must be a depot node");
        }
    }
}

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) fail(where + "." + key + " is required");
    return j.at(key);
}

template <class T>
T read(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        fail(where + "." + key + " has the wrong type");
    }
}

int read_int(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number_integer()) fail(where + "." + key + " must be an integer");
    return v.get<int>();
}

json order_to_json(const DeliveryOrder& o) {
    return json{{"id", o.id},
                {"pickup", o.pickup},
                {"delivery", o.delivery},
                {"quantity", o.quantity},
                {"created_at", o.created_at},
                {"latest_delivery", o.latest_delivery}};
}

DeliveryOrder order_from_json(const json& j, const std::string& where) {
    DeliveryOrder o;
    o.id = read_int(j, "id", where);
    o.pickup = read_int(j, "pickup", where);
    o.delivery = read_int(j, "delivery", where);
    o.quantity = read_int(j, "quantity", where);
    o.created_at = read_int(j, "created_at", where);
    o.latest_delivery = read_int(j, "latest_delivery", where);
    return o;
}

std::vector<DeliveryOrder> orders_from_json(const json& arr, const std::string& where) {
    if (!arr.is_array()) fail(where + " must be an array");
    std::vector<DeliveryOrder> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        out.push_back(order_from_json(arr[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

}  // namespace

std::string to_json(const Instance& inst) {
    json nodes = json::array();
    for (const auto& n : inst.network.nodes) {
        nodes.push_back({{"id", n.id},
                         {"role", n.role == NodeRole::depot ? "depot" : "factory"},
                         {"x", n.x},
                         {"y", n.y}});
    }
    json orders = json::array();
    for (const auto& o : inst.orders) orders.push_back(order_to_json(o));
    json history = json::array();
    for (const auto& day : inst.history) {
        json d = json::array();
        for (const auto& o : day) d.push_back(order_to_json(o));
        history.push_back(std::move(d));
    }
    json vehicles = json::array();
    for (const auto& v : inst.fleet.vehicles) vehicles.push_back({{"id", v.id}, {"depot", v.depot}});

    json doc;
    doc["network"] = {{"nodes", nodes},
                      {"dist", inst.network.dist},
                      {"speed", inst.network.speed},
                      {"service_time", inst.network.service_time}};
    doc["orders"] = orders;
    doc["fleet"] = {{"vehicles", vehicles},
                    {"capacity", inst.fleet.capacity},
                    {"fixed_cost", inst.fleet.fixed_cost},
                    {"unit_cost", inst.fleet.unit_cost}};
    doc["horizon"] = inst.horizon;
    doc["history"] = history;
    return doc.dump(1) + "\n";
}

Instance from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("malformed instance document: ") + e.what());
    }
    if (!doc.is_object()) fail("instance document must be an object");

    Instance inst;
    const json& net = require(doc, "network", "instance");
    const json& nodes = require(net, "nodes", "network");
    if (!nodes.is_array()) fail("network.nodes must be an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string where = "network.nodes[" + std::to_string(i) + "]";
        Node n;
        n.id = read_int(nodes[i], "id", where);
        const auto role = read<std::string>(nodes[i], "role", where);
        if (role == "depot") {
            n.role = NodeRole::depot;
        } else if (role == "factory") {
            n.role = NodeRole::factory;
        } else {
            fail(where + ".role must be \"depot\" or \"factory\"");
        }
        n.x = read<double>(nodes[i], "x", where);
        n.y = read<double>(nodes[i], "y", where);
        inst.network.nodes.push_back(n);
    }
    if (net.contains("dist")) {
        inst.network.dist = read<std::vector<std::vector<double>>>(net, "dist", "network");
    } else {
        const int n = inst.network.size();
        inst.network.dist.assign(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                inst.network.dist[i][j] = i == j ? 0.0 : inst.network.euclidean(i, j);
            }
        }
    }
    inst.network.speed = net.contains("speed") ? read<double>(net, "speed", "network") : 1.0;
    inst.network.service_time = net.contains("service_time") ? read<double>(net, "service_time", "network") : 0.0;

    inst.orders = orders_from_json(require(doc, "orders", "instance"), "orders");

    const json& fleet = require(doc, "fleet", "instance");
    const json& vehicles = require(fleet, "vehicles", "fleet");
    if (!vehicles.is_array()) fail("fleet.vehicles must be an array");
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
        const std::string where = "fleet.vehicles[" + std::to_string(i) + "]";
        inst.fleet.vehicles.push_back({read_int(vehicles[i], "id", where), read_int(vehicles[i], "depot", where)});
    }
    inst.fleet.capacity = read_int(fleet, "capacity", "fleet");
    inst.fleet.fixed_cost = fleet.contains("fixed_cost") ? read<double>(fleet, "fixed_cost", "fleet") : 300.0;
    inst.fleet.unit_cost = fleet.contains("unit_cost") ? read<double>(fleet, "unit_cost", "fleet") : 2.0;

    inst.horizon = doc.contains("horizon") ? read_int(doc, "horizon", "instance") : kDefaultHorizon;
    if (doc.contains("history") && !doc.at("history").is_null()) {
        const json& hist = doc.at("history");
        if (!hist.is_array()) fail("history must be an array");
        for (std::size_t d = 0; d < hist.size(); ++d) {
            inst.history.push_back(orders_from_json(hist[d], "history[" + std::to_string(d) + "]"));
        }
    }

    validate(inst);
    return inst;
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open instance file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str());
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write instance file " + path.string());
    out << to_json(instance);
}

namespace {

int sample_hot_minute(std::mt19937_64& rng) {
    // 10:00-12:00 and 14:00-17:00
    std::uniform_int_distribution<int> pick(0, 120 + 180 - 1);
    const int m = pick(rng);
    return m < 120 ? 600 + m : 840 + (m - 120);
}

std::vector<DeliveryOrder> sample_day(std::mt19937_64& rng, const GeneratorOptions& opt, const RoadNetwork& net,
                                      const std::vector<NodeId>& factories, const std::vector<NodeId>& depots,
                                      int n_orders) {
    const int n_hot = std::max(1, static_cast<int>(factories.size()) / 5);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> any_factory(0, static_cast<int>(factories.size()) - 1);
    std::uniform_int_distribution<int> hot_factory(0, n_hot - 1);
    std::uniform_int_distribution<int> any_minute(0, kMinutesPerDay - 1);
    std::uniform_int_distribution<int> quantity(1, opt.max_quantity);
    std::uniform_int_distribution<int> slack(opt.min_slack, opt.max_slack);

    std::vector<DeliveryOrder> day;
    for (int i = 0; i < n_orders; ++i) {
        DeliveryOrder o;
        const int p = coin(rng) < opt.hotspot_skew ? hot_factory(rng) : any_factory(rng);
        int d = any_factory(rng);
        if (factories.size() > 1) {
            while (d == p) d = any_factory(rng);
        }
        o.pickup = factories[p];
        o.delivery = factories[d];
        o.quantity = quantity(rng);
        int created = coin(rng) < opt.hotspot_skew ? sample_hot_minute(rng) : any_minute(rng);

        double reach = 0.0;
        for (NodeId w : depots) reach = std::max(reach, net.travel_time(w, o.pickup));
        const double service = 2.0 * opt.service_time;
        const int need = static_cast<int>(std::ceil(reach + net.travel_time(o.pickup, o.delivery) + service)) + slack(rng);
        if (created + need > kMinutesPerDay) created = std::max(0, kMinutesPerDay - need);
        o.created_at = created;
        o.latest_delivery = std::min(kMinutesPerDay, created + need);
        if (o.latest_delivery <= o.created_at) o.latest_delivery = o.created_at + 1;
        day.push_back(o);
    }
    std::stable_sort(day.begin(), day.end(),
                     [](const DeliveryOrder& a, const DeliveryOrder& b) { return a.created_at < b.created_at; });
    for (int i = 0; i < static_cast<int>(day.size()); ++i) day[i].id = i;
    return day;
}

}  // namespace

Instance generate_instance(const GeneratorOptions& opt) {
    if (opt.n_factories < 2) throw InstanceError("generator needs at least 2 factories");
    if (opt.n_orders < 0 || opt.n_vehicles < 1 || opt.horizon < 1) {
        throw InstanceError("generator counts must be positive");
    }
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> coord(0.0, opt.area_km);

    Instance inst;
    inst.horizon = opt.horizon;
    const int n_depots = opt.n_depots > 0 ? opt.n_depots : 1 + opt.n_vehicles / 10;
    std::vector<NodeId> depots;
    std::vector<NodeId> factories;
    for (int i = 0; i < n_depots + opt.n_factories; ++i) {
        Node n;
        n.id = i;
        n.role = i < n_depots ? NodeRole::depot : NodeRole::factory;
        n.x = coord(rng);
        n.y = coord(rng);
        (n.role == NodeRole::depot ? depots : factories).push_back(i);
        inst.network.nodes.push_back(n);
    }
    const int n = inst.network.size();
    inst.network.dist.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j) inst.network.dist[i][j] = std::ceil(inst.network.euclidean(i, j));
        }
    }
    inst.network.speed = opt.speed;
    inst.network.service_time = opt.service_time;

    inst.fleet.capacity = opt.capacity;
    inst.fleet.fixed_cost = opt.fixed_cost;
    inst.fleet.unit_cost = opt.unit_cost;
    for (int k = 0; k < opt.n_vehicles; ++k) inst.fleet.vehicles.push_back({k, depots[k % n_depots]});

    inst.orders = sample_day(rng, opt, inst.network, factories, depots, opt.n_orders);
    for (int d = 0; d < opt.history_days; ++d) {
        inst.history.push_back(sample_day(rng, opt, inst.network, factories, depots, opt.n_orders));
    }
    validate(inst);
    return inst;
}

Instance generate_instance(std::uint64_t seed, int n_factories, int n_orders, int n_vehicles, int horizon) {
    GeneratorOptions opt;
    opt.seed = seed;
    opt.n_factories = n_factories;
    opt.n_orders = n_orders;
    opt.n_vehicles = n_vehicles;
    opt.horizon = horizon;
    return generate_instance(opt);
}

}  // namespace dpdp
