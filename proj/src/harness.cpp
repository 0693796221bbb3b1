#include "dpdp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace dpdp {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

Stat summarize(const std::vector<double>& v) {
    Stat s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    return s;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace

MetricSummary aggregate_metrics(std::span<const EpisodeReport> reports) {
    if (reports.empty()) throw std::invalid_argument("no reports to aggregate");
    std::vector<double> nuv, ttl, tc;
    for (const auto& r : reports) {
        nuv.push_back(r.nuv);
        ttl.push_back(r.ttl);
        tc.push_back(r.tc);
    }
    return {reports.size(), summarize(nuv), summarize(ttl), summarize(tc)};
}

std::string results_csv(std::vector<ResultRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.policy, a.instance, a.repetition) < std::tie(b.policy, b.instance, b.repetition);
    });
    std::ostringstream out;
    out << "instance,policy,repetition,nuv,ttl,tc\n";
    for (const auto& r : rows) {
        out << r.instance << ',' << r.policy << ',' << r.repetition << ',' << r.nuv << ',' << num(r.ttl) << ','
            << num(r.tc) << '\n';
    }
    return out.str();
}

std::string compare_csv(std::span<const ResultRow> rows) {
    std::map<std::string, std::vector<const ResultRow*>> by_policy;
    for (const auto& r : rows) by_policy[r.policy].push_back(&r);
    std::ostringstream out;
    out << "policy,runs,nuv_mean,nuv_min,nuv_max,ttl_mean,tc_mean,tc_min,tc_max,tc_half_range\n";
    for (const auto& [policy, group] : by_policy) {
        std::vector<double> nuv, ttl, tc;
        for (const ResultRow* r : group) {
            nuv.push_back(r->nuv);
            ttl.push_back(r->ttl);
            tc.push_back(r->tc);
        }
        const Stat n = summarize(nuv), l = summarize(ttl), c = summarize(tc);
        out << policy << ',' << group.size() << ',' << num(n.mean) << ',' << num(n.min) << ',' << num(n.max) << ','
            << num(l.mean) << ',' << num(c.mean) << ',' << num(c.min) << ',' << num(c.max) << ','
            << num(c.half_range()) << '\n';
    }
    return out.str();
}

void append_metrics_row(const std::filesystem::path& path, int episode, const EpisodeReport& report) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (fresh) out << "episode,nuv,ttl,tc\n";
    out << episode << ',' << report.nuv << ',' << num(report.ttl) << ',' << num(report.tc) << '\n';
}

std::filesystem::path output_root() {
    const char* env = std::getenv("DPDP_OUT");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

void write_config_snapshot(const std::filesystem::path& dir, const nlohmann::json& config) {
    std::filesystem::create_directories(dir);
    write_text(dir / "config.json", config.dump(1) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string heatmap_svg(const StdMatrix& m, const std::string& title) {
    const int cell_w = std::max(2, 720 / std::max(1, m.intervals()));
    const int cell_h = std::max(8, std::min(24, 480 / std::max(1, m.factories())));
    const int left = 60, top = 40;
    const int width = left + cell_w * m.intervals() + 20;
    const int height = top + cell_h * m.factories() + 40;
    double peak = 0.0;
    for (double v : m.values()) peak = std::max(peak, v);

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title)
        << "</text>\n";
    for (int i = 0; i < m.factories(); ++i) {
        out << "<text x=\"4\" y=\"" << top + i * cell_h + cell_h - 2
            << "\" font-family=\"sans-serif\" font-size=\"10\">F" << i << "</text>\n";
        for (int j = 0; j < m.intervals(); ++j) {
            const double v = m.at(i, j);
            const double s = peak > 0.0 ? v / peak : 0.0;
            const int g = static_cast<int>(std::lround(255.0 * (1.0 - s)));
            const int r = static_cast<int>(std::lround(255.0 - 100.0 * s));
            out << "<rect x=\"" << left + j * cell_w << "\" y=\"" << top + i * cell_h << "\" width=\"" << cell_w
                << "\" height=\"" << cell_h << "\" fill=\"rgb(" << r << ',' << g << ',' << g << ")\"><title>F" << i
                << " interval " << j << ": " << fixed(v) << "</title></rect>\n";
        }
    }
    out << "<text x=\"" << left << "\" y=\"" << height - 12
        << "\" font-family=\"sans-serif\" font-size=\"11\">time interval (0 to " << m.intervals() - 1
        << "), peak " << fixed(peak) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string curves_svg(std::span<const Series> series, const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    const int width = 720, height = 420, left = 70, right = 150, top = 40, bottom = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title)
        << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double yv = y0 + (y1 - y0) * t / 4.0;
        const double xv = x0 + (x1 - x0) * t / 4.0;
        out << "<text x=\"4\" y=\"" << fixed(sy(yv) + 4, 1) << "\" font-family=\"sans-serif\" font-size=\"10\">"
            << fixed(yv) << "</text>\n";
        out << "<text x=\"" << fixed(sx(xv) - 10, 1) << "\" y=\"" << height - bottom + 16
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << fixed(xv, 0) << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 - 30 << "\" y=\"" << height - 10
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label) << "</text>\n";
    out << "<text x=\"12\" y=\"" << top + ph / 2 << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 12 "
        << top + ph / 2 << ")\">" << escape(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = palette[k % std::size(palette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            out << fixed(sx(s.x[i]), 1) << ',' << fixed(sy(s.y[i]), 1) << ' ';
        }
        out << "\"/>\n";
        const double ly = top + 14.0 + 16.0 * static_cast<double>(k);
        out << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << width - right + 30
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << width - right + 34 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.name) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

Series read_curve(const std::filesystem::path& csv, const std::string& column) {
    std::istringstream in(read_text(csv));
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(csv.string() + " is empty");
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    const auto header = split(line);
    const auto find = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error(csv.string() + " has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t xi = find("episode"), yi = find(column);
    Series s;
    s.name = csv.stem().string();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (yi >= cells.size() || cells[yi].empty()) continue;
        s.x.push_back(std::stod(cells[xi]));
        s.y.push_back(std::stod(cells[yi]));
    }
    return s;
}

std::vector<double> moving_average(std::span<const double> values, int window) {
    if (window <= 0) throw std::invalid_argument("moving-average window must be positive");
    std::vector<double> out;
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        if (i >= static_cast<std::size_t>(window)) sum -= values[i - window];
        out.push_back(sum / static_cast<double>(std::min<std::size_t>(i + 1, window)));
    }
    return out;
}

}  // namespace dpdp
