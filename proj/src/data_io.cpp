#include "flexdur/data_io.hpp"

#include "flexdur/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace flexdur {

namespace {

constexpr double kTickTolerance = 1e-9;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(std::string_view text, std::size_t row, std::string_view column) {
    double value = 0.0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw FormatError("cannot parse " + std::string(column) + " value '" + std::string(text) + "'", row);
    }
    return value;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("missing header in " + path.string());
    std::string_view head = line;
    if (head.size() >= 3 && head.substr(0, 3) == "\xEF\xBB\xBF") head.remove_prefix(3);
    for (auto name : split(head)) table.header.emplace_back(name);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split(line);
        if (fields.size() != table.header.size()) {
            throw FormatError("expected " + std::to_string(table.header.size()) + " fields, found " +
                                  std::to_string(fields.size()),
                              row);
        }
        std::vector<double> values(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) values[i] = parse_number(fields[i], row, table.header[i]);
        table.rows.push_back(std::move(values));
    }
    return table;
}

void require_header(const CsvTable& table, const std::vector<std::string>& expected, const std::filesystem::path& path) {
    if (table.header != expected) {
        std::string names;
        for (const auto& n : expected) names += (names.empty() ? "" : ",") + n;
        throw FormatError("expected header " + names + " in " + path.string());
    }
}

}  // namespace

std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ptr);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write " + path.string());
        out << content;
        out.flush();
        if (!out) throw FormatError("cannot write " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw FormatError("cannot rename onto " + path.string() + ": " + ec.message());
    }
}

DurationSeries build_durations(std::span<const LobEvent> events, double tick_size) {
    if (!(tick_size > 0.0) || !std::isfinite(tick_size)) throw DomainError("tick size must be positive");
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i > 0 && events[i].timestamp < events[i - 1].timestamp) {
            throw FormatError("timestamps are not ordered", i + 1);
        }
    }
    if (events.empty()) throw DomainError("no quote updates");

    const double threshold = tick_size * (1.0 - kTickTolerance);
    std::vector<double> times{events.front().timestamp};
    double reference = events.front().mid();
    for (std::size_t i = 1; i < events.size(); ++i) {
        const double mid = events[i].mid();
        if (std::abs(mid - reference) >= threshold) {
            times.push_back(events[i].timestamp);
            reference = mid;
        }
    }
    if (times.size() < 2) throw DomainError("fewer than two one-tick mid-price events");

    DurationSeries out;
    out.tick_size = tick_size;
    out.quote_updates = events.size();
    out.series.origin = times.front();
    out.series.arrival_times.assign(times.begin() + 1, times.end());
    out.series.durations.resize(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
        double tau = times[i] - times[i - 1];
        if (!(tau > 0.0)) {
            tau = kMinDuration;
            ++out.zero_durations_replaced;
        }
        out.series.durations[i - 1] = tau;
    }
    return out;
}

DurationSeries deseasonalize(const DurationSeries& series, std::span<const std::pair<double, double>> factors) {
    if (factors.empty()) throw DomainError("empty seasonal factor table");
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (!(factors[i].second > 0.0) || !std::isfinite(factors[i].second)) {
            throw DomainError("seasonal factors must be positive");
        }
        if (i > 0 && !(factors[i].first > factors[i - 1].first)) {
            throw DomainError("seasonal factor times must be strictly increasing");
        }
    }
    const auto& times = series.series.arrival_times;
    std::vector<double> scaled(series.series.durations.size());
    for (std::size_t n = 0; n < scaled.size(); ++n) {
        const double t = times[n];
        auto it = std::upper_bound(factors.begin(), factors.end(), t,
                                   [](double value, const auto& knot) { return value < knot.first; });
        if (it == factors.begin()) {
            throw DomainError("seasonal factors do not cover event time " + format_double(t));
        }
        scaled[n] = series.series.durations[n] / std::prev(it)->second;
    }
    DurationSeries out = series;
    out.series = EventSeries::from_durations(std::move(scaled), series.series.origin);
    out.latent_states.reset();
    return out;
}

std::vector<LobEvent> read_events(const std::filesystem::path& path) {
    const auto table = read_csv(path);
    require_header(table, {"timestamp", "best_bid", "best_ask"}, path);
    std::vector<LobEvent> events;
    events.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        if (r[0] < 0.0) throw FormatError("negative timestamp", i + 1);
        if (!(r[1] > 0.0) || !(r[2] > 0.0)) throw FormatError("prices must be positive", i + 1);
        if (r[2] < r[1]) throw FormatError("best_ask below best_bid", i + 1);
        if (!events.empty() && r[0] < events.back().timestamp) throw FormatError("timestamps are not ordered", i + 1);
        events.push_back({r[0], r[1], r[2]});
    }
    return events;
}

void write_events(std::span<const LobEvent> events, const std::filesystem::path& path) {
    std::string text = "timestamp,best_bid,best_ask\n";
    for (const auto& e : events) {
        text += format_double(e.timestamp) + ',' + format_double(e.best_bid) + ',' + format_double(e.best_ask) + '\n';
    }
    write_text_atomic(path, text);
}

void write_series(const EventSeries& series, const std::filesystem::path& path) {
    const bool latent = series.latent_path.has_value();
    std::string text = latent ? "arrival_time,duration,latent_state\n" : "arrival_time,duration\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        text += format_double(series.arrival_times[i]) + ',' + format_double(series.durations[i]);
        if (latent) text += ',' + format_double((*series.latent_path)[i]);
        text += '\n';
    }
    write_text_atomic(path, text);
}

DurationSeries read_series(const std::filesystem::path& path) {
    const auto table = read_csv(path);
    const bool latent = table.header.size() == 3;
    if (latent) {
        require_header(table, {"arrival_time", "duration", "latent_state"}, path);
    } else {
        require_header(table, {"arrival_time", "duration"}, path);
    }
    DurationSeries out;
    out.source = path.string();
    auto& s = out.series;
    s.durations.reserve(table.rows.size());
    s.arrival_times.reserve(table.rows.size());
    if (latent) out.latent_states.emplace();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        if (!(r[1] > 0.0)) throw FormatError("duration must be positive", i + 1);
        if (i > 0 && r[0] < s.arrival_times.back()) throw FormatError("arrival times are not ordered", i + 1);
        s.arrival_times.push_back(r[0]);
        s.durations.push_back(r[1]);
        if (latent) {
            if (!(r[2] > 0.0)) throw FormatError("latent_state must be positive", i + 1);
            out.latent_states->push_back(r[2]);
        }
    }
    if (!s.durations.empty()) s.origin = s.arrival_times.front() - s.durations.front();
    return out;
}

std::vector<std::pair<double, double>> read_factors(const std::filesystem::path& path) {
    const auto table = read_csv(path);
    require_header(table, {"time", "factor"}, path);
    std::vector<std::pair<double, double>> out;
    for (const auto& r : table.rows) out.emplace_back(r[0], r[1]);
    return out;
}

ModelSpec demo_model() {
    return ModelSpec(SeParams{0.2712, 0.0939, 0.1068}, ResidualSpec::gamma(0.3511));
}

std::vector<LobEvent> generate_demo_events(std::size_t count, double tick_size, std::uint64_t seed) {
    if (count < 2) throw DomainError("gen-demo needs at least 2 events");
    if (!(tick_size > 0.0)) throw DomainError("tick size must be positive");
    SimulationOptions options;
    options.seed = seed;
    options.burn_in = 1000;
    const auto series = simulate(demo_model(), count, options);

    Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<int> flicker_count(0, 2);

    // Quotes kept as integer tick counts; one-tick spread.
    long bid = 10000;
    long ask = 10001;
    auto quote = [&](double t) { return LobEvent{t, static_cast<double>(bid) * tick_size, static_cast<double>(ask) * tick_size}; };

    std::vector<LobEvent> events{quote(0.0)};
    double previous = 0.0;
    std::vector<double> inner;
    for (std::size_t k = 0; k < count; ++k) {
        const double now = series.arrival_times[k] - series.origin;
        const int flickers = flicker_count(rng);
        inner.resize(static_cast<std::size_t>(2 * flickers + 1));
        for (double& t : inner) t = previous + unit(rng) * (now - previous);
        std::sort(inner.begin(), inner.end());
        std::size_t j = 0;
        for (int f = 0; f < flickers; ++f) {
            const bool up = coin(rng);
            if (up) ++ask; else --bid;
            events.push_back(quote(inner[j++]));
            if (up) --ask; else ++bid;
            events.push_back(quote(inner[j++]));
        }
        const bool up = coin(rng);
        if (up) ++ask; else --bid;
        events.push_back(quote(inner[j]));
        if (up) ++bid; else --ask;
        events.push_back(quote(now));
        previous = now;
    }
    return events;
}

}  // namespace flexdur
