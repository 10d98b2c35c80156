#pragma once

#include "flexdur/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flexdur {

struct LobEvent {
    double timestamp{0.0};  // seconds since session open
    double best_bid{0.0};
    double best_ask{0.0};

    [[nodiscard]] double mid() const noexcept { return 0.5 * (best_bid + best_ask); }
    friend bool operator==(const LobEvent&, const LobEvent&) = default;
};

struct DurationSeries {
    EventSeries series;
    double tick_size{0.0};  // 0 when unknown (series read from disk)
    std::string source;
    std::size_t quote_updates{0};
    std::size_t zero_durations_replaced{0};
    /// State in force during each duration, when the file carries a latent_state column.
    std::optional<std::vector<double>> latent_states;
};

/// Replacement for a zero duration produced by duplicated timestamps.
inline constexpr double kMinDuration = 1e-9;

/// One-tick mid-price durations. The first quote anchors the reference mid and
/// the time origin; an event fires whenever |mid - reference| reaches tick_size,
/// after which the reference resets to the current mid.
[[nodiscard]] DurationSeries build_durations(std::span<const LobEvent> events, double tick_size);

/// tau_n / s(T_n) with s the step interpolation of (time, factor) knots sorted by time.
/// Arrival times are rebuilt as cumulative sums from the origin.
[[nodiscard]] DurationSeries deseasonalize(const DurationSeries& series,
                                           std::span<const std::pair<double, double>> factors);

// CSV files have a mandatory header row. Format errors carry the 1-based data row.
[[nodiscard]] std::vector<LobEvent> read_events(const std::filesystem::path& path);
void write_events(std::span<const LobEvent> events, const std::filesystem::path& path);

/// Columns arrival_time,duration[,latent_state]; latent_state is the state in force
/// during the duration (latent_path[0..N-1]).
void write_series(const EventSeries& series, const std::filesystem::path& path);
[[nodiscard]] DurationSeries read_series(const std::filesystem::path& path);

/// Columns time,factor.
[[nodiscard]] std::vector<std::pair<double, double>> read_factors(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

/// Writes to a temporary sibling then renames over the target.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Synthetic quote stream: SE-Gamma event times at the demo parameters, each event
/// reached through two half-tick mid moves, with flickers that revert before the
/// threshold. Starts from a quote at time 0.
[[nodiscard]] std::vector<LobEvent> generate_demo_events(std::size_t count, double tick_size, std::uint64_t seed);

/// SE-Gamma parameters used by generate_demo_events.
[[nodiscard]] ModelSpec demo_model();

}  // namespace flexdur
