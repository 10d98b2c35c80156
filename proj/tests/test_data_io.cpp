#include "flexdur/data_io.hpp"
#include "flexdur/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

using namespace flexdur;
namespace fs = std::filesystem;

namespace {

constexpr double kTick = 0.01;

LobEvent quote(double t, long bid_ticks, long ask_ticks) {
    return {t, bid_ticks * kTick, ask_ticks * kTick};
}

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("flexdur_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                   ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    [[nodiscard]] fs::path file(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

// Random walk of one-tick quote changes on either side, spread kept at one or two ticks.
std::vector<LobEvent> random_quotes(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> side(0, 3);
    std::exponential_distribution<double> gap(2.0);
    long bid = 10000;
    long ask = 10001;
    double t = 0.0;
    std::vector<LobEvent> out{quote(t, bid, ask)};
    while (out.size() < n) {
        t += gap(rng);
        switch (side(rng)) {
            case 0: if (ask - bid < 2) ++ask; else --ask; break;
            case 1: if (ask - bid < 2) --bid; else ++bid; break;
            case 2: ++bid; ++ask; break;
            default: --bid; --ask; break;
        }
        out.push_back(quote(t, bid, ask));
    }
    return out;
}

}  // namespace

TEST(BuildDurations, UpDownUpUpIsOneEvent) {
    const std::vector<LobEvent> events{
        quote(0.0, 10000, 10001),
        quote(1.0, 10000, 10002),  // +1/2
        quote(2.0, 10000, 10001),  // -1/2
        quote(3.0, 10000, 10002),  // +1/2
        quote(4.5, 10001, 10002),  // +1/2, one full tick above the reference
    };
    const auto out = build_durations(events, kTick);
    ASSERT_EQ(out.series.size(), 1u);
    EXPECT_DOUBLE_EQ(out.series.durations[0], 4.5);
    EXPECT_DOUBLE_EQ(out.series.arrival_times[0], 4.5);
    EXPECT_EQ(out.quote_updates, 5u);
}

TEST(BuildDurations, ConstantMidIsInsufficient) {
    const std::vector<LobEvent> events{quote(0.0, 100, 101), quote(1.0, 99, 102), quote(2.0, 100, 101)};
    EXPECT_THROW((void)build_durations(events, kTick), DomainError);
}

TEST(BuildDurations, MultiTickJumpIsOneEventAndResetsReference) {
    const std::vector<LobEvent> events{
        quote(0.0, 100, 101),
        quote(1.0, 102, 103),  // two ticks at once
        quote(2.0, 101, 103),  // half tick down from the new reference
        quote(3.0, 101, 102),  // one tick down from the new reference
    };
    const auto out = build_durations(events, kTick);
    ASSERT_EQ(out.series.size(), 2u);
    EXPECT_DOUBLE_EQ(out.series.durations[0], 1.0);
    EXPECT_DOUBLE_EQ(out.series.durations[1], 2.0);
}

TEST(BuildDurations, UnorderedTimestampsNameTheRow) {
    const std::vector<LobEvent> events{quote(0.0, 100, 101), quote(2.0, 101, 102), quote(1.0, 102, 103)};
    try {
        (void)build_durations(events, kTick);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.row(), 3u);
    }
}

TEST(BuildDurations, SimultaneousEventsGetMinimumDuration) {
    const std::vector<LobEvent> events{quote(0.0, 100, 101), quote(1.0, 101, 102), quote(1.0, 102, 103)};
    const auto out = build_durations(events, kTick);
    ASSERT_EQ(out.series.size(), 2u);
    EXPECT_EQ(out.series.durations[1], kMinDuration);
    EXPECT_EQ(out.zero_durations_replaced, 1u);
}

TEST(BuildDurations, ShiftInvariance) {
    const auto events = random_quotes(1000, 4);
    const auto base = build_durations(events, kTick);
    for (double shift : {0.37, 5.0, -12.5}) {
        auto moved = events;
        for (auto& e : moved) {
            e.best_bid += shift;
            e.best_ask += shift;
        }
        const auto out = build_durations(moved, kTick);
        ASSERT_EQ(out.series.durations.size(), base.series.durations.size()) << shift;
        for (std::size_t i = 0; i < out.series.size(); ++i) {
            EXPECT_EQ(out.series.durations[i], base.series.durations[i]);
        }
    }
}

TEST(BuildDurations, FixedPointOnEmittedEvents) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto events = random_quotes(1000, seed);
        const auto first = build_durations(events, kTick);
        ASSERT_LE(first.series.size() + 1, events.size());
        for (double d : first.series.durations) EXPECT_GT(d, 0.0);

        // Keep only the anchor and the quotes at which an event fired.
        std::vector<LobEvent> kept{events.front()};
        std::size_t j = 0;
        for (std::size_t i = 1; i < events.size() && j < first.series.size(); ++i) {
            if (events[i].timestamp == first.series.arrival_times[j]) {
                kept.push_back(events[i]);
                ++j;
            }
        }
        ASSERT_EQ(kept.size(), first.series.size() + 1);
        const auto second = build_durations(kept, kTick);
        EXPECT_EQ(second.series.durations, first.series.durations);
        EXPECT_EQ(second.series.arrival_times, first.series.arrival_times);
    }
}

TEST(Deseasonalize, IdentityAndConstantFactor) {
    const auto events = random_quotes(300, 9);
    const auto series = build_durations(events, kTick);
    const std::vector<std::pair<double, double>> ones{{0.0, 1.0}};
    const auto same = deseasonalize(series, ones);
    EXPECT_EQ(same.series.durations, series.series.durations);
    const std::vector<std::pair<double, double>> twos{{0.0, 2.0}};
    const auto half = deseasonalize(series, twos);
    double t = series.series.origin;
    for (std::size_t i = 0; i < series.series.size(); ++i) {
        EXPECT_DOUBLE_EQ(half.series.durations[i], 0.5 * series.series.durations[i]);
        t += half.series.durations[i];
        EXPECT_NEAR(half.series.arrival_times[i], t, 1e-9);
    }
}

TEST(Deseasonalize, TwoRegimeFixture) {
    DurationSeries series;
    series.series = EventSeries::from_durations({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, 0.0);
    // Arrivals 1, 3, 6, 10, 15, 21; factor 2 before t = 6, then 4.
    const std::vector<std::pair<double, double>> factors{{0.0, 2.0}, {6.0, 4.0}};
    const auto out = deseasonalize(series, factors);
    const std::vector<double> expected{0.5, 1.0, 0.75, 1.0, 1.25, 1.5};
    ASSERT_EQ(out.series.durations.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_DOUBLE_EQ(out.series.durations[i], expected[i]);
}

TEST(Deseasonalize, RejectsUncoveredTimesAndBadTables) {
    DurationSeries series;
    series.series = EventSeries::from_durations({1.0, 2.0}, 0.0);
    const std::vector<std::pair<double, double>> late{{2.0, 1.0}};
    EXPECT_THROW((void)deseasonalize(series, late), DomainError);
    const std::vector<std::pair<double, double>> unsorted{{0.0, 1.0}, {0.0, 2.0}};
    EXPECT_THROW((void)deseasonalize(series, unsorted), DomainError);
    const std::vector<std::pair<double, double>> negative{{0.0, -1.0}};
    EXPECT_THROW((void)deseasonalize(series, negative), DomainError);
}

TEST(Csv, SeriesRoundTrip) {
    TempDir dir;
    auto series = EventSeries::from_durations({3.08e-7, 0.1, 12.75, 1.0 / 3.0}, 100.0);
    series.latent_path = std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9};
    write_series(series, dir.file("s.csv"));
    const auto back = read_series(dir.file("s.csv"));
    EXPECT_EQ(back.series.durations, series.durations);
    EXPECT_EQ(back.series.arrival_times, series.arrival_times);
    ASSERT_TRUE(back.latent_states.has_value());
    EXPECT_EQ(*back.latent_states, (std::vector<double>{0.5, 0.6, 0.7, 0.8}));
    EXPECT_EQ(back.series.durations[0], 3.08e-7);
}

TEST(Csv, EventsRoundTrip) {
    TempDir dir;
    const auto events = random_quotes(200, 12);
    write_events(events, dir.file("e.csv"));
    EXPECT_EQ(read_events(dir.file("e.csv")), events);
}

TEST(Csv, FormatErrors) {
    TempDir dir;
    write_file(dir.file("a.csv"), "timestamp,best_bid,best_ask\n0,100,101\n1,101,100.5\n");
    try {
        (void)read_events(dir.file("a.csv"));
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.row(), 2u);
    }
    write_file(dir.file("b.csv"), "0,100,101\n");
    EXPECT_THROW((void)read_events(dir.file("b.csv")), FormatError);
    write_file(dir.file("c.csv"), "timestamp,best_bid,best_ask\n0,100\n");
    EXPECT_THROW((void)read_events(dir.file("c.csv")), FormatError);
    write_file(dir.file("d.csv"), "arrival_time,duration\n1,abc\n");
    EXPECT_THROW((void)read_series(dir.file("d.csv")), FormatError);
    EXPECT_THROW((void)read_series(dir.file("missing.csv")), FormatError);
}

TEST(DemoEvents, DeterministicAndWellFormed) {
    const auto a = generate_demo_events(2000, kTick, 5);
    const auto b = generate_demo_events(2000, kTick, 5);
    EXPECT_EQ(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_GE(a[i].best_ask, a[i].best_bid);
        if (i > 0) EXPECT_GE(a[i].timestamp, a[i - 1].timestamp);
    }
    const auto built = build_durations(a, kTick);
    EXPECT_EQ(built.series.size(), 2000u);
}
