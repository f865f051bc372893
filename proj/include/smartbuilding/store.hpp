#ifndef SMARTBUILDING_STORE_HPP
#define SMARTBUILDING_STORE_HPP

#include "smartbuilding/common.hpp"
#include "smartbuilding/reading.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

/// Append-only time-series store with a fixed CSV surface.
namespace sb::store {

inline constexpr std::string_view kCsvHeader = "timestamp,node_id,sensor,value,unit";

enum class StoreErrc { OutOfOrder, NonFinite, InvalidReading, InvalidQuery, SinkError, BadHeader, BadRow };
std::string_view to_string(StoreErrc code);

/// Store failure. For BadRow, line() is the 1-based file line (header = 1).
class StoreError : public Error<StoreErrc> {
public:
    StoreError(StoreErrc code, const std::string& detail, int line = 0)
        : Error<StoreErrc>(code, detail), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

struct SeriesKey {
    NodeId node;
    SensorKind kind = SensorKind::Temperature;
    auto operator<=>(const SeriesKey&) const = default;
};

struct Point {
    Timestamp at;
    double value = 0.0;
    bool operator==(const Point&) const = default;
};

struct Series {
    SeriesKey key;
    std::vector<Point> points;
    bool operator==(const Series&) const = default;
};

struct RangeQuery {
    Timestamp from = Timestamp::min();
    Timestamp to = Timestamp::max();
    std::optional<std::set<NodeId>> nodes;
    std::optional<std::set<SensorKind>> kinds;

    static RangeQuery everything() { return {}; }
    bool matches(const Reading& r) const;
};

enum class Aggregation { Mean, Min, Max, Last };
std::optional<Aggregation> parse_aggregation(std::string_view name);

/// One point per non-empty window, stamped at the window start. Windows are
/// aligned to multiples of `window` since the Unix epoch.
Series downsample(const Series& s, Duration window, Aggregation agg);

/// Fixed-point with six fractional digits, trailing zeros and a bare
/// trailing dot removed, negative zero printed as `0`.
std::string format_value(double v);

/// One CSV row without the trailing newline.
std::string format_csv_row(const Reading& r);

/// Appends are serialized; queries take a shared lock and observe a
/// consistent prefix of the log.
class Store {
public:
    /// Offset of the appended reading; offsets are dense from 0.
    std::uint64_t append(const Reading& r);

    /// Matching readings ordered by (timestamp, node, kind), ties by offset.
    std::vector<Reading> query_range(const RangeQuery& q) const;

    /// Points of one key inside [from, to).
    Series series(const SeriesKey& key, Timestamp from = Timestamp::min(), Timestamp to = Timestamp::max()) const;
    std::vector<SeriesKey> keys() const;

    /// Header plus one row per matching reading; returns the row count.
    std::size_t export_csv(const RangeQuery& q, std::ostream& sink) const;

    /// Validates every row first, then appends them in file order; nothing
    /// is appended when any row is rejected.
    std::size_t import_csv(std::istream& source);

    std::size_t size() const;

private:
    static void check(const Reading& r);

    mutable std::shared_mutex mutex_;
    std::vector<Reading> log_;
    std::map<SeriesKey, std::vector<std::size_t>> index_;
};

}  // namespace sb::store

#endif  // SMARTBUILDING_STORE_HPP
