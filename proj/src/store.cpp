#include "smartbuilding/store.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <tuple>

namespace sb::store {

std::string_view to_string(StoreErrc code) {
    static constexpr std::array<std::string_view, 7> names = {
        "OutOfOrder", "NonFinite", "InvalidReading", "InvalidQuery", "SinkError", "BadHeader", "BadRow"};
    return names[static_cast<std::size_t>(code)];
}

bool RangeQuery::matches(const Reading& r) const {
    if (r.at < from || r.at >= to) return false;
    if (nodes && !nodes->contains(r.node)) return false;
    if (kinds && !kinds->contains(r.kind)) return false;
    return true;
}

std::optional<Aggregation> parse_aggregation(std::string_view name) {
    if (name == "mean") return Aggregation::Mean;
    if (name == "min") return Aggregation::Min;
    if (name == "max") return Aggregation::Max;
    if (name == "last") return Aggregation::Last;
    return std::nullopt;
}

Series downsample(const Series& s, Duration window, Aggregation agg) {
    if (window <= Duration::zero()) throw StoreError(StoreErrc::InvalidQuery, "window must be positive");
    Series out{s.key, {}};
    const auto w = window.count();
    auto bucket_of = [w](Timestamp t) {
        const auto ms = to_millis(t);
        auto q = ms / w;
        if (ms % w != 0 && ms < 0) --q;
        return q * w;
    };

    std::size_t i = 0;
    while (i < s.points.size()) {
        const auto bucket = bucket_of(s.points[i].at);
        double sum = 0.0;
        double lo = s.points[i].value;
        double hi = lo;
        double last = lo;
        std::size_t n = 0;
        for (; i < s.points.size() && bucket_of(s.points[i].at) == bucket; ++i, ++n) {
            const double v = s.points[i].value;
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            last = v;
        }
        double value = 0.0;
        switch (agg) {
            case Aggregation::Mean: value = sum / static_cast<double>(n); break;
            case Aggregation::Min: value = lo; break;
            case Aggregation::Max: value = hi; break;
            case Aggregation::Last: value = last; break;
        }
        out.points.push_back(Point{from_millis(bucket), value});
    }
    return out;
}

std::string format_value(double v) {
    std::array<char, 512> buf{};
    const int n = std::snprintf(buf.data(), buf.size(), "%.6f", v);
    std::string s(buf.data(), static_cast<std::size_t>(n));
    if (const auto dot = s.find('.'); dot != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

std::string format_csv_row(const Reading& r) {
    std::string row = format_iso8601(r.at);
    row += ',';
    row += r.node;
    row += ',';
    row += to_string(r.kind);
    row += ',';
    row += format_value(r.value);
    row += ',';
    row += to_string(r.unit);
    return row;
}

void Store::check(const Reading& r) {
    if (!std::isfinite(r.value)) throw StoreError(StoreErrc::NonFinite, r.node);
    if (!is_valid(r)) throw StoreError(StoreErrc::InvalidReading, r.node + ": unit does not match kind");
    if (r.node.empty() || r.node.find_first_of(",\n\r") != std::string::npos) {
        throw StoreError(StoreErrc::InvalidReading, "node id '" + r.node + "' is not CSV-safe");
    }
}

std::uint64_t Store::append(const Reading& r) {
    check(r);
    std::unique_lock lock(mutex_);
    auto& idx = index_[SeriesKey{r.node, r.kind}];
    if (!idx.empty() && r.at < log_[idx.back()].at) {
        throw StoreError(StoreErrc::OutOfOrder,
                         r.node + "/" + std::string(to_string(r.kind)) + " at " + format_iso8601(r.at));
    }
    const auto offset = log_.size();
    log_.push_back(r);
    idx.push_back(offset);
    return offset;
}

std::vector<Reading> Store::query_range(const RangeQuery& q) const {
    std::shared_lock lock(mutex_);
    std::vector<std::size_t> hits;
    if (q.from < q.to) {
        for (const auto& [key, idx] : index_) {
            if (q.nodes && !q.nodes->contains(key.node)) continue;
            if (q.kinds && !q.kinds->contains(key.kind)) continue;
            auto first = std::lower_bound(idx.begin(), idx.end(), q.from,
                                          [&](std::size_t i, Timestamp t) { return log_[i].at < t; });
            for (auto it = first; it != idx.end() && log_[*it].at < q.to; ++it) hits.push_back(*it);
        }
    }
    std::sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = log_[a];
        const auto& rb = log_[b];
        return std::tie(ra.at, ra.node, ra.kind, a) < std::tie(rb.at, rb.node, rb.kind, b);
    });
    std::vector<Reading> out;
    out.reserve(hits.size());
    for (auto i : hits) out.push_back(log_[i]);
    return out;
}

Series Store::series(const SeriesKey& key, Timestamp from, Timestamp to) const {
    std::shared_lock lock(mutex_);
    Series s{key, {}};
    auto it = index_.find(key);
    if (it == index_.end()) return s;
    for (auto i : it->second) {
        const auto& r = log_[i];
        if (r.at >= from && r.at < to) s.points.push_back(Point{r.at, r.value});
    }
    return s;
}

std::vector<SeriesKey> Store::keys() const {
    std::shared_lock lock(mutex_);
    std::vector<SeriesKey> out;
    for (const auto& [k, _] : index_) out.push_back(k);
    return out;
}

std::size_t Store::size() const {
    std::shared_lock lock(mutex_);
    return log_.size();
}

std::size_t Store::export_csv(const RangeQuery& q, std::ostream& sink) const {
    const auto rows = query_range(q);
    std::string text(kCsvHeader);
    text += '\n';
    for (const auto& r : rows) {
        text += format_csv_row(r);
        text += '\n';
    }
    sink.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!sink) throw StoreError(StoreErrc::SinkError, "write failed");
    return rows.size();
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::optional<Reading> parse_row(std::string_view line, std::string& why) {
    const auto fields = split_fields(line);
    if (fields.size() != 5) {
        why = "expected 5 fields, got " + std::to_string(fields.size());
        return std::nullopt;
    }
    Reading r;
    const auto at = parse_iso8601(fields[0]);
    if (!at) {
        why = "bad timestamp";
        return std::nullopt;
    }
    r.at = *at;
    r.node = std::string(fields[1]);
    if (r.node.empty()) {
        why = "empty node_id";
        return std::nullopt;
    }
    const auto kind = parse_sensor_kind(fields[2]);
    if (!kind) {
        why = "unknown sensor";
        return std::nullopt;
    }
    r.kind = *kind;
    const auto value = fields[3];
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), r.value);
    if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(r.value)) {
        why = "bad value";
        return std::nullopt;
    }
    const auto unit = parse_unit(fields[4]);
    if (!unit || unit_for(r.kind) != unit) {
        why = "unit does not match sensor";
        return std::nullopt;
    }
    r.unit = *unit;
    return r;
}

}  // namespace

std::size_t Store::import_csv(std::istream& source) {
    std::string line;
    if (!std::getline(source, line) || line != kCsvHeader) {
        throw StoreError(StoreErrc::BadHeader, "expected '" + std::string(kCsvHeader) + "'", 1);
    }

    std::unique_lock lock(mutex_);
    std::map<SeriesKey, Timestamp> last;
    for (const auto& [key, idx] : index_) last.emplace(key, log_[idx.back()].at);

    std::vector<Reading> rows;
    int line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        std::string why;
        auto r = parse_row(line, why);
        if (!r) throw StoreError(StoreErrc::BadRow, "line " + std::to_string(line_no) + ": " + why, line_no);
        const SeriesKey key{r->node, r->kind};
        auto [it, fresh] = last.try_emplace(key, r->at);
        if (!fresh) {
            if (r->at < it->second) {
                throw StoreError(StoreErrc::BadRow, "line " + std::to_string(line_no) + ": out of order", line_no);
            }
            it->second = r->at;
        }
        rows.push_back(std::move(*r));
    }

    for (auto& r : rows) {
        auto& idx = index_[SeriesKey{r.node, r.kind}];
        idx.push_back(log_.size());
        log_.push_back(std::move(r));
    }
    return rows.size();
}

}  // namespace sb::store
