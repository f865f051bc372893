#include "smartbuilding/report.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace sb::report {

std::optional<Format> parse_format(std::string_view name) {
    if (name == "text") return Format::Text;
    if (name == "csv") return Format::Csv;
    return std::nullopt;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fixed6(double v) {
    if (v == 0.0) v = 0.0;  // no "-0.000000"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s = buf;
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::vector<RoomReport> build_reports(const hub::Hub& hub, const std::vector<RoomId>& rooms, TimeRange range) {
    std::vector<RoomReport> out;
    for (auto& savings : hub::energy_reports(hub, rooms, range)) {
        RoomReport r;
        r.absences = hub.occupancy().absence_intervals(savings.room_id, savings.range);
        r.savings = std::move(savings);
        out.push_back(std::move(r));
    }
    return out;
}

std::string render(const std::vector<RoomReport>& reports, Format format) {
    std::ostringstream os;
    if (format == Format::Csv) {
        os << kReportCsvHeader << '\n';
        for (const auto& r : reports) {
            const auto& s = r.savings;
            os << "savings," << csv_field(s.room_id) << ',' << format_iso8601(s.range.from) << ','
               << format_iso8601(s.range.to) << ',' << fixed6(s.baseline_kwh) << ',' << fixed6(s.actual_kwh) << ','
               << fixed6(s.saved_kwh) << ',' << fixed6(s.setback_hours) << '\n';
            for (const auto& a : r.absences) {
                os << "absence," << csv_field(a.room_id) << ',' << format_iso8601(a.start) << ','
                   << (a.end ? format_iso8601(*a.end) : "") << ",,,,\n";
            }
        }
        return os.str();
    }

    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& s = reports[i].savings;
        if (i) os << '\n';
        os << "room " << s.room_id << '\n'
           << "  range          " << format_iso8601(s.range.from) << " .. " << format_iso8601(s.range.to) << '\n'
           << "  baseline_kwh   " << fixed6(s.baseline_kwh) << '\n'
           << "  actual_kwh     " << fixed6(s.actual_kwh) << '\n'
           << "  saved_kwh      " << fixed6(s.saved_kwh) << '\n'
           << "  setback_hours  " << fixed6(s.setback_hours) << '\n'
           << "  absences       " << reports[i].absences.size() << '\n';
        for (const auto& a : reports[i].absences) {
            os << "    " << format_iso8601(a.start) << " .. " << (a.end ? format_iso8601(*a.end) : "(open)") << '\n';
        }
    }
    return os.str();
}

std::string export_report(const hub::Hub& hub, const RoomId& room, TimeRange range, Format format) {
    return render(build_reports(hub, {room}, range), format);
}

void write_actuations_csv(std::ostream& out, std::span<const ActuationCommand> log) {
    out << kActuationCsvHeader << '\n';
    for (const auto& c : log) {
        out << format_iso8601(c.at) << ',' << csv_field(c.node) << ',' << csv_field(c.room) << ','
            << (c.on ? "on" : "off") << ',' << to_string(c.source) << '\n';
    }
}

void write_alerts_csv(std::ostream& out, std::span<const apps::Alert> alerts) {
    out << kAlertCsvHeader << '\n';
    for (const auto& a : alerts) {
        out << format_iso8601(a.at) << ',' << csv_field(a.room_id) << ',' << apps::to_string(a.rule) << ','
            << apps::to_string(a.severity) << ',' << csv_field(a.detail) << '\n';
    }
}

void write_preferences_csv(std::ostream& out, const apps::FeedbackLog& log, const std::vector<RoomId>& rooms) {
    out << kPreferenceCsvHeader << '\n';
    for (const auto& room : rooms) {
        const auto votes = log.for_room(room);
        const auto pref = apps::estimate_preference(votes);
        out << csv_field(room) << ',' << apps::to_string(pref.method) << ','
            << (pref.t_pref ? fixed6(*pref.t_pref) : "") << ',' << pref.votes << '\n';
    }
}

}  // namespace sb::report
