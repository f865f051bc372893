#ifndef SMARTBUILDING_REPORT_HPP
#define SMARTBUILDING_REPORT_HPP

#include "smartbuilding/apps.hpp"
#include "smartbuilding/hub.hpp"
#include "smartbuilding/occupancy.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

/// Rendering of savings reports and run artifacts.
namespace sb::report {

enum class Format { Text, Csv };
std::optional<Format> parse_format(std::string_view name);

struct RoomReport {
    apps::SavingsReport savings;
    std::vector<occupancy::AbsenceInterval> absences;
};

/// One re-simulation shared by all rooms. Throws AppError NoData.
std::vector<RoomReport> build_reports(const hub::Hub& hub, const std::vector<RoomId>& rooms, TimeRange range);

/// Text and CSV variants print the same numbers with six decimals.
std::string render(const std::vector<RoomReport>& reports, Format format);

std::string export_report(const hub::Hub& hub, const RoomId& room, TimeRange range, Format format);

inline constexpr std::string_view kReportCsvHeader =
    "record,room,from,to,baseline_kwh,actual_kwh,saved_kwh,setback_hours";
inline constexpr std::string_view kActuationCsvHeader = "timestamp,node_id,room_id,state,source";
inline constexpr std::string_view kAlertCsvHeader = "timestamp,room_id,rule,severity,detail";
inline constexpr std::string_view kPreferenceCsvHeader = "room_id,method,t_pref,votes";

void write_actuations_csv(std::ostream& out, std::span<const ActuationCommand> log);
void write_alerts_csv(std::ostream& out, std::span<const apps::Alert> alerts);
/// Per-room preference estimate over all recorded feedback, rooms in order.
void write_preferences_csv(std::ostream& out, const apps::FeedbackLog& log, const std::vector<RoomId>& rooms);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view s);
std::string fixed6(double v);

}  // namespace sb::report

#endif  // SMARTBUILDING_REPORT_HPP
