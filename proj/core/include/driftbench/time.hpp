#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace driftbench {

/// UTC instant at one-second resolution.
using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

/// SCADA sampling period.
inline constexpr Seconds kScadaStep{600};

/// Parses `YYYY-MM-DDTHH:MM:SSZ` (also accepts a `+00:00` suffix).
/// Throws Error{format} on anything else.
Timestamp parse_rfc3339(std::string_view text);

std::string format_rfc3339(Timestamp t);

inline std::int64_t to_unix(Timestamp t) { return t.time_since_epoch().count(); }
inline Timestamp from_unix(std::int64_t s) { return Timestamp{Seconds{s}}; }

}  // namespace driftbench
