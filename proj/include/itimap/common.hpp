#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace itimap {

// Interference source technologies in the 2.4 GHz band. The numeric order is
// the fixed tie-break order used by every classifier.
enum class Technology : uint8_t {
    Wlan11b = 0,
    Wlan11g = 1,
    Wlan11n = 2,
    Bt802151 = 3,
    Ble = 4,
    Zigbee802154 = 5,
};

inline constexpr int kTechnologyCount = 6;

inline constexpr std::array<Technology, kTechnologyCount> kAllTechnologies = {
    Technology::Wlan11b, Technology::Wlan11g,  Technology::Wlan11n,
    Technology::Bt802151, Technology::Ble,     Technology::Zigbee802154,
};

std::string_view to_string(Technology tech);
std::optional<Technology> technology_from_string(std::string_view name);

struct Position {
    double x = 0.0;
    double y = 0.0;
};

inline double distance_m(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Bad configuration or violated precondition; the CLI maps this to exit 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or empty data encountered at run time; CLI exit 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Locale-independent "%.10g"; used for every double written to CSV so that
// repeated runs are byte-identical.
std::string format_double(double v);

}  // namespace itimap
