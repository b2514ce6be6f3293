#include "itimap/common.hpp"

#include <cstdio>

namespace itimap {

namespace {
constexpr std::array<std::string_view, kTechnologyCount> kTechNames = {
    "Wlan11b", "Wlan11g", "Wlan11n", "Bt802151", "Ble", "Zigbee802154",
};
}

std::string_view to_string(Technology tech) {
    return kTechNames[static_cast<size_t>(tech)];
}

std::optional<Technology> technology_from_string(std::string_view name) {
    for (size_t i = 0; i < kTechNames.size(); ++i) {
        if (kTechNames[i] == name) return static_cast<Technology>(i);
    }
    return std::nullopt;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace itimap
