#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "itimap/radiometer.hpp"
#include "itimap/scene.hpp"

namespace itimap {

struct DetectorConfig {
    double threshold_dbm = -85.0;  // burst opens at >= threshold
    double hysteresis_db = 3.0;    // burst closes below threshold - hysteresis
    double min_burst_us = 350.0;   // shorter detections are discarded
    double max_burst_us = 5000.0;  // longer ones are split into head + tail
    double sweep_trigger_us = 128.0;
};

struct ObservedBurst {
    int node_id = 0;
    double channel_mhz = 0.0;
    double t_start_us = 0.0;  // sample-aligned
    double duration_us = 0.0;
    std::vector<int8_t> samples;
    std::vector<SweepSample> sweep;
    bool classifiable = true;  // false: truncation tail of an over-long burst

    double t_end_us() const { return t_start_us + duration_us; }
};

// Spectral-feature sentinel when no sweep reading is available: the filter
// floor, i.e. "fully attenuated".
inline constexpr double kSfSentinelDb = 40.0;

struct FeatureVector {
    double duration_us = 0.0;      // f1
    double mean_power_dbm = 0.0;   // f2, linear-domain mean
    double peak_power_dbm = 0.0;   // f3
    double power_std_db = 0.0;     // f4, std of the dB samples
    double crest_db = 0.0;         // f5 = f3 - f2
    double sf_ratio3_db = 0.0;     // f6 = RSSI(0) - RSSI(+3 MHz)
    double sf_ratio8_db = 0.0;     // f7 = RSSI(0) - RSSI(+8 MHz)
    double sf_bw_count = 0.0;      // f8 = sweep offsets within 6 dB of offset 0

    std::array<double, 8> as_array() const {
        return {duration_us, mean_power_dbm, peak_power_dbm, power_std_db,
                crest_db,    sf_ratio3_db,   sf_ratio8_db,   sf_bw_count};
    }
};

inline constexpr std::array<const char*, 8> kFeatureNames = {
    "duration_us", "mean_power_dbm", "peak_power_dbm", "power_std_db",
    "crest_db",    "sf_ratio3_db",   "sf_ratio8_db",   "sf_bw_count"};

struct LabeledBurst {
    FeatureVector features;
    Technology label = Technology::Wlan11g;
};

std::vector<ObservedBurst> detect_bursts(const RssiTrace& trace, const DetectorConfig& cfg);

FeatureVector extract_features(const ObservedBurst& burst);

struct LabelResult {
    std::vector<std::pair<size_t, Technology>> labels;  // index into observed list
    size_t dropped = 0;                                 // bursts with zero ledger overlap
};

// Attributes each observed burst to the ground-truth burst with the largest
// filter-weighted time overlap on the observation channel.
LabelResult label_bursts(const std::vector<ObservedBurst>& observed, const BurstLedger& ledger,
                         double rbw_mhz = 2.0);

void write_dataset_csv(const std::vector<LabeledBurst>& rows, std::ostream& out);
std::vector<LabeledBurst> read_dataset_csv(std::istream& in);

}  // namespace itimap
