#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "itimap/common.hpp"
#include "itimap/rng.hpp"

namespace itimap {

// Observable frequency range of the device class modelled here.
inline constexpr double kBandLowMhz = 2400.0;
inline constexpr double kBandHighMhz = 2485.0;

// Scalar distribution over microsecond quantities.
struct Distribution {
    enum class Kind { Fixed, Uniform, LogUniform, Exponential };
    Kind kind = Kind::Fixed;
    double a = 0.0;  // Fixed: value; Uniform/LogUniform: lo; Exponential: mean
    double b = 0.0;  // Uniform/LogUniform: hi

    double sample(Rng& rng) const;
    void validate(const std::string& what) const;  // ConfigError on non-positive params
};

// Fixed-center occupancy (one entry) or a per-burst hop set.
struct BandModel {
    double bandwidth_mhz = 0.0;
    std::vector<double> centers_mhz;

    bool hopping() const { return centers_mhz.size() > 1; }
};

struct TrafficModel {
    // Slotted mode (slot_us > 0): a burst of air_time_us at the head of each
    // slot, each slot independently active with probability `activity`.
    double slot_us = 0.0;
    double air_time_us = 0.0;
    double activity = 1.0;

    // Free-running mode: burst duration plus idle gap to the next burst.
    Distribution duration_us;
    Distribution gap_us;
    double min_gap_us = 0.0;

    // Emission window; clamped to the scenario horizon.
    double active_from_us = 0.0;
    std::optional<double> active_until_us;

    bool slotted() const { return slot_us > 0.0; }
};

struct EmitterSpec {
    int id = 0;
    Technology tech = Technology::Wlan11g;
    Position position;
    double tx_dbm = 0.0;  // [-30, +30]
    BandModel band;
    TrafficModel traffic;

    void validate() const;
};

struct BurstEvent {
    int emitter_id = 0;
    Technology tech = Technology::Wlan11g;
    int64_t t_start_us = 0;
    int64_t duration_us = 0;
    double center_mhz = 0.0;
    double bandwidth_mhz = 0.0;
    double tx_dbm = 0.0;

    int64_t t_end_us() const { return t_start_us + duration_us; }
    double band_low_mhz() const { return center_mhz - bandwidth_mhz / 2.0; }
    double band_high_mhz() const { return center_mhz + bandwidth_mhz / 2.0; }
};

// Ground-truth burst list, time-sorted, reproducible from (scenario, seed).
struct BurstLedger {
    int64_t horizon_us = 0;
    std::vector<BurstEvent> events;
    int64_t max_duration_us = 0;

    // Index range [lo, hi) of candidate events overlapping [a, b). Callers
    // still have to test t_end > a per event.
    std::pair<size_t, size_t> overlap_range(int64_t a, int64_t b) const;
};

struct PathLossModel {
    double pl0_db = 40.0;  // loss at reference distance
    double d0_m = 1.0;
    double exponent = 3.0;
    double shadow_sigma_db = 0.0;  // 0 = deterministic (default)
};

struct Scenario {
    struct Area {
        double width_m = 0.0;
        double height_m = 0.0;
    };
    Area area;
    std::vector<EmitterSpec> emitters;
    PathLossModel pathloss;
    uint64_t seed = 0;
    int64_t horizon_us = 0;

    const EmitterSpec& emitter_by_id(int id) const;
};

BurstLedger generate_ledger(const Scenario& scenario, int64_t horizon_us, uint64_t seed);

double path_loss_db(const PathLossModel& pl, double d_m);

// tx - PL0 - 10 n log10(d / d0), with d clamped to d0 from below.
double received_power_dbm(const BurstEvent& burst, const Position& rx,
                          const Position& emitter_pos, const PathLossModel& pl);

// Static per-link shadowing term, 0 when shadow_sigma_db == 0. Drawn once per
// (emitter, node) pair from the scenario seed.
double link_shadow_db(const Scenario& scenario, int emitter_id, int node_id);

Scenario load_scenario_file(const std::string& path);
Scenario load_scenario_json(const std::string& json_text);

void write_ledger_csv(const BurstLedger& ledger, std::ostream& out);

}  // namespace itimap
