#pragma once

#include <cmath>
#include <vector>

#include "itimap/driver.hpp"

namespace itimap::test {

// Fixed-band emitter whose bursts arrive at `rx_dbm` at a receiver placed
// 1 m away (the path-loss reference distance), with fixed duration/gap.
inline EmitterSpec fixed_emitter(int id, Technology tech, double center_mhz, double bw_mhz,
                                 double rx_dbm, double duration_us, double gap_mean_us,
                                 Position pos = {1.0, 0.0}) {
    EmitterSpec em;
    em.id = id;
    em.tech = tech;
    em.position = pos;
    em.tx_dbm = rx_dbm + 40.0;  // cancels PL0 = 40 dB at d0 = 1 m
    em.band.bandwidth_mhz = bw_mhz;
    em.band.centers_mhz = {center_mhz};
    em.traffic.duration_us = {Distribution::Kind::Fixed, duration_us, 0.0};
    em.traffic.gap_us = {Distribution::Kind::Exponential, gap_mean_us, 0.0};
    return em;
}

inline Scenario one_emitter_scenario(const EmitterSpec& em, int64_t horizon_us,
                                     uint64_t seed = 7) {
    Scenario s;
    s.area = {30.0, 30.0};
    s.emitters = {em};
    s.seed = seed;
    s.horizon_us = horizon_us;
    return s;
}

// Device colocated with the receiver reference point, offset forced to 0.
inline DeviceModel test_device(Position pos = {0.0, 0.0}, double rate_hz = 20000.0) {
    DeviceModel dev;
    dev.node_id = 1;
    dev.position = pos;
    dev.calibration_offset_db = 0.0;
    dev.sampling_rate_hz = rate_hz;
    return dev;
}

// Independent re-implementation of the burst/busy ledger oracle: every
// ground-truth burst whose filtered received power clears the threshold by
// `margin_db` contributes its overlap with the observation window.
struct OracleBurst {
    int64_t overlap_us;
    Technology tech;
};

inline std::vector<OracleBurst> ledger_window_oracle(const Scenario& scenario,
                                                     const BurstLedger& ledger,
                                                     const DeviceModel& dev, double channel_mhz,
                                                     int64_t w0, int64_t w1, double threshold_dbm,
                                                     double margin_db) {
    std::vector<OracleBurst> out;
    for (const auto& e : ledger.events) {
        const int64_t ov_lo = std::max(e.t_start_us, w0);
        const int64_t ov_hi = std::min(e.t_end_us(), w1);
        if (ov_hi <= ov_lo) continue;
        const auto& em = scenario.emitter_by_id(e.emitter_id);
        const double rx = received_power_dbm(e, dev.position, em.position, scenario.pathloss);
        const double att = filter_attenuation_db(
            delta_to_band_mhz(channel_mhz, e.band_low_mhz(), e.band_high_mhz()), dev.rbw_mhz);
        if (rx - att < threshold_dbm + margin_db) continue;
        out.push_back({ov_hi - ov_lo, e.tech});
    }
    return out;
}

// 5% chi-square critical value via the Wilson-Hilferty approximation.
inline double chi2_crit_5pct(int dof) {
    const double z = 1.6448536269514722;
    const double t = 1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof));
    return dof * t * t * t;
}

}  // namespace itimap::test
