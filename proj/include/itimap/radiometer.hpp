#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "itimap/scene.hpp"

namespace itimap {

// Energy-sensing model of a constrained IEEE 802.15.4-class node used as a
// microwave radiometer: channel-filtered, 1 dB-quantized RSSI polling with a
// fixed per-device calibration offset.
struct DeviceModel {
    int node_id = 0;
    Position position;
    double calibration_offset_db = 0.0;  // fixed at creation, |x| <= 6
    double dyn_range_lo_dbm = -100.0;
    double dyn_range_hi_dbm = 0.0;
    double freq_lo_mhz = 2400.0;
    double freq_hi_mhz = 2485.0;
    double freq_granularity_mhz = 1.0;
    double sampling_rate_hz = 20000.0;  // RSSI register polling rate, 10-30 kS/s
    double rbw_mhz = 2.0;               // channel-filter resolution bandwidth, 1.5-4 MHz
    int sample_width_bits = 8;
    double noise_floor_dbm = -98.0;
    double retune_dwell_us = 64.0;  // retune + settle + one RSSI read per sweep offset

    double sample_period_us() const { return 1e6 / sampling_rate_hz; }
    void validate() const;
};

// Draws the per-device calibration offset (uniform on [-6, +6] dB) from the
// master seed; everything else takes library defaults.
DeviceModel make_device(int node_id, Position pos, uint64_t master_seed);

// Periodic scan over the 16 IEEE 802.15.4 channels (2405..2480 MHz, 5 MHz
// apart), observation_time per channel.
struct ScanSchedule {
    std::vector<double> channels_mhz;
    int64_t observation_time_us = 0;
    int64_t period_us = 0;
    std::vector<std::string> warnings;

    int64_t dwell_us() const { return static_cast<int64_t>(channels_mhz.size()) * observation_time_us; }
    double duty_cycle() const { return static_cast<double>(dwell_us()) / static_cast<double>(period_us); }
    int64_t window_start_us(int64_t scan_index, int channel_index) const {
        return scan_index * period_us + channel_index * observation_time_us;
    }
};

ScanSchedule build_schedule(int64_t observation_time_us, int64_t period_us);

struct RssiTrace {
    int node_id = 0;
    double channel_mhz = 0.0;
    int64_t t0_us = 0;
    double sample_period_us = 0.0;
    std::vector<int8_t> samples;

    double time_at(size_t i) const { return static_cast<double>(t0_us) + static_cast<double>(i) * sample_period_us; }
};

struct SweepSample {
    double offset_mhz = 0.0;
    int8_t rssi_dbm = 0;
    double t_us = 0.0;
    bool complete = true;  // false: read landed after the burst had ended
};

// Attenuation of the device channel filter at delta_f MHz from the nearest
// edge of the occupied band: 0 dB in-band, then linear in dB up to a 40 dB
// floor reached 3 MHz past the half-RBW point.
double filter_attenuation_db(double delta_f_mhz, double rbw_mhz);

// Distance from a sensing frequency to a band [lo, hi]; 0 if inside.
double delta_to_band_mhz(double freq_mhz, double band_lo_mhz, double band_hi_mhz);

int8_t quantize_dbm(double value_dbm, const DeviceModel& dev);

RssiTrace sample_trace(const Scenario& scenario, const BurstLedger& ledger,
                       const DeviceModel& dev, double channel_mhz, int64_t win_start_us,
                       int64_t win_end_us, uint64_t seed);

// Sequential retune through `offsets_mhz` starting at burst_start_us, one
// retune_dwell per offset with the RSSI read at the end of the dwell.
std::vector<SweepSample> sweep_during_burst(const Scenario& scenario, const BurstLedger& ledger,
                                            const DeviceModel& dev, double burst_start_us,
                                            double burst_end_us, double anchor_mhz,
                                            const std::vector<double>& offsets_mhz,
                                            uint64_t seed);

std::string device_to_json(const DeviceModel& dev);
DeviceModel device_from_json(const std::string& json_text);

void write_trace_csv_header(std::ostream& out);
void append_trace_csv(const RssiTrace& trace, std::ostream& out);

}  // namespace itimap
