#include "itimap/radiometer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

namespace itimap {

namespace {

constexpr double kFilterFloorDb = 40.0;
constexpr double kFilterRollMhz = 3.0;
// Contributions this far below the dynamic-range floor cannot move a sample.
constexpr double kNegligibleDbm = -120.0;

struct ActiveBurst {
    int64_t t_start_us;
    int64_t t_end_us;
    double lin_mw;
};

// Candidate bursts overlapping [a, b) with their effective linear power at
// the sensing frequency (path loss, shadowing and channel filter applied).
std::vector<ActiveBurst> collect_candidates(const Scenario& scenario, const BurstLedger& ledger,
                                            const DeviceModel& dev, double freq_mhz,
                                            int64_t a, int64_t b) {
    std::vector<ActiveBurst> out;
    auto [lo, hi] = ledger.overlap_range(a, b);
    for (size_t i = lo; i < hi; ++i) {
        const BurstEvent& e = ledger.events[i];
        if (e.t_end_us() <= a) continue;
        const auto& em = scenario.emitter_by_id(e.emitter_id);
        const double rx = received_power_dbm(e, dev.position, em.position, scenario.pathloss) +
                          link_shadow_db(scenario, e.emitter_id, dev.node_id);
        const double att = filter_attenuation_db(
            delta_to_band_mhz(freq_mhz, e.band_low_mhz(), e.band_high_mhz()), dev.rbw_mhz);
        const double eff = rx - att;
        if (eff < kNegligibleDbm) continue;
        out.push_back({e.t_start_us, e.t_end_us(), db_to_linear(eff)});
    }
    return out;
}

}  // namespace

void DeviceModel::validate() const {
    if (std::abs(calibration_offset_db) > 6.0) {
        throw ConfigError("device: |calibration_offset| must be <= 6 dB");
    }
    if (sampling_rate_hz < 10000.0 || sampling_rate_hz > 30000.0) {
        throw ConfigError("device: sampling_rate must be within [10000, 30000] S/s");
    }
    if (rbw_mhz < 1.5 || rbw_mhz > 4.0) {
        throw ConfigError("device: rbw must be within [1.5, 4] MHz");
    }
    if (freq_granularity_mhz != 1.0) {
        throw ConfigError("device: freq_granularity must be 1 MHz");
    }
    if (sample_width_bits != 8) {
        throw ConfigError("device: sample_width must be 8 bits");
    }
    if (dyn_range_lo_dbm >= dyn_range_hi_dbm) {
        throw ConfigError("device: dynamic range is empty");
    }
    if (noise_floor_dbm < dyn_range_lo_dbm) {
        throw ConfigError("device: noise floor below dynamic range");
    }
    if (retune_dwell_us <= 0.0) {
        throw ConfigError("device: retune_dwell must be > 0");
    }
}

DeviceModel make_device(int node_id, Position pos, uint64_t master_seed) {
    DeviceModel dev;
    dev.node_id = node_id;
    dev.position = pos;
    Rng rng(derive_seed(master_seed, static_cast<uint64_t>(node_id), 0xca1ULL));
    dev.calibration_offset_db = rng.uniform(-6.0, 6.0);
    return dev;
}

ScanSchedule build_schedule(int64_t observation_time_us, int64_t period_us) {
    if (observation_time_us < 30000 || observation_time_us > 50000) {
        throw ConfigError("schedule: observation_time must be within [30, 50] ms");
    }
    ScanSchedule s;
    for (int ch = 0; ch < 16; ++ch) s.channels_mhz.push_back(2405.0 + 5.0 * ch);
    s.observation_time_us = observation_time_us;
    s.period_us = period_us;
    if (s.dwell_us() > period_us) {
        throw ConfigError("schedule: dwell exceeds period");
    }
    if (s.dwell_us() < 600000) {
        s.warnings.push_back("dwell " + std::to_string(s.dwell_us() / 1000) +
                             " ms below the 600 ms reference minimum");
    }
    return s;
}

double filter_attenuation_db(double delta_f_mhz, double rbw_mhz) {
    if (delta_f_mhz < 0.0) throw ConfigError("filter_attenuation: delta_f must be >= 0");
    const double passband = rbw_mhz / 2.0;
    if (delta_f_mhz <= passband) return 0.0;
    return std::min(kFilterFloorDb, kFilterFloorDb * (delta_f_mhz - passband) / kFilterRollMhz);
}

double delta_to_band_mhz(double freq_mhz, double band_lo_mhz, double band_hi_mhz) {
    if (freq_mhz < band_lo_mhz) return band_lo_mhz - freq_mhz;
    if (freq_mhz > band_hi_mhz) return freq_mhz - band_hi_mhz;
    return 0.0;
}

int8_t quantize_dbm(double value_dbm, const DeviceModel& dev) {
    const double clamped = std::clamp(value_dbm, dev.dyn_range_lo_dbm, dev.dyn_range_hi_dbm);
    return static_cast<int8_t>(std::llround(clamped));
}

RssiTrace sample_trace(const Scenario& scenario, const BurstLedger& ledger,
                       const DeviceModel& dev, double channel_mhz, int64_t win_start_us,
                       int64_t win_end_us, uint64_t seed) {
    (void)seed;  // sampling itself is deterministic; reserved for noise models
    if (channel_mhz < dev.freq_lo_mhz || channel_mhz > dev.freq_hi_mhz) {
        throw ConfigError("sample_trace: channel outside device frequency range");
    }
    if (win_start_us < 0 || win_end_us > ledger.horizon_us || win_end_us <= win_start_us) {
        throw ConfigError("sample_trace: window outside ledger horizon");
    }

    RssiTrace trace;
    trace.node_id = dev.node_id;
    trace.channel_mhz = channel_mhz;
    trace.t0_us = win_start_us;
    trace.sample_period_us = dev.sample_period_us();

    auto candidates = collect_candidates(scenario, ledger, dev, channel_mhz, win_start_us, win_end_us);
    const double noise_lin = db_to_linear(dev.noise_floor_dbm);
    const double span = static_cast<double>(win_end_us - win_start_us);
    const size_t n = static_cast<size_t>(std::ceil(span / trace.sample_period_us));
    trace.samples.reserve(n);

    // Sweep line: candidates are t_start-sorted, keep the currently active set.
    size_t next = 0;
    std::vector<ActiveBurst> active;
    for (size_t k = 0; k < n; ++k) {
        const double t = trace.time_at(k);
        while (next < candidates.size() &&
               static_cast<double>(candidates[next].t_start_us) <= t) {
            active.push_back(candidates[next++]);
        }
        std::erase_if(active, [t](const ActiveBurst& a) {
            return static_cast<double>(a.t_end_us) <= t;
        });
        double lin = noise_lin;
        for (const auto& a : active) lin += a.lin_mw;
        trace.samples.push_back(
            quantize_dbm(dev.calibration_offset_db + linear_to_db(lin), dev));
    }
    return trace;
}

std::vector<SweepSample> sweep_during_burst(const Scenario& scenario, const BurstLedger& ledger,
                                            const DeviceModel& dev, double burst_start_us,
                                            double burst_end_us, double anchor_mhz,
                                            const std::vector<double>& offsets_mhz,
                                            uint64_t seed) {
    (void)seed;
    if (offsets_mhz.empty()) throw ConfigError("sweep: offset list is empty");
    for (double off : offsets_mhz) {
        const double steps = off / dev.freq_granularity_mhz;
        if (std::abs(steps - std::round(steps)) > 1e-9) {
            throw ConfigError("sweep: offsets must be multiples of the frequency granularity");
        }
        const double f = anchor_mhz + off;
        if (f < dev.freq_lo_mhz || f > dev.freq_hi_mhz) {
            throw ConfigError("sweep: offset frequency outside device range");
        }
    }

    std::vector<SweepSample> out;
    out.reserve(offsets_mhz.size());
    const double noise_lin = db_to_linear(dev.noise_floor_dbm);
    for (size_t i = 0; i < offsets_mhz.size(); ++i) {
        const double t = burst_start_us + (static_cast<double>(i) + 1.0) * dev.retune_dwell_us;
        const double freq = anchor_mhz + offsets_mhz[i];
        const int64_t ti = static_cast<int64_t>(std::floor(t));
        auto candidates = collect_candidates(scenario, ledger, dev, freq, ti, ti + 1);
        double lin = noise_lin;
        for (const auto& c : candidates) {
            if (static_cast<double>(c.t_start_us) <= t && t < static_cast<double>(c.t_end_us)) {
                lin += c.lin_mw;
            }
        }
        SweepSample s;
        s.offset_mhz = offsets_mhz[i];
        s.t_us = t;
        s.rssi_dbm = quantize_dbm(dev.calibration_offset_db + linear_to_db(lin), dev);
        s.complete = t <= burst_end_us;
        out.push_back(s);
    }
    return out;
}

std::string device_to_json(const DeviceModel& dev) {
    nlohmann::json j{
        {"node_id", dev.node_id},
        {"position", {{"x", dev.position.x}, {"y", dev.position.y}}},
        {"calibration_offset_db", dev.calibration_offset_db},
        {"dynamic_range_dbm", {dev.dyn_range_lo_dbm, dev.dyn_range_hi_dbm}},
        {"freq_range_mhz", {dev.freq_lo_mhz, dev.freq_hi_mhz}},
        {"freq_granularity_mhz", dev.freq_granularity_mhz},
        {"sampling_rate_hz", dev.sampling_rate_hz},
        {"rbw_mhz", dev.rbw_mhz},
        {"sample_width_bits", dev.sample_width_bits},
        {"noise_floor_dbm", dev.noise_floor_dbm},
        {"retune_dwell_us", dev.retune_dwell_us},
    };
    return j.dump(2);
}

DeviceModel device_from_json(const std::string& json_text) {
    try {
        const auto j = nlohmann::json::parse(json_text);
        DeviceModel dev;
        dev.node_id = j.at("node_id").get<int>();
        dev.position.x = j.at("position").at("x").get<double>();
        dev.position.y = j.at("position").at("y").get<double>();
        dev.calibration_offset_db = j.at("calibration_offset_db").get<double>();
        dev.dyn_range_lo_dbm = j.at("dynamic_range_dbm").at(0).get<double>();
        dev.dyn_range_hi_dbm = j.at("dynamic_range_dbm").at(1).get<double>();
        dev.freq_lo_mhz = j.at("freq_range_mhz").at(0).get<double>();
        dev.freq_hi_mhz = j.at("freq_range_mhz").at(1).get<double>();
        dev.freq_granularity_mhz = j.value("freq_granularity_mhz", 1.0);
        dev.sampling_rate_hz = j.at("sampling_rate_hz").get<double>();
        dev.rbw_mhz = j.at("rbw_mhz").get<double>();
        dev.sample_width_bits = j.value("sample_width_bits", 8);
        dev.noise_floor_dbm = j.at("noise_floor_dbm").get<double>();
        dev.retune_dwell_us = j.value("retune_dwell_us", 64.0);
        dev.validate();
        return dev;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("device: ") + e.what());
    }
}

void write_trace_csv_header(std::ostream& out) { out << "node_id,channel_mhz,t_us,rssi_dbm\n"; }

void append_trace_csv(const RssiTrace& trace, std::ostream& out) {
    for (size_t i = 0; i < trace.samples.size(); ++i) {
        out << trace.node_id << ',' << format_double(trace.channel_mhz) << ','
            << format_double(trace.time_at(i)) << ',' << static_cast<int>(trace.samples[i])
            << '\n';
    }
}

}  // namespace itimap
