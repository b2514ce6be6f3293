#include "itimap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace itimap {

std::vector<ObservedBurst> detect_bursts(const RssiTrace& trace, const DetectorConfig& cfg) {
    std::vector<ObservedBurst> out;
    const double ts = trace.sample_period_us;
    const double close_level = cfg.threshold_dbm - cfg.hysteresis_db;

    auto emit = [&](size_t first, size_t count) {
        const double duration = static_cast<double>(count) * ts;
        if (duration < cfg.min_burst_us) return;

        // Over-long detections: a classifiable head capped at max_burst_us
        // and one unclassifiable tail (energy detection cannot split them,
        // but the tail still contributes busy time).
        size_t head = count;
        if (duration > cfg.max_burst_us) {
            head = static_cast<size_t>(cfg.max_burst_us / ts);
        }
        ObservedBurst b;
        b.node_id = trace.node_id;
        b.channel_mhz = trace.channel_mhz;
        b.t_start_us = trace.time_at(first);
        b.duration_us = static_cast<double>(head) * ts;
        b.samples.assign(trace.samples.begin() + first, trace.samples.begin() + first + head);
        out.push_back(std::move(b));
        if (head < count) {
            ObservedBurst tail;
            tail.node_id = trace.node_id;
            tail.channel_mhz = trace.channel_mhz;
            tail.t_start_us = trace.time_at(first + head);
            tail.duration_us = static_cast<double>(count - head) * ts;
            tail.samples.assign(trace.samples.begin() + first + head,
                                trace.samples.begin() + first + count);
            tail.classifiable = false;
            out.push_back(std::move(tail));
        }
    };

    bool open = false;
    size_t first = 0;
    for (size_t i = 0; i < trace.samples.size(); ++i) {
        const double v = trace.samples[i];
        if (!open && v >= cfg.threshold_dbm) {
            open = true;
            first = i;
        } else if (open && v < close_level) {
            emit(first, i - first);
            open = false;
        }
    }
    if (open) emit(first, trace.samples.size() - first);
    return out;
}

FeatureVector extract_features(const ObservedBurst& burst) {
    if (burst.samples.empty()) throw ConfigError("extract_features: burst has no samples");

    FeatureVector fv;
    fv.duration_us = burst.duration_us;

    double lin_sum = 0.0;
    double peak = -1e9;
    double mean_db = 0.0;
    for (int8_t s : burst.samples) {
        lin_sum += db_to_linear(s);
        peak = std::max(peak, static_cast<double>(s));
        mean_db += s;
    }
    const double n = static_cast<double>(burst.samples.size());
    mean_db /= n;
    double var = 0.0;
    for (int8_t s : burst.samples) var += (s - mean_db) * (s - mean_db);

    fv.mean_power_dbm = linear_to_db(lin_sum / n);
    fv.peak_power_dbm = peak;
    fv.power_std_db = std::sqrt(var / n);
    fv.crest_db = fv.peak_power_dbm - fv.mean_power_dbm;

    // Spectral features from the completed sweep readings; anything the sweep
    // did not reach is treated as fully attenuated.
    double rssi0 = 0.0;
    bool have0 = false;
    for (const auto& s : burst.sweep) {
        if (s.complete && s.offset_mhz == 0.0) {
            rssi0 = s.rssi_dbm;
            have0 = true;
            break;
        }
    }
    fv.sf_ratio3_db = kSfSentinelDb;
    fv.sf_ratio8_db = kSfSentinelDb;
    fv.sf_bw_count = 0.0;
    if (have0) {
        int within = 0;
        for (const auto& s : burst.sweep) {
            if (!s.complete) continue;
            // downward sweeps (top-of-band channels) carry negative offsets
            const double off = std::abs(s.offset_mhz);
            if (off == 3.0) fv.sf_ratio3_db = rssi0 - s.rssi_dbm;
            if (off == 8.0) fv.sf_ratio8_db = rssi0 - s.rssi_dbm;
            if (rssi0 - s.rssi_dbm <= 6.0) ++within;
        }
        fv.sf_bw_count = within;
    }
    return fv;
}

LabelResult label_bursts(const std::vector<ObservedBurst>& observed, const BurstLedger& ledger,
                         double rbw_mhz) {
    LabelResult result;
    for (size_t i = 0; i < observed.size(); ++i) {
        const auto& ob = observed[i];
        if (ob.t_start_us < 0.0 || ob.t_end_us() > static_cast<double>(ledger.horizon_us)) {
            throw ConfigError("label_bursts: observed burst outside ledger horizon");
        }
        const int64_t a = static_cast<int64_t>(std::floor(ob.t_start_us));
        const int64_t b = static_cast<int64_t>(std::ceil(ob.t_end_us()));
        auto [lo, hi] = ledger.overlap_range(a, b);
        double best = 0.0;
        Technology best_tech = Technology::Wlan11g;
        for (size_t k = lo; k < hi; ++k) {
            const BurstEvent& e = ledger.events[k];
            const double ov = std::min(ob.t_end_us(), static_cast<double>(e.t_end_us())) -
                              std::max(ob.t_start_us, static_cast<double>(e.t_start_us));
            if (ov <= 0.0) continue;
            const double att = filter_attenuation_db(
                delta_to_band_mhz(ob.channel_mhz, e.band_low_mhz(), e.band_high_mhz()), rbw_mhz);
            const double score = ov * db_to_linear(-att);
            if (score > best) {
                best = score;
                best_tech = e.tech;
            }
        }
        if (best > 0.0) {
            result.labels.emplace_back(i, best_tech);
        } else {
            ++result.dropped;
        }
    }
    return result;
}

void write_dataset_csv(const std::vector<LabeledBurst>& rows, std::ostream& out) {
    out << "f1,f2,f3,f4,f5,f6,f7,f8,label\n";
    for (const auto& row : rows) {
        for (double v : row.features.as_array()) out << format_double(v) << ',';
        out << to_string(row.label) << '\n';
    }
}

std::vector<LabeledBurst> read_dataset_csv(std::istream& in) {
    std::vector<LabeledBurst> rows;
    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset: empty file");
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::array<double, 8> f{};
        for (int i = 0; i < 8; ++i) {
            if (!std::getline(ss, field, ',')) {
                throw DataError("dataset: short row at line " + std::to_string(lineno));
            }
            f[i] = std::stod(field);
        }
        if (!std::getline(ss, field)) {
            throw DataError("dataset: missing label at line " + std::to_string(lineno));
        }
        auto tech = technology_from_string(field);
        if (!tech) throw DataError("dataset: unknown label '" + field + "'");
        LabeledBurst row;
        row.features.duration_us = f[0];
        row.features.mean_power_dbm = f[1];
        row.features.peak_power_dbm = f[2];
        row.features.power_std_db = f[3];
        row.features.crest_db = f[4];
        row.features.sf_ratio3_db = f[5];
        row.features.sf_ratio8_db = f[6];
        row.features.sf_bw_count = f[7];
        row.label = *tech;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace itimap
