#include "itimap/driver.hpp"

#include <algorithm>
#include <cmath>

namespace itimap {

NodeRegistry registry_from(const std::vector<NodeSpec>& nodes) {
    NodeRegistry reg;
    for (const auto& n : nodes) reg.add(n.id, n.pos);
    return reg;
}

InterferenceTensor tensor_from_reports(const std::vector<InterferenceReport>& reports,
                                       int64_t bin_us, const ScanSchedule& schedule,
                                       const NodeRegistry& registry) {
    InterferenceTensor tensor(bin_us, schedule, registry);
    for (const auto& r : reports) tensor.accumulate(r);
    return tensor;
}

namespace {

DeviceModel build_device(const NodeSpec& node, const DeviceDefaults& defaults, uint64_t seed) {
    DeviceModel dev = make_device(node.id, node.pos, seed);
    dev.sampling_rate_hz = defaults.sampling_rate_hz;
    dev.rbw_mhz = defaults.rbw_mhz;
    dev.noise_floor_dbm = defaults.noise_floor_dbm;
    dev.retune_dwell_us = defaults.retune_dwell_us;
    if (defaults.calibration_offset_db.has_value()) {
        dev.calibration_offset_db = *defaults.calibration_offset_db;
    }
    dev.validate();
    return dev;
}

bool window_has_events(const BurstLedger& ledger, int64_t a, int64_t b) {
    auto [lo, hi] = ledger.overlap_range(a, b);
    for (size_t i = lo; i < hi; ++i) {
        if (ledger.events[i].t_end_us() > a) return true;
    }
    return false;
}

}  // namespace

SimResult run_simulation(const SimConfig& cfg, const SimOptions& opts) {
    if (cfg.nodes.empty()) throw ConfigError("simulation: no sensing nodes configured");
    if (opts.tech_source == TechSource::Model && opts.model == nullptr) {
        throw ConfigError("simulation: model classification requested without a model");
    }
    registry_from(cfg.nodes);  // validates distinct ids/positions

    SimResult result;
    result.ledger = generate_ledger(cfg.scenario, cfg.scenario.horizon_us, cfg.seed);
    result.summary.ledger_bursts = result.ledger.events.size();
    result.summary.duty_cycle = cfg.schedule.duty_cycle();

    const int64_t n_scans =
        cfg.scenario.horizon_us >= cfg.schedule.dwell_us()
            ? (cfg.scenario.horizon_us - cfg.schedule.dwell_us()) / cfg.schedule.period_us + 1
            : 0;
    result.summary.scans = static_cast<size_t>(n_scans) * cfg.nodes.size();

    for (const auto& node : cfg.nodes) {
        const DeviceModel dev = build_device(node, cfg.device, cfg.seed);
        result.devices.push_back(dev);

        for (int64_t scan = 0; scan < n_scans; ++scan) {
            std::vector<ClassifiedBurst> scan_bursts;
            for (int ch = 0; ch < 16; ++ch) {
                const int64_t w0 = cfg.schedule.window_start_us(scan, ch);
                const int64_t w1 = w0 + cfg.schedule.observation_time_us;
                const bool keep_trace =
                    opts.traces == TraceCollect::All ||
                    (opts.traces == TraceCollect::FirstScan && scan == 0);
                if (!keep_trace && !window_has_events(result.ledger, w0, w1)) continue;

                const double channel = cfg.schedule.channels_mhz[static_cast<size_t>(ch)];
                RssiTrace trace =
                    sample_trace(cfg.scenario, result.ledger, dev, channel, w0, w1, cfg.seed);
                auto observed = detect_bursts(trace, cfg.detector);
                if (keep_trace) result.traces.push_back(std::move(trace));
                if (observed.empty()) continue;

                // Near the top of the band the one-sided sweep would leave the
                // device range; sweep downward there instead. Feature
                // extraction works on offset magnitude.
                std::vector<double> offsets = cfg.device.sweep_offsets_mhz;
                for (double off : offsets) {
                    if (channel + off > dev.freq_hi_mhz) {
                        for (double& o : offsets) o = -o;
                        break;
                    }
                }
                for (auto& burst : observed) {
                    if (!burst.classifiable) continue;
                    if (burst.duration_us <= cfg.detector.sweep_trigger_us) continue;
                    burst.sweep = sweep_during_burst(
                        cfg.scenario, result.ledger, dev,
                        burst.t_start_us + cfg.detector.sweep_trigger_us, burst.t_end_us(),
                        channel, offsets, cfg.seed);
                }

                const LabelResult labels = label_bursts(observed, result.ledger, dev.rbw_mhz);
                result.summary.detected += observed.size();
                result.summary.dropped += labels.dropped;

                // Truncation tails inherit the technology decided for their
                // head; the device would have classified the burst once.
                std::vector<std::optional<Technology>> tech(observed.size());
                for (const auto& [index, label] : labels.labels) {
                    tech[index] = label;
                }
                std::optional<Technology> head_tech;
                for (size_t i = 0; i < observed.size(); ++i) {
                    const auto& burst = observed[i];
                    if (!tech[i].has_value()) continue;
                    const FeatureVector fv = extract_features(burst);
                    if (burst.classifiable) {
                        result.summary.classifiable++;
                        result.summary.labeled++;
                        if (opts.want_dataset) {
                            result.dataset.push_back({fv, *tech[i]});
                        }
                        if (opts.tech_source == TechSource::Model) {
                            tech[i] = classify(*opts.model, fv).tech;
                        }
                        head_tech = tech[i];
                    } else if (head_tech.has_value()) {
                        tech[i] = head_tech;
                    }
                    if (opts.want_reports) {
                        scan_bursts.push_back(
                            {ch, *tech[i], fv.mean_power_dbm, burst.duration_us});
                    }
                }
            }
            if (opts.want_reports) {
                result.reports.push_back(build_report(scan_bursts, cfg.schedule, node.id,
                                                      static_cast<int>(scan & 0xFFFF),
                                                      scan * cfg.schedule.period_us));
            }
        }
    }
    return result;
}

}  // namespace itimap
