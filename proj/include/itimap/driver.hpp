#pragma once

#include <optional>
#include <vector>

#include "itimap/classifier.hpp"
#include "itimap/maps.hpp"

namespace itimap {

struct NodeSpec {
    int id = 0;
    Position pos;
};

struct DeviceDefaults {
    double sampling_rate_hz = 20000.0;
    double rbw_mhz = 2.0;
    double noise_floor_dbm = -98.0;
    std::optional<double> calibration_offset_db;  // unset: drawn per device from the seed
    double retune_dwell_us = 64.0;
    std::vector<double> sweep_offsets_mhz = {0, 1, 2, 3, 4, 5, 6, 7, 8};
};

struct SimConfig {
    Scenario scenario;
    std::vector<NodeSpec> nodes;
    DeviceDefaults device;
    ScanSchedule schedule;
    DetectorConfig detector;
    uint64_t seed = 0;
};

enum class TechSource { GroundTruth, Model };
enum class TraceCollect { None, FirstScan, All };

struct SimOptions {
    bool want_dataset = true;
    bool want_reports = true;
    TraceCollect traces = TraceCollect::None;
    TechSource tech_source = TechSource::GroundTruth;
    const ModelFile* model = nullptr;  // required for TechSource::Model
};

struct SimSummary {
    size_t ledger_bursts = 0;
    size_t scans = 0;
    size_t detected = 0;  // all observed bursts, truncation tails included
    size_t classifiable = 0;
    size_t labeled = 0;
    size_t dropped = 0;  // observations without ledger overlap
    double duty_cycle = 0.0;
};

struct SimResult {
    BurstLedger ledger;
    std::vector<DeviceModel> devices;
    std::vector<LabeledBurst> dataset;
    std::vector<InterferenceReport> reports;
    std::vector<RssiTrace> traces;
    SimSummary summary;
};

// Scene -> radiometer -> detection -> features -> labels/reports for every
// node over all complete scan periods. Deterministic for a fixed config;
// windows without time-overlapping ledger events are skipped without
// per-sample work.
SimResult run_simulation(const SimConfig& cfg, const SimOptions& opts);

NodeRegistry registry_from(const std::vector<NodeSpec>& nodes);

InterferenceTensor tensor_from_reports(const std::vector<InterferenceReport>& reports,
                                       int64_t bin_us, const ScanSchedule& schedule,
                                       const NodeRegistry& registry);

}  // namespace itimap
