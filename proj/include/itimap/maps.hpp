#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "itimap/radiometer.hpp"

namespace itimap {

inline constexpr size_t kReportHeaderBytes = 12;
inline constexpr size_t kReportEntryBytes = 6;
inline constexpr size_t kReportCapacity = 15;  // (102 - 12) / 6
inline constexpr size_t kReportMaxBytes = 102;
inline constexpr uint8_t kReportMagic = 0xA5;
inline constexpr uint8_t kReportVersion = 1;

// One aggregated (channel, technology) cell of a scan. Field widths match the
// wire format so encode/decode round-trips exactly.
struct ReportEntry {
    uint8_t channel = 0;  // 0..15
    Technology tech = Technology::Wlan11b;
    uint16_t burst_count = 0;
    int8_t mean_power_dbm = -100;  // linear-domain mean, 1 dB quantized
    uint8_t busy_x256us = 0;       // busy time / 256 us, rounded, saturating

    int64_t busy_us() const { return static_cast<int64_t>(busy_x256us) * 256; }
};

struct InterferenceReport {
    uint16_t node_id = 0;
    uint16_t scan_seq = 0;
    uint32_t scan_start_ms = 0;
    bool overflow = false;  // entries exceeded capacity; highest busy-time kept
    std::vector<ReportEntry> entries;  // unique (channel, tech), canonical order

    int64_t scan_start_us() const { return static_cast<int64_t>(scan_start_ms) * 1000; }
};

// One classified detection handed to the report builder.
struct ClassifiedBurst {
    int channel_index = 0;
    Technology tech = Technology::Wlan11b;
    double power_dbm = 0.0;  // burst mean power
    double busy_us = 0.0;
};

InterferenceReport build_report(const std::vector<ClassifiedBurst>& bursts,
                                const ScanSchedule& schedule, int node_id, int scan_seq,
                                int64_t scan_start_us);

std::vector<uint8_t> encode_report(const InterferenceReport& report);

struct DecodeError : DataError {
    enum class Kind { BadMagic, BadLength, BadField };
    Kind kind;
    DecodeError(Kind k, const std::string& msg) : DataError(msg), kind(k) {}
};

InterferenceReport decode_report(std::span<const uint8_t> bytes);
// Parses back-to-back encoded reports (the reports.bin artifact layout).
std::vector<InterferenceReport> decode_report_stream(std::span<const uint8_t> bytes);

std::string report_to_json(const InterferenceReport& report);
InterferenceReport report_from_json(const std::string& json_text);

struct NodeRegistry {
    std::vector<std::pair<int, Position>> nodes;  // ordered by insertion

    void add(int node_id, Position pos);
    size_t index_of(int node_id) const;  // DataError if unknown
    size_t size() const { return nodes.size(); }
};

// Pair of 4-D accumulators over (time bin, channel, technology, node):
// mean burst power and busy-time fraction. Power contributions are kept as an
// integer histogram over quantized dBm values, so accumulation is exactly
// order-independent.
class InterferenceTensor {
  public:
    InterferenceTensor(int64_t bin_us, const ScanSchedule& schedule, const NodeRegistry& registry);

    void accumulate(const InterferenceReport& report);

    double power_dbm(int64_t bin, int channel, Technology tech, size_t node_index) const;
    double busy_fraction(int64_t bin, int channel, Technology tech, size_t node_index) const;
    int64_t burst_count(int64_t bin, int channel, Technology tech, size_t node_index) const;
    // Reports accumulated for a node in a bin; 0 means "no data".
    uint32_t reports_in_bin(int64_t bin, size_t node_index) const;

    std::vector<int64_t> bins() const;
    int64_t bin_of_us(int64_t t_us) const { return t_us / bin_us_; }
    int64_t bin_us() const { return bin_us_; }
    const NodeRegistry& registry() const { return *registry_; }

    // Mean power (linear domain -> dBm) pooled over a bin range and channel
    // subset; NaN when no bursts were recorded.
    double pooled_power_dbm(int64_t bin_lo, int64_t bin_hi, std::span<const int> channels,
                            Technology tech, size_t node_index) const;

  private:
    struct Cell {
        std::map<int8_t, uint32_t> power_hist;
        uint64_t busy_x256 = 0;
        uint32_t bursts = 0;
    };
    struct Plane {
        std::vector<Cell> cells;  // channel-major: [channel][tech][node]
        std::vector<uint32_t> node_reports;
    };

    size_t cell_index(int channel, Technology tech, size_t node_index) const;
    const Cell* find_cell(int64_t bin, int channel, Technology tech, size_t node_index) const;

    int64_t bin_us_;
    int64_t observation_us_;
    int64_t scans_per_bin_;
    const NodeRegistry* registry_;
    std::map<int64_t, Plane> planes_;
};

struct GridSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_m = 0.5;
    int nx = 0;
    int ny = 0;

    static GridSpec cover(double width_m, double height_m, double cell_m);
    Position cell_center(int ix, int iy) const {
        return {origin_x + (ix + 0.5) * cell_m, origin_y + (iy + 0.5) * cell_m};
    }
};

struct SpatialMap {
    GridSpec grid;
    std::vector<double> values;  // row-major, ny rows of nx
    std::vector<uint8_t> mask;   // 1 = outside the node convex hull (nearest-neighbor fill)

    double& at(int ix, int iy) { return values[static_cast<size_t>(iy) * grid.nx + ix]; }
    double at(int ix, int iy) const { return values[static_cast<size_t>(iy) * grid.nx + ix]; }
};

// Sibson (natural-neighbor) interpolation by discrete Voronoi rasterization:
// the weight of site i at query q is the fraction of q's inserted Voronoi
// cell stolen from i, counted over raster pixels.
class NaturalNeighbor {
  public:
    // refine: raster pixels per grid cell edge.
    NaturalNeighbor(std::vector<Position> sites, const GridSpec& grid, double refine = 4.0);

    bool inside_hull(Position q) const;
    size_t nearest_site(Position q) const;
    // Sibson estimate; exact at site positions, nearest-neighbor outside hull.
    double interpolate(Position q, std::span<const double> values) const;

  private:
    std::vector<Position> sites_;
    std::vector<Position> hull_;
    double px_;  // raster pixel edge, metres
    double raster_x0_ = 0.0, raster_y0_ = 0.0;
    int raster_nx_ = 0, raster_ny_ = 0;
    std::vector<uint16_t> owner_;
    std::vector<double> owner_d2_;
};

SpatialMap natural_neighbor(const std::vector<Position>& sites, const std::vector<double>& values,
                            const GridSpec& grid, double refine = 4.0);

// Largest-value cell among the interpolated (in-hull) cells; the masked
// nearest-neighbor fringe only repeats node values.
std::pair<int, int> map_argmax(const SpatialMap& map);

// Per-technology spatial power map: node values are linear-domain averages
// over the selected bins/channels, interpolation runs in the linear domain
// and the result is rendered in dBm. Nodes without bursts are excluded.
SpatialMap power_map(const InterferenceTensor& tensor, Technology tech, int64_t bin_lo,
                     int64_t bin_hi, std::span<const int> channels, const GridSpec& grid,
                     double refine = 4.0);

struct Spectrogram {
    std::vector<int64_t> bins;
    std::vector<std::array<double, 16>> power_dbm;      // NaN = no data
    std::vector<std::array<double, 16>> busy_fraction;  // NaN = node unreported in bin
};

Spectrogram spectrogram(const InterferenceTensor& tensor, int node_id, Technology tech);

void write_tensor_csv(const InterferenceTensor& tensor, std::ostream& out);
void write_map_csv(const SpatialMap& map, std::ostream& out);
std::string map_sidecar_json(const SpatialMap& map);
void write_map_pgm(const SpatialMap& map, std::ostream& out);
// One matrix per file: busy = false writes the power matrix.
void write_spectrogram_csv(const Spectrogram& sg, bool busy, std::ostream& out);

}  // namespace itimap
