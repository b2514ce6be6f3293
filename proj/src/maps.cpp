#include "itimap/maps.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

namespace itimap {

InterferenceReport build_report(const std::vector<ClassifiedBurst>& bursts,
                                const ScanSchedule& schedule, int node_id, int scan_seq,
                                int64_t scan_start_us) {
    if (node_id < 0 || node_id > 0xFFFF) throw ConfigError("report: node_id must fit u16");
    if (scan_start_us < 0 || scan_start_us / 1000 > 0xFFFFFFFFLL) {
        throw ConfigError("report: scan start outside the u32 millisecond range");
    }
    const int64_t obs = schedule.observation_time_us;

    struct Acc {
        uint64_t count = 0;
        double lin_sum = 0.0;
        double busy_us = 0.0;
    };
    std::map<std::pair<int, int>, Acc> cells;
    for (const auto& b : bursts) {
        if (b.channel_index < 0 || b.channel_index > 15) {
            throw ConfigError("report: channel index outside 0..15");
        }
        Acc& acc = cells[{b.channel_index, static_cast<int>(b.tech)}];
        acc.count++;
        acc.lin_sum += db_to_linear(b.power_dbm);
        acc.busy_us += b.busy_us;
    }

    InterferenceReport report;
    report.node_id = static_cast<uint16_t>(node_id);
    report.scan_seq = static_cast<uint16_t>(scan_seq);
    report.scan_start_ms = static_cast<uint32_t>(scan_start_us / 1000);
    for (const auto& [key, acc] : cells) {
        ReportEntry e;
        e.channel = static_cast<uint8_t>(key.first);
        e.tech = static_cast<Technology>(key.second);
        e.burst_count = static_cast<uint16_t>(std::min<uint64_t>(acc.count, 0xFFFF));
        const double mean_dbm = linear_to_db(acc.lin_sum / static_cast<double>(acc.count));
        e.mean_power_dbm =
            static_cast<int8_t>(std::clamp<long>(std::lround(mean_dbm), -100L, 0L));
        const double busy = std::min(acc.busy_us, static_cast<double>(obs));
        e.busy_x256us = static_cast<uint8_t>(std::min<long>(255L, std::lround(busy / 256.0)));
        report.entries.push_back(e);
    }
    if (report.entries.size() > kReportCapacity) {
        report.overflow = true;
        std::sort(report.entries.begin(), report.entries.end(),
                  [](const ReportEntry& a, const ReportEntry& b) {
                      if (a.busy_x256us != b.busy_x256us) return a.busy_x256us > b.busy_x256us;
                      if (a.channel != b.channel) return a.channel < b.channel;
                      return a.tech < b.tech;
                  });
        report.entries.resize(kReportCapacity);
        std::sort(report.entries.begin(), report.entries.end(),
                  [](const ReportEntry& a, const ReportEntry& b) {
                      if (a.channel != b.channel) return a.channel < b.channel;
                      return a.tech < b.tech;
                  });
    }
    return report;
}

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

uint16_t get_u16(std::span<const uint8_t> b, size_t at) {
    return static_cast<uint16_t>(b[at] | (b[at + 1] << 8));
}

uint32_t get_u32(std::span<const uint8_t> b, size_t at) {
    return static_cast<uint32_t>(b[at]) | (static_cast<uint32_t>(b[at + 1]) << 8) |
           (static_cast<uint32_t>(b[at + 2]) << 16) | (static_cast<uint32_t>(b[at + 3]) << 24);
}

}  // namespace

std::vector<uint8_t> encode_report(const InterferenceReport& report) {
    if (report.entries.size() > kReportCapacity) {
        throw ConfigError("encode: report exceeds entry capacity");
    }
    for (const auto& e : report.entries) {
        if (e.channel > 15 || static_cast<int>(e.tech) >= kTechnologyCount ||
            e.mean_power_dbm < -100 || e.mean_power_dbm > 0) {
            throw ConfigError("encode: entry field out of range");
        }
    }
    // Layout: A5 | version | node u16 | seq u16 | start_ms u32 | n u8 | flags u8,
    // then n entries of: channel | tech | count u16 | power i8 | busy_x256 u8.
    std::vector<uint8_t> out;
    out.reserve(kReportHeaderBytes + kReportEntryBytes * report.entries.size());
    out.push_back(kReportMagic);
    out.push_back(kReportVersion);
    put_u16(out, report.node_id);
    put_u16(out, report.scan_seq);
    put_u32(out, report.scan_start_ms);
    out.push_back(static_cast<uint8_t>(report.entries.size()));
    out.push_back(report.overflow ? 0x01 : 0x00);
    for (const auto& e : report.entries) {
        out.push_back(e.channel);
        out.push_back(static_cast<uint8_t>(e.tech));
        put_u16(out, e.burst_count);
        out.push_back(static_cast<uint8_t>(e.mean_power_dbm));
        out.push_back(e.busy_x256us);
    }
    return out;
}

InterferenceReport decode_report(std::span<const uint8_t> bytes) {
    if (bytes.size() < kReportHeaderBytes) {
        throw DecodeError(DecodeError::Kind::BadLength, "decode: truncated header");
    }
    if (bytes[0] != kReportMagic) {
        throw DecodeError(DecodeError::Kind::BadMagic, "decode: bad magic byte");
    }
    if (bytes[1] != kReportVersion) {
        throw DecodeError(DecodeError::Kind::BadField, "decode: unsupported version");
    }
    const size_t n = bytes[10];
    if (n > kReportCapacity) {
        throw DecodeError(DecodeError::Kind::BadField, "decode: entry count exceeds capacity");
    }
    if (bytes.size() != kReportHeaderBytes + kReportEntryBytes * n) {
        throw DecodeError(DecodeError::Kind::BadLength, "decode: length does not match entry count");
    }
    if ((bytes[11] & ~0x01) != 0) {
        throw DecodeError(DecodeError::Kind::BadField, "decode: reserved flag bits set");
    }

    InterferenceReport r;
    r.node_id = get_u16(bytes, 2);
    r.scan_seq = get_u16(bytes, 4);
    r.scan_start_ms = get_u32(bytes, 6);
    r.overflow = (bytes[11] & 0x01) != 0;
    std::vector<bool> seen(16 * kTechnologyCount, false);
    for (size_t i = 0; i < n; ++i) {
        const size_t at = kReportHeaderBytes + kReportEntryBytes * i;
        ReportEntry e;
        e.channel = bytes[at];
        const uint8_t tech = bytes[at + 1];
        e.burst_count = get_u16(bytes, at + 2);
        e.mean_power_dbm = static_cast<int8_t>(bytes[at + 4]);
        e.busy_x256us = bytes[at + 5];
        if (e.channel > 15) {
            throw DecodeError(DecodeError::Kind::BadField, "decode: channel outside 0..15");
        }
        if (tech >= kTechnologyCount) {
            throw DecodeError(DecodeError::Kind::BadField, "decode: unknown technology code");
        }
        if (e.mean_power_dbm < -100 || e.mean_power_dbm > 0) {
            throw DecodeError(DecodeError::Kind::BadField, "decode: power outside [-100, 0] dBm");
        }
        e.tech = static_cast<Technology>(tech);
        const size_t key = e.channel * kTechnologyCount + tech;
        if (seen[key]) {
            throw DecodeError(DecodeError::Kind::BadField, "decode: duplicate (channel, tech)");
        }
        seen[key] = true;
        r.entries.push_back(e);
    }
    return r;
}

std::vector<InterferenceReport> decode_report_stream(std::span<const uint8_t> bytes) {
    std::vector<InterferenceReport> out;
    size_t at = 0;
    while (at < bytes.size()) {
        if (bytes.size() - at < kReportHeaderBytes) {
            throw DecodeError(DecodeError::Kind::BadLength, "decode: truncated stream");
        }
        const size_t n = bytes[at + 10];
        const size_t len = kReportHeaderBytes + kReportEntryBytes * n;
        if (bytes.size() - at < len) {
            throw DecodeError(DecodeError::Kind::BadLength, "decode: truncated stream");
        }
        out.push_back(decode_report(bytes.subspan(at, len)));
        at += len;
    }
    return out;
}

std::string report_to_json(const InterferenceReport& report) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"channel", e.channel},
                           {"tech", to_string(e.tech)},
                           {"burst_count", e.burst_count},
                           {"mean_power_dbm", e.mean_power_dbm},
                           {"busy_x256us", e.busy_x256us}});
    }
    nlohmann::json j{{"node_id", report.node_id},
                     {"scan_seq", report.scan_seq},
                     {"scan_start_ms", report.scan_start_ms},
                     {"overflow", report.overflow},
                     {"entries", entries}};
    return j.dump(2);
}

InterferenceReport report_from_json(const std::string& json_text) {
    try {
        const auto j = nlohmann::json::parse(json_text);
        InterferenceReport r;
        r.node_id = j.at("node_id").get<uint16_t>();
        r.scan_seq = j.at("scan_seq").get<uint16_t>();
        r.scan_start_ms = j.at("scan_start_ms").get<uint32_t>();
        r.overflow = j.value("overflow", false);
        for (const auto& je : j.at("entries")) {
            ReportEntry e;
            e.channel = je.at("channel").get<uint8_t>();
            const auto tech = technology_from_string(je.at("tech").get<std::string>());
            if (!tech) throw DataError("report: unknown technology");
            e.tech = *tech;
            e.burst_count = je.at("burst_count").get<uint16_t>();
            e.mean_power_dbm = static_cast<int8_t>(je.at("mean_power_dbm").get<int>());
            e.busy_x256us = je.at("busy_x256us").get<uint8_t>();
            r.entries.push_back(e);
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("report: ") + e.what());
    }
}

void NodeRegistry::add(int node_id, Position pos) {
    for (const auto& [id, p] : nodes) {
        if (id == node_id) throw ConfigError("registry: duplicate node id");
        if (p.x == pos.x && p.y == pos.y) throw ConfigError("registry: duplicate node position");
    }
    nodes.emplace_back(node_id, pos);
}

size_t NodeRegistry::index_of(int node_id) const {
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].first == node_id) return i;
    }
    throw DataError("registry: unknown node id " + std::to_string(node_id));
}

InterferenceTensor::InterferenceTensor(int64_t bin_us, const ScanSchedule& schedule,
                                       const NodeRegistry& registry)
    : bin_us_(bin_us), observation_us_(schedule.observation_time_us), registry_(&registry) {
    if (bin_us < schedule.period_us || bin_us % schedule.period_us != 0) {
        throw ConfigError("tensor: bin width must be a positive multiple of the scan period");
    }
    scans_per_bin_ = bin_us / schedule.period_us;
}

size_t InterferenceTensor::cell_index(int channel, Technology tech, size_t node_index) const {
    return (static_cast<size_t>(channel) * kTechnologyCount + static_cast<size_t>(tech)) *
               registry_->size() +
           node_index;
}

void InterferenceTensor::accumulate(const InterferenceReport& report) {
    const size_t node_index = registry_->index_of(report.node_id);
    const int64_t bin = bin_of_us(report.scan_start_us());
    Plane& plane = planes_[bin];
    if (plane.cells.empty()) {
        plane.cells.resize(16 * kTechnologyCount * registry_->size());
        plane.node_reports.assign(registry_->size(), 0);
    }
    plane.node_reports[node_index]++;
    for (const auto& e : report.entries) {
        Cell& cell = plane.cells[cell_index(e.channel, e.tech, node_index)];
        cell.power_hist[e.mean_power_dbm] += e.burst_count;
        cell.busy_x256 += e.busy_x256us;
        cell.bursts += e.burst_count;
    }
}

const InterferenceTensor::Cell* InterferenceTensor::find_cell(int64_t bin, int channel,
                                                              Technology tech,
                                                              size_t node_index) const {
    auto it = planes_.find(bin);
    if (it == planes_.end()) return nullptr;
    return &it->second.cells[cell_index(channel, tech, node_index)];
}

double InterferenceTensor::power_dbm(int64_t bin, int channel, Technology tech,
                                     size_t node_index) const {
    const Cell* cell = find_cell(bin, channel, tech, node_index);
    if (cell == nullptr || cell->bursts == 0) return std::nan("");
    double lin = 0.0;
    uint64_t count = 0;
    for (const auto& [dbm, c] : cell->power_hist) {
        lin += static_cast<double>(c) * db_to_linear(dbm);
        count += c;
    }
    return linear_to_db(lin / static_cast<double>(count));
}

double InterferenceTensor::busy_fraction(int64_t bin, int channel, Technology tech,
                                         size_t node_index) const {
    if (reports_in_bin(bin, node_index) == 0) return std::nan("");
    const Cell* cell = find_cell(bin, channel, tech, node_index);
    const uint64_t busy_x256 = cell != nullptr ? cell->busy_x256 : 0;
    return static_cast<double>(busy_x256) * 256.0 /
           (static_cast<double>(observation_us_) * static_cast<double>(scans_per_bin_));
}

int64_t InterferenceTensor::burst_count(int64_t bin, int channel, Technology tech,
                                        size_t node_index) const {
    const Cell* cell = find_cell(bin, channel, tech, node_index);
    return cell != nullptr ? cell->bursts : 0;
}

uint32_t InterferenceTensor::reports_in_bin(int64_t bin, size_t node_index) const {
    auto it = planes_.find(bin);
    if (it == planes_.end()) return 0;
    return it->second.node_reports[node_index];
}

std::vector<int64_t> InterferenceTensor::bins() const {
    std::vector<int64_t> out;
    out.reserve(planes_.size());
    for (const auto& [bin, plane] : planes_) out.push_back(bin);
    return out;
}

double InterferenceTensor::pooled_power_dbm(int64_t bin_lo, int64_t bin_hi,
                                            std::span<const int> channels, Technology tech,
                                            size_t node_index) const {
    double lin = 0.0;
    uint64_t count = 0;
    for (auto it = planes_.lower_bound(bin_lo); it != planes_.end() && it->first < bin_hi; ++it) {
        for (int ch : channels) {
            const Cell& cell = it->second.cells[cell_index(ch, tech, node_index)];
            for (const auto& [dbm, c] : cell.power_hist) {
                lin += static_cast<double>(c) * db_to_linear(dbm);
                count += c;
            }
        }
    }
    if (count == 0) return std::nan("");
    return linear_to_db(lin / static_cast<double>(count));
}

GridSpec GridSpec::cover(double width_m, double height_m, double cell_m) {
    if (width_m <= 0.0 || height_m <= 0.0 || cell_m <= 0.0) {
        throw ConfigError("grid: area and cell size must be positive");
    }
    GridSpec g;
    g.cell_m = cell_m;
    g.nx = static_cast<int>(std::ceil(width_m / cell_m));
    g.ny = static_cast<int>(std::ceil(height_m / cell_m));
    return g;
}

namespace {

double cross(const Position& o, const Position& a, const Position& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone-chain convex hull, counter-clockwise.
std::vector<Position> convex_hull(std::vector<Position> pts) {
    std::sort(pts.begin(), pts.end(), [](const Position& a, const Position& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    const size_t n = pts.size();
    std::vector<Position> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

NaturalNeighbor::NaturalNeighbor(std::vector<Position> sites, const GridSpec& grid, double refine)
    : sites_(std::move(sites)) {
    if (sites_.size() < 3) {
        throw DataError("interpolation needs >= 3 non-collinear nodes; "
                        "use nearest-neighbor-only mode");
    }
    hull_ = convex_hull(sites_);
    if (hull_.size() < 3) {
        throw DataError("interpolation needs >= 3 non-collinear nodes; "
                        "use nearest-neighbor-only mode");
    }

    // Raster covers the grid plus a margin so stolen Voronoi regions of
    // queries near the hull edge stay inside the counted area.
    px_ = grid.cell_m / refine;
    const double width = grid.nx * grid.cell_m;
    const double height = grid.ny * grid.cell_m;
    const double margin = 0.25 * std::max(width, height) + 2.0;
    raster_x0_ = grid.origin_x - margin;
    raster_y0_ = grid.origin_y - margin;
    raster_nx_ = static_cast<int>(std::ceil((width + 2.0 * margin) / px_));
    raster_ny_ = static_cast<int>(std::ceil((height + 2.0 * margin) / px_));

    owner_.resize(static_cast<size_t>(raster_nx_) * raster_ny_);
    owner_d2_.resize(owner_.size());
    for (int iy = 0; iy < raster_ny_; ++iy) {
        const double y = raster_y0_ + (iy + 0.5) * px_;
        for (int ix = 0; ix < raster_nx_; ++ix) {
            const double x = raster_x0_ + (ix + 0.5) * px_;
            size_t best = 0;
            double best_d2 = std::numeric_limits<double>::max();
            for (size_t s = 0; s < sites_.size(); ++s) {
                const double dx = x - sites_[s].x;
                const double dy = y - sites_[s].y;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = s;
                }
            }
            const size_t at = static_cast<size_t>(iy) * raster_nx_ + ix;
            owner_[at] = static_cast<uint16_t>(best);
            owner_d2_[at] = best_d2;
        }
    }
}

bool NaturalNeighbor::inside_hull(Position q) const {
    for (size_t i = 0; i < hull_.size(); ++i) {
        const Position& a = hull_[i];
        const Position& b = hull_[(i + 1) % hull_.size()];
        if (cross(a, b, q) < -1e-12) return false;
    }
    return true;
}

size_t NaturalNeighbor::nearest_site(Position q) const {
    size_t best = 0;
    double best_d2 = std::numeric_limits<double>::max();
    for (size_t s = 0; s < sites_.size(); ++s) {
        const double dx = q.x - sites_[s].x;
        const double dy = q.y - sites_[s].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = s;
        }
    }
    return best;
}

double NaturalNeighbor::interpolate(Position q, std::span<const double> values) const {
    const size_t nearest = nearest_site(q);
    {
        const double dx = q.x - sites_[nearest].x;
        const double dy = q.y - sites_[nearest].y;
        // Exact reproduction at measurement points.
        if (dx * dx + dy * dy < 1e-18) return values[nearest];
    }
    if (!inside_hull(q)) return values[nearest];

    // Count raster pixels the inserted query would steal from each site.
    std::vector<double> stolen(sites_.size(), 0.0);
    double total = 0.0;
    for (int iy = 0; iy < raster_ny_; ++iy) {
        const double y = raster_y0_ + (iy + 0.5) * px_;
        const double dy = y - q.y;
        for (int ix = 0; ix < raster_nx_; ++ix) {
            const double x = raster_x0_ + (ix + 0.5) * px_;
            const double dx = x - q.x;
            const double d2 = dx * dx + dy * dy;
            const size_t at = static_cast<size_t>(iy) * raster_nx_ + ix;
            if (d2 < owner_d2_[at]) {
                stolen[owner_[at]] += 1.0;
                total += 1.0;
            }
        }
    }
    if (total == 0.0) return values[nearest];
    double acc = 0.0;
    for (size_t s = 0; s < sites_.size(); ++s) acc += stolen[s] * values[s];
    return acc / total;
}

SpatialMap natural_neighbor(const std::vector<Position>& sites, const std::vector<double>& values,
                            const GridSpec& grid, double refine) {
    if (sites.size() != values.size()) throw ConfigError("interpolation: sites/values mismatch");
    NaturalNeighbor nn(sites, grid, refine);
    SpatialMap map;
    map.grid = grid;
    map.values.resize(static_cast<size_t>(grid.nx) * grid.ny);
    map.mask.resize(map.values.size());
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Position q = grid.cell_center(ix, iy);
            map.at(ix, iy) = nn.interpolate(q, values);
            map.mask[static_cast<size_t>(iy) * grid.nx + ix] = nn.inside_hull(q) ? 0 : 1;
        }
    }
    return map;
}

std::pair<int, int> map_argmax(const SpatialMap& map) {
    int best_ix = -1, best_iy = -1;
    double best = -std::numeric_limits<double>::max();
    for (int iy = 0; iy < map.grid.ny; ++iy) {
        for (int ix = 0; ix < map.grid.nx; ++ix) {
            if (map.mask[static_cast<size_t>(iy) * map.grid.nx + ix]) continue;
            if (map.at(ix, iy) > best) {
                best = map.at(ix, iy);
                best_ix = ix;
                best_iy = iy;
            }
        }
    }
    if (best_ix < 0) throw DataError("map_argmax: map has no in-hull cells");
    return {best_ix, best_iy};
}

SpatialMap power_map(const InterferenceTensor& tensor, Technology tech, int64_t bin_lo,
                     int64_t bin_hi, std::span<const int> channels, const GridSpec& grid,
                     double refine) {
    std::vector<int> all_channels;
    if (channels.empty()) {
        for (int c = 0; c < 16; ++c) all_channels.push_back(c);
        channels = all_channels;
    }
    std::vector<Position> sites;
    std::vector<double> linear_values;
    for (size_t i = 0; i < tensor.registry().size(); ++i) {
        const double dbm = tensor.pooled_power_dbm(bin_lo, bin_hi, channels, tech, i);
        if (std::isnan(dbm)) continue;
        sites.push_back(tensor.registry().nodes[i].second);
        linear_values.push_back(db_to_linear(dbm));
    }
    if (sites.empty()) throw DataError("power_map: no data in window");

    SpatialMap map = natural_neighbor(sites, linear_values, grid, refine);
    for (double& v : map.values) v = linear_to_db(v);
    return map;
}

Spectrogram spectrogram(const InterferenceTensor& tensor, int node_id, Technology tech) {
    const size_t node_index = tensor.registry().index_of(node_id);
    Spectrogram sg;
    sg.bins = tensor.bins();
    for (int64_t bin : sg.bins) {
        std::array<double, 16> power{};
        std::array<double, 16> busy{};
        for (int ch = 0; ch < 16; ++ch) {
            power[ch] = tensor.power_dbm(bin, ch, tech, node_index);
            busy[ch] = tensor.busy_fraction(bin, ch, tech, node_index);
        }
        sg.power_dbm.push_back(power);
        sg.busy_fraction.push_back(busy);
    }
    return sg;
}

void write_tensor_csv(const InterferenceTensor& tensor, std::ostream& out) {
    out << "bin,channel,tech,node,power_dbm,busy_frac\n";
    for (int64_t bin : tensor.bins()) {
        for (int ch = 0; ch < 16; ++ch) {
            for (auto tech : kAllTechnologies) {
                for (size_t i = 0; i < tensor.registry().size(); ++i) {
                    if (tensor.burst_count(bin, ch, tech, i) == 0) continue;
                    out << bin << ',' << ch << ',' << to_string(tech) << ','
                        << tensor.registry().nodes[i].first << ','
                        << format_double(tensor.power_dbm(bin, ch, tech, i)) << ','
                        << format_double(tensor.busy_fraction(bin, ch, tech, i)) << '\n';
                }
            }
        }
    }
}

void write_map_csv(const SpatialMap& map, std::ostream& out) {
    for (int iy = 0; iy < map.grid.ny; ++iy) {
        for (int ix = 0; ix < map.grid.nx; ++ix) {
            if (ix > 0) out << ',';
            out << format_double(map.at(ix, iy));
        }
        out << '\n';
    }
}

std::string map_sidecar_json(const SpatialMap& map) {
    nlohmann::json j{
        {"origin", {map.grid.origin_x, map.grid.origin_y}},
        {"cell_m", map.grid.cell_m},
        {"nx", map.grid.nx},
        {"ny", map.grid.ny},
        {"mask", map.mask},
    };
    return j.dump(2);
}

void write_map_pgm(const SpatialMap& map, std::ostream& out) {
    double lo = std::numeric_limits<double>::max();
    double hi = std::numeric_limits<double>::lowest();
    for (double v : map.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    out << "P2\n" << map.grid.nx << ' ' << map.grid.ny << "\n255\n";
    for (int iy = map.grid.ny - 1; iy >= 0; --iy) {  // north-up image
        for (int ix = 0; ix < map.grid.nx; ++ix) {
            if (ix > 0) out << ' ';
            out << static_cast<int>(std::lround(255.0 * (map.at(ix, iy) - lo) / span));
        }
        out << '\n';
    }
}

void write_spectrogram_csv(const Spectrogram& sg, bool busy, std::ostream& out) {
    out << "bin";
    for (int ch = 0; ch < 16; ++ch) out << ",ch" << ch;
    out << '\n';
    for (size_t i = 0; i < sg.bins.size(); ++i) {
        out << sg.bins[i];
        const auto& row = busy ? sg.busy_fraction[i] : sg.power_dbm[i];
        for (int ch = 0; ch < 16; ++ch) out << ',' << format_double(row[ch]);
        out << '\n';
    }
}

}  // namespace itimap
