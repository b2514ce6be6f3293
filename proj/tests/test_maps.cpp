#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace itimap;
using namespace itimap::test;

namespace {

InterferenceReport random_report(Rng& rng) {
    InterferenceReport r;
    r.node_id = static_cast<uint16_t>(rng.uniform_int(0x10000));
    r.scan_seq = static_cast<uint16_t>(rng.uniform_int(0x10000));
    r.scan_start_ms = static_cast<uint32_t>(rng.uniform_int(0x100000000ULL));
    const size_t n = rng.uniform_int(kReportCapacity + 1);
    r.overflow = rng.uniform01() < 0.1;
    // draw unique (channel, tech) keys
    std::vector<int> keys;
    for (int k = 0; k < 16 * kTechnologyCount; ++k) keys.push_back(k);
    for (size_t i = 0; i < n; ++i) {
        const size_t j = i + rng.uniform_int(keys.size() - i);
        std::swap(keys[i], keys[j]);
    }
    keys.resize(n);
    std::sort(keys.begin(), keys.end());
    for (int key : keys) {
        ReportEntry e;
        e.channel = static_cast<uint8_t>(key / kTechnologyCount);
        e.tech = static_cast<Technology>(key % kTechnologyCount);
        e.burst_count = static_cast<uint16_t>(rng.uniform_int(0x10000));
        e.mean_power_dbm = static_cast<int8_t>(-100 + static_cast<int>(rng.uniform_int(101)));
        e.busy_x256us = static_cast<uint8_t>(rng.uniform_int(256));
        r.entries.push_back(e);
    }
    return r;
}

bool reports_equal(const InterferenceReport& a, const InterferenceReport& b) {
    if (a.node_id != b.node_id || a.scan_seq != b.scan_seq ||
        a.scan_start_ms != b.scan_start_ms || a.overflow != b.overflow ||
        a.entries.size() != b.entries.size()) {
        return false;
    }
    for (size_t i = 0; i < a.entries.size(); ++i) {
        const auto& x = a.entries[i];
        const auto& y = b.entries[i];
        if (x.channel != y.channel || x.tech != y.tech || x.burst_count != y.burst_count ||
            x.mean_power_dbm != y.mean_power_dbm || x.busy_x256us != y.busy_x256us) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("report building") {
    const auto schedule = build_schedule(50'000, 5'000'000);

    SUBCASE("no bursts: header-only report of exactly 12 bytes") {
        const auto report = build_report({}, schedule, 3, 0, 0);
        CHECK(report.entries.empty());
        CHECK_FALSE(report.overflow);
        CHECK(encode_report(report).size() == 12);
    }

    SUBCASE("single burst maps to a single entry") {
        const auto report =
            build_report({{3, Technology::Wlan11g, -60.0, 1000.0}}, schedule, 7, 2, 10'000'000);
        REQUIRE(report.entries.size() == 1);
        const auto& e = report.entries[0];
        CHECK(e.channel == 3);
        CHECK(e.tech == Technology::Wlan11g);
        CHECK(e.burst_count == 1);
        CHECK(e.mean_power_dbm == -60);
        CHECK(e.busy_x256us == 4);  // round(1000 / 256)
        CHECK(report.scan_start_ms == 10'000);
    }

    SUBCASE("mean power is averaged in the linear domain") {
        const auto report = build_report({{0, Technology::Wlan11g, -60.0, 500.0},
                                          {0, Technology::Wlan11g, -70.0, 500.0}},
                                         schedule, 1, 0, 0);
        REQUIRE(report.entries.size() == 1);
        CHECK(report.entries[0].mean_power_dbm == -63);  // 10log10((1e-6+1e-7)/2) = -62.6
        CHECK(report.entries[0].burst_count == 2);
    }

    SUBCASE("per-entry busy time never exceeds the observation window") {
        std::vector<ClassifiedBurst> bursts;
        for (int i = 0; i < 30; ++i) bursts.push_back({5, Technology::Wlan11b, -50.0, 4000.0});
        const auto report = build_report(bursts, schedule, 1, 0, 0);
        REQUIRE(report.entries.size() == 1);
        CHECK(report.entries[0].busy_us() <= schedule.observation_time_us);
    }

    SUBCASE("capacity overflow keeps the highest busy-time entries") {
        std::vector<ClassifiedBurst> bursts;
        for (int i = 0; i < 40; ++i) {
            // 40 distinct (channel, tech) cells with increasing busy time
            bursts.push_back({i % 16, static_cast<Technology>(i % kTechnologyCount), -60.0,
                              100.0 * (i + 1)});
        }
        const auto report = build_report(bursts, schedule, 1, 0, 0);
        CHECK(report.entries.size() == kReportCapacity);
        CHECK(report.overflow);
        CHECK(encode_report(report).size() == kReportMaxBytes);
        for (const auto& e : report.entries) {
            CHECK(e.busy_us() >= 256 * 9);  // the 15 largest of 40 survived
        }
        // canonical order
        for (size_t i = 1; i < report.entries.size(); ++i) {
            const auto& a = report.entries[i - 1];
            const auto& b = report.entries[i];
            CHECK((a.channel < b.channel || (a.channel == b.channel && a.tech < b.tech)));
        }
    }
}

TEST_CASE("report codec round-trip and rejection") {
    SUBCASE("decode(encode(r)) is the identity over valid reports") {
        Rng rng(2024);
        for (int i = 0; i < 1000; ++i) {
            const auto report = random_report(rng);
            const auto bytes = encode_report(report);
            CHECK(bytes.size() <= kReportMaxBytes);
            CHECK(bytes.size() == kReportHeaderBytes + kReportEntryBytes * report.entries.size());
            const auto back = decode_report(bytes);
            CHECK(reports_equal(report, back));
        }
    }

    SUBCASE("malformed inputs raise distinct errors, never crash") {
        Rng rng(7);
        const auto bytes = encode_report(random_report(rng));

        auto truncated = bytes;
        truncated.resize(bytes.size() - 1);
        CHECK_THROWS_AS(decode_report(truncated), DecodeError);
        try {
            decode_report(truncated);
        } catch (const DecodeError& e) {
            CHECK(e.kind == DecodeError::Kind::BadLength);
        }

        auto bad_magic = bytes;
        bad_magic[0] = 0x5A;
        try {
            decode_report(bad_magic);
            FAIL("expected DecodeError");
        } catch (const DecodeError& e) {
            CHECK(e.kind == DecodeError::Kind::BadMagic);
        }

        // channel out of range
        InterferenceReport r;
        r.entries.push_back({3, Technology::Ble, 1, -60, 10});
        auto field = encode_report(r);
        field[12] = 16;
        try {
            decode_report(field);
            FAIL("expected DecodeError");
        } catch (const DecodeError& e) {
            CHECK(e.kind == DecodeError::Kind::BadField);
        }

        // power above 0 dBm
        field = encode_report(r);
        field[16] = static_cast<uint8_t>(5);
        CHECK_THROWS_AS(decode_report(field), DecodeError);

        // duplicate (channel, tech)
        InterferenceReport dup;
        dup.entries.push_back({3, Technology::Ble, 1, -60, 10});
        dup.entries.push_back({3, Technology::Ble, 2, -61, 11});
        CHECK_THROWS_AS(decode_report(encode_report(dup)), DecodeError);

        CHECK_THROWS_AS(decode_report(std::vector<uint8_t>{}), DecodeError);
    }

    SUBCASE("stream decoding walks back-to-back reports") {
        Rng rng(5);
        std::vector<InterferenceReport> reports;
        std::vector<uint8_t> stream;
        for (int i = 0; i < 20; ++i) {
            reports.push_back(random_report(rng));
            const auto bytes = encode_report(reports.back());
            stream.insert(stream.end(), bytes.begin(), bytes.end());
        }
        const auto parsed = decode_report_stream(stream);
        REQUIRE(parsed.size() == reports.size());
        for (size_t i = 0; i < parsed.size(); ++i) CHECK(reports_equal(parsed[i], reports[i]));

        stream.pop_back();
        CHECK_THROWS_AS(decode_report_stream(stream), DecodeError);
    }

    SUBCASE("report json mirrors the wire content") {
        Rng rng(6);
        const auto report = random_report(rng);
        const auto back = report_from_json(report_to_json(report));
        CHECK(reports_equal(report, back));
    }
}

TEST_CASE("tensor accumulation") {
    const auto schedule = build_schedule(50'000, 5'000'000);
    NodeRegistry registry;
    registry.add(1, {0.0, 0.0});
    registry.add(2, {5.0, 0.0});
    registry.add(3, {0.0, 5.0});

    auto entry = [](int ch, Technology t, uint16_t n, int8_t p, uint8_t busy) {
        ReportEntry e;
        e.channel = static_cast<uint8_t>(ch);
        e.tech = t;
        e.burst_count = n;
        e.mean_power_dbm = p;
        e.busy_x256us = busy;
        return e;
    };
    auto report = [](int node, uint32_t ms, std::vector<ReportEntry> entries) {
        InterferenceReport r;
        r.node_id = static_cast<uint16_t>(node);
        r.scan_start_ms = ms;
        r.entries = std::move(entries);
        return r;
    };

    SUBCASE("equal powers render unchanged") {
        InterferenceTensor t(10'000'000, schedule, registry);  // two scans per bin
        t.accumulate(report(1, 0, {entry(4, Technology::Wlan11g, 1, -60, 100)}));
        t.accumulate(report(1, 5000, {entry(4, Technology::Wlan11g, 1, -60, 100)}));
        CHECK(t.power_dbm(0, 4, Technology::Wlan11g, 0) == doctest::Approx(-60.0));
    }

    SUBCASE("unequal powers average in the linear domain") {
        InterferenceTensor t(10'000'000, schedule, registry);
        t.accumulate(report(1, 0, {entry(4, Technology::Wlan11g, 1, -60, 100)}));
        t.accumulate(report(1, 5000, {entry(4, Technology::Wlan11g, 1, -70, 100)}));
        CHECK(t.power_dbm(0, 4, Technology::Wlan11g, 0) == doctest::Approx(-62.596).epsilon(1e-3));
    }

    SUBCASE("empty report leaves every cell unchanged but marks the scan") {
        InterferenceTensor t(5'000'000, schedule, registry);
        t.accumulate(report(2, 0, {}));
        CHECK(t.reports_in_bin(0, 1) == 1);
        CHECK(std::isnan(t.power_dbm(0, 4, Technology::Wlan11g, 1)));
        CHECK(t.busy_fraction(0, 4, Technology::Wlan11g, 1) == 0.0);
    }

    SUBCASE("unknown node is rejected") {
        InterferenceTensor t(5'000'000, schedule, registry);
        CHECK_THROWS_AS(t.accumulate(report(99, 0, {})), DataError);
    }

    SUBCASE("bin width must be a multiple of the period") {
        CHECK_THROWS_AS(InterferenceTensor(7'000'000, schedule, registry), ConfigError);
        CHECK_THROWS_AS(InterferenceTensor(1'000'000, schedule, registry), ConfigError);
    }

    SUBCASE("accumulation is order-independent, bit for bit") {
        Rng rng(77);
        std::vector<InterferenceReport> reports;
        for (int i = 0; i < 60; ++i) {
            auto r = random_report(rng);
            r.node_id = static_cast<uint16_t>(1 + rng.uniform_int(3));
            r.scan_start_ms = static_cast<uint32_t>(rng.uniform_int(12) * 5000);
            reports.push_back(r);
        }
        InterferenceTensor fwd(20'000'000, schedule, registry);
        for (const auto& r : reports) fwd.accumulate(r);
        InterferenceTensor rev(20'000'000, schedule, registry);
        for (auto it = reports.rbegin(); it != reports.rend(); ++it) rev.accumulate(*it);

        for (int64_t bin : fwd.bins()) {
            for (int ch = 0; ch < 16; ++ch) {
                for (auto tech : kAllTechnologies) {
                    for (size_t n = 0; n < registry.size(); ++n) {
                        const double pf = fwd.power_dbm(bin, ch, tech, n);
                        const double pr = rev.power_dbm(bin, ch, tech, n);
                        CHECK(((std::isnan(pf) && std::isnan(pr)) || pf == pr));
                        CHECK(fwd.busy_fraction(bin, ch, tech, n) ==
                              rev.busy_fraction(bin, ch, tech, n));
                        CHECK(fwd.burst_count(bin, ch, tech, n) ==
                              rev.burst_count(bin, ch, tech, n));
                    }
                }
            }
        }
    }

    SUBCASE("busy fractions stay in [0, 1] for conforming reports") {
        InterferenceTensor t(5'000'000, schedule, registry);
        // busy at the wire cap: 195 * 256 us = 49.92 ms of a 50 ms window
        t.accumulate(report(1, 0, {entry(0, Technology::Bt802151, 40, -55, 195)}));
        const double busy = t.busy_fraction(0, 0, Technology::Bt802151, 0);
        CHECK(busy >= 0.0);
        CHECK(busy <= 1.0);
    }
}

TEST_CASE("natural-neighbor interpolation") {
    const std::vector<Position> corners = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    const std::vector<double> values = {10.0, 20.0, 30.0, 40.0};
    const auto grid = GridSpec::cover(1.0, 1.0, 0.25);

    SUBCASE("reproduces node values exactly at node positions") {
        NaturalNeighbor nn(corners, grid, 4.0);
        for (size_t i = 0; i < corners.size(); ++i) {
            CHECK(nn.interpolate(corners[i], values) == values[i]);
        }
    }

    SUBCASE("constant field reproduced everywhere in-hull") {
        const std::vector<double> constant = {7.5, 7.5, 7.5, 7.5};
        const auto map = natural_neighbor(corners, constant, grid, 4.0);
        for (int iy = 0; iy < grid.ny; ++iy) {
            for (int ix = 0; ix < grid.nx; ++ix) {
                if (map.mask[static_cast<size_t>(iy) * grid.nx + ix]) continue;
                CHECK(map.at(ix, iy) == doctest::Approx(7.5).epsilon(1e-12));
            }
        }
    }

    SUBCASE("unit-square centre equals the 4-corner mean, checked twice") {
        NaturalNeighbor nn(corners, grid, 4.0);
        const double centre = nn.interpolate({0.5, 0.5}, values);
        CHECK(centre == doctest::Approx(25.0).epsilon(0.01));
        const double oracle = sibson_pixel_oracle(corners, values, {0.5, 0.5}, 0.01);
        CHECK(centre == doctest::Approx(oracle).epsilon(0.01));
    }

    SUBCASE("asymmetric query agrees with the refined-raster oracle") {
        NaturalNeighbor nn(corners, grid, 8.0);
        const Position q{0.3, 0.65};
        const double mine = nn.interpolate(q, values);
        const double oracle = sibson_pixel_oracle(corners, values, q, 0.005);
        CHECK(mine == doctest::Approx(oracle).epsilon(0.02));
    }

    SUBCASE("in-hull values bounded by node extremes; weights sum to one") {
        Rng rng(3);
        std::vector<Position> sites;
        std::vector<double> vals;
        for (int i = 0; i < 9; ++i) {
            sites.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
            vals.push_back(rng.uniform(-80.0, -40.0));
        }
        const auto g = GridSpec::cover(10.0, 10.0, 0.5);
        const auto map = natural_neighbor(sites, vals, g, 4.0);
        const double lo = *std::min_element(vals.begin(), vals.end());
        const double hi = *std::max_element(vals.begin(), vals.end());
        for (double v : map.values) {
            CHECK(v >= lo - 1e-9);
            CHECK(v <= hi + 1e-9);
        }
    }

    SUBCASE("outside the hull falls back to nearest neighbor and sets the mask") {
        const std::vector<Position> tri = {{2, 2}, {8, 2}, {5, 8}};
        const std::vector<double> tv = {1.0, 2.0, 3.0};
        const auto g = GridSpec::cover(10.0, 10.0, 0.5);
        const auto map = natural_neighbor(tri, tv, g, 4.0);
        const size_t corner_cell = 0;  // (0.25, 0.25), far outside the triangle
        CHECK(map.mask[corner_cell] == 1);
        CHECK(map.values[corner_cell] == 1.0);  // nearest node is (2,2)
        bool has_unmasked = false;
        for (uint8_t m : map.mask) has_unmasked |= (m == 0);
        CHECK(has_unmasked);
    }

    SUBCASE("fewer than 3 non-collinear nodes is an error") {
        const auto g = GridSpec::cover(10.0, 10.0, 0.5);
        CHECK_THROWS_AS(natural_neighbor({{0, 0}, {1, 1}}, {1.0, 2.0}, g, 4.0), DataError);
        CHECK_THROWS_AS(
            natural_neighbor({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, {1.0, 2.0, 3.0, 4.0}, g, 4.0),
            DataError);
    }
}

TEST_CASE("power maps and spectrograms from the tensor") {
    const auto schedule = build_schedule(50'000, 5'000'000);
    NodeRegistry registry;
    registry.add(1, {1.0, 1.0});
    registry.add(2, {9.0, 1.0});
    registry.add(3, {5.0, 9.0});
    const auto grid = GridSpec::cover(10.0, 10.0, 0.5);

    auto make_report = [](int node, uint32_t ms, int ch, Technology tech, int8_t p, uint8_t busy) {
        InterferenceReport r;
        r.node_id = static_cast<uint16_t>(node);
        r.scan_start_ms = ms;
        ReportEntry e;
        e.channel = static_cast<uint8_t>(ch);
        e.tech = tech;
        e.burst_count = 1;
        e.mean_power_dbm = p;
        e.busy_x256us = busy;
        r.entries.push_back(e);
        return r;
    };

    SUBCASE("power map needs data and three populated nodes") {
        InterferenceTensor t(5'000'000, schedule, registry);
        CHECK_THROWS_AS(power_map(t, Technology::Ble, 0, 10, {}, grid), DataError);
        t.accumulate(make_report(1, 0, 4, Technology::Wlan11g, -50, 50));
        CHECK_THROWS_AS(power_map(t, Technology::Wlan11g, 0, 10, {}, grid), DataError);
    }

    SUBCASE("map peak sits at the strongest node") {
        InterferenceTensor t(5'000'000, schedule, registry);
        t.accumulate(make_report(1, 0, 4, Technology::Wlan11g, -40, 50));
        t.accumulate(make_report(2, 0, 4, Technology::Wlan11g, -70, 50));
        t.accumulate(make_report(3, 0, 4, Technology::Wlan11g, -70, 50));
        const auto map = power_map(t, Technology::Wlan11g, 0, 1, {}, grid);
        const auto [best_ix, best_iy] = map_argmax(map);
        const Position peak = grid.cell_center(best_ix, best_iy);
        CHECK(distance_m(peak, {1.0, 1.0}) < 1.5);
    }

    SUBCASE("spectrogram slices the tensor with no-data sentinels") {
        InterferenceTensor t(5'000'000, schedule, registry);
        t.accumulate(make_report(1, 0, 4, Technology::Wlan11g, -55, 100));
        const auto sg = spectrogram(t, 1, Technology::Wlan11g);
        REQUIRE(sg.bins.size() == 1);
        int populated = 0;
        for (int ch = 0; ch < 16; ++ch) {
            if (!std::isnan(sg.power_dbm[0][ch])) ++populated;
            const double busy = sg.busy_fraction[0][ch];
            if (!std::isnan(busy)) {
                CHECK(busy >= 0.0);
                CHECK(busy <= 1.0);
            }
        }
        CHECK(populated == 1);
        CHECK(sg.power_dbm[0][4] == doctest::Approx(-55.0));

        CHECK_THROWS_AS(spectrogram(t, 42, Technology::Wlan11g), DataError);
    }

    SUBCASE("csv and pgm writers emit well-formed output") {
        InterferenceTensor t(5'000'000, schedule, registry);
        t.accumulate(make_report(1, 0, 4, Technology::Wlan11g, -40, 50));
        t.accumulate(make_report(2, 0, 4, Technology::Wlan11g, -70, 50));
        t.accumulate(make_report(3, 0, 4, Technology::Wlan11g, -70, 50));
        std::ostringstream tensor_csv;
        write_tensor_csv(t, tensor_csv);
        CHECK(tensor_csv.str().starts_with("bin,channel,tech,node,power_dbm,busy_frac\n"));
        CHECK(tensor_csv.str().find("Wlan11g") != std::string::npos);

        const auto map = power_map(t, Technology::Wlan11g, 0, 1, {}, grid);
        std::ostringstream map_csv, pgm;
        write_map_csv(map, map_csv);
        write_map_pgm(map, pgm);
        CHECK(pgm.str().starts_with("P2\n20 20\n255\n"));
        const auto sidecar = map_sidecar_json(map);
        CHECK(sidecar.find("\"cell_m\"") != std::string::npos);

        const auto sg = spectrogram(t, 1, Technology::Wlan11g);
        std::ostringstream sg_csv;
        write_spectrogram_csv(sg, true, sg_csv);
        CHECK(sg_csv.str().starts_with("bin,ch0,ch1"));
    }
}
