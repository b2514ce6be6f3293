#include "itimap/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace itimap {

double Distribution::sample(Rng& rng) const {
    switch (kind) {
        case Kind::Fixed:
            return a;
        case Kind::Uniform:
            return rng.uniform(a, b);
        case Kind::LogUniform:
            return rng.log_uniform(a, b);
        case Kind::Exponential:
            return rng.exponential(a);
    }
    return a;
}

void Distribution::validate(const std::string& what) const {
    const bool ranged = kind == Kind::Uniform || kind == Kind::LogUniform;
    if (a <= 0.0 || (ranged && (b <= 0.0 || b < a))) {
        throw ConfigError(what + ": distribution parameters must be positive");
    }
}

void EmitterSpec::validate() const {
    std::ostringstream id_tag;
    id_tag << "emitter " << id;
    const std::string tag = id_tag.str();

    if (tx_dbm < -30.0 || tx_dbm > 30.0) {
        throw ConfigError(tag + ": tx_dbm outside [-30, 30]");
    }
    if (band.bandwidth_mhz <= 0.0) {
        throw ConfigError(tag + ": bandwidth must be > 0");
    }
    if (band.centers_mhz.empty()) {
        throw ConfigError(tag + ": band has no center frequency");
    }
    for (double c : band.centers_mhz) {
        if (c - band.bandwidth_mhz / 2.0 < kBandLowMhz ||
            c + band.bandwidth_mhz / 2.0 > kBandHighMhz) {
            throw ConfigError(tag + ": occupied band exceeds 2400-2485 MHz");
        }
    }
    if (traffic.slotted()) {
        if (traffic.slot_us <= 0.0 || traffic.air_time_us <= 0.0 ||
            traffic.air_time_us > traffic.slot_us) {
            throw ConfigError(tag + ": slotted traffic needs 0 < air_time <= slot");
        }
        if (traffic.activity < 0.0 || traffic.activity > 1.0) {
            throw ConfigError(tag + ": activity outside [0, 1]");
        }
    } else {
        traffic.duration_us.validate(tag + " duration");
        traffic.gap_us.validate(tag + " gap");
        if (traffic.min_gap_us < 0.0) {
            throw ConfigError(tag + ": min_gap_us must be >= 0");
        }
    }
}

const EmitterSpec& Scenario::emitter_by_id(int id) const {
    for (const auto& e : emitters) {
        if (e.id == id) return e;
    }
    throw DataError("unknown emitter id " + std::to_string(id));
}

std::pair<size_t, size_t> BurstLedger::overlap_range(int64_t a, int64_t b) const {
    const int64_t lo_start = a - max_duration_us;
    auto lo = std::lower_bound(events.begin(), events.end(), lo_start,
                               [](const BurstEvent& e, int64_t t) { return e.t_start_us < t; });
    auto hi = std::lower_bound(lo, events.end(), b,
                               [](const BurstEvent& e, int64_t t) { return e.t_start_us < t; });
    return {static_cast<size_t>(lo - events.begin()), static_cast<size_t>(hi - events.begin())};
}

namespace {

void generate_emitter(const EmitterSpec& em, int64_t horizon_us, uint64_t seed,
                      std::vector<BurstEvent>& out) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(em.id)));
    const auto& tr = em.traffic;
    const double t_end =
        std::min<double>(static_cast<double>(horizon_us),
                         tr.active_until_us.value_or(static_cast<double>(horizon_us)));

    auto pick_center = [&](Rng& r) {
        if (!em.band.hopping()) return em.band.centers_mhz.front();
        return em.band.centers_mhz[r.uniform_int(em.band.centers_mhz.size())];
    };

    auto push = [&](double t, double dur, double center) {
        const int64_t start = std::llround(t);
        int64_t d = std::max<int64_t>(1, std::llround(dur));
        if (start >= horizon_us) return;
        d = std::min(d, horizon_us - start);
        out.push_back({em.id, em.tech, start, d, center, em.band.bandwidth_mhz, em.tx_dbm});
    };

    if (tr.slotted()) {
        const int64_t first_slot =
            static_cast<int64_t>(std::ceil(tr.active_from_us / tr.slot_us));
        for (int64_t k = first_slot;; ++k) {
            const double t = static_cast<double>(k) * tr.slot_us;
            if (t >= t_end) break;
            const double u = rng.uniform01();
            if (u < tr.activity) {
                push(t, std::min(tr.air_time_us, t_end - t), pick_center(rng));
            }
        }
    } else {
        double t = tr.active_from_us + std::max(tr.gap_us.sample(rng), tr.min_gap_us);
        while (t < t_end) {
            const double dur = std::max(1.0, tr.duration_us.sample(rng));
            push(t, std::min(dur, t_end - t), pick_center(rng));
            t += dur + std::max(tr.gap_us.sample(rng), tr.min_gap_us);
        }
    }
}

}  // namespace

BurstLedger generate_ledger(const Scenario& scenario, int64_t horizon_us, uint64_t seed) {
    if (horizon_us <= 0) throw ConfigError("horizon must be > 0");
    for (const auto& em : scenario.emitters) em.validate();

    BurstLedger ledger;
    ledger.horizon_us = horizon_us;
    for (const auto& em : scenario.emitters) {
        generate_emitter(em, horizon_us, seed, ledger.events);
    }
    std::stable_sort(ledger.events.begin(), ledger.events.end(),
                     [](const BurstEvent& a, const BurstEvent& b) {
                         if (a.t_start_us != b.t_start_us) return a.t_start_us < b.t_start_us;
                         return a.emitter_id < b.emitter_id;
                     });
    for (const auto& e : ledger.events) {
        ledger.max_duration_us = std::max(ledger.max_duration_us, e.duration_us);
    }
    return ledger;
}

double path_loss_db(const PathLossModel& pl, double d_m) {
    const double d = std::max(d_m, pl.d0_m);
    return pl.pl0_db + 10.0 * pl.exponent * std::log10(d / pl.d0_m);
}

double received_power_dbm(const BurstEvent& burst, const Position& rx,
                          const Position& emitter_pos, const PathLossModel& pl) {
    return burst.tx_dbm - path_loss_db(pl, distance_m(rx, emitter_pos));
}

double link_shadow_db(const Scenario& scenario, int emitter_id, int node_id) {
    if (scenario.pathloss.shadow_sigma_db <= 0.0) return 0.0;
    Rng rng(derive_seed(scenario.seed ^ 0x5ad0ULL, static_cast<uint64_t>(emitter_id),
                        static_cast<uint64_t>(node_id)));
    return rng.normal(0.0, scenario.pathloss.shadow_sigma_db);
}

namespace {

using nlohmann::json;

Distribution parse_distribution(const json& j, const std::string& what) {
    Distribution d;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "fixed") {
        d.kind = Distribution::Kind::Fixed;
        d.a = j.at("value").get<double>();
    } else if (kind == "uniform" || kind == "loguniform") {
        d.kind = kind == "uniform" ? Distribution::Kind::Uniform : Distribution::Kind::LogUniform;
        d.a = j.at("lo").get<double>();
        d.b = j.at("hi").get<double>();
    } else if (kind == "exponential") {
        d.kind = Distribution::Kind::Exponential;
        d.a = j.at("mean").get<double>();
    } else {
        throw ConfigError(what + ": unknown distribution kind '" + kind + "'");
    }
    return d;
}

BandModel parse_band(const json& j) {
    BandModel b;
    b.bandwidth_mhz = j.at("bw_mhz").get<double>();
    if (j.contains("center_mhz")) {
        b.centers_mhz.push_back(j.at("center_mhz").get<double>());
    } else if (j.contains("hop_mhz")) {
        b.centers_mhz = j.at("hop_mhz").get<std::vector<double>>();
    } else if (j.contains("hop_start_mhz")) {
        const double start = j.at("hop_start_mhz").get<double>();
        const double step = j.at("hop_step_mhz").get<double>();
        const int count = j.at("hop_count").get<int>();
        for (int i = 0; i < count; ++i) b.centers_mhz.push_back(start + i * step);
    } else {
        throw ConfigError("band: need center_mhz, hop_mhz or hop_start_mhz");
    }
    return b;
}

TrafficModel parse_traffic(const json& j) {
    TrafficModel t;
    if (j.contains("slot_us")) {
        t.slot_us = j.at("slot_us").get<double>();
        t.air_time_us = j.at("air_time_us").get<double>();
        t.activity = j.value("activity", 1.0);
    } else {
        t.duration_us = parse_distribution(j.at("duration_us"), "duration_us");
        t.gap_us = parse_distribution(j.at("gap_us"), "gap_us");
        t.min_gap_us = j.value("min_gap_us", 0.0);
    }
    t.active_from_us = j.value("active_from_us", 0.0);
    if (j.contains("active_until_us") && !j.at("active_until_us").is_null()) {
        t.active_until_us = j.at("active_until_us").get<double>();
    }
    return t;
}

}  // namespace

Scenario load_scenario_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
    }
    try {
        Scenario s;
        s.area.width_m = j.at("area").at("width_m").get<double>();
        s.area.height_m = j.at("area").at("height_m").get<double>();
        const auto& pl = j.at("pathloss");
        s.pathloss.pl0_db = pl.at("pl0_db").get<double>();
        s.pathloss.d0_m = pl.value("d0_m", 1.0);
        s.pathloss.exponent = pl.at("exponent").get<double>();
        s.pathloss.shadow_sigma_db = pl.value("shadow_sigma_db", 0.0);
        s.seed = j.value("seed", 0ULL);
        s.horizon_us = j.at("horizon_us").get<int64_t>();
        for (const auto& je : j.at("emitters")) {
            EmitterSpec em;
            em.id = je.at("id").get<int>();
            const std::string tech = je.at("tech").get<std::string>();
            auto parsed = technology_from_string(tech);
            if (!parsed) throw ConfigError("emitter: unknown technology '" + tech + "'");
            em.tech = *parsed;
            em.position.x = je.at("position").at("x").get<double>();
            em.position.y = je.at("position").at("y").get<double>();
            em.tx_dbm = je.at("tx_dbm").get<double>();
            em.band = parse_band(je.at("band"));
            em.traffic = parse_traffic(je.at("traffic"));
            em.validate();
            s.emitters.push_back(std::move(em));
        }
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario_json(ss.str());
}

void write_ledger_csv(const BurstLedger& ledger, std::ostream& out) {
    out << "emitter_id,tech,t_start_us,duration_us,center_mhz,bw_mhz,tx_dbm\n";
    for (const auto& e : ledger.events) {
        out << e.emitter_id << ',' << to_string(e.tech) << ',' << e.t_start_us << ','
            << e.duration_us << ',' << format_double(e.center_mhz) << ','
            << format_double(e.bandwidth_mhz) << ',' << format_double(e.tx_dbm) << '\n';
    }
}

}  // namespace itimap
