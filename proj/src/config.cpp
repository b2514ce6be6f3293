#include "itimap/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace itimap {

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: invalid JSON: " + std::string(e.what()));
    }
    try {
        RunConfig cfg;
        std::filesystem::path scenario_path = j.at("scenario").get<std::string>();
        if (scenario_path.is_relative()) {
            scenario_path = std::filesystem::path(path).parent_path() / scenario_path;
        }
        cfg.sim.scenario = load_scenario_file(scenario_path.string());

        for (const auto& jn : j.at("nodes")) {
            cfg.sim.nodes.push_back(
                {jn.at("id").get<int>(), {jn.at("x").get<double>(), jn.at("y").get<double>()}});
        }
        if (j.contains("device")) {
            const auto& jd = j.at("device");
            cfg.sim.device.sampling_rate_hz = jd.value("sampling_rate_hz", 20000.0);
            cfg.sim.device.rbw_mhz = jd.value("rbw_mhz", 2.0);
            cfg.sim.device.noise_floor_dbm = jd.value("noise_floor_dbm", -98.0);
            cfg.sim.device.retune_dwell_us = jd.value("retune_dwell_us", 64.0);
            if (jd.contains("calibration_offset_db") &&
                !jd.at("calibration_offset_db").is_null()) {
                cfg.sim.device.calibration_offset_db =
                    jd.at("calibration_offset_db").get<double>();
            }
            if (jd.contains("sweep_offsets_mhz")) {
                cfg.sim.device.sweep_offsets_mhz =
                    jd.at("sweep_offsets_mhz").get<std::vector<double>>();
            }
        }
        const auto& js = j.at("schedule");
        cfg.sim.schedule = build_schedule(js.at("observation_time_us").get<int64_t>(),
                                          js.at("period_us").get<int64_t>());
        if (j.contains("detector")) {
            const auto& jd = j.at("detector");
            cfg.sim.detector.threshold_dbm = jd.value("threshold_dbm", -85.0);
            cfg.sim.detector.hysteresis_db = jd.value("hysteresis_db", 3.0);
            cfg.sim.detector.sweep_trigger_us = jd.value("sweep_trigger_us", 128.0);
        }
        if (j.contains("classifier")) {
            const auto& jc = j.at("classifier");
            if (jc.contains("splits")) cfg.splits = jc.at("splits").get<std::vector<int>>();
            cfg.forest_trees = jc.value("forest_trees", 30);
            cfg.forest_splits = jc.value("forest_splits", 100);
            cfg.knn_k = jc.value("knn_k", 5);
            cfg.ablate_splits = jc.value("ablate_splits", 20);
            cfg.train_fraction = jc.value("train_fraction", 0.7);
        }
        if (j.contains("map")) {
            const auto& jm = j.at("map");
            cfg.cell_m = jm.value("cell_m", 0.5);
            cfg.bin_seconds = jm.value("bin_seconds", 5.0);
            cfg.refine = jm.value("refine", 4.0);
        }
        cfg.sim.seed = j.value("seed", cfg.sim.scenario.seed);
        cfg.out_dir = j.value("out_dir", std::string("out"));
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
}

}  // namespace itimap
