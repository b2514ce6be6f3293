#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "itimap/config.hpp"

namespace fs = std::filesystem;
using namespace itimap;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    out << text;
}

std::vector<InterferenceReport> load_or_simulate_reports(const RunConfig& cfg,
                                                         const std::string& reports_path,
                                                         const ModelFile* model) {
    if (!reports_path.empty()) {
        const std::string raw = slurp(reports_path);
        const auto* bytes = reinterpret_cast<const uint8_t*>(raw.data());
        return decode_report_stream({bytes, raw.size()});
    }
    SimOptions opts;
    opts.want_dataset = false;
    opts.want_reports = true;
    if (model != nullptr) {
        opts.tech_source = TechSource::Model;
        opts.model = model;
    }
    return run_simulation(cfg.sim, opts).reports;
}

std::pair<int64_t, int64_t> bin_window(const RunConfig& cfg, const std::string& window_arg,
                                       int64_t bin_us) {
    int64_t lo = 0;
    int64_t hi = (cfg.sim.scenario.horizon_us + bin_us - 1) / bin_us;
    if (!window_arg.empty()) {
        const auto comma = window_arg.find(',');
        if (comma == std::string::npos) {
            throw ConfigError("--window expects START,END in seconds");
        }
        const double start_s = std::stod(window_arg.substr(0, comma));
        const double end_s = std::stod(window_arg.substr(comma + 1));
        if (end_s <= start_s) throw ConfigError("--window END must exceed START");
        lo = static_cast<int64_t>(start_s * 1e6) / bin_us;
        hi = static_cast<int64_t>(std::ceil(end_s * 1e6 / static_cast<double>(bin_us)));
    }
    return {lo, hi};
}

int cmd_simulate(const RunConfig& cfg, const std::string& traces_mode) {
    SimOptions opts;
    opts.traces = traces_mode == "all"    ? TraceCollect::All
                  : traces_mode == "none" ? TraceCollect::None
                                          : TraceCollect::FirstScan;
    auto result = run_simulation(cfg.sim, opts);

    fs::create_directories(fs::path(cfg.out_dir));
    {
        std::ofstream out(fs::path(cfg.out_dir) / "ledger.csv", std::ios::binary);
        write_ledger_csv(result.ledger, out);
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "dataset.csv", std::ios::binary);
        write_dataset_csv(result.dataset, out);
    }
    if (opts.traces != TraceCollect::None) {
        std::ofstream out(fs::path(cfg.out_dir) / "traces.csv", std::ios::binary);
        write_trace_csv_header(out);
        for (const auto& trace : result.traces) append_trace_csv(trace, out);
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "reports.bin", std::ios::binary);
        for (const auto& report : result.reports) {
            const auto bytes = encode_report(report);
            out.write(reinterpret_cast<const char*>(bytes.data()),
                      static_cast<std::streamsize>(bytes.size()));
        }
    }
    for (const auto& dev : result.devices) {
        write_file(fs::path(cfg.out_dir) / ("device_" + std::to_string(dev.node_id) + ".json"),
                   device_to_json(dev));
    }

    std::cout << "ledger bursts:  " << result.summary.ledger_bursts << "\n"
              << "scans:          " << result.summary.scans << " (duty cycle "
              << format_double(result.summary.duty_cycle) << ")\n"
              << "detected:       " << result.summary.detected << " (classifiable "
              << result.summary.classifiable << ", dropped " << result.summary.dropped << ")\n"
              << "dataset rows:   " << result.dataset.size() << "\n"
              << "reports:        " << result.reports.size() << "\n"
              << "output dir:     " << cfg.out_dir << "\n";
    for (const auto& w : cfg.sim.schedule.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

int cmd_train_eval(const RunConfig& cfg, const std::string& data_path) {
    const fs::path path = data_path.empty() ? fs::path(cfg.out_dir) / "dataset.csv" : fs::path(data_path);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset: " + path.string());
    Dataset all{read_dataset_csv(in)};
    if (all.class_set().size() < 2) throw DataError("train-eval: need >= 2 classes");

    auto [train, test] = split_stratified(all, cfg.train_fraction, cfg.sim.seed);
    auto rows = sweep_complexity(train, test, cfg.splits, {cfg.forest_trees}, cfg.sim.seed,
                                 cfg.knn_k, cfg.forest_splits);
    const auto [with_sf, without_sf] =
        ablate_spectral_features(train, test, cfg.ablate_splits, cfg.sim.seed);

    fs::create_directories(fs::path(cfg.out_dir));
    {
        // deterministic artifacts; wall-clock throughput goes to timing.csv
        std::ofstream out(fs::path(cfg.out_dir) / "metrics.csv", std::ios::binary);
        write_metrics_csv(rows, out, false);
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "timing.csv", std::ios::binary);
        out << "name,max_splits,n_trees,bursts_per_second\n";
        for (const auto& row : rows) {
            out << row.name << ',' << row.max_splits << ',' << row.n_trees << ','
                << format_double(row.metrics.bursts_per_second) << '\n';
        }
    }
    {
        auto j = nlohmann::json::parse(metrics_to_json(rows, false));
        nlohmann::json doc{{"rows", j},
                           {"ablation",
                            {{"max_splits", cfg.ablate_splits},
                             {"accuracy_with_sf", with_sf},
                             {"accuracy_without_sf", without_sf}}}};
        write_file(fs::path(cfg.out_dir) / "metrics.json", doc.dump(2));
    }
    write_file(fs::path(cfg.out_dir) / "model_ct.json",
               tree_to_json(train_tree(train, cfg.ablate_splits, cfg.sim.seed)));

    std::cout << "train rows: " << train.size() << "  test rows: " << test.size() << "\n";
    std::cout << "name      s  trees  accuracy  kBPS\n";
    for (const auto& row : rows) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-8s %3d  %5d  %8.4f  %8.1f\n", row.name.c_str(),
                      row.max_splits, row.n_trees, row.metrics.accuracy,
                      row.metrics.bursts_per_second / 1000.0);
        std::cout << line;
    }
    std::cout << "ablation (s=" << cfg.ablate_splits << "): with SF "
              << format_double(with_sf) << ", without SF " << format_double(without_sf) << "\n";
    return 0;
}

int cmd_map(const RunConfig& cfg, const std::string& tech_arg, const std::string& window_arg,
            const std::vector<int>& channels, double bin_seconds_arg,
            const std::string& reports_path, const std::string& model_path) {
    ModelFile model;
    const ModelFile* model_ptr = nullptr;
    if (!model_path.empty()) {
        model = model_from_json(slurp(model_path));
        model_ptr = &model;
    }
    const double bin_seconds = bin_seconds_arg > 0.0 ? bin_seconds_arg : cfg.bin_seconds;
    const int64_t bin_us = static_cast<int64_t>(std::llround(bin_seconds * 1e6));

    const auto reports = load_or_simulate_reports(cfg, reports_path, model_ptr);
    const auto registry = registry_from(cfg.sim.nodes);
    const auto tensor = tensor_from_reports(reports, bin_us, cfg.sim.schedule, registry);
    const auto [bin_lo, bin_hi] = bin_window(cfg, window_arg, bin_us);
    const auto grid =
        GridSpec::cover(cfg.sim.scenario.area.width_m, cfg.sim.scenario.area.height_m, cfg.cell_m);

    std::vector<Technology> techs;
    if (tech_arg == "all") {
        techs.assign(kAllTechnologies.begin(), kAllTechnologies.end());
    } else {
        const auto tech = technology_from_string(tech_arg);
        if (!tech) throw ConfigError("unknown technology: " + tech_arg);
        techs.push_back(*tech);
    }

    fs::create_directories(fs::path(cfg.out_dir));
    int written = 0;
    for (Technology tech : techs) {
        SpatialMap map;
        try {
            map = power_map(tensor, tech, bin_lo, bin_hi, channels, grid, cfg.refine);
        } catch (const DataError&) {
            if (tech_arg != "all") throw;  // explicit selection: propagate "no data"
            continue;
        }
        const std::string stem = "map_" + std::string(to_string(tech));
        {
            std::ofstream out(fs::path(cfg.out_dir) / (stem + ".csv"), std::ios::binary);
            write_map_csv(map, out);
        }
        write_file(fs::path(cfg.out_dir) / (stem + ".json"), map_sidecar_json(map));
        {
            std::ofstream out(fs::path(cfg.out_dir) / (stem + ".pgm"), std::ios::binary);
            write_map_pgm(map, out);
        }
        const auto [best_ix, best_iy] = map_argmax(map);
        const Position peak = map.grid.cell_center(best_ix, best_iy);
        std::cout << to_string(tech) << ": peak " << format_double(map.at(best_ix, best_iy))
                  << " dBm at (" << format_double(peak.x) << ", " << format_double(peak.y)
                  << ") -> " << (fs::path(cfg.out_dir) / stem).string() << ".{csv,json,pgm}\n";
        ++written;
    }
    if (written == 0) throw DataError("power_map: no data in window");
    return 0;
}

int cmd_spectrogram(const RunConfig& cfg, int node_id, const std::string& tech_arg,
                    double bin_seconds_arg, const std::string& reports_path) {
    const auto tech = technology_from_string(tech_arg);
    if (!tech) throw ConfigError("unknown technology: " + tech_arg);
    const double bin_seconds = bin_seconds_arg > 0.0 ? bin_seconds_arg : cfg.bin_seconds;
    const int64_t bin_us = static_cast<int64_t>(std::llround(bin_seconds * 1e6));

    const auto reports = load_or_simulate_reports(cfg, reports_path, nullptr);
    const auto registry = registry_from(cfg.sim.nodes);
    const auto tensor = tensor_from_reports(reports, bin_us, cfg.sim.schedule, registry);
    const auto sg = spectrogram(tensor, node_id, *tech);

    fs::create_directories(fs::path(cfg.out_dir));
    const std::string stem =
        "spectrogram_node" + std::to_string(node_id) + "_" + std::string(to_string(*tech));
    {
        std::ofstream out(fs::path(cfg.out_dir) / (stem + "_power.csv"), std::ios::binary);
        write_spectrogram_csv(sg, false, out);
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / (stem + "_busy.csv"), std::ios::binary);
        write_spectrogram_csv(sg, true, out);
    }
    std::cout << "spectrogram bins: " << sg.bins.size() << " -> "
              << (fs::path(cfg.out_dir) / stem).string() << "_{power,busy}.csv\n";
    return 0;
}

int cmd_codec(const std::string& json_path, const std::string& hex_path) {
    if (!json_path.empty()) {
        const auto report = report_from_json(slurp(json_path));
        const auto bytes = encode_report(report);
        char hex[3];
        for (uint8_t b : bytes) {
            std::snprintf(hex, sizeof(hex), "%02x", b);
            std::cout << hex;
        }
        std::cout << "\n";
        return 0;
    }
    std::string hex = hex_path == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                      : slurp(hex_path);
    std::erase_if(hex, [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (hex.size() % 2 != 0) throw DataError("codec: odd-length hex input");
    std::vector<uint8_t> bytes;
    for (size_t i = 0; i < hex.size(); i += 2) {
        bytes.push_back(static_cast<uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
    }
    std::cout << report_to_json(decode_report(bytes)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"itimap: interference mapping simulator and toolkit for 2.4 GHz IIoT"};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed_override = 0;
    bool have_seed = false;
    std::string out_override;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration JSON")->required();
        sub->add_option("--seed", seed_override, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--out", out_override, "override the output directory");
    };

    auto* sim = app.add_subcommand("simulate", "run the scene/radiometer/pipeline simulation");
    std::string traces_mode = "first";
    add_common(sim);
    sim->add_option("--traces", traces_mode, "trace export: none|first|all")
        ->check(CLI::IsMember({"none", "first", "all"}));

    auto* te = app.add_subcommand("train-eval", "train and evaluate classifiers on a dataset");
    std::string data_path;
    add_common(te);
    te->add_option("--data", data_path, "dataset CSV (default <out>/dataset.csv)");

    auto* mp = app.add_subcommand("map", "render per-technology spatial power maps");
    std::string tech_arg = "all";
    std::string window_arg;
    std::vector<int> channels;
    double bin_seconds_arg = 0.0;
    std::string reports_path;
    std::string model_path;
    add_common(mp);
    mp->add_option("--tech", tech_arg, "technology name or 'all'");
    mp->add_option("--window", window_arg, "time window START,END in seconds");
    mp->add_option("--channels", channels, "channel indices 0..15 (default all)")->delimiter(',');
    mp->add_option("--bin-seconds", bin_seconds_arg, "tensor bin width in seconds");
    mp->add_option("--reports", reports_path, "read encoded reports instead of simulating");
    mp->add_option("--model", model_path, "classify bursts with a trained model JSON");

    auto* sg = app.add_subcommand("spectrogram", "render a per-node power/busy spectrogram");
    int node_id = 0;
    std::string sg_tech = "Wlan11g";
    add_common(sg);
    sg->add_option("--node", node_id, "node id")->required();
    sg->add_option("--tech", sg_tech, "technology name");
    sg->add_option("--bin-seconds", bin_seconds_arg, "tensor bin width in seconds");
    sg->add_option("--reports", reports_path, "read encoded reports instead of simulating");

    auto* codec = app.add_subcommand("report-codec", "encode/decode interference reports");
    std::string codec_json;
    std::string codec_hex;
    codec->add_option("--encode-json", codec_json, "report JSON to encode (prints hex)");
    codec->add_option("--decode-hex", codec_hex, "hex file to decode, '-' for stdin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (codec->parsed()) {
            if (codec_json.empty() == codec_hex.empty()) {
                throw ConfigError("report-codec: pass exactly one of --encode-json/--decode-hex");
            }
            return cmd_codec(codec_json, codec_hex);
        }
        RunConfig cfg = load_run_config(config_path);
        if (have_seed) cfg.sim.seed = seed_override;
        if (!out_override.empty()) cfg.out_dir = out_override;

        if (sim->parsed()) return cmd_simulate(cfg, traces_mode);
        if (te->parsed()) return cmd_train_eval(cfg, data_path);
        if (mp->parsed()) {
            return cmd_map(cfg, tech_arg, window_arg, channels, bin_seconds_arg, reports_path,
                           model_path);
        }
        if (sg->parsed()) {
            return cmd_spectrogram(cfg, node_id, sg_tech, bin_seconds_arg, reports_path);
        }
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
