#pragma once

#include <string>
#include <vector>

#include "itimap/driver.hpp"

namespace itimap {

// One run configuration drives every CLI subcommand: simulation inputs plus
// classifier and map stage parameters.
struct RunConfig {
    SimConfig sim;

    std::vector<int> splits = {5, 20, 50, 200};
    int forest_trees = 30;
    int forest_splits = 100;
    int knn_k = 5;
    int ablate_splits = 20;
    double train_fraction = 0.7;

    double cell_m = 0.5;
    double bin_seconds = 5.0;
    double refine = 4.0;

    std::string out_dir = "out";
};

// Relative scenario paths resolve against the config file's directory.
RunConfig load_run_config(const std::string& path);

}  // namespace itimap
