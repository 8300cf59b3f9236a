#pragma once

#include <string>

#include "qoe/experiments.hpp"
#include "qoe/pipeline.hpp"
#include "qoe/synth.hpp"

namespace qoe {

/// Toolkit-wide configuration; the JSON config file overrides any subset of
/// the defaults (keys documented in the README).
struct ToolkitConfig {
    double vqi_k = kDefaultVqiK;       // key vqi.k
    DatasetConfig synth;               // keys synth.*
    MonitoringConfig monitoring;       // keys pipeline.*
    ExperimentConfig experiments;      // keys experiments.* and models.*
    int allocation_quanta = 100;       // key pipeline.quanta
    int timing_runs = 100;             // key experiments.timing_runs
    std::vector<Eigen::Index> timing_sizes;  // key experiments.timing_sizes
};

ToolkitConfig config_from_json(const std::string& text);
ToolkitConfig load_config_file(const std::string& path);

}  // namespace qoe
