#pragma once

#include <map>
#include <string>
#include <vector>

#include "atmp/config.hpp"
#include "atmp/exports.hpp"

namespace atmp {

// Outcome of one experiment run. Numeric results live in `metrics` (finite by
// construction) and in the serialized summary; wall_seconds is measured but
// never written into any artifact, so reruns are byte-identical.
struct RunResult {
    Command command = Command::Train;
    bool ok = true;
    int exit_code = 0;  // 0 success, 2 config error, 3 numeric failure, 4 I/O error
    std::string error;  // failure description when !ok (suite members)
    std::string run_dir;
    KvConfig config_echo;
    TrajectoryRecord trajectory;            // train command only
    std::map<std::string, double> metrics;  // flat metric name -> value
    std::vector<std::string> artifacts;     // files written, in creation order
    std::string summary_text;               // contents of summary.txt
    double wall_seconds = 0.0;
};

// run.output_dir if set, else $ATMP_OUTPUT_ROOT, else "runs".
std::string default_output_root();
std::string resolve_run_dir(const ExperimentConfig& cfg);

// from_kv plus rejection of unrecognized keys.
ExperimentConfig parse_config(const KvConfig& kv);

// Executes cfg.command, writes artifacts under the run directory, and throws
// ConfigError / NumericError / IoError on failure. Suite members never throw
// past the suite; their failures are folded into the suite result.
RunResult run_experiment(const ExperimentConfig& cfg);

// Loads, isolates and runs every member config; results are ordered by member
// index and independent of the parallelism degree.
std::vector<RunResult> run_suite_members(const ExperimentConfig& suite_cfg,
                                         const std::string& suite_dir);

int exit_code_for(const std::exception& e);

}  // namespace atmp
