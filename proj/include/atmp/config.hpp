#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "atmp/analysis.hpp"
#include "atmp/attacks.hpp"
#include "atmp/datasets.hpp"
#include "atmp/models.hpp"
#include "atmp/training.hpp"

namespace atmp {

enum class Command { Train, Evaluate, Attack, Landscape, Stability, Smoothness, Suite };
const char* command_name(Command c);
Command command_from_name(const std::string& name);

// Flat "key = value" configuration. Lines are trimmed; empty lines and lines
// starting with '#' are ignored; keys are unique. serialize() emits keys in
// sorted order so that a parse/serialize round trip is canonical.
class KvConfig {
  public:
    static KvConfig parse(const std::string& text);
    static KvConfig load(const std::string& path);
    std::string serialize() const;
    void save(const std::string& path) const;

    bool contains(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    void set_int(const std::string& key, long long v);
    void set_u64(const std::string& key, std::uint64_t v);
    void set_double(const std::string& key, double v);  // %.17g, round-trip exact
    void set_bool(const std::string& key, bool v);
    void set_doubles(const std::string& key, const std::vector<double>& v);
    void set_ints(const std::string& key, const std::vector<int>& v);
    void set_strings(const std::string& key, const std::vector<std::string>& v);

    // Getters mark the key as consumed; _or variants fall back when absent.
    // Malformed values raise ConfigError naming the offending key.
    std::string get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& dflt) const;
    long long get_int(const std::string& key) const;
    long long get_int_or(const std::string& key, long long dflt) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t dflt) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double dflt) const;
    bool get_bool_or(const std::string& key, bool dflt) const;
    std::vector<double> get_doubles_or(const std::string& key,
                                       const std::vector<double>& dflt) const;
    std::vector<int> get_ints_or(const std::string& key, const std::vector<int>& dflt) const;
    std::vector<std::string> get_strings_or(const std::string& key,
                                            const std::vector<std::string>& dflt) const;

    // Keys present in the file that no getter ever read. Used to reject typos.
    std::vector<std::string> unconsumed() const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> consumed_;
};

// Everything an experiment run can be told to do, with defaults filled in.
// from_kv consumes every key it recognizes; callers reject leftovers.
struct ExperimentConfig {
    Command command = Command::Train;
    std::uint64_t seed = 1;
    std::string name = "run";
    std::string output_dir;  // empty: $ATMP_OUTPUT_ROOT, else "runs"

    DatasetSpec data;
    int eval_n = 0;  // holdout size; 0 means same as data.n
    std::uint64_t data_seed = 1;

    ModelKind model_kind = ModelKind::Logistic;
    std::vector<int> hidden;  // mlp hidden layer widths
    Activation activation = Activation::ReLU;
    std::uint64_t model_seed = 1;
    std::string params_file;  // evaluate/attack: load parameters from here

    LossKind loss;

    MixtureSpec mixture;  // training-time attack budgets
    int eval_steps = 100;
    int eval_restarts = 1;

    TrainConfig train;

    Surrogate surrogate = Surrogate::Wst;
    double landscape_range = 2.0;
    int landscape_resolution = 201;
    double kink_threshold = 10.0;

    int smoothness_samples = 200;
    double smoothness_box = 1.0;

    int stability_trials = 5;
    int stability_T = 500;
    double stability_alpha = 0.01;
    StrategyKind stability_strategy = StrategyKind::Avg;
    int stability_probe = 64;
    bool stability_force = false;

    std::vector<std::string> suite_members;
    int suite_jobs = 0;  // 0: hardware concurrency

    static ExperimentConfig from_kv(const KvConfig& kv);
    KvConfig to_kv() const;  // full echo of the effective configuration

    // Eval-time mixture: training budgets with steps/restarts overridden.
    MixtureSpec eval_mixture() const;
};

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);
const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);
const char* loss_family_name(LossFamily f);
LossFamily loss_family_from_name(const std::string& name);
const char* dataset_kind_name(DatasetSpec::Kind k);
DatasetSpec::Kind dataset_kind_from_name(const std::string& name);
const char* early_stop_name(EarlyStopMetric m);
EarlyStopMetric early_stop_from_name(const std::string& name);
const char* lr_kind_name(LrSchedule::Kind k);
LrSchedule::Kind lr_kind_from_name(const std::string& name);

}  // namespace atmp
