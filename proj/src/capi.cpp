#include "atmp/atmp.h"

#include <exception>
#include <string>
#include <vector>

#include "atmp/config.hpp"
#include "atmp/errors.hpp"
#include "atmp/harness.hpp"

struct atmp_config {
    atmp::KvConfig kv;
    std::string serialized;
};

struct atmp_run {
    atmp::RunResult result;
    std::vector<std::string> metric_names;
};

namespace {

thread_local std::string g_last_error;

atmp_status fail_with(const std::exception& e) {
    g_last_error = e.what();
    switch (atmp::exit_code_for(e)) {
        case 2: return ATMP_CONFIG_ERROR;
        case 3: return ATMP_NUMERIC_ERROR;
        case 4: return ATMP_IO_ERROR;
        default: return ATMP_ERROR;
    }
}

atmp_status fail_null(const char* what) {
    g_last_error = std::string("null argument: ") + what;
    return ATMP_CONFIG_ERROR;
}

}  // namespace

extern "C" {

const char* atmp_last_error(void) { return g_last_error.c_str(); }

atmp_status atmp_config_create(atmp_config** out) {
    if (!out) return fail_null("out");
    *out = new atmp_config{};
    g_last_error.clear();
    return ATMP_OK;
}

atmp_status atmp_config_parse(const char* text, atmp_config** out) {
    if (!out) return fail_null("out");
    if (!text) return fail_null("text");
    try {
        auto cfg = new atmp_config{};
        cfg->kv = atmp::KvConfig::parse(text);
        *out = cfg;
        g_last_error.clear();
        return ATMP_OK;
    } catch (const std::exception& e) {
        return fail_with(e);
    }
}

atmp_status atmp_config_load(const char* path, atmp_config** out) {
    if (!out) return fail_null("out");
    if (!path) return fail_null("path");
    try {
        auto cfg = new atmp_config{};
        try {
            cfg->kv = atmp::KvConfig::load(path);
        } catch (...) {
            delete cfg;
            throw;
        }
        *out = cfg;
        g_last_error.clear();
        return ATMP_OK;
    } catch (const std::exception& e) {
        return fail_with(e);
    }
}

atmp_status atmp_config_set(atmp_config* cfg, const char* key, const char* value) {
    if (!cfg) return fail_null("cfg");
    if (!key) return fail_null("key");
    if (!value) return fail_null("value");
    cfg->kv.set(key, value);
    g_last_error.clear();
    return ATMP_OK;
}

const char* atmp_config_serialize(atmp_config* cfg) {
    if (!cfg) return "";
    cfg->serialized = cfg->kv.serialize();
    return cfg->serialized.c_str();
}

void atmp_config_free(atmp_config* cfg) { delete cfg; }

atmp_status atmp_run_command(const atmp_config* cfg, const char* command, atmp_run** out) {
    if (!out) return fail_null("out");
    if (!cfg) return fail_null("cfg");
    if (!command) return fail_null("command");
    try {
        atmp::ExperimentConfig ec = atmp::parse_config(cfg->kv);
        ec.command = atmp::command_from_name(command);
        atmp::RunResult result = atmp::run_experiment(ec);
        auto run = new atmp_run{std::move(result), {}};
        run->metric_names.reserve(run->result.metrics.size());
        for (const auto& [name, value] : run->result.metrics) run->metric_names.push_back(name);
        *out = run;
        g_last_error.clear();
        return ATMP_OK;
    } catch (const std::exception& e) {
        return fail_with(e);
    }
}

int atmp_run_exit_code(const atmp_run* run) { return run ? run->result.exit_code : 2; }

const char* atmp_run_dir(const atmp_run* run) { return run ? run->result.run_dir.c_str() : ""; }

const char* atmp_run_summary(const atmp_run* run) {
    return run ? run->result.summary_text.c_str() : "";
}

size_t atmp_run_metric_count(const atmp_run* run) { return run ? run->metric_names.size() : 0; }

const char* atmp_run_metric_name(const atmp_run* run, size_t index) {
    if (!run || index >= run->metric_names.size()) return "";
    return run->metric_names[index].c_str();
}

atmp_status atmp_run_metric_value(const atmp_run* run, const char* name, double* out) {
    if (!run) return fail_null("run");
    if (!name) return fail_null("name");
    if (!out) return fail_null("out");
    auto it = run->result.metrics.find(name);
    if (it == run->result.metrics.end()) {
        g_last_error = std::string("unknown metric: ") + name;
        return ATMP_ERROR;
    }
    *out = it->second;
    g_last_error.clear();
    return ATMP_OK;
}

size_t atmp_run_artifact_count(const atmp_run* run) {
    return run ? run->result.artifacts.size() : 0;
}

const char* atmp_run_artifact_path(const atmp_run* run, size_t index) {
    if (!run || index >= run->result.artifacts.size()) return "";
    return run->result.artifacts[index].c_str();
}

double atmp_run_wall_seconds(const atmp_run* run) {
    return run ? run->result.wall_seconds : 0.0;
}

void atmp_run_free(atmp_run* run) { delete run; }

}  // extern "C"
