#include "atmp/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "atmp/errors.hpp"

namespace atmp {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (!cell.empty()) out.push_back(cell);
    }
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        long long r = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': invalid integer '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        std::uint64_t r = std::stoull(v, &used);
        if (used != v.size() || (!v.empty() && v[0] == '-'))
            throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': invalid unsigned integer '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': invalid number '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': invalid boolean '" + v + "'");
}

std::string format_double_17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

const char* command_name(Command c) {
    switch (c) {
        case Command::Train: return "train";
        case Command::Evaluate: return "evaluate";
        case Command::Attack: return "attack";
        case Command::Landscape: return "landscape";
        case Command::Stability: return "stability";
        case Command::Smoothness: return "smoothness";
        case Command::Suite: return "suite";
    }
    return "?";
}

Command command_from_name(const std::string& name) {
    if (name == "train") return Command::Train;
    if (name == "evaluate") return Command::Evaluate;
    if (name == "attack") return Command::Attack;
    if (name == "landscape") return Command::Landscape;
    if (name == "stability") return Command::Stability;
    if (name == "smoothness") return Command::Smoothness;
    if (name == "suite") return Command::Suite;
    throw ConfigError("unknown command '" + name + "'");
}

KvConfig KvConfig::parse(const std::string& text) {
    KvConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> first_line;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (cfg.entries_.count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key +
                              "' (first set on line " + std::to_string(first_line[key]) + ")");
        first_line[key] = lineno;
        cfg.entries_.emplace(std::move(key), std::move(value));
    }
    return cfg;
}

KvConfig KvConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string KvConfig::serialize() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        out += key;
        out += " = ";
        out += value;
        out += "\n";
    }
    return out;
}

void KvConfig::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write config file: " + path);
    out << serialize();
    if (!out) throw IoError("failed writing config file: " + path);
}

bool KvConfig::contains(const std::string& key) const { return entries_.count(key) != 0; }

void KvConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }
void KvConfig::set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }
void KvConfig::set_u64(const std::string& key, std::uint64_t v) { set(key, std::to_string(v)); }
void KvConfig::set_double(const std::string& key, double v) { set(key, format_double_17(v)); }
void KvConfig::set_bool(const std::string& key, bool v) { set(key, v ? "true" : "false"); }

void KvConfig::set_doubles(const std::string& key, const std::vector<double>& v) {
    std::vector<std::string> items;
    items.reserve(v.size());
    for (double x : v) items.push_back(format_double_17(x));
    set(key, join_list(items));
}

void KvConfig::set_ints(const std::string& key, const std::vector<int>& v) {
    std::vector<std::string> items;
    items.reserve(v.size());
    for (int x : v) items.push_back(std::to_string(x));
    set(key, join_list(items));
}

void KvConfig::set_strings(const std::string& key, const std::vector<std::string>& v) {
    set(key, join_list(v));
}

std::string KvConfig::get_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
    consumed_.insert(key);
    return it->second;
}

std::string KvConfig::get_string_or(const std::string& key, const std::string& dflt) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return dflt;
    consumed_.insert(key);
    return it->second;
}

long long KvConfig::get_int(const std::string& key) const {
    return parse_int(key, get_string(key));
}

long long KvConfig::get_int_or(const std::string& key, long long dflt) const {
    if (!contains(key)) return dflt;
    return parse_int(key, get_string(key));
}

std::uint64_t KvConfig::get_u64_or(const std::string& key, std::uint64_t dflt) const {
    if (!contains(key)) return dflt;
    return parse_u64(key, get_string(key));
}

double KvConfig::get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
}

double KvConfig::get_double_or(const std::string& key, double dflt) const {
    if (!contains(key)) return dflt;
    return parse_double(key, get_string(key));
}

bool KvConfig::get_bool_or(const std::string& key, bool dflt) const {
    if (!contains(key)) return dflt;
    return parse_bool(key, get_string(key));
}

std::vector<double> KvConfig::get_doubles_or(const std::string& key,
                                             const std::vector<double>& dflt) const {
    if (!contains(key)) return dflt;
    std::vector<double> out;
    for (const std::string& cell : split_list(get_string(key)))
        out.push_back(parse_double(key, cell));
    return out;
}

std::vector<int> KvConfig::get_ints_or(const std::string& key, const std::vector<int>& dflt) const {
    if (!contains(key)) return dflt;
    std::vector<int> out;
    for (const std::string& cell : split_list(get_string(key)))
        out.push_back(static_cast<int>(parse_int(key, cell)));
    return out;
}

std::vector<std::string> KvConfig::get_strings_or(const std::string& key,
                                                  const std::vector<std::string>& dflt) const {
    if (!contains(key)) return dflt;
    return split_list(get_string(key));
}

std::vector<std::string> KvConfig::unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : entries_)
        if (!consumed_.count(key)) out.push_back(key);
    return out;
}

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::LinearRegression: return "linreg";
        case ModelKind::Logistic: return "logistic";
        case ModelKind::Mlp: return "mlp";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "linreg") return ModelKind::LinearRegression;
    if (name == "logistic") return ModelKind::Logistic;
    if (name == "mlp") return ModelKind::Mlp;
    throw ConfigError("unknown model kind '" + name + "' (expected linreg, logistic or mlp)");
}

const char* activation_name(Activation a) {
    return a == Activation::ReLU ? "relu" : "silu";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::ReLU;
    if (name == "silu") return Activation::SiLU;
    throw ConfigError("unknown activation '" + name + "' (expected relu or silu)");
}

const char* loss_family_name(LossFamily f) {
    return f == LossFamily::SquaredError ? "squared" : "cross_entropy";
}

LossFamily loss_family_from_name(const std::string& name) {
    if (name == "squared") return LossFamily::SquaredError;
    if (name == "cross_entropy") return LossFamily::CrossEntropy;
    throw ConfigError("unknown loss '" + name + "' (expected squared or cross_entropy)");
}

const char* dataset_kind_name(DatasetSpec::Kind k) {
    switch (k) {
        case DatasetSpec::Kind::Linreg: return "linreg";
        case DatasetSpec::Kind::Blobs: return "blobs";
        case DatasetSpec::Kind::Moons: return "moons";
        case DatasetSpec::Kind::Csv: return "csv";
    }
    return "?";
}

DatasetSpec::Kind dataset_kind_from_name(const std::string& name) {
    if (name == "linreg") return DatasetSpec::Kind::Linreg;
    if (name == "blobs") return DatasetSpec::Kind::Blobs;
    if (name == "moons") return DatasetSpec::Kind::Moons;
    if (name == "csv") return DatasetSpec::Kind::Csv;
    throw ConfigError("unknown dataset kind '" + name +
                      "' (expected linreg, blobs, moons or csv)");
}

const char* early_stop_name(EarlyStopMetric m) {
    return m == EarlyStopMetric::Mix ? "mix" : "union";
}

EarlyStopMetric early_stop_from_name(const std::string& name) {
    if (name == "mix") return EarlyStopMetric::Mix;
    if (name == "union") return EarlyStopMetric::Union;
    throw ConfigError("unknown checkpoint metric '" + name + "' (expected mix or union)");
}

const char* lr_kind_name(LrSchedule::Kind k) {
    return k == LrSchedule::Kind::Constant ? "constant" : "cyclic";
}

LrSchedule::Kind lr_kind_from_name(const std::string& name) {
    if (name == "constant") return LrSchedule::Kind::Constant;
    if (name == "cyclic") return LrSchedule::Kind::CyclicPiecewiseLinear;
    throw ConfigError("unknown schedule '" + name + "' (expected constant or cyclic)");
}

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
    ExperimentConfig cfg;
    cfg.command = command_from_name(kv.get_string_or("run.command", "train"));
    cfg.seed = kv.get_u64_or("run.seed", 1);
    cfg.name = kv.get_string_or("run.name", "run");
    cfg.output_dir = kv.get_string_or("run.output_dir", "");

    cfg.data.kind = dataset_kind_from_name(kv.get_string_or("data.kind", "blobs"));
    cfg.data.n = static_cast<int>(kv.get_int_or("data.n", 256));
    cfg.eval_n = static_cast<int>(kv.get_int_or("data.eval_n", 0));
    cfg.data.d = static_cast<int>(kv.get_int_or("data.d", 2));
    cfg.data.classes = static_cast<int>(kv.get_int_or("data.classes", 2));
    cfg.data.noise = kv.get_double_or("data.noise", 0.1);
    cfg.data.separation = kv.get_double_or("data.separation", 3.0);
    cfg.data.theta_true = kv.get_doubles_or("data.theta_true", {});
    cfg.data.csv_path = kv.get_string_or("data.csv_path", "");
    cfg.data.csv_classes = static_cast<int>(kv.get_int_or("data.csv_classes", 0));
    cfg.data_seed = kv.get_u64_or("data.seed", cfg.seed);

    std::string default_model =
        cfg.data.kind == DatasetSpec::Kind::Linreg ? "linreg" : "logistic";
    cfg.model_kind = model_kind_from_name(kv.get_string_or("model.kind", default_model));
    cfg.hidden = kv.get_ints_or("model.hidden", {});
    cfg.activation = activation_from_name(kv.get_string_or("model.activation", "relu"));
    cfg.model_seed = kv.get_u64_or("model.seed", cfg.seed);
    cfg.params_file = kv.get_string_or("model.params_file", "");
    if (cfg.model_kind == ModelKind::Mlp && cfg.hidden.empty()) cfg.hidden = {16};

    std::string default_loss =
        cfg.model_kind == ModelKind::LinearRegression ? "squared" : "cross_entropy";
    cfg.loss.family = loss_family_from_name(kv.get_string_or("loss.kind", default_loss));
    cfg.loss.label_smoothing = kv.get_double_or("loss.label_smoothing", 0.0);

    std::vector<std::string> norms = kv.get_strings_or("attack.norms", {"l1", "l2", "linf"});
    if (norms.empty()) throw ConfigError("attack.norms must name at least one norm");
    for (const std::string& norm : norms) {
        PerturbationSpec spec = default_spec(norm_from_name(norm));
        std::string prefix = "attack." + norm + ".";
        spec.epsilon = kv.get_double_or(prefix + "epsilon", spec.epsilon);
        spec.steps = static_cast<int>(kv.get_int_or(prefix + "steps", spec.steps));
        spec.step_size = kv.get_double_or(prefix + "step_size", spec.step_size);
        spec.restarts = static_cast<int>(kv.get_int_or(prefix + "restarts", spec.restarts));
        spec.l1_k = static_cast<int>(kv.get_int_or(prefix + "k", spec.l1_k));
        try {
            spec.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("attack.") + norm + ": " + e.what());
        }
        cfg.mixture.specs.push_back(spec);
    }
    try {
        cfg.mixture.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("attack.norms: ") + e.what());
    }
    cfg.eval_steps = static_cast<int>(kv.get_int_or("eval.steps", 100));
    cfg.eval_restarts = static_cast<int>(kv.get_int_or("eval.restarts", 1));
    if (cfg.eval_steps < 0 || cfg.eval_restarts < 0)
        throw ConfigError("eval.steps and eval.restarts must be >= 0");

    cfg.train.strategy = strategy_from_name(kv.get_string_or("train.strategy", "adt"));
    cfg.train.epochs = static_cast<int>(kv.get_int_or("train.epochs", 100));
    cfg.train.batch_size = static_cast<int>(kv.get_int_or("train.batch_size", 128));
    cfg.train.lr.kind = lr_kind_from_name(kv.get_string_or("train.lr.kind", "cyclic"));
    cfg.train.lr.peak = kv.get_double_or("train.lr.peak", 0.1);
    cfg.train.lr.mid = kv.get_double_or("train.lr.mid", 0.005);
    std::vector<double> phases =
        kv.get_doubles_or("train.lr.phases", {cfg.train.lr.phase_epochs[0],
                                              cfg.train.lr.phase_epochs[1],
                                              cfg.train.lr.phase_epochs[2]});
    if (phases.size() != 3) throw ConfigError("train.lr.phases needs exactly three values");
    cfg.train.lr.phase_epochs = {phases[0], phases[1], phases[2]};
    cfg.train.momentum = kv.get_double_or("train.momentum", 0.0);
    cfg.train.weight_decay = kv.get_double_or("train.weight_decay", 0.0);
    cfg.train.swa = kv.get_bool_or("train.swa", false);
    cfg.train.swa_gamma = kv.get_double_or("train.swa.gamma", 0.9);
    cfg.train.swa_start_epoch = static_cast<int>(kv.get_int_or("train.swa.start_epoch", 60));
    cfg.train.label_noise = kv.get_double_or("train.label_noise", 0.0);
    cfg.train.early_stop_metric =
        early_stop_from_name(kv.get_string_or("train.early_stop", "mix"));
    cfg.train.eval_every = static_cast<int>(kv.get_int_or("train.eval_every", 1));
    cfg.train.grad_log = kv.get_bool_or("train.grad_log", true);
    cfg.train.clip_alphas = kv.get_bool_or("train.clip_alphas", false);
    cfg.train.alpha_caps = kv.get_doubles_or("train.alpha_caps", {});
    cfg.train.seed = kv.get_u64_or("train.seed", cfg.seed);
    if (cfg.train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (cfg.train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (cfg.train.label_noise < 0.0 || cfg.train.label_noise > 1.0)
        throw ConfigError("train.label_noise must lie in [0,1]");
    if (cfg.train.clip_alphas && !cfg.train.alpha_caps.empty() &&
        cfg.train.alpha_caps.size() != cfg.mixture.specs.size())
        throw ConfigError("train.alpha_caps must list one cap per attack norm");

    cfg.surrogate = surrogate_from_name(kv.get_string_or("landscape.surrogate", "wst"));
    cfg.landscape_range = kv.get_double_or("landscape.range", 2.0);
    cfg.landscape_resolution = static_cast<int>(kv.get_int_or("landscape.resolution", 201));
    cfg.kink_threshold = kv.get_double_or("landscape.threshold", 10.0);

    cfg.smoothness_samples = static_cast<int>(kv.get_int_or("smoothness.samples", 200));
    cfg.smoothness_box = kv.get_double_or("smoothness.box", 1.0);

    cfg.stability_trials = static_cast<int>(kv.get_int_or("stability.trials", 5));
    cfg.stability_T = static_cast<int>(kv.get_int_or("stability.T", 500));
    cfg.stability_alpha = kv.get_double_or("stability.alpha", 0.01);
    cfg.stability_strategy =
        strategy_from_name(kv.get_string_or("stability.strategy", "avg"));
    cfg.stability_probe = static_cast<int>(kv.get_int_or("stability.probe", 64));
    cfg.stability_force = kv.get_bool_or("stability.force", false);

    cfg.suite_members = kv.get_strings_or("suite.members", {});
    cfg.suite_jobs = static_cast<int>(kv.get_int_or("suite.jobs", 0));
    return cfg;
}

KvConfig ExperimentConfig::to_kv() const {
    KvConfig kv;
    kv.set("run.command", command_name(command));
    kv.set_u64("run.seed", seed);
    kv.set("run.name", name);
    if (!output_dir.empty()) kv.set("run.output_dir", output_dir);

    kv.set("data.kind", dataset_kind_name(data.kind));
    kv.set_int("data.n", data.n);
    if (eval_n > 0) kv.set_int("data.eval_n", eval_n);
    kv.set_int("data.d", data.d);
    kv.set_int("data.classes", data.classes);
    kv.set_double("data.noise", data.noise);
    kv.set_double("data.separation", data.separation);
    if (!data.theta_true.empty()) kv.set_doubles("data.theta_true", data.theta_true);
    if (!data.csv_path.empty()) kv.set("data.csv_path", data.csv_path);
    if (data.csv_classes > 0) kv.set_int("data.csv_classes", data.csv_classes);
    kv.set_u64("data.seed", data_seed);

    kv.set("model.kind", model_kind_name(model_kind));
    if (!hidden.empty()) kv.set_ints("model.hidden", hidden);
    kv.set("model.activation", activation_name(activation));
    kv.set_u64("model.seed", model_seed);
    if (!params_file.empty()) kv.set("model.params_file", params_file);

    kv.set("loss.kind", loss_family_name(loss.family));
    kv.set_double("loss.label_smoothing", loss.label_smoothing);

    std::vector<std::string> norms;
    for (const PerturbationSpec& spec : mixture.specs) {
        std::string norm = norm_name(spec.kind);
        norms.push_back(norm);
        std::string prefix = "attack." + norm + ".";
        kv.set_double(prefix + "epsilon", spec.epsilon);
        kv.set_int(prefix + "steps", spec.steps);
        kv.set_double(prefix + "step_size", spec.step_size);
        kv.set_int(prefix + "restarts", spec.restarts);
        if (spec.kind == NormKind::L1) kv.set_int(prefix + "k", spec.l1_k);
    }
    kv.set_strings("attack.norms", norms);
    kv.set_int("eval.steps", eval_steps);
    kv.set_int("eval.restarts", eval_restarts);

    kv.set("train.strategy", strategy_name(train.strategy));
    kv.set_int("train.epochs", train.epochs);
    kv.set_int("train.batch_size", train.batch_size);
    kv.set("train.lr.kind", lr_kind_name(train.lr.kind));
    kv.set_double("train.lr.peak", train.lr.peak);
    kv.set_double("train.lr.mid", train.lr.mid);
    kv.set_doubles("train.lr.phases", {train.lr.phase_epochs[0], train.lr.phase_epochs[1],
                                       train.lr.phase_epochs[2]});
    kv.set_double("train.momentum", train.momentum);
    kv.set_double("train.weight_decay", train.weight_decay);
    kv.set_bool("train.swa", train.swa);
    kv.set_double("train.swa.gamma", train.swa_gamma);
    kv.set_int("train.swa.start_epoch", train.swa_start_epoch);
    kv.set_double("train.label_noise", train.label_noise);
    kv.set("train.early_stop", early_stop_name(train.early_stop_metric));
    kv.set_int("train.eval_every", train.eval_every);
    kv.set_bool("train.grad_log", train.grad_log);
    kv.set_bool("train.clip_alphas", train.clip_alphas);
    if (!train.alpha_caps.empty()) kv.set_doubles("train.alpha_caps", train.alpha_caps);
    kv.set_u64("train.seed", train.seed);

    kv.set("landscape.surrogate", surrogate_name(surrogate));
    kv.set_double("landscape.range", landscape_range);
    kv.set_int("landscape.resolution", landscape_resolution);
    kv.set_double("landscape.threshold", kink_threshold);

    kv.set_int("smoothness.samples", smoothness_samples);
    kv.set_double("smoothness.box", smoothness_box);

    kv.set_int("stability.trials", stability_trials);
    kv.set_int("stability.T", stability_T);
    kv.set_double("stability.alpha", stability_alpha);
    kv.set("stability.strategy", strategy_name(stability_strategy));
    kv.set_int("stability.probe", stability_probe);
    kv.set_bool("stability.force", stability_force);

    if (!suite_members.empty()) kv.set_strings("suite.members", suite_members);
    if (suite_jobs > 0) kv.set_int("suite.jobs", suite_jobs);
    return kv;
}

MixtureSpec ExperimentConfig::eval_mixture() const {
    MixtureSpec out = mixture;
    for (PerturbationSpec& spec : out.specs) {
        spec.steps = eval_steps;
        spec.restarts = eval_restarts;
    }
    return out;
}

}  // namespace atmp
