#include "anoheal/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace anoheal {

namespace {

const std::vector<std::pair<const char*, const char*>> kDefaults = {
    {"run.seed", "0"},
    {"run.workers", "2"},

    {"schedule.T", "100"},
    {"schedule.beta_start", "0"},  // 0 selects the T-scaled default
    {"schedule.beta_end", "0"},

    {"mask.blob_count_min", "1"},
    {"mask.blob_count_max", "3"},
    {"mask.radius_frac_min", "0.05"},
    {"mask.radius_frac_max", "0.25"},
    {"mask.soften_px", "4"},
    {"mask.max_retries", "10"},

    {"phantom.image_size", "64"},
    {"phantom.n_train", "240"},
    {"phantom.n_val", "24"},
    {"phantom.n_test", "48"},
    {"phantom.anomaly_prevalence", "0.03"},
    {"phantom.anomaly_kinds", "intensity_blob,texture_swap,deformation"},

    {"restorer.channels", "12,24,32,48"},
    {"restorer.attention_from_level", "3"},
    {"restorer.time_embed_dim", "32"},
    {"restorer.norm_groups", "4"},
    {"restorer.input_size", "64"},

    {"train.steps", "3000"},
    {"train.batch_size", "8"},
    {"train.max_lr", "1e-3"},
    {"train.weight_decay", "0.01"},
    {"train.adam_beta1", "0.9"},
    {"train.adam_beta2", "0.999"},
    {"train.adam_eps", "1e-8"},
    {"train.warmup_frac", "0.3"},
    {"train.div_factor", "25"},
    {"train.final_div_factor", "10000"},
    {"train.val_interval", "250"},
    {"train.val_samples", "32"},
    {"train.val_frac", "0.1"},
    {"train.fg_threshold", "0.01"},
    {"train.log_interval", "100"},

    {"inference.step_size", "25"},
    {"inference.single_t", "100"},

    {"eval.t_grid", "10,20,30,40,50,60,70,80,90,100"},
    {"eval.step_size_grid", "10,20,25,33,50"},
    {"eval.n_thresholds", "200"},
};

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

} // namespace

RunConfig::RunConfig() {
    for (const auto& [key, value] : kDefaults) values_[key] = value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = trim(value);
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must look like key=value, got '" + assignment + "'");
    }
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        }
        try {
            set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

const std::string& RunConfig::get_str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

int RunConfig::get_int(const std::string& key) const {
    const std::string& s = get_str(key);
    try {
        size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer: '" + s + "'");
    }
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& s = get_str(key);
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: '" + s + "'");
    }
}

uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& s = get_str(key);
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an unsigned integer: '" + s + "'");
    }
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    const std::string& s = get_str(key);
    std::vector<int> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        try {
            out.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' has a non-integer entry: '" + part + "'");
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "' is an empty list");
    return out;
}

void RunConfig::write_echo(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write config echo: " + path.string());
    for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
}

Schedule RunConfig::make_schedule() const {
    const int T = get_int("schedule.T");
    double bs = get_double("schedule.beta_start");
    double be = get_double("schedule.beta_end");
    if (bs <= 0.0) {
        if (T <= 20) {
            throw ConfigError("schedule.T <= 20 needs explicit beta_start/beta_end");
        }
        bs = default_beta_start(T);
    }
    if (be <= 0.0) {
        if (T <= 20) {
            throw ConfigError("schedule.T <= 20 needs explicit beta_start/beta_end");
        }
        be = default_beta_end(T);
    }
    return build_schedule(T, bs, be);
}

MaskConfig RunConfig::mask_config() const {
    MaskConfig m;
    m.blob_count_min = get_int("mask.blob_count_min");
    m.blob_count_max = get_int("mask.blob_count_max");
    m.radius_frac_min = get_double("mask.radius_frac_min");
    m.radius_frac_max = get_double("mask.radius_frac_max");
    m.soften_px = get_double("mask.soften_px");
    m.max_retries = get_int("mask.max_retries");
    return m;
}

PhantomSpec RunConfig::phantom_spec() const {
    PhantomSpec spec;
    spec.image_size = get_int("phantom.image_size");
    spec.n_train = get_int("phantom.n_train");
    spec.n_val = get_int("phantom.n_val");
    spec.n_test = get_int("phantom.n_test");
    spec.anomaly_prevalence = get_double("phantom.anomaly_prevalence");
    spec.seed = get_u64("run.seed");

    spec.anomaly_kinds.clear();
    std::stringstream ss(get_str("phantom.anomaly_kinds"));
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (part == "intensity_blob") {
            spec.anomaly_kinds.push_back(AnomalyKind::intensity_blob);
        } else if (part == "texture_swap") {
            spec.anomaly_kinds.push_back(AnomalyKind::texture_swap);
        } else if (part == "deformation") {
            spec.anomaly_kinds.push_back(AnomalyKind::deformation);
        } else if (!part.empty()) {
            throw ConfigError("unknown anomaly kind '" + part + "'");
        }
    }
    validate_spec(spec);
    return spec;
}

RestorerConfig RunConfig::restorer_config() const {
    RestorerConfig cfg;
    cfg.channels_per_level = get_int_list("restorer.channels");
    cfg.attention_from_level = get_int("restorer.attention_from_level");
    cfg.time_embed_dim = get_int("restorer.time_embed_dim");
    cfg.norm_groups = get_int("restorer.norm_groups");
    cfg.input_size = get_int("restorer.input_size");
    cfg.T = get_int("schedule.T");
    cfg.beta_start = get_double("schedule.beta_start");
    cfg.beta_end = get_double("schedule.beta_end");
    return cfg;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.steps = get_int("train.steps");
    cfg.batch_size = get_int("train.batch_size");
    cfg.max_lr = get_double("train.max_lr");
    cfg.weight_decay = get_double("train.weight_decay");
    cfg.adam_beta1 = get_double("train.adam_beta1");
    cfg.adam_beta2 = get_double("train.adam_beta2");
    cfg.adam_eps = get_double("train.adam_eps");
    cfg.warmup_frac = get_double("train.warmup_frac");
    cfg.div_factor = get_double("train.div_factor");
    cfg.final_div_factor = get_double("train.final_div_factor");
    cfg.val_interval = get_int("train.val_interval");
    cfg.val_samples = get_int("train.val_samples");
    cfg.val_frac = get_double("train.val_frac");
    cfg.seed = get_u64("run.seed");
    cfg.mask = mask_config();
    cfg.fg_threshold = get_double("train.fg_threshold");
    return cfg;
}

} // namespace anoheal
