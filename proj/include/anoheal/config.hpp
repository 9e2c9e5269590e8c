#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "anoheal/corruption.hpp"
#include "anoheal/phantom.hpp"
#include "anoheal/restorer.hpp"
#include "anoheal/schedule.hpp"

namespace anoheal {

// Flat dotted-key configuration. Every key has a default; unknown keys are
// rejected. File format: one `key = value` per line, `#` starts a comment.
class RunConfig {
public:
    RunConfig();

    void load_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);
    // Parses "key=value" pairs as given on the command line.
    void apply_override(const std::string& assignment);

    const std::string& get_str(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    // Full resolved key set, echoed for reproducibility.
    void write_echo(const std::filesystem::path& path) const;

    Schedule make_schedule() const;
    MaskConfig mask_config() const;
    PhantomSpec phantom_spec() const;
    RestorerConfig restorer_config() const;
    TrainConfig train_config() const;

private:
    std::map<std::string, std::string> values_;
};

} // namespace anoheal
