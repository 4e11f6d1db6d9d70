#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pavg/engine.hpp"

namespace pavg {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat, sectioned key=value experiment description. Keys are addressed as
// "section.key"; keys before the first [section] header have no prefix.
// Every key read through a typed getter is recorded together with its
// effective (possibly defaulted) value, so a manifest can echo the complete
// configuration with no silent defaults.
class Config {
public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    // --set section.key=value overrides, applied before any getter runs
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& def);
    double get_double(const std::string& key, double def);
    std::uint64_t get_u64(const std::string& key, std::uint64_t def);
    std::size_t get_size(const std::string& key, std::size_t def);
    std::vector<double> get_double_list(const std::string& key, const std::string& def);
    std::vector<std::uint64_t> get_u64_list(const std::string& key, const std::string& def);

    // keys present in the input but never read; non-empty means a typo
    std::vector<std::string> unused_keys() const;

    // every key read so far with its effective value
    const std::map<std::string, std::string>& effective() const { return effective_; }

private:
    std::string raw(const std::string& key, const std::string& def);

    std::map<std::string, std::string> values_;
    std::map<std::string, bool> touched_;
    std::map<std::string, std::string> effective_;
};

// A validated, runnable experiment built from a Config.
struct BuiltRun {
    SimConfig sim;               // objective and init populated
    std::size_t repetitions = 1; // rep r runs with seed + r
    std::string out_root;
    std::map<std::string, std::string> effective;
};

// Builds and validates the full run; throws ConfigError naming the offending
// key. Consumes defaults so cfg.effective() is complete afterwards.
BuiltRun build_run(Config& cfg);

// Sectioned text form of an effective key set; parseable by Config.
std::string format_config(const std::map<std::string, std::string>& effective);

} // namespace pavg
