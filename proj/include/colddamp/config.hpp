#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "colddamp/types.hpp"

namespace colddamp {

// Flat structured text with dotted keys, one "key = value" per line, '#'
// comments, and bracketed arrays for grids:
//
//   modes.1.omega = 1.0
//   cavity.kappa  = 4.0
//   scan.tau      = [0.0, 0.5, 1.0]
//
// Every getter marks its key consumed; leftovers are rejected with their
// line number so typos cannot silently change a run.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    long integer_or(const std::string& key, long fallback) const;
    bool flag_or(const std::string& key, bool fallback) const;
    std::string text(const std::string& key) const;
    std::string text_or(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;

    // Grid given either as an explicit array under `prefix` or as the triple
    // prefix_min / prefix_max / prefix_points.
    std::vector<double> grid(const std::string& prefix) const;
    bool has_grid(const std::string& prefix) const;

    // Builds and validates the SystemSpec from the modes./cavity./feedback.
    // keys, consuming them.
    SystemSpec build_spec() const;

    void ensure_all_consumed() const;

    // Full resolved key/value dump for output metadata.
    nlohmann::json dump() const;

  private:
    struct Entry {
        std::string raw;
        std::vector<std::string> array;
        bool is_array = false;
        int line = 0;
        mutable bool consumed = false;
    };

    const Entry& entry(const std::string& key) const;
    const Entry* find(const std::string& key) const;

    std::string origin_;
    std::map<std::string, Entry> entries_;
};

// Canonical serialization; decimal values survive a round trip bit-exactly.
std::string serialize(const SystemSpec& spec);

nlohmann::json to_json(const SystemSpec& spec);

}  // namespace colddamp
