#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nps::util {

// Minimal TOML-style config: "[section]" headers and "key = value" lines,
// '#' comments. Values are kept as raw strings with typed accessors.
class Config {
  public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& def = "") const;
    int64_t get_int(const std::string& key, int64_t def) const;
    uint64_t get_uint(const std::string& key, uint64_t def) const;
    double get_double(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const;

    // Keys are stored fully qualified as "section.key" ("" section = bare key).
    const std::map<std::string, std::string>& entries() const { return entries_; }

    // All keys within one section, with the section prefix stripped.
    std::vector<std::pair<std::string, std::string>> section(const std::string& name) const;

    void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  private:
    std::map<std::string, std::string> entries_;
};

int64_t parse_int(const std::string& text);     // decimal or 0x-hex, optional sign
uint64_t parse_uint64(const std::string& text);

}  // namespace nps::util
