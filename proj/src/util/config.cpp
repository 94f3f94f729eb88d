#include "nps/util/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nps::util {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        std::string full = section.empty() ? key : section + "." + key;
        cfg.entries_[full] = value;
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& def) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? def : it->second;
}

int64_t Config::get_int(const std::string& key, int64_t def) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? def : parse_int(it->second);
}

uint64_t Config::get_uint(const std::string& key, uint64_t def) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? def : parse_uint64(it->second);
}

double Config::get_double(const std::string& key, double def) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? def : std::stod(it->second);
}

bool Config::get_bool(const std::string& key, bool def) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::runtime_error("config key " + key + ": expected boolean, got " + it->second);
}

std::vector<std::pair<std::string, std::string>> Config::section(const std::string& name) const {
    std::vector<std::pair<std::string, std::string>> out;
    std::string prefix = name + ".";
    for (const auto& [k, v] : entries_)
        if (k.rfind(prefix, 0) == 0) out.emplace_back(k.substr(prefix.size()), v);
    return out;
}

int64_t parse_int(const std::string& text) {
    return static_cast<int64_t>(parse_uint64(text));
}

uint64_t parse_uint64(const std::string& text) {
    std::string t = text;
    bool neg = false;
    if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
        neg = t[0] == '-';
        t = t.substr(1);
    }
    uint64_t v = 0;
    if (t.rfind("0x", 0) == 0 || t.rfind("0X", 0) == 0)
        v = std::stoull(t.substr(2), nullptr, 16);
    else
        v = std::stoull(t, nullptr, 10);
    return neg ? ~v + 1 : v;
}

}  // namespace nps::util
