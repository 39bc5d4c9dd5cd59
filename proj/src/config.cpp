#include "nlh/config.hpp"

#include <fstream>
#include <sstream>

namespace nlh {

namespace {
std::string trim(const std::string& s)
{
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& is, const std::string& source)
{
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::config, source + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(ErrorKind::config, source + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.has(key)) fail(ErrorKind::config, source + ":" + std::to_string(lineno) + ": duplicate key " + key);
        cfg.set(key, value);
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path)
{
    std::ifstream is(path);
    if (!is) fail(ErrorKind::config, "cannot open config file: " + path);
    return parse(is, path);
}

std::string KeyValueConfig::get(const std::string& key) const
{
    auto it = kv_.find(key);
    if (it == kv_.end()) fail(ErrorKind::config, "missing config key: " + key);
    return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& def) const
{
    auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double def) const
{
    auto it = kv_.find(key);
    return it == kv_.end() ? def : parse_double(it->second, key);
}

long KeyValueConfig::get_int(const std::string& key, long def) const
{
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    double v = parse_double(it->second, key);
    if (v != static_cast<double>(static_cast<long>(v))) fail(ErrorKind::config, key + ": expected an integer");
    return static_cast<long>(v);
}

bool KeyValueConfig::get_bool(const std::string& key, bool def) const
{
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorKind::config, key + ": expected a boolean, got '" + v + "'");
}

void KeyValueConfig::require_known(const std::set<std::string>& allowed) const
{
    std::string bad;
    for (const auto& [k, v] : kv_)
        if (!allowed.count(k)) bad += (bad.empty() ? "" : ", ") + k;
    if (!bad.empty()) fail(ErrorKind::config, "unknown config keys: " + bad);
}

std::string KeyValueConfig::dump() const
{
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << " = " << v << '\n';
    return os.str();
}

}  // namespace nlh
