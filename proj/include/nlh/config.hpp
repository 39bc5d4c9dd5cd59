#pragma once

#include "nlh/common.hpp"

#include <iosfwd>
#include <map>
#include <set>
#include <string>

namespace nlh {

/// Plain "key = value" text configuration; '#' starts a comment.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& is, const std::string& source = "<config>");
    static KeyValueConfig load(const std::string& path);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key, double def) const;
    long get_int(const std::string& key, long def) const;
    bool get_bool(const std::string& key, bool def) const;

    /// Rejects keys outside the allowed set.
    void require_known(const std::set<std::string>& allowed) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }
    /// Sorted "key = value" lines.
    std::string dump() const;

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace nlh
