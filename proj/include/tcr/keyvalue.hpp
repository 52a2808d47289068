#pragma once

#include <string>
#include <vector>

namespace tcr {

// Ordered line-oriented key=value store used for dataset manifests, run
// config snapshots and checkpoint run files. Values are free-form strings;
// doubles are written with %.17g so round trips are exact.
class KeyValueFile {
  public:
    void set(const std::string& key, const std::string& value);
    void set_int(const std::string& key, long long v);
    void set_double(const std::string& key, double v);
    void set_doubles(const std::string& key, const std::vector<double>& v);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const; // throws IoError if missing
    std::string get_or(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    void save(const std::string& path) const;
    static KeyValueFile load(const std::string& path);

    static std::string format_double(double v);

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

} // namespace tcr
