#include "tcr/keyvalue.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tcr/error.hpp"

namespace tcr {

std::string KeyValueFile::format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_)
        if (k == key) {
            v = value;
            return;
        }
    entries_.emplace_back(key, value);
}

void KeyValueFile::set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }

void KeyValueFile::set_double(const std::string& key, double v) { set(key, format_double(v)); }

void KeyValueFile::set_doubles(const std::string& key, const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
    set(key, s);
}

bool KeyValueFile::has(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return true;
    return false;
}

const std::string& KeyValueFile::get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    throw IoError("missing key: " + key);
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

long long KeyValueFile::get_int(const std::string& key) const { return std::stoll(get(key)); }

double KeyValueFile::get_double(const std::string& key) const { return std::stod(get(key)); }

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
    std::istringstream is(get(key));
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    return out;
}

void KeyValueFile::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    for (const auto& [k, v] : entries_) f << k << "=" << v << "\n";
    if (!f) throw IoError("write failed: " + path);
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    KeyValueFile kv;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed line in " + path + ": " + line);
        kv.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return kv;
}

} // namespace tcr
