#include "procwarm/kv.hpp"

#include "procwarm/errors.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace procwarm {

std::string kv_serialize(const KvMap& kv) {
    std::string out;
    for (const auto& [key, value] : kv) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

KvMap kv_parse(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        if (line[start] == '#') continue;
        const std::size_t eq = line.find('=', start);
        if (eq == std::string::npos) {
            throw FormatError("manifest line " + std::to_string(lineno) + " has no '=': " + line);
        }
        std::string key = line.substr(start, eq - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        std::size_t vstart = value.find_first_not_of(" \t");
        value = (vstart == std::string::npos) ? std::string() : value.substr(vstart);
        kv[key] = value;
    }
    return kv;
}

const std::string& kv_get(const KvMap& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("manifest missing key: " + key);
    return it->second;
}

std::string kv_get_or(const KvMap& kv, const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

std::int64_t kv_get_int(const KvMap& kv, const std::string& key) {
    const std::string& s = kv_get(kv, key);
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0') {
        throw FormatError("manifest key '" + key + "' is not an integer: " + s);
    }
    return v;
}

std::uint64_t kv_get_u64(const KvMap& kv, const std::string& key) {
    const std::string& s = kv_get(kv, key);
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0') {
        throw FormatError("manifest key '" + key + "' is not an unsigned integer: " + s);
    }
    return v;
}

double kv_get_double(const KvMap& kv, const std::string& key) {
    const std::string& s = kv_get(kv, key);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end == s.c_str() || *end != '\0') {
        throw FormatError("manifest key '" + key + "' is not a number: " + s);
    }
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace procwarm
