#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace procwarm {

// Flat key=value text manifests. Keys are sorted on output so the same
// map always serializes to the same bytes.
using KvMap = std::map<std::string, std::string>;

std::string kv_serialize(const KvMap& kv);

// Parses "key=value" lines; '#' starts a comment, blank lines ignored.
KvMap kv_parse(const std::string& text);

// Typed accessors; `kv_get` throws FormatError when the key is missing or
// does not parse.
const std::string& kv_get(const KvMap& kv, const std::string& key);
std::string kv_get_or(const KvMap& kv, const std::string& key, const std::string& fallback);
std::int64_t kv_get_int(const KvMap& kv, const std::string& key);
std::uint64_t kv_get_u64(const KvMap& kv, const std::string& key);
double kv_get_double(const KvMap& kv, const std::string& key);

// Round-trip-exact double formatting for manifests.
std::string format_double(double v);

}  // namespace procwarm
