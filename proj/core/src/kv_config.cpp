#include "noisyopt/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "noisyopt/types.hpp"

namespace noisyopt {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

}  // namespace

KvConfig KvConfig::parse(std::istream& in, const std::string& source) {
  KvConfig cfg;
  cfg.source_ = source;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig,
                  source + ":" + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kConfig, source + ":" + std::to_string(line) + ": empty key");
    }
    cfg.entries_[key] = Entry{trim(text.substr(eq + 1)), line};
  }
  return cfg;
}

KvConfig KvConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config file " + path);
  return parse(in, path);
}

bool KvConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

void KvConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = Entry{value, 0};
}

const KvConfig::Entry* KvConfig::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

void KvConfig::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const int line = it == entries_.end() ? 0 : it->second.line;
  const std::string where = line > 0 ? source_ + ":" + std::to_string(line) : source_;
  throw Error(ErrorCode::kConfig, where + ": " + key + ": " + what);
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  return e->value;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto* e = find(key);
  if (!e) return fallback;
  const auto v = parse_number<double>(e->value);
  if (!v) fail(key, "not a number: '" + e->value + "'");
  return *v;
}

std::int64_t KvConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* e = find(key);
  if (!e) return fallback;
  const auto v = parse_number<std::int64_t>(e->value);
  if (!v) fail(key, "not an integer: '" + e->value + "'");
  return *v;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto* e = find(key);
  if (!e) return fallback;
  const auto& v = e->value;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key, "not a boolean: '" + v + "'");
}

std::vector<double> KvConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_strings(key)) {
    const auto v = parse_number<double>(item);
    if (!v) fail(key, "not a number: '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::int64_t> KvConfig::get_ints(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : get_strings(key)) {
    const auto v = parse_number<std::int64_t>(item);
    if (!v) fail(key, "not an integer: '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> KvConfig::get_strings(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return {};
  return split_list(e->value);
}

void KvConfig::require_all_used() const {
  for (const auto& [key, entry] : entries_) {
    if (!used_.count(key)) fail(key, "unknown key");
  }
}

}  // namespace noisyopt
