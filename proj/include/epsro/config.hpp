#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "epsro/matrix_game.hpp"
#include "epsro/types.hpp"

namespace epsro {

/// Line-oriented `section.key = value` settings. Every lookup marks its key
/// as used so that `check_all_used` can reject unknown keys once a consumer
/// has read everything it understands.
class Config {
  public:
   Config() = default;

   static Config parse(std::istream& is, const std::string& source = "<config>")
   {
      Config cfg;
      cfg.m_source = source;
      std::string line;
      std::size_t line_no = 0;
      while(std::getline(is, line)) {
         ++line_no;
         const std::string ctx = source + ":" + std::to_string(line_no);
         if(const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
         }
         const std::string trimmed = trim(line);
         if(trimmed.empty()) {
            continue;
         }
         const auto eq = trimmed.find('=');
         if(eq == std::string::npos) {
            throw FormatError(ctx + ": expected 'section.key = value'");
         }
         const std::string key = trim(trimmed.substr(0, eq));
         const std::string value = trim(trimmed.substr(eq + 1));
         const auto dot = key.find('.');
         if(dot == std::string::npos or dot == 0 or dot + 1 == key.size()) {
            throw FormatError(ctx + ": key '" + key + "' must have the form section.key");
         }
         for(const char c : key) {
            if(not(std::isalnum(static_cast<unsigned char>(c)) or c == '_' or c == '.')) {
               throw FormatError(ctx + ": invalid character in key '" + key + "'");
            }
         }
         if(value.empty()) {
            throw FormatError(ctx + ": empty value for '" + key + "'");
         }
         if(cfg.m_values.count(key) != 0) {
            throw FormatError(ctx + ": duplicate key '" + key + "'");
         }
         cfg.m_values[key] = value;
         cfg.m_lines[key] = ctx;
      }
      return cfg;
   }

   static Config parse_string(const std::string& text, const std::string& source = "<config>")
   {
      std::istringstream is(text);
      return parse(is, source);
   }

   static Config load(const std::filesystem::path& path)
   {
      std::ifstream is(path);
      if(not is) {
         throw FormatError("cannot open config '" + path.string() + "'");
      }
      return parse(is, path.string());
   }

   [[nodiscard]] bool has(const std::string& key) const { return m_values.count(key) != 0; }

   void set(const std::string& key, const std::string& value)
   {
      m_values[key] = value;
      m_lines[key] = "<override>";
   }

   [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const
   {
      m_used.insert(key);
      const auto it = m_values.find(key);
      return it == m_values.end() ? fallback : it->second;
   }

   [[nodiscard]] double get_double(const std::string& key, double fallback) const
   {
      m_used.insert(key);
      const auto it = m_values.find(key);
      if(it == m_values.end()) {
         return fallback;
      }
      return detail::parse_double(it->second, where(key));
   }

   [[nodiscard]] std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const
   {
      m_used.insert(key);
      const auto it = m_values.find(key);
      if(it == m_values.end()) {
         return fallback;
      }
      const std::string& s = it->second;
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if(ec != std::errc{} or ptr != s.data() + s.size()) {
         throw FormatError(where(key) + ": expected a nonnegative integer for '" + key + "', got '" + s + "'");
      }
      return v;
   }

   [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const
   {
      m_used.insert(key);
      const auto it = m_values.find(key);
      if(it == m_values.end()) {
         return fallback;
      }
      if(it->second == "true" or it->second == "1" or it->second == "yes") {
         return true;
      }
      if(it->second == "false" or it->second == "0" or it->second == "no") {
         return false;
      }
      throw FormatError(where(key) + ": expected true or false for '" + key + "'");
   }

   /// Comma-separated list value.
   [[nodiscard]] std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const
   {
      m_used.insert(key);
      const auto it = m_values.find(key);
      if(it == m_values.end()) {
         return fallback;
      }
      std::vector<std::string> out;
      for(const auto part : detail::split(it->second, ',')) {
         const std::string item = trim(std::string(part));
         if(item.empty()) {
            throw FormatError(where(key) + ": empty list item in '" + key + "'");
         }
         out.push_back(item);
      }
      return out;
   }

   /// Throws FormatError naming every key no lookup has touched.
   void check_all_used() const
   {
      std::string unknown;
      for(const auto& [key, value] : m_values) {
         if(m_used.count(key) == 0) {
            unknown += (unknown.empty() ? "" : ", ") + key + " (" + m_lines.at(key) + ")";
         }
      }
      if(not unknown.empty()) {
         throw FormatError("unknown config keys: " + unknown);
      }
   }

  private:
   static std::string trim(const std::string& s)
   {
      const auto first = s.find_first_not_of(" \t\r");
      if(first == std::string::npos) {
         return {};
      }
      const auto last = s.find_last_not_of(" \t\r");
      return s.substr(first, last - first + 1);
   }

   [[nodiscard]] std::string where(const std::string& key) const
   {
      const auto it = m_lines.find(key);
      return it == m_lines.end() ? m_source : it->second;
   }

   std::string m_source;
   std::map<std::string, std::string> m_values;
   std::map<std::string, std::string> m_lines;
   mutable std::set<std::string> m_used;
};

}  // namespace epsro
