#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ppmp::io {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view context);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Git blob object id: sha1("blob <size>\0" + contents), lowercase hex.
std::string git_blob_hash(std::string_view contents);

// Parses JSON text; syntax errors become ParseError with line/column context.
nlohmann::json parse_json(std::string_view text, const std::string& source);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

std::vector<std::string> split_csv_line(std::string_view line);

[[noreturn]] void throw_missing(const std::string& context, const char* key);
[[noreturn]] void throw_bad_field(const std::string& context, const char* key, const char* what);

// Reads `key` from `obj` as T, raising ParseError naming `context.key`.
template <class T>
T require(const nlohmann::json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw_missing(context, key);
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw_bad_field(context, key, e.what());
  }
}


}  // namespace ppmp::io
