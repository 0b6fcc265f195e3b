#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace semvo {

// Formats a double with 17 significant digits (std::to_chars, locale independent).
// 17 digits guarantee bit-exact text -> double round trips for the file formats.
std::string format_double(double value);

// Whole-file helpers; throw IoError with the path in the message.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<std::string> read_lines(const std::string& path);

// FNV-1a over bytes; used for config hashes and artifact fingerprints.
std::uint64_t fnv1a_hash(const std::string& bytes);
std::string to_hex(std::uint64_t value);

// Minimal append-style JSON writer for the line-oriented formats whose float
// encoding is contractually 17 significant digits. Keys are emitted in call
// order; values are never reordered or prettified.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& name);
  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& null();

  const std::string& str() const { return out_; }

 private:
  void maybe_comma();
  std::string out_;
  // One flag per open scope: "has this scope already emitted an element".
  std::vector<bool> scope_has_items_;
  bool pending_key_ = false;
};

std::string json_escape(const std::string& raw);

}  // namespace semvo
