// Small string/file helpers shared across modules.
#pragma once

#include <string>

#include "som/errors.hpp"

namespace som {

std::string trim(const std::string& s);
std::string to_lower(std::string s);
std::string to_upper(std::string s);

// Replaces every occurrence of `from` (non-empty) in place.
void replace_all(std::string& s, const std::string& from, const std::string& to);

// Whitespace-delimited word count; the mock backends' token estimate.
std::size_t word_count(const std::string& s);

// Whole-file read/write; failures raise IngestError (read) / Error (write).
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace som
