#pragma once

#include <stdexcept>
#include <string>

namespace diar {

// Malformed textual input (RTTM, config). Carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(std::string message, long line)
      : std::runtime_error(std::move(message) + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  long line() const { return line_; }

private:
  long line_;
};

// Malformed binary/structured input (embedding archives, sidecars).
// record() is the index of the offending record, or -1 when not applicable.
class FormatError : public std::runtime_error {
public:
  explicit FormatError(std::string message, long record = -1)
      : std::runtime_error(record >= 0
                               ? std::move(message) + " (record " + std::to_string(record) + ")"
                               : std::move(message)),
        record_(record) {}
  long record() const { return record_; }

private:
  long record_;
};

}  // namespace diar
