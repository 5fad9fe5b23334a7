#ifndef MQM_ERRORS_HPP
#define MQM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mqm {

// Malformed or inconsistent input data (bad headers, short files,
// geometry mismatches). CLI maps this to exit code 3.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// External metric tool missing, failing, or emitting garbage.
// CLI maps this to exit code 4.
class ToolError : public std::runtime_error {
public:
    explicit ToolError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mqm

#endif
