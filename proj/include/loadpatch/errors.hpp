#pragma once

#include <stdexcept>
#include <string>

namespace loadpatch {

enum class ErrKind {
    parse,              // malformed input row/line/token
    ordering,           // timestamps out of order or duplicated
    empty_dataset,      // no usable data
    degenerate_range,   // min == max where a span is required
    range,              // value outside its legal interval
    codec,              // bad ternary word
    validation,         // dataset shape/schema violation
    capacity,           // not enough samples available
    dependency,         // prerequisite job not in the required state
    provider,           // remote service rejected the request
    transport,          // network failure after retries
    lookup,             // stub has no registered day for a prompt
    storage,            // job store or record file unreadable
    restoration_failed, // completion beyond the repair budget
    undefined_metric,   // metric denominator not positive
    shape,              // mismatched vector lengths
    config,             // bad run configuration
    io,                 // file system failure
};

class Error : public std::runtime_error {
public:
    Error(ErrKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrKind kind() const { return kind_; }

private:
    ErrKind kind_;
};

} // namespace loadpatch
