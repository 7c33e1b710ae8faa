#pragma once

#include <stdexcept>
#include <string>

namespace ccvt {

// Input validation failures. The CLI maps these to exit code 1.
struct ParamOutOfRange : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OverlappingCylinders : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IndexOutOfRange : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct LevelTooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct PartitionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NTooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SymmetryPruningInvalid : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyList : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyCell : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SpecInvalid : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Level escalation ran out of levels without finding a CVT. Exit code 2.
struct NoCvtFoundUpToMMax : std::runtime_error {
    int last_level_tried;
    explicit NoCvtFoundUpToMMax(int last_level)
        : std::runtime_error("no CVT found up to m=" + std::to_string(last_level)),
          last_level_tried(last_level) {}
};

// A postcondition that the library guarantees was observed to fail. Exit code 3.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace ccvt
