#pragma once

#include <stdexcept>
#include <string>

namespace pgsr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidLibrary : Error { using Error::Error; };
struct IncompleteExpression : Error { using Error::Error; };
struct DegenerateTarget : Error { using Error::Error; };
struct InfeasibleMask : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace pgsr
