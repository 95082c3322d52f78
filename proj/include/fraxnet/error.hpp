#pragma once

#include <stdexcept>
#include <string>

namespace fraxnet {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes do not agree with what an operator expects.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// An argument is outside its documented domain.
class ValueError : public Error {
public:
    using Error::Error;
};

/// Filesystem access failed.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed bytes: images, CSV, reports.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity appeared where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Misuse of a recorded gradient graph.
class GraphError : public Error {
public:
    using Error::Error;
};

/// Bad run-configuration text (unknown key, unparsable value).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fraxnet
