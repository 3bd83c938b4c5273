#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbeatsx {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes that an operation cannot combine.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid model, training or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid or insufficient input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Optimisation failure (non-finite loss, diverging activations).
class TrainingError : public Error {
public:
    using Error::Error;
};

inline std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

}  // namespace nbeatsx
