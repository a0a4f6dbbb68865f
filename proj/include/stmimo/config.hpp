/**
 * @file config.hpp
 * @brief Plain-text `key = value` experiment configuration.
 *
 * One pair per line, `#` starts a comment, lists are comma separated, angles
 * in degrees. `preset` and `experiment` are applied before any other key,
 * whatever their position in the file. See README for the key list.
 */
#pragma once

#include "stmimo/experiments.hpp"

#include <stdexcept>
#include <string>

namespace stmimo {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::string& path);

/// Resolved config in the same format; parse_config(format_config(c)) reproduces c
/// up to degree/radian rounding of the angles.
/// Thread count and output path are omitted since they do not affect results.
std::string format_config(const ExperimentConfig& cfg);

/// Comma-separated numbers, e.g. "-10, 0,10".
std::vector<double> parse_number_list(const std::string& text);

Method parse_method(const std::string& name);
std::vector<Method> parse_method_list(const std::string& text);

}  // namespace stmimo
