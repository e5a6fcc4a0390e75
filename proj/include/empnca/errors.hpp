#pragma once

#include <stdexcept>
#include <string>

namespace empnca {

// Invalid parameters or configuration (bad grid size, window, shape extent...).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Input data outside its declared domain (out-of-alphabet symbol, malformed file).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Query on a histogram that cannot answer it (empty, zero marginal).
class EstimatorError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

} // namespace empnca
