#pragma once

#include <stdexcept>
#include <string>

namespace lcsmt {

/// Invalid input: malformed configuration, failed precondition, non-bijective table.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A point does not belong to the model space it is evaluated on.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// An iteration count or index range exceeds the configured budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A search terminated without finding what it was looking for.
struct NotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lcsmt
