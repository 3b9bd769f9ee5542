#pragma once

#include <stdexcept>
#include <string>

namespace sccl {

/// Violated precondition or dimension mismatch: the caller broke the contract.
class contract_violation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed input file (CSV, IDX, config, checkpoint).
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class divergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejection sampling exhausted its attempt budget.
class generation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numeric degeneracy that cannot be recovered deterministically
/// (e.g. a dictionary column collapsed to zero).
class degeneracy_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw contract_violation(msg);
}

} // namespace sccl
