#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace psma {

using Scalar = double;
using Index = Eigen::Index;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
using Matrix2X = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;
/// 0/1 assignment matrix, users x codebooks (or x subcarriers for PD-NOMA).
using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class Scheme { PSMA, SCMA, PDNOMA };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

/// Configuration or input rejected; carries the offending field name.
class ValidationError : public std::runtime_error {
public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// A mathematical precondition does not hold (zero distance, nonpositive anchor, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A scheme contract is broken, e.g. same-cell codebook reuse under SCMA.
class ContractError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Problem too large for an exhaustive oracle, or infeasible structure request.
class RefusalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace psma
