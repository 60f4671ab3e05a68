#pragma once

#include <stdexcept>
#include <string>

namespace toricmirror {

enum class ErrorKind {
  MalformedInput,
  NonUnimodularCone,
  NotAFan,
  NonConvexSupport,
  NoStrictlyConvexSupportFunction,
  BadPolarization,
  OutsideSupport,
  PolarizationUnbounded,
  IncompatibleTruncation,
  SingularJacobian,
  NonCompactFan,
  FactorizationResidue,
  NegativePowerInP,
  NonPolynomialCoefficient,
  NormalizationFailure,
  RouteDisagreement,
  RankDeficientUnfolding,
  SectionNotALift,
  IdentityViolation,
  MismatchedInvariant,
};

inline const char* error_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::NonUnimodularCone: return "NonUnimodularCone";
    case ErrorKind::NotAFan: return "NotAFan";
    case ErrorKind::NonConvexSupport: return "NonConvexSupport";
    case ErrorKind::NoStrictlyConvexSupportFunction: return "NoStrictlyConvexSupportFunction";
    case ErrorKind::BadPolarization: return "BadPolarization";
    case ErrorKind::OutsideSupport: return "OutsideSupport";
    case ErrorKind::PolarizationUnbounded: return "PolarizationUnbounded";
    case ErrorKind::IncompatibleTruncation: return "IncompatibleTruncation";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::NonCompactFan: return "NonCompactFan";
    case ErrorKind::FactorizationResidue: return "FactorizationResidue";
    case ErrorKind::NegativePowerInP: return "NegativePowerInP";
    case ErrorKind::NonPolynomialCoefficient: return "NonPolynomialCoefficient";
    case ErrorKind::NormalizationFailure: return "NormalizationFailure";
    case ErrorKind::RouteDisagreement: return "RouteDisagreement";
    case ErrorKind::RankDeficientUnfolding: return "RankDeficientUnfolding";
    case ErrorKind::SectionNotALift: return "SectionNotALift";
    case ErrorKind::IdentityViolation: return "IdentityViolation";
    case ErrorKind::MismatchedInvariant: return "MismatchedInvariant";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(error_name(kind)) + ": " + detail), kind_(kind), detail_(detail) {}
  ErrorKind kind() const { return kind_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace toricmirror
