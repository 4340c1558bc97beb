#pragma once

#include <stdexcept>
#include <string>

namespace refineloop {

enum class ParseErrorKind {
  UnbalancedTag,
  NestedTag,
  UnknownTag,
  AnswerNotLast,
  StrayText,
};

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string message, std::size_t position)
      : std::runtime_error(std::move(message)), kind_(kind), position_(position) {}

  ParseErrorKind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  ParseErrorKind kind_;
  std::size_t position_;
};

enum class RetrievalErrorKind {
  DuplicateDocId,
  EmptyCorpus,
  EmptyQuery,
  BadIndexFile,
};

class RetrievalError : public std::runtime_error {
 public:
  RetrievalError(RetrievalErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  RetrievalErrorKind kind() const { return kind_; }

 private:
  RetrievalErrorKind kind_;
};

enum class PolicyErrorKind {
  UnknownSymbol,
  RemoteUnavailable,
  RemoteMalformedResponse,
  BackendUnsupported,
};

class PolicyError : public std::runtime_error {
 public:
  PolicyError(PolicyErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  PolicyErrorKind kind() const { return kind_; }

 private:
  PolicyErrorKind kind_;
};

enum class GrpoErrorKind {
  GroupTooSmall,
  ShapeMismatch,
};

class GrpoError : public std::runtime_error {
 public:
  GrpoError(GrpoErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  GrpoErrorKind kind() const { return kind_; }

 private:
  GrpoErrorKind kind_;
};

enum class WorldErrorKind {
  SpecInfeasible,
  UnknownQuestion,
};

class WorldError : public std::runtime_error {
 public:
  WorldError(WorldErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  WorldErrorKind kind() const { return kind_; }

 private:
  WorldErrorKind kind_;
};

enum class CliErrorKind {
  ConfigInvalid,
  IoError,
};

class CliError : public std::runtime_error {
 public:
  CliError(CliErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  CliErrorKind kind() const { return kind_; }

 private:
  CliErrorKind kind_;
};

}  // namespace refineloop
