#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heartml {

// Stable diagnostic categories surfaced by the CLI.
enum class ErrorCode { Io, Schema, Config, Version, Data };

enum class ErrorKind {
  // dataset
  FileNotFound,
  EmptyFile,
  MissingColumn,
  UnknownColumn,
  DuplicateHeader,
  UnparsableCell,
  RaggedRow,
  EmptyDataset,
  SingleClassDataset,
  FractionOutOfRange,
  KTooLarge,
  BadFraction,
  // preprocess
  UnseenCategory,
  AllMissing,
  MinorityTooSmall,
  // models
  DimensionMismatch,
  BadHyperparameter,
  EmptyNode,
  EmptySequence,
  EmptyPartition,
  // eval
  LengthMismatch,
  EmptyGrid,
  UnknownParameter,
  // persistence / cli
  VersionMismatch,
  SchemaMismatch,
  MalformedDocument,
  WriteFailed,
  BadArgument,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::DuplicateHeader: return "DuplicateHeader";
    case ErrorKind::UnparsableCell: return "UnparsableCell";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::SingleClassDataset: return "SingleClassDataset";
    case ErrorKind::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::BadFraction: return "BadFraction";
    case ErrorKind::UnseenCategory: return "UnseenCategory";
    case ErrorKind::AllMissing: return "AllMissing";
    case ErrorKind::MinorityTooSmall: return "MinorityTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BadHyperparameter: return "BadHyperparameter";
    case ErrorKind::EmptyNode: return "EmptyNode";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::EmptyPartition: return "EmptyPartition";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::UnknownParameter: return "UnknownParameter";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::MalformedDocument: return "MalformedDocument";
    case ErrorKind::WriteFailed: return "WriteFailed";
    case ErrorKind::BadArgument: return "BadArgument";
  }
  return "Unknown";
}

constexpr ErrorCode code_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::FileNotFound:
    case ErrorKind::WriteFailed:
      return ErrorCode::Io;
    case ErrorKind::MissingColumn:
    case ErrorKind::UnknownColumn:
    case ErrorKind::DuplicateHeader:
    case ErrorKind::UnseenCategory:
    case ErrorKind::SchemaMismatch:
    case ErrorKind::DimensionMismatch:
      return ErrorCode::Schema;
    case ErrorKind::FractionOutOfRange:
    case ErrorKind::KTooLarge:
    case ErrorKind::BadFraction:
    case ErrorKind::BadHyperparameter:
    case ErrorKind::EmptyGrid:
    case ErrorKind::UnknownParameter:
    case ErrorKind::BadArgument:
      return ErrorCode::Config;
    case ErrorKind::VersionMismatch:
    case ErrorKind::MalformedDocument:
      return ErrorCode::Version;
    default:
      return ErrorCode::Data;
  }
}

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::Schema: return "E_SCHEMA";
    case ErrorCode::Config: return "E_CONFIG";
    case ErrorCode::Version: return "E_VERSION";
    case ErrorCode::Data: return "E_DATA";
  }
  return "E_UNKNOWN";
}

// Process exit status for each category; 0 is success, 1 is reserved for
// unexpected failures.
constexpr int exit_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::Io: return 2;
    case ErrorCode::Schema: return 3;
    case ErrorCode::Config: return 4;
    case ErrorCode::Version: return 5;
    case ErrorCode::Data: return 6;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind),
        detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCode code() const noexcept { return code_of(kind_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace heartml
