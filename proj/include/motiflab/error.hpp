#pragma once

#include <stdexcept>
#include <string>

namespace motiflab {

/// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration; the CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (manifest, fixture, stage artifact).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A stage was run before the artifact it depends on exists.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(std::string path, std::string producing_stage)
      : Error("missing stage artifact " + path + " (run the '" + producing_stage +
              "' stage first)"),
        path_(std::move(path)),
        stage_(std::move(producing_stage)) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& producing_stage() const noexcept { return stage_; }

 private:
  std::string path_;
  std::string stage_;
};

}  // namespace motiflab
