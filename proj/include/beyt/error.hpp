#pragma once

#include <stdexcept>
#include <string>

namespace beyt {

// Bad input data, bad arguments, malformed files. CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An artifact on disk does not match the hash recorded by its consumer.
// CLI exit code 3.
class StaleArtifactError : public std::runtime_error {
 public:
  StaleArtifactError(std::string artifact, const std::string& detail)
      : std::runtime_error("stale artifact '" + artifact + "': " + detail),
        artifact_(std::move(artifact)) {}
  const std::string& artifact() const noexcept { return artifact_; }

 private:
  std::string artifact_;
};

// NaN/Inf during training or inference. CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace beyt
