#pragma once
#include <stdexcept>
#include <string>

namespace svh {

// Base for everything thrown by the library. ConfigError maps to CLI exit
// code 1 (bad input on the caller's side), the rest map to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

// schema
struct MalformedManifest : ConfigError { using ConfigError::ConfigError; };
struct ScoreOutOfRange : ConfigError { using ConfigError::ConfigError; };

// preprocess
struct NoContent : Error { using Error::Error; };
struct CenterOutsideBox : Error { using Error::Error; };
struct CenterLost : Error { using Error::Error; };

// targets
struct MissingScore : ConfigError { using ConfigError::ConfigError; };

// model
struct ShapeMismatch : Error { using Error::Error; };
struct NoSupervision : Error { using Error::Error; };

// train
struct TooFewPatients : ConfigError { using ConfigError::ConfigError; };
struct NonFiniteLoss : Error { using Error::Error; };

// infer
struct NotNormalized : Error { using Error::Error; };
struct EmptyEnsemble : ConfigError { using ConfigError::ConfigError; };

// eval
struct EmptySet : Error { using Error::Error; };
struct MissingPrediction : Error { using Error::Error; };

// synth
struct GeometryOverflow : ConfigError { using ConfigError::ConfigError; };

// io
struct IoFailure : Error { using Error::Error; };

}  // namespace svh
