#ifndef LBC_ERRORS_HPP
#define LBC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lbc {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// SE(3) logarithm requested within 1e-6 of the rotation cut locus (angle pi),
// where the logarithm is ambiguous.
struct CutLocusError : Error {
  using Error::Error;
};

// A 4x4 matrix handed to vee() does not have the se(3) sparsity pattern.
struct MalformedAlgebraElement : Error {
  using Error::Error;
};

// Point-cloud file length is not a multiple of the record size, or the file
// holds no records.
struct TruncatedFileError : Error {
  using Error::Error;
};

// NaN/Inf coordinate encountered while parsing point data.
struct NonFiniteDataError : Error {
  using Error::Error;
};

// Keypoint selection had fewer than 10 candidate points to work with.
struct EmptySelectionError : Error {
  using Error::Error;
};

// Fewer matches than needed for a well-posed SE(3) solve.
struct TooFewMatchesError : Error {
  using Error::Error;
};

// Trajectories that must be index-aligned have different lengths.
struct LengthMismatchError : Error {
  using Error::Error;
};

// A correction prediction is missing for some frame in [kappa, N].
struct MissingPredictionError : Error {
  using Error::Error;
};

// Holdout sequence id not present in the training pool.
struct UnknownSequenceError : Error {
  using Error::Error;
};

// K_y failed Cholesky factorization even after the jitter ladder.
struct NotPositiveDefiniteError : Error {
  using Error::Error;
};

// Input dimension does not match the fitted model.
struct DimensionMismatchError : Error {
  using Error::Error;
};

// Serialized model carries an unsupported version tag.
struct VersionMismatchError : Error {
  using Error::Error;
};

// Serialized model is truncated or structurally invalid.
struct CorruptModelError : Error {
  using Error::Error;
};

// Synthetic sweep found no surface within sensor range.
struct EmptySweepError : Error {
  using Error::Error;
};

// Configuration file is invalid (unknown key, out-of-range value).
struct ConfigError : Error {
  using Error::Error;
};

// A file or directory could not be opened or written.
struct IoError : Error {
  using Error::Error;
};

}  // namespace lbc

#endif  // LBC_ERRORS_HPP
