#pragma once

#include <stdexcept>
#include <string>

namespace dds {

/// Base class of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad flags, options or run configuration. Mapped to exit code 1.
struct UsageError : Error {
  using Error::Error;
};

/// Inconsistent model/pipeline configuration (side-output count, indivisible
/// geometry, unknown profile). Mapped to exit code 1.
struct ConfigError : UsageError {
  using UsageError::UsageError;
};

/// Bad or inconsistent input data. Mapped to exit code 2.
struct DataError : Error {
  using Error::Error;
};

struct MalformedImageError : DataError {
  using DataError::DataError;
};

/// Image/mask pair disagrees (shape mismatch and the like).
struct PairedDataError : DataError {
  using DataError::DataError;
};

/// Block-grid geometry violation: block count does not divide the raster,
/// or blocks of inconsistent shapes.
struct BlockGeometryError : DataError {
  using DataError::DataError;
};

/// Scene specification that cannot produce any foreground.
struct DegenerateSpecError : DataError {
  using DataError::DataError;
};

/// Input spatially smaller than the operator's receptive field.
struct ReceptiveFieldError : DataError {
  using DataError::DataError;
};

/// Supervision target unusable (non-binary, wrong resolution).
struct SupervisionError : DataError {
  using DataError::DataError;
};

/// Learning-rate schedule queried outside its domain.
struct ScheduleError : DataError {
  using DataError::DataError;
};

struct SplitError : DataError {
  using DataError::DataError;
};

struct EmptyReportError : DataError {
  using DataError::DataError;
};

/// Raised when a metric is undefined for a particular image (empty ground
/// truth). Aggregation catches it and excludes the image; it is a signal,
/// not a run failure.
struct UndefinedMetric : Error {
  using Error::Error;
};

/// Non-finite loss or gradients. Mapped to exit code 3.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace dds
