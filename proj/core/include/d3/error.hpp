#pragma once

#include <stdexcept>
#include <string>

namespace d3 {

// Root of the library's exception hierarchy. The CLI maps the three broad
// categories onto process exit codes: config 2, data 3, pipeline 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad parameters, unknown options, inconsistent run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Bad inputs: files, shapes, values.
struct DataError : Error {
    using Error::Error;
};

// A per-video stage failed while executing a batch run.
struct PipelineError : Error {
    using Error::Error;
};

// ---- data error refinements -------------------------------------------------

// Wrong magic bytes or unsupported container version.
struct FormatError : DataError {
    using DataError::DataError;
};

// Truncated payload or trailing bytes.
struct CorruptionError : DataError {
    using DataError::DataError;
};

// A value-level invariant does not hold (non-finite entries, empty sequence).
struct ValidationError : DataError {
    using DataError::DataError;
};

struct ManifestError : DataError {
    using DataError::DataError;
};

struct ParseError : DataError {
    using DataError::DataError;
};

// Dimension mismatch between features and a trained model.
struct ShapeError : DataError {
    using DataError::DataError;
};

// Frame geometry does not admit the requested grid.
struct GeometryError : DataError {
    using DataError::DataError;
};

struct BoundsError : DataError {
    using DataError::DataError;
};

// The request cannot be satisfied by the data (e.g. more key frames than frames).
struct InfeasibleError : DataError {
    using DataError::DataError;
};

// Degenerate model parameters (e.g. non-positive mixture weight).
struct ModelError : DataError {
    using DataError::DataError;
};

struct IoError : DataError {
    using DataError::DataError;
};

}  // namespace d3
