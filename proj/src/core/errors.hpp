// Copyright 2026 The msia-matte Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace msia {

/// Base class of every error thrown by the library. The C API maps the
/// concrete subclass onto a stable status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor, raster or feature-map dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A file could not be read, decoded or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration key, value or argument.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Checkpoint is corrupt, truncated, or incompatible with the request.
class CheckpointError : public Error {
public:
    using Error::Error;
};

/// Optimisation diverged (non-finite loss) or another runtime failure.
class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace msia
