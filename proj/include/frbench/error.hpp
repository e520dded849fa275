/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: include/frbench/error.hpp
 *
 * Copyright 2026 The frbench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace frbench {

enum class ErrorCode {
    Io,
    Parse,
    IndexOutOfRange,
    UnsupportedFormat,
    InvalidLandmarks,
    AlignmentDegenerate,
    DegenerateTriangle,
    NoSurface,
    EmptyRegion,
    DegenerateLandmarks,
    EmptyInput,
    InvalidArgument,
    DimensionMismatch,
    SingularSystem,
    DegenerateCamera,
    Capacity,
    CascadeStage,
    Config,
};

const char* to_string(ErrorCode code) noexcept;

/**
 * The single exception type thrown by the library. The code identifies the
 * failure class so that callers (and tests) can branch on it without parsing
 * the message.
 */
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message)
    {
    }

    ErrorCode code() const noexcept { return code_; }
    /// The message without the error-class prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace frbench
