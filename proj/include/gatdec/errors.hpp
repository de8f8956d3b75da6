// Copyright 2026 The gatdec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GATDEC_ERRORS_HPP
#define GATDEC_ERRORS_HPP

#include <stdexcept>

namespace gatdec {

/// Malformed shot file or detector error model text.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Detector coordinates that cannot be flattened into spatial nodes.
struct LayoutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operand shapes or lengths that do not line up.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Misuse of an API (e.g. backward on a non-scalar).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Training or CLI settings that make the run undefined.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Values outside their legal range, such as p >= 0.5 for a matching edge.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Detector error models the matching decoder cannot represent.
struct UnsupportedModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inputs beyond the exact matcher's size limit.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gatdec

#endif
