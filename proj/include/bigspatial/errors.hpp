/*
 * Copyright 2026 The bigspatial Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
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

namespace bigspatial {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BIGSPATIAL_ERROR(Name)             \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

BIGSPATIAL_ERROR(NotPositiveDefinite);
BIGSPATIAL_ERROR(SingularFactor);
BIGSPATIAL_ERROR(InsufficientPoints);
BIGSPATIAL_ERROR(TooLarge);
BIGSPATIAL_ERROR(NonConvergence);
BIGSPATIAL_ERROR(SolverFailure);
BIGSPATIAL_ERROR(LengthMismatch);
BIGSPATIAL_ERROR(InvalidInterval);
BIGSPATIAL_ERROR(ParseError);
BIGSPATIAL_ERROR(GeometryMismatch);
BIGSPATIAL_ERROR(EmptyTest);
BIGSPATIAL_ERROR(EmptyTrain);
BIGSPATIAL_ERROR(IoError);
BIGSPATIAL_ERROR(ConfigError);

#undef BIGSPATIAL_ERROR

}  // namespace bigspatial
