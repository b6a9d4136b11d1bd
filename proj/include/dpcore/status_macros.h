//
// Copyright 2026 The dpcore Authors
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
//

#ifndef DPCORE_STATUS_MACROS_H_
#define DPCORE_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define DPCORE_STATUS_CONCAT_INNER_(a, b) a##b
#define DPCORE_STATUS_CONCAT_(a, b) DPCORE_STATUS_CONCAT_INNER_(a, b)

#define DPCORE_RETURN_IF_ERROR(expr)        \
  do {                                      \
    absl::Status _dpcore_status = (expr);   \
    if (!_dpcore_status.ok()) {             \
      return _dpcore_status;                \
    }                                       \
  } while (0)

#define DPCORE_ASSIGN_OR_RETURN(lhs, expr) \
  DPCORE_ASSIGN_OR_RETURN_IMPL_(           \
      DPCORE_STATUS_CONCAT_(_dpcore_statusor, __LINE__), lhs, expr)

#define DPCORE_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, expr) \
  auto statusor = (expr);                                  \
  if (!statusor.ok()) {                                    \
    return std::move(statusor).status();                   \
  }                                                        \
  lhs = std::move(statusor).value()

#endif  // DPCORE_STATUS_MACROS_H_
