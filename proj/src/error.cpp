/*
 * Copyright 2026 The statesim Authors
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

#include "statesim/error.hpp"

namespace statesim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParameterDomain: return "parameter domain error";
    case ErrorCode::kInvalidConfig: return "invalid config";
    case ErrorCode::kWrongMode: return "wrong mode";
    case ErrorCode::kFingerprintMismatch: return "fingerprint mismatch";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kCorruptBlob: return "corrupt blob";
    case ErrorCode::kUseAfterFree: return "use after free";
    case ErrorCode::kDoubleFree: return "double free";
    case ErrorCode::kIntegrationFailure: return "integration failure";
    case ErrorCode::kEventIterationOverflow: return "event iteration overflow";
    case ErrorCode::kNoSignChange: return "no sign change";
    case ErrorCode::kSimulationAborted: return "simulation aborted";
  }
  return "unknown error";
}

}  // namespace statesim
