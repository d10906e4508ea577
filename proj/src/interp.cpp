// Copyright 2026 The DCLS Authors.
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

#include "dcls/interp.hpp"

#include <stdexcept>

namespace dcls {

std::string_view to_string(InterpKind kind) {
  switch (kind) {
    case InterpKind::Bilinear: return "bilinear";
    case InterpKind::Triangle: return "triangle";
    case InterpKind::Gauss: return "gauss";
  }
  return "?";
}

InterpKind parse_interp_kind(std::string_view name) {
  if (name == "bilinear") return InterpKind::Bilinear;
  if (name == "triangle") return InterpKind::Triangle;
  if (name == "gauss" || name == "gaussian") return InterpKind::Gauss;
  throw std::invalid_argument("unknown interpolation '" + std::string(name) + "' (bilinear|triangle|gauss)");
}

}  // namespace dcls
