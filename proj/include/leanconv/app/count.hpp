// Copyright 2026 The LeanConv Authors. All Rights Reserved.
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

#include <cstdio>
#include <sstream>
#include <string>

#include "leanconv/network/model.hpp"

namespace leanconv {

inline std::string cost_csv(const NetworkCost& nc) {
  std::ostringstream s;
  s << "layer,kind,c_in,c_out,groups,stencil,coupling,height,width,params,mults\n";
  for (const auto& l : nc.layers) {
    s << l.name << ',' << l.kind << ',' << l.c_in << ',' << l.c_out << ',' << l.groups << ',' << l.stencil << ','
      << l.coupling << ',' << l.height << ',' << l.width << ',' << l.params << ',' << l.mults << '\n';
  }
  s << "total_weights,,,,,,,,," << nc.params.weights() << ',' << nc.mults << '\n';
  s << "total_norm,,,,,,,,," << nc.params.norm << ",0\n";
  s << "total_all,,,,,,,,," << nc.params.all() << ',' << nc.mults << '\n';
  return s.str();
}

inline std::string cost_table(const NetworkCost& nc, const std::string& title) {
  std::ostringstream s;
  char buf[256];
  s << title << '\n';
  std::snprintf(buf, sizeof buf, "%-14s %-10s %6s %6s %6s %-7s %-8s %9s %12s %14s\n", "layer", "kind", "c_in",
                "c_out", "groups", "stencil", "coupling", "size", "params", "mults");
  s << buf;
  for (const auto& l : nc.layers) {
    const std::string size = std::to_string(l.height) + "x" + std::to_string(l.width);
    std::snprintf(buf, sizeof buf, "%-14s %-10s %6zu %6zu %6zu %-7s %-8s %9s %12llu %14llu\n", l.name.c_str(),
                  l.kind.c_str(), l.c_in, l.c_out, l.groups, l.stencil.c_str(), l.coupling.c_str(), size.c_str(),
                  (unsigned long long)l.params, (unsigned long long)l.mults);
    s << buf;
  }
  std::snprintf(buf, sizeof buf, "weights (conv + classifier): %llu\nnormalization: %llu\nall parameters: %llu\n"
                "multiplications: %llu\n",
                (unsigned long long)nc.params.weights(), (unsigned long long)nc.params.norm,
                (unsigned long long)nc.params.all(), (unsigned long long)nc.mults);
  s << buf;
  return s.str();
}

}  // namespace leanconv
