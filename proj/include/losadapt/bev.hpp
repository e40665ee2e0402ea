// Copyright 2026 The losadapt Authors.
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

// Top-down label images written as binary PPM (P6).
//
// The image is W pixels wide and L pixels tall. Forward (+x) points up and
// left (+y) points left, so voxel (ix, iy) lands on row L-1-ix, column W-1-iy.

#ifndef LOSADAPT_BEV_HPP_
#define LOSADAPT_BEV_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "losadapt/grid.hpp"

namespace losadapt {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using Palette = std::array<Rgb, 256>;

/// SemanticKITTI-style colors for classes 1..19; index 0 (empty) is the
/// background and 255 is unused.
const Palette& default_palette();

/// Label of the topmost voxel in each (ix, iy) column that is neither 0 nor 255, or 0.
std::vector<std::uint8_t> bev_labels(const LabelGrid& grid);

/// Complete PPM file contents.
std::string render_bev(const LabelGrid& grid, const Palette& palette = default_palette());

void emit_bev(const LabelGrid& grid, const std::string& path, const Palette& palette = default_palette());

}  // namespace losadapt

#endif  // LOSADAPT_BEV_HPP_
