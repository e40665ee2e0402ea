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

#include "losadapt/bev.hpp"

#include <fstream>

namespace losadapt {

const Palette& default_palette() {
  static const Palette palette = [] {
    Palette p;
    p.fill(Rgb{0, 0, 0});
    p[1] = {100, 150, 245};
    p[2] = {100, 230, 245};
    p[3] = {100, 80, 250};
    p[4] = {30, 60, 150};
    p[5] = {0, 0, 255};
    p[6] = {255, 30, 30};
    p[7] = {255, 40, 200};
    p[8] = {150, 30, 90};
    p[9] = {255, 0, 255};
    p[10] = {255, 150, 255};
    p[11] = {75, 0, 75};
    p[12] = {175, 0, 75};
    p[13] = {255, 200, 0};
    p[14] = {255, 120, 50};
    p[15] = {0, 175, 0};
    p[16] = {135, 60, 0};
    p[17] = {150, 240, 80};
    p[18] = {255, 240, 150};
    p[19] = {255, 0, 0};
    return p;
  }();
  return palette;
}

std::vector<std::uint8_t> bev_labels(const LabelGrid& grid) {
  const auto& d = grid.spec.dims;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(d[0]) * d[1], kEmptyClass);
  for (int iy = 0; iy < d[1]; ++iy) {
    for (int ix = 0; ix < d[0]; ++ix) {
      for (int iz = d[2] - 1; iz >= 0; --iz) {
        const std::uint8_t l = grid({ix, iy, iz});
        if (l != kEmptyClass && l != kIgnoreLabel) {
          out[static_cast<std::size_t>(iy) * d[0] + ix] = l;
          break;
        }
      }
    }
  }
  return out;
}

std::string render_bev(const LabelGrid& grid, const Palette& palette) {
  const int rows = grid.spec.dims[0];
  const int cols = grid.spec.dims[1];
  const std::vector<std::uint8_t> top = bev_labels(grid);
  std::string out = "P6\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(rows) * cols * 3);
  for (int r = 0; r < rows; ++r) {
    const int ix = rows - 1 - r;
    for (int c = 0; c < cols; ++c) {
      const int iy = cols - 1 - c;
      const Rgb px = palette[top[static_cast<std::size_t>(iy) * rows + ix]];
      char* dst = out.data() + header + (static_cast<std::size_t>(r) * cols + c) * 3;
      dst[0] = static_cast<char>(px.r);
      dst[1] = static_cast<char>(px.g);
      dst[2] = static_cast<char>(px.b);
    }
  }
  return out;
}

void emit_bev(const LabelGrid& grid, const std::string& path, const Palette& palette) {
  const std::string bytes = render_bev(grid, palette);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("write failed: " + path);
}

}  // namespace losadapt
