// Raster image I/O: binary PGM (P5) / PPM (P6) and PTNS tensors.
// Pixels are [h x w x c] tensors with values in [0, 1], c = 1 or 3.
#pragma once

#include <string>

#include "percept/tensor.hpp"

namespace percept {

struct ImageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Tensor load_image(const std::string& path);

// Chooses the container from the extension: .pgm (c=1), .ppm (c=3),
// anything else is written as a PTNS tensor. PGM/PPM quantize to 8 bits.
void save_image(const std::string& path, const Tensor& pixels);

}  // namespace percept
