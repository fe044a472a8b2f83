#pragma once

#include "srn/tensor.hpp"

#include <stdexcept>
#include <string>

namespace srn {

// File/format problems surface as io_error; the CLI maps them to exit code 2.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary PPM (P6, maxval 255). Reading maps byte v to v/255; writing clamps
// to [0,1] and rounds half-up, so a write-read round trip is within 1/255
// of the clamped original per element.
Tensor<float> read_image(const std::string& path);
void write_image(const Tensor<float>& image, const std::string& path);

} // namespace srn
