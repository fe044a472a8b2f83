#pragma once

#include "srn/image_io.hpp"
#include "srn/rng.hpp"
#include "srn/tensor.hpp"

#include <string>
#include <vector>

namespace srn {

struct ImagePair {
    Tensor<float> blurry;
    Tensor<float> sharp;
    std::string id;
};

struct Dataset {
    std::vector<ImagePair> pairs;
    std::string split; // "train" or "eval"
};

struct SyntheticData {
    Dataset train;
    Dataset eval;
};

// Long-exposure simulation: blurry = elementwise mean of the frames, sharp =
// the temporally middle frame (index len/2).
ImagePair synth_blur(const std::vector<Tensor<float>>& frames, const std::string& id = "");

// Renders piecewise-smooth scenes (gradient background, colored rectangles
// and ellipses) over 7..13 subframes with camera translation+rotation and
// independent object translation, averages them into blurry/sharp pairs, and
// splits 2/3 train / 1/3 eval by index. Deterministic per seed.
SyntheticData generate_synthetic_dataset(int count, int height, int width, Rng& rng);

// Identical random crop window applied to both images, uniform over valid
// offsets.
ImagePair sample_patch(const ImagePair& pair, int size, Rng& rng);

// Directory layout: <root>/<id>/blur.ppm and <root>/<id>/sharp.ppm.
// Loading iterates ids in sorted order.
Dataset load_dataset(const std::string& dir);
void save_dataset(const Dataset& data, const std::string& dir);

} // namespace srn
