#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gnlab/tensor.hpp"

namespace gnlab {

// Labeled samples with optional binary ground-truth masks. Masks mark the
// features that carry the class evidence and drive the localization
// metrics; they contain only {0,1} and are never all-zero.
struct Dataset {
    std::vector<Tensor> inputs;
    std::vector<int> labels;
    std::vector<Tensor> masks;  // empty or one mask per input
    std::string name;

    size_t size() const { return inputs.size(); }
    bool has_masks() const { return !masks.empty(); }
    size_t input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }
    size_t num_classes() const;

    void validate() const;
};

struct ToyGaussSpec {
    size_t n_points = 1024;
    std::array<std::array<double, 2>, 4> means = {{{8, 8}, {1, 8}, {8, 1}, {1, 1}}};
    double variance = 0.5;
    size_t test_size = 64;
};

// Equal mixture of 4 isotropic Gaussians in the plane; components 0,1 carry
// label 0 and components 2,3 label 1. Points are generated per component,
// shuffled once, and split train/test.
std::pair<Dataset, Dataset> make_toy_gauss(const ToyGaussSpec& spec, uint64_t seed);

enum class MaskKind {
    bounding_box,  // tight box around the stamped glyph
    exact,         // the stamped pixels themselves
};

// Procedural side x side grayscale images: one of `glyph_classes` binary
// glyph shapes stamped at intensity 1.0 at a uniformly random position over
// an i.i.d. N(0, noise_std^2) background clipped to [0,1]. Background
// statistics are identical across classes, so the class evidence lies only
// on the glyph. Images are flattened to vectors; shape metadata retained.
Dataset make_masked_glyph(size_t n, size_t side, size_t glyph_classes,
                          double noise_std, uint64_t seed,
                          MaskKind mask_kind = MaskKind::bounding_box);

// The 5x5 stamp used by make_masked_glyph, exposed for tests.
std::vector<std::vector<uint8_t>> glyph_stamp(size_t glyph_class);

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

// Deterministic train/test split (shuffle then cut).
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, size_t test_size,
                                          uint64_t seed);

}  // namespace gnlab
