#include "gnlab/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "gnlab/errors.hpp"
#include "gnlab/rng.hpp"

namespace gnlab {

size_t Dataset::num_classes() const {
    int highest = -1;
    for (int label : labels) {
        highest = std::max(highest, label);
    }
    return static_cast<size_t>(highest + 1);
}

void Dataset::validate() const {
    require(inputs.size() == labels.size(), ErrorKind::invalid_argument,
            "Dataset: inputs/labels length mismatch");
    if (!masks.empty()) {
        require(masks.size() == inputs.size(), ErrorKind::invalid_argument,
                "Dataset: masks length mismatch");
        for (size_t i = 0; i < masks.size(); ++i) {
            require(masks[i].shape == inputs[i].shape, ErrorKind::invalid_argument,
                    "Dataset: mask shape mismatch");
            bool any = false;
            for (double v : masks[i].data) {
                require(v == 0.0 || v == 1.0, ErrorKind::invalid_argument,
                        "Dataset: mask values must be 0 or 1");
                any = any || v == 1.0;
            }
            require(any, ErrorKind::invalid_argument, "Dataset: empty mask");
        }
    }
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, size_t test_size,
                                          uint64_t seed) {
    require(test_size <= d.size(), ErrorKind::invalid_argument,
            "split_dataset: test size larger than dataset");
    std::vector<size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::child(seed, stream::data_split, 0);
    rng.shuffle(order);

    Dataset train, test;
    train.name = d.name;
    test.name = d.name;
    for (size_t i = 0; i < order.size(); ++i) {
        Dataset& dst = (i < test_size) ? test : train;
        const size_t idx = order[i];
        dst.inputs.push_back(d.inputs[idx]);
        dst.labels.push_back(d.labels[idx]);
        if (d.has_masks()) {
            dst.masks.push_back(d.masks[idx]);
        }
    }
    return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> make_toy_gauss(const ToyGaussSpec& spec, uint64_t seed) {
    require(spec.variance > 0.0, ErrorKind::invalid_argument,
            "make_toy_gauss: variance must be positive");
    require(spec.test_size <= spec.n_points, ErrorKind::invalid_argument,
            "make_toy_gauss: split sizes exceed n_points");
    Dataset all;
    all.name = "toy_gauss";
    const double stddev = std::sqrt(spec.variance);
    // Equal mixture: n/4 per component, remainder round-robin over the first
    // components. One child stream per component.
    for (size_t comp = 0; comp < 4; ++comp) {
        size_t count = spec.n_points / 4 + (comp < spec.n_points % 4 ? 1 : 0);
        Rng rng = Rng::child(seed, stream::data_gen, comp);
        for (size_t i = 0; i < count; ++i) {
            Tensor point = Tensor::zeros({2});
            point[0] = rng.normal(spec.means[comp][0], stddev);
            point[1] = rng.normal(spec.means[comp][1], stddev);
            all.inputs.push_back(std::move(point));
            all.labels.push_back(comp < 2 ? 0 : 1);
        }
    }
    return split_dataset(all, spec.test_size, seed);
}

namespace {

// 5x5 binary stamps; all span the full grid so the tight bounding box is the
// stamp square itself.
const char* const kGlyphRows[10][5] = {
    // cross
    {"00100", "00100", "11111", "00100", "00100"},
    // square frame
    {"11111", "10001", "10001", "10001", "11111"},
    // diagonal bar
    {"10000", "01000", "00100", "00010", "00001"},
    // T
    {"11111", "00100", "00100", "00100", "00100"},
    // L
    {"10000", "10000", "10000", "10000", "11111"},
    // diamond
    {"00100", "01010", "10001", "01010", "00100"},
    // X
    {"10001", "01010", "00100", "01010", "10001"},
    // H
    {"10001", "10001", "11111", "10001", "10001"},
    // Z
    {"11111", "00010", "00100", "01000", "11111"},
    // U
    {"10001", "10001", "10001", "10001", "11111"},
};

constexpr size_t kGlyphSide = 5;

}  // namespace

std::vector<std::vector<uint8_t>> glyph_stamp(size_t glyph_class) {
    require(glyph_class < 10, ErrorKind::invalid_argument, "glyph_stamp: class out of range");
    std::vector<std::vector<uint8_t>> stamp(kGlyphSide, std::vector<uint8_t>(kGlyphSide, 0));
    for (size_t r = 0; r < kGlyphSide; ++r) {
        for (size_t c = 0; c < kGlyphSide; ++c) {
            stamp[r][c] = kGlyphRows[glyph_class][r][c] == '1' ? 1 : 0;
        }
    }
    return stamp;
}

Dataset make_masked_glyph(size_t n, size_t side, size_t glyph_classes,
                          double noise_std, uint64_t seed, MaskKind mask_kind) {
    require(side >= 8, ErrorKind::invalid_argument, "make_masked_glyph: side must be >= 8");
    require(glyph_classes >= 2 && glyph_classes <= 10, ErrorKind::invalid_argument,
            "make_masked_glyph: glyph_classes must be in [2, 10]");
    require(noise_std >= 0.0, ErrorKind::invalid_argument,
            "make_masked_glyph: noise_std must be non-negative");
    require(kGlyphSide <= side, ErrorKind::invalid_argument,
            "make_masked_glyph: glyph larger than image");

    Dataset d;
    d.name = "glyphs";
    const size_t positions = side - kGlyphSide + 1;
    for (size_t i = 0; i < n; ++i) {
        Rng rng = Rng::child(seed, stream::data_gen, i);
        const size_t cls = rng.uniform_index(glyph_classes);
        const size_t row0 = rng.uniform_index(positions);
        const size_t col0 = rng.uniform_index(positions);

        Tensor image = Tensor::zeros({side, side});
        for (double& px : image.data) {
            px = std::clamp(rng.normal(0.0, noise_std), 0.0, 1.0);
        }
        Tensor mask = Tensor::zeros({side, side});
        const auto stamp = glyph_stamp(cls);
        for (size_t r = 0; r < kGlyphSide; ++r) {
            for (size_t c = 0; c < kGlyphSide; ++c) {
                const size_t idx = (row0 + r) * side + (col0 + c);
                if (stamp[r][c]) {
                    image[idx] = 1.0;
                    if (mask_kind == MaskKind::exact) {
                        mask[idx] = 1.0;
                    }
                }
                if (mask_kind == MaskKind::bounding_box) {
                    mask[idx] = 1.0;
                }
            }
        }
        d.inputs.push_back(std::move(image));
        d.labels.push_back(static_cast<int>(cls));
        d.masks.push_back(std::move(mask));
    }
    d.validate();
    return d;
}

namespace {

void write_f64_le(std::ostream& out, double value) {
    const uint64_t bits = std::bit_cast<uint64_t>(value);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

void write_i32_le(std::ostream& out, int32_t value) {
    const uint32_t bits = static_cast<uint32_t>(value);
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) {
        bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

double read_f64_le(std::istream& in, const std::string& path, size_t& offset) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (in.gcount() != 8) {
        raise(ErrorKind::format,
              path + ": truncated float block at byte " + std::to_string(offset));
    }
    offset += 8;
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

int32_t read_i32_le(std::istream& in, const std::string& path, size_t& offset) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4) {
        raise(ErrorKind::format,
              path + ": truncated label block at byte " + std::to_string(offset));
    }
    offset += 4;
    uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) {
        bits |= static_cast<uint32_t>(bytes[i]) << (8 * i);
    }
    return static_cast<int32_t>(bits);
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
    d.validate();
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "save_dataset: cannot open " + path);
    out << "GNLAB-DS1\n";
    out << "name " << (d.name.empty() ? "unnamed" : d.name) << "\n";
    out << "count " << d.size() << "\n";
    out << "shape";
    if (d.size() > 0) {
        for (size_t dim : d.inputs.front().shape) {
            out << " " << dim;
        }
    }
    out << "\n";
    out << "has_masks " << (d.has_masks() ? 1 : 0) << "\n";
    out << "data\n";
    for (const Tensor& input : d.inputs) {
        for (double v : input.data) {
            write_f64_le(out, v);
        }
    }
    for (int label : d.labels) {
        write_i32_le(out, label);
    }
    for (const Tensor& mask : d.masks) {
        for (double v : mask.data) {
            out.put(v == 1.0 ? '\x01' : '\x00');
        }
    }
    require(out.good(), ErrorKind::io, "save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "load_dataset: cannot open " + path);
    size_t offset = 0;
    auto read_line = [&](const char* what) {
        std::string line;
        if (!std::getline(in, line)) {
            raise(ErrorKind::format, path + ": truncated header (" + std::string(what) +
                                         ") at byte " + std::to_string(offset));
        }
        offset += line.size() + 1;
        return line;
    };
    if (read_line("magic") != "GNLAB-DS1") {
        raise(ErrorKind::format, path + ": bad magic at byte 0");
    }
    Dataset d;
    {
        const std::string line = read_line("name");
        if (line.rfind("name ", 0) != 0) {
            raise(ErrorKind::format, path + ": bad name line");
        }
        d.name = line.substr(5);
    }
    size_t count = 0;
    {
        std::istringstream ls(read_line("count"));
        std::string tag;
        ls >> tag >> count;
        if (tag != "count") {
            raise(ErrorKind::format, path + ": bad count line");
        }
    }
    std::vector<size_t> shape;
    {
        std::istringstream ls(read_line("shape"));
        std::string tag;
        ls >> tag;
        if (tag != "shape") {
            raise(ErrorKind::format, path + ": bad shape line");
        }
        size_t dim = 0;
        while (ls >> dim) {
            shape.push_back(dim);
        }
    }
    bool has_masks = false;
    {
        std::istringstream ls(read_line("has_masks"));
        std::string tag;
        int flag = 0;
        ls >> tag >> flag;
        if (tag != "has_masks" || (flag != 0 && flag != 1)) {
            raise(ErrorKind::format, path + ": bad has_masks line");
        }
        has_masks = flag == 1;
    }
    if (read_line("data marker") != "data") {
        raise(ErrorKind::format, path + ": missing data marker");
    }
    const size_t dim = shape_product(shape);
    for (size_t i = 0; i < count; ++i) {
        Tensor input = Tensor::zeros(shape);
        for (double& v : input.data) {
            v = read_f64_le(in, path, offset);
        }
        d.inputs.push_back(std::move(input));
    }
    for (size_t i = 0; i < count; ++i) {
        d.labels.push_back(read_i32_le(in, path, offset));
    }
    if (has_masks) {
        for (size_t i = 0; i < count; ++i) {
            Tensor mask = Tensor::zeros(shape);
            for (size_t j = 0; j < dim; ++j) {
                int byte = in.get();
                if (byte == EOF) {
                    raise(ErrorKind::format, path + ": truncated mask block at byte " +
                                                 std::to_string(offset));
                }
                offset += 1;
                if (byte != 0 && byte != 1) {
                    raise(ErrorKind::format, path + ": invalid mask byte at byte " +
                                                 std::to_string(offset - 1));
                }
                mask[j] = static_cast<double>(byte);
            }
            d.masks.push_back(std::move(mask));
        }
    }
    d.validate();
    return d;
}

}  // namespace gnlab
