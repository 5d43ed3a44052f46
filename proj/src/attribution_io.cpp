#include "gnlab/attribution_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gnlab/errors.hpp"

namespace gnlab {

namespace {

// Round-trippable decimal form, matching the harness CSV formatting.
std::string fmt_full_value(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

}  // namespace

namespace {

void write_f64_le(std::ostream& out, double value) {
    const uint64_t bits = std::bit_cast<uint64_t>(value);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64_le(std::istream& in, const std::string& path) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (in.gcount() != 8) {
        raise(ErrorKind::format, path + ": truncated attribution block");
    }
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

}  // namespace

void append_attribution(std::ostream& out, const AttributionRecord& record) {
    const EnhancerConfig cfg = record.attribution.config.value_or(EnhancerConfig{});
    out << "GNLAB-ATTR1\n";
    out << "method " << method_name(record.attribution.method) << "\n";
    out << "enhancer " << enhancer_name(record.attribution.enhancer) << "\n";
    out << "sigma_sg " << fmt_full_value(cfg.sigma_sg) << "\n";
    out << "sigma_ng " << fmt_full_value(cfg.sigma_ng) << "\n";
    out << "n " << cfg.n_inputs << "\n";
    out << "m " << cfg.m_models << "\n";
    out << "base_seed " << cfg.base_seed << "\n";
    out << "sample " << record.sample_index << "\n";
    out << "class " << record.class_index << "\n";
    out << "shape";
    for (size_t d : record.shape) {
        out << " " << d;
    }
    out << "\n";
    out << "data " << record.attribution.values.size() << "\n";
    for (double v : record.attribution.values.data) {
        write_f64_le(out, v);
    }
}

std::vector<AttributionRecord> load_attributions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::vector<AttributionRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line != "GNLAB-ATTR1") {
            raise(ErrorKind::format, path + ": bad attribution record magic");
        }
        AttributionRecord record;
        EnhancerConfig cfg;
        size_t count = 0;
        bool saw_data = false;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string key;
            ls >> key;
            if (key == "method") {
                std::string v;
                ls >> v;
                record.attribution.method = method_from_name(v);
            } else if (key == "enhancer") {
                std::string v;
                ls >> v;
                record.attribution.enhancer = enhancer_from_name(v);
            } else if (key == "sigma_sg") {
                ls >> cfg.sigma_sg;
            } else if (key == "sigma_ng") {
                ls >> cfg.sigma_ng;
            } else if (key == "n") {
                ls >> cfg.n_inputs;
            } else if (key == "m") {
                ls >> cfg.m_models;
            } else if (key == "base_seed") {
                ls >> cfg.base_seed;
            } else if (key == "sample") {
                ls >> record.sample_index;
            } else if (key == "class") {
                ls >> record.class_index;
            } else if (key == "shape") {
                size_t d = 0;
                while (ls >> d) {
                    record.shape.push_back(d);
                }
            } else if (key == "data") {
                ls >> count;
                saw_data = true;
                break;
            } else {
                raise(ErrorKind::format, path + ": unknown attribution field " + key);
            }
        }
        require(saw_data, ErrorKind::format, path + ": record without data marker");
        record.attribution.config = cfg;
        record.attribution.seed_used = cfg.base_seed;
        Tensor values = Tensor::zeros(record.shape.empty()
                                          ? std::vector<size_t>{count}
                                          : record.shape);
        require(values.size() == count, ErrorKind::format,
                path + ": shape/count mismatch in attribution record");
        for (double& v : values.data) {
            v = read_f64_le(in, path);
        }
        record.attribution.values = std::move(values);
        records.push_back(std::move(record));
    }
    return records;
}

}  // namespace gnlab
