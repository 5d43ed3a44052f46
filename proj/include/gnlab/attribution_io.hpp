#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gnlab/explainers.hpp"

namespace gnlab {

// One record of a run archive: a text provenance header followed by the
// float64 value block. Records are concatenable, so archives can be merged
// with plain file concatenation.
struct AttributionRecord {
    Attribution attribution;
    size_t sample_index = 0;
    size_t class_index = 0;
    std::vector<size_t> shape;
};

void append_attribution(std::ostream& out, const AttributionRecord& record);
std::vector<AttributionRecord> load_attributions(const std::string& path);

}  // namespace gnlab
