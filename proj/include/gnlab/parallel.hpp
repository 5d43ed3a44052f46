#pragma once

#include <cstddef>
#include <functional>

namespace gnlab {

// Sample-level parallelism. Work items write only to their own index slot
// and all aggregation stays sequential, so results are bitwise independent
// of the thread count.
void set_max_threads(size_t n);
size_t max_threads();

void parallel_for(size_t count, const std::function<void(size_t)>& body);

}  // namespace gnlab
