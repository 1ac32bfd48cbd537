#ifndef CSATTN_DUMPS_HPP
#define CSATTN_DUMPS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "csattn/errors.hpp"

namespace csattn {

// Embedding dump: one file per role, row-major f32.
// Layout (little-endian): magic "CSQK" | version u16 | role u8 | count u64 |
// d u32 | count*d floats.

enum class DumpRole : std::uint8_t { kQuery = 0, kKey = 1, kValue = 2 };

struct EmbeddingDump {
    DumpRole role = DumpRole::kQuery;
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<float> data;  // count x dim
};

void save_dump(const EmbeddingDump& dump, const std::string& path);
EmbeddingDump load_dump(const std::string& path);

}  // namespace csattn

#endif  // CSATTN_DUMPS_HPP
