#include "csattn/dumps.hpp"

#include <cstring>
#include <fstream>

namespace csattn {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'Q', 'K'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void save_dump(const EmbeddingDump& dump, const std::string& path) {
    if (dump.dim == 0 || dump.count == 0)
        throw ParameterError("refusing to write an empty dump");
    if (dump.data.size() != dump.count * dump.dim)
        throw DimensionError("dump buffer does not match count x dim");

    std::vector<std::uint8_t> out;
    out.reserve(19 + dump.data.size() * 4);
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(static_cast<std::uint8_t>(kVersion & 0xff));
    out.push_back(static_cast<std::uint8_t>(kVersion >> 8));
    out.push_back(static_cast<std::uint8_t>(dump.role));
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>(
            (static_cast<std::uint64_t>(dump.count) >> (8 * i)) & 0xff));
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(
            (static_cast<std::uint32_t>(dump.dim) >> (8 * i)) & 0xff));
    for (float f : dump.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot open for writing: " + path);
    file.write(reinterpret_cast<const char*>(out.data()),
               static_cast<std::streamsize>(out.size()));
    if (!file) throw DataError("short write to " + path);
}

EmbeddingDump load_dump(const std::string& path) {
    std::ifstream file(path, std::ios::binary | std::ios::ate);
    if (!file) throw DataError("cannot open: " + path);
    const std::streamsize size = file.tellg();
    file.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    file.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!file) throw DataError("short read from " + path);

    std::size_t pos = 0;
    const auto need = [&](std::size_t n, const char* what) {
        if (bytes.size() - pos < n)
            throw TruncatedError(path + " ends at byte " + std::to_string(pos) +
                                 " while reading " + what);
    };

    need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BadMagicError(path + " is not an embedding dump (bad magic)");
    pos = 4;
    need(2, "version");
    const std::uint16_t version =
        static_cast<std::uint16_t>(bytes[pos]) |
        static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
    pos += 2;
    if (version != kVersion)
        throw VersionError(path + ": unsupported dump version " +
                           std::to_string(version));
    need(1, "role");
    const std::uint8_t role = bytes[pos++];
    if (role > 2)
        throw CorruptError(path + ": role byte " + std::to_string(role) +
                           " is not Q/K/V");
    need(8, "row count");
    std::uint64_t count = 0;
    for (int i = 0; i < 8; ++i)
        count |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += 8;
    need(4, "dimension");
    std::uint32_t dim = 0;
    for (int i = 0; i < 4; ++i)
        dim |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    if (count == 0 || dim == 0)
        throw CorruptError(path + ": empty dump (count or dim is zero)");

    EmbeddingDump dump;
    dump.role = static_cast<DumpRole>(role);
    dump.count = count;
    dump.dim = dim;
    const std::size_t floats = static_cast<std::size_t>(count) * dim;
    need(floats * 4, "rows");
    dump.data.resize(floats);
    for (std::size_t f = 0; f < floats; ++f) {
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i)
            bits |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        std::memcpy(&dump.data[f], &bits, sizeof(float));
    }
    if (pos != bytes.size())
        throw CorruptError(path + ": unexpected trailing bytes at offset " +
                           std::to_string(pos));
    return dump;
}

}  // namespace csattn
