#include "corrvol/flow_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace corrvol {

namespace {

// Largest field we are willing to allocate for; anything above is a corrupt header.
constexpr std::int64_t kMaxFloPixels = std::int64_t{1} << 28;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace

std::vector<std::uint8_t> encode_flo(const FlowField& field) {
    if (field.height < 1 || field.width < 1 ||
        field.vectors.size() != static_cast<std::size_t>(field.height) * field.width)
        throw FloError(FloErrorKind::bad_dims, "write_flo: inconsistent field shape");
    std::vector<std::uint8_t> out;
    out.reserve(12 + field.vectors.size() * 8);
    put_f32(out, kFloMagic);
    put_u32(out, static_cast<std::uint32_t>(field.width));
    put_u32(out, static_cast<std::uint32_t>(field.height));
    for (const Vec2& v : field.vectors) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y))
            throw FloError(FloErrorKind::non_finite, "write_flo: non-finite flow vector");
        put_f32(out, v.x);
        put_f32(out, v.y);
    }
    return out;
}

FlowField decode_flo(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw FloError(FloErrorKind::truncated, "read_flo: missing magic");
    const float magic = get_f32(bytes.data());
    if (!(magic == kFloMagic)) throw FloError(FloErrorKind::bad_magic, "read_flo: bad magic");
    if (bytes.size() < 12) throw FloError(FloErrorKind::truncated, "read_flo: truncated header");

    const auto width = static_cast<std::int32_t>(get_u32(bytes.data() + 4));
    const auto height = static_cast<std::int32_t>(get_u32(bytes.data() + 8));
    if (width < 1 || height < 1 || static_cast<std::int64_t>(width) * height > kMaxFloPixels)
        throw FloError(FloErrorKind::bad_dims, "read_flo: invalid dimensions " +
                                                   std::to_string(width) + "x" +
                                                   std::to_string(height));
    const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() != 12 + pixels * 8)
        throw FloError(FloErrorKind::truncated,
                       "read_flo: expected " + std::to_string(12 + pixels * 8) + " bytes, got " +
                           std::to_string(bytes.size()));

    FlowField f(height, width);
    const std::uint8_t* p = bytes.data() + 12;
    for (std::size_t i = 0; i < pixels; ++i, p += 8) {
        const Vec2 v{get_f32(p), get_f32(p + 4)};
        if (!std::isfinite(v.x) || !std::isfinite(v.y))
            throw FloError(FloErrorKind::non_finite,
                           "read_flo: non-finite flow vector at pixel " + std::to_string(i));
        f.vectors[i] = v;
    }
    return f;
}

FlowField read_flo(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FloError(FloErrorKind::io, "read_flo: cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    return decode_flo(bytes);
}

void write_flo(const FlowField& field, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = encode_flo(field);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FloError(FloErrorKind::io, "write_flo: cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FloError(FloErrorKind::io, "write_flo: write failed for " + path.string());
}

}  // namespace corrvol
