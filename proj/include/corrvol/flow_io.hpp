#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "corrvol/types.hpp"

namespace corrvol {

/// Middlebury .flo: float magic 202021.25 ("PIEH"), int32 width, int32 height,
/// then height*width interleaved (u, v) float32, row-major. All little-endian.
inline constexpr float kFloMagic = 202021.25f;

enum class FloErrorKind { io, bad_magic, bad_dims, truncated, non_finite };

class FloError : public Error {
public:
    FloError(FloErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
    FloErrorKind kind() const { return kind_; }

private:
    FloErrorKind kind_;
};

std::vector<std::uint8_t> encode_flo(const FlowField& field);
FlowField decode_flo(std::span<const std::uint8_t> bytes);

FlowField read_flo(const std::filesystem::path& path);
void write_flo(const FlowField& field, const std::filesystem::path& path);

}  // namespace corrvol
