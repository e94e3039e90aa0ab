/// @file io.hpp
/// @brief File formats: the GFS1 gridded frame-sequence container, the NTC1
/// named-tensor checkpoint (same layout style, name table + payload), CSV
/// reports, and PGM image dumps. All round-trips are bit-exact.
///
/// GFS1 layout (little-endian throughout):
///   magic "GFS1" | version u16 | T u32 | C u32 | H u32 | W u32
///   | C channel names, each u32 length + UTF-8 bytes
///   | dtype tag u8 (0 = f32, 1 = f64)
///   | payload: T*C*H*W values, row-major, frame-major then channel
///
/// NTC1 layout:
///   magic "NTC1" | version u16 | count u32
///   | per tensor: name (u32 length + UTF-8), dims n,c,h,w as u32,
///     dtype tag u8 (1 = f64), payload n*c*h*w f64 values

#pragma once

#include "piano/autodiff.hpp"
#include "piano/gridcore.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace piano {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class GfsDtype : std::uint8_t { F32 = 0, F64 = 1 };

void write_gfs1(const std::filesystem::path& path, const FrameSequence& seq,
                GfsDtype dtype = GfsDtype::F64);
FrameSequence read_gfs1(const std::filesystem::path& path);

/// Raw-value variant used by round-trip tests: fields plus their dtype tag.
GfsDtype read_gfs1_dtype(const std::filesystem::path& path);

void write_checkpoint(const std::filesystem::path& path,
                      const std::map<std::string, Tensor4>& tensors);
std::map<std::string, Tensor4> read_checkpoint(const std::filesystem::path& path);

/// One CSV row per entry; all doubles are printed with round-trip precision
/// ('%.17g') so re-runs are byte-comparable.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string format_double(double x);

/// 8-bit binary PGM; values linearly mapped from [lo, hi] and clamped.
void write_pgm(const std::filesystem::path& path, const ScalarField& f, double lo, double hi);

} // namespace piano
