#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "thlnet/dsp.hpp"

namespace thl {

/// Parses a RIFF/WAVE image: PCM16 or IEEE float32, mono, 16 kHz. PCM16 is scaled by 1/32768.
/// Throws FormatError: kUnsupportedSampleRate, kUnsupportedChannels, kUnsupportedEncoding, or
/// kParse/kTruncated with the byte offset of the malformed field.
Waveform decode_wav(std::span<const std::uint8_t> bytes);
/// PCM16 little-endian; samples are clamped to [-1, 1] and rounded to the nearest step.
std::vector<std::uint8_t> encode_wav(const Waveform& w);

Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w);

/// Whole-file helpers shared with the checkpoint reader/writer.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace thl
