#include "thlnet/wav.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string_view>

#include "byte_io.hpp"

namespace thl {

namespace {

constexpr std::uint16_t kPcm = 1;
constexpr std::uint16_t kFloat = 3;
constexpr std::uint16_t kExtensible = 0xFFFE;

bool tag_is(std::span<const std::uint8_t> s, std::string_view tag) {
  return std::equal(s.begin(), s.end(), tag.begin(), tag.end(),
                    [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); });
}

struct Format {
  std::uint16_t encoding = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

Waveform decode_wav(std::span<const std::uint8_t> bytes) {
  using Kind = FormatError::Kind;
  detail::ByteReader r(bytes, "wav");
  if (!tag_is(r.bytes(4, "RIFF tag"), "RIFF")) throw FormatError(Kind::kParse, "wav: missing RIFF tag", 0);
  r.uint<std::uint32_t>("RIFF size");
  if (!tag_is(r.bytes(4, "WAVE tag"), "WAVE")) throw FormatError(Kind::kParse, "wav: missing WAVE tag", 8);

  Format fmt;
  bool have_fmt = false;
  while (true) {
    if (r.done()) throw FormatError(Kind::kParse, "wav: no data chunk", static_cast<std::int64_t>(r.offset()));
    const std::size_t chunk_at = r.offset();
    const auto id = r.bytes(4, "chunk id");
    const std::uint32_t size = r.uint<std::uint32_t>("chunk size");
    if (tag_is(id, "fmt ")) {
      if (size < 16) throw FormatError(Kind::kParse, "wav: fmt chunk shorter than 16 bytes", chunk_at);
      r.need(size, "fmt chunk");
      const std::size_t body = r.offset();
      fmt.encoding = r.uint<std::uint16_t>("format tag");
      fmt.channels = r.uint<std::uint16_t>("channel count");
      fmt.rate = r.uint<std::uint32_t>("sample rate");
      r.uint<std::uint32_t>("byte rate");
      r.uint<std::uint16_t>("block align");
      fmt.bits = r.uint<std::uint16_t>("bits per sample");
      if (fmt.encoding == kExtensible) {
        if (size < 40) throw FormatError(Kind::kParse, "wav: extensible fmt chunk shorter than 40 bytes", chunk_at);
        r.skip(8, "extension header");
        fmt.encoding = r.uint<std::uint16_t>("sub-format");
      }
      r.skip(size - (r.offset() - body), "fmt chunk");
      if (size % 2) r.skip(1, "pad byte");
      have_fmt = true;
      continue;
    }
    if (!tag_is(id, "data")) {
      r.skip(size + (size % 2), "chunk");
      continue;
    }
    if (!have_fmt) throw FormatError(Kind::kParse, "wav: data chunk before fmt chunk", chunk_at);
    if (fmt.channels != 1) {
      throw FormatError(Kind::kUnsupportedChannels,
                        "wav: " + std::to_string(fmt.channels) + " channels; only mono is supported");
    }
    if (fmt.rate != static_cast<std::uint32_t>(kSampleRate)) {
      throw FormatError(Kind::kUnsupportedSampleRate, "wav: sample rate " + std::to_string(fmt.rate) +
                                                          " Hz; resample not supported (need 16000 Hz)");
    }
    const bool pcm16 = fmt.encoding == kPcm && fmt.bits == 16;
    const bool f32 = fmt.encoding == kFloat && fmt.bits == 32;
    if (!pcm16 && !f32) {
      throw FormatError(Kind::kUnsupportedEncoding, "wav: encoding " + std::to_string(fmt.encoding) + " with " +
                                                        std::to_string(fmt.bits) +
                                                        " bits; only PCM16 and float32 are supported");
    }
    const std::size_t width = pcm16 ? 2 : 4;
    if (size % width) throw FormatError(Kind::kParse, "wav: data size is not a whole number of samples", chunk_at);
    r.need(size, "data chunk");
    Waveform w;
    w.samples.resize(size / width);
    for (auto& s : w.samples) {
      s = pcm16 ? static_cast<float>(static_cast<std::int16_t>(r.uint<std::uint16_t>("sample"))) / 32768.0f
                : r.f32("sample");
    }
    return w;
  }
}

std::vector<std::uint8_t> encode_wav(const Waveform& w) {
  if (w.sample_rate != kSampleRate) {
    throw ConfigError("wav: refusing to write sample rate " + std::to_string(w.sample_rate));
  }
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  detail::ByteWriter out;
  out.text("RIFF");
  out.uint<std::uint32_t>(36 + data_bytes);
  out.text("WAVE");
  out.text("fmt ");
  out.uint<std::uint32_t>(16);
  out.uint<std::uint16_t>(kPcm);
  out.uint<std::uint16_t>(1);
  out.uint<std::uint32_t>(kSampleRate);
  out.uint<std::uint32_t>(kSampleRate * 2);
  out.uint<std::uint16_t>(2);
  out.uint<std::uint16_t>(16);
  out.text("data");
  out.uint<std::uint32_t>(data_bytes);
  for (float s : w.samples) {
    const float c = std::isfinite(s) ? std::clamp(s, -1.0f, 1.0f) : 0.0f;
    const long q = std::clamp(std::lround(c * 32768.0f), -32768L, 32767L);
    out.uint<std::uint16_t>(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return std::move(out.buffer());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write error on '" + path.string() + "'");
}

Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_wav(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what());
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& w) { write_file_bytes(path, encode_wav(w)); }

}  // namespace thl
