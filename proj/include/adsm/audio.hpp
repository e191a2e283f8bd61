#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "adsm/error.hpp"
#include "adsm/io.hpp"

namespace adsm {

inline constexpr int kTargetSampleRate = 22050;

/// Mono audio, samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

namespace audio_detail {

struct WavFormat {
  std::uint16_t format_tag = 0;  // 1 = PCM, 3 = IEEE float
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

inline double decode_sample(const unsigned char* p, const WavFormat& fmt) {
  switch (fmt.format_tag) {
    case 1:  // integer PCM
      switch (fmt.bits_per_sample) {
        case 16: {
          const auto v = static_cast<std::int16_t>(io::read_u16_le(p));
          return v / 32768.0;
        }
        case 24: {
          std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
          if (v & 0x800000) v |= ~0xFFFFFF;  // sign-extend
          return v / 8388608.0;
        }
        case 32: {
          const auto v = static_cast<std::int32_t>(io::read_u32_le(p));
          return v / 2147483648.0;
        }
        default:
          throw DecodeError("unsupported PCM bit depth: " + std::to_string(fmt.bits_per_sample));
      }
    case 3:  // IEEE float
      switch (fmt.bits_per_sample) {
        case 32: {
          const std::uint32_t bits = io::read_u32_le(p);
          float f;
          std::memcpy(&f, &bits, sizeof f);
          return static_cast<double>(f);
        }
        case 64:
          return io::read_f64_le(p);
        default:
          throw DecodeError("unsupported float bit depth: " + std::to_string(fmt.bits_per_sample));
      }
    default:
      throw DecodeError("unsupported WAV format tag: " + std::to_string(fmt.format_tag));
  }
}

}  // namespace audio_detail

/// Decode a RIFF/WAVE file. Multichannel input is averaged down to mono.
/// Supports PCM 16/24/32-bit and IEEE float 32/64-bit, including the
/// WAVE_FORMAT_EXTENSIBLE wrapper.
inline AudioBuffer read_wav(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw DecodeError("not a RIFF/WAVE file: " + path.string());

  audio_detail::WavFormat fmt;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const std::uint32_t chunk_len = io::read_u32_le(p + off + 4);
    const unsigned char* tag = p + off;
    const std::size_t body = off + 8;
    if (body + chunk_len > n) throw DecodeError("truncated chunk in " + path.string());
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw DecodeError("fmt chunk too short in " + path.string());
      fmt.format_tag = io::read_u16_le(p + body);
      fmt.channels = io::read_u16_le(p + body + 2);
      fmt.sample_rate = io::read_u32_le(p + body + 4);
      fmt.bits_per_sample = io::read_u16_le(p + body + 14);
      if (fmt.format_tag == 0xFFFE) {
        // WAVE_FORMAT_EXTENSIBLE: the real tag leads the SubFormat GUID.
        if (chunk_len < 40) throw DecodeError("extensible fmt chunk too short: " + path.string());
        fmt.format_tag = io::read_u16_le(p + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
    }
    off = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0) throw DecodeError("missing fmt/data chunk in " + path.string());
  if (fmt.channels == 0 || fmt.sample_rate == 0)
    throw DecodeError("corrupt fmt chunk in " + path.string());
  if (fmt.bits_per_sample % 8 != 0)
    throw DecodeError("unsupported bit depth in " + path.string());

  const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
  const std::size_t frame_size = bytes_per_sample * fmt.channels;
  const std::size_t frames = data_len / frame_size;

  AudioBuffer buf;
  buf.sample_rate = static_cast<int>(fmt.sample_rate);
  buf.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t ch = 0; ch < fmt.channels; ++ch)
      acc += audio_detail::decode_sample(p + data_off + i * frame_size + ch * bytes_per_sample, fmt);
    buf.samples[i] = acc / fmt.channels;
  }
  for (double v : buf.samples)
    if (!std::isfinite(v)) throw DecodeError("non-finite sample in " + path.string());
  return buf;
}

/// Band-limited resampling with a Hann-windowed sinc kernel (16 zero
/// crossings, cutoff at the lower of the two Nyquist rates). Same-rate
/// input passes through untouched.
inline AudioBuffer resample(const AudioBuffer& in, int target_rate) {
  if (in.sample_rate <= 0) throw ValidationError("resample: invalid sample rate");
  if (in.sample_rate == target_rate) return in;

  AudioBuffer out;
  out.sample_rate = target_rate;
  const double ratio = static_cast<double>(target_rate) / in.sample_rate;
  const std::size_t out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(in.samples.size()) * ratio));
  out.samples.resize(out_len);

  const double scale = std::min(1.0, ratio);  // anti-alias cutoff for downsampling
  constexpr int kZeroCrossings = 16;
  const double half_width = kZeroCrossings / scale;

  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const auto j0 = static_cast<long long>(std::ceil(center - half_width));
    const auto j1 = static_cast<long long>(std::floor(center + half_width));
    double acc = 0.0, wsum = 0.0;
    for (long long j = j0; j <= j1; ++j) {
      const double x = (static_cast<double>(j) - center) * scale;
      double w;
      if (std::abs(x) < 1e-12) {
        w = 1.0;
      } else {
        const double px = std::numbers::pi * x;
        w = std::sin(px) / px;
      }
      w *= 0.5 * (1.0 + std::cos(std::numbers::pi * x / kZeroCrossings));  // Hann taper
      wsum += w;
      if (j >= 0 && j < static_cast<long long>(in.samples.size()))
        acc += w * in.samples[static_cast<std::size_t>(j)];
    }
    out.samples[i] = wsum != 0.0 ? acc / wsum : 0.0;
  }
  for (double& v : out.samples) v = std::clamp(v, -1.0, 1.0);
  return out;
}

/// Decode a WAV file and bring it to the pipeline rate (22.05 kHz).
inline AudioBuffer decode_and_resample(const std::filesystem::path& path,
                                       int target_rate = kTargetSampleRate) {
  return resample(read_wav(path), target_rate);
}

/// Write mono PCM16 (used by the demo corpus generator and tests).
inline void write_wav_pcm16(const std::filesystem::path& path, const AudioBuffer& buf) {
  std::string out;
  const std::uint32_t data_len = static_cast<std::uint32_t>(buf.samples.size() * 2);
  out += "RIFF";
  io::append_u32_le(out, 36 + data_len);
  out += "WAVEfmt ";
  io::append_u32_le(out, 16);
  io::append_u32_le(out, 1u | (1u << 16));  // PCM, 1 channel
  io::append_u32_le(out, static_cast<std::uint32_t>(buf.sample_rate));
  io::append_u32_le(out, static_cast<std::uint32_t>(buf.sample_rate * 2));  // byte rate
  io::append_u32_le(out, 2u | (16u << 16));  // block align, bits per sample
  out += "data";
  io::append_u32_le(out, data_len);
  for (double v : buf.samples) {
    const double clamped = std::clamp(v, -1.0, 1.0);
    auto s = static_cast<std::int32_t>(std::lround(clamped * 32767.0));
    s = std::clamp(s, -32768, 32767);
    out.push_back(static_cast<char>(s & 0xFF));
    out.push_back(static_cast<char>((s >> 8) & 0xFF));
  }
  io::write_file(path, out);
}

}  // namespace adsm
