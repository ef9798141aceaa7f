#include "reef/audio_io.hpp"

#include "reef/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace reef {

namespace fs = std::filesystem;

double Calibration::upa_per_count() const {
  // counts -> volts at the ADC -> volts at the hydrophone -> µPa
  const double volts_per_count = adc_fullscale_v / std::pow(10.0, gain_db / 20.0);
  return volts_per_count / std::pow(10.0, sensitivity_db_re_v_per_upa / 20.0);
}

void Calibration::validate() const {
  if (!(adc_fullscale_v > 0.0) || !std::isfinite(adc_fullscale_v)) {
    throw InvalidArgument("calibration: adc_fullscale_v must be > 0");
  }
  if (!std::isfinite(sensitivity_db_re_v_per_upa) || !std::isfinite(gain_db)) {
    throw InvalidArgument("calibration: non-finite sensitivity or gain");
  }
}

void AudioClip::validate() const {
  if (!(sample_rate > 0.0)) throw InvalidArgument("audio clip: sample_rate must be > 0");
  if (samples.empty()) throw InvalidArgument("audio clip: no samples");
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

struct ParsedHeader {
  WavInfo info;
  std::uint64_t data_offset = 0;
  std::uint64_t data_bytes = 0;
};

ParsedHeader parse_header(std::ifstream& in, const fs::path& path) {
  auto fail = [&](const std::string& why) {
    return InputError(fmt::format("{}: {}", path.string(), why));
  };
  unsigned char riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12)) throw fail("too short for a RIFF header");
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  ParsedHeader h;
  bool have_fmt = false;
  std::uint16_t tag = 0, bits = 0;
  for (;;) {
    unsigned char ck[8];
    if (!in.read(reinterpret_cast<char*>(ck), 8)) break;
    const std::uint32_t size = le32(ck + 4);
    const std::uint64_t body = static_cast<std::uint64_t>(in.tellg());
    if (std::memcmp(ck, "fmt ", 4) == 0) {
      if (size < 16) throw fail("fmt chunk too small");
      std::vector<unsigned char> f(size);
      if (!in.read(reinterpret_cast<char*>(f.data()), size)) throw fail("truncated fmt chunk");
      tag = le16(&f[0]);
      h.info.channels = le16(&f[2]);
      h.info.sample_rate = le32(&f[4]);
      bits = le16(&f[14]);
      if (tag == kFormatExtensible) {
        if (size < 40) throw fail("extensible fmt chunk too small");
        tag = le16(&f[24]);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(ck, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk precedes fmt chunk");
      h.data_offset = body;
      h.data_bytes = size;
      in.seekg(0, std::ios::end);
      const std::uint64_t end = static_cast<std::uint64_t>(in.tellg());
      // recorders that crash mid-write leave the size field stale
      if (h.data_bytes == 0xFFFFFFFFu || body + h.data_bytes > end) h.data_bytes = end - body;
      break;
    }
    in.seekg(static_cast<std::streamoff>(body + size + (size & 1u)));
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (h.data_offset == 0) throw fail("missing data chunk");
  if (h.info.channels < 1) throw fail("zero channels");
  if (!(h.info.sample_rate > 0)) throw fail("zero sample rate");

  if (tag == kFormatPcm) {
    switch (bits) {
      case 8: h.info.format = SampleFormat::pcm8; break;
      case 16: h.info.format = SampleFormat::pcm16; break;
      case 24: h.info.format = SampleFormat::pcm24; break;
      case 32: h.info.format = SampleFormat::pcm32; break;
      default: throw fail(fmt::format("unsupported PCM bit depth {}", bits));
    }
  } else if (tag == kFormatFloat) {
    switch (bits) {
      case 32: h.info.format = SampleFormat::float32; break;
      case 64: h.info.format = SampleFormat::float64; break;
      default: throw fail(fmt::format("unsupported float bit depth {}", bits));
    }
  } else {
    throw fail(fmt::format("unsupported WAV encoding tag 0x{:04x}", tag));
  }
  const std::uint64_t frame_bytes = static_cast<std::uint64_t>(bits / 8) * h.info.channels;
  h.info.frames = static_cast<std::size_t>(h.data_bytes / frame_bytes);
  return h;
}

int bytes_per_sample(SampleFormat f) {
  switch (f) {
    case SampleFormat::pcm8: return 1;
    case SampleFormat::pcm16: return 2;
    case SampleFormat::pcm24: return 3;
    case SampleFormat::pcm32: return 4;
    case SampleFormat::float32: return 4;
    case SampleFormat::float64: return 8;
  }
  return 0;
}

double decode_sample(const unsigned char* p, SampleFormat f) {
  switch (f) {
    case SampleFormat::pcm8: return (static_cast<int>(p[0]) - 128) / 128.0;
    case SampleFormat::pcm16: return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case SampleFormat::pcm24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case SampleFormat::pcm32: return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
    case SampleFormat::float32: {
      const std::uint32_t u = le32(p);
      float v;
      std::memcpy(&v, &u, 4);
      return v;
    }
    case SampleFormat::float64: {
      const std::uint64_t u = static_cast<std::uint64_t>(le32(p)) |
                              (static_cast<std::uint64_t>(le32(p + 4)) << 32);
      double v;
      std::memcpy(&v, &u, 8);
      return v;
    }
  }
  return 0.0;
}

void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xFF));
  b.push_back(static_cast<unsigned char>(v >> 8));
}
void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

WavInfo read_wav_info(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  return parse_header(in, path).info;
}

std::optional<FilenameStamp> parse_recording_filename(const fs::path& path) {
  const std::string stem = path.stem().string();
  const auto us = stem.rfind('_');
  if (us == std::string::npos || us == 0) return std::nullopt;
  auto t = parse_compact_timestamp(std::string_view(stem).substr(us + 1));
  if (!t) return std::nullopt;
  return FilenameStamp{stem.substr(0, us), *t};
}

AudioClip read_wav(const fs::path& path, const std::optional<Calibration>& cal,
                   Diagnostics* diag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  const ParsedHeader h = parse_header(in, path);
  if (h.info.channels != 1) {
    throw InputError(fmt::format("{}: {} channels; only mono recordings are supported",
                                 path.string(), h.info.channels));
  }
  if (h.info.frames == 0) throw InputError(fmt::format("{}: no audio frames", path.string()));

  const int bps = bytes_per_sample(h.info.format);
  std::vector<unsigned char> raw(h.info.frames * static_cast<std::size_t>(bps));
  in.clear();
  in.seekg(static_cast<std::streamoff>(h.data_offset));
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw InputError(fmt::format("{}: truncated data chunk", path.string()));
  }

  AudioClip clip;
  clip.sample_rate = h.info.sample_rate;
  clip.samples.resize(h.info.frames);
  for (std::size_t i = 0; i < h.info.frames; ++i) {
    clip.samples[i] = decode_sample(&raw[i * static_cast<std::size_t>(bps)], h.info.format);
  }

  if (auto stamp = parse_recording_filename(path)) {
    clip.site_id = stamp->site_id;
    clip.start_time = stamp->start_time;
  } else {
    clip.site_id = path.stem().string();
    warn(diag, fmt::format("{}: no <site>_<YYYYMMDD>T<HHMMSS>Z timestamp in file name; "
                           "start time left empty",
                           path.filename().string()));
  }
  if (cal) return apply_calibration(std::move(clip), *cal);
  return clip;
}

AudioClip read_wav(const RecordingMeta& meta, Diagnostics* diag) {
  Diagnostics local;
  AudioClip clip = read_wav(meta.file_path, meta.calibration, &local);
  if (!meta.site_id.empty()) clip.site_id = meta.site_id;
  if (meta.start_time) {
    clip.start_time = meta.start_time;
  } else {
    for (const auto& w : local.warnings()) warn(diag, w);
  }
  return clip;
}

std::vector<unsigned char> encode_wav(const AudioClip& clip, SampleFormat format,
                                      Diagnostics* diag) {
  if (!(clip.sample_rate > 0.0)) throw InvalidArgument("write_wav: sample_rate must be > 0");
  const double rate_rounded = std::round(clip.sample_rate);
  if (rate_rounded != clip.sample_rate || rate_rounded > 4294967295.0) {
    throw InvalidArgument("write_wav: WAV requires an integer sample rate");
  }
  const double to_counts = clip.calibration ? 1.0 / clip.calibration->upa_per_count() : 1.0;
  const int bps = bytes_per_sample(format);
  const bool is_float = format == SampleFormat::float32 || format == SampleFormat::float64;
  const std::uint64_t data_bytes = clip.samples.size() * static_cast<std::uint64_t>(bps);
  if (data_bytes > 0xFFFFFFFFull - 64) throw InvalidArgument("write_wav: clip exceeds 4 GiB");

  std::vector<unsigned char> b;
  b.reserve(44 + data_bytes);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(b, static_cast<std::uint32_t>(36 + data_bytes));
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, is_float ? kFormatFloat : kFormatPcm);
  put16(b, 1);
  const auto rate = static_cast<std::uint32_t>(rate_rounded);
  put32(b, rate);
  put32(b, rate * static_cast<std::uint32_t>(bps));
  put16(b, static_cast<std::uint16_t>(bps));
  put16(b, static_cast<std::uint16_t>(bps * 8));
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, static_cast<std::uint32_t>(data_bytes));

  std::size_t clamped = 0;
  auto quantize = [&](double x, double scale, double lo, double hi) {
    double q = std::round(x * scale);
    if (q < lo || q > hi || std::isnan(q)) {
      ++clamped;
      q = std::isnan(q) ? 0.0 : std::clamp(q, lo, hi);
    }
    return static_cast<std::int64_t>(q);
  };
  for (double s : clip.samples) {
    const double x = s * to_counts;
    switch (format) {
      case SampleFormat::pcm8:
        b.push_back(static_cast<unsigned char>(quantize(x, 128.0, -128.0, 127.0) + 128));
        break;
      case SampleFormat::pcm16:
        put16(b, static_cast<std::uint16_t>(quantize(x, 32768.0, -32768.0, 32767.0)));
        break;
      case SampleFormat::pcm24: {
        const auto v = static_cast<std::uint32_t>(quantize(x, 8388608.0, -8388608.0, 8388607.0));
        b.push_back(static_cast<unsigned char>(v & 0xFF));
        b.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
        b.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
        break;
      }
      case SampleFormat::pcm32:
        put32(b, static_cast<std::uint32_t>(
                     quantize(x, 2147483648.0, -2147483648.0, 2147483647.0)));
        break;
      case SampleFormat::float32: {
        const auto f = static_cast<float>(x);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put32(b, u);
        break;
      }
      case SampleFormat::float64: {
        std::uint64_t u;
        std::memcpy(&u, &x, 8);
        put32(b, static_cast<std::uint32_t>(u & 0xFFFFFFFFu));
        put32(b, static_cast<std::uint32_t>(u >> 32));
        break;
      }
    }
  }
  if (clamped) {
    warn(diag, fmt::format("write_wav: {} samples outside full scale were clamped", clamped));
  }
  return b;
}

void write_wav(const fs::path& path, const AudioClip& clip, SampleFormat format,
               Diagnostics* diag) {
  const auto bytes = encode_wav(clip, format, diag);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                           bytes.size()));
}

AudioClip apply_calibration(AudioClip clip, const Calibration& cal) {
  cal.validate();
  if (clip.calibration) throw InvalidArgument("apply_calibration: clip is already calibrated");
  const double k = cal.upa_per_count();
  for (double& s : clip.samples) s *= k;
  clip.calibration = cal;
  return clip;
}

std::vector<AudioClip> segment(const AudioClip& clip, double seg_len_s) {
  if (!(seg_len_s > 0.0)) throw InvalidArgument("segment: seg_len_s must be > 0");
  const auto seg_n = static_cast<std::size_t>(std::llround(seg_len_s * clip.sample_rate));
  std::vector<AudioClip> out;
  if (seg_n == 0) throw InvalidArgument("segment: segment shorter than one sample");
  const std::size_t count = clip.samples.size() / seg_n;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    AudioClip s;
    s.sample_rate = clip.sample_rate;
    s.site_id = clip.site_id;
    s.calibration = clip.calibration;
    const auto first = clip.samples.begin() + static_cast<std::ptrdiff_t>(i * seg_n);
    s.samples.assign(first, first + static_cast<std::ptrdiff_t>(seg_n));
    if (clip.start_time) {
      s.start_time = offset_seconds(*clip.start_time,
                                    static_cast<double>(i * seg_n) / clip.sample_rate);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RecordingMeta> read_recording_manifest(const fs::path& path, Diagnostics* diag) {
  const CsvTable t = read_csv(path);
  t.require_columns({"file_path", "site_id", "deployment_id", "start_time_iso8601",
                     "sensitivity_db", "fullscale_v", "gain_db"});
  const auto c_file = t.column("file_path"), c_site = t.column("site_id"),
             c_dep = t.column("deployment_id"), c_time = t.column("start_time_iso8601"),
             c_sens = t.column("sensitivity_db"), c_fs = t.column("fullscale_v"),
             c_gain = t.column("gain_db");
  const fs::path base = path.parent_path();
  std::vector<RecordingMeta> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    RecordingMeta m;
    m.file_path = row[c_file];
    if (m.file_path.is_relative()) m.file_path = base / m.file_path;
    m.site_id = row[c_site];
    m.deployment_id = row[c_dep];
    if (!row[c_time].empty()) {
      m.start_time = parse_iso8601(row[c_time]);
      if (!m.start_time) {
        warn(diag, fmt::format("{} row {}: unparseable start time '{}'", path.string(), r + 2,
                               row[c_time]));
      }
    }
    if (!m.start_time || m.site_id.empty()) {
      if (const auto stamp = parse_recording_filename(m.file_path)) {
        if (!m.start_time) m.start_time = stamp->start_time;
        if (m.site_id.empty()) m.site_id = stamp->site_id;
      }
    }
    if (!row[c_sens].empty()) {
      Calibration cal;
      cal.sensitivity_db_re_v_per_upa = parse_double(row[c_sens]);
      if (!row[c_fs].empty()) cal.adc_fullscale_v = parse_double(row[c_fs]);
      if (!row[c_gain].empty()) cal.gain_db = parse_double(row[c_gain]);
      cal.validate();
      m.calibration = cal;
    }
    std::error_code ec;
    if (fs::exists(m.file_path, ec)) {
      const WavInfo info = read_wav_info(m.file_path);
      m.sample_rate = info.sample_rate;
      m.duration_s = static_cast<double>(info.frames) / info.sample_rate;
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace reef
