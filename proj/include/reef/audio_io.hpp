#pragma once

#include "reef/common.hpp"
#include "reef/timeutil.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reef {

// Hydrophone + recorder gain chain mapping normalized ADC counts in
// [-1, 1] to pressure in micropascals.
struct Calibration {
  double sensitivity_db_re_v_per_upa = -165.0;
  double adc_fullscale_v = 1.0;
  double gain_db = 0.0;

  // µPa per unit of normalized count.
  double upa_per_count() const;
  void validate() const;

  friend bool operator==(const Calibration&, const Calibration&) = default;
};

// Pressure (µPa, when calibration is set) or normalized counts with
// provenance. start_time is absent when it could not be determined.
struct AudioClip {
  std::vector<double> samples;
  double sample_rate = 0.0;
  std::optional<Timestamp> start_time;
  std::string site_id;
  std::optional<Calibration> calibration;

  bool calibrated() const { return calibration.has_value(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }

  // Throws InvalidArgument unless sample_rate > 0 and samples is non-empty.
  void validate() const;
};

struct RecordingMeta {
  std::string site_id;
  std::string deployment_id;
  std::filesystem::path file_path;
  std::optional<Timestamp> start_time;
  double duration_s = 0.0;
  double sample_rate = 0.0;
  std::optional<Calibration> calibration;
};

enum class SampleFormat { pcm8, pcm16, pcm24, pcm32, float32, float64 };

struct WavInfo {
  int channels = 0;
  double sample_rate = 0.0;
  std::size_t frames = 0;
  SampleFormat format = SampleFormat::pcm16;
};

// Parses only the RIFF header. Throws InputError on malformed files and on
// encodings other than integer PCM or IEEE float.
WavInfo read_wav_info(const std::filesystem::path& path);

// Loads a mono WAV. Samples are normalized to [-1, 1], then mapped to µPa
// when `cal` is given. Site and start time come from the
// "<site>_<YYYYMMDD>T<HHMMSS>Z.wav" file name; a name that does not match
// leaves start_time empty and emits a warning.
AudioClip read_wav(const std::filesystem::path& path,
                   const std::optional<Calibration>& cal = std::nullopt,
                   Diagnostics* diag = nullptr);

// Loads the file described by a manifest row; manifest fields take
// precedence over the file name.
AudioClip read_wav(const RecordingMeta& meta, Diagnostics* diag = nullptr);

// Calibrated clips are mapped back to normalized counts before encoding.
// PCM output clamps to full scale, with a warning when clamping occurred.
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               SampleFormat format = SampleFormat::pcm16, Diagnostics* diag = nullptr);

// Encodes to an in-memory RIFF image; write_wav writes exactly these bytes.
std::vector<unsigned char> encode_wav(const AudioClip& clip, SampleFormat format,
                                      Diagnostics* diag = nullptr);

AudioClip apply_calibration(AudioClip clip, const Calibration& cal);

// Consecutive, non-overlapping segments of round(seg_len_s * rate)
// samples. The trailing remainder is dropped.
std::vector<AudioClip> segment(const AudioClip& clip, double seg_len_s);

struct FilenameStamp {
  std::string site_id;
  Timestamp start_time;
};

std::optional<FilenameStamp> parse_recording_filename(const std::filesystem::path& path);

// Manifest columns: file_path, site_id, deployment_id, start_time_iso8601,
// sensitivity_db, fullscale_v, gain_db. Blank calibration fields leave the
// recording uncalibrated; relative paths resolve against the manifest's
// directory. Blank site or start time fall back to the file name stamp.
// Duration and rate are filled from each file's header when the
// file exists.
std::vector<RecordingMeta> read_recording_manifest(const std::filesystem::path& path,
                                                   Diagnostics* diag = nullptr);

}  // namespace reef
