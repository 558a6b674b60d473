#pragma once

// Annotation and detection CSV files.
//
//   annotations: start_frame,end_frame,label   (header row required)
//                an empty end_frame marks an instant event, widened by
//                AnnotationOptions::instant_pad frames on each side
//   detections:  start_frame,end_frame,score

#include "evseg/events.hpp"
#include "evseg/feature_stream.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace evseg {

struct AnnotationSet {
  std::vector<EventInterval> intervals;
  std::uint64_t total_frames = 0;
  Rational fps;

  double duration_minutes() const {
    return static_cast<double>(total_frames) / fps.value() / 60.0;
  }
  /// Throws ContractError unless intervals lie inside [0, total_frames).
  void validate() const;
};

struct AnnotationOptions {
  std::uint64_t instant_pad = 0;
};

AnnotationSet read_annotations(std::istream& in, std::uint64_t total_frames, Rational fps,
                               AnnotationOptions options = {});
AnnotationSet load_annotations(const std::filesystem::path& path, std::uint64_t total_frames,
                               Rational fps, AnnotationOptions options = {});
void write_annotations(std::ostream& out, std::span<const EventInterval> intervals);
void save_annotations(const std::filesystem::path& path, std::span<const EventInterval> intervals);

void write_detections(std::ostream& out, std::span<const EventInterval> intervals);
void save_detections(const std::filesystem::path& path, std::span<const EventInterval> intervals);
std::vector<EventInterval> read_detections(std::istream& in);
std::vector<EventInterval> load_detections(const std::filesystem::path& path);

}  // namespace evseg
