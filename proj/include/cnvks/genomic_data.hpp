#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cnvks {

/// Ordered marker locations with a dense per-subject intensity matrix.
/// Values are immutable after construction and safe to share across threads.
class MarkerTrack {
 public:
  /// Empty placeholder; real tracks come from create() or the loaders.
  MarkerTrack() = default;

  /// Builds a validated track. `data` is column-major: entry (subject i,
  /// marker j) lives at data[j * n + i]. Locations must be strictly
  /// increasing; `ids` may be empty.
  static MarkerTrack create(std::vector<std::int64_t> locations,
                            std::vector<std::string> ids,
                            std::vector<double> data, std::size_t n_subjects);

  std::size_t n_subjects() const { return n_; }
  std::size_t n_markers() const { return locations_.size(); }

  const std::vector<std::int64_t>& locations() const { return locations_; }
  const std::vector<std::string>& marker_ids() const { return ids_; }

  double at(std::size_t subject, std::size_t marker) const {
    return data_[marker * n_ + subject];
  }
  std::span<const double> column(std::size_t marker) const {
    return {data_.data() + marker * n_, n_};
  }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::vector<std::int64_t> locations_;
  std::vector<std::string> ids_;
  std::vector<double> data_;  // column-major, one contiguous block per marker
  std::size_t n_ = 0;
};

enum class PhenotypeKind { continuous, binary };

/// Per-subject outcome vector, paired positionally with the track's rows.
struct Phenotype {
  std::vector<double> values;
  PhenotypeKind kind = PhenotypeKind::continuous;

  static Phenotype continuous(std::vector<double> values);
  /// Binary labels must be exactly 0 or 1 with both classes present.
  static Phenotype binary(std::vector<double> values);

  std::size_t size() const { return values.size(); }
};

/// Loads a track from the intensity TSV
/// (`marker_id<TAB>position<TAB>S1<TAB>S2...`, one row per marker).
/// Markers are sorted by position; duplicate positions are rejected.
MarkerTrack load_track(const std::string& intensity_path);

/// Variant with positions in a separate two-column file
/// (`marker_id<TAB>position`), joined to the intensity rows by line order.
/// The intensity file then has no position column.
MarkerTrack load_track(const std::string& intensity_path,
                       const std::string& location_path);

void write_track(const MarkerTrack& track, const std::string& path);

/// One value per line, optional leading `phenotype` header. When
/// `expected_n` is nonzero the line count must match it.
Phenotype load_phenotype(const std::string& path, PhenotypeKind kind,
                         std::size_t expected_n = 0);

}  // namespace cnvks
