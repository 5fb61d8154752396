#include "cnvks/genomic_data.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cnvks/errors.hpp"

namespace cnvks {

namespace {

std::vector<std::string> split_tsv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
    fields.back().pop_back();
  }
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    fail(ErrorCode::MalformedRow,
         "line " + std::to_string(line_no) + ": cannot parse value '" + s + "'");
  }
  return v;
}

std::int64_t parse_position(const std::string& s, std::size_t line_no) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    fail(ErrorCode::MalformedRow, "line " + std::to_string(line_no) +
                                      ": invalid position '" + s + "'");
  }
  return v;
}

std::ifstream open_or_fail(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return in;
}

struct RawRows {
  std::vector<std::string> ids;
  std::vector<std::int64_t> positions;          // empty if not in the file
  std::vector<std::vector<double>> intensities; // one vector per marker row
};

RawRows read_intensity_rows(const std::string& path, bool with_positions) {
  auto in = open_or_fail(path);
  RawRows rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t n_subjects = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tsv(line);
    if (!saw_header) {
      if (fields.empty() || fields[0] != "marker_id") {
        fail(ErrorCode::MalformedRow, "missing 'marker_id' header in " + path);
      }
      const std::size_t lead = with_positions ? 2 : 1;
      if (fields.size() <= lead) {
        fail(ErrorCode::MalformedRow, "header has no subject columns in " + path);
      }
      n_subjects = fields.size() - lead;
      saw_header = true;
      continue;
    }
    const std::size_t lead = with_positions ? 2 : 1;
    if (fields.size() != lead + n_subjects) {
      fail(ErrorCode::MalformedRow,
           "line " + std::to_string(line_no) + ": expected " +
               std::to_string(lead + n_subjects) + " fields, got " +
               std::to_string(fields.size()));
    }
    rows.ids.push_back(fields[0]);
    if (with_positions) rows.positions.push_back(parse_position(fields[1], line_no));
    std::vector<double> values(n_subjects);
    for (std::size_t s = 0; s < n_subjects; ++s) {
      const double v = parse_double(fields[lead + s], line_no);
      if (!std::isfinite(v)) {
        fail(ErrorCode::NonFiniteValue, "line " + std::to_string(line_no) +
                                            ": non-finite intensity for marker '" +
                                            fields[0] + "'");
      }
      values[s] = v;
    }
    rows.intensities.push_back(std::move(values));
  }
  if (!saw_header) fail(ErrorCode::MalformedRow, "empty intensity file " + path);
  if (rows.ids.empty()) fail(ErrorCode::MalformedRow, "no marker rows in " + path);
  return rows;
}

MarkerTrack assemble(RawRows rows) {
  const std::size_t J = rows.ids.size();
  const std::size_t n = rows.intensities.front().size();
  // Sort markers by position, keeping ids and intensity rows aligned.
  std::vector<std::size_t> order(J);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows.positions[a] < rows.positions[b];
  });
  std::vector<std::int64_t> locations(J);
  std::vector<std::string> ids(J);
  std::vector<double> data(n * J);
  for (std::size_t j = 0; j < J; ++j) {
    const std::size_t src = order[j];
    locations[j] = rows.positions[src];
    ids[j] = std::move(rows.ids[src]);
    std::copy(rows.intensities[src].begin(), rows.intensities[src].end(),
              data.begin() + j * n);
  }
  return MarkerTrack::create(std::move(locations), std::move(ids), std::move(data), n);
}

}  // namespace

MarkerTrack MarkerTrack::create(std::vector<std::int64_t> locations,
                                std::vector<std::string> ids,
                                std::vector<double> data, std::size_t n_subjects) {
  const std::size_t J = locations.size();
  if (J == 0) fail(ErrorCode::DimensionMismatch, "track needs at least one marker");
  if (n_subjects == 0) fail(ErrorCode::DimensionMismatch, "track needs subjects");
  if (data.size() != n_subjects * J) {
    fail(ErrorCode::DimensionMismatch,
         "intensity matrix is " + std::to_string(data.size()) + " values, expected " +
             std::to_string(n_subjects) + " x " + std::to_string(J));
  }
  if (!ids.empty() && ids.size() != J) {
    fail(ErrorCode::DimensionMismatch, "marker_ids length does not match markers");
  }
  for (std::size_t j = 0; j < J; ++j) {
    if (locations[j] < 0) fail(ErrorCode::MalformedRow, "negative marker position");
    if (j > 0 && locations[j] == locations[j - 1]) {
      fail(ErrorCode::DuplicateLocation,
           "position " + std::to_string(locations[j]) + " appears more than once");
    }
    if (j > 0 && locations[j] < locations[j - 1]) {
      fail(ErrorCode::MalformedRow, "locations must be sorted ascending");
    }
  }
  for (double v : data) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "non-finite intensity");
  }
  MarkerTrack track;
  track.locations_ = std::move(locations);
  track.ids_ = std::move(ids);
  track.data_ = std::move(data);
  track.n_ = n_subjects;
  return track;
}

Phenotype Phenotype::continuous(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::LengthMismatch, "empty phenotype");
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "non-finite phenotype value");
  }
  return Phenotype{std::move(values), PhenotypeKind::continuous};
}

Phenotype Phenotype::binary(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::LengthMismatch, "empty phenotype");
  std::size_t ones = 0;
  for (double v : values) {
    if (v != 0.0 && v != 1.0) {
      fail(ErrorCode::NonBinaryValue, "binary phenotype value must be 0 or 1");
    }
    ones += (v == 1.0);
  }
  if (ones == 0 || ones == values.size()) {
    fail(ErrorCode::DegenerateGroups, "binary phenotype must contain both classes");
  }
  return Phenotype{std::move(values), PhenotypeKind::binary};
}

MarkerTrack load_track(const std::string& intensity_path) {
  return assemble(read_intensity_rows(intensity_path, /*with_positions=*/true));
}

MarkerTrack load_track(const std::string& intensity_path,
                       const std::string& location_path) {
  RawRows rows = read_intensity_rows(intensity_path, /*with_positions=*/false);
  auto in = open_or_fail(location_path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tsv(line);
    if (fields.size() != 2) {
      fail(ErrorCode::MalformedRow,
           "locations line " + std::to_string(line_no) + ": expected 2 fields");
    }
    if (fields[0] == "marker_id") continue;  // optional header
    if (row >= rows.ids.size()) {
      fail(ErrorCode::LengthMismatch, "more locations than intensity rows");
    }
    if (fields[0] != rows.ids[row]) {
      fail(ErrorCode::MalformedRow, "locations line " + std::to_string(line_no) +
                                        ": marker_id '" + fields[0] +
                                        "' does not match intensity row '" +
                                        rows.ids[row] + "'");
    }
    rows.positions.push_back(parse_position(fields[1], line_no));
    ++row;
  }
  if (row != rows.ids.size()) {
    fail(ErrorCode::LengthMismatch, "fewer locations than intensity rows");
  }
  return assemble(std::move(rows));
}

void write_track(const MarkerTrack& track, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << "marker_id\tposition";
  for (std::size_t i = 0; i < track.n_subjects(); ++i) out << "\tS" << (i + 1);
  out << '\n';
  char buf[32];
  for (std::size_t j = 0; j < track.n_markers(); ++j) {
    if (track.marker_ids().empty()) {
      out << 'm' << (j + 1);
    } else {
      out << track.marker_ids()[j];
    }
    out << '\t' << track.locations()[j];
    for (std::size_t i = 0; i < track.n_subjects(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), track.at(i, j));
      out << '\t';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

Phenotype load_phenotype(const std::string& path, PhenotypeKind kind,
                         std::size_t expected_n) {
  auto in = open_or_fail(path);
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (first && line == "phenotype") {
      first = false;
      continue;
    }
    first = false;
    values.push_back(parse_double(line, line_no));
  }
  if (expected_n != 0 && values.size() != expected_n) {
    fail(ErrorCode::LengthMismatch, "phenotype has " + std::to_string(values.size()) +
                                        " values, expected " +
                                        std::to_string(expected_n));
  }
  if (kind == PhenotypeKind::binary) return Phenotype::binary(std::move(values));
  return Phenotype::continuous(std::move(values));
}

}  // namespace cnvks
