#include "cnvks/tsv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "cnvks/errors.hpp"

namespace cnvks::tsv {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  return out;
}

void write_meta(std::ofstream& out, const Metadata& meta) {
  for (const auto& [key, value] : meta) out << "# " << key << " = " << value << '\n';
}

void close_or_fail(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::string bandwidth_mode_name(const sim::MethodConfig& method) {
  switch (method.bandwidth) {
    case sim::BandwidthSetting::markers: return "constant_marker";
    case sim::BandwidthSetting::width: return "constant_width";
    case sim::BandwidthSetting::matched_markers: return "constant_marker";
    case sim::BandwidthSetting::matched_width: return "constant_width";
  }
  return "?";
}

std::string bandwidth_value(const sim::MethodConfig& method) {
  switch (method.bandwidth) {
    case sim::BandwidthSetting::markers: return std::to_string(method.k);
    case sim::BandwidthSetting::width: return format_double(method.width_bp);
    case sim::BandwidthSetting::matched_markers: return "matched";
    case sim::BandwidthSetting::matched_width: return "matched";
  }
  return "?";
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_marker_tests(const std::string& path, const Metadata& meta,
                        const MarkerTrack& track, const MarkerTestTrack& tests) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "marker_id\tposition\tp\ts\n";
  for (std::size_t j = 0; j < tests.size(); ++j) {
    if (track.marker_ids().empty()) {
      out << 'm' << (j + 1);
    } else {
      out << track.marker_ids()[j];
    }
    out << '\t' << track.locations()[j] << '\t' << format_double(tests.results[j].p)
        << '\t';
    if (tests.is_signed && tests.results[j].s) {
      out << (*tests.results[j].s > 0 ? "+1" : "-1");
    }
    out << '\n';
  }
  close_or_fail(out, path);
}

void write_profile(const std::string& path, const Metadata& meta,
                   const AggregationProfile& profile) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "position\tT\tvalid\n";
  for (std::size_t j = 0; j < profile.values.size(); ++j) {
    out << profile.locations[j] << '\t' << format_double(profile.values[j]) << '\t'
        << (profile.valid[j] ? 1 : 0) << '\n';
  }
  close_or_fail(out, path);
}

void write_scan(const std::string& path, const Metadata& meta,
                const ScanResult& result) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "position\tT\tvalid\tthreshold\tsignificant\n";
  std::vector<std::uint8_t> significant(result.profile.values.size(), 0);
  for (std::size_t j : result.significant_markers) significant[j] = 1;
  for (std::size_t j = 0; j < result.profile.values.size(); ++j) {
    out << result.profile.locations[j] << '\t'
        << format_double(result.profile.values[j]) << '\t'
        << (result.profile.valid[j] ? 1 : 0) << '\t'
        << format_double(result.threshold) << '\t' << (significant[j] ? 1 : 0)
        << '\n';
  }
  close_or_fail(out, path);
}

void write_null_draws(const std::string& path, const Metadata& meta,
                      const NullDistribution& null) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "# method = "
      << (null.method == NullMethod::permutation ? "permutation" : "monte_carlo")
      << '\n';
  out << "# B = " << null.B() << '\n';
  if (null.exhaustive) {
    out << "# exhaustive = true\n";
  } else {
    out << "# seed = " << null.seed << '\n';
  }
  for (double draw : null.draws) out << format_double(draw) << '\n';
  close_or_fail(out, path);
}

void write_scan_summary(const std::string& path, const Metadata& meta,
                        const ScanResult& result) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "t_max\tglobal_p\talpha\tthreshold\n";
  out << format_double(result.observed_t_max) << '\t'
      << format_double(result.global_p) << '\t' << format_double(result.alpha)
      << '\t' << format_double(result.threshold) << '\n';
  close_or_fail(out, path);
}

void write_null_check(const std::string& path, const Metadata& meta,
                      const std::vector<sim::NullCheckSetting>& settings) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "setting\tmethod\treplicates\trejection_rate\tse\n";
  for (const auto& s : settings) {
    out << s.name << "\tpermutation\t" << s.p_perm.size() << '\t'
        << format_double(s.rate_perm) << '\t' << format_double(s.se_perm) << '\n';
    out << s.name << "\tmonte_carlo\t" << s.p_mc.size() << '\t'
        << format_double(s.rate_mc) << '\t' << format_double(s.se_mc) << '\n';
  }
  close_or_fail(out, path);
}

void write_power_table(const std::string& path, const Metadata& meta,
                       const std::vector<sim::PowerCell>& cells) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "n\tmarkers\tcnv_markers\tgamma\tsnr\teffect\tphenotype\tnoise\tspacing\t"
         "kernel\tbandwidth_mode\tbandwidth\ttransform\tsigned\tmethod\tB\talpha\t"
         "power\tse\treplicates\terror\n";
  for (const auto& cell : cells) {
    const auto& sc = cell.scenario;
    const auto& mt = cell.method;
    out << sc.n << '\t' << sc.J << '\t' << sc.cnv_markers << '\t'
        << format_double(sc.gamma) << '\t' << format_double(sc.snr) << '\t'
        << format_double(sc.effect) << '\t'
        << (sc.phenotype_kind == PhenotypeKind::continuous ? "continuous" : "binary")
        << '\t';
    switch (sc.noise.model) {
      case sim::NoiseModel::gaussian: out << "gaussian"; break;
      case sim::NoiseModel::student_t: out << "student-t"; break;
      case sim::NoiseModel::skew: out << "skew"; break;
      case sim::NoiseModel::file: out << "file"; break;
    }
    out << '\t'
        << (sc.spacing.model == sim::SpacingModel::equal ? "equal" : "file") << '\t'
        << to_string(mt.shape) << '\t' << bandwidth_mode_name(mt) << '\t'
        << bandwidth_value(mt) << '\t' << to_string(mt.transform.kind) << '\t'
        << (mt.transform.is_signed ? "true" : "false") << '\t'
        << (mt.null_method == NullMethod::permutation ? "permutation" : "monte-carlo")
        << '\t' << mt.B << '\t' << format_double(mt.alpha) << '\t'
        << format_double(cell.power) << '\t' << format_double(cell.se) << '\t'
        << cell.replicates << '\t' << cell.error << '\n';
  }
  close_or_fail(out, path);
}

void write_truth(const std::string& path, const Metadata& meta,
                 const sim::SimDataset& dataset) {
  auto out = open_out(path);
  write_meta(out, meta);
  out << "# cnv_begin_index = " << dataset.cnv_begin << '\n';
  out << "# cnv_end_index = " << dataset.cnv_end << '\n';
  out << "# cnv_begin_bp = " << dataset.track.locations()[dataset.cnv_begin] << '\n';
  out << "# cnv_end_bp = " << dataset.track.locations()[dataset.cnv_end - 1] << '\n';
  out << "subject\tcarrier\n";
  for (std::size_t i = 0; i < dataset.carrier.size(); ++i) {
    out << 'S' << (i + 1) << '\t' << (dataset.carrier[i] ? 1 : 0) << '\n';
  }
  close_or_fail(out, path);
}

void write_phenotype(const std::string& path, const Phenotype& phen) {
  auto out = open_out(path);
  out << "phenotype\n";
  for (double v : phen.values) out << format_double(v) << '\n';
  close_or_fail(out, path);
}

}  // namespace cnvks::tsv
