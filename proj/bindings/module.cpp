#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnvks/errors.hpp"
#include "cnvks/significance.hpp"
#include "cnvks/spikein.hpp"

namespace py = pybind11;
using namespace cnvks;

namespace {

KernelShape shape_from(const std::string& name) {
  if (name == "flat") return KernelShape::flat;
  if (name == "epanechnikov") return KernelShape::epanechnikov;
  throw py::value_error("kernel must be 'flat' or 'epanechnikov'");
}

TransformKind transform_from(const std::string& name) {
  if (name == "p") return TransformKind::p;
  if (name == "z") return TransformKind::z;
  if (name == "log") return TransformKind::log;
  throw py::value_error("transform must be 'p', 'z' or 'log'");
}

KernelSpec kernel_from(const std::string& shape,
                       std::optional<std::size_t> bandwidth_markers,
                       std::optional<double> bandwidth_bp) {
  if (bandwidth_markers.has_value() == bandwidth_bp.has_value()) {
    throw py::value_error("pass exactly one of bandwidth_markers and bandwidth_bp");
  }
  if (bandwidth_markers) {
    return KernelSpec::constant_marker(shape_from(shape), *bandwidth_markers);
  }
  return KernelSpec::constant_width(shape_from(shape), *bandwidth_bp);
}

MarkerTrack track_from_arrays(
    const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& locations,
    const py::array_t<double, py::array::c_style | py::array::forcecast>& intensities) {
  if (locations.ndim() != 1) throw py::value_error("locations must be 1-D");
  if (intensities.ndim() != 2) {
    throw py::value_error("intensities must be 2-D (subjects x markers)");
  }
  const std::size_t J = static_cast<std::size_t>(locations.shape(0));
  const std::size_t n = static_cast<std::size_t>(intensities.shape(0));
  if (static_cast<std::size_t>(intensities.shape(1)) != J) {
    throw py::value_error("intensities must have one column per marker");
  }
  std::vector<std::int64_t> loc(locations.data(), locations.data() + J);
  std::vector<double> data(n * J);
  const auto view = intensities.unchecked<2>();
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t i = 0; i < n; ++i) data[j * n + i] = view(i, j);
  }
  return MarkerTrack::create(std::move(loc), {}, std::move(data), n);
}

py::array_t<double> intensities_to_numpy(const MarkerTrack& track) {
  const std::size_t n = track.n_subjects();
  const std::size_t J = track.n_markers();
  py::array_t<double> out({n, J});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t i = 0; i < n; ++i) view(i, j) = track.at(i, j);
  }
  return out;
}

Phenotype phenotype_from(const py::array_t<double, py::array::c_style |
                                                        py::array::forcecast>& values,
                         const std::string& kind) {
  std::vector<double> y(values.data(), values.data() + values.shape(0));
  if (kind == "continuous") return Phenotype::continuous(std::move(y));
  if (kind == "binary") return Phenotype::binary(std::move(y));
  throw py::value_error("kind must be 'continuous' or 'binary'");
}

MarkerTestTrack tests_from_arrays(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
    const std::optional<py::array_t<int, py::array::c_style | py::array::forcecast>>&
        s) {
  MarkerTestTrack tests;
  const std::size_t J = static_cast<std::size_t>(p.shape(0));
  tests.results.resize(J);
  tests.is_signed = s.has_value();
  for (std::size_t j = 0; j < J; ++j) {
    tests.results[j].p = p.data()[j];
    if (s) tests.results[j].s = s->data()[j] >= 0 ? 1 : -1;
  }
  return tests;
}

sim::SimScenario scenario_from_kwargs(std::size_t n, std::size_t markers,
                                      std::size_t cnv_markers,
                                      std::optional<std::size_t> cnv_offset,
                                      double gamma, double snr, double effect,
                                      const std::string& phenotype,
                                      const std::string& noise, int noise_df,
                                      const std::string& residual_file,
                                      std::int64_t spacing_bp,
                                      const std::string& locations_file) {
  sim::SimScenario scenario;
  scenario.n = n;
  scenario.J = markers;
  scenario.cnv_markers = cnv_markers;
  scenario.cnv_offset = cnv_offset;
  scenario.gamma = gamma;
  scenario.snr = snr;
  scenario.effect = effect;
  scenario.phenotype_kind =
      phenotype == "binary" ? PhenotypeKind::binary : PhenotypeKind::continuous;
  if (noise == "gaussian") {
    scenario.noise.model = sim::NoiseModel::gaussian;
  } else if (noise == "student-t") {
    scenario.noise.model = sim::NoiseModel::student_t;
  } else if (noise == "skew") {
    scenario.noise.model = sim::NoiseModel::skew;
  } else if (noise == "file") {
    scenario.noise.model = sim::NoiseModel::file;
  } else {
    throw py::value_error("noise must be gaussian|student-t|skew|file");
  }
  scenario.noise.student_df = noise_df;
  scenario.noise.residual_path = residual_file;
  if (!locations_file.empty()) {
    scenario.spacing.model = sim::SpacingModel::from_file;
    scenario.spacing.locations_path = locations_file;
  }
  scenario.spacing.spacing_bp = spacing_bp;
  scenario.validate();
  return scenario;
}

template <typename T>
py::array_t<T> to_numpy(const std::vector<T>& values) {
  py::array_t<T> out(values.size());
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kernel-aggregated marker-level CNV association testing";

  py::register_exception<Error>(m, "CnvksError", PyExc_ValueError);

  py::class_<MarkerTrack>(m, "MarkerTrack")
      .def(py::init(&track_from_arrays), py::arg("locations"), py::arg("intensities"))
      .def_property_readonly("n_subjects", &MarkerTrack::n_subjects)
      .def_property_readonly("n_markers", &MarkerTrack::n_markers)
      .def_property_readonly(
          "locations",
          [](const MarkerTrack& track) { return to_numpy(track.locations()); })
      .def_property_readonly("intensities", &intensities_to_numpy);

  py::class_<Phenotype>(m, "Phenotype")
      .def(py::init(&phenotype_from), py::arg("values"), py::arg("kind") = "continuous")
      .def_property_readonly(
          "values", [](const Phenotype& phen) { return to_numpy(phen.values); })
      .def_property_readonly("kind", [](const Phenotype& phen) {
        return phen.kind == PhenotypeKind::continuous ? "continuous" : "binary";
      });

  py::class_<NullDistribution>(m, "NullDistribution")
      .def_property_readonly(
          "draws", [](const NullDistribution& null) { return to_numpy(null.draws); })
      .def_property_readonly("B", &NullDistribution::B)
      .def_property_readonly("method", [](const NullDistribution& null) {
        return null.method == NullMethod::permutation ? "permutation" : "monte_carlo";
      });

  py::class_<ScanResult>(m, "ScanResult")
      .def_property_readonly("t_max",
                             [](const ScanResult& r) { return r.observed_t_max; })
      .def_property_readonly("global_p", [](const ScanResult& r) { return r.global_p; })
      .def_property_readonly("threshold",
                             [](const ScanResult& r) { return r.threshold; })
      .def_property_readonly("alpha", [](const ScanResult& r) { return r.alpha; })
      .def_property_readonly(
          "values", [](const ScanResult& r) { return to_numpy(r.profile.values); })
      .def_property_readonly("valid",
                             [](const ScanResult& r) {
                               py::array_t<bool> out(r.profile.valid.size());
                               for (std::size_t j = 0; j < r.profile.valid.size(); ++j) {
                                 out.mutable_data()[j] = r.profile.valid[j] != 0;
                               }
                               return out;
                             })
      .def_property_readonly(
          "locations",
          [](const ScanResult& r) { return to_numpy(r.profile.locations); })
      .def_property_readonly("significant_markers",
                             [](const ScanResult& r) {
                               return to_numpy(std::vector<std::int64_t>(
                                   r.significant_markers.begin(),
                                   r.significant_markers.end()));
                             })
      .def_property_readonly("null", [](const ScanResult& r) { return r.null; });

  m.def("load_track",
        py::overload_cast<const std::string&>(&load_track), py::arg("intensity_path"));
  m.def("load_track",
        py::overload_cast<const std::string&, const std::string&>(&load_track),
        py::arg("intensity_path"), py::arg("location_path"));
  m.def("write_track", &write_track, py::arg("track"), py::arg("path"));
  m.def(
      "load_phenotype",
      [](const std::string& path, const std::string& kind, std::size_t expected_n) {
        return load_phenotype(
            path, kind == "binary" ? PhenotypeKind::binary : PhenotypeKind::continuous,
            expected_n);
      },
      py::arg("path"), py::arg("kind") = "continuous", py::arg("expected_n") = 0);

  m.def(
      "run_marker_tests",
      [](const MarkerTrack& track, const Phenotype& phen) {
        const MarkerTestTrack tests = run_marker_tests(track, phen);
        py::array_t<double> p(tests.size());
        py::array_t<int> s(tests.size());
        for (std::size_t j = 0; j < tests.size(); ++j) {
          p.mutable_data()[j] = tests.results[j].p;
          s.mutable_data()[j] = tests.results[j].s.value_or(1);
        }
        return py::make_tuple(p, s);
      },
      py::arg("track"), py::arg("phenotype"),
      "Per-marker two-sided p-values and directions of association");

  m.def(
      "aggregate",
      [](const MarkerTrack& track,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
         const std::optional<py::array_t<int, py::array::c_style |
                                                  py::array::forcecast>>& s,
         const std::string& kernel, std::optional<std::size_t> bandwidth_markers,
         std::optional<double> bandwidth_bp, const std::string& transform,
         bool is_signed) {
        const KernelSpec kspec = kernel_from(kernel, bandwidth_markers, bandwidth_bp);
        const TransformSpec tspec{transform_from(transform), is_signed};
        const MarkerTestTrack tests = tests_from_arrays(p, s);
        const AggregationProfile profile = aggregate(tests, track, kspec, tspec);
        py::array_t<bool> valid(profile.valid.size());
        for (std::size_t j = 0; j < profile.valid.size(); ++j) {
          valid.mutable_data()[j] = profile.valid[j] != 0;
        }
        return py::make_tuple(to_numpy(profile.values), valid);
      },
      py::arg("track"), py::arg("p"), py::arg("s") = std::nullopt,
      py::arg("kernel") = "flat", py::arg("bandwidth_markers") = std::nullopt,
      py::arg("bandwidth_bp") = std::nullopt, py::arg("transform") = "z",
      py::arg("signed") = true,
      "Kernel-weighted aggregation profile (NaN at masked boundary targets)");

  m.def(
      "scan",
      [](const MarkerTrack& track, const Phenotype& phen, const std::string& kernel,
         std::optional<std::size_t> bandwidth_markers,
         std::optional<double> bandwidth_bp, const std::string& transform,
         bool is_signed, std::size_t permutations, double alpha, std::uint64_t seed,
         int workers, bool exhaustive) {
        const KernelSpec kspec = kernel_from(kernel, bandwidth_markers, bandwidth_bp);
        const TransformSpec tspec{transform_from(transform), is_signed};
        return scan(track, phen, kspec, tspec, permutations, alpha, seed, workers,
                    exhaustive);
      },
      py::arg("track"), py::arg("phenotype"), py::arg("kernel") = "flat",
      py::arg("bandwidth_markers") = std::nullopt,
      py::arg("bandwidth_bp") = std::nullopt, py::arg("transform") = "z",
      py::arg("signed") = true, py::arg("permutations") = 1000,
      py::arg("alpha") = 0.05, py::arg("seed") = 1, py::arg("workers") = 1,
      py::arg("exhaustive") = false,
      "Observed profile, permutation null, add-one global p-value and the "
      "FWER threshold");

  m.def(
      "permutation_null",
      [](const MarkerTrack& track, const Phenotype& phen, const std::string& kernel,
         std::optional<std::size_t> bandwidth_markers,
         std::optional<double> bandwidth_bp, const std::string& transform,
         bool is_signed, std::size_t permutations, std::uint64_t seed, int workers) {
        const KernelSpec kspec = kernel_from(kernel, bandwidth_markers, bandwidth_bp);
        const TransformSpec tspec{transform_from(transform), is_signed};
        return permutation_null(track, phen, kspec, tspec, permutations, seed,
                                workers);
      },
      py::arg("track"), py::arg("phenotype"), py::arg("kernel") = "flat",
      py::arg("bandwidth_markers") = std::nullopt,
      py::arg("bandwidth_bp") = std::nullopt, py::arg("transform") = "z",
      py::arg("signed") = true, py::arg("permutations") = 1000, py::arg("seed") = 1,
      py::arg("workers") = 1);

  m.def(
      "monte_carlo_null",
      [](const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>&
             locations,
         const std::string& kernel, std::optional<std::size_t> bandwidth_markers,
         std::optional<double> bandwidth_bp, const std::string& transform,
         bool is_signed, std::size_t draws, std::uint64_t seed, int workers) {
        const KernelSpec kspec = kernel_from(kernel, bandwidth_markers, bandwidth_bp);
        const TransformSpec tspec{transform_from(transform), is_signed};
        std::vector<std::int64_t> loc(locations.data(),
                                      locations.data() + locations.shape(0));
        return monte_carlo_null(loc, kspec, tspec, draws, seed, workers);
      },
      py::arg("locations"), py::arg("kernel") = "flat",
      py::arg("bandwidth_markers") = std::nullopt,
      py::arg("bandwidth_bp") = std::nullopt, py::arg("transform") = "z",
      py::arg("signed") = true, py::arg("draws") = 1000, py::arg("seed") = 1,
      py::arg("workers") = 1);

  m.def("global_p", &global_p, py::arg("t_max"), py::arg("null"));
  m.def("threshold", &threshold, py::arg("null"), py::arg("alpha"));

  m.def(
      "simulate_dataset",
      [](std::size_t n, std::size_t markers, std::size_t cnv_markers,
         std::optional<std::size_t> cnv_offset, double gamma, double snr,
         double effect, const std::string& phenotype, const std::string& noise,
         int noise_df, const std::string& residual_file, std::int64_t spacing_bp,
         const std::string& locations_file, std::uint64_t seed) {
        const sim::SimScenario scenario = scenario_from_kwargs(
            n, markers, cnv_markers, cnv_offset, gamma, snr, effect, phenotype,
            noise, noise_df, residual_file, spacing_bp, locations_file);
        sim::SimDataset dataset = sim::build_dataset(scenario, seed);
        py::array_t<bool> carrier(dataset.carrier.size());
        for (std::size_t i = 0; i < dataset.carrier.size(); ++i) {
          carrier.mutable_data()[i] = dataset.carrier[i] != 0;
        }
        return py::make_tuple(dataset.track, dataset.phen, carrier,
                              py::make_tuple(dataset.cnv_begin, dataset.cnv_end));
      },
      py::arg("n") = 1000, py::arg("markers") = 200, py::arg("cnv_markers") = 30,
      py::arg("cnv_offset") = std::nullopt, py::arg("gamma") = 0.1,
      py::arg("snr") = 0.8, py::arg("effect") = 0.4,
      py::arg("phenotype") = "continuous", py::arg("noise") = "gaussian",
      py::arg("noise_df") = 3, py::arg("residual_file") = "",
      py::arg("spacing_bp") = 1500, py::arg("locations_file") = "",
      py::arg("seed") = 1,
      "Spike-in dataset: (track, phenotype, carrier mask, (cnv_begin, cnv_end))");
}
