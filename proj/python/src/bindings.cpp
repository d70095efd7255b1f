#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mispro/corpus.hpp"
#include "mispro/detector.hpp"
#include "mispro/eigenspace.hpp"
#include "mispro/error.hpp"
#include "mispro/features.hpp"
#include "mispro/harness.hpp"
#include "mispro/json_io.hpp"
#include "mispro/preprocess.hpp"
#include "mispro/report.hpp"
#include "mispro/synth.hpp"
#include "mispro/threshold.hpp"
#include "mispro/wav.hpp"

namespace py = pybind11;
using namespace mispro;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

Utterance make_utterance(const Array& samples, double rate,
                         const std::optional<std::vector<std::pair<std::size_t, std::size_t>>>& boundaries) {
  Utterance u;
  u.samples = to_vector(samples);
  u.sample_rate = rate;
  if (boundaries) {
    u.boundaries.emplace();
    for (const auto& [s, e] : *boundaries) u.boundaries->push_back({s, e});
  }
  if (rate != kCanonicalSampleRate) u = corpus::resample(u, kCanonicalSampleRate);
  return u;
}

py::object parse_json(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

}  // namespace

PYBIND11_MODULE(_mispro, m) {
  m.doc() = "PCA-based hierarchical mispronunciation detection";

  static py::exception<Error> base(m, "MisproError");
  static py::exception<Error> usage(m, "UsageError", base.ptr());
  static py::exception<Error> data(m, "DataError", base.ptr());
  static py::exception<Error> numerical(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Usage: py::set_error(usage, e.what()); break;
        case ErrorKind::Data: py::set_error(data, e.what()); break;
        case ErrorKind::Numerical: py::set_error(numerical, e.what()); break;
      }
    }
  });

  m.def(
      "synthesize",
      [](const std::filesystem::path& out_dir, std::uint64_t seed, std::optional<std::string> spec_json) {
        const auto spec = spec_json ? corpus::parse_synth_spec(*spec_json) : corpus::reference_synth_spec();
        return corpus::write_corpus(corpus::synthesize_corpus(spec, seed), out_dir).manifest_path;
      },
      py::arg("out_dir"), py::arg("seed"), py::arg("spec_json") = py::none(),
      "Render a synthetic corpus (the reference spec unless spec_json is given); returns the manifest path.");
  m.def("reference_spec_json", [] { return corpus::synth_spec_to_json(corpus::reference_synth_spec()); });

  m.def(
      "read_wav",
      [](const std::filesystem::path& path) {
        const auto w = wav::read(path);
        return py::make_tuple(to_array(w.samples), w.sample_rate, w.channels);
      },
      py::arg("path"), "Returns (samples in [-1, 1), sample_rate, channels); samples are interleaved.");

  m.def(
      "preprocess",
      [](const Array& samples, double rate, double target_ms) {
        return to_array(preprocess::preprocess(make_utterance(samples, rate, std::nullopt), target_ms).samples);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("target_ms"),
      "Trim, suppress noise, time-scale to target_ms and normalize; returns 32 kHz samples.");

  m.def(
      "extract_features",
      [](const Array& samples, double rate, const std::string& kind) {
        const auto v = features::extract(make_utterance(samples, rate, std::nullopt), features::feature_kind_from_string(kind));
        Array out({static_cast<py::ssize_t>(v.frames), static_cast<py::ssize_t>(v.per_frame)});
        std::copy(v.values.begin(), v.values.end(), out.mutable_data());
        return out;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("kind") = "mfcc13",
      "Feature matrix of shape (frames, coefficients).");

  py::class_<pca::Eigenspace>(m, "Eigenspace")
      .def_readonly("mean", &pca::Eigenspace::mean)
      .def_readonly("basis", &pca::Eigenspace::basis)
      .def_readonly("eigenvalues", &pca::Eigenspace::eigenvalues)
      .def_readonly("variance_fraction", &pca::Eigenspace::variance_fraction)
      .def_property_readonly("rank", &pca::Eigenspace::rank)
      .def_property_readonly("dimension", &pca::Eigenspace::dimension)
      .def("project", [](const pca::Eigenspace& es, const Array& v) { return pca::project(es, to_vector(v)); })
      .def("dfes", [](const pca::Eigenspace& es, const Array& v) { return pca::dfes(es, to_vector(v)); });

  m.def(
      "train_eigenspace",
      [](const Eigen::MatrixXd& rows, double fraction) { return pca::train_eigenspace(rows.transpose(), fraction); },
      py::arg("vectors"), py::arg("variance_fraction") = 0.8, "Train on an (M, D) array, one vector per row.");

  m.def(
      "fit_threshold",
      [](const Array& accept, const Array& reject, std::optional<double> prior_accept) {
        const auto a = to_vector(accept);
        const auto r = to_vector(reject);
        const auto model = prior_accept ? threshold::fit_threshold(a, r, {*prior_accept, 1.0 - *prior_accept})
                                        : threshold::fit_threshold(a, r);
        return parse_json(json_io::to_json(model).dump());
      },
      py::arg("accept"), py::arg("reject"), py::arg("prior_accept") = py::none(),
      "Bayes threshold between two Gaussian-fitted distance sets; returns a dict.");

  py::class_<detector::DetectorBundle>(m, "Bundle")
      .def_readonly("word", &detector::DetectorBundle::word)
      .def_readonly("label", &detector::DetectorBundle::label)
      .def_readonly("target_ms", &detector::DetectorBundle::target_ms)
      .def("save", [](const detector::DetectorBundle& b, const std::filesystem::path& p) { detector::save_bundle(b, p); })
      .def("to_bytes", [](const detector::DetectorBundle& b) { return py::bytes(detector::bundle_to_bytes(b)); });

  m.def("load_bundle", &detector::load_bundle, py::arg("path"));
  m.def(
      "bundle_from_bytes", [](const py::bytes& b) { return detector::bundle_from_bytes(std::string(b)); },
      py::arg("data"));

  m.def(
      "train",
      [](const std::filesystem::path& manifest, int word, const std::string& feature, double fraction) {
        detector::DetectorConfig cfg;
        cfg.feature = features::feature_kind_from_string(feature);
        cfg.variance_fraction = fraction;
        py::gil_scoped_release release;
        return detector::train_bundle(word, corpus::load_manifest(manifest), cfg);
      },
      py::arg("manifest"), py::arg("word"), py::arg("feature") = "mfcc13", py::arg("variance_fraction") = 0.8);

  m.def(
      "detect",
      [](const detector::DetectorBundle& b, const Array& samples, double rate,
         const std::vector<std::pair<std::size_t, std::size_t>>& boundaries) {
        return parse_json(detector::outcome_to_json(detector::detect(b, make_utterance(samples, rate, boundaries))));
      },
      py::arg("bundle"), py::arg("samples"), py::arg("sample_rate"), py::arg("boundaries"),
      "Three-step detection; boundaries are (start, end) sample pairs at sample_rate. Returns a dict.");

  m.def(
      "loo",
      [](const std::filesystem::path& manifest, std::vector<int> steps, std::vector<int> words,
         const std::string& feature, unsigned jobs, std::optional<std::filesystem::path> out_dir) {
        harness::StepSelector sel;
        sel.steps.clear();
        for (int s : steps) sel.steps.push_back(harness::step_from_int(s));
        sel.words = std::move(words);
        harness::HarnessConfig cfg;
        cfg.detector.feature = features::feature_kind_from_string(feature);
        cfg.jobs = jobs;
        std::string metrics;
        {
          py::gil_scoped_release release;
          const auto man = corpus::load_manifest(manifest);
          const auto result = harness::run_loo(man, sel, cfg);
          if (out_dir) {
            harness::save_result(result, *out_dir / "result.json");
            for (auto f : {report::Format::Csv, report::Format::Json, report::Format::PlotData})
              report::emit_report(result, man, f, *out_dir);
          }
          metrics = report::metrics_json(harness::compute_metrics(result, man));
        }
        return parse_json(metrics);
      },
      py::arg("manifest"), py::arg("steps") = std::vector<int>{1, 2, 3}, py::arg("words") = std::vector<int>{},
      py::arg("feature") = "mfcc13", py::arg("jobs") = 1, py::arg("out_dir") = py::none(),
      "Leave-one-speaker-out evaluation; returns the metrics report as a dict.");
}
