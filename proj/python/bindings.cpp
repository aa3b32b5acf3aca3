#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "gcntrack/config.hpp"
#include "gcntrack/dataset.hpp"
#include "gcntrack/errors.hpp"
#include "gcntrack/eval.hpp"
#include "gcntrack/features.hpp"
#include "gcntrack/flow.hpp"
#include "gcntrack/graph.hpp"
#include "gcntrack/solver.hpp"
#include "gcntrack/superpixel.hpp"
#include "gcntrack/tracker.hpp"

namespace py = pybind11;
using namespace gcntrack;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

RgbImage rgb_from(const Array<std::uint8_t>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw InputError("expected an H x W x 3 uint8 array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  RgbImage img(w, h);
  auto v = a.unchecked<3>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = {v(y, x, 0), v(y, x, 1), v(y, x, 2)};
  return img;
}

LabImage lab_from(const Array<double>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw InputError("expected an H x W x 3 float array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  LabImage img(w, h);
  auto v = a.unchecked<3>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = {v(y, x, 0), v(y, x, 1), v(y, x, 2)};
  return img;
}

template <typename Pixel, typename T>
Image<Pixel> plane_from(const Array<T>& a) {
  if (a.ndim() != 2) throw InputError("expected a 2-D array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  Image<Pixel> img(w, h);
  auto v = a.template unchecked<2>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = static_cast<Pixel>(v(y, x));
  return img;
}

Mask mask_from(const Array<std::uint8_t>& a) {
  Mask m = plane_from<std::uint8_t>(a);
  for (auto& p : m.pixels()) p = p != 0;
  return m;
}

template <typename Pixel>
py::array_t<Pixel> plane_to(const Image<Pixel>& img) {
  py::array_t<Pixel> out({img.height(), img.width()});
  std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
  return out;
}

py::array_t<double> lab_to(const LabImage& img) {
  py::array_t<double> out({img.height(), img.width(), 3});
  auto v = out.mutable_unchecked<3>();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      v(y, x, 0) = img(x, y).l;
      v(y, x, 1) = img(x, y).a;
      v(y, x, 2) = img(x, y).b;
    }
  return out;
}

py::array_t<std::uint8_t> rgb_to(const RgbImage& img) {
  py::array_t<std::uint8_t> out({img.height(), img.width(), 3});
  auto v = out.mutable_unchecked<3>();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      v(y, x, 0) = img(x, y).r;
      v(y, x, 1) = img(x, y).g;
      v(y, x, 2) = img(x, y).b;
    }
  return out;
}

SuperpixelMap map_from(const Array<std::int32_t>& labels, std::pair<int, int> origin) {
  SuperpixelMap map;
  map.labels = plane_from<std::int32_t>(labels);
  int top = -1;
  for (int l : map.labels.pixels()) top = std::max(top, l);
  map.count = top + 1;
  map.origin = {origin.first, origin.second};
  map.validate();
  return map;
}

FlowField flow_from(const Array<float>& uv) {
  if (uv.ndim() != 3 || uv.shape(2) != 2) throw InputError("expected an H x W x 2 flow array");
  const int h = static_cast<int>(uv.shape(0)), w = static_cast<int>(uv.shape(1));
  FlowField f(w, h);
  auto v = uv.unchecked<3>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.u(x, y) = v(y, x, 0);
      f.v(x, y) = v(y, x, 1);
    }
  return f;
}

py::array_t<float> flow_to(const FlowField& f) {
  py::array_t<float> out({f.height(), f.width(), 2});
  auto v = out.mutable_unchecked<3>();
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      v(y, x, 0) = f.u(x, y);
      v(y, x, 1) = f.v(x, y);
    }
  return out;
}

// JSON crosses the boundary as text; the Python wrapper handles dicts.
TrackerConfig tracker_config_from(const std::string& text) {
  if (text.empty()) return {};
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError("malformed tracker config JSON");
  return j.get<TrackerConfig>();
}

py::dict summary_dict(const Summary& s) {
  py::module_ json = py::module_::import("json");
  return json.attr("loads")(to_json(s).dump());
}

}  // namespace

PYBIND11_MODULE(_gcntrack, m) {
  m.doc() = "Superpixel graph tracker core";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::enum_<PropagationMode>(m, "PropagationMode")
      .value("mixed", PropagationMode::mixed)
      .value("smoothing_only", PropagationMode::smoothing_only)
      .value("identity", PropagationMode::identity);
  py::enum_<Fidelity>(m, "Fidelity")
      .value("exact_minimizer", Fidelity::exact_minimizer)
      .value("paper_literal", Fidelity::paper_literal);
  m.def("parse_propagation_mode", [](const std::string& s) { return parse_propagation_mode(s); });
  m.def("parse_fidelity", [](const std::string& s) { return parse_fidelity(s); });

  // graph
  m.def("spatial_edge_weight",
        [](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double sigma) {
          return spatial_edge_weight(a, b, sigma);
        },
        py::arg("xi"), py::arg("xj"), py::arg("sigma"));
  m.def("build_spatial_adjacency",
        [](const FeatureMatrix& x, const std::vector<std::pair<Index, Index>>& pairs, double sigma) {
          std::vector<NodePair> p;
          for (auto [i, j] : pairs) p.push_back({static_cast<int>(i), static_cast<int>(j)});
          return build_spatial_adjacency(x, p, sigma);
        },
        py::arg("features"), py::arg("pairs"), py::arg("sigma"));
  m.def("build_full_spatial_adjacency", &build_full_spatial_adjacency, py::arg("features"),
        py::arg("sigma"));

  py::class_<SpatioTemporalGraph>(m, "SpatioTemporalGraph")
      .def_readonly("n_prev", &SpatioTemporalGraph::n_prev)
      .def_readonly("n_curr", &SpatioTemporalGraph::n_curr)
      .def_readonly("adjacency", &SpatioTemporalGraph::adjacency)
      .def("__len__", &SpatioTemporalGraph::size);
  m.def("assemble", &assemble, py::arg("spatial_prev"), py::arg("spatial_curr"),
        py::arg("temporal"));
  m.def("degrees", &degrees);
  m.def("normalized_adjacency", &normalized_adjacency);
  m.def("repair_isolated_nodes", &repair_isolated_nodes);
  m.def("smoothing_operator", &smoothing_operator, py::arg("normalized"), py::arg("lambda1"));
  m.def("sharpening_operator", &sharpening_operator, py::arg("normalized"), py::arg("lambda2"));
  m.def("combinatorial_laplacian", &combinatorial_laplacian);

  py::class_<PropagationOperator>(m, "PropagationOperator")
      .def_readonly("mode", &PropagationOperator::mode)
      .def_readonly("smoothing", &PropagationOperator::smoothing)
      .def_readonly("sharpening", &PropagationOperator::sharpening)
      .def("matrix", &PropagationOperator::matrix)
      .def("apply", &PropagationOperator::apply);
  m.def("propagation_operator", &propagation_operator, py::arg("graph"),
        py::arg("mode") = PropagationMode::mixed, py::arg("lambda1") = 0.01,
        py::arg("lambda2") = 0.07);

  // solver
  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &SolverConfig::alpha)
      .def_readwrite("beta", &SolverConfig::beta)
      .def_readwrite("min_error", &SolverConfig::min_error)
      .def_readwrite("max_iter", &SolverConfig::max_iter)
      .def_readwrite("ridge", &SolverConfig::ridge)
      .def_readwrite("fidelity", &SolverConfig::fidelity);
  py::class_<Problem>(m, "Problem")
      .def(py::init([](Matrix s, Matrix l, Vector f, Index n_prev, Index n_curr) {
             Problem p{std::move(s), std::move(l), std::move(f), n_prev, n_curr};
             p.validate();
             return p;
           }),
           py::arg("features"), py::arg("laplacian"), py::arg("indicator"), py::arg("n_prev"),
           py::arg("n_curr"))
      .def_readonly("features", &Problem::features)
      .def_readonly("laplacian", &Problem::laplacian)
      .def_readonly("indicator", &Problem::indicator)
      .def_readonly("n_prev", &Problem::n_prev)
      .def_readonly("n_curr", &Problem::n_curr)
      .def("to_text", [](const Problem& p) {
        std::ostringstream out;
        write_problem(out, p);
        return out.str();
      })
      .def_static("from_text", [](const std::string& text) {
        std::istringstream in(text);
        return read_problem(in);
      });
  py::class_<SolverState>(m, "SolverState")
      .def(py::init(&initial_state))
      .def_readwrite("weights", &SolverState::weights)
      .def_readwrite("bias", &SolverState::bias)
      .def_readwrite("labels", &SolverState::labels)
      .def_readonly("loss_trace", &SolverState::loss_trace)
      .def_readonly("iterations", &SolverState::iterations)
      .def_readonly("converged", &SolverState::converged);
  m.def("make_problem", &make_problem, py::arg("graph"), py::arg("features"),
        py::arg("indicator"), py::arg("operator"));
  m.def("loss", &loss);
  m.def("update_w", &update_w, py::arg("problem"), py::arg("state"), py::arg("ridge") = 0.0);
  m.def("update_b", &update_b);
  m.def("update_y", &update_y);
  m.def("solve", &solve, py::arg("problem"), py::arg("config") = SolverConfig{});

  // superpixels and features
  m.def("rgb_to_lab", [](const Array<std::uint8_t>& rgb) { return lab_to(rgb_to_lab(rgb_from(rgb))); });
  m.def("slic",
        [](const Array<double>& lab, int k, double compactness, int iterations) {
          SlicParams params;
          params.compactness = compactness;
          params.iterations = iterations;
          return plane_to(slic_segment(lab_from(lab), k, params).labels);
        },
        py::arg("lab"), py::arg("k"), py::arg("compactness") = 10.0, py::arg("iterations") = 10);
  m.def("adjacency_pairs", [](const Array<std::int32_t>& labels) {
    std::vector<std::pair<Index, Index>> out;
    for (const auto& p : adjacency_pairs(map_from(labels, {0, 0}))) out.emplace_back(p.first, p.second);
    return out;
  });
  m.def("mean_features", [](const Array<double>& lab, const Array<std::int32_t>& labels) {
    return mean_features(lab_from(lab), map_from(labels, {0, 0}));
  });

  // flow
  m.def("estimate_flow",
        [](const Array<float>& prev, const Array<float>& curr, double smoothness, int levels,
           int iterations) {
          FlowParams params{smoothness, levels, iterations};
          return flow_to(estimate_flow(plane_from<float>(prev), plane_from<float>(curr), params));
        },
        py::arg("prev"), py::arg("curr"), py::arg("smoothness") = 15.0, py::arg("levels") = 3,
        py::arg("iterations") = 200);
  m.def("read_flo", [](const std::filesystem::path& p) { return flow_to(read_flo(p)); });
  m.def("write_flo", [](const std::filesystem::path& p, const Array<float>& uv) {
    write_flo(p, flow_from(uv));
  });
  m.def("temporal_links",
        [](const Array<std::int32_t>& prev, const Array<std::int32_t>& curr, const Array<float>& uv,
           std::pair<int, int> prev_origin, std::pair<int, int> curr_origin) {
          return temporal_links(map_from(prev, prev_origin), map_from(curr, curr_origin),
                                flow_from(uv));
        },
        py::arg("prev_labels"), py::arg("curr_labels"), py::arg("flow"),
        py::arg("prev_origin") = std::pair<int, int>{0, 0},
        py::arg("curr_origin") = std::pair<int, int>{0, 0});

  // eval
  m.def("mask_iou", [](const Array<std::uint8_t>& a, const Array<std::uint8_t>& b) {
    return mask_iou(mask_from(a), mask_from(b));
  });
  auto rect = [](std::array<int, 4> b) { return Rect{b[0], b[1], b[2], b[3]}; };
  m.def("box_iou", [rect](std::array<int, 4> a, std::array<int, 4> b) {
    return box_iou(rect(a), rect(b));
  });
  m.def("center_distance", [rect](std::array<int, 4> a, std::array<int, 4> b) {
    return center_distance(rect(a), rect(b));
  });
  m.def("success_curve", [](const std::vector<double>& overlaps) {
    const SuccessCurve c = success_curve(overlaps);
    return py::make_tuple(c.thresholds, c.rates, c.auc);
  });
  m.def("mask_to_box", [](const Array<std::uint8_t>& mask) -> std::optional<py::tuple> {
    const auto b = mask_to_box(mask_from(mask));
    if (!b) return std::nullopt;
    return py::make_tuple(b->x, b->y, b->width, b->height);
  });
  m.def("evaluate",
        [](const std::vector<Array<std::uint8_t>>& predicted,
           const std::vector<Array<std::uint8_t>>& truth, const std::string& name) {
          if (predicted.size() != truth.size()) throw InputError("frame count mismatch");
          SequenceResult r;
          r.name = name;
          for (std::size_t t = 0; t < truth.size(); ++t) {
            FrameRecord rec;
            rec.index = static_cast<int>(t);
            rec.predicted_mask = mask_from(predicted[t]);
            rec.predicted_box = mask_to_box(*rec.predicted_mask);
            rec.truth_mask = mask_from(truth[t]);
            r.frames.push_back(std::move(rec));
          }
          return summary_dict(summarize(r));
        },
        py::arg("predicted"), py::arg("truth"), py::arg("name") = "sequence");

  // dataset and tracker
  m.def("_synth", [](const std::string& spec_json) {
    const auto j = nlohmann::json::parse(spec_json.empty() ? "{}" : spec_json, nullptr, false);
    if (j.is_discarded()) throw InputError("malformed synth spec JSON");
    const Sequence seq = synth_sequence(j.get<SynthSpec>());
    py::list frames, masks;
    for (const auto& f : seq.frames) frames.append(rgb_to(f));
    for (const auto& mk : seq.masks) masks.append(plane_to(*mk));
    return py::make_tuple(frames, masks);
  });
  m.def("_synthetic_suite", [] { return nlohmann::json(synthetic_suite()).dump(); });
  m.def("_default_tracker_config", [] { return nlohmann::json(TrackerConfig{}).dump(); });
  m.def("_track",
        [](const std::vector<Array<std::uint8_t>>& frames, const Array<std::uint8_t>& initial,
           const std::string& config_json) {
          std::vector<RgbImage> imgs;
          for (const auto& f : frames) imgs.push_back(rgb_from(f));
          const TrackerConfig config = tracker_config_from(config_json);
          std::vector<FrameOutput> out;
          {
            py::gil_scoped_release release;
            out = track_frames(imgs, mask_from(initial), config);
          }
          py::list masks, boxes, diagnostics;
          for (const auto& f : out) {
            masks.append(plane_to(f.mask));
            if (count_set(f.mask) > 0) {
              boxes.append(py::make_tuple(f.box.x, f.box.y, f.box.width, f.box.height));
            } else {
              boxes.append(py::none());
            }
            py::dict d;
            d["iterations"] = f.diagnostics.iterations;
            d["final_loss"] = f.diagnostics.final_loss;
            d["converged"] = f.diagnostics.converged;
            d["fallback"] = f.diagnostics.fallback;
            d["n_prev"] = f.diagnostics.n_prev;
            d["n_curr"] = f.diagnostics.n_curr;
            diagnostics.append(d);
          }
          return py::make_tuple(masks, boxes, diagnostics);
        });
}
