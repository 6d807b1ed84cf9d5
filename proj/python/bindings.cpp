#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "guitod/actions.hpp"
#include "guitod/baselines.hpp"
#include "guitod/config.hpp"
#include "guitod/corpus.hpp"
#include "guitod/error.hpp"
#include "guitod/harness.hpp"
#include "guitod/hierarchy.hpp"
#include "guitod/metrics.hpp"
#include "guitod/policy.hpp"
#include "guitod/report.hpp"
#include "guitod/training.hpp"

namespace py = pybind11;
using namespace guitod;

// JSON crosses the boundary as text; the Python package decodes it.
namespace {

std::string items_json(const std::vector<Item>& items) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& it : items) {
    out.push_back({{"index", it.index},
                   {"text", it.text},
                   {"type", it.item_type},
                   {"bbox", {it.bbox.left, it.bbox.top, it.bbox.right, it.bbox.bottom}},
                   {"source", to_string(it.source)}});
  }
  return out.dump();
}

std::unique_ptr<Policy> make_baseline(const std::string& kind, std::uint64_t seed,
                                      const std::optional<std::filesystem::path>& train_path) {
  if (kind == "random") return std::make_unique<RandomBaseline>(seed);
  if (kind != "fm" && kind != "mfm") throw ValidationError("unknown baseline '" + kind + "'");
  if (!train_path) throw ValidationError(kind + " needs a training corpus");
  auto counts = fit_counts(expand_data_points(load_corpus(*train_path)));
  if (kind == "fm") return std::make_unique<FrequencyBaseline>(counts, seed);
  return std::make_unique<MostFrequentBaseline>(counts);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ResolutionError>(m, "ResolutionError", base.ptr());
  py::register_exception<CoverageError>(m, "CoverageError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

  m.def(
      "extract_items",
      [](const std::string& xml, bool parent_only) {
        auto inherit = parent_only ? ClickInheritance::parent_only : ClickInheritance::any_ancestor;
        return items_json(extract_items(parse_hierarchy(xml), inherit));
      },
      py::arg("xml"), py::arg("parent_only") = false);
  m.def(
      "pseudo_layout_items",
      [](const std::string& json, int width, int height) {
        return items_json(parse_pseudo_layout(json, {width, height}).items);
      },
      py::arg("json"), py::arg("width"), py::arg("height"));

  m.def("canonical_action", [](const std::string& s) { return serialize_action(deserialize_action(s)); });
  m.def("actions_equal", [](const std::string& pred, const std::string& gold) {
    return actions_equal(deserialize_action(pred), deserialize_action(gold));
  });

  m.def("corpus_bleu", &corpus_bleu, py::arg("candidates"), py::arg("references"));
  m.def("input_em_f1", [](const std::string& pred, const std::string& gold) {
    auto s = input_em_f1(pred, gold);
    return std::make_pair(s.em, s.f1);
  });

  m.def("corpus_stats", [](const std::filesystem::path& path) {
    auto s = compute_stats(load_corpus(path));
    return nlohmann::json{{"dialogues", s.n_dialogues},
                          {"turns", s.n_turns},
                          {"data_points", s.n_data_points},
                          {"avg_images_per_turn", s.avg_images_per_turn},
                          {"avg_items_per_image", s.avg_items_per_image},
                          {"turns_per_domain", s.turns_per_domain},
                          {"turns_per_app", s.turns_per_app}}
        .dump();
  });
  m.def(
      "split_sizes",
      [](std::size_t n, unsigned train, unsigned dev, unsigned test) {
        auto s = split_sizes(n, {train, dev, test});
        return py::make_tuple(s.train, s.dev, s.test);
      },
      py::arg("n"), py::arg("train") = 8, py::arg("dev") = 1, py::arg("test") = 1);

  m.def(
      "evaluate_baseline",
      [](const std::filesystem::path& corpus, const std::string& kind, std::uint64_t seed,
         std::optional<std::filesystem::path> train_path) {
        auto policy = make_baseline(kind, seed, train_path);
        auto pts = expand_data_points(load_corpus(corpus));
        py::gil_scoped_release release;
        return run_to_json(evaluate(*policy, pts, corpus.stem().string())).dump();
      },
      py::arg("corpus"), py::arg("kind"), py::arg("seed") = 0, py::arg("train") = std::nullopt);

  m.def(
      "train",
      [](const std::filesystem::path& corpus, const std::string& config_json, const std::filesystem::path& out) {
        auto config = config_from_json(nlohmann::json::parse(config_json));
        auto pts = expand_data_points(load_corpus(corpus));
        py::gil_scoped_release release;
        train_reference_policy(pts, config).save(out);
      },
      py::arg("corpus"), py::arg("config_json"), py::arg("out"));
  m.def(
      "evaluate_model",
      [](const std::filesystem::path& corpus, const std::filesystem::path& model_dir) {
        auto policy = ReferencePolicy::load(model_dir);
        auto pts = expand_data_points(load_corpus(corpus));
        py::gil_scoped_release release;
        return run_to_json(evaluate(policy, pts, corpus.stem().string())).dump();
      },
      py::arg("corpus"), py::arg("model_dir"));
}
