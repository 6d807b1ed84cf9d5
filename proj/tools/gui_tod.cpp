// gui-tod: command line front end for parsing, corpus handling, training and
// evaluation. Exit codes: 0 success, 2 invalid input, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "guitod/baselines.hpp"
#include "guitod/corpus.hpp"
#include "guitod/error.hpp"
#include "guitod/harness.hpp"
#include "guitod/hierarchy.hpp"
#include "guitod/report.hpp"
#include "guitod/training.hpp"

namespace fs = std::filesystem;
using namespace guitod;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir;
};

PolicyConfig resolve_config(const Globals& g) {
  PolicyConfig c = g.config_path.empty() ? PolicyConfig{} : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  validate_config(c);
  return c;
}

std::uint64_t resolve_seed(const Globals& g) {
  if (g.seed) return *g.seed;
  return resolve_config(g).seed;
}

fs::path require_out(const Globals& g, const char* cmd) {
  if (g.out_dir.empty()) throw ValidationError(std::string(cmd) + " needs --out <dir>");
  fs::create_directories(g.out_dir);
  return g.out_dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

ScreenSize parse_screen_size(const std::string& s) {
  int w = 0, h = 0;
  char x = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || (x != 'x' && x != 'X') || w <= 0 || h <= 0) {
    throw ValidationError("--screen-size expects WxH, got '" + s + "'");
  }
  return {w, h};
}

nlohmann::json items_json(const Screen& screen) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& it : screen.items) {
    arr.push_back({{"index", it.index},
                   {"text", it.text},
                   {"type", it.item_type},
                   {"bbox", {it.bbox.left, it.bbox.top, it.bbox.right, it.bbox.bottom}},
                   {"source", to_string(it.source)}});
  }
  return arr;
}

nlohmann::json stats_json(const CorpusStats& s) {
  return {{"dialogues", s.n_dialogues},
          {"turns", s.n_turns},
          {"data_points", s.n_data_points},
          {"avg_images_per_turn", s.avg_images_per_turn},
          {"avg_items_per_image", s.avg_items_per_image},
          {"turns_per_domain", s.turns_per_domain},
          {"turns_per_app", s.turns_per_app}};
}

void finish_eval(const Globals& g, const EvalRun& run, const std::vector<Prediction>* preds) {
  std::cout << format_table({run}) << '\n' << format_domain_table(run);
  for (const auto& bad : check_report_invariants(run.report.overall)) {
    std::cerr << "warning: report invariant violated: " << bad << '\n';
  }
  if (g.out_dir.empty()) return;
  fs::path out = require_out(g, "eval");
  if (preds) write_predictions(*preds, out / "predictions.jsonl");
  emit_report({run}, out / "report.json", ReportFormat::json);
  emit_report({run}, out / "report.txt", ReportFormat::text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toolkit for GUI-based task-oriented dialogue agents", "gui-tod"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for shuffling, sampling and initialization");
  app.add_option("--config", g.config_path, "Policy configuration (JSON)");
  app.add_option("--out", g.out_dir, "Output directory");

  // parse-hierarchy
  auto* ph = app.add_subcommand("parse-hierarchy", "Parse a view hierarchy or pseudo-layout and list its items");
  std::string ph_file, ph_size = "1080x1920", ph_emit = "text";
  bool ph_pseudo = false;
  ph->add_option("file", ph_file)->required();
  ph->add_flag("--pseudo", ph_pseudo, "Input is a pseudo-layout JSON array");
  ph->add_option("--screen-size", ph_size, "Screen size WxH")->capture_default_str();
  ph->add_option("--emit-items", ph_emit, "Item output format")->check(CLI::IsMember({"json", "text"}));

  auto* vc = app.add_subcommand("validate-corpus", "Load and validate an episode JSONL file");
  std::string vc_file;
  vc->add_option("corpus", vc_file)->required();

  auto* im = app.add_subcommand("import", "Convert a corpus with raw-coordinate clicks into canonical form");
  std::string im_file;
  im->add_option("source", im_file)->required();

  auto* sp = app.add_subcommand("split", "Random or holdout split of a corpus");
  std::string sp_file, sp_ratios, sp_domain, sp_app;
  sp->add_option("corpus", sp_file)->required();
  auto* sp_r = sp->add_option("--ratios", sp_ratios, "train:dev:test, e.g. 8:1:1");
  auto* sp_d = sp->add_option("--holdout-domain", sp_domain);
  auto* sp_a = sp->add_option("--holdout-app", sp_app);
  sp_r->excludes(sp_d)->excludes(sp_a);
  sp_d->excludes(sp_a);

  auto* st = app.add_subcommand("stats", "Corpus statistics");
  std::string st_file;
  st->add_option("corpus", st_file)->required();

  auto* tr = app.add_subcommand("train", "Train the reference policy");
  std::string tr_file;
  tr->add_option("corpus", tr_file)->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a trained policy or score a predictions file");
  std::string ev_file, ev_model, ev_preds, ev_mode = "teacher-forcing";
  std::size_t ev_threads = 1;
  ev->add_option("corpus", ev_file)->required();
  auto* ev_m = ev->add_option("--model", ev_model, "Directory written by train");
  auto* ev_p = ev->add_option("--predictions", ev_preds, "Predictions JSONL to score");
  ev_m->excludes(ev_p);
  ev->add_option("--threads", ev_threads)->check(CLI::PositiveNumber);
  ev->add_option("--mode", ev_mode, "teacher-forcing or rollout")->capture_default_str();

  auto* bl = app.add_subcommand("baseline", "Evaluate a heuristic baseline");
  std::string bl_file, bl_kind = "mfm", bl_train;
  bl->add_option("corpus", bl_file)->required();
  bl->add_option("--kind", bl_kind)->check(CLI::IsMember({"random", "fm", "mfm"}))->capture_default_str();
  bl->add_option("--train", bl_train, "Training corpus the frequency baselines are fitted on");

  auto* ge = app.add_subcommand("generality", "App or domain holdout suite");
  std::string ge_file, ge_by = "domain";
  ge->add_option("corpus", ge_file)->required();
  ge->add_option("--by", ge_by)->check(CLI::IsMember({"app", "domain"}))->capture_default_str();

  auto* rp = app.add_subcommand("report", "Render one or more JSON reports");
  std::vector<std::string> rp_files;
  std::string rp_format = "text";
  bool rp_domains = false;
  rp->add_option("reports", rp_files)->required();
  rp->add_option("--format", rp_format)->check(CLI::IsMember({"json", "text"}));
  rp->add_flag("--domains", rp_domains, "Also print the per-domain breakdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ph) {
      ScreenSize size = parse_screen_size(ph_size);
      std::string bytes = read_file(ph_file);
      Screen screen = ph_pseudo ? parse_pseudo_layout(bytes, size) : screen_from_hierarchy(parse_hierarchy(bytes), size);
      auto items = items_json(screen);
      if (ph_emit == "json") {
        std::cout << items.dump(2) << '\n';
      } else {
        for (const auto& it : screen.items) {
          std::cout << it.index << '\t' << it.item_type << "\t[" << it.bbox.left << ',' << it.bbox.top << "]["
                    << it.bbox.right << ',' << it.bbox.bottom << "]\t" << it.text << '\n';
        }
      }
      if (!g.out_dir.empty()) write_text(require_out(g, "parse-hierarchy") / "items.json", items.dump(2) + "\n");
    } else if (*vc) {
      auto episodes = load_corpus(vc_file);
      auto s = compute_stats(episodes);
      std::cout << "ok: " << s.n_dialogues << " episodes, " << s.n_turns << " turns, " << s.n_data_points
                << " data points\n";
    } else if (*im) {
      LoadOptions opts;
      opts.resolve_raw_clicks = true;
      auto episodes = load_corpus(im_file, opts);
      fs::path out = require_out(g, "import") / "corpus.jsonl";
      write_corpus(episodes, out, fs::absolute(im_file).parent_path());
      std::cout << "wrote " << episodes.size() << " episodes to " << out.string() << '\n';
    } else if (*sp) {
      auto episodes = load_corpus(sp_file);
      fs::path src_dir = fs::absolute(sp_file).parent_path();
      std::vector<std::pair<std::string, std::vector<Episode>>> parts;
      if (!sp_domain.empty() || !sp_app.empty()) {
        HoldoutKey by = sp_domain.empty() ? HoldoutKey::app : HoldoutKey::domain;
        auto h = split_holdout(episodes, by, sp_domain.empty() ? sp_app : sp_domain);
        parts = {{"train", std::move(h.train)}, {"test", std::move(h.test)}};
      } else {
        auto r = split_random(episodes, parse_ratios(sp_ratios.empty() ? "8:1:1" : sp_ratios), resolve_seed(g));
        parts = {{"train", std::move(r.train)}, {"dev", std::move(r.dev)}, {"test", std::move(r.test)}};
      }
      for (const auto& [name, eps] : parts) std::cout << name << '\t' << eps.size() << '\n';
      if (!g.out_dir.empty()) {
        fs::path out = require_out(g, "split");
        for (const auto& [name, eps] : parts) write_corpus(eps, out / (name + ".jsonl"), src_dir);
      }
    } else if (*st) {
      auto j = stats_json(compute_stats(load_corpus(st_file)));
      std::cout << j.dump(2) << '\n';
      if (!g.out_dir.empty()) write_text(require_out(g, "stats") / "stats.json", j.dump(2) + "\n");
    } else if (*tr) {
      PolicyConfig cfg = resolve_config(g);
      fs::path out = require_out(g, "train");
      auto points = expand_data_points(load_corpus(tr_file));
      nlohmann::json log = nlohmann::json::array();
      TrainOptions opts;
      opts.on_epoch = [&](const EpochStats& e) {
        log.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"action_cr", e.action_cr}});
        if (e.epoch % 25 == 0 || e.epoch == cfg.epochs) {
          std::cerr << "epoch " << e.epoch << " loss " << e.loss << " train CR " << e.action_cr << '\n';
        }
      };
      TrainResult result = train(points, cfg, opts);
      auto responder = std::make_shared<RetrievalResponder>(RetrievalResponder::fit(points, cfg));
      ReferencePolicy policy(cfg, std::move(result.params), std::move(responder));
      policy.save(out);
      write_text(out / "train_log.json",
                 nlohmann::json({{"best_epoch", result.best_epoch}, {"epochs", log}}).dump(2) + "\n");
      std::cout << "best epoch " << result.best_epoch << ", train CR " << result.history[result.best_epoch].action_cr
                << "; model written to " << out.string() << '\n';
    } else if (*ev) {
      auto points = expand_data_points(load_corpus(ev_file));
      std::string split = fs::path(ev_file).stem().string();
      if (!ev_preds.empty()) {
        auto preds = read_predictions(ev_preds);
        EvalRun run;
        run.policy = "predictions:" + fs::path(ev_preds).filename().string();
        run.split = split;
        run.run_id = run.policy + "@" + split;
        run.report = score_predictions(preds, points);
        finish_eval(g, run, nullptr);
      } else {
        if (ev_model.empty()) throw ValidationError("eval needs --model <dir> or --predictions <file>");
        ReferencePolicy policy = ReferencePolicy::load(ev_model);
        EvalOptions opts;
        opts.mode = eval_mode_from_string(ev_mode);
        opts.threads = ev_threads;
        opts.config = {{"policy", config_to_json(policy.config())}, {"model", ev_model}};
        std::vector<Prediction> preds;
        EvalRun run = evaluate(policy, points, split, opts, preds);
        finish_eval(g, run, &preds);
      }
    } else if (*bl) {
      auto points = expand_data_points(load_corpus(bl_file));
      std::uint64_t seed = resolve_seed(g);
      std::unique_ptr<Policy> policy;
      if (bl_kind == "random") {
        policy = std::make_unique<RandomBaseline>(seed);
      } else {
        if (bl_train.empty()) throw ValidationError("baseline --kind " + bl_kind + " needs --train <corpus>");
        ActionCounts counts = fit_counts(expand_data_points(load_corpus(bl_train)));
        if (bl_kind == "fm") {
          policy = std::make_unique<FrequencyBaseline>(counts, seed);
        } else {
          policy = std::make_unique<MostFrequentBaseline>(counts);
        }
      }
      EvalOptions opts;
      opts.config = {{"baseline", bl_kind}, {"seed", seed}};
      if (!bl_train.empty()) opts.config["train"] = bl_train;
      std::vector<Prediction> preds;
      EvalRun run = evaluate(*policy, points, fs::path(bl_file).stem().string(), opts, preds);
      finish_eval(g, run, &preds);
    } else if (*ge) {
      PolicyConfig cfg = resolve_config(g);
      auto result = run_generality_suite(load_corpus(ge_file), ge_by == "app" ? HoldoutKey::app : HoldoutKey::domain, cfg);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << format_table(result.runs);
      if (!g.out_dir.empty()) {
        fs::path out = require_out(g, "generality");
        emit_report(result.runs, out / "report.json", ReportFormat::json);
        emit_report(result.runs, out / "report.txt", ReportFormat::text);
      }
    } else if (*rp) {
      std::vector<EvalRun> runs;
      for (const auto& f : rp_files) {
        auto r = read_report(f);
        runs.insert(runs.end(), r.begin(), r.end());
      }
      if (rp_format == "json") {
        std::cout << runs_to_json(runs).dump(2) << '\n';
      } else {
        std::cout << format_table(runs);
        if (rp_domains) {
          for (const auto& r : runs) std::cout << '\n' << r.run_id << '\n' << format_domain_table(r);
        }
      }
      if (!g.out_dir.empty()) {
        fs::path out = require_out(g, "report");
        emit_report(runs, out / "report.json", ReportFormat::json);
        emit_report(runs, out / "report.txt", ReportFormat::text);
      }
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ResolutionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CoverageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
