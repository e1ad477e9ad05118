#include "vica/cli.hpp"

#include "vica/budget.hpp"
#include "vica/evalkit/judge.hpp"
#include "vica/evalkit/report.hpp"
#include "vica/fusion.hpp"
#include "vica/kv_document.hpp"
#include "vica/training.hpp"

#include "json.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace vica::cli {

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Loads a config document and rejects keys the command does not understand,
// so a typo cannot silently fall back to a default.
KvDocument load_config(const std::string& path, const std::set<std::string>& allowed) {
  KvDocument doc = KvDocument::load(path);
  for (const auto& [key, value] : doc.entries()) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::kInvalidConfig, path + ": unknown key '" + key + "'");
    }
  }
  return doc;
}

std::string with_commas(long long v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return v < 0 ? "-" + out : out;
}

// ---- shared budget flags -----------------------------------------------------

struct BudgetFlags {
  std::optional<long long> n_total, n_hiera, s_stage, s_pool, flat_pool;

  void attach(CLI::App* app) {
    app->add_option("--n-total", n_total, "Frames sampled for the flat stream");
    app->add_option("--n-hiera", n_hiera, "Frames subsampled for the hierarchical stream (0 disables it)");
    app->add_option("--s-stage", s_stage, "Hierarchical stage tap (1-based)");
    app->add_option("--s-pool", s_pool, "Hierarchical pooling stride");
    app->add_option("--flat-pool", flat_pool, "Flat-stream pooling stride");
  }

  // defaults <- flags <- config document
  budget::TokenBudgetConfig resolve(budget::TokenBudgetConfig base, const KvDocument* doc) const {
    if (n_total) base.n_total = *n_total;
    if (n_hiera) base.n_hiera = *n_hiera;
    if (s_stage) base.s_stage = static_cast<int>(*s_stage);
    if (s_pool) base.s_pool = *s_pool;
    if (flat_pool) base.flat_pool = *flat_pool;
    if (doc != nullptr) return budget::config_from_document(*doc, base);
    base.validate();
    return base;
  }
};

std::set<std::string> budget_keys() {
  const auto& k = budget::config_keys();
  return {k.begin(), k.end()};
}

std::string headline(const budget::TokenBudgetReport& r, int precision) {
  return "flat tokens " + with_commas(r.t_siglip) + " | hier tokens " + with_commas(r.t_hiera) +
         " | total " + with_commas(r.total()) + " | ratio " +
         budget::format_ratio(r.ratio, precision) + "\n";
}

// ---- plan ------------------------------------------------------------------

struct PlanOpts {
  std::string config;
  std::optional<long long> budget;
  std::string sweep;
  std::optional<int> ratio_precision;
  BudgetFlags flags;
  std::string out = "vica-out/plan";
};

void cmd_plan(const PlanOpts& o, std::ostream& out) {
  std::set<std::string> allowed = budget_keys();
  allowed.insert({"budget", "ratio_precision"});
  std::optional<KvDocument> doc;
  if (!o.config.empty()) doc = load_config(o.config, allowed);
  const auto cfg =
      o.flags.resolve(budget::TokenBudgetConfig::full_scale_default(), doc ? &*doc : nullptr);
  int precision = o.ratio_precision.value_or(2);
  std::optional<long long> budget_max = o.budget;
  if (doc) {
    if (auto v = doc->get_int("ratio_precision")) precision = static_cast<int>(*v);
    if (auto v = doc->get_int("budget")) budget_max = *v;
  }
  if (precision < 0 || precision > 17) {
    throw Error(ErrorCode::kInvalidConfig, "ratio precision must be in 0..17");
  }

  const auto report = budget::compute_budget(cfg);
  std::ostringstream text;
  text << budget::render_table(cfg, report, precision) << headline(report, precision);

  KvDocument effective = budget::config_to_document(cfg);
  effective.set("ratio_precision", std::to_string(precision));
  std::optional<std::string> sweep_csv;

  if (budget_max || !o.sweep.empty()) {
    const long long limit = budget_max.value_or(std::numeric_limits<long long>::max());
    effective.set("budget", std::to_string(limit));
    const auto configs = budget::enumerate_configs(limit, cfg.geom_flat, cfg.geom_hier,
                                                   cfg.n_total, cfg.flat_pool);
    if (configs.empty()) {
      text << "no feasible config: no (n_hiera >= 1, s_stage, s_pool) fits within "
           << with_commas(limit) << " tokens\n";
    } else {
      const auto& best = configs.front();
      text << configs.size() << " feasible configs within " << with_commas(limit)
           << " tokens; most hierarchical tokens: n_hiera=" << best.config.n_hiera
           << " s_stage=" << best.config.s_stage << " s_pool=" << best.config.s_pool
           << " (total " << with_commas(best.report.total()) << ")\n";
    }
    if (!o.sweep.empty()) {
      std::string csv = budget::csv_header() + "\n";
      for (const auto& pc : configs) csv += budget::csv_row(pc.config, pc.report, precision) + "\n";
      sweep_csv = std::move(csv);
    }
  }

  out << text.str();
  Artifacts artifacts("plan", effective.canonical(), 0);
  artifacts.add("plan.txt", text.str());
  if (sweep_csv) artifacts.add(fs::path(o.sweep).filename().string(), *sweep_csv);
  artifacts.write(o.out);
}

// ---- run -------------------------------------------------------------------

struct RunOpts {
  std::string config;
  unsigned long long seed = 0;
  std::optional<long long> frames, frame_size;
  bool dry_run = false;
  std::string text;
  BudgetFlags flags;
  std::string out = "vica-out/run";
};

std::string shape_str(std::initializer_list<long long> dims) {
  std::string s = "(";
  bool first = true;
  for (long long d : dims) {
    if (!first) s += ", ";
    s += std::to_string(d);
    first = false;
  }
  return s + ")";
}

// Rebuilds the accounting report from what the forward pass actually emitted.
budget::TokenBudgetReport measured_report(const fusion::VicaModel& model,
                                          const fusion::FusedOutput& fo) {
  const auto summary = fusion::summarize(fo.fused.provenance);
  const auto& cfg = model.config().budget;
  budget::TokenBudgetReport r;
  auto count = [](const std::map<fusion::Source, nx::Index>& m, fusion::Source s) {
    const auto it = m.find(s);
    return it == m.end() ? nx::Index{0} : it->second;
  };
  auto per_frame = [&](fusion::Source s, const std::vector<std::int64_t>& frames) {
    budget::Count value = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto it = summary.per_frame.find({s, frames[i]});
      const budget::Count n = it == summary.per_frame.end() ? 0 : it->second;
      if (i == 0) value = n;
      if (n != value) {
        throw Error(ErrorCode::kEvaluation,
                    std::string("uneven per-frame token counts in ") + fusion::source_name(s));
      }
    }
    return value;
  };
  r.grid_flat = model.flat_encoder().config().grid();
  r.t_siglip = count(summary.tokens, fusion::Source::kFlat);
  r.per_frame_flat = per_frame(fusion::Source::kFlat, fo.plan.flat_indices);
  r.pooled_flat = fo.plan.flat_indices.empty()
                      ? 0
                      : count(summary.row_tokens, fusion::Source::kFlat) /
                            static_cast<nx::Index>(fo.plan.flat_indices.size());
  if (!fo.plan.hier_indices.empty()) {
    r.grid_hier = model.hier_encoder().output_shape(1, cfg.s_stage)[1];
    r.t_hiera = count(summary.tokens, fusion::Source::kHier);
    r.per_frame_hier = per_frame(fusion::Source::kHier, fo.plan.hier_indices);
    r.pooled_hier = count(summary.row_tokens, fusion::Source::kHier) /
                    static_cast<nx::Index>(fo.plan.hier_indices.size());
  } else {
    // The planner still reports the tap geometry of a disabled stream.
    const auto plan = budget::compute_budget(cfg);
    r.grid_hier = plan.grid_hier;
    r.pooled_hier = plan.pooled_hier;
    r.per_frame_hier = plan.per_frame_hier;
  }
  r.ratio = r.t_hiera == 0 ? std::numeric_limits<double>::infinity()
                           : static_cast<double>(r.t_siglip) / static_cast<double>(r.t_hiera);
  return r;
}

void cmd_run(const RunOpts& o, std::ostream& out) {
  std::set<std::string> allowed = budget_keys();
  allowed.insert({"seed", "frames", "frame_size", "d_model"});
  std::optional<KvDocument> doc;
  if (!o.config.empty()) doc = load_config(o.config, allowed);
  const auto base = o.dry_run ? budget::TokenBudgetConfig::full_scale_default()
                              : budget::TokenBudgetConfig::toy_default();
  const auto cfg = o.flags.resolve(base, doc ? &*doc : nullptr);
  unsigned long long seed = o.seed;
  long long frames = o.frames.value_or(cfg.n_total);
  long long frame_size = o.frame_size.value_or(64);
  fusion::ModelConfig mc;
  mc.budget = cfg;
  if (doc) {
    if (auto v = doc->get_int("seed")) seed = static_cast<unsigned long long>(*v);
    if (auto v = doc->get_int("frames")) frames = *v;
    if (auto v = doc->get_int("frame_size")) frame_size = *v;
    if (auto v = doc->get_int("d_model")) mc.decoder.d_model = *v;
  }
  if (frames < 1 || frame_size < 1) throw Error(ErrorCode::kInvalidConfig, "frames and frame_size must be >= 1");

  KvDocument effective = budget::config_to_document(cfg);
  effective.set("frames", std::to_string(frames));
  effective.set("frame_size", std::to_string(frame_size));
  effective.set("d_model", std::to_string(mc.decoder.d_model));
  effective.set("dry_run", o.dry_run ? "1" : "0");
  if (!o.text.empty()) effective.set("text", o.text);

  const auto plan = budget::compute_budget(cfg);
  std::ostringstream text;
  if (o.dry_run) {
    // Shapes only: encoders are built but never initialized.
    enc::FlatEncoderConfig fc;
    fc.geometry = cfg.geom_flat;
    enc::HierEncoderConfig hc;
    hc.geometry = cfg.geom_hier;
    const enc::FlatEncoder flat(fc);
    const enc::HierEncoder hier(hc);
    const auto fs_ = flat.output_shape(cfg.n_total);
    const long long in_f = cfg.geom_flat.input_size, in_h = cfg.geom_hier.input_size;
    const long long d = mc.decoder.d_model;
    text << "dry run (shapes only, no weights allocated)\n";
    text << "frames sampled      " << cfg.n_total << " flat, " << cfg.n_hiera << " hierarchical\n";
    text << "flat encoder        " << shape_str({cfg.n_total, in_f, in_f, 3}) << " -> "
         << nx::shape_string(fs_) << '\n';
    text << "flat pooled         " << shape_str({cfg.n_total, plan.pooled_flat, plan.pooled_flat + 1, fs_[3]})
         << " -> " << plan.t_siglip << " tokens\n";
    if (cfg.n_hiera > 0) {
      const auto hs = hier.output_shape(cfg.n_hiera, cfg.s_stage);
      text << "hier encoder        " << shape_str({cfg.n_hiera, in_h, in_h, 3}) << " -> "
           << nx::shape_string(hs) << '\n';
      text << "hier pooled         " << shape_str({cfg.n_hiera, plan.pooled_hier, plan.pooled_hier + 1, hs[3]})
           << " -> " << plan.t_hiera << " tokens\n";
    } else {
      text << "hier encoder        disabled\n";
    }
    text << "projected + fused   " << shape_str({plan.t_siglip, d}) << " + "
         << shape_str({plan.t_hiera, d}) << " -> " << shape_str({plan.total(), d}) << '\n';
    text << '\n' << budget::render_table(cfg, plan) << headline(plan, 2);
  } else {
    fusion::VicaModel model(mc, seed);
    const auto video = fusion::synthetic_video(seed, frames, frame_size);
    ag::Tape tape(!o.text.empty());
    ag::ParamBinder params(tape, model.params());
    const auto fo = model.encode_video(params, video);
    const auto measured = measured_report(model, fo);
    const std::string planned_table = budget::render_table(cfg, plan);
    const std::string measured_table = budget::render_table(cfg, measured);
    text << "provenance\n" << fusion::render_summary(fusion::summarize(fo.fused.provenance))
         << "\naccounting (measured)\n" << measured_table << headline(measured, 2);
    if (measured_table != planned_table) {
      out << text.str();
      throw Error(ErrorCode::kEvaluation, "forward pass token counts disagree with the planner");
    }
    text << "plan agreement: exact\n";
    if (!o.text.empty()) {
      const auto ids = fusion::text::encode(o.text);
      const auto loss = fusion::decode_loss(params, model.decoder(), fo.fused, ids);
      std::ostringstream v;
      v.precision(17);
      v << loss.value()(0, 0);
      text << "decode loss: " << v.str() << '\n';
    }
  }
  out << text.str();
  Artifacts artifacts("run", effective.canonical(), seed);
  artifacts.add("run.txt", text.str());
  artifacts.write(o.out);
}

// ---- train -----------------------------------------------------------------

struct TrainOpts {
  std::string config;
  std::string stage = "stage-1";
  std::optional<long long> steps, batch, samples, frames, frame_size;
  unsigned long long seed = 0;
  std::optional<double> lr;
  std::string init;
  std::string out = "vica-out/train";
};

void cmd_train(const TrainOpts& o, std::ostream& out) {
  std::optional<KvDocument> doc;
  if (!o.config.empty()) {
    doc = load_config(o.config, {"stage", "steps", "batch", "seed", "samples", "frames",
                                 "frame_size", "learning_rate", "init"});
  }
  std::string stage_name = o.stage;
  long long steps = o.steps.value_or(100), batch = o.batch.value_or(4);
  train::TaskShape shape;
  if (o.samples) shape.samples = *o.samples;
  if (o.frames) shape.frames = *o.frames;
  if (o.frame_size) shape.frame_size = *o.frame_size;
  unsigned long long seed = o.seed;
  double lr = o.lr.value_or(-1.0);
  std::string init = o.init;
  if (doc) {
    if (auto v = doc->get("stage")) stage_name = *v;
    if (auto v = doc->get_int("steps")) steps = *v;
    if (auto v = doc->get_int("batch")) batch = *v;
    if (auto v = doc->get_int("seed")) seed = static_cast<unsigned long long>(*v);
    if (auto v = doc->get_int("samples")) shape.samples = *v;
    if (auto v = doc->get_int("frames")) shape.frames = *v;
    if (auto v = doc->get_int("frame_size")) shape.frame_size = *v;
    if (auto v = doc->get_double("learning_rate")) lr = *v;
    if (auto v = doc->get("init")) init = *v;
  }
  if (steps < 1 || batch < 1 || shape.samples < 1 || shape.frames < 1 || shape.frame_size < 1) {
    throw Error(ErrorCode::kInvalidConfig, "steps, batch, samples, frames and frame_size must be >= 1");
  }

  train::StageSpec spec;
  if (stage_name == "base") {
    spec = train::base_pretraining_stage();
  } else {
    spec = train::find_stage(train::build_stage_schedule(), stage_name);
  }

  fusion::VicaModel model(train::toy_training_model(), seed);
  std::string init_hash = "none";
  if (!init.empty()) {
    const std::string bytes = read_file(init);
    init_hash = sha256_hex(bytes);
    std::istringstream is(bytes);
    nx::ParamStore loaded = nx::read_checkpoint(is);
    if (loaded.paths() != model.params().paths()) {
      throw Error(ErrorCode::kInvalidConfig, "checkpoint " + init + " does not match the model layout");
    }
    for (const auto& path : loaded.paths()) {
      if (loaded.value(path).shape() != model.params().value(path).shape()) {
        throw Error(ErrorCode::kInvalidConfig, "checkpoint leaf " + path + " has the wrong shape");
      }
      model.params().value(path) = loaded.value(path);
    }
  }

  const auto data = train::synthetic_task(spec.dataset, seed, shape);
  train::RunOptions ro;
  ro.steps = steps;
  ro.batch_size = batch;
  ro.seed = seed;
  ro.lr_override = lr;
  const auto log = train::run_stage(spec, model, data, ro);

  KvDocument effective;
  effective.set("stage", spec.name);
  effective.set("steps", std::to_string(steps));
  effective.set("batch", std::to_string(batch));
  effective.set("samples", std::to_string(shape.samples));
  effective.set("frames", std::to_string(shape.frames));
  effective.set("frame_size", std::to_string(shape.frame_size));
  {
    std::ostringstream v;
    v.precision(17);
    v << (lr >= 0.0 ? lr : spec.learning_rate);
    effective.set("learning_rate", v.str());
  }
  effective.set("init_sha256", init_hash);

  const std::size_t w = log.default_window();
  std::ostringstream summary;
  summary.precision(6);
  summary << "stage " << spec.name << " (" << train::task_name(spec.dataset) << "), " << steps
          << " steps, batch " << batch << ", lr "
          << (lr >= 0.0 ? lr : spec.learning_rate) << '\n'
          << "trainable parameters " << model.params().trainable_parameter_count() << " of "
          << model.params().parameter_count() << '\n'
          << "loss: initial window " << log.initial_mean(w) << ", final window "
          << log.final_mean(w) << " (window " << w << " steps)\n";
  out << summary.str();

  std::ostringstream ckpt;
  nx::write_checkpoint(ckpt, model.params());
  Artifacts artifacts("train", effective.canonical(), seed);
  artifacts.add("loss.csv", log.csv());
  artifacts.add("summary.txt", summary.str());
  artifacts.add("checkpoint.vckp", ckpt.str());
  artifacts.write(o.out);
}

// ---- score / curve -----------------------------------------------------------

std::vector<double> thresholds_from(const std::optional<KvDocument>& doc) {
  if (doc) {
    if (auto v = doc->get_double_list("mra_thresholds")) return *v;
  }
  return eval::default_mra_thresholds();
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

struct ScoreOpts {
  std::string predictions;
  std::string config;
  std::string method = "model";
  std::string out = "vica-out/score";
};

void cmd_score(const ScoreOpts& o, std::ostream& out, std::ostream& err) {
  std::optional<KvDocument> doc;
  if (!o.config.empty()) doc = load_config(o.config, {"mra_thresholds", "method"});
  const auto thresholds = thresholds_from(doc);
  std::string method = o.method;
  if (doc) {
    if (auto v = doc->get("method")) method = *v;
  }
  const std::string bytes = read_file(o.predictions);
  std::istringstream is(bytes);
  const auto records = eval::read_predictions(is);
  const auto report = eval::emit_report(records, thresholds);
  for (const auto& w : report.warnings) err << "vica: warning: " << w << '\n';

  KvDocument effective;
  effective.set("predictions_sha256", sha256_hex(bytes));
  effective.set("mra_thresholds", join_doubles(thresholds));
  effective.set("method", method);
  const std::string md = eval::render_markdown(report, method);
  out << md;
  std::string warnings;
  for (const auto& w : report.warnings) warnings += w + "\n";
  Artifacts artifacts("score", effective.canonical(), 0);
  artifacts.add("report.md", md);
  artifacts.add("report.csv", eval::render_csv(report));
  artifacts.add("warnings.txt", warnings);
  artifacts.write(o.out);
}

struct CurveOpts {
  std::vector<std::string> points;  // FRACTION:FILE
  std::string config;
  std::string out = "vica-out/curve";
};

void cmd_curve(const CurveOpts& o, std::ostream& out) {
  std::optional<KvDocument> doc;
  if (!o.config.empty()) doc = load_config(o.config, {"mra_thresholds"});
  const auto thresholds = thresholds_from(doc);
  std::vector<eval::CurvePoint> points;
  KvDocument effective;
  effective.set("mra_thresholds", join_doubles(thresholds));
  for (std::size_t i = 0; i < o.points.size(); ++i) {
    const auto& spec = o.points[i];
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig, "--point expects FRACTION:FILE, got '" + spec + "'");
    }
    double fraction = 0.0;
    try {
      std::size_t used = 0;
      fraction = std::stod(spec.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidConfig, "bad fraction in --point '" + spec + "'");
    }
    const std::string bytes = read_file(spec.substr(colon + 1));
    std::istringstream is(bytes);
    const auto records = eval::read_predictions(is);
    points.push_back({fraction, eval::emit_report(records, thresholds)});
    effective.set("point." + std::to_string(i),
                  spec.substr(0, colon) + ":" + sha256_hex(bytes));
  }
  const auto curve = eval::emit_scaling_curve(points);
  out << curve.chart;
  Artifacts artifacts("curve", effective.canonical(), 0);
  artifacts.add("curve.csv", curve.csv);
  artifacts.add("curve.txt", curve.chart);
  artifacts.write(o.out);
}

// ---- judge -----------------------------------------------------------------

struct JudgeOpts {
  std::string descriptions;
  std::string offline;
  std::size_t parallel = 4;
  std::string out = "vica-out/judge";
};

void cmd_judge(const JudgeOpts& o, std::ostream& out) {
  std::string offline = o.offline;
  if (offline.empty()) {
    if (const char* v = std::getenv("JUDGE_OFFLINE_DIR"); v != nullptr) offline = v;
  }
  if (!fs::is_directory(o.descriptions)) {
    throw Error(ErrorCode::kInvalidConfig, "descriptions directory not found: " + o.descriptions);
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.descriptions)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::kInput, "no *.json descriptions in " + o.descriptions);

  KvDocument effective;
  effective.set("mode", offline.empty() ? "online" : "offline");
  std::vector<eval::JudgeRequest> requests;
  for (const auto& f : files) {
    const std::string bytes = read_file(f);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParse, f.string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kParse, f.string() + ": expected an object");
    eval::Descriptions d;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_string()) throw Error(ErrorCode::kParse, f.string() + ": value for " + k + " is not text");
      d[k] = v.get<std::string>();
    }
    const std::string id = f.stem().string();
    requests.push_back({id, eval::build_judge_prompt(d)});
    effective.set("description." + id, sha256_hex(bytes));
  }

  eval::Transport transport = offline.empty()
                                  ? eval::http_transport(eval::endpoint_from_env())
                                  : eval::fixture_transport(offline);
  if (!offline.empty()) {
    for (const auto& r : requests) {
      effective.set("fixture." + r.id, sha256_hex(read_file(fs::path(offline) / (r.id + ".txt"))));
    }
  }
  const eval::JudgeClient client(transport);
  const auto outcomes = eval::run_judging(client, requests, std::max<std::size_t>(1, o.parallel));

  std::vector<eval::JudgeScores> scores;
  std::ostringstream per_video;
  per_video << "id,A,B,C,D\n";
  for (const auto& oc : outcomes) {
    scores.push_back(oc.scores);
    per_video << oc.id;
    for (int s : oc.scores.score) per_video << ',' << s;
    per_video << '\n';
  }
  const auto agg = eval::aggregate_scores(scores);
  const std::string chart = eval::render_aggregate_chart(agg);
  out << chart;
  Artifacts artifacts("judge", effective.canonical(), 0);
  artifacts.add("scores.csv", per_video.str());
  artifacts.add("aggregate.csv", eval::render_aggregate_csv(agg));
  artifacts.add("aggregate.txt", chart);
  artifacts.add("audit.jsonl", eval::render_audit_log(outcomes));
  artifacts.write(o.out);
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"vica: token planning, toy dual-encoder pipeline, staged training and evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PlanOpts plan;
  auto* p = app.add_subcommand("plan", "Visual-token budget for a configuration, or a sweep under a budget");
  p->add_option("--config", plan.config, "Key-value config document (overrides flags)");
  p->add_option("--budget", plan.budget, "Maximum total visual tokens; lists feasible (n_hiera, s_stage, s_pool)");
  p->add_option("--sweep", plan.sweep, "Also write every feasible configuration to this CSV file name in --out");
  p->add_option("--ratio-precision", plan.ratio_precision, "Decimal places of the flat:hier ratio (default 2)");
  p->add_option("--out", plan.out, "Output directory")->capture_default_str();
  plan.flags.attach(p);

  RunOpts run;
  auto* r = app.add_subcommand("run", "Forward pass on a synthetic clip with a token accounting table");
  r->add_option("--config", run.config, "Key-value config document (overrides flags)");
  r->add_option("--seed", run.seed, "Seed for weights and the synthetic clip")->capture_default_str();
  r->add_option("--frames", run.frames, "Frames in the synthetic clip (default n_total)");
  r->add_option("--frame-size", run.frame_size, "Side of the synthetic frames in pixels (default 64)");
  r->add_flag("--dry-run", run.dry_run, "Print shapes only; defaults to the full-scale geometry");
  r->add_option("--text", run.text, "Also report the decoder loss of this text on the fused tokens");
  r->add_option("--out", run.out, "Output directory")->capture_default_str();
  run.flags.attach(r);

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "Run one training stage on its synthetic task");
  t->add_option("--config", tr.config, "Key-value config document (overrides flags)");
  t->add_option("--stage", tr.stage, "base, stage-1, stage-2, stage-3 or thinking")->capture_default_str();
  t->add_option("--steps", tr.steps, "Optimizer steps (default 100)");
  t->add_option("--batch", tr.batch, "Samples per step (default 4)");
  t->add_option("--seed", tr.seed, "Seed for weights, data and batch order")->capture_default_str();
  t->add_option("--samples", tr.samples, "Synthetic dataset size (default 32)");
  t->add_option("--frames", tr.frames, "Frames per synthetic clip (default 8)");
  t->add_option("--frame-size", tr.frame_size, "Frame side in pixels (default 64)");
  t->add_option("--lr", tr.lr, "Override the stage learning rate");
  t->add_option("--init", tr.init, "Start from this checkpoint");
  t->add_option("--out", tr.out, "Output directory")->capture_default_str();

  ScoreOpts sc;
  auto* s = app.add_subcommand("score", "Score a prediction file into a per-task report");
  s->add_option("predictions", sc.predictions, "Line-delimited JSON prediction records")->required();
  s->add_option("--config", sc.config, "Config document (mra_thresholds, method)");
  s->add_option("--method", sc.method, "Row label in the report table")->capture_default_str();
  s->add_option("--out", sc.out, "Output directory")->capture_default_str();

  CurveOpts cv;
  auto* c = app.add_subcommand("curve", "Average score against training-data fraction");
  c->add_option("--point", cv.points, "FRACTION:PREDICTIONS_FILE, repeat in increasing order")->required();
  c->add_option("--config", cv.config, "Config document (mra_thresholds)");
  c->add_option("--out", cv.out, "Output directory")->capture_default_str();

  JudgeOpts jd;
  auto* j = app.add_subcommand("judge", "Judge four descriptions per video and aggregate the scores");
  j->add_option("--descriptions", jd.descriptions,
                "Directory of <id>.json files mapping A-D to description text")->required();
  j->add_option("--offline", jd.offline,
                "Directory of canned <id>.txt responses (or set JUDGE_OFFLINE_DIR); "
                "otherwise the live endpoint is used with JUDGE_API_KEY");
  j->add_option("--parallel", jd.parallel, "Requests in flight")->capture_default_str();
  j->add_option("--out", jd.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "vica: usage error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }

  try {
    if (p->parsed()) cmd_plan(plan, out);
    if (r->parsed()) cmd_run(run, out);
    if (t->parsed()) cmd_train(tr, out);
    if (s->parsed()) cmd_score(sc, out, err);
    if (c->parsed()) cmd_curve(cv, out);
    if (j->parsed()) cmd_judge(jd, out);
  } catch (const Error& e) {
    err << "vica: error [" << to_string(e.code()) << "]: " << one_line(e.what()) << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "vica: error: " << one_line(e.what()) << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

} // namespace vica::cli
