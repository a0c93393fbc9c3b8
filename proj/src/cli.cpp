/* Copyright 2026 The TID Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tid/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tid/heatmap.hpp"
#include "tid/tensorio.hpp"

namespace tid::cli {
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binds the keys of one config section to fields; unknown keys are errors.
class SectionReader {
 public:
  SectionReader(const nlohmann::json& doc, const char* name) : name_(name) {
    if (doc.contains(name)) {
      section_ = &doc.at(name);
      if (!section_->is_object()) throw UsageError(std::string("config: ") + name + " must be an object");
    }
  }

  template <typename T>
  SectionReader& field(const char* key, T& target) {
    known_.push_back(key);
    if (!section_ || !section_->contains(key)) return *this;
    const nlohmann::json& v = section_->at(key);
    if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw UsageError(where(key) + " must be a number");
    } else {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
        throw UsageError(where(key) + " must be a non-negative integer");
      }
    }
    target = v.get<T>();
    return *this;
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [k, _] : section_->items()) {
      if (std::find(known_.begin(), known_.end(), k) == known_.end()) {
        throw UsageError("config: unknown key " + where(k.c_str()));
      }
    }
  }

 private:
  std::string where(const char* key) const { return std::string(name_) + "." + key; }

  const char* name_;
  const nlohmann::json* section_ = nullptr;
  std::vector<std::string> known_;
};

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

std::string compact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error(dir.string() + ": cannot create directory");
}

nlohmann::json histogram(const TensorD& t) {
  std::map<double, std::size_t> counts;
  for (double v : t.data()) ++counts[v];
  nlohmann::json h = nlohmann::json::object();
  for (const auto& [v, n] : counts) h[compact(v)] = n;
  return h;
}

Tensor tier_tensor(const sfdm::TierMap& tiers, std::size_t h, std::size_t w) {
  Tensor t({h, w});
  for (std::size_t i = 0; i < tiers.size(); ++i) t[i] = static_cast<float>(tiers[i]);
  return t;
}

sfdm::TierMap tiers_from_tensor(const Tensor& t) {
  sfdm::TierMap tiers(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float v = t[i];
    if (v != 0.0f && v != 1.0f && v != 2.0f) {
      throw std::invalid_argument("tier map entries must be 0 (low), 1 (med) or 2 (high)");
    }
    tiers[i] = static_cast<sfdm::Tier>(static_cast<int>(v));
  }
  return tiers;
}

nlohmann::json population(const sfdm::TierMap& tiers) {
  std::size_t n[3] = {0, 0, 0};
  for (sfdm::Tier t : tiers) ++n[static_cast<std::size_t>(t)];
  return {{"high", n[2]}, {"med", n[1]}, {"low", n[0]}};
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

struct Options {
  std::string config;
  std::string teacher;
  std::string student;
  std::string gt;
  std::string mask;
  std::string tiers;
  std::string projection;
  std::string out;
  std::string mode = "full";
  std::size_t steps = 500;
  std::optional<double> step_size;
  std::optional<std::uint64_t> seed;
  bool heatmap = false;
  bool emit_grad = false;
  std::optional<double> cls_top_fraction;
  std::optional<double> gamma_key;
  std::optional<double> gamma_weak;
  std::optional<double> thrd_pos;
  std::optional<double> thrd_neg;
  std::string heatmap_in;
  std::string heatmap_out;
  std::string format = "pgm";
};

CliConfig resolve_config(const Options& o) {
  CliConfig cfg = o.config.empty() ? CliConfig{} : config_from_json(read_json(o.config));
  if (o.cls_top_fraction) cfg.engine.diem.cls_top_fraction = *o.cls_top_fraction;
  if (o.gamma_key) cfg.engine.ldam.gamma_key = *o.gamma_key;
  if (o.gamma_weak) cfg.engine.ldam.gamma_weak = *o.gamma_weak;
  if (o.thrd_pos) cfg.engine.diem.thrd_pos = *o.thrd_pos;
  if (o.thrd_neg) cfg.engine.diem.thrd_neg = *o.thrd_neg;
  if (o.seed) cfg.scene.seed = *o.seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

struct Inputs {
  LevelBundle teacher;
  LevelBundle student;
  GroundTruth gt;
};

Inputs load_inputs(const Options& o) {
  require(o.teacher, "--teacher");
  require(o.student, "--student");
  require(o.gt, "--gt");
  require(o.out, "--out");
  return {load_bundle(o.teacher), load_bundle(o.student), load_ground_truth(o.gt)};
}

int cmd_generate(const Options& o, std::ostream& out) {
  require(o.out, "--out");
  const CliConfig cfg = resolve_config(o);
  const harness::Scene scene = harness::generate_scene(cfg.scene);
  const fs::path dir(o.out);
  ensure_dir(dir);
  write_bundle(dir / "teacher.json", scene.teacher);
  write_bundle(dir / "student.json", scene.student);
  write_ground_truth(dir / "gt.json", scene.gt);
  out << (dir / "teacher.json").string() << "\n"
      << (dir / "student.json").string() << "\n"
      << (dir / "gt.json").string() << "\n";
  return 0;
}

int cmd_score(const Options& o, std::ostream& out) {
  const CliConfig cfg = resolve_config(o);
  const Inputs in = load_inputs(o);
  const fs::path dir(o.out);
  ensure_dir(dir);
  nlohmann::json summary;
  for (const auto& [name, bundle] : {std::pair{"teacher", &in.teacher}, {"student", &in.student}}) {
    const diem::ScoreMaps maps = diem::score_model(*bundle, in.gt, cfg.engine.diem);
    const std::string prefix = name;
    write_tensor(dir / (prefix + "_score_r.tidt"), to_float(maps.score_r));
    write_tensor(dir / (prefix + "_score_c.tidt"), to_float(maps.score_c));
    write_tensor(dir / (prefix + "_score.tidt"), to_float(maps.score));
    const auto hits = static_cast<std::size_t>(std::count(
        maps.score_c.data().begin(), maps.score_c.data().end(), cfg.engine.diem.cls_hit));
    summary[prefix] = {{"cls_hits", hits},
                       {"score_r_histogram", histogram(maps.score_r)},
                       {"score_histogram", histogram(maps.score)}};
  }
  summary["height"] = in.teacher.height();
  summary["width"] = in.teacher.width();
  summary["empty_gt"] = in.gt.empty();
  write_file_atomic(dir / "score_summary.json", summary.dump(2) + "\n");
  out << summary.dump(2) << "\n";
  return 0;
}

int cmd_mask(const Options& o, std::ostream& out) {
  const CliConfig cfg = resolve_config(o);
  const Inputs in = load_inputs(o);
  const TidMaps maps = compute_maps(in.teacher, in.student, in.gt, cfg.engine);
  const fs::path dir(o.out);
  ensure_dir(dir);
  const std::size_t h = in.teacher.height();
  const std::size_t w = in.teacher.width();
  write_tensor(dir / "v_output.tidt", to_float(maps.values.v_output));
  write_tensor(dir / "v_info.tidt", to_float(maps.values.v_info));
  write_tensor(dir / "v.tidt", to_float(maps.values.v));
  write_tensor(dir / "mask.tidt", to_float(maps.values.mask));
  write_tensor(dir / "tiers.tidt", tier_tensor(maps.values.tiers, h, w));
  nlohmann::json weak = nlohmann::json::array();
  for (const Point& p : maps.output.weak_points) weak.push_back({p.y, p.x});
  nlohmann::json summary = {{"height", h},
                            {"width", w},
                            {"tier_population", population(maps.values.tiers)},
                            {"weak_points", weak},
                            {"empty_gt", in.gt.empty()}};
  write_file_atomic(dir / "mask_summary.json", summary.dump(2) + "\n");
  out << summary.dump(2) << "\n";
  return 0;
}

int cmd_loss(const Options& o, std::ostream& out) {
  require(o.teacher, "--teacher");
  require(o.student, "--student");
  require(o.mask, "--mask");
  const CliConfig cfg = resolve_config(o);
  const TensorD teacher = to_double(read_tensor(o.teacher));
  const TensorD student = to_double(read_tensor(o.student));
  const TensorD mask = to_double(read_tensor(o.mask));
  std::optional<sfdm::Projection> projection;
  if (!o.projection.empty()) {
    const Tensor p = read_tensor(o.projection);
    if (p.rank() != 2) throw ShapeError("projection must be a 2-D (out x in) tensor");
    projection = sfdm::Projection{p.dim(0), p.dim(1), {p.data().begin(), p.data().end()}};
  }
  if (teacher.rank() != 3) throw ShapeError("teacher feature must be C x H x W");
  const TensorD aligned = sfdm::align(student, teacher.dims(), projection);
  const sfdm::TierMap tiers = o.tiers.empty() ? sfdm::infer_tiers(mask, cfg.engine.sfdm)
                                              : tiers_from_tensor(read_tensor(o.tiers));
  const sfdm::LossReport report = sfdm::distill_loss(teacher, aligned, mask, tiers);
  if (o.emit_grad) {
    require(o.out, "--out");
    ensure_dir(o.out);
    write_tensor(fs::path(o.out) / "grad_student.tidt", to_float(report.grad_student));
  }
  out << "{\"total\": " << fixed(report.total) << ", \"per_tier\": {\"high\": "
      << fixed(report.tier(sfdm::Tier::High)) << ", \"med\": " << fixed(report.tier(sfdm::Tier::Med))
      << ", \"low\": " << fixed(report.tier(sfdm::Tier::Low)) << "}}\n";
  return 0;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const CliConfig cfg = resolve_config(o);
  const auto mode = parse_mode(o.mode);
  if (!mode) throw UsageError("unknown mode '" + o.mode + "'");
  const harness::SimulationReport report =
      harness::run_simulation(cfg.scene, *mode, o.steps, o.step_size, cfg.engine);
  const std::string doc = harness::report_to_json(report).dump(2) + "\n";
  if (o.out.empty()) {
    if (o.heatmap) throw UsageError("--heatmap requires --out");
    out << doc;
    return 0;
  }
  const fs::path dir(o.out);
  ensure_dir(dir);
  write_file_atomic(dir / "report.json", doc);
  if (o.heatmap) {
    const Tensor value = to_float(report.final_value);
    const Tensor mask = to_float(report.final_mask);
    write_tensor(dir / "value.tidt", value);
    write_tensor(dir / "mask.tidt", mask);
    heatmap::write_heatmap(value, dir / "value.pgm", heatmap::Format::Pgm);
    heatmap::write_heatmap(mask, dir / "mask.pgm", heatmap::Format::Pgm);
  }
  out << (dir / "report.json").string() << "\n";
  return 0;
}

int cmd_heatmap(const Options& o) {
  heatmap::Format format;
  if (o.format == "pgm") {
    format = heatmap::Format::Pgm;
  } else if (o.format == "csv") {
    format = heatmap::Format::Csv;
  } else {
    throw UsageError("unknown heatmap format '" + o.format + "' (expected pgm or csv)");
  }
  heatmap::write_heatmap(read_tensor(o.heatmap_in), o.heatmap_out, format);
  return 0;
}

void add_engine_overrides(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON configuration file");
  cmd->add_option("--cls-top-fraction", o.cls_top_fraction, "Fraction of points marked as classification hits");
  cmd->add_option("--gamma-key", o.gamma_key, "Fraction of points forming key areas");
  cmd->add_option("--gamma-weak", o.gamma_weak, "Fraction of points forming weak areas");
  cmd->add_option("--thrd-pos", o.thrd_pos, "Positive-sample IoU threshold");
  cmd->add_option("--thrd-neg", o.thrd_neg, "Negative-sample IoU threshold");
}

void add_pipeline_inputs(CLI::App* cmd, Options& o) {
  cmd->add_option("--teacher", o.teacher, "Teacher bundle sidecar (JSON)");
  cmd->add_option("--student", o.student, "Student bundle sidecar (JSON)");
  cmd->add_option("--gt", o.gt, "Ground-truth JSON");
  cmd->add_option("--out", o.out, "Output directory");
}

}  // namespace

CliConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw UsageError("config: top level must be an object");
  for (const auto& [k, _] : doc.items()) {
    if (k != "diem" && k != "ldam" && k != "sfdm" && k != "scene") {
      throw UsageError("config: unknown section " + k);
    }
  }
  CliConfig c;
  auto& d = c.engine.diem;
  SectionReader(doc, "diem")
      .field("thrd_pos", d.thrd_pos)
      .field("thrd_neg", d.thrd_neg)
      .field("cls_top_fraction", d.cls_top_fraction)
      .field("score_pos", d.score_pos)
      .field("score_mid", d.score_mid)
      .field("score_neg", d.score_neg)
      .field("cls_hit", d.cls_hit)
      .field("cls_miss", d.cls_miss)
      .finish();
  auto& l = c.engine.ldam;
  SectionReader(doc, "ldam")
      .field("gamma_key", l.gamma_key)
      .field("gamma_weak", l.gamma_weak)
      .field("weak_bonus", l.weak_bonus)
      .field("key_base", l.key_base)
      .field("nms_radius", l.nms_radius)
      .finish();
  auto& s = c.engine.sfdm;
  SectionReader(doc, "sfdm")
      .field("vicinity_scale", s.vicinity_scale)
      .field("tier_hi", s.tier_hi)
      .field("tier_lo", s.tier_lo)
      .field("w_hi", s.w_hi)
      .field("w_med", s.w_med)
      .field("w_lo", s.w_lo)
      .field("alpha_bg", s.alpha_bg)
      .field("alpha_obj", s.alpha_obj)
      .finish();
  auto& sc = c.scene;
  SectionReader(doc, "scene")
      .field("seed", sc.seed)
      .field("height", sc.height)
      .field("width", sc.width)
      .field("channels", sc.channels)
      .field("num_classes", sc.num_classes)
      .field("n_objects", sc.n_objects)
      .field("teacher_noise", sc.teacher_noise)
      .field("student_noise", sc.student_noise)
      .field("min_object_size", sc.min_object_size)
      .field("max_object_size", sc.max_object_size)
      .finish();
  return c;
}

nlohmann::json config_to_json(const CliConfig& cfg) {
  nlohmann::json doc = harness::config_to_json(cfg.engine);
  doc["scene"] = harness::spec_to_json(cfg.scene);
  return doc;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-integration distillation engine: scores, masks, loss and simulation", "tid"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "Write a synthetic scene as bundles + GT");
  generate->add_option("--config", o.config, "JSON configuration file");
  generate->add_option("--seed", o.seed, "Scene seed");
  generate->add_option("--out", o.out, "Output directory");

  auto* score = app.add_subcommand("score", "Dual-task score maps for teacher and student");
  add_pipeline_inputs(score, o);
  add_engine_overrides(score, o);

  auto* mask = app.add_subcommand("mask", "Value maps and the three-tier mask");
  add_pipeline_inputs(mask, o);
  add_engine_overrides(mask, o);

  auto* loss = app.add_subcommand("loss", "Masked feature-imitation loss");
  loss->add_option("--teacher", o.teacher, "Teacher feature tensor (C x H x W)");
  loss->add_option("--student", o.student, "Student feature tensor");
  loss->add_option("--mask", o.mask, "Mask tensor (H x W)");
  loss->add_option("--tiers", o.tiers, "Tier-label tensor (H x W); inferred from the mask if absent");
  loss->add_option("--projection", o.projection, "Channel projection tensor (C x Cs)");
  loss->add_flag("--emit-grad", o.emit_grad, "Write grad_student.tidt to --out");
  loss->add_option("--out", o.out, "Output directory for --emit-grad");
  add_engine_overrides(loss, o);

  auto* simulate = app.add_subcommand("simulate", "Gradient-descent run on a synthetic scene");
  simulate->add_option("--mode", o.mode, "full, cls_only, reg_only, key_only, weak_only, raw_iou, baseline_eq8, unmasked");
  simulate->add_option("--steps", o.steps, "Gradient steps")->check(CLI::PositiveNumber);
  simulate->add_option("--step-size", o.step_size, "Step size (default: safe step of the full mask)");
  simulate->add_option("--seed", o.seed, "Scene seed");
  simulate->add_option("--out", o.out, "Output directory (report.json)");
  simulate->add_flag("--heatmap", o.heatmap, "Also write value/mask maps");
  add_engine_overrides(simulate, o);

  auto* hm = app.add_subcommand("heatmap", "Render a 2-D tensor as P5 graymap or CSV");
  hm->add_option("input", o.heatmap_in, "Input tensor")->required();
  hm->add_option("output", o.heatmap_out, "Output file")->required();
  hm->add_option("--format", o.format, "pgm or csv");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "tid: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*generate) return cmd_generate(o, out);
    if (*score) return cmd_score(o, out);
    if (*mask) return cmd_mask(o, out);
    if (*loss) return cmd_loss(o, out);
    if (*simulate) return cmd_simulate(o, out);
    if (*hm) return cmd_heatmap(o);
  } catch (const UsageError& e) {
    err << "tid: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "tid: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tid::cli
