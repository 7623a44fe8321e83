#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rainmamba/cli.hpp"
#include "rainmamba/contrastive.hpp"
#include "rainmamba/frame_io.hpp"
#include "rainmamba/metrics.hpp"
#include "rainmamba/sfc.hpp"
#include "rainmamba/tensor_io.hpp"

namespace rainmamba::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using io::frame_name;
using io::read_frames;
using io::write_frames;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Non-finite values have no JSON spelling; use strings / null.
Json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

GridDims parse_dims(const std::string& text) {
  std::vector<std::size_t> parts;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    std::size_t v = 0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, v);
    require(ec == std::errc() && ptr == end && v > 0, "--dims: expected T,H,W positive integers, got '" + text + "'");
    parts.push_back(v);
  }
  require(parts.size() == 3, "--dims: expected T,H,W, got '" + text + "'");
  return {parts[0], parts[1], parts[2]};
}

sfc::ScanOrder make_order(const GridDims& d, const std::string& curve, const std::string& direction) {
  if (curve == "zigzag") return sfc::zigzag_order(d.t, d.h, d.w);
  return sfc::hilbert_order_3d(d.t, d.h, d.w, sfc::parse_direction(direction));
}

Json dims_json(const GridDims& d) { return {{"t", d.t}, {"h", d.h}, {"w", d.w}}; }

Json schedule_json(const contrastive::ScheduleParams& s) {
  return {{"d0", s.d0}, {"theta", s.theta}, {"d_min", s.d_min},
          {"p0", s.p0}, {"p_max", s.p_max}, {"m", s.m}};
}

void add_schedule_options(CLI::App* cmd, contrastive::ScheduleParams& s) {
  cmd->add_option("--d0", s.d0, "initial negative distance")->capture_default_str();
  cmd->add_option("--theta", s.theta, "decay factor")->capture_default_str();
  cmd->add_option("--dmin", s.d_min, "distance floor")->capture_default_str();
  cmd->add_option("--p0", s.p0, "initial positive range")->capture_default_str();
  cmd->add_option("--pmax", s.p_max, "positive range cap")->capture_default_str();
  cmd->add_option("--m", s.m, "schedule horizon in steps")->capture_default_str();
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

KeyValues schedule_kv(const contrastive::ScheduleParams& s) {
  const auto str = shortest;
  return {{"d0", str(s.d0)}, {"theta", str(s.theta)}, {"dmin", str(s.d_min)},
          {"p0", str(s.p0)}, {"pmax", str(s.p_max)}, {"m", str(s.m)}};
}

Json patch_json(const contrastive::PatchSample& p) {
  Json j = {{"t", p.t}, {"y", p.y}, {"x", p.x}, {"size", p.size}};
  if (p.role == contrastive::Role::Anchor) j["response"] = p.response;
  if (p.role == contrastive::Role::Negative) j["augmentations"] = p.augmentations;
  return j;
}

struct Options {
  // scan
  std::string dims, curve = "hilbert", direction = "time", format, out;
  std::string mode = "exhaustive";
  std::uint64_t samples = 100000;
  // shared
  std::uint64_t seed = 0;
  // ssm
  bool json = false;
  // derain / synth
  std::string input, config, output;
  std::size_t frames = 5, height = 64, width = 64;
  // contrastive
  contrastive::ScheduleParams schedule;
  std::string rainy, clean, restored;
  std::size_t patch = 16, stride = 16;
  double step = 0.0;
  // metrics
  std::string pred, gt;
  bool luma = false;
  double peak = 1.0;
};

int run_scan_gen(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const auto dims = parse_dims(o.dims);
  const auto order = make_order(dims, o.curve, o.direction);
  std::string format = o.format;
  if (format.empty()) format = fs::path(o.out).extension() == ".rmpm" ? "rmpm" : "csv";

  std::string bytes;
  if (format == "rmpm") {
    bytes = io::encode_rmpm({{static_cast<std::uint32_t>(dims.t), static_cast<std::uint32_t>(dims.h),
                              static_cast<std::uint32_t>(dims.w)},
                             order.perm});
  } else {
    std::ostringstream csv;
    csv << "position,t,y,x\n";
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto c = order.coord_at(i);
      csv << i << ',' << c.t << ',' << c.y << ',' << c.x << '\n';
    }
    bytes = csv.str();
  }
  io::write_file_atomic(o.out, bytes);

  RunManifest m;
  m.command = "scan gen";
  m.seed = o.seed;
  m.config = {{"dims", o.dims}, {"curve", o.curve}, {"direction", o.direction}, {"format", format}};
  m.add_output(o.out);
  m.wall_time_seconds = seconds_since(start);
  m.write(manifest_path_for(o.out));
  out << "wrote " << order.size() << " positions to " << o.out << "\n";
  return kExitOk;
}

int run_scan_analyze(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const auto dims = parse_dims(o.dims);
  const auto order = make_order(dims, o.curve, o.direction);
  require(o.mode == "exhaustive" || o.mode == "sampled", "--mode must be exhaustive or sampled");
  const auto mode = o.mode == "exhaustive" ? sfc::LocalityMode::Exhaustive()
                                           : sfc::LocalityMode::Sampled(o.samples, o.seed);
  const auto r = sfc::locality_report(order, mode);
  const auto ref = sfc::locality_report(sfc::zigzag_order(dims.t, dims.h, dims.w), mode);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dims"] = dims_json(dims);
  j["kind"] = std::string(sfc::to_string(order.kind));
  j["direction"] = std::string(sfc::to_string(order.direction));
  j["mode"] = o.mode;
  j["max_slr"] = number(r.max_slr);
  j["mean_slr_adjacent"] = number(r.mean_slr_adjacent);
  j["mean_index_gap_spatial"] = number(r.mean_index_gap_spatial);
  j["mean_index_gap_temporal"] = number(r.mean_index_gap_temporal);
  j["mean_index_gap_all"] = number(r.mean_index_gap_all);
  j["evaluated_pairs"] = r.evaluated_pairs;
  j["histogram"] = Json::array();
  for (const auto& b : r.histogram) j["histogram"].push_back({b.lo, b.hi, b.count});
  j["zigzag_reference"] = {{"max_slr", number(ref.max_slr)},
                           {"mean_index_gap_spatial", number(ref.mean_index_gap_spatial)},
                           {"mean_index_gap_temporal", number(ref.mean_index_gap_temporal)},
                           {"mean_index_gap_all", number(ref.mean_index_gap_all)}};

  if (o.out.empty()) {
    out << dump(j);
    return kExitOk;
  }
  io::write_file_atomic(o.out, dump(j));
  RunManifest m;
  m.command = "scan analyze";
  m.seed = o.seed;
  m.config = {{"dims", o.dims}, {"curve", o.curve}, {"direction", o.direction}, {"mode", o.mode}};
  if (o.mode == "sampled") m.config.emplace_back("samples", std::to_string(o.samples));
  m.add_output(o.out);
  m.wall_time_seconds = seconds_since(start);
  m.write(manifest_path_for(o.out));
  return kExitOk;
}

int run_ssm_check_cmd(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  SsmCheckOptions opt;
  opt.seed = o.seed;
  const auto r = run_ssm_check(opt);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = o.seed;
  j["equivalence_max_rel_err"] = r.equivalence_max_rel_err;
  j["equivalence_max_rel_err_f32"] = r.equivalence_max_rel_err_f32;
  j["gradient_max_rel_err"] = r.gradient_max_rel_err;
  j["selective_max_abs_diff"] = r.selective_max_abs_diff;
  j["checks"] = Json::array({
      {{"name", "equivalence_f64"}, {"value", r.equivalence_max_rel_err}, {"tolerance", opt.equivalence_tol_f64}, {"pass", r.equivalence_pass}},
      {{"name", "equivalence_f32"}, {"value", r.equivalence_max_rel_err_f32}, {"tolerance", opt.equivalence_tol_f32}, {"pass", r.equivalence_f32_pass}},
      {{"name", "gradient"}, {"value", r.gradient_max_rel_err}, {"tolerance", opt.gradient_tol}, {"pass", r.gradient_pass}},
      {{"name", "selective_degeneration"}, {"value", r.selective_max_abs_diff}, {"tolerance", 0.0}, {"pass", r.selective_pass}},
  });
  j["pass"] = r.pass();

  if (o.json) {
    out << dump(j);
  } else {
    out << std::left << std::setw(26) << "check" << std::setw(14) << "value" << std::setw(12)
        << "tolerance" << "result\n";
    for (const auto& c : j["checks"]) {
      std::ostringstream v, t;
      v << std::scientific << std::setprecision(3) << c["value"].get<double>();
      t << std::scientific << std::setprecision(0) << c["tolerance"].get<double>();
      out << std::setw(26) << c["name"].get<std::string>() << std::setw(14) << v.str()
          << std::setw(12) << t.str() << (c["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
    }
    out << "overall: " << (r.pass() ? "pass" : "FAIL") << "\n";
  }
  if (!o.out.empty()) {
    io::write_file_atomic(o.out, dump(j));
    RunManifest m;
    m.command = "ssm check";
    m.seed = o.seed;
    m.add_output(o.out);
    m.wall_time_seconds = seconds_since(start);
    m.write(manifest_path_for(o.out));
  }
  return r.pass() ? kExitOk : kExitData;
}

int run_derain(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  KeyValues kv;
  if (!o.config.empty()) kv = parse_key_values(io::read_file(o.config), kModelConfigKeys);
  const auto cfg = model_config_from(kv);
  const auto frames = read_frames(o.input);

  const auto model = blocks::RainMambaModel::random(cfg, o.seed);
  const auto restored = blocks::model_forward(frames, model);
  require(restored.all_finite(), "derain produced non-finite values");
  const auto written = write_frames(o.output, restored);

  RunManifest m;
  m.command = "derain";
  m.seed = o.seed;
  m.config = to_key_values(cfg);
  for (std::size_t t = 0; t < frames.time(); ++t) m.add_input(fs::path(o.input) / frame_name(t));
  if (!o.config.empty()) m.add_input(o.config);
  for (const auto& p : written) m.add_output(p);
  m.wall_time_seconds = seconds_since(start);
  m.write(fs::path(o.output) / "manifest.json");
  out << "restored " << restored.time() << " frames of " << restored.height() << "x"
      << restored.width() << " into " << o.output << "\n";
  return kExitOk;
}

int run_synth(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  Rng rng(o.seed);
  const auto scene = contrastive::synthetic_scene(3, o.frames, o.height, o.width, rng);
  const auto rainy = contrastive::compose_rain(scene);
  const fs::path root(o.output);
  const auto rainy_files = write_frames(root / "rainy", rainy);
  const auto clean_files = write_frames(root / "clean", scene.background);

  RunManifest m;
  m.command = "synth";
  m.seed = o.seed;
  m.config = {{"frames", std::to_string(o.frames)},
              {"height", std::to_string(o.height)},
              {"width", std::to_string(o.width)}};
  for (const auto& p : rainy_files) m.add_output(p);
  for (const auto& p : clean_files) m.add_output(p);
  m.wall_time_seconds = seconds_since(start);
  m.write(root / "manifest.json");
  out << "wrote " << o.frames << " rainy/clean frame pairs to " << o.output << "\n";
  return kExitOk;
}

int run_trace(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  o.schedule.validate();
  require(o.schedule.m == std::floor(o.schedule.m), "--m must be an integer step count");
  std::ostringstream csv;
  csv << "e,d,p\n";
  const auto steps = static_cast<std::uint64_t>(o.schedule.m);
  for (std::uint64_t e = 0; e <= steps; ++e) {
    const auto dist = contrastive::schedule(static_cast<double>(e), o.schedule);
    csv << e << ',' << shortest(dist.d) << ',' << shortest(dist.p) << '\n';
  }
  io::write_file_atomic(o.out, csv.str());
  RunManifest m;
  m.command = "contrastive trace";
  m.config = schedule_kv(o.schedule);
  m.add_output(o.out);
  m.wall_time_seconds = seconds_since(start);
  m.write(manifest_path_for(o.out));
  out << "wrote " << steps + 1 << " rows to " << o.out << "\n";
  return kExitOk;
}

int run_sample(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const auto rainy = read_frames(o.rainy);
  const auto clean = read_frames(o.clean);
  const auto restored = o.restored.empty() ? rainy : read_frames(o.restored);

  contrastive::SamplingOptions opt;
  opt.patch = o.patch;
  opt.stride = o.stride;
  opt.schedule = o.schedule;
  opt.step = o.step;
  Rng rng(o.seed);
  const auto batch = contrastive::sample_batch(rainy, clean, restored, opt, rng);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = o.seed;
  j["step"] = o.step;
  j["patch"] = o.patch;
  j["stride"] = o.stride;
  j["schedule"] = schedule_json(o.schedule);
  j["d"] = batch.distances.d;
  j["p"] = batch.distances.p;
  j["mean_difference"] = batch.mean_difference;
  j["dropped_anchors"] = batch.dropped_anchors;
  j["triplets"] = Json::array();
  for (std::size_t i = 0; i < batch.anchors.size(); ++i) {
    const auto& a = batch.anchors[i];
    const auto& p = batch.positives[i];
    const auto& n = batch.negatives[i];
    auto offset = [&](const contrastive::PatchSample& s) {
      return Json{{"dt", static_cast<std::int64_t>(s.t) - static_cast<std::int64_t>(a.t)},
                  {"dy", static_cast<std::int64_t>(s.y) - static_cast<std::int64_t>(a.y)},
                  {"dx", static_cast<std::int64_t>(s.x) - static_cast<std::int64_t>(a.x)}};
    };
    Json pos = patch_json(p);
    Json neg = patch_json(n);
    pos["offset"] = offset(p);
    neg["offset"] = offset(n);
    j["triplets"].push_back({{"anchor", patch_json(a)}, {"positive", pos}, {"negative", neg}});
  }

  const std::string text = dump(j);
  if (o.out.empty()) {
    out << text;
    return kExitOk;
  }
  io::write_file_atomic(o.out, text);
  RunManifest m;
  m.command = "contrastive sample";
  m.seed = o.seed;
  m.config = schedule_kv(o.schedule);
  m.config.emplace_back("patch", std::to_string(o.patch));
  m.config.emplace_back("stride", std::to_string(o.stride));
  m.config.emplace_back("step", shortest(o.step));
  for (const auto& dir : {o.rainy, o.clean, o.restored}) {
    if (dir.empty()) continue;
    for (std::size_t t = 0; t < rainy.time(); ++t) m.add_input(fs::path(dir) / frame_name(t));
  }
  m.add_output(o.out);
  m.wall_time_seconds = seconds_since(start);
  m.write(manifest_path_for(o.out));
  return kExitOk;
}

int run_metrics(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  auto pred = read_frames(o.pred);
  auto gt = read_frames(o.gt);
  require(pred.same_shape(gt), "metrics: prediction and ground truth differ in shape");
  if (o.luma) {
    pred = metrics::to_luma(pred);
    gt = metrics::to_luma(gt);
  }
  const auto s = metrics::score_frames(pred, gt, o.peak);

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["space"] = o.luma ? "luma" : "rgb";
  j["peak"] = o.peak;
  j["frames"] = Json::array();
  for (std::size_t t = 0; t < s.psnr.size(); ++t)
    j["frames"].push_back({{"index", t}, {"psnr", number(s.psnr[t])}, {"ssim", number(s.ssim[t])}});
  j["mean_psnr"] = number(s.mean_psnr);
  j["mean_ssim"] = number(s.mean_ssim);

  const std::string text = dump(j);
  if (o.out.empty()) {
    out << text;
    return kExitOk;
  }
  io::write_file_atomic(o.out, text);
  RunManifest m;
  m.command = "metrics";
  m.config = {{"space", o.luma ? "luma" : "rgb"}};
  for (std::size_t t = 0; t < pred.time(); ++t) {
    m.add_input(fs::path(o.pred) / frame_name(t));
    m.add_input(fs::path(o.gt) / frame_name(t));
  }
  m.add_output(o.out);
  m.wall_time_seconds = seconds_since(start);
  m.write(manifest_path_for(o.out));
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Video deraining toolkit: scan orders, SSM kernels, contrastive sampling, metrics",
               "rainmamba"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rainmamba 0.1.0");
  const std::vector<std::string> curves = {"zigzag", "hilbert"};
  const std::vector<std::string> directions = {"time", "height", "width"};
  std::function<int()> action;

  auto* scan = app.add_subcommand("scan", "scan orders and locality analysis");
  scan->require_subcommand(1);
  auto* gen = scan->add_subcommand("gen", "write a scan order as CSV or RMPM");
  gen->add_option("--dims", o.dims, "T,H,W")->required();
  gen->add_option("--curve", o.curve)->check(CLI::IsMember(curves))->capture_default_str();
  gen->add_option("--direction", o.direction)->check(CLI::IsMember(directions))->capture_default_str();
  gen->add_option("--format", o.format, "csv or rmpm (default: from extension)")
      ->check(CLI::IsMember({"csv", "rmpm"}));
  gen->add_option("--out", o.out)->required();
  gen->callback([&] { action = [&] { return run_scan_gen(o, out); }; });

  auto* analyze = scan->add_subcommand("analyze", "locality report as JSON");
  analyze->add_option("--dims", o.dims, "T,H,W")->required();
  analyze->add_option("--curve", o.curve)->check(CLI::IsMember(curves))->capture_default_str();
  analyze->add_option("--direction", o.direction)->check(CLI::IsMember(directions))->capture_default_str();
  analyze->add_option("--mode", o.mode)->check(CLI::IsMember({"exhaustive", "sampled"}))->capture_default_str();
  analyze->add_option("--samples", o.samples, "random pairs in sampled mode")->capture_default_str();
  analyze->add_option("--seed", o.seed)->capture_default_str();
  analyze->add_option("--out", o.out, "report path (default: stdout)");
  analyze->callback([&] { action = [&] { return run_scan_analyze(o, out); }; });

  auto* ssm_cmd = app.add_subcommand("ssm", "state-space kernel diagnostics");
  ssm_cmd->require_subcommand(1);
  auto* check = ssm_cmd->add_subcommand("check", "form equivalence and gradient residuals");
  check->add_option("--seed", o.seed)->capture_default_str();
  check->add_flag("--json", o.json, "print JSON instead of a table");
  check->add_option("--out", o.out, "also write the JSON report here");
  check->callback([&] { action = [&] { return run_ssm_check_cmd(o, out); }; });

  auto* derain = app.add_subcommand("derain", "run the model on a frame directory");
  derain->add_option("--input", o.input, "directory of frame_%05d.ppm")->required();
  derain->add_option("--seed", o.seed)->capture_default_str();
  derain->add_option("--config", o.config, "key=value model config");
  derain->add_option("--output", o.output)->required();
  derain->callback([&] { action = [&] { return run_derain(o, out); }; });

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic rainy/clean clip");
  synth->add_option("--output", o.output)->required();
  synth->add_option("--seed", o.seed)->capture_default_str();
  synth->add_option("--frames", o.frames)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--height", o.height)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--width", o.width)->check(CLI::PositiveNumber)->capture_default_str();
  synth->callback([&] { action = [&] { return run_synth(o, out); }; });

  auto* con = app.add_subcommand("contrastive", "contrastive sampling tools");
  con->require_subcommand(1);
  auto* trace = con->add_subcommand("trace", "distance schedule as CSV");
  add_schedule_options(trace, o.schedule);
  trace->add_option("--out", o.out)->required();
  trace->callback([&] { action = [&] { return run_trace(o, out); }; });

  auto* sample = con->add_subcommand("sample", "anchors and sampled offsets as JSON");
  sample->add_option("--rainy", o.rainy)->required();
  sample->add_option("--clean", o.clean)->required();
  sample->add_option("--restored", o.restored, "restored frames (default: rainy)");
  sample->add_option("--seed", o.seed)->capture_default_str();
  sample->add_option("--patch", o.patch)->check(CLI::PositiveNumber)->capture_default_str();
  sample->add_option("--stride", o.stride)->check(CLI::PositiveNumber)->capture_default_str();
  sample->add_option("--step", o.step, "training step e")->capture_default_str();
  add_schedule_options(sample, o.schedule);
  sample->add_option("--out", o.out, "report path (default: stdout)");
  sample->callback([&] { action = [&] { return run_sample(o, out); }; });

  auto* met = app.add_subcommand("metrics", "per-frame and mean PSNR/SSIM");
  met->add_option("--pred", o.pred)->required();
  met->add_option("--gt", o.gt)->required();
  met->add_option("--out", o.out, "report path (default: stdout)");
  met->add_flag("--luma", o.luma, "score BT.601 luma instead of RGB");
  met->add_option("--peak", o.peak)->check(CLI::PositiveNumber)->capture_default_str();
  met->callback([&] { action = [&] { return run_metrics(o, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace rainmamba::cli
