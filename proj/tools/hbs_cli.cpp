#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hbs/hbs.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kReportSchema = "hbs-report/v1";

enum Exit { kOk = 0, kPartial = 1, kUsage = 2, kInternal = 3 };

struct Report {
  json doc;
  int failures = 0;

  Report(const std::string& command, int argc, char** argv) {
    doc["schema"] = kReportSchema;
    doc["command"] = command;
    json args = json::array();
    for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
    doc["argv"] = args;
    doc["items"] = json::array();
  }
  void add(json item) {
    if (item.value("status", "") != "ok") ++failures;
    doc["items"].push_back(std::move(item));
  }
  void emit(const std::string& json_path) {
    doc["summary"] = {{"items", doc["items"].size()}, {"failed", failures}};
    if (json_path.empty()) return;
    const std::string text = doc.dump(2) + "\n";
    if (json_path == "-") {
      std::cout << text;
    } else {
      std::ofstream f(json_path);
      if (!f || !(f << text)) throw hbs::IoError("cannot write report " + json_path);
    }
  }
  int exit_code() const { return failures == 0 ? kOk : kPartial; }
};

std::string error_kind(const std::exception& e) {
  if (auto* s = dynamic_cast<const hbs::ShapeError*>(&e)) return hbs::to_string(s->validation.status);
  if (dynamic_cast<const hbs::FormatError*>(&e)) return "FormatError";
  if (dynamic_cast<const hbs::IoError*>(&e)) return "IoError";
  if (dynamic_cast<const hbs::ConformalError*>(&e)) return "ConformalError";
  if (dynamic_cast<const hbs::SolverError*>(&e)) return "SolverError";
  if (dynamic_cast<const hbs::InvalidArgument*>(&e)) return "InvalidArgument";
  return "Error";
}

json error_item(const std::string& input, const std::exception& e) {
  return {{"input", input}, {"status", "error"}, {"error", error_kind(e)}, {"message", e.what()}};
}

json residuals_json(const hbs::ConditionResiduals& r) {
  return {{"interior_integral", r.interior_integral},
          {"arg_integral", r.arg_integral},
          {"arg_integral_over_z", r.arg_integral_over_z}};
}

json timing_json(const hbs::HbsResult& r) {
  json t = json::object();
  for (const auto& s : r.timing) t[s.stage] = s.ms;
  t["total"] = r.total_ms();
  return t;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<fs::path> corpus_images(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw hbs::IoError("not a directory: " + dir.string());
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto ext = hbs::detail::extension_of(e.path());
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".png")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic Beltrami Signature tools"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string json_path;
  int threads = 1;
  app.add_option("--json", json_path, "write a JSON report to this path ('-' for stdout)");
  app.add_option("--threads", threads, "worker threads for batch commands")->check(CLI::PositiveNumber);

  hbs::HbsConfig hbs_config;
  auto add_hbs_options = [&](CLI::App* c) {
    c->add_option("--boundary-points", hbs_config.boundary_points, "boundary samples for the conformal maps")
        ->check(CLI::Range(16, 100000));
    c->add_option("--quad-nodes", hbs_config.quad_nodes, "circle samples of the welding")->check(CLI::Range(16, 1 << 20));
    c->add_option("--smoothing", hbs_config.smoothing_px, "contour smoothing in pixels (0 disables)")
        ->check(CLI::NonNegativeNumber);
  };

  auto* compute = app.add_subcommand("compute", "compute the HBS of each input image");
  std::vector<std::string> compute_inputs;
  std::string compute_out = ".";
  compute->add_option("inputs", compute_inputs, "input images (.pgm/.png)")->required();
  compute->add_option("--out", compute_out, "output directory for .hbs files");
  add_hbs_options(compute);

  auto* distance = app.add_subcommand("distance", "distance between two .hbs files");
  std::string dist_a, dist_b;
  bool dist_align = false;
  distance->add_option("a", dist_a)->required();
  distance->add_option("b", dist_b)->required();
  distance->add_flag("--align", dist_align, "also report the rotation-aligned distance");

  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct a shape image from an .hbs file");
  std::string rec_in, rec_out;
  hbs::ReconstructOptions rec_opts;
  reconstruct->add_option("input", rec_in)->required();
  reconstruct->add_option("--out", rec_out, "output image (.pgm/.png)")->required();
  reconstruct->add_option("--resolution", rec_opts.mesh.resolution, "mesh lines across the disk")->check(CLI::Range(9, 2049));

  auto* generate = app.add_subcommand("generate", "generate an HBS-labelled dataset");
  hbs::GenConfig gen;
  std::string gen_method = "polygon", gen_out;
  generate->add_option("--method", gen_method, "polygon, welding or mixed")
      ->check(CLI::IsMember({"polygon", "welding", "mixed"}));
  generate->add_option("--count", gen.count)->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed);
  generate->add_option("--out", gen_out, "output directory")->required();
  generate->add_flag("--soften", gen.soften, "soften images (labels unchanged)");
  generate->add_option("--perturb", gen.perturb_magnitude, "grid perturbation magnitude in pixels")
      ->check(CLI::NonNegativeNumber);
  generate->add_flag("--augment", gen.augment, "random similarity augmentation");
  add_hbs_options(generate);

  auto* bench = app.add_subcommand("bench", "time compute_hbs over a corpus of images");
  std::string bench_dir;
  int bench_repeat = 3;
  bench->add_option("corpus", bench_dir)->required();
  bench->add_option("--repeat", bench_repeat)->check(CLI::PositiveNumber);
  add_hbs_options(bench);

  auto* render = app.add_subcommand("render", "render an .hbs file as a PNG");
  std::string render_in, render_out;
  int render_scale = 2;
  render->add_option("input", render_in)->required();
  render->add_option("--out", render_out, "output PNG")->required();
  render->add_option("--scale", render_scale, "integer upscaling")->check(CLI::Range(1, 16));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  Report report(active->get_name(), argc, argv);
  int rc = kOk;
  try {
    if (active == compute) {
      fs::create_directories(compute_out);
      std::vector<json> items(compute_inputs.size());
      hbs::parallel_for(static_cast<int>(compute_inputs.size()), threads, [&](int i) {
        const std::string& in = compute_inputs[i];
        try {
          const auto image = hbs::read_image(in);
          const auto r = hbs::compute_hbs(image, hbs_config);
          const fs::path out = fs::path(compute_out) / (fs::path(in).stem().string() + ".hbs");
          hbs::write_field(r.hbs, out);
          items[i] = {{"input", in},
                      {"status", "ok"},
                      {"output", out.string()},
                      {"mean_abs", r.hbs.mean_abs()},
                      {"sup_norm", r.hbs.sup_norm()},
                      {"rotation", r.rotation_applied},
                      {"degenerate_rotation", r.degenerate_rotation},
                      {"clamped_pixels", r.clamped_pixels},
                      {"residuals", residuals_json(r.residuals)},
                      {"timing_ms", timing_json(r)}};
        } catch (const hbs::Error& e) {
          items[i] = error_item(in, e);
        }
      });
      for (auto& it : items) {
        if (it.value("status", "") == "ok")
          std::cout << it["input"].get<std::string>() << " -> " << it["output"].get<std::string>() << "\n";
        else
          std::cerr << it["input"].get<std::string>() << ": " << it["error"].get<std::string>() << ": "
                    << it["message"].get<std::string>() << "\n";
        report.add(std::move(it));
      }
      rc = report.exit_code();
    } else if (active == distance) {
      const auto a = hbs::read_field(dist_a), b = hbs::read_field(dist_b);
      json item{{"input", dist_a + " " + dist_b}, {"status", "ok"}, {"distance", hbs::hbs_distance(a, b)}};
      std::cout << "distance " << item["distance"].get<double>() << "\n";
      if (dist_align) {
        const auto al = hbs::align_rotation(b, a);
        item["aligned_distance"] = al.distance;
        item["theta"] = al.theta;
        std::cout << "aligned_distance " << al.distance << "\ntheta " << al.theta << "\n";
      }
      report.add(std::move(item));
    } else if (active == reconstruct) {
      try {
        const auto field = hbs::read_field(rec_in);
        const auto r = hbs::reconstruct_shape(field, rec_opts);
        hbs::write_image(r.image, rec_out);
        report.add({{"input", rec_in},
                    {"status", r.flipped_triangle_count == 0 ? "ok" : "error"},
                    {"output", rec_out},
                    {"flipped_triangle_count", r.flipped_triangle_count},
                    {"raw_flipped_triangle_count", r.raw_flipped_triangle_count},
                    {"repair_rounds", r.repair_rounds},
                    {"residual", r.residual}});
        std::cout << rec_in << " -> " << rec_out << " (flipped " << r.flipped_triangle_count << ", raw "
                  << r.raw_flipped_triangle_count << ", residual " << r.residual << ")\n";
      } catch (const hbs::Error& e) {
        std::cerr << rec_in << ": " << error_kind(e) << ": " << e.what() << "\n";
        report.add(error_item(rec_in, e));
      }
      rc = report.exit_code();
    } else if (active == generate) {
      gen.method = hbs::parse_method(gen_method);
      gen.threads = threads;
      gen.hbs = hbs_config;
      const auto m = hbs::build_dataset(gen, gen_out);
      double worst_arg = 0.0, mean_sup = 0.0;
      for (const auto& e : m.entries) worst_arg = std::max(worst_arg, std::abs(e.residuals.arg_integral));
      for (const auto& e : m.entries) mean_sup += hbs::read_field(fs::path(gen_out) / e.hbs_path).sup_norm();
      mean_sup /= static_cast<double>(m.entries.size());
      report.add({{"input", gen_out},
                  {"status", "ok"},
                  {"manifest", m.path.string()},
                  {"entries", m.entries.size()},
                  {"method", gen_method},
                  {"worst_arg_integral", worst_arg},
                  {"mean_sup_norm", mean_sup}});
      std::cout << m.path.string() << "\nentries " << m.entries.size() << "\nmean sup |B| " << mean_sup
                << "\nworst |arg int B| " << worst_arg << "\n";
    } else if (active == bench) {
      const auto files = corpus_images(bench_dir);
      if (files.empty()) throw hbs::InvalidArgument("empty corpus: " + bench_dir);
      std::vector<hbs::GrayImage> images;
      for (const auto& f : files) images.push_back(hbs::read_image(f));
      std::vector<double> totals;
      std::map<std::string, std::vector<double>> stages;
      std::vector<double> repeat_medians;
      for (int rep = 0; rep < bench_repeat; ++rep) {
        std::vector<double> this_rep;
        for (const auto& img : images) {
          const auto t0 = std::chrono::steady_clock::now();
          const auto r = hbs::compute_hbs(img, hbs_config);
          const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
          totals.push_back(ms);
          this_rep.push_back(ms);
          for (const auto& s : r.timing) stages[s.stage].push_back(s.ms);
        }
        repeat_medians.push_back(median(this_rep));
      }
      const auto [lo, hi] = std::minmax_element(repeat_medians.begin(), repeat_medians.end());
      json stage_json = json::object();
      for (const auto& [k, v] : stages) stage_json[k] = median(v);
      const double med = median(totals);
      report.add({{"input", bench_dir},
                  {"status", "ok"},
                  {"images", images.size()},
                  {"repeat", bench_repeat},
                  {"median_ms", med},
                  {"min_ms", *std::min_element(totals.begin(), totals.end())},
                  {"max_ms", *std::max_element(totals.begin(), totals.end())},
                  {"repeat_median_spread", *lo > 0 ? (*hi - *lo) / *lo : 0.0},
                  {"stage_median_ms", stage_json},
                  {"baseline_ms", 871.0}});
      std::cout << "images " << images.size() << " x " << bench_repeat << "\nmedian_ms " << med
                << "\nbaseline_ms 871\n";
      for (const auto& [k, v] : stage_json.items()) std::cout << "  " << k << " " << v.get<double>() << "\n";
    } else if (active == render) {
      const auto f = hbs::read_field(render_in);
      hbs::write_render(f, render_out, render_scale);
      report.add({{"input", render_in}, {"status", "ok"}, {"output", render_out}});
      std::cout << render_in << " -> " << render_out << "\n";
    }
    report.emit(json_path);
  } catch (const hbs::Error& e) {
    std::cerr << "error: " << error_kind(e) << ": " << e.what() << "\n";
    report.add(error_item(active->get_name(), e));
    try {
      report.emit(json_path);
    } catch (...) {
    }
    return dynamic_cast<const hbs::InvalidArgument*>(&e) ? kUsage : kPartial;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return rc;
}
