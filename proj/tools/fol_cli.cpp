// Command-line front end: every run reads one JSON config, writes its outputs
// plus a manifest into --out, and exits nonzero with a one-line diagnostic on
// failure. Identical config + seed reproduces every output byte for byte.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "fol/deeponet.hpp"
#include "fol/fol.hpp"
#include "fol/io.hpp"
#include "fol/metrics.hpp"
#include "fol/microstructure.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 0;  // 0 keeps the config value
  std::string resume;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;

  bool seed_given() const { return seed_opt && seed_opt->count() > 0; }
  bool threads_given() const { return threads_opt && threads_opt->count() > 0; }
};

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string id_hex(std::uint64_t id) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(id));
  return buf;
}

json load_config(const std::string& path) {
  std::string text = fol::read_text_file(path);
  json j = json::parse(text, nullptr, true, /*ignore_comments=*/false);
  if (!j.is_object()) throw std::runtime_error(path + ": config root must be an object");
  return j;
}

fol::Mesh mesh_from_json(const json& j) {
  fol::require_keys_subset(j, {"grid_n", "side_length", "file"}, "mesh");
  if (j.contains("file")) {
    if (j.contains("grid_n") || j.contains("side_length"))
      throw std::invalid_argument("mesh: give either 'file' or grid parameters, not both");
    return fol::load_tet_mesh(fol::read_text_file(j.at("file").get<std::string>()));
  }
  if (!j.contains("grid_n")) throw std::invalid_argument("mesh: missing 'grid_n'");
  return fol::build_structured_grid(j.at("grid_n").get<int>(), j.value("side_length", 1.0));
}

int component_from_json(const json& j) {
  if (j.is_number_integer()) return j.get<int>();
  std::string s = j.get<std::string>();
  if (s == "u") return 0;
  if (s == "v") return 1;
  if (s == "w") return 2;
  throw std::invalid_argument("bcs: component must be 0/1/2 or u/v/w, got '" + s + "'");
}

std::vector<fol::DirichletSpec> bcs_from_json(const json& config) {
  if (!config.contains("bcs")) throw std::invalid_argument("config: missing 'bcs'");
  const json& arr = config.at("bcs");
  if (!arr.is_array() || arr.empty())
    throw std::invalid_argument("bcs: expected a non-empty array");
  std::vector<fol::DirichletSpec> bcs;
  for (const json& entry : arr) {
    fol::require_keys_subset(entry, {"set", "component", "value"}, "bcs entry");
    fol::DirichletSpec spec;
    spec.node_set = entry.at("set").get<std::string>();
    spec.component = component_from_json(entry.at("component"));
    spec.value = entry.at("value").get<double>();
    bcs.push_back(spec);
  }
  return bcs;
}

double nu_from_json(const json& config) {
  if (!config.contains("material")) return 0.3;
  fol::require_keys_subset(config.at("material"), {"nu"}, "material");
  return config.at("material").value("nu", 0.3);
}

fol::SolveOptions solver_from_json(const json& config) {
  fol::SolveOptions options;
  if (!config.contains("solver")) return options;
  const json& j = config.at("solver");
  fol::require_keys_subset(j, {"tol", "max_iter_factor", "stall_window"}, "solver");
  options.tol = j.value("tol", options.tol);
  options.max_iter_factor = j.value("max_iter_factor", options.max_iter_factor);
  options.stall_window = j.value("stall_window", options.stall_window);
  return options;
}

void prepare_out(const CommonArgs& args) {
  std::filesystem::create_directories(args.out_dir);
}

// ---- generate ----------------------------------------------------------

int cmd_generate(const CommonArgs& args) {
  json config = load_config(args.config_path);
  fol::require_keys_subset(config, {"mesh", "sampling", "seed", "threads"}, "generate config");
  if (!config.contains("sampling")) throw std::invalid_argument("generate: missing 'sampling'");
  const json& sampling = config.at("sampling");
  fol::require_keys_subset(sampling, {"kind", "n_samples", "E_hard", "E_soft", "fourier", "ranges"},
                           "sampling");
  std::string kind = sampling.at("kind").get<std::string>();
  int n_samples = sampling.at("n_samples").get<int>();
  std::uint64_t seed = args.seed_given() ? args.seed : config.value("seed", std::uint64_t{0});
  int threads = args.threads_given() ? args.threads : config.value("threads", 1);

  fol::SampleSet set;
  if (kind == "two_phase") {
    fol::Mesh mesh = mesh_from_json(config.at("mesh"));
    if (!mesh.structured())
      throw std::invalid_argument("generate: two_phase sampling needs a structured grid");
    set = fol::generate_two_phase_samples(n_samples, mesh.grid_n, sampling.value("E_hard", 1.0),
                                          sampling.value("E_soft", 0.1), seed, threads);
  } else if (kind == "fourier_coeffs") {
    if (!sampling.contains("fourier"))
      throw std::invalid_argument("generate: fourier_coeffs sampling needs a 'fourier' layout");
    fol::FourierSpec spec = fol::fourier_spec_from_json(sampling.at("fourier"));
    Eigen::MatrixXd ranges = fol::default_coeff_ranges(spec.n_terms());
    if (sampling.contains("ranges")) {
      const json& r = sampling.at("ranges");
      if (r.is_array() && r.size() == 2 && r[0].is_number()) {
        ranges.col(0).setConstant(r[0].get<double>());
        ranges.col(1).setConstant(r[1].get<double>());
      } else {
        if (static_cast<int>(r.size()) != spec.n_terms())
          throw std::invalid_argument("generate: 'ranges' needs one [lo, hi] pair per term");
        for (int i = 0; i < spec.n_terms(); ++i) {
          ranges(i, 0) = r[i][0].get<double>();
          ranges(i, 1) = r[i][1].get<double>();
        }
      }
    }
    set = fol::sample_fourier_coeffs(n_samples, spec, ranges, seed);
  } else {
    throw std::invalid_argument("generate: unknown sampling kind '" + kind + "'");
  }

  prepare_out(args);
  std::string samples_path = join(args.out_dir, "samples.csv");
  fol::write_sample_csv(samples_path, set);
  json resolved = config;
  resolved["seed"] = seed;
  resolved["threads"] = threads;
  fol::write_manifest(join(args.out_dir, "manifest.json"), "generate", resolved);
  std::printf("generate: wrote %d samples to %s\n", n_samples, samples_path.c_str());
  return 0;
}

// ---- solve ---------------------------------------------------------------

int cmd_solve(const CommonArgs& args) {
  json config = load_config(args.config_path);
  fol::require_keys_subset(config, {"mesh", "material", "bcs", "samples", "solver", "vtk"},
                           "solve config");
  fol::Mesh mesh = mesh_from_json(config.at("mesh"));
  fol::DofMap dof_map = fol::build_dof_map(mesh, bcs_from_json(config));
  double nu = nu_from_json(config);
  fol::SolveOptions options = solver_from_json(config);
  bool vtk = config.value("vtk", false);
  if (!config.contains("samples")) throw std::invalid_argument("solve: missing 'samples' path");
  fol::SampleSet set = fol::read_sample_csv(config.at("samples").get<std::string>());

  prepare_out(args);
  int n_failed = 0;
  for (std::size_t s = 0; s < set.inputs.size(); ++s) {
    std::string tag = id_hex(set.ids[s]);
    try {
      if (set.inputs[s].size() != mesh.n_nodes())
        throw std::invalid_argument("sample length does not match mesh");
      fol::ElasticityField field{&mesh, set.inputs[s], nu};
      fol::SolutionField sol = fol::solve_reference(mesh, dof_map, field, options);
      fol::write_solution_csv(join(args.out_dir, "solution_" + tag + ".csv"), sol);
      if (vtk)
        fol::write_vtk(join(args.out_dir, "solution_" + tag + ".vtk"), mesh,
                       fol::solution_vtk_fields(sol, &field.E));
    } catch (const std::exception& e) {
      ++n_failed;
      std::fprintf(stderr, "solve: sample %s failed: %s\n", tag.c_str(), e.what());
    }
  }
  fol::write_manifest(join(args.out_dir, "manifest.json"), "solve", config);
  int n_total = static_cast<int>(set.inputs.size());
  std::printf("solve: %d/%d samples solved\n", n_total - n_failed, n_total);
  return n_failed == n_total ? 1 : 0;
}

// ---- train-fol -------------------------------------------------------------

json fol_config_less_epochs(const fol::FolConfig& config) {
  json j = fol::fol_config_to_json(config);
  j.erase("epochs");
  return j;
}

int cmd_train_fol(const CommonArgs& args) {
  json config = load_config(args.config_path);
  fol::require_keys_subset(config, {"mesh", "bcs", "samples", "fol"}, "train-fol config");
  if (!config.contains("fol")) throw std::invalid_argument("train-fol: missing 'fol' section");
  fol::FolConfig fol_config = fol::fol_config_from_json(config.at("fol"));
  if (args.seed_given()) fol_config.seed = args.seed;
  if (args.threads_given()) fol_config.threads = args.threads;
  fol::Mesh mesh = mesh_from_json(config.at("mesh"));
  fol::DofMap dof_map = fol::build_dof_map(mesh, bcs_from_json(config));
  if (!config.contains("samples"))
    throw std::invalid_argument("train-fol: missing 'samples' path");
  fol::SampleSet samples = fol::read_sample_csv(config.at("samples").get<std::string>());

  fol::FolTrainer trainer;
  if (!args.resume.empty()) {
    trainer = fol::load_fol_checkpoint(args.resume, mesh);
    // The checkpoint must come from the same run setup; only the epoch target
    // may move between invocations.
    if (fol_config_less_epochs(trainer.model.config) != fol_config_less_epochs(fol_config))
      throw std::runtime_error("train-fol: checkpoint config differs from --config");
    if (trainer.epochs_done > fol_config.epochs)
      throw std::runtime_error("train-fol: checkpoint already past the requested epochs");
    // adopt the new target so the saved checkpoint matches an uninterrupted run
    trainer.model.config.epochs = fol_config.epochs;
  } else {
    trainer = fol::make_fol_trainer(mesh, dof_map, fol_config);
  }
  int remaining = fol_config.epochs - trainer.epochs_done;
  if (remaining > 0) trainer.train(samples, remaining);

  prepare_out(args);
  json resolved = config;
  resolved["fol"] = fol::fol_config_to_json(fol_config);
  fol::save_fol_checkpoint(join(args.out_dir, "checkpoint.json"), trainer,
                           fol::config_hash(resolved));
  fol::write_fol_history_csv(join(args.out_dir, "history.csv"), trainer.history);
  fol::write_manifest(join(args.out_dir, "manifest.json"), "train-fol", resolved);
  double final_loss = trainer.history.empty() ? 0.0 : trainer.history.back().total;
  std::printf("train-fol: %d epochs done, final loss %.6e\n", trainer.epochs_done, final_loss);
  return 0;
}

// ---- train-deeponet -------------------------------------------------------

int cmd_train_deeponet(const CommonArgs& args) {
  json config = load_config(args.config_path);
  fol::require_keys_subset(config,
                           {"mesh", "bcs", "samples", "material", "deeponet", "solver", "threads"},
                           "train-deeponet config");
  if (!config.contains("deeponet"))
    throw std::invalid_argument("train-deeponet: missing 'deeponet' section");
  fol::DeepONetConfig net_config = fol::deeponet_config_from_json(config.at("deeponet"));
  if (args.seed_given()) net_config.seed = args.seed;
  int threads = args.threads_given() ? args.threads : config.value("threads", 1);
  fol::Mesh mesh = mesh_from_json(config.at("mesh"));
  fol::DofMap dof_map = fol::build_dof_map(mesh, bcs_from_json(config));
  if (!config.contains("samples"))
    throw std::invalid_argument("train-deeponet: missing 'samples' path");
  fol::SampleSet samples = fol::read_sample_csv(config.at("samples").get<std::string>());

  fol::DeepONetDataset dataset = fol::build_deeponet_dataset(
      samples, mesh, dof_map, nu_from_json(config), solver_from_json(config), threads);
  fol::DeepONetTrainer trainer = fol::train_deeponet(dataset, net_config);

  prepare_out(args);
  json resolved = config;
  resolved["deeponet"] = fol::deeponet_config_to_json(net_config);
  resolved["threads"] = threads;
  fol::save_deeponet_checkpoint(join(args.out_dir, "checkpoint.json"), trainer,
                                fol::config_hash(resolved));
  fol::write_deeponet_history_csv(join(args.out_dir, "history.csv"), trainer.history);
  fol::write_manifest(join(args.out_dir, "manifest.json"), "train-deeponet", resolved);
  double final_loss = trainer.history.empty() ? 0.0 : trainer.history.back();
  std::printf("train-deeponet: %d epochs done, final mse %.6e\n", trainer.epochs_done, final_loss);
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

void write_eval_outputs(const CommonArgs& args, const fol::Mesh& mesh, std::uint64_t id,
                        const fol::SolutionField& pred, const fol::SolutionField& ref,
                        const Eigen::VectorXd& E, const fol::ErrorReport& report, bool vtk) {
  std::string tag = id_hex(id);
  fol::write_error_csv(join(args.out_dir, "err_" + tag + ".csv"), report);
  if (!vtk) return;
  fol::write_vtk(join(args.out_dir, "pred_" + tag + ".vtk"), mesh,
                 fol::solution_vtk_fields(pred, &E));
  fol::write_vtk(join(args.out_dir, "ref_" + tag + ".vtk"), mesh,
                 fol::solution_vtk_fields(ref, &E));
  fol::SolutionField diff;
  diff.mesh = &mesh;
  diff.u = (pred.u - ref.u).cwiseAbs();
  if (pred.stress.size() > 0 && pred.stress.rows() == ref.stress.rows())
    diff.stress = (pred.stress - ref.stress).cwiseAbs();
  fol::write_vtk(join(args.out_dir, "diff_" + tag + ".vtk"), mesh,
                 fol::solution_vtk_fields(diff, nullptr));
}

int cmd_evaluate(const CommonArgs& args) {
  json config = load_config(args.config_path);
  fol::require_keys_subset(
      config, {"mesh", "bcs", "material", "checkpoint", "inputs", "solver", "eval_grid", "vtk"},
      "evaluate config");
  if (!config.contains("checkpoint"))
    throw std::invalid_argument("evaluate: missing 'checkpoint' path");
  if (!config.contains("inputs")) throw std::invalid_argument("evaluate: missing 'inputs' path");
  fol::Mesh mesh = mesh_from_json(config.at("mesh"));
  fol::SolveOptions options = solver_from_json(config);
  int eval_grid = config.value("eval_grid", 0);
  bool vtk = config.value("vtk", false);
  fol::SampleSet inputs = fol::read_sample_csv(config.at("inputs").get<std::string>());

  std::string checkpoint_path = config.at("checkpoint").get<std::string>();
  json header = json::parse(fol::read_text_file(checkpoint_path));
  std::string kind = header.is_object() ? header.value("kind", "") : "";

  prepare_out(args);
  std::string summary = "id,component,unit,err_mse,err_max,homogenized_rel,homogenized_absolute\n";
  auto append_summary = [&](std::uint64_t id, const fol::ErrorReport& report) {
    for (std::size_t c = 0; c < report.components.size(); ++c)
      summary += id_hex(id) + "," + report.components[c] + "," + report.units[c] + "," +
                 fol::format_double(report.err_mse[c]) + "," +
                 fol::format_double(report.err_max[c]) + "," +
                 fol::format_double(report.homogenized_rel[c]) + "," +
                 (report.homogenized_absolute[c] ? "1" : "0") + "\n";
  };

  if (kind == "fol") {
    fol::FolTrainer trainer = fol::load_fol_checkpoint(checkpoint_path, mesh);
    for (std::size_t s = 0; s < inputs.inputs.size(); ++s) {
      fol::SolutionField pred = fol::predict(trainer.model, inputs.inputs[s]);
      Eigen::VectorXd E = fol::nodal_modulus(trainer.model, inputs.inputs[s]);
      fol::ElasticityField field{&mesh, E, trainer.model.config.nu};
      fol::SolutionField ref = fol::solve_reference(mesh, trainer.model.dof_map, field, options);
      fol::ErrorReport report = eval_grid > 0
                                    ? fol::compare_fields_resampled(pred, ref, eval_grid)
                                    : fol::compare_fields(pred, ref);
      std::printf("sample %s\n%s", id_hex(inputs.ids[s]).c_str(), report.to_text().c_str());
      append_summary(inputs.ids[s], report);
      write_eval_outputs(args, mesh, inputs.ids[s], pred, ref, E, report, vtk);
    }
  } else if (kind == "deeponet") {
    fol::DeepONetTrainer trainer = fol::load_deeponet_checkpoint(checkpoint_path);
    fol::DofMap dof_map = fol::build_dof_map(mesh, bcs_from_json(config));
    double nu = nu_from_json(config);
    for (std::size_t s = 0; s < inputs.inputs.size(); ++s) {
      if (inputs.inputs[s].size() != mesh.n_nodes())
        throw std::invalid_argument("evaluate: deeponet inputs must be nodal modulus samples");
      fol::ElasticityField field{&mesh, inputs.inputs[s], nu};
      fol::SolutionField pred;
      pred.mesh = &mesh;
      pred.u = fol::deeponet_predict(trainer.params, inputs.inputs[s], mesh);
      pred.stress = fol::recover_stress(mesh, field, pred.u);
      fol::SolutionField ref = fol::solve_reference(mesh, dof_map, field, options);
      fol::ErrorReport report = eval_grid > 0
                                    ? fol::compare_fields_resampled(pred, ref, eval_grid)
                                    : fol::compare_fields(pred, ref);
      std::printf("sample %s\n%s", id_hex(inputs.ids[s]).c_str(), report.to_text().c_str());
      append_summary(inputs.ids[s], report);
      write_eval_outputs(args, mesh, inputs.ids[s], pred, ref, field.E, report, vtk);
    }
  } else {
    throw std::runtime_error("evaluate: unrecognized checkpoint kind '" + kind + "'");
  }

  fol::write_text_file(join(args.out_dir, "errors.csv"), summary);
  fol::write_manifest(join(args.out_dir, "manifest.json"), "evaluate", config);
  std::printf("evaluate: %d samples compared\n", static_cast<int>(inputs.inputs.size()));
  return 0;
}

// ---- export ---------------------------------------------------------------

int cmd_export(const CommonArgs& args) {
  json config = load_config(args.config_path);
  fol::require_keys_subset(config, {"mesh", "samples", "fourier"}, "export config");
  fol::Mesh mesh = mesh_from_json(config.at("mesh"));
  if (!config.contains("samples")) throw std::invalid_argument("export: missing 'samples' path");
  fol::SampleSet set = fol::read_sample_csv(config.at("samples").get<std::string>());
  fol::FourierSpec spec;
  bool has_fourier = config.contains("fourier");
  if (has_fourier) spec = fol::fourier_spec_from_json(config.at("fourier"));

  prepare_out(args);
  for (std::size_t s = 0; s < set.inputs.size(); ++s) {
    Eigen::VectorXd E;
    if (set.inputs[s].size() == mesh.n_nodes()) {
      E = set.inputs[s];
    } else if (has_fourier && set.inputs[s].size() == spec.n_terms()) {
      fol::FourierSpec with_coeffs = spec;
      with_coeffs.coeffs = set.inputs[s];
      E = fol::fourier_field(with_coeffs, mesh, 0.3).E;
    } else {
      throw std::invalid_argument(
          "export: sample length matches neither the mesh nor the fourier layout");
    }
    fol::write_vtk(join(args.out_dir, "field_" + id_hex(set.ids[s]) + ".vtk"), mesh,
                   {{"E", E}});
  }
  fol::write_manifest(join(args.out_dir, "manifest.json"), "export", config);
  std::printf("export: wrote %d fields to %s\n", static_cast<int>(set.inputs.size()),
              args.out_dir.c_str());
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs& a, bool with_seed) {
  cmd->add_option("--config", a.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out_dir, "output directory (default: out)");
  if (with_seed) a.seed_opt = cmd->add_option("--seed", a.seed, "override the config seed");
  a.threads_opt = cmd->add_option("--threads", a.threads, "cap worker threads")
                      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite operator learning toolkit"};
  app.require_subcommand(1);

  CommonArgs generate_args, solve_args, train_fol_args, train_deeponet_args, evaluate_args,
      export_args;
  int rc = 0;

  CLI::App* generate = app.add_subcommand("generate", "sample modulus fields or coefficients");
  add_common(generate, generate_args, true);
  generate->callback([&] { rc = cmd_generate(generate_args); });

  CLI::App* solve = app.add_subcommand("solve", "run the reference solver on a sample set");
  add_common(solve, solve_args, false);
  solve->callback([&] { rc = cmd_solve(solve_args); });

  CLI::App* train_fol = app.add_subcommand("train-fol", "train a physics-informed surrogate");
  add_common(train_fol, train_fol_args, true);
  train_fol->add_option("--resume", train_fol_args.resume, "checkpoint to continue from")
      ->check(CLI::ExistingFile);
  train_fol->callback([&] { rc = cmd_train_fol(train_fol_args); });

  CLI::App* train_deeponet =
      app.add_subcommand("train-deeponet", "train the data-driven baseline");
  add_common(train_deeponet, train_deeponet_args, true);
  train_deeponet->callback([&] { rc = cmd_train_deeponet(train_deeponet_args); });

  CLI::App* evaluate = app.add_subcommand("evaluate", "compare a checkpoint against the solver");
  add_common(evaluate, evaluate_args, false);
  evaluate->callback([&] { rc = cmd_evaluate(evaluate_args); });

  CLI::App* exporter = app.add_subcommand("export", "write modulus fields as VTK");
  add_common(exporter, export_args, false);
  exporter->callback([&] { rc = cmd_export(export_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fol: %s\n", e.what());
    return 1;
  }
  return rc;
}
