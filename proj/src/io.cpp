#include "fol/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fol/common.hpp"

namespace fol {

namespace {

constexpr int kCheckpointVersion = 1;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(const std::string& token, int line_no) {
  char* end = nullptr;
  double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0')
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + token + "'");
  return v;
}

std::uint64_t parse_id(const std::string& token, int line_no) {
  char* end = nullptr;
  std::uint64_t v = std::strtoull(token.c_str(), &end, 16);
  if (end == token.c_str() || *end != '\0')
    throw ParseError("line " + std::to_string(line_no) + ": bad id '" + token + "'");
  return v;
}

std::string id_hex(std::uint64_t id) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(id));
  return std::string(buf);
}

// ---- Mlp / Adam <-> JSON ----

nlohmann::json matrix_rowmajor(const Eigen::MatrixXd& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

Eigen::MatrixXd matrix_from_rowmajor(const nlohmann::json& arr, Eigen::Index rows,
                                     Eigen::Index cols) {
  if (static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw std::runtime_error("checkpoint: matrix size mismatch");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[i++].get<double>();
  return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json j;
  j["layer_sizes"] = net.layer_sizes;
  j["hidden_activation"] = to_string(net.hidden_activation);
  j["output_activation"] = to_string(net.output_activation);
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (int l = 0; l < net.n_layers(); ++l) {
    weights.push_back(matrix_rowmajor(net.W[l]));
    biases.push_back(vector_json(net.b[l]));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net;
  net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  net.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
  net.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  int n_layers = static_cast<int>(net.layer_sizes.size()) - 1;
  net.W.resize(n_layers);
  net.b.resize(n_layers);
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (static_cast<int>(weights.size()) != n_layers || static_cast<int>(biases.size()) != n_layers)
    throw std::runtime_error("checkpoint: layer count mismatch");
  for (int l = 0; l < n_layers; ++l) {
    net.W[l] = matrix_from_rowmajor(weights[l], net.layer_sizes[l + 1], net.layer_sizes[l]);
    net.b[l] = vector_from_json(biases[l]);
    if (net.b[l].size() != net.layer_sizes[l + 1])
      throw std::runtime_error("checkpoint: bias size mismatch");
  }
  return net;
}

nlohmann::json adam_to_json(const AdamState& state) {
  nlohmann::json j;
  j["step"] = state.step;
  j["beta1"] = state.beta1;
  j["beta2"] = state.beta2;
  j["eps"] = state.eps;
  nlohmann::json mw = nlohmann::json::array(), vw = nlohmann::json::array();
  nlohmann::json mb = nlohmann::json::array(), vb = nlohmann::json::array();
  for (std::size_t l = 0; l < state.mW.size(); ++l) {
    mw.push_back(matrix_rowmajor(state.mW[l]));
    vw.push_back(matrix_rowmajor(state.vW[l]));
    mb.push_back(vector_json(state.mb[l]));
    vb.push_back(vector_json(state.vb[l]));
  }
  j["mW"] = std::move(mw);
  j["vW"] = std::move(vw);
  j["mb"] = std::move(mb);
  j["vb"] = std::move(vb);
  return j;
}

AdamState adam_from_json(const nlohmann::json& j, const Mlp& like) {
  AdamState state;
  state.resize_like(like);
  state.step = j.at("step").get<std::int64_t>();
  state.beta1 = j.at("beta1").get<double>();
  state.beta2 = j.at("beta2").get<double>();
  state.eps = j.at("eps").get<double>();
  for (int l = 0; l < like.n_layers(); ++l) {
    state.mW[l] = matrix_from_rowmajor(j.at("mW")[l], like.W[l].rows(), like.W[l].cols());
    state.vW[l] = matrix_from_rowmajor(j.at("vW")[l], like.W[l].rows(), like.W[l].cols());
    state.mb[l] = vector_from_json(j.at("mb")[l]);
    state.vb[l] = vector_from_json(j.at("vb")[l]);
  }
  return state;
}

nlohmann::json checkpoint_header(const std::string& kind, const std::string& hash) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["kind"] = kind;
  j["config_hash"] = hash;
  return j;
}

void check_header(const nlohmann::json& j, const std::string& kind, const std::string& path) {
  if (!j.contains("version") || j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version");
  if (j.at("kind").get<std::string>() != kind)
    throw std::runtime_error(path + ": checkpoint kind is not '" + kind + "'");
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_sample_csv(const std::string& path, const SampleSet& set) {
  if (set.inputs.empty()) throw std::invalid_argument("write_sample_csv: empty set");
  bool nodal = !set.phase_fraction.empty();
  std::string text;
  text += "id";
  if (nodal) text += ",phase_fraction";
  int m = static_cast<int>(set.inputs[0].size());
  for (int j = 0; j < m; ++j) text += (nodal ? ",E_" : ",c_") + std::to_string(j);
  text += "\n";
  for (std::size_t s = 0; s < set.inputs.size(); ++s) {
    text += id_hex(set.ids[s]);
    if (nodal) text += "," + format_double(set.phase_fraction[s]);
    for (int j = 0; j < m; ++j) text += "," + format_double(set.inputs[s][j]);
    text += "\n";
  }
  write_text_file(path, text);
}

SampleSet read_sample_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "id") throw ParseError(path + ": missing id column");
  bool nodal = header.size() > 1 && header[1] == "phase_fraction";
  int m = static_cast<int>(header.size()) - (nodal ? 2 : 1);
  if (m < 1) throw ParseError(path + ": no value columns");
  SampleSet set;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> tokens = split_csv_line(line);
    if (static_cast<int>(tokens.size()) != static_cast<int>(header.size()))
      throw ParseError(path + ": line " + std::to_string(line_no) + ": wrong column count");
    set.ids.push_back(parse_id(tokens[0], line_no));
    int base = 1;
    if (nodal) {
      set.phase_fraction.push_back(parse_double(tokens[1], line_no));
      base = 2;
    }
    Eigen::VectorXd v(m);
    for (int j = 0; j < m; ++j) v[j] = parse_double(tokens[base + j], line_no);
    set.inputs.push_back(std::move(v));
  }
  if (set.inputs.empty()) throw ParseError(path + ": no samples");
  return set;
}

void write_fol_history_csv(const std::string& path, const std::vector<LossBreakdown>& history) {
  std::string text = "epoch,energy_term,dirichlet_term,total\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    text += std::to_string(e + 1) + "," + format_double(history[e].energy_term) + "," +
            format_double(history[e].dirichlet_term) + "," + format_double(history[e].total) +
            "\n";
  write_text_file(path, text);
}

void write_deeponet_history_csv(const std::string& path, const std::vector<double>& history) {
  std::string text = "epoch,mse\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    text += std::to_string(e + 1) + "," + format_double(history[e]) + "\n";
  write_text_file(path, text);
}

void write_solution_csv(const std::string& path, const SolutionField& solution) {
  const Mesh& mesh = *solution.mesh;
  int dpn = mesh.dofs_per_node();
  bool with_stress = solution.stress.rows() == mesh.n_nodes();
  std::string text = "node,x,y";
  if (mesh.dim == 3) text += ",z";
  text += dpn == 2 ? ",u,v" : ",u,v,w";
  if (with_stress) {
    if (mesh.dim == 2)
      text += ",sigma_xx,sigma_yy,sigma_xy";
    else
      text += ",sigma_xx,sigma_yy,sigma_zz,sigma_yz,sigma_xz,sigma_xy";
  }
  text += "\n";
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    text += std::to_string(i);
    for (int d = 0; d < mesh.dim; ++d) text += "," + format_double(mesh.nodes(i, d));
    for (int c = 0; c < dpn; ++c)
      text += "," + format_double(solution.u[DofMap::dof_index(i, c, dpn)]);
    if (with_stress)
      for (int c = 0; c < solution.stress.cols(); ++c)
        text += "," + format_double(solution.stress(i, c));
    text += "\n";
  }
  write_text_file(path, text);
}

void write_error_csv(const std::string& path, const ErrorReport& report) {
  std::string text = "component,unit,err_mse,err_max,homogenized_rel,homogenized_absolute\n";
  for (std::size_t c = 0; c < report.components.size(); ++c)
    text += report.components[c] + "," + report.units[c] + "," +
            format_double(report.err_mse[c]) + "," + format_double(report.err_max[c]) + "," +
            format_double(report.homogenized_rel[c]) + "," +
            (report.homogenized_absolute[c] ? "1" : "0") + "\n";
  write_text_file(path, text);
}

void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title) {
  std::string text = "# vtk DataFile Version 3.0\n" + title + "\nASCII\n";
  if (mesh.structured()) {
    text += "DATASET STRUCTURED_GRID\n";
    text += "DIMENSIONS " + std::to_string(mesh.grid_n) + " " + std::to_string(mesh.grid_n) +
            " 1\n";
  } else {
    text += "DATASET UNSTRUCTURED_GRID\n";
  }
  text += "POINTS " + std::to_string(mesh.n_nodes()) + " double\n";
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    text += format_double(mesh.nodes(i, 0)) + " " + format_double(mesh.nodes(i, 1)) + " " +
            (mesh.dim == 3 ? format_double(mesh.nodes(i, 2)) : "0") + "\n";
  }
  if (!mesh.structured()) {
    int nodes_per_cell = 4;
    text += "CELLS " + std::to_string(mesh.n_elements()) + " " +
            std::to_string(mesh.n_elements() * (nodes_per_cell + 1)) + "\n";
    for (int e = 0; e < mesh.n_elements(); ++e) {
      text += "4";
      for (int k = 0; k < nodes_per_cell; ++k) text += " " + std::to_string(mesh.elements(e, k));
      text += "\n";
    }
    text += "CELL_TYPES " + std::to_string(mesh.n_elements()) + "\n";
    std::string cell_type = mesh.kind == ElementKind::Tet4 ? "10\n" : "9\n";
    for (int e = 0; e < mesh.n_elements(); ++e) text += cell_type;
  }
  text += "POINT_DATA " + std::to_string(mesh.n_nodes()) + "\n";
  for (const VtkField& field : fields) {
    if (field.data.rows() != mesh.n_nodes())
      throw std::invalid_argument("write_vtk: field '" + field.name + "' has wrong row count");
    if (field.data.cols() == 1) {
      text += "SCALARS " + field.name + " double 1\nLOOKUP_TABLE default\n";
      for (int i = 0; i < mesh.n_nodes(); ++i) text += format_double(field.data(i, 0)) + "\n";
    } else if (field.data.cols() == 2 || field.data.cols() == 3) {
      text += "VECTORS " + field.name + " double\n";
      for (int i = 0; i < mesh.n_nodes(); ++i) {
        text += format_double(field.data(i, 0)) + " " + format_double(field.data(i, 1)) + " " +
                (field.data.cols() == 3 ? format_double(field.data(i, 2)) : "0") + "\n";
      }
    } else {
      throw std::invalid_argument("write_vtk: field '" + field.name + "' has unsupported width");
    }
  }
  write_text_file(path, text);
}

std::vector<VtkField> solution_vtk_fields(const SolutionField& solution,
                                          const Eigen::VectorXd* E) {
  const Mesh& mesh = *solution.mesh;
  int dpn = mesh.dofs_per_node();
  std::vector<VtkField> fields;
  Eigen::MatrixXd disp(mesh.n_nodes(), dpn);
  for (int i = 0; i < mesh.n_nodes(); ++i)
    for (int c = 0; c < dpn; ++c) disp(i, c) = solution.u[DofMap::dof_index(i, c, dpn)];
  fields.push_back({"displacement", disp});
  if (E) fields.push_back({"E", *E});
  if (solution.stress.rows() == mesh.n_nodes()) {
    std::vector<std::string> names =
        mesh.dim == 2
            ? std::vector<std::string>{"sigma_xx", "sigma_yy", "sigma_xy"}
            : std::vector<std::string>{"sigma_xx", "sigma_yy", "sigma_zz",
                                       "sigma_yz", "sigma_xz", "sigma_xy"};
    for (std::size_t c = 0; c < names.size() && c < static_cast<std::size_t>(solution.stress.cols());
         ++c)
      fields.push_back({names[c], solution.stress.col(static_cast<int>(c))});
  }
  return fields;
}

nlohmann::json fourier_spec_to_json(const FourierSpec& spec) {
  nlohmann::json j;
  j["fx"] = std::vector<double>(spec.fx.data(), spec.fx.data() + spec.fx.size());
  j["fy"] = std::vector<double>(spec.fy.data(), spec.fy.data() + spec.fy.size());
  j["fz"] = std::vector<double>(spec.fz.data(), spec.fz.data() + spec.fz.size());
  j["beta"] = spec.beta;
  j["E_min"] = spec.E_min;
  j["E_max"] = spec.E_max;
  j["full_layout"] = spec.full_layout;
  if (spec.coeffs.size() > 0) j["coeffs"] = vector_json(spec.coeffs);
  return j;
}

FourierSpec fourier_spec_from_json(const nlohmann::json& j) {
  require_keys_subset(j, {"fx", "fy", "fz", "beta", "E_min", "E_max", "full_layout", "coeffs"},
                      "fourier");
  FourierSpec spec;
  if (j.contains("fx")) spec.fx = vector_from_json(j.at("fx"));
  if (j.contains("fy")) spec.fy = vector_from_json(j.at("fy"));
  if (j.contains("fz")) spec.fz = vector_from_json(j.at("fz"));
  spec.beta = j.value("beta", spec.beta);
  spec.E_min = j.value("E_min", spec.E_min);
  spec.E_max = j.value("E_max", spec.E_max);
  spec.full_layout = j.value("full_layout", spec.full_layout);
  if (j.contains("coeffs")) spec.coeffs = vector_from_json(j.at("coeffs"));
  return spec;
}

nlohmann::json fol_config_to_json(const FolConfig& config) {
  nlohmann::json j;
  j["mode"] = to_string(config.mode);
  j["architecture"] = to_string(config.architecture);
  j["encoding"] = to_string(config.encoding);
  j["hidden"] = config.hidden;
  j["activation"] = to_string(config.activation);
  j["batch_size"] = config.batch_size;
  j["epochs"] = config.epochs;
  j["learning_rate"] = config.learning_rate;
  j["a_b"] = config.a_b;
  j["input_shift"] = config.input_shift;
  j["input_scale"] = config.input_scale;
  j["nu"] = config.nu;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  if (config.encoding == InputEncoding::FourierCoeffs)
    j["fourier"] = fourier_spec_to_json(config.fourier);
  return j;
}

FolConfig fol_config_from_json(const nlohmann::json& j) {
  require_keys_subset(j,
                      {"mode", "architecture", "encoding", "hidden", "activation", "batch_size",
                       "epochs", "learning_rate", "a_b", "input_shift", "input_scale", "nu",
                       "seed", "threads", "fourier"},
                      "fol config");
  FolConfig config;
  if (j.contains("mode")) config.mode = bc_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("architecture"))
    config.architecture = fol_arch_from_string(j.at("architecture").get<std::string>());
  if (j.contains("encoding"))
    config.encoding = input_encoding_from_string(j.at("encoding").get<std::string>());
  if (j.contains("hidden")) config.hidden = j.at("hidden").get<std::vector<int>>();
  if (j.contains("activation"))
    config.activation = activation_from_string(j.at("activation").get<std::string>());
  config.batch_size = j.value("batch_size", config.batch_size);
  config.epochs = j.value("epochs", config.epochs);
  config.learning_rate = j.value("learning_rate", config.learning_rate);
  config.a_b = j.value("a_b", config.a_b);
  config.input_shift = j.value("input_shift", config.input_shift);
  config.input_scale = j.value("input_scale", config.input_scale);
  config.nu = j.value("nu", config.nu);
  config.seed = j.value("seed", config.seed);
  config.threads = j.value("threads", config.threads);
  if (j.contains("fourier")) config.fourier = fourier_spec_from_json(j.at("fourier"));
  return config;
}

nlohmann::json deeponet_config_to_json(const DeepONetConfig& config) {
  nlohmann::json j;
  j["branch_hidden"] = config.branch_hidden;
  j["trunk_hidden"] = config.trunk_hidden;
  j["p"] = config.p;
  j["activation"] = to_string(config.activation);
  j["batch_size"] = config.batch_size;
  j["epochs"] = config.epochs;
  j["learning_rate"] = config.learning_rate;
  j["seed"] = config.seed;
  return j;
}

DeepONetConfig deeponet_config_from_json(const nlohmann::json& j) {
  require_keys_subset(j,
                      {"branch_hidden", "trunk_hidden", "p", "activation", "batch_size", "epochs",
                       "learning_rate", "seed"},
                      "deeponet config");
  DeepONetConfig config;
  if (j.contains("branch_hidden"))
    config.branch_hidden = j.at("branch_hidden").get<std::vector<int>>();
  if (j.contains("trunk_hidden"))
    config.trunk_hidden = j.at("trunk_hidden").get<std::vector<int>>();
  config.p = j.value("p", config.p);
  if (j.contains("activation"))
    config.activation = activation_from_string(j.at("activation").get<std::string>());
  config.batch_size = j.value("batch_size", config.batch_size);
  config.epochs = j.value("epochs", config.epochs);
  config.learning_rate = j.value("learning_rate", config.learning_rate);
  config.seed = j.value("seed", config.seed);
  return config;
}

std::string config_hash(const nlohmann::json& config) { return fnv1a_hex(config.dump()); }

void require_keys_subset(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                         const std::string& context) {
  if (!obj.is_object()) throw std::runtime_error(context + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw std::runtime_error(context + ": unknown key '" + it.key() + "'");
  }
}

void save_fol_checkpoint(const std::string& path, const FolTrainer& trainer,
                         const std::string& hash) {
  const FolModel& model = trainer.model;
  nlohmann::json j = checkpoint_header("fol", hash);
  j["config"] = fol_config_to_json(model.config);
  nlohmann::json mesh_j;
  mesh_j["dim"] = model.mesh->dim;
  mesh_j["grid_n"] = model.mesh->grid_n;
  mesh_j["side_length"] = model.mesh->side_length;
  mesh_j["n_nodes"] = model.mesh->n_nodes();
  j["mesh"] = mesh_j;
  nlohmann::json prescribed = nlohmann::json::array();
  for (const auto& [dof, value] : model.dof_map.prescribed)
    prescribed.push_back(nlohmann::json::array({dof, value}));
  j["prescribed"] = std::move(prescribed);
  j["epochs_done"] = trainer.epochs_done;
  nlohmann::json history = nlohmann::json::array();
  for (const LossBreakdown& lb : trainer.history)
    history.push_back(nlohmann::json::array({lb.energy_term, lb.dirichlet_term, lb.total}));
  j["history"] = std::move(history);
  nlohmann::json nets = nlohmann::json::array();
  if (model.config.architecture == FolArch::SingleNet) {
    nets.push_back(mlp_to_json(model.net));
  } else {
    for (const Mlp& net : model.bank.subnets) nets.push_back(mlp_to_json(net));
  }
  j["nets"] = std::move(nets);
  nlohmann::json opt = nlohmann::json::array();
  for (const AdamState& state : trainer.opt) opt.push_back(adam_to_json(state));
  j["opt"] = std::move(opt);
  write_text_file(path, j.dump(1) + "\n");
}

FolTrainer load_fol_checkpoint(const std::string& path, const Mesh& mesh, std::string* hash) {
  nlohmann::json j = load_json_file(path);
  check_header(j, "fol", path);
  if (hash) *hash = j.at("config_hash").get<std::string>();

  const auto& mesh_j = j.at("mesh");
  if (mesh_j.at("dim").get<int>() != mesh.dim ||
      mesh_j.at("n_nodes").get<int>() != mesh.n_nodes() ||
      mesh_j.at("grid_n").get<int>() != mesh.grid_n)
    throw std::runtime_error(path + ": checkpoint mesh does not match the provided mesh");

  FolTrainer trainer;
  FolModel& model = trainer.model;
  model.config = fol_config_from_json(j.at("config"));
  model.mesh = &mesh;
  model.dof_map.n_nodes = mesh.n_nodes();
  model.dof_map.dofs_per_node = mesh.dofs_per_node();
  for (const auto& entry : j.at("prescribed"))
    model.dof_map.prescribed[entry[0].get<int>()] = entry[1].get<double>();
  model.dof_map.free_dofs.clear();
  for (int dof = 0; dof < model.dof_map.n_dofs(); ++dof)
    if (!model.dof_map.prescribed.count(dof)) model.dof_map.free_dofs.push_back(dof);
  model.output_dofs = fol_output_dofs(model.dof_map, model.config.mode);

  const auto& nets = j.at("nets");
  if (model.config.architecture == FolArch::SingleNet) {
    if (nets.size() != 1) throw std::runtime_error(path + ": expected one net");
    model.net = mlp_from_json(nets[0]);
  } else {
    if (static_cast<int>(nets.size()) != model.output_size())
      throw std::runtime_error(path + ": subnet count does not match output DOFs");
    model.bank.subnets.clear();
    for (const auto& net_j : nets) model.bank.subnets.push_back(mlp_from_json(net_j));
  }

  const auto& opt = j.at("opt");
  if (opt.size() != nets.size()) throw std::runtime_error(path + ": optimizer count mismatch");
  trainer.opt.clear();
  for (std::size_t k = 0; k < opt.size(); ++k) {
    const Mlp& like = model.config.architecture == FolArch::SingleNet
                          ? model.net
                          : model.bank.subnets[k];
    trainer.opt.push_back(adam_from_json(opt[k], like));
  }

  trainer.epochs_done = j.at("epochs_done").get<int>();
  for (const auto& entry : j.at("history")) {
    LossBreakdown lb;
    lb.energy_term = entry[0].get<double>();
    lb.dirichlet_term = entry[1].get<double>();
    lb.total = entry[2].get<double>();
    trainer.history.push_back(lb);
  }
  return trainer;
}

void save_deeponet_checkpoint(const std::string& path, const DeepONetTrainer& trainer,
                              const std::string& hash) {
  nlohmann::json j = checkpoint_header("deeponet", hash);
  j["config"] = deeponet_config_to_json(trainer.config);
  j["branch"] = mlp_to_json(trainer.params.branch);
  j["trunk"] = mlp_to_json(trainer.params.trunk);
  j["opt_branch"] = adam_to_json(trainer.opt_branch);
  j["opt_trunk"] = adam_to_json(trainer.opt_trunk);
  j["epochs_done"] = trainer.epochs_done;
  j["history"] = trainer.history;
  write_text_file(path, j.dump(1) + "\n");
}

DeepONetTrainer load_deeponet_checkpoint(const std::string& path, std::string* hash) {
  nlohmann::json j = load_json_file(path);
  check_header(j, "deeponet", path);
  if (hash) *hash = j.at("config_hash").get<std::string>();
  DeepONetTrainer trainer;
  trainer.config = deeponet_config_from_json(j.at("config"));
  trainer.params.branch = mlp_from_json(j.at("branch"));
  trainer.params.trunk = mlp_from_json(j.at("trunk"));
  trainer.params.p = trainer.config.p;
  trainer.opt_branch = adam_from_json(j.at("opt_branch"), trainer.params.branch);
  trainer.opt_trunk = adam_from_json(j.at("opt_trunk"), trainer.params.trunk);
  trainer.epochs_done = j.at("epochs_done").get<int>();
  trainer.history = j.at("history").get<std::vector<double>>();
  return trainer;
}

void write_manifest(const std::string& path, const std::string& command,
                    const nlohmann::json& resolved_config) {
  nlohmann::json j;
  j["version"] = 1;
  j["command"] = command;
  j["config"] = resolved_config;
  j["config_hash"] = config_hash(resolved_config);
  write_text_file(path, j.dump(1) + "\n");
}

}  // namespace fol
