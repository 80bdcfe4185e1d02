#include "docrect/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace docrect {

namespace {

template <int Dim>
void write_obj(const std::filesystem::path& path, const QuadMesh<Dim>& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "# grid " << mesh.dims().n1 << ' ' << mesh.dims().n2 << '\n';
  for (const auto& p : mesh.vertices()) {
    if constexpr (Dim == 3)
      out << "v " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    else
      out << "v " << p[0] << ' ' << p[1] << " 0\n";
  }
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto q = mesh.dims().face_vertices(f);
    out << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
  }
}

void read_obj(const std::filesystem::path& path, GridDims& dims, std::vector<Vec3>& verts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  bool have_dims = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "#") {
      std::string word;
      if (ss >> word && word == "grid") {
        if (!(ss >> dims.n1 >> dims.n2)) throw Error(path.string() + ": bad grid comment");
        have_dims = true;
      }
    } else if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) throw Error(path.string() + ": bad vertex line");
      verts.push_back(p);
    }
  }
  if (!have_dims) throw Error(path.string() + ": missing `# grid n1 n2` comment");
}

}  // namespace

void save_obj(const std::filesystem::path& path, const SpaceMesh& mesh) { write_obj(path, mesh); }
void save_obj(const std::filesystem::path& path, const PlaneMesh& mesh) { write_obj(path, mesh); }

SpaceMesh load_space_obj(const std::filesystem::path& path) {
  GridDims d;
  std::vector<Vec3> v;
  read_obj(path, d, v);
  return SpaceMesh(d, std::move(v));
}

PlaneMesh load_plane_obj(const std::filesystem::path& path) {
  GridDims d;
  std::vector<Vec3> v;
  read_obj(path, d, v);
  std::vector<Vec2> p(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i].z() != 0.0) throw Error(path.string() + ": planar mesh has a nonzero z coordinate");
    p[i] = v[i].head<2>();
  }
  return PlaneMesh(d, std::move(p));
}

void write_diagnostics(std::ostream& out, const std::vector<DiagnosticRow>& rows) {
  out << "round,iter,F,F_start,E_iso,E_dist,E_fair_M,E_fair_Mp,E_line,E_ray,valid_points,lines,solver_steps,"
         "monotone,stop,wall_time\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.round << ',' << r.iter << ',' << r.f << ',' << r.f_start << ',' << r.iso << ',' << r.dist << ','
        << r.fair_space << ',' << r.fair_plane << ',' << r.line << ',' << r.ray << ',' << r.valid_points << ','
        << r.lines << ',' << r.solver_steps << ',' << (r.monotone ? 1 : 0) << ',' << r.stop << ','
        << std::setprecision(6) << r.wall_time << std::setprecision(17) << '\n';
  }
}

void save_diagnostics(const std::filesystem::path& path, const std::vector<DiagnosticRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_diagnostics(out, rows);
}

std::vector<DiagnosticRow> load_diagnostics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<DiagnosticRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 16) throw Error(path.string() + ": expected 16 columns");
    DiagnosticRow r;
    try {
      r.round = std::stoi(f[0]);
      r.iter = std::stoi(f[1]);
      r.f = std::stod(f[2]);
      r.f_start = std::stod(f[3]);
      r.iso = std::stod(f[4]);
      r.dist = std::stod(f[5]);
      r.fair_space = std::stod(f[6]);
      r.fair_plane = std::stod(f[7]);
      r.line = std::stod(f[8]);
      r.ray = std::stod(f[9]);
      r.valid_points = std::stoi(f[10]);
      r.lines = std::stoi(f[11]);
      r.solver_steps = std::stoi(f[12]);
      r.monotone = f[13] == "1";
      r.stop = f[14];
      r.wall_time = std::stod(f[15]);
    } catch (const std::exception&) {
      throw Error(path.string() + ": malformed row `" + line + "`");
    }
    rows.push_back(r);
  }
  return rows;
}

void save_mask(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (auto m : mask) out << (m ? 1 : 0) << '\n';
}

std::vector<std::uint8_t> load_mask(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  int v;
  while (in >> v) {
    if (v != 0 && v != 1) throw Error(path.string() + ": mask entries must be 0 or 1");
    out.push_back(static_cast<std::uint8_t>(v));
  }
  if (!in.eof()) throw Error(path.string() + ": malformed mask");
  return out;
}

void apply_config(std::istream& in, PipelineConfig& c, const std::string& origin) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key, tok;
    if (!(ss >> key)) continue;
    auto where = [&] { return origin + ":" + std::to_string(lineno) + ": "; };
    if (!(ss >> tok)) throw Error(where() + "missing value for `" + key + "`");
    double v = 0.0;
    try {
      size_t used = 0;
      v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(where() + "bad number `" + tok + "`");
    }
    auto as_int = [&]() {
      if (v != static_cast<int>(v)) throw Error(where() + "`" + key + "` needs an integer");
      return static_cast<int>(v);
    };
    if (key == "lambda_iso") c.weights.iso = v;
    else if (key == "lambda_dist") c.weights.dist = v;
    else if (key == "lambda_fair_space") c.weights.fair_space = v;
    else if (key == "lambda_fair_plane") c.weights.fair_plane = v;
    else if (key == "lambda_line") c.weights.line = v;
    else if (key == "lambda_ray") c.weights.ray = v;
    else if (key == "escalation") c.weights.escalation = v;
    else if (key == "epsilon") c.weights.epsilon = v;
    else if (key == "max_iterations") c.weights.max_iterations = as_int();
    else if (key == "rounds") c.weights.rounds = as_int();
    else if (key == "grid_n1") c.dims.n1 = as_int();
    else if (key == "grid_n2") c.dims.n2 = as_int();
    else if (key == "k") c.k = as_int();
    else if (key == "phi") c.phi = v;
    else if (key == "straightness_tol") c.straightness_tol = v;
    else if (key == "axis_tol_deg") c.axis_tol_deg = v;
    else if (key == "endpoint_factor") c.endpoint_factor = v;
    else if (key == "max_segment_points") c.max_segment_points = as_int();
    else if (key == "use_features") c.use_features = as_int() != 0;
    else if (key == "project_lines") c.project_lines = as_int() != 0;
    else if (key == "refine") c.refine = as_int() != 0;
    else if (key == "solver_steps") c.solver.max_iterations = as_int();
    else if (key == "solver_memory") c.solver.memory = as_int();
    else if (key == "solver_rel_tol") c.solver.rel_tol = v;
    else if (key == "divergence_limit") c.divergence_limit = as_int();
    else throw Error(where() + "unknown key `" + key + "`");
    if (ss >> tok) throw Error(where() + "trailing value `" + tok + "`");
  }
  c.validate();
}

void load_config(const std::filesystem::path& path, PipelineConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  apply_config(in, config, path.string());
}

}  // namespace docrect
