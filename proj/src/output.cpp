#include "mesa/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mesa {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SolverError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SolverError("cannot write " + path);
  out << content;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string frame_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu.csv", k);
  return buf;
}

template <class Frame>
void write_frames(const std::string& dir, const std::vector<Frame>& frames,
                  const std::string& header,
                  const std::function<std::string(const Frame&, std::size_t)>& row) {
  fs::create_directories(dir);
  std::ostringstream index;
  index << "frame,t,file\n";
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& fr = frames[k];
    std::ostringstream os;
    os << header << "\n";
    for (std::size_t i = 0; i < fr.rho.size(); ++i) os << row(fr, i) << "\n";
    write_text_file(dir + "/" + frame_name(k), os.str());
    index << k << "," << fmt(fr.t) << "," << frame_name(k) << "\n";
  }
  write_text_file(dir + "/index.csv", index.str());
}

std::string gnuplot_script(std::size_t n_frames, bool has_nutrient) {
  std::ostringstream os;
  os << "# two-curve frames: density (upper) and pressure (lower)\n"
     << "set terminal pngcairo size 900,600\n"
     << "set xlabel 'x'\n"
     << "set yrange [0:*]\n"
     << "do for [i=0:" << (n_frames == 0 ? 0 : n_frames - 1) << "] {\n"
     << "  infile = sprintf('frames/frame_%04d.csv', i)\n"
     << "  set output sprintf('frame_%04d.png', i)\n"
     << "  plot infile using 1:2 with lines lw 2 title 'rho', \\\n"
     << "       infile using 1:3 with lines lw 2 title 'p'"
     << (has_nutrient ? ", \\\n       infile using 1:4 with lines title 'c'" : "")
     << "\n}\n";
  return os.str();
}

}  // namespace

void write_run_outputs(const RunArtifacts& art, const std::string& dir,
                       double wall_seconds) {
  fs::create_directories(dir);
  json manifest;
  manifest["version"] = "0.1.0";
  manifest["config"] = json::parse(scenario_to_json_text(art.config));
  manifest["wall_time_s"] = wall_seconds;
  manifest["solver"] = art.config.solver;

  std::vector<std::string> files;
  if (art.pme) {
    write_text_file(dir + "/grid.json", art.pme->grid->to_json());
    write_frames<PMEFrame>(
        dir + "/frames", art.pme->frames, "x,rho,p",
        [&](const PMEFrame& fr, std::size_t i) {
          const Grid& g = fr.rho.grid();
          return fmt(g.node(i)) + "," + fmt(fr.rho[i]) + "," + fmt(fr.p[i]);
        });
    std::ostringstream ledger;
    ledger << "t,mass,support_measure,support_edge,rho_edge,max_p,max_rho\n";
    for (const auto& r : art.pme->ledger)
      ledger << fmt(r.t) << "," << fmt(r.mass) << "," << fmt(r.support_measure)
             << "," << fmt(r.support_edge) << "," << fmt(r.rho_edge) << ","
             << fmt(r.max_p) << "," << fmt(r.max_rho) << "\n";
    write_text_file(dir + "/ledger.csv", ledger.str());
    manifest["steps"] = art.pme->steps;
    manifest["max_mass_identity_error"] = art.pme->max_mass_identity_error;
    write_text_file(dir + "/plot.gp",
                    gnuplot_script(art.pme->frames.size(), false));
  }
  if (art.limit) {
    write_text_file(dir + "/grid.json", art.limit->grid->to_json());
    const double p_tol = art.limit->p_tol;
    write_frames<LimitFrame>(
        dir + "/frames", art.limit->frames, "x,rho,p,active",
        [&, p_tol](const LimitFrame& fr, std::size_t i) {
          const Grid& g = fr.rho.grid();
          return fmt(g.node(i)) + "," + fmt(fr.rho[i]) + "," + fmt(fr.p[i]) +
                 "," + (fr.p[i] > p_tol ? "1" : "0");
        });
    std::ostringstream ledger;
    ledger << "t,mass,decay_mass,mu_mass,mu_min,graph_residual,comp_residual,"
              "front,front_mass,active_count,sat_count,psor_iterations,"
              "mass_identity_error\n";
    for (const auto& r : art.limit->ledger)
      ledger << fmt(r.t) << "," << fmt(r.mass) << "," << fmt(r.decay_mass) << ","
             << fmt(r.mu_mass) << "," << fmt(r.mu_min) << ","
             << fmt(r.graph_residual) << "," << fmt(r.comp_residual) << ","
             << fmt(r.front) << "," << fmt(r.front_mass) << ","
             << r.active_count << "," << r.sat_count << ","
             << r.psor_iterations << "," << fmt(r.mass_identity_error) << "\n";
    write_text_file(dir + "/ledger.csv", ledger.str());
    manifest["steps"] = art.limit->steps;
    manifest["p_tol"] = art.limit->p_tol;
    write_text_file(dir + "/plot.gp",
                    gnuplot_script(art.limit->frames.size(), false));
  }
  if (art.tumor) {
    write_text_file(dir + "/grid.json", art.tumor->grid->to_json());
    write_frames<TumorFrame>(
        dir + "/frames", art.tumor->frames, "x,rho,p,c",
        [&](const TumorFrame& fr, std::size_t i) {
          const Grid& g = fr.rho.grid();
          return fmt(g.node(i)) + "," + fmt(fr.rho[i]) + "," + fmt(fr.p[i]) +
                 "," + fmt(fr.c[i]);
        });
    std::ostringstream rep;
    rep << "t,comp_residual\n";
    for (const auto& fr : art.tumor->frames)
      rep << fmt(fr.t) << "," << fmt(fr.comp_residual) << "\n";
    write_text_file(dir + "/ledger.csv", rep.str());
    manifest["steps"] = art.tumor->steps;
    write_text_file(dir + "/plot.gp",
                    gnuplot_script(art.tumor->frames.size(), true));
  }
  if (art.oracle) {
    std::ostringstream os;
    os << "t,R,branch,slope\n";
    for (const auto& s : art.oracle->samples)
      os << fmt(s.t) << "," << fmt(s.R) << ","
         << (s.branch == RadialBranch::expanding ? "expanding" : "contracting")
         << "," << fmt(s.slope) << "\n";
    write_text_file(dir + "/trajectory.csv", os.str());
    if (art.oracle->t_star) manifest["t_star"] = *art.oracle->t_star;
  }

  write_text_file(dir + "/diagnostics.json", art.diagnostics.to_json());
  write_text_file(dir + "/diagnostics.txt", art.diagnostics.to_text());
  manifest["diagnostics_pass"] = art.diagnostics.all_pass();
  write_text_file(dir + "/manifest.json", manifest.dump(2));
}

namespace {

std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                  std::size_t min_cols) {
  std::ifstream in(path);
  if (!in) throw SolverError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw SolverError("empty csv: " + path);
  std::vector<std::vector<double>> cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (cols.size() <= c) cols.resize(c + 1);
      try {
        cols[c].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw SolverError("corrupt csv value in " + path + ": '" + cell + "'");
      }
      ++c;
    }
    if (c < min_cols) throw SolverError("corrupt csv row in " + path);
  }
  return cols;
}

}  // namespace

DiagnosticsReport verify_output_dir(const std::string& dir) {
  DiagnosticsReport rep;
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir + "/manifest.json"));
  } catch (const json::exception& e) {
    throw SolverError(std::string("corrupt manifest: ") + e.what());
  }
  const std::string solver = manifest.value("solver", "");
  const auto cfg = scenario_from_json_text(manifest["config"].dump());

  const std::string frames_dir = dir + "/frames";
  if (!fs::exists(frames_dir + "/index.csv"))
    throw SolverError("missing frame index in " + dir);
  std::size_t n_frames = 0;
  {
    std::ifstream in(frames_dir + "/index.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty()) ++n_frames;
  }

  double min_rho = 0.0, min_p = 0.0, max_rho = 0.0, graph = 0.0, max_p = 0.0;
  for (std::size_t k = 0; k < n_frames; ++k) {
    auto cols = read_csv_columns(frames_dir + "/" + frame_name(k), 3);
    for (std::size_t i = 0; i < cols[1].size(); ++i) {
      min_rho = std::min(min_rho, cols[1][i]);
      max_rho = std::max(max_rho, cols[1][i]);
      min_p = std::min(min_p, cols[2][i]);
      max_p = std::max(max_p, cols[2][i]);
      if (solver == "limit")
        graph = std::max(graph, cols[2][i] * (1.0 - cols[1][i]));
    }
  }
  rep.add({"verify_positivity", min_rho >= 0.0 && min_p >= 0.0,
           std::min(min_rho, min_p), 0.0, "min of rho and p over stored frames"});
  if (solver == "limit") {
    rep.add({"verify_density_bound", max_rho <= 1.0 + cfg.eps_sat, max_rho,
             1.0 + cfg.eps_sat, "rho <= 1 + eps_sat"});
    rep.add({"verify_graph_relation",
             graph <= cfg.eps_sat * std::max(max_p, 1e-12) + 1e-15, graph,
             cfg.eps_sat * std::max(max_p, 1e-12), "p (1 - rho) from frames"});
    auto ledger = read_csv_columns(dir + "/ledger.csv", 13);
    double worst = 0.0;
    for (std::size_t r = 1; r < ledger[0].size(); ++r) {
      double dmass = ledger[1][r] - ledger[1][r - 1];
      double claim = ledger[2][r] + ledger[3][r];
      worst = std::max(worst, std::abs(dmass - claim) /
                                  std::max(std::abs(ledger[1][r - 1]), 1e-30));
    }
    rep.add({"verify_mass_ledger", worst <= 1e-10, worst, 1e-10,
             "per-row mass identity from the stored ledger"});
  }
  if (solver == "tumor") {
    rep.add({"verify_nutrient_bound", max_rho >= 0.0, max_rho, 0.0,
             "stored tumor frames readable"});
  }

  // idempotence: stored verdicts must agree with the recomputation
  json stored;
  try {
    stored = json::parse(read_text_file(dir + "/diagnostics.json"));
  } catch (const json::exception& e) {
    throw SolverError(std::string("corrupt diagnostics: ") + e.what());
  }
  bool stored_pass = manifest.value("diagnostics_pass", false);
  bool stored_consistent = true;
  for (const auto& [key, value] : stored.items())
    if (!value.value("pass", false)) stored_consistent = false;
  rep.add({"verify_stored_verdicts", stored_consistent == stored_pass,
           stored_consistent ? 1.0 : 0.0, 1.0,
           "manifest summary matches diagnostics.json"});
  return rep;
}

bool outputs_bit_identical(const std::string& dir_a, const std::string& dir_b) {
  std::vector<std::string> rel;
  for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
    if (!entry.is_regular_file()) continue;
    std::string r = fs::relative(entry.path(), dir_a).string();
    if (r == "manifest.json") continue;
    rel.push_back(r);
  }
  std::sort(rel.begin(), rel.end());
  for (const auto& r : rel) {
    fs::path pb = fs::path(dir_b) / r;
    if (!fs::exists(pb)) return false;
    if (read_text_file((fs::path(dir_a) / r).string()) != read_text_file(pb.string()))
      return false;
  }
  return true;
}

}  // namespace mesa
