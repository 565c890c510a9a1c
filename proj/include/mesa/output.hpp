#pragma once

#include <string>

#include "mesa/scenario.hpp"

namespace mesa {

/// Writes the run artifacts under `dir`: grid.json, frames/, ledger.csv,
/// diagnostics.{json,txt}, plot.gp and manifest.json (config echo, version,
/// wall time, diagnostics summary). Paths are created as needed.
void write_run_outputs(const RunArtifacts& artifacts, const std::string& dir,
                       double wall_seconds);

/// Re-reads an output directory and re-runs the file-level diagnostics
/// (positivity, density bounds, graph relation, ledger identity), then checks
/// the stored verdicts match. Throws SolverError on unreadable or corrupt
/// files.
DiagnosticsReport verify_output_dir(const std::string& dir);

/// Byte-compares two output directories, ignoring manifest.json (it carries
/// the wall time). Returns true when every other file is identical.
bool outputs_bit_identical(const std::string& dir_a, const std::string& dir_b);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mesa
