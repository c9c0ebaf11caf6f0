#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace soda::cli {

struct RunOptions {
  Config config;
  std::filesystem::path out = ".";
  std::size_t threads = 0;  // 0: all hardware threads
};

/// detections dir (*.jsonl) -> symbols/<id>.sym, codebook.json, model.json.
void cmd_infer(const std::filesystem::path& detections, const RunOptions& run, bool save_samples = false);

/// Two symbol files -> surface.csv, peaks.json, bubble.svg.
void cmd_surface(const std::filesystem::path& x, const std::filesystem::path& y, const RunOptions& run);

/// Symbol dir (or an infer output dir) -> matrix.csv, forward.csv,
/// predictions.csv, report.json; interactions.csv when asked.
void cmd_classify(const std::filesystem::path& symbols, const RunOptions& run, std::size_t repeats = 1,
                  bool interactions = false);

enum class SynthMode { Pair, Corpus };

/// Coupling spec -> <id>.jsonl detection files, truth.json, spec.json.
void cmd_synth(const std::filesystem::path& spec, const RunOptions& run, SynthMode mode, std::size_t per_class,
               bool with_reversed);

/// Parses every detection file and prints one JSON line per file. Returns the
/// number of files that failed.
std::size_t cmd_validate(const std::vector<std::filesystem::path>& inputs, std::ostream& out);

}  // namespace soda::cli
