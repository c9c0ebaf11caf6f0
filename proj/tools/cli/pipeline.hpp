#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "config.hpp"
#include "soda/ingest.hpp"
#include "soda/mrf.hpp"
#include "soda/quantizer.hpp"
#include "soda/symbols.hpp"

namespace soda::cli {

struct InferResult {
  mrf::PictorialModel model{5, 1, 1.0, 1.0, true};
  std::optional<mrf::GammaFit> fit;  // absent when both gammas were given
  quant::Codebook codebook;
  std::vector<SymbolSequence> symbols;
  std::vector<std::vector<mrf::SampleSet>> samples;  // filled when requested
};

/// Detections to symbols: fit gammas (unless configured), Gibbs-sample every
/// frame, learn one codebook over all sequences, and encode. Every frame of
/// every sequence is sampled with the same seed, so realization j of one
/// frame is paired with realization j of every other.
InferResult infer(std::span<const ingest::DetectionSequence> sequences, const Config& config, std::size_t threads,
                  bool keep_samples = false);

/// Regular files in `dir` with extension `ext`, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& ext);

/// File-name-safe form of a sequence id.
std::string safe_name(const std::string& id);

}  // namespace soda::cli
