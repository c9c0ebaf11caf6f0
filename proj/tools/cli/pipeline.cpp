#include "pipeline.hpp"

#include <algorithm>

#include "soda/error.hpp"
#include "soda/parallel.hpp"
#include "soda/random.hpp"

namespace soda::cli {

namespace {

constexpr std::uint64_t kGibbsStream = 0x6166;
constexpr std::uint64_t kCodebookStream = 0xc0de;
constexpr std::uint64_t kFitStream = 0xf17;

}  // namespace

InferResult infer(std::span<const ingest::DetectionSequence> sequences, const Config& config, std::size_t threads,
                  bool keep_samples) {
  config.validate();
  if (sequences.empty()) throw Error(ErrorCode::EmptyInput, "no detection sequences to infer from");
  for (const auto& s : sequences) {
    if (s.frames.empty()) throw Error(ErrorCode::EmptySequence, s.sequence_id + ": no frames");
    if (s.model_arity != config.arity)
      throw Error(ErrorCode::DimensionMismatch, s.sequence_id + ": detections use the " +
                                                    std::to_string(s.model_arity) + "-part model, config asks for " +
                                                    std::to_string(config.arity));
  }
  const std::size_t persons = config.persons != 0 ? config.persons : sequences.front().frames.front().persons.size();
  const CounterRng master(config.seed);

  InferResult r;
  const mrf::PictorialModel tmpl(config.arity, persons, config.gamma1.value_or(1.0), config.gamma2.value_or(1.0),
                                 config.interaction);
  if (config.gamma1 && config.gamma2) {
    r.model = tmpl;
  } else {
    mrf::FitOptions fo;
    fo.seed = master.split(kFitStream).key();
    auto fit = mrf::fit_gammas(sequences, tmpl, fo);
    r.model = tmpl.with_gammas(config.gamma1.value_or(fit.gamma1), config.gamma2.value_or(fit.gamma2));
    r.fit = fit;
  }

  // Flat (sequence, frame) work list.
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t s = 0; s < sequences.size(); ++s)
    for (std::size_t f = 0; f < sequences[s].frames.size(); ++f) work.emplace_back(s, f);

  const mrf::GibbsOptions go{config.gibbs_burnin, config.gibbs_samples};
  const std::uint64_t gibbs_seed = master.split(kGibbsStream).key();
  std::vector<mrf::SampleSet> flat(work.size());
  parallel_for(work.size(), static_cast<unsigned>(threads), [&](std::size_t w) {
    const auto& seq = sequences[work[w].first];
    const auto& frame = seq.frames[work[w].second];
    try {
      flat[w] = mrf::gibbs_sample(r.model, frame, go, gibbs_seed);
    } catch (const Error& e) {
      throw Error(e.code(), seq.sequence_id + " frame " + std::to_string(frame.frame_index) + ": " + e.what());
    }
  });

  std::vector<quant::FrameSamples> fs;
  fs.reserve(work.size());
  for (std::size_t w = 0; w < work.size(); ++w)
    fs.push_back({&flat[w], &sequences[work[w].first].frames[work[w].second], &sequences[work[w].first].grid});
  r.codebook = quant::learn_codebook(fs, r.model, sequences.front().grid, config.p, master.split(kCodebookStream).key());

  r.symbols.resize(sequences.size());
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    r.symbols[s] = SymbolSequence(sequences[s].sequence_id, config.p, config.gibbs_samples, sequences[s].frames.size());
    r.symbols[s].set_label(sequences[s].label);
  }
  parallel_for(work.size(), static_cast<unsigned>(threads), [&](std::size_t w) {
    const auto& seq = sequences[work[w].first];
    const auto row = quant::encode(r.codebook, r.model, flat[w], seq.frames[work[w].second], seq.grid);
    auto dst = r.symbols[work[w].first].row(work[w].second);
    std::copy(row.begin(), row.end(), dst.begin());
  });

  if (keep_samples) {
    r.samples.resize(sequences.size());
    for (std::size_t w = 0; w < work.size(); ++w) r.samples[work[w].first].push_back(std::move(flat[w]));
  }
  return r;
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& ext) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoFailure, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string safe_name(const std::string& id) {
  std::string s = id;
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  if (s.empty() || s == "." || s == "..") s = "_" + s;
  return s;
}

}  // namespace soda::cli
