#include "commands.hpp"

#include <fstream>
#include <sstream>

#include "manifest.hpp"
#include "pipeline.hpp"
#include "soda/classifier.hpp"
#include "soda/error.hpp"
#include "soda/ingest.hpp"
#include "soda/localizer.hpp"
#include "soda/random.hpp"
#include "soda/synth.hpp"

namespace soda::cli {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return out;
}

void save_samples_jsonl(const std::vector<mrf::SampleSet>& sets, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& s : sets) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < s.size(); ++j) {
      const auto a = s.sample(j);
      rows.push_back(std::vector<std::uint32_t>(a.begin(), a.end()));
    }
    out << nlohmann::json{{"frame", s.frame_index()}, {"samples", std::move(rows)}}.dump() << '\n';
  }
}

// Directory holding .sym files: the argument itself or its symbols/ child.
fs::path symbol_dir(const fs::path& p) {
  if (fs::is_directory(p / "symbols") && list_files(p, ".sym").empty()) return p / "symbols";
  return p;
}

}  // namespace

void cmd_infer(const fs::path& detections, const RunOptions& run, bool save_samples) {
  run.config.validate();
  const auto files = fs::is_directory(detections) ? list_files(detections, ".jsonl") : std::vector<fs::path>{detections};
  if (files.empty()) throw Error(ErrorCode::EmptyInput, "no .jsonl detection files in " + detections.string());
  Manifest manifest("infer", run.config.to_json(), run.config.seed);
  std::vector<ingest::DetectionSequence> seqs;
  for (const auto& f : files) {
    seqs.push_back(ingest::load_detections(f));
    manifest.add_input(f);
  }

  const auto r = infer(seqs, run.config, run.threads, save_samples);
  ensure_dir(run.out / "symbols");
  for (const auto& s : r.symbols) {
    const fs::path rel = fs::path("symbols") / (safe_name(s.sequence_id()) + ".sym");
    ingest::save_symbols(s, run.out / rel);
    manifest.add_artifact(run.out, rel);
  }
  quant::save_codebook(r.codebook, run.out / "codebook.json");
  manifest.add_artifact(run.out, "codebook.json");

  nlohmann::ordered_json model;
  model["arity"] = r.model.arity();
  model["persons"] = r.model.persons();
  model["gamma1"] = r.model.gamma1();
  model["gamma2"] = r.model.gamma2();
  model["interaction"] = r.model.interaction_enabled();
  if (r.fit) {
    model["fit"] = {{"gamma1_degenerate", r.fit->gamma1_degenerate},
                    {"gamma2_degenerate", r.fit->gamma2_degenerate},
                    {"log_likelihood", r.fit->log_likelihood},
                    {"frames_used", r.fit->frames_used}};
  }
  open_out(run.out / "model.json") << model.dump(2) << '\n';
  manifest.add_artifact(run.out, "model.json");

  if (save_samples) {
    ensure_dir(run.out / "samples");
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const fs::path rel = fs::path("samples") / (safe_name(seqs[s].sequence_id) + ".jsonl");
      save_samples_jsonl(r.samples[s], run.out / rel);
      manifest.add_artifact(run.out, rel);
    }
  }
  manifest.summary()["sequences"] = seqs.size();
  manifest.summary()["gamma1"] = r.model.gamma1();
  manifest.summary()["gamma2"] = r.model.gamma2();
  manifest.write(run.out);
}

void cmd_surface(const fs::path& x_path, const fs::path& y_path, const RunOptions& run) {
  run.config.validate();
  const auto x = ingest::load_symbols(x_path);
  const auto y = ingest::load_symbols(y_path);
  if (x.alphabet() != y.alphabet() || x.realizations() != y.realizations())
    throw Error(ErrorCode::IncompatibleAlphabets, x_path.string() + " (p=" + std::to_string(x.alphabet()) +
                                                      ", n=" + std::to_string(x.realizations()) + ") vs " +
                                                      y_path.string() + " (p=" + std::to_string(y.alphabet()) +
                                                      ", n=" + std::to_string(y.realizations()) + ")");
  Manifest manifest("surface", run.config.to_json(), run.config.seed);
  manifest.add_input(x_path);
  manifest.add_input(y_path);

  loc::AnalysisOptions opt;
  opt.spec = run.config.surface_spec();
  opt.null_mode = run.config.null_model();
  opt.policy = run.config.lambda_policy();
  opt.top_n = run.config.top_n;
  opt.q = run.config.fdr;
  opt.method = run.config.method();
  opt.threads = run.threads;
  const auto a = loc::analyze_pair(x, y, opt, run.config.seed);

  ensure_dir(run.out);
  {
    auto out = open_out(run.out / "surface.csv");
    loc::write_surface_csv(out, a.surface);
  }
  {
    auto out = open_out(run.out / "peaks.json");
    loc::write_peaks_json(out, a.peaks);
  }
  {
    auto out = open_out(run.out / "bubble.svg");
    loc::write_bubble_svg(out, a.surface, a.peaks, {run.config.window, run.config.fdr, run.config.seed});
  }
  for (const char* f : {"surface.csv", "peaks.json", "bubble.svg"}) manifest.add_artifact(run.out, f);

  std::size_t significant = 0;
  for (const auto& p : a.peaks.peaks) significant += p.significant ? 1 : 0;
  manifest.summary()["mu"] = a.null.mu;
  manifest.summary()["sigma"] = a.null.sigma;
  manifest.summary()["degenerate_null"] = a.null.degenerate;
  manifest.summary()["max_stat"] = a.peaks.max_stat;
  manifest.summary()["max_stat_pval"] = a.max_stat_pval;
  manifest.summary()["candidate_peaks"] = a.peaks.candidates;
  manifest.summary()["significant_peaks"] = significant;
  manifest.write(run.out);
}

void cmd_classify(const fs::path& symbols, const RunOptions& run, std::size_t repeats, bool interactions) {
  run.config.validate();
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");
  const auto files = list_files(symbol_dir(symbols), ".sym");
  if (files.size() < 2) throw Error(ErrorCode::EmptyInput, "classification needs at least two symbol files");
  Manifest manifest("classify", run.config.to_json(), run.config.seed);
  std::vector<SymbolSequence> corpus;
  std::vector<std::string> labels, ids;
  for (const auto& f : files) {
    corpus.push_back(ingest::load_symbols(f));
    manifest.add_input(f);
    if (!corpus.back().label())
      throw Error(ErrorCode::InvalidArgument, f.string() + " has no label; classification needs labeled sequences");
    labels.push_back(*corpus.back().label());
    ids.push_back(corpus.back().sequence_id());
  }

  const auto matrix = cls::pairwise_matrix(corpus, run.config.order_k, run.config.lambda_policy(), run.threads);
  ensure_dir(run.out);

  const CounterRng master(run.config.seed);
  std::vector<double> accuracies;
  for (std::size_t r = 0; r < repeats; ++r) {
    const std::uint64_t split_seed = r == 0 ? run.config.seed : master.split(r).key();
    const auto sp = cls::split(labels, run.config.split_ratio, split_seed);
    std::vector<std::string> train_labels, truth;
    for (std::size_t i : sp.train) train_labels.push_back(labels[i]);
    for (std::size_t i : sp.test) truth.push_back(labels[i]);
    const auto preds = cls::nn_classify(matrix, sp.train, train_labels, sp.test, run.config.k_neighbors);
    const auto report = cls::evaluate(preds, truth, train_labels);
    accuracies.push_back(report.accuracy);
    if (r == 0) {
      {
        auto out = open_out(run.out / "predictions.csv");
        cls::write_predictions_csv(out, preds, ids, truth);
      }
      {
        auto out = open_out(run.out / "report.json");
        cls::write_report_json(out, report);
      }
    }
  }
  {
    auto out = open_out(run.out / "matrix.csv");
    cls::write_matrix_csv(out, matrix.ids, matrix.sym);
  }
  {
    auto out = open_out(run.out / "forward.csv");
    cls::write_matrix_csv(out, matrix.ids, matrix.forward);
  }
  for (const char* f : {"matrix.csv", "forward.csv", "predictions.csv", "report.json"}) manifest.add_artifact(run.out, f);

  if (interactions) {
    loc::AnalysisOptions opt;
    opt.spec = run.config.surface_spec();
    opt.null_mode = run.config.null_model();
    opt.policy = run.config.lambda_policy();
    opt.q = run.config.fdr;
    opt.method = run.config.method();
    opt.threads = run.threads;
    const auto tests = loc::interaction_tests(corpus, opt, run.config.seed);
    auto out = open_out(run.out / "interactions.csv");
    out << "source,target,max_stat,pval,significant\n";
    for (const auto& t : tests) {
      std::ostringstream line;
      line.precision(17);
      line << ids[t.source] << ',' << ids[t.target] << ',' << t.max_stat << ',' << t.pval << ','
           << (t.significant ? "true" : "false");
      out << line.str() << '\n';
    }
    out.close();
    manifest.add_artifact(run.out, "interactions.csv");
  }

  manifest.summary()["sequences"] = corpus.size();
  manifest.summary()["accuracy"] = accuracies.front();
  if (repeats > 1) {
    double mean = 0.0;
    for (double a : accuracies) mean += a;
    manifest.summary()["repeat_accuracies"] = accuracies;
    manifest.summary()["mean_accuracy"] = mean / static_cast<double>(accuracies.size());
  }
  manifest.write(run.out);
}

void cmd_synth(const fs::path& spec_path, const RunOptions& run, SynthMode mode, std::size_t per_class,
               bool with_reversed) {
  std::ifstream in(spec_path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + spec_path.string());
  const auto spec = synth::parse_coupling_spec(in);
  nlohmann::ordered_json cfg;
  {
    std::ostringstream os;
    synth::write_coupling_spec(os, spec);
    cfg = nlohmann::ordered_json::parse(os.str());
  }
  cfg["mode"] = mode == SynthMode::Pair ? "pair" : "corpus";
  if (mode == SynthMode::Corpus) cfg["per_class"] = per_class;
  Manifest manifest("synth", cfg, run.config.seed);
  manifest.add_input(spec_path);
  ensure_dir(run.out);

  std::vector<ingest::DetectionSequence> seqs;
  std::vector<synth::PairTruth> truth;
  std::vector<synth::LabeledCorpus::PairInfo> pairs;
  if (mode == SynthMode::Pair) {
    auto pair = synth::gen_coupled_pair(spec, run.config.seed);
    seqs.push_back(std::move(pair.x));
    seqs.push_back(std::move(pair.y));
    truth.push_back(std::move(pair.truth));
  } else {
    auto corpus = synth::gen_corpus(spec, per_class, run.config.seed);
    seqs = std::move(corpus.sequences);
    truth = std::move(corpus.members);
    pairs = std::move(corpus.pairs);
  }
  if (with_reversed) {
    const std::size_t count = seqs.size();
    for (std::size_t i = 0; i < count; ++i) {
      auto r = synth::reverse_time(seqs[i]);
      r.sequence_id += "_rev";
      seqs.push_back(std::move(r));
    }
  }
  for (const auto& s : seqs) {
    const fs::path rel = safe_name(s.sequence_id) + ".jsonl";
    ingest::save_detections(s, run.out / rel);
    manifest.add_artifact(run.out, rel);
  }
  {
    auto out = open_out(run.out / "truth.json");
    synth::write_truth_json(out, truth, pairs);
  }
  {
    auto out = open_out(run.out / "spec.json");
    synth::write_coupling_spec(out, spec);
  }
  manifest.add_artifact(run.out, "truth.json");
  manifest.add_artifact(run.out, "spec.json");
  manifest.summary()["sequences"] = seqs.size();
  manifest.write(run.out);
}

std::size_t cmd_validate(const std::vector<fs::path>& inputs, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      const auto more = list_files(p, ".jsonl");
      files.insert(files.end(), more.begin(), more.end());
    } else {
      files.push_back(p);
    }
  }
  if (files.empty()) throw Error(ErrorCode::EmptyInput, "no detection files to validate");
  std::size_t failed = 0;
  for (const auto& f : files) {
    nlohmann::ordered_json line;
    line["file"] = f.generic_string();
    try {
      const auto seq = ingest::load_detections(f);
      line["ok"] = true;
      line["sequence_id"] = seq.sequence_id;
      line["frames"] = seq.frames.size();
    } catch (const Error& e) {
      ++failed;
      line["ok"] = false;
      line["code"] = to_string(e.code());
      line["detail"] = e.what();
    }
    out << line.dump() << '\n';
  }
  return failed;
}

}  // namespace soda::cli
