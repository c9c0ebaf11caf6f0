#include "soda/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "soda/error.hpp"
#include "soda/random.hpp"

namespace soda::mrf {

using ingest::PartId;

namespace {

double squared_distance(const ingest::PartState& a, const ingest::PartState& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// Adjacency of each variable: (neighbor, edge kind).
std::vector<std::vector<std::pair<std::size_t, EdgeKind>>> adjacency(const PictorialModel& model) {
  std::vector<std::vector<std::pair<std::size_t, EdgeKind>>> adj(model.variables().size());
  for (const auto& e : model.edges()) {
    adj[e.a].emplace_back(e.b, e.kind);
    adj[e.b].emplace_back(e.a, e.kind);
  }
  return adj;
}

void check_assignment(const FrameField& field, const FrameConfiguration& cfg) {
  if (cfg.assignment.size() != field.variables())
    throw Error(ErrorCode::InvalidAssignment, "configuration assigns " + std::to_string(cfg.assignment.size()) +
                                                  " variables, model has " + std::to_string(field.variables()));
  for (std::size_t v = 0; v < field.variables(); ++v) {
    if (cfg.assignment[v] >= field.candidates(v))
      throw Error(ErrorCode::InvalidAssignment, "variable " + std::to_string(v) + " assigned candidate " +
                                                    std::to_string(cfg.assignment[v]) + " of " +
                                                    std::to_string(field.candidates(v)));
  }
}

// Sufficient statistics of one configuration: unary sum and the squared
// distance sums over intra and inter edges.
struct Stats {
  double unary = 0.0;
  double intra = 0.0;
  double inter = 0.0;
};

Stats configuration_stats(const PictorialModel& model, const FrameField& field, std::span<const std::uint32_t> a) {
  Stats s;
  for (std::size_t v = 0; v < field.variables(); ++v) s.unary += field.candidate(v, a[v]).score;
  for (const auto& e : model.edges()) {
    const double d2 = squared_distance(field.candidate(e.a, a[e.a]), field.candidate(e.b, a[e.b]));
    (e.kind == EdgeKind::Intra ? s.intra : s.inter) += d2;
  }
  return s;
}

}  // namespace

PictorialModel::PictorialModel(int arity, std::size_t persons, double gamma1, double gamma2, bool interaction)
    : arity_(arity), persons_(persons), gamma1_(gamma1), gamma2_(gamma2), interaction_(interaction) {
  if (!ingest::is_valid_arity(arity))
    throw Error(ErrorCode::InvalidArgument, "model arity must be 3 or 5, got " + std::to_string(arity));
  if (persons < 1) throw Error(ErrorCode::InvalidArgument, "model needs at least one person");
  if (!std::isfinite(gamma1) || !std::isfinite(gamma2) || gamma1 < 0.0 || gamma2 < 0.0)
    throw Error(ErrorCode::InvalidArgument, "gamma1 and gamma2 must be finite and non-negative");

  const auto parts = ingest::model_parts(arity);
  for (std::size_t p = 0; p < persons; ++p)
    for (PartId part : parts) variables_.push_back({p, part});

  for (std::size_t p = 0; p < persons; ++p) {
    const std::size_t torso = variable_index(p, PartId::Torso);
    for (PartId part : parts) {
      if (part == PartId::Torso) continue;
      edges_.push_back({torso, variable_index(p, part), EdgeKind::Intra});
    }
  }
  if (interaction) {
    for (std::size_t a = 0; a < persons; ++a) {
      for (std::size_t b = a + 1; b < persons; ++b) {
        for (PartId part : {PartId::Torso, PartId::LeftArm, PartId::RightArm})
          edges_.push_back({variable_index(a, part), variable_index(b, part), EdgeKind::Inter});
      }
    }
  }
}

std::size_t PictorialModel::variable_index(std::size_t person, PartId part) const {
  const auto parts = ingest::model_parts(arity_);
  const auto it = std::find(parts.begin(), parts.end(), part);
  if (person >= persons_ || it == parts.end())
    throw Error(ErrorCode::InvalidArgument, "no variable for person " + std::to_string(person) + " part " +
                                                std::string(ingest::part_key(part)));
  return person * parts.size() + static_cast<std::size_t>(it - parts.begin());
}

FrameField::FrameField(const PictorialModel& model, const ingest::FrameDetections& frame) {
  if (frame.persons.size() != model.persons())
    throw Error(ErrorCode::DimensionMismatch, "frame " + std::to_string(frame.frame_index) + " has " +
                                                  std::to_string(frame.persons.size()) + " persons, model expects " +
                                                  std::to_string(model.persons()));
  cands_.reserve(model.variables().size());
  for (const auto& var : model.variables()) {
    const auto& slot = frame.persons[var.person].slot(var.part);
    if (slot.empty())
      throw Error(ErrorCode::InvalidAssignment, "frame " + std::to_string(frame.frame_index) + " person " +
                                                    std::to_string(frame.persons[var.person].id) + " has no " +
                                                    std::string(ingest::part_key(var.part)) + " candidate");
    std::vector<const ingest::PartState*> ptrs;
    ptrs.reserve(slot.size());
    for (const auto& c : slot) ptrs.push_back(&c);
    cands_.push_back(std::move(ptrs));
  }
}

std::size_t FrameField::state_count() const noexcept {
  std::size_t total = 1;
  for (const auto& c : cands_) {
    if (total > std::numeric_limits<std::size_t>::max() / c.size()) return std::numeric_limits<std::size_t>::max();
    total *= c.size();
  }
  return total;
}

FrameConfiguration DistributionTable::state(std::size_t k) const {
  FrameConfiguration cfg;
  cfg.assignment.resize(radix.size());
  for (std::size_t v = radix.size(); v-- > 0;) {
    cfg.assignment[v] = static_cast<std::uint32_t>(k % radix[v]);
    k /= radix[v];
  }
  return cfg;
}

std::size_t DistributionTable::index_of(const FrameConfiguration& cfg) const {
  std::size_t k = 0;
  for (std::size_t v = 0; v < radix.size(); ++v) k = k * radix[v] + cfg.assignment[v];
  return k;
}

double log_potential(const PictorialModel& model, const ingest::FrameDetections& frame,
                     const FrameConfiguration& cfg) {
  const FrameField field(model, frame);
  check_assignment(field, cfg);
  const Stats s = configuration_stats(model, field, cfg.assignment);
  return s.unary - model.gamma1() * s.intra - model.gamma2() * s.inter;
}

DistributionTable exact_joint(const PictorialModel& model, const ingest::FrameDetections& frame) {
  const FrameField field(model, frame);
  const std::size_t states = field.state_count();
  if (states > kMaxExactStates)
    throw Error(ErrorCode::StateSpaceTooLarge,
                "frame " + std::to_string(frame.frame_index) + " has more than " + std::to_string(kMaxExactStates) +
                    " joint configurations");

  DistributionTable table;
  for (std::size_t v = 0; v < field.variables(); ++v)
    table.radix.push_back(static_cast<std::uint32_t>(field.candidates(v)));
  table.probs.resize(states);

  std::vector<std::uint32_t> a(field.variables(), 0);
  for (std::size_t k = 0; k < states; ++k) {
    const Stats s = configuration_stats(model, field, a);
    table.probs[k] = s.unary - model.gamma1() * s.intra - model.gamma2() * s.inter;
    for (std::size_t v = a.size(); v-- > 0;) {
      if (++a[v] < table.radix[v]) break;
      a[v] = 0;
    }
  }
  const double log_z = log_sum_exp(table.probs);
  for (double& p : table.probs) p = std::exp(p - log_z);
  return table;
}

SampleSet gibbs_sample(const PictorialModel& model, const ingest::FrameDetections& frame,
                       const GibbsOptions& options, std::uint64_t seed) {
  if (options.samples < 1) throw Error(ErrorCode::InvalidArgument, "gibbs needs at least one sample");
  const FrameField field(model, frame);
  const auto adj = adjacency(model);
  const std::size_t vars = field.variables();
  const CounterRng rng(seed);

  std::size_t max_cands = 0;
  for (std::size_t v = 0; v < vars; ++v) max_cands = std::max(max_cands, field.candidates(v));
  std::vector<double> energy(max_cands);
  std::vector<std::uint32_t> state(vars, 0);
  SampleSet out(frame.frame_index, vars, options.samples);

  const std::size_t sweeps = options.burnin + options.samples;
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t v = 0; v < vars; ++v) {
      const std::size_t count = field.candidates(v);
      if (count == 1) continue;
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < count; ++c) {
        const auto& cand = field.candidate(v, c);
        double e = cand.score;
        for (const auto& [w, kind] : adj[v])
          e -= model.weight(kind) * squared_distance(cand, field.candidate(w, state[w]));
        energy[c] = e;
        hi = std::max(hi, e);
      }
      double total = 0.0;
      for (std::size_t c = 0; c < count; ++c) {
        energy[c] = std::exp(energy[c] - hi);
        total += energy[c];
      }
      const double target = rng.uniform(sweep * vars + v) * total;
      double cum = 0.0;
      std::uint32_t pick = static_cast<std::uint32_t>(count - 1);
      for (std::size_t c = 0; c < count; ++c) {
        cum += energy[c];
        if (target < cum) {
          pick = static_cast<std::uint32_t>(c);
          break;
        }
      }
      state[v] = pick;
    }
    if (sweep >= options.burnin) {
      auto dst = out.sample(sweep - options.burnin);
      std::copy(state.begin(), state.end(), dst.begin());
    }
  }
  return out;
}

FrameConfiguration top_score_configuration(const PictorialModel& model, const ingest::FrameDetections& frame) {
  const FrameField field(model, frame);
  FrameConfiguration cfg;
  cfg.assignment.resize(field.variables());
  for (std::size_t v = 0; v < field.variables(); ++v) {
    std::uint32_t best = 0;
    for (std::size_t c = 1; c < field.candidates(v); ++c) {
      if (field.candidate(v, c).score > field.candidate(v, best).score) best = static_cast<std::uint32_t>(c);
    }
    cfg.assignment[v] = best;
  }
  return cfg;
}

namespace {

// Per-frame ingredients of the log-likelihood. For exact frames the state
// list holds every configuration; for large frames it holds proposals drawn
// from the unary-only product distribution and log_base is the log of that
// distribution's normalizer.
struct FrameLikelihood {
  Stats observed;
  std::vector<Stats> states;
  double log_base = 0.0;
  bool exact = true;

  double log_partition(double g1, double g2) const {
    std::vector<double> terms(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
      terms[k] = (exact ? states[k].unary : 0.0) - g1 * states[k].intra - g2 * states[k].inter;
    }
    const double lse = log_sum_exp(terms);
    return exact ? lse : log_base + lse - std::log(static_cast<double>(states.size()));
  }

  double log_likelihood(double g1, double g2) const {
    return observed.unary - g1 * observed.intra - g2 * observed.inter - log_partition(g1, g2);
  }
};

FrameLikelihood prepare_frame(const PictorialModel& model, const ingest::FrameDetections& frame,
                              const FitOptions& options, std::uint64_t stream) {
  const FrameField field(model, frame);
  FrameLikelihood fl;
  fl.observed = configuration_stats(model, field, top_score_configuration(model, frame).assignment);

  const std::size_t states = field.state_count();
  std::vector<std::uint32_t> a(field.variables(), 0);
  if (states <= options.exact_state_limit) {
    fl.states.reserve(states);
    for (std::size_t k = 0; k < states; ++k) {
      fl.states.push_back(configuration_stats(model, field, a));
      for (std::size_t v = a.size(); v-- > 0;) {
        if (++a[v] < field.candidates(v)) break;
        a[v] = 0;
      }
    }
    return fl;
  }

  fl.exact = false;
  std::vector<std::vector<double>> cdf(field.variables());
  for (std::size_t v = 0; v < field.variables(); ++v) {
    std::vector<double> scores(field.candidates(v));
    for (std::size_t c = 0; c < scores.size(); ++c) scores[c] = field.candidate(v, c).score;
    const double lse = log_sum_exp(scores);
    fl.log_base += lse;
    double cum = 0.0;
    for (double s : scores) {
      cum += std::exp(s - lse);
      cdf[v].push_back(cum);
    }
  }
  RngStream rng(CounterRng(options.seed).split(stream));
  fl.states.reserve(options.importance_draws);
  for (std::size_t r = 0; r < options.importance_draws; ++r) {
    for (std::size_t v = 0; v < field.variables(); ++v) {
      const double u = rng.uniform() * cdf[v].back();
      const auto it = std::upper_bound(cdf[v].begin(), cdf[v].end(), u);
      a[v] = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf[v].begin(),
                                                                 static_cast<std::ptrdiff_t>(cdf[v].size()) - 1));
    }
    Stats s = configuration_stats(model, field, a);
    fl.states.push_back(s);
  }
  return fl;
}

template <typename F>
double golden_section_max(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // The bracket ends are candidates too: the likelihood is concave, so a
  // boundary maximum shows up as the interval collapsing onto an end.
  double best = 0.5 * (a + b);
  double fbest = f(best);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx > fbest) {
      best = x;
      fbest = fx;
    }
  }
  return best;
}

// Largest squared distance any configuration can put on edges of `kind`.
double max_edge_spread(const PictorialModel& model, const FrameField& field, EdgeKind kind) {
  double spread = 0.0;
  for (const auto& e : model.edges()) {
    if (e.kind != kind) continue;
    for (std::size_t i = 0; i < field.candidates(e.a); ++i)
      for (std::size_t j = 0; j < field.candidates(e.b); ++j)
        spread = std::max(spread, squared_distance(field.candidate(e.a, i), field.candidate(e.b, j)));
  }
  return spread;
}

}  // namespace

GammaFit fit_gammas(std::span<const ingest::DetectionSequence> sequences, const PictorialModel& model_template,
                    const FitOptions& options) {
  if (sequences.empty()) throw Error(ErrorCode::EmptyInput, "fit_gammas needs at least one sequence");
  if (!(options.lower > 0.0) || !(options.upper > options.lower))
    throw Error(ErrorCode::InvalidArgument, "gamma search interval must satisfy 0 < lower < upper");

  std::vector<const ingest::FrameDetections*> frames;
  for (const auto& seq : sequences)
    for (const auto& f : seq.frames) frames.push_back(&f);
  if (frames.empty()) throw Error(ErrorCode::EmptySequence, "fit_gammas found no frames");

  std::vector<std::size_t> chosen;
  if (options.max_frames == 0 || frames.size() <= options.max_frames) {
    chosen.resize(frames.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  } else {
    const double step = static_cast<double>(frames.size()) / static_cast<double>(options.max_frames);
    for (std::size_t i = 0; i < options.max_frames; ++i)
      chosen.push_back(static_cast<std::size_t>(std::floor(static_cast<double>(i) * step)));
  }

  const bool fit_inter = model_template.interaction_enabled() && model_template.persons() > 1;
  double spread_intra = 0.0, spread_inter = 0.0;
  std::vector<FrameLikelihood> parts;
  parts.reserve(chosen.size());
  for (std::size_t i : chosen) {
    const FrameField field(model_template, *frames[i]);
    spread_intra = std::max(spread_intra, max_edge_spread(model_template, field, EdgeKind::Intra));
    if (fit_inter) spread_inter = std::max(spread_inter, max_edge_spread(model_template, field, EdgeKind::Inter));
    parts.push_back(prepare_frame(model_template, *frames[i], options, i));
  }

  auto total = [&](double g1, double g2) {
    double acc = 0.0;
    for (const auto& p : parts) acc += p.log_likelihood(g1, g2);
    return acc;
  };

  GammaFit fit;
  fit.frames_used = parts.size();
  fit.gamma1_degenerate = spread_intra == 0.0;
  fit.gamma2_degenerate = fit_inter && spread_inter == 0.0;
  double g1 = fit.gamma1_degenerate ? options.lower : model_template.gamma1();
  double g2 = !fit_inter ? model_template.gamma2() : fit.gamma2_degenerate ? options.lower : model_template.gamma2();
  g1 = std::clamp(g1, options.lower, options.upper);
  if (fit_inter) g2 = std::clamp(g2, options.lower, options.upper);

  for (int pass = 0; pass < options.passes; ++pass) {
    if (!fit.gamma1_degenerate)
      g1 = golden_section_max([&](double x) { return total(x, g2); }, options.lower, options.upper, options.tolerance);
    if (fit_inter && !fit.gamma2_degenerate)
      g2 = golden_section_max([&](double x) { return total(g1, x); }, options.lower, options.upper, options.tolerance);
  }
  fit.gamma1 = g1;
  fit.gamma2 = g2;
  fit.log_likelihood = total(g1, g2);
  return fit;
}

}  // namespace soda::mrf
