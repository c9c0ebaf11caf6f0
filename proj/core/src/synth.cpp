#include "soda/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include <json.hpp>

#include "soda/error.hpp"
#include "soda/random.hpp"

namespace soda::synth {

using ingest::DetectionSequence;
using ingest::FrameDetections;
using ingest::PartId;
using ingest::PartState;

namespace {

void fail(const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); }

double reflect(double v, double lo, double hi) {
  if (hi <= lo) return lo;
  const double span = hi - lo;
  double t = std::fmod(v - lo, 2.0 * span);
  if (t < 0.0) t += 2.0 * span;
  return lo + (t <= span ? t : 2.0 * span - t);
}

struct Offset {
  double dx = 0.0;
  double dy = 0.0;
};

Offset nominal_offset(PartId part) {
  switch (part) {
    case PartId::LeftArm: return {-4.0, 2.0};
    case PartId::RightArm: return {4.0, 2.0};
    case PartId::LeftLeg: return {-2.0, -6.0};
    case PartId::RightLeg: return {2.0, -6.0};
    default: return {0.0, 0.0};
  }
}

// Horizontal gap between neighboring persons: approach, hold, separate.
double gap_schedule(std::size_t m, std::size_t frames, double width) {
  const double far = width / 2.0, near = width / 8.0;
  const double third = static_cast<double>(frames) / 3.0;
  const double t = static_cast<double>(m);
  if (t < third) return far + (near - far) * (t / third);
  if (t < 2.0 * third) return near;
  return near + (far - near) * ((t - 2.0 * third) / third);
}

// Reflecting random walk of every person's placement and limb offsets.
class Walker {
 public:
  Walker(const CouplingSpec& spec, double step, CounterRng rng)
      : spec_(spec), step_(step), rng_(rng), parts_(ingest::model_parts(spec.arity)) {
    drift_.assign(spec.persons, Offset{});
    limbs_.assign(spec.persons, std::vector<Offset>(parts_.size()));
  }

  std::vector<std::vector<Offset>> advance(std::size_t m) {
    const double W = static_cast<double>(spec_.width), H = static_cast<double>(spec_.height);
    std::vector<std::vector<Offset>> pose(spec_.persons);
    const double gap = spec_.persons > 1 ? gap_schedule(m, spec_.frames, W) : 0.0;
    for (std::size_t p = 0; p < spec_.persons; ++p) {
      auto& d = drift_[p];
      d.dx = reflect(d.dx + step_ * rng_.normal(), -W / 6.0, W / 6.0);
      d.dy = reflect(d.dy + step_ * rng_.normal(), -H / 6.0, H / 6.0);
      const double cx = W / 2.0 + (static_cast<double>(p) - static_cast<double>(spec_.persons - 1) / 2.0) * gap + d.dx;
      const double cy = H / 2.0 + d.dy;
      for (std::size_t k = 0; k < parts_.size(); ++k) {
        auto& l = limbs_[p][k];
        if (parts_[k] != PartId::Torso) {
          l.dx = reflect(l.dx + 0.5 * step_ * rng_.normal(), -1.5, 1.5);
          l.dy = reflect(l.dy + 0.5 * step_ * rng_.normal(), -1.5, 1.5);
        }
        const Offset o = nominal_offset(parts_[k]);
        pose[p].push_back({reflect(cx + o.dx + l.dx, 0.0, W), reflect(cy + o.dy + l.dy, 0.0, H)});
      }
    }
    return pose;
  }

  RngStream& rng() { return rng_; }

 private:
  const CouplingSpec& spec_;
  double step_;
  RngStream rng_;
  std::span<const PartId> parts_;
  std::vector<Offset> drift_;
  std::vector<std::vector<Offset>> limbs_;
};

// Detector output for a pose: the true position among distractors, in
// shuffled order, with noisy scores.
FrameDetections render(const CouplingSpec& spec, const std::vector<std::vector<Offset>>& pose, std::size_t m,
                       RngStream& rng) {
  const double W = static_cast<double>(spec.width), H = static_cast<double>(spec.height);
  const auto parts = ingest::model_parts(spec.arity);
  FrameDetections f;
  f.frame_index = static_cast<std::int64_t>(m);
  for (std::size_t p = 0; p < pose.size(); ++p) {
    ingest::Person person;
    person.id = static_cast<std::int64_t>(p);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      auto& slot = person.slot(parts[k]);
      const Offset truth = pose[p][k];
      slot.push_back({parts[k], truth.dx, truth.dy, spec.true_score + spec.score_noise * rng.normal()});
      for (std::size_t c = 1; c < spec.candidates; ++c) {
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        const double radius = spec.distractor_radius * std::sqrt(rng.uniform());
        slot.push_back({parts[k], reflect(truth.dx + radius * std::cos(angle), 0.0, W),
                        reflect(truth.dy + radius * std::sin(angle), 0.0, H), spec.score_noise * rng.normal()});
      }
      for (std::size_t i = slot.size(); i-- > 1;) std::swap(slot[i], slot[static_cast<std::size_t>(rng.below(i + 1))]);
    }
    f.persons.push_back(std::move(person));
  }
  return f;
}

FrameDetections jittered_copy(const CouplingSpec& spec, const FrameDetections& src, std::size_t m, RngStream& rng) {
  const double W = static_cast<double>(spec.width), H = static_cast<double>(spec.height);
  FrameDetections f = src;
  f.frame_index = static_cast<std::int64_t>(m);
  for (auto& person : f.persons)
    for (auto& slot : person.candidates)
      for (auto& c : slot) {
        c.x = reflect(c.x + spec.noise * rng.normal(), 0.0, W);
        c.y = reflect(c.y + spec.noise * rng.normal(), 0.0, H);
      }
  return f;
}

DetectionSequence walk_sequence(const CouplingSpec& spec, double step, CounterRng rng, std::string id) {
  DetectionSequence seq;
  seq.sequence_id = std::move(id);
  seq.model_arity = spec.arity;
  seq.grid = {spec.width, spec.height};
  Walker walker(spec, step, rng.split(0));
  RngStream render_rng(rng.split(1));
  for (std::size_t m = 0; m < spec.frames; ++m) seq.frames.push_back(render(spec, walker.advance(m), m, render_rng));
  return seq;
}

// Makes `target` follow `source` per the template and records which frames
// were copied.
PairTruth couple(const CouplingSpec& spec, const ClassTemplate& tpl, const DetectionSequence& source,
                 DetectionSequence& target, CounterRng rng) {
  PairTruth truth;
  truth.source_id = source.sequence_id;
  truth.target_id = target.sequence_id;
  truth.lag = tpl.lag;
  truth.coupling = tpl.coupling;
  truth.active_window = tpl.active_window;
  RngStream coin(rng.split(0));
  RngStream jitter(rng.split(1));
  for (std::size_t m = 0; m < spec.frames; ++m) {
    const double u = coin.uniform();
    const bool eligible = m >= tpl.lag && (!tpl.active_window || (m >= tpl.active_window->first &&
                                                                  m < tpl.active_window->second));
    if (!eligible || !(u < tpl.coupling)) continue;
    target.frames[m] = jittered_copy(spec, source.frames[m - tpl.lag], m, jitter);
    truth.copied.push_back({m, m - tpl.lag});
  }
  return truth;
}

}  // namespace

void CouplingSpec::validate() const {
  if (classes.empty()) fail("at least one class template is required");
  std::set<std::string> labels;
  for (const auto& c : classes) {
    if (c.label.empty()) fail("class label must be non-empty");
    if (!labels.insert(c.label).second) fail("duplicate class label '" + c.label + "'");
    if (c.lag >= frames) fail("class '" + c.label + "' lag must be below the frame count");
    if (!(c.coupling >= 0.0 && c.coupling <= 1.0)) fail("class '" + c.label + "' coupling must lie in [0, 1]");
    if (!(c.step >= 0.0) || !std::isfinite(c.step)) fail("class '" + c.label + "' step must be finite and >= 0");
    if (c.active_window && (c.active_window->first >= c.active_window->second || c.active_window->second > frames))
      fail("class '" + c.label + "' active window must satisfy start < end <= frames");
  }
  if (persons < 1) fail("persons must be at least 1");
  if (!ingest::is_valid_arity(arity)) fail("arity must be 3 or 5");
  if (frames < 1) fail("frames must be at least 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be finite and >= 0");
  if (width < 1 || height < 1) fail("grid must be at least 1x1");
  if (candidates < 1) fail("candidates must be at least 1");
  if (!(distractor_radius >= 0.0) || !std::isfinite(distractor_radius)) fail("distractor_radius must be >= 0");
  if (!std::isfinite(true_score)) fail("true_score must be finite");
  if (!(score_noise >= 0.0) || !std::isfinite(score_noise)) fail("score_noise must be finite and >= 0");
}

CoupledPair gen_coupled_pair(const CouplingSpec& spec, std::uint64_t seed, std::size_t class_index) {
  spec.validate();
  if (class_index >= spec.classes.size()) fail("class index out of range");
  const auto& tpl = spec.classes[class_index];
  const CounterRng master(seed);
  CoupledPair out;
  out.x = walk_sequence(spec, tpl.step, master.split(1), "x");
  out.y = walk_sequence(spec, tpl.step, master.split(2), "y");
  out.x.label = tpl.label;
  out.y.label = tpl.label;
  out.truth = couple(spec, tpl, out.x, out.y, master.split(3));
  return out;
}

DetectionSequence reverse_time(const DetectionSequence& seq) {
  DetectionSequence out = seq;
  std::reverse(out.frames.begin(), out.frames.end());
  for (std::size_t m = 0; m < out.frames.size(); ++m) out.frames[m].frame_index = static_cast<std::int64_t>(m);
  return out;
}

LabeledCorpus gen_corpus(const CouplingSpec& spec, std::size_t per_class, std::uint64_t seed) {
  spec.validate();
  if (per_class < 4) fail("per_class must be at least 4");
  const CounterRng master(seed);
  LabeledCorpus corpus;
  std::vector<std::size_t> class_of;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto& tpl = spec.classes[c];
    const CounterRng class_rng = master.split(c);
    const auto prototype = walk_sequence(spec, tpl.step, class_rng.split(0), "prototype:" + tpl.label);
    for (std::size_t i = 0; i < per_class; ++i) {
      const CounterRng member_rng = class_rng.split(i + 1);
      std::string id = tpl.label + "_" + (i < 10 ? "0" : "") + std::to_string(i);
      auto seq = walk_sequence(spec, tpl.step, member_rng.split(0), std::move(id));
      seq.label = tpl.label;
      corpus.members.push_back(couple(spec, tpl, prototype, seq, member_rng.split(1)));
      corpus.sequences.push_back(std::move(seq));
      class_of.push_back(c);
    }
  }
  for (std::size_t a = 0; a < corpus.sequences.size(); ++a)
    for (std::size_t b = a + 1; b < corpus.sequences.size(); ++b)
      corpus.pairs.push_back({a, b, class_of[a] == class_of[b]});
  return corpus;
}

namespace {

const std::set<std::string> kSpecKeys = {"classes", "persons", "arity", "frames", "noise", "width", "height",
                                         "candidates", "distractor_radius", "true_score", "score_noise"};
const std::set<std::string> kClassKeys = {"label", "lag", "coupling", "active_window", "step"};

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    fail("key '" + key + "' has the wrong type");
  }
  return T{};
}

}  // namespace

CouplingSpec parse_coupling_spec(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("coupling spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("coupling spec must be a JSON object");
  CouplingSpec spec;
  for (const auto& [key, value] : doc.items()) {
    if (!kSpecKeys.count(key)) fail("unknown coupling spec key '" + key + "'");
    if (key == "persons") spec.persons = get_as<std::size_t>(value, key);
    else if (key == "arity") spec.arity = get_as<int>(value, key);
    else if (key == "frames") spec.frames = get_as<std::size_t>(value, key);
    else if (key == "noise") spec.noise = get_as<double>(value, key);
    else if (key == "width") spec.width = get_as<std::int64_t>(value, key);
    else if (key == "height") spec.height = get_as<std::int64_t>(value, key);
    else if (key == "candidates") spec.candidates = get_as<std::size_t>(value, key);
    else if (key == "distractor_radius") spec.distractor_radius = get_as<double>(value, key);
    else if (key == "true_score") spec.true_score = get_as<double>(value, key);
    else if (key == "score_noise") spec.score_noise = get_as<double>(value, key);
    else if (key == "classes") {
      if (!value.is_array()) fail("classes must be an array");
      spec.classes.clear();
      for (const auto& c : value) {
        if (!c.is_object()) fail("each class must be an object");
        ClassTemplate t;
        for (const auto& [ck, cv] : c.items()) {
          if (!kClassKeys.count(ck)) fail("unknown class key '" + ck + "'");
          if (ck == "label") t.label = get_as<std::string>(cv, ck);
          else if (ck == "lag") t.lag = get_as<std::size_t>(cv, ck);
          else if (ck == "coupling") t.coupling = get_as<double>(cv, ck);
          else if (ck == "step") t.step = get_as<double>(cv, ck);
          else if (ck == "active_window" && !cv.is_null()) {
            const auto w = get_as<std::vector<std::size_t>>(cv, ck);
            if (w.size() != 2) fail("active_window must be [start, end]");
            t.active_window = std::make_pair(w[0], w[1]);
          }
        }
        spec.classes.push_back(std::move(t));
      }
    }
  }
  spec.validate();
  return spec;
}

void write_coupling_spec(std::ostream& out, const CouplingSpec& spec) {
  nlohmann::ordered_json j;
  auto classes = nlohmann::ordered_json::array();
  for (const auto& c : spec.classes) {
    nlohmann::ordered_json t;
    t["label"] = c.label;
    t["lag"] = c.lag;
    t["coupling"] = c.coupling;
    t["active_window"] = c.active_window ? nlohmann::ordered_json::array({c.active_window->first, c.active_window->second})
                                         : nlohmann::ordered_json();
    t["step"] = c.step;
    classes.push_back(std::move(t));
  }
  j["classes"] = std::move(classes);
  j["persons"] = spec.persons;
  j["arity"] = spec.arity;
  j["frames"] = spec.frames;
  j["noise"] = spec.noise;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["candidates"] = spec.candidates;
  j["distractor_radius"] = spec.distractor_radius;
  j["true_score"] = spec.true_score;
  j["score_noise"] = spec.score_noise;
  out << j.dump(2) << '\n';
}

void write_truth_json(std::ostream& out, const std::vector<PairTruth>& truth,
                      const std::vector<LabeledCorpus::PairInfo>& pairs) {
  nlohmann::ordered_json j;
  auto couplings = nlohmann::ordered_json::array();
  for (const auto& t : truth) {
    nlohmann::ordered_json e;
    e["source"] = t.source_id;
    e["target"] = t.target_id;
    e["lag"] = t.lag;
    e["coupling"] = t.coupling;
    e["active_window"] = t.active_window
                             ? nlohmann::ordered_json::array({t.active_window->first, t.active_window->second})
                             : nlohmann::ordered_json();
    auto copied = nlohmann::ordered_json::array();
    for (const auto& c : t.copied) copied.push_back({c.target, c.source});
    e["copied_frames"] = std::move(copied);
    couplings.push_back(std::move(e));
  }
  j["couplings"] = std::move(couplings);
  if (!pairs.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : pairs) arr.push_back({{"a", p.a}, {"b", p.b}, {"same_class", p.same_class}});
    j["pairs"] = std::move(arr);
  }
  out << j.dump(2) << '\n';
}

}  // namespace soda::synth
