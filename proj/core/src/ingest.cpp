#include "soda/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "soda/error.hpp"

namespace soda::ingest {

using nlohmann::json;

namespace {

constexpr std::array<PartId, 3> kThreePart{PartId::Torso, PartId::LeftArm, PartId::RightArm};
constexpr std::array<PartId, 5> kFivePart{PartId::Torso, PartId::LeftArm, PartId::RightArm, PartId::LeftLeg,
                                          PartId::RightLeg};

[[noreturn]] void malformed(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedRecord, source + ":" + std::to_string(line) + ": " + what);
}

bool in_model(PartId part, int arity) {
  const auto parts = model_parts(arity);
  return std::find(parts.begin(), parts.end(), part) != parts.end();
}

}  // namespace

std::string_view part_key(PartId part) noexcept {
  switch (part) {
    case PartId::Head: return "head";
    case PartId::Torso: return "torso";
    case PartId::LeftArm: return "left_arm";
    case PartId::RightArm: return "right_arm";
    case PartId::LeftLeg: return "left_leg";
    case PartId::RightLeg: return "right_leg";
  }
  return "unknown";
}

std::optional<PartId> part_from_key(std::string_view key) noexcept {
  for (std::size_t i = 0; i < kPartCount; ++i) {
    const auto part = static_cast<PartId>(i);
    if (part_key(part) == key) return part;
  }
  return std::nullopt;
}

bool is_valid_arity(int arity) noexcept { return arity == 3 || arity == 5; }

std::span<const PartId> model_parts(int arity) {
  if (arity == 3) return kThreePart;
  if (arity == 5) return kFivePart;
  throw Error(ErrorCode::InvalidArgument, "model arity must be 3 or 5, got " + std::to_string(arity));
}

std::string_view to_string(IssueKind kind) noexcept {
  switch (kind) {
    case IssueKind::EmptySequence: return "EmptySequence";
    case IssueKind::InvalidGrid: return "InvalidGrid";
    case IssueKind::InvalidArity: return "InvalidArity";
    case IssueKind::NonMonotoneFrames: return "NonMonotoneFrames";
    case IssueKind::NoPersons: return "NoPersons";
    case IssueKind::DuplicatePerson: return "DuplicatePerson";
    case IssueKind::MissingPart: return "MissingPart";
    case IssueKind::UnexpectedPart: return "UnexpectedPart";
    case IssueKind::NonFinite: return "NonFinite";
    case IssueKind::OutOfGrid: return "OutOfGrid";
  }
  return "Unknown";
}

ValidationReport validate(const DetectionSequence& seq, int model_arity) {
  ValidationReport report;
  auto add = [&](std::optional<std::int64_t> frame, IssueKind kind, std::string detail) {
    report.issues.push_back({frame, kind, std::move(detail)});
  };

  if (!is_valid_arity(model_arity)) {
    add(std::nullopt, IssueKind::InvalidArity, "model arity " + std::to_string(model_arity) + " is not 3 or 5");
    return report;
  }
  if (seq.grid.width <= 0 || seq.grid.height <= 0)
    add(std::nullopt, IssueKind::InvalidGrid,
        "grid " + std::to_string(seq.grid.width) + "x" + std::to_string(seq.grid.height) + " is not positive");
  if (seq.frames.empty()) add(std::nullopt, IssueKind::EmptySequence, "sequence has no frames");

  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const auto& frame = seq.frames[f];
    if (f > 0 && frame.frame_index <= seq.frames[f - 1].frame_index)
      add(frame.frame_index, IssueKind::NonMonotoneFrames,
          "frame index " + std::to_string(frame.frame_index) + " follows " +
              std::to_string(seq.frames[f - 1].frame_index));
    if (frame.frame_index < 0) add(frame.frame_index, IssueKind::NonMonotoneFrames, "negative frame index");
    if (frame.persons.empty()) add(frame.frame_index, IssueKind::NoPersons, "frame has no persons");

    std::set<std::int64_t> seen;
    for (const auto& person : frame.persons) {
      if (!seen.insert(person.id).second)
        add(frame.frame_index, IssueKind::DuplicatePerson, "person id " + std::to_string(person.id) + " repeated");
      for (std::size_t s = 0; s < kPartCount; ++s) {
        const auto part = static_cast<PartId>(s);
        const auto& cands = person.candidates[s];
        const bool wanted = in_model(part, model_arity);
        if (wanted && cands.empty())
          add(frame.frame_index, IssueKind::MissingPart,
              "person " + std::to_string(person.id) + " has no " + std::string(part_key(part)) + " candidate");
        if (!wanted && !cands.empty())
          add(frame.frame_index, IssueKind::UnexpectedPart,
              "person " + std::to_string(person.id) + " has " + std::string(part_key(part)) +
                  " candidates, which the " + std::to_string(model_arity) + "-part model has no slot for");
        for (const auto& c : cands) {
          if (!std::isfinite(c.x) || !std::isfinite(c.y) || !std::isfinite(c.score)) {
            add(frame.frame_index, IssueKind::NonFinite,
                "person " + std::to_string(person.id) + " " + std::string(part_key(part)) + " has a non-finite value");
          } else if (!seq.grid.contains(c.x, c.y)) {
            std::ostringstream msg;
            msg << "person " << person.id << " " << part_key(part) << " at (" << c.x << ", " << c.y
                << ") lies outside the " << seq.grid.width << "x" << seq.grid.height << " grid";
            add(frame.frame_index, IssueKind::OutOfGrid, msg.str());
          }
        }
      }
    }
  }
  return report;
}

DetectionSequence parse_detections(std::istream& in, const std::string& source) {
  DetectionSequence seq;
  bool have_header = false;
  std::map<std::int64_t, std::size_t> line_of_frame;
  std::string text;
  std::size_t line = 0;

  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      malformed(source, line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) malformed(source, line, "record is not a JSON object");

    try {
      if (!have_header) {
        if (record.contains("frame")) malformed(source, line, "frame record before the sequence header");
        if (!record.contains("sequence_id") || !record["sequence_id"].is_string())
          malformed(source, line, "header lacks a string sequence_id");
        seq.sequence_id = record["sequence_id"].get<std::string>();
        if (record.contains("label") && !record["label"].is_null()) {
          if (!record["label"].is_string()) malformed(source, line, "label must be a string");
          seq.label = record["label"].get<std::string>();
        }
        const auto& grid = record.value("grid", json());
        if (!grid.is_array() || grid.size() != 2 || !grid[0].is_number_integer() || !grid[1].is_number_integer())
          malformed(source, line, "header grid must be [width, height] integers");
        seq.grid = {grid[0].get<std::int64_t>(), grid[1].get<std::int64_t>()};
        if (seq.grid.width <= 0 || seq.grid.height <= 0) malformed(source, line, "grid dimensions must be positive");
        if (!record.contains("model_arity") || !record["model_arity"].is_number_integer())
          malformed(source, line, "header lacks integer model_arity");
        seq.model_arity = record["model_arity"].get<int>();
        if (!is_valid_arity(seq.model_arity)) malformed(source, line, "model_arity must be 3 or 5");
        have_header = true;
        continue;
      }

      if (!record.contains("frame") || !record["frame"].is_number_integer())
        malformed(source, line, "frame record lacks integer 'frame'");
      FrameDetections frame;
      frame.frame_index = record["frame"].get<std::int64_t>();
      if (frame.frame_index < 0) malformed(source, line, "frame index is negative");
      if (!record.contains("persons") || !record["persons"].is_array())
        malformed(source, line, "frame record lacks 'persons' array");

      for (const auto& p : record["persons"]) {
        if (!p.is_object() || !p.contains("id") || !p["id"].is_number_integer())
          malformed(source, line, "person lacks integer id");
        Person person;
        person.id = p["id"].get<std::int64_t>();
        if (!p.contains("parts") || !p["parts"].is_object()) malformed(source, line, "person lacks 'parts' object");
        for (const auto& [key, cands] : p["parts"].items()) {
          const auto part = part_from_key(key);
          if (!part) malformed(source, line, "unknown part '" + key + "'");
          if (!in_model(*part, seq.model_arity))
            malformed(source, line,
                      "part '" + key + "' is not a slot of the " + std::to_string(seq.model_arity) + "-part model");
          if (!cands.is_array() || cands.empty())
            malformed(source, line, "part '" + key + "' needs a non-empty candidate array");
          for (const auto& c : cands) {
            if (!c.is_object() || !c.contains("x") || !c.contains("y") || !c.contains("score") ||
                !c["x"].is_number() || !c["y"].is_number() || !c["score"].is_number())
              malformed(source, line, "candidate of '" + key + "' needs numeric x, y, score");
            person.slot(*part).push_back({*part, c["x"].get<double>(), c["y"].get<double>(), c["score"].get<double>()});
          }
        }
        for (PartId part : model_parts(seq.model_arity)) {
          if (person.slot(part).empty())
            malformed(source, line,
                      "person " + std::to_string(person.id) + " is missing a " + std::string(part_key(part)) +
                          " candidate");
        }
        frame.persons.push_back(std::move(person));
      }
      std::stable_sort(frame.persons.begin(), frame.persons.end(),
                       [](const Person& a, const Person& b) { return a.id < b.id; });
      if (!line_of_frame.emplace(frame.frame_index, line).second)
        throw Error(ErrorCode::NonMonotoneFrames, source + ":" + std::to_string(line) + ": frame index " +
                                                      std::to_string(frame.frame_index) + " appears twice");
      seq.frames.push_back(std::move(frame));
    } catch (const json::exception& e) {
      malformed(source, line, std::string("bad value: ") + e.what());
    }
  }

  if (!have_header) throw Error(ErrorCode::EmptySequence, source + ": no header record");
  if (seq.frames.empty()) throw Error(ErrorCode::EmptySequence, source + ": sequence has no frames");

  std::stable_sort(seq.frames.begin(), seq.frames.end(),
                   [](const FrameDetections& a, const FrameDetections& b) { return a.frame_index < b.frame_index; });

  const auto report = validate(seq, seq.model_arity);
  for (const auto& issue : report.issues) {
    const std::size_t at = issue.frame_index ? line_of_frame[*issue.frame_index] : 1;
    const std::string where = source + ":" + std::to_string(at) + ": ";
    switch (issue.kind) {
      case IssueKind::OutOfGrid: throw Error(ErrorCode::OutOfGrid, where + issue.detail);
      case IssueKind::NonMonotoneFrames: throw Error(ErrorCode::NonMonotoneFrames, where + issue.detail);
      case IssueKind::EmptySequence: throw Error(ErrorCode::EmptySequence, where + issue.detail);
      default: throw Error(ErrorCode::MalformedRecord, where + issue.detail);
    }
  }
  return seq;
}

DetectionSequence load_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return parse_detections(in, path.string());
}

void write_detections(const DetectionSequence& seq, std::ostream& out) {
  json header;
  header["sequence_id"] = seq.sequence_id;
  header["label"] = seq.label ? json(*seq.label) : json(nullptr);
  header["grid"] = {seq.grid.width, seq.grid.height};
  header["model_arity"] = seq.model_arity;
  out << header.dump() << '\n';
  for (const auto& frame : seq.frames) {
    json persons = json::array();
    for (const auto& person : frame.persons) {
      json parts = json::object();
      for (std::size_t s = 0; s < kPartCount; ++s) {
        if (person.candidates[s].empty()) continue;
        json cands = json::array();
        for (const auto& c : person.candidates[s]) cands.push_back({{"x", c.x}, {"y", c.y}, {"score", c.score}});
        parts[std::string(part_key(static_cast<PartId>(s)))] = std::move(cands);
      }
      persons.push_back({{"id", person.id}, {"parts", std::move(parts)}});
    }
    json record;
    record["frame"] = frame.frame_index;
    record["persons"] = std::move(persons);
    out << record.dump() << '\n';
  }
}

void save_detections(const DetectionSequence& seq, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_detections(seq, out);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

SymbolSequence parse_symbols(std::istream& in, const std::string& source) {
  std::string text;
  std::size_t line = 0;
  json header;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      header = json::parse(text);
    } catch (const json::parse_error& e) {
      malformed(source, line, std::string("invalid header: ") + e.what());
    }
    break;
  }
  if (header.is_null()) throw Error(ErrorCode::EmptySequence, source + ": empty symbol file");
  if (!header.is_object()) malformed(source, line, "header is not a JSON object");
  if (header.contains("version") &&
      (!header["version"].is_number_integer() || header["version"].get<int>() != kSymbolFormatVersion))
    throw Error(ErrorCode::VersionMismatch,
                source + ": symbol format version " + header["version"].dump() + " is not supported");
  for (const char* key : {"p", "n", "M"}) {
    if (!header.contains(key) || !header[key].is_number_unsigned())
      malformed(source, line, std::string("header lacks non-negative integer '") + key + "'");
  }
  const auto p = header["p"].get<std::uint64_t>();
  const auto n = header["n"].get<std::uint64_t>();
  const auto frames = header["M"].get<std::uint64_t>();
  if (p < 1 || p > kMaxAlphabet) malformed(source, line, "alphabet size p must be in [1, 4096]");
  if (frames == 0) throw Error(ErrorCode::EmptySequence, source + ": symbol file declares M = 0");
  if (n == 0) malformed(source, line, "n must be positive");

  SymbolSequence seq(header.value("sequence_id", std::string()), static_cast<std::uint32_t>(p), n, frames);
  if (header.contains("label") && header["label"].is_string()) seq.set_label(header["label"].get<std::string>());

  std::size_t m = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (m >= frames) malformed(source, line, "more frame rows than the declared M = " + std::to_string(frames));
    auto row = seq.row(m);
    const char* cur = text.data();
    const char* end = text.data() + text.size();
    std::size_t j = 0;
    while (true) {
      while (cur < end && (*cur == ' ' || *cur == '\t' || *cur == '\r')) ++cur;
      if (cur == end) break;
      std::uint64_t value = 0;
      const char* start = cur;
      while (cur < end && *cur >= '0' && *cur <= '9') value = value * 10 + static_cast<std::uint64_t>(*cur++ - '0');
      if (cur == start || value > 0xFFFF) malformed(source, line, "expected a non-negative symbol");
      if (value >= p)
        malformed(source, line, "symbol " + std::to_string(value) + " outside alphabet of size " + std::to_string(p));
      if (j >= n) malformed(source, line, "row has more than n = " + std::to_string(n) + " symbols");
      row[j++] = static_cast<Symbol>(value);
    }
    if (j != n) malformed(source, line, "row has " + std::to_string(j) + " symbols, expected " + std::to_string(n));
    ++m;
  }
  if (m != frames)
    malformed(source, line, "found " + std::to_string(m) + " frame rows, header declares " + std::to_string(frames));
  return seq;
}

SymbolSequence load_symbols(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return parse_symbols(in, path.string());
}

void write_symbols(const SymbolSequence& seq, std::ostream& out) {
  if (seq.frames() == 0) throw Error(ErrorCode::EmptySequence, "cannot write a symbol sequence with no frames");
  json header;
  header["version"] = kSymbolFormatVersion;
  header["sequence_id"] = seq.sequence_id();
  if (seq.label()) header["label"] = *seq.label();
  header["p"] = seq.alphabet();
  header["n"] = seq.realizations();
  header["M"] = seq.frames();
  out << header.dump() << '\n';
  std::string buf;
  for (std::size_t m = 0; m < seq.frames(); ++m) {
    buf.clear();
    for (const Symbol s : seq.row(m)) {
      if (!buf.empty()) buf.push_back(' ');
      buf += std::to_string(s);
    }
    buf.push_back('\n');
    out << buf;
  }
}

void save_symbols(const SymbolSequence& seq, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  write_symbols(seq, out);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace soda::ingest
