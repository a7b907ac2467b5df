#include "ewer/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ewer/errors.hpp"
#include "ewer/util.hpp"

namespace ewer {

namespace {

using nlohmann::json;

json parse_line(const std::string& line, const std::string& path,
                std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw input_error("ParseError", path + " line " + std::to_string(lineno) +
                                        ": not a JSON object");
  return j;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

Corpus load_corpus(const std::string& path, const NormalizerConfig& normalizer) {
  std::ifstream in(path);
  if (!in) throw input_error("IoFailure", "cannot open " + path);

  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    Utterance u;
    try {
      u.id = j.at("id").get<std::string>();
      u.reference = normalize(j.at("reference").get<std::string>(), normalizer);
      u.hypothesis =
          normalize(j.at("hypothesis").get<std::string>(), normalizer);
      if (j.contains("duration")) u.duration = j.at("duration").get<double>();
      if (j.contains("audio") && j.at("audio").is_string())
        u.audio_path = j.at("audio").get<std::string>();
    } catch (const json::exception& e) {
      throw input_error("ParseError", path + " line " +
                                          std::to_string(lineno) + ": " +
                                          e.what());
    }
    if (u.duration < 0.0)
      throw input_error("ParseError", path + " line " + std::to_string(lineno) +
                                          ": negative duration");
    if (!seen.insert(u.id).second)
      throw input_error("DuplicateId",
                        path + " line " + std::to_string(lineno) +
                            ": duplicate utterance id '" + u.id + "'");
    corpus.push_back(std::move(u));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::string out;
  for (const auto& u : corpus) {
    json j;
    j["id"] = u.id;
    j["reference"] = join(u.reference);
    j["hypothesis"] = join(u.hypothesis);
    j["duration"] = u.duration;
    if (!u.audio_path.empty()) j["audio"] = u.audio_path;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<InjectedEdits> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("IoFailure", "cannot open " + path);
  std::vector<InjectedEdits> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    InjectedEdits e;
    try {
      e.id = j.at("id").get<std::string>();
      e.insertions = j.at("injected_i").get<long>();
      e.deletions = j.at("injected_d").get<long>();
      e.substitutions = j.at("injected_s").get<long>();
    } catch (const json::exception& ex) {
      throw input_error("ParseError", path + " line " +
                                          std::to_string(lineno) + ": " +
                                          ex.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

void save_truth(const std::vector<InjectedEdits>& truth,
                const std::string& path) {
  std::string out;
  for (const auto& e : truth) {
    json j;
    j["id"] = e.id;
    j["injected_i"] = e.insertions;
    j["injected_d"] = e.deletions;
    j["injected_s"] = e.substitutions;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace ewer
