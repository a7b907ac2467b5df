#include "ewer/checkpoint.hpp"

#include <cstring>
#include <vector>

#include <json.hpp>

#include "ewer/errors.hpp"
#include "ewer/util.hpp"

namespace ewer {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'E', 'W', 'E', 'R', 'M', 'O', 'D', 'L'};
constexpr std::uint8_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.append(reinterpret_cast<const char*>(&v), 2);
}
void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}
void put_blob(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size())
      throw input_error("ChecksumMismatch", "truncated checkpoint");
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v;
    std::memcpy(&v, data.data() + pos, 2);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::string blob() {
    std::uint32_t len = u32();
    need(len);
    std::string s = data.substr(pos, len);
    pos += len;
    return s;
  }
};

json layout_json(const BlockLayout& layout) {
  json arr = json::array();
  for (const auto& [name, dim] : layout.blocks) arr.push_back({name, dim});
  return arr;
}

BlockLayout layout_from_json(const json& arr) {
  BlockLayout layout;
  for (const auto& entry : arr)
    layout.blocks.emplace_back(entry.at(0).get<std::string>(),
                               entry.at(1).get<int>());
  return layout;
}

void append_tensors(std::string& out, const ModelParams& params,
                    const std::string& prefix) {
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const std::string name = prefix + params.tensor_names[i];
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    const Eigen::MatrixXd& t = params.tensors[i];
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        const double v = t(r, c);
        out.append(reinterpret_cast<const char*>(&v), 8);
      }
  }
}

struct Container {
  json config;
  std::string class_json;
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> tensors;
};

Container read_container(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() < 8 || std::memcmp(raw.data(), kMagic, 8) != 0)
    throw input_error("UnsupportedFormat", path + ": not a model checkpoint");
  if (static_cast<std::uint8_t>(raw[8]) != kVersion)
    throw input_error("VersionMismatch",
                      path + ": unsupported checkpoint version");
  if (raw.size() < 13)
    throw input_error("ChecksumMismatch", path + ": truncated checkpoint");

  std::uint32_t stored;
  std::memcpy(&stored, raw.data() + raw.size() - 4, 4);
  const std::string payload = raw.substr(0, raw.size() - 4);
  if (crc32_str(payload) != stored)
    throw input_error("ChecksumMismatch", path + ": CRC32 does not match");

  Reader rd{payload, 9};
  Container c;
  const std::string config_blob = rd.blob();
  c.config = json::parse(config_blob, nullptr, false);
  if (c.config.is_discarded())
    throw input_error("ParseError", path + ": bad config blob");
  c.class_json = rd.blob();

  const std::uint32_t n_tensors = rd.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::uint16_t name_len = rd.u16();
    rd.need(name_len);
    std::string name = payload.substr(rd.pos, name_len);
    rd.pos += name_len;
    const std::uint32_t rows = rd.u32();
    const std::uint32_t cols = rd.u32();
    rd.need(static_cast<std::size_t>(rows) * cols * 8);
    Eigen::MatrixXd t(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t col = 0; col < cols; ++col) {
        double v;
        std::memcpy(&v, payload.data() + rd.pos, 8);
        rd.pos += 8;
        t(r, col) = v;
      }
    c.names.push_back(std::move(name));
    c.tensors.push_back(std::move(t));
  }
  return c;
}

// Rebuilds a head from stored pieces, verifying names and shapes against
// the skeleton the config implies.
ModelParams assemble(const ModelConfig& config, const BlockLayout& layout,
                     const std::vector<std::string>& names,
                     std::vector<Eigen::MatrixXd> tensors) {
  ModelParams params = init(config, layout, 0);
  if (names.size() != params.tensor_names.size())
    throw input_error("ShapeMismatch",
                      "checkpoint holds " + std::to_string(names.size()) +
                          " tensors, config implies " +
                          std::to_string(params.tensor_names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] != params.tensor_names[i])
      throw input_error("ShapeMismatch", "unexpected tensor '" + names[i] +
                                             "', wanted '" +
                                             params.tensor_names[i] + "'");
    if (tensors[i].rows() != params.tensors[i].rows() ||
        tensors[i].cols() != params.tensors[i].cols())
      throw input_error(
          "ShapeMismatch",
          "tensor '" + names[i] + "' is " + std::to_string(tensors[i].rows()) +
              "x" + std::to_string(tensors[i].cols()) + ", wanted " +
              std::to_string(params.tensors[i].rows()) + "x" +
              std::to_string(params.tensors[i].cols()));
    params.tensors[i] = std::move(tensors[i]);
  }
  return params;
}

std::string container_payload(const json& config_blob,
                              const std::string& class_json,
                              const std::vector<const ModelParams*>& heads,
                              const std::vector<std::string>& prefixes) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  out.push_back(static_cast<char>(kVersion));
  put_blob(out, config_blob.dump());
  put_blob(out, class_json);
  std::size_t n_tensors = 0;
  for (const ModelParams* head : heads) n_tensors += head->tensors.size();
  put_u32(out, static_cast<std::uint32_t>(n_tensors));
  for (std::size_t h = 0; h < heads.size(); ++h)
    append_tensors(out, *heads[h], prefixes[h]);
  return out;
}

void write_with_crc(std::string payload, const std::string& path) {
  const std::uint32_t crc = crc32_str(payload);
  payload.append(reinterpret_cast<const char*>(&crc), 4);
  write_file(path, payload);
}

}  // namespace

void save_model(const ModelParams& params, const std::string& path) {
  json config;
  config["task"] = "single";
  config["layout"] = layout_json(params.layout);
  config["config"] = json::parse(model_config_to_json(params.config));
  write_with_crc(container_payload(config, classmap_to_json(params.class_map),
                                   {&params}, {""}),
                 path);
}

ModelParams load_model(const std::string& path) {
  Container c = read_container(path);
  if (c.config.value("task", "") != "single")
    throw input_error("TaskMismatch", path + ": not a single-task checkpoint");
  const ModelConfig config =
      model_config_from_json(c.config.at("config").dump());
  const BlockLayout layout = layout_from_json(c.config.at("layout"));
  ModelParams params =
      assemble(config, layout, c.names, std::move(c.tensors));
  params.class_map = classmap_from_json(c.class_json);
  if (params.class_map.k() != config.k)
    throw input_error("ShapeMismatch",
                      path + ": class map k does not match config");
  return params;
}

void save_double_model(const ModelParams& err, const ModelParams& n,
                       const std::string& path) {
  json config;
  config["task"] = "double";
  config["layout"] = layout_json(err.layout);
  config["err"] = json::parse(model_config_to_json(err.config));
  config["n"] = json::parse(model_config_to_json(n.config));

  json ladders;
  ladders["err_ladder"] = err.ladder;
  ladders["n_ladder"] = n.ladder;

  write_with_crc(
      container_payload(config, ladders.dump(), {&err, &n}, {"err/", "n/"}),
      path);
}

std::pair<ModelParams, ModelParams> load_double_model(const std::string& path) {
  Container c = read_container(path);
  if (c.config.value("task", "") != "double")
    throw input_error("TaskMismatch", path + ": not a double-task checkpoint");
  const BlockLayout layout = layout_from_json(c.config.at("layout"));
  const ModelConfig err_config =
      model_config_from_json(c.config.at("err").dump());
  const ModelConfig n_config = model_config_from_json(c.config.at("n").dump());

  json ladders = json::parse(c.class_json, nullptr, false);
  if (ladders.is_discarded())
    throw input_error("ParseError", path + ": bad ladder blob");

  auto split = [&](const std::string& prefix) {
    std::pair<std::vector<std::string>, std::vector<Eigen::MatrixXd>> out;
    for (std::size_t i = 0; i < c.names.size(); ++i) {
      if (c.names[i].rfind(prefix, 0) != 0) continue;
      out.first.push_back(c.names[i].substr(prefix.size()));
      out.second.push_back(std::move(c.tensors[i]));
    }
    return out;
  };

  auto [err_names, err_tensors] = split("err/");
  auto [n_names, n_tensors] = split("n/");
  ModelParams err =
      assemble(err_config, layout, err_names, std::move(err_tensors));
  ModelParams n = assemble(n_config, layout, n_names, std::move(n_tensors));
  err.ladder = ladders.at("err_ladder").get<std::vector<double>>();
  n.ladder = ladders.at("n_ladder").get<std::vector<double>>();
  if (static_cast<int>(err.ladder.size()) != err_config.k ||
      static_cast<int>(n.ladder.size()) != n_config.k)
    throw input_error("ShapeMismatch", path + ": ladder does not match config");
  return {std::move(err), std::move(n)};
}

ModelConfig::Task checkpoint_task(const std::string& path) {
  Container c = read_container(path);
  const std::string task = c.config.value("task", "");
  if (task == "single") return ModelConfig::Task::single;
  if (task == "double") return ModelConfig::Task::double_task;
  throw input_error("ParseError", path + ": unknown task '" + task + "'");
}

}  // namespace ewer
