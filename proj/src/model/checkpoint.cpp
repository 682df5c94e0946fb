#include "aan/model/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "aan/errors.hpp"

namespace aan::model {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size},
              {"embed_dim", c.embed_dim},
              {"window", c.window},
              {"features", c.features},
              {"hidden", c.hidden},
              {"classes", c.classes},
              {"dropout", c.dropout},
              {"lambda_tr", c.lambda_tr},
              {"pooling", to_string(c.pooling)},
              {"clamp_relevance", c.clamp_relevance},
              {"transform", to_string(c.transform)},
              {"use_relevance", c.use_relevance},
              {"use_reconstruction", c.use_reconstruction},
              {"aspects", c.aspects},
              {"aspect_has_keywords", c.aspect_has_keywords}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.features = j.at("features").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.classes = j.at("classes").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.lambda_tr = j.at("lambda_tr").get<double>();
  c.pooling = parse_pooling(j.at("pooling").get<std::string>());
  c.clamp_relevance = j.at("clamp_relevance").get<bool>();
  c.transform = parse_transform(j.at("transform").get<std::string>());
  c.use_relevance = j.at("use_relevance").get<bool>();
  c.use_reconstruction = j.at("use_reconstruction").get<bool>();
  c.aspects = j.at("aspects").get<std::array<std::string, 2>>();
  c.aspect_has_keywords = j.at("aspect_has_keywords").get<std::array<bool, 2>>();
  return c;
}

namespace {

json tensor_json(const Tensor& t) {
  return json{{"shape", t.shape().dims()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

void read_into(Tensor& dst, const json& j, const std::string& name) {
  auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape != dst.shape().dims()) {
    throw ParseError("checkpoint tensor \"" + name + "\" has shape " + ad::Shape(shape).str() + ", expected " +
                     dst.shape().str());
  }
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != dst.size()) throw ParseError("checkpoint tensor \"" + name + "\" has the wrong element count");
  std::copy(data.begin(), data.end(), dst.data().begin());
}

}  // namespace

std::string dump_checkpoint(const AAN& model, const std::string& vocab_hash, const json& extra) {
  json j;
  j["format"] = "aan-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = config_to_json(model.config());
  j["vocab_hash"] = vocab_hash;
  json params = json::array();
  for (const auto* p : model.params().all()) {
    params.push_back(json{{"name", p->name}, {"tensor", tensor_json(p->value)}});
  }
  j["parameters"] = params;
  const auto& bn = model.params().bn;
  j["batch_norm"] = json{{"running_mean", tensor_json(bn.running_mean)},
                         {"running_var", tensor_json(bn.running_var)},
                         {"momentum", bn.momentum},
                         {"eps", bn.eps}};
  j["extra"] = extra.is_null() ? json::object() : extra;
  return j.dump(1) + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const AAN& model, const std::string& vocab_hash,
                     const json& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << dump_checkpoint(model, vocab_hash, extra);
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint parse_checkpoint(const std::string& text) {
  try {
    json j = json::parse(text);
    if (j.value("format", "") != "aan-checkpoint") throw ParseError("not an AAN checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
    }
    Checkpoint c;
    c.model = std::make_unique<AAN>(config_from_json(j.at("config")), 0);
    c.vocab_hash = j.at("vocab_hash").get<std::string>();
    c.extra = j.value("extra", json::object());
    auto& params = c.model->params();
    std::size_t seen = 0;
    for (const auto& entry : j.at("parameters")) {
      const auto name = entry.at("name").get<std::string>();
      Parameter* p = nullptr;
      try {
        p = &params.by_name(name);
      } catch (const ConfigError&) {
        throw ParseError("checkpoint has unknown parameter \"" + name + "\"");
      }
      read_into(p->value, entry.at("tensor"), name);
      ++seen;
    }
    if (seen != params.all().size()) throw ParseError("checkpoint is missing parameters");
    const auto& bn = j.at("batch_norm");
    read_into(params.bn.running_mean, bn.at("running_mean"), "bn.running_mean");
    read_into(params.bn.running_var, bn.at("running_var"), "bn.running_var");
    params.bn.momentum = bn.at("momentum").get<double>();
    params.bn.eps = bn.at("eps").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint config: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

void require_vocab_hash(const Checkpoint& ckpt, const std::string& corpus_hash) {
  if (ckpt.vocab_hash != corpus_hash) {
    throw ConfigError("vocabulary hash mismatch: checkpoint " + ckpt.vocab_hash + ", corpus " + corpus_hash);
  }
}

}  // namespace aan::model
