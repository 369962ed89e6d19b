#include <bit>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "volfc/errors.hpp"
#include "volfc/lstm.hpp"

namespace volfc {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormat = "volfc-lstm";
// Top-level sections in the order they are written.
constexpr const char* kSections[] = {"format", "version", "scheme", "config", "dims", "params", "history"};

std::string to_hex(double v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, std::bit_cast<std::uint64_t>(v));
  return buf;
}

double from_hex(const std::string& s, std::string_view where) {
  std::uint64_t bits = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), bits, 16);
  if (s.size() != 16 || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("corrupted float '" + s + "' in " + std::string(where));
  }
  return std::bit_cast<double>(bits);
}

const Json& section(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("model stream is missing section '") + key + "'");
  return *it;
}

[[noreturn]] void report_truncation(std::string_view text, const std::string& parse_error) {
  for (const char* key : kSections) {
    const std::string quoted = std::string("\"") + key + "\"";
    if (text.find(quoted) == std::string_view::npos) {
      throw DataError(std::string("truncated model stream: missing section '") + key + "' (" + parse_error + ")");
    }
  }
  throw DataError("malformed model stream: " + parse_error);
}

}  // namespace

void write_model_json(std::ostream& out, const TrainedModel& model) {
  Json j;
  j["format"] = kFormat;
  j["version"] = kModelFormatVersion;
  j["scheme"] = {{"delta_t", model.scheme.delta_t}, {"k", model.scheme.k}};
  const auto& c = model.config;
  j["config"] = {{"lag", c.lag},
                 {"batch_size", c.batch_size},
                 {"epochs", c.epochs},
                 {"hidden_dim", c.hidden_dim},
                 {"learning_rate", to_hex(c.learning_rate)},
                 {"seed", c.seed},
                 {"mape_epsilon", to_hex(c.mape_epsilon)},
                 {"train_rows", model.train_rows}};
  j["dims"] = {{"input_dim", model.params.input_dim}, {"hidden_dim", model.params.hidden_dim}};
  Json params = Json::array();
  for (const auto& block : model.params.blocks()) {
    Json hex = Json::array();
    Json values = Json::array();
    for (double v : block.data) {
      hex.push_back(to_hex(v));
      values.push_back(v);
    }
    params.push_back({{"name", block.name}, {"rows", block.rows}, {"cols", block.cols}, {"hex", hex}, {"values", values}});
  }
  j["params"] = std::move(params);
  Json history = Json::array();
  for (const auto& h : model.history) {
    history.push_back({{"epoch", h.epoch}, {"train_mape", to_hex(h.train_mape)}, {"test_mape", to_hex(h.test_mape)}});
  }
  j["history"] = std::move(history);
  out << j.dump(1) << '\n';
}

std::string serialize_model(const TrainedModel& model) {
  std::ostringstream out;
  write_model_json(out, model);
  return out.str();
}

TrainedModel deserialize_model(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    report_truncation(text, e.what());
  }
  try {
    if (section(j, "format").get<std::string>() != kFormat) throw DataError("not a volfc LSTM model stream");
    const int version = section(j, "version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelFormatVersion) + ")");
    }
    TrainedModel m;
    const auto& s = section(j, "scheme");
    m.scheme = Scheme{s.at("delta_t").get<int>(), s.at("k").get<int>()};
    const auto& c = section(j, "config");
    m.config.lag = c.at("lag").get<int>();
    m.config.batch_size = c.at("batch_size").get<int>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.hidden_dim = c.at("hidden_dim").get<int>();
    m.config.learning_rate = from_hex(c.at("learning_rate").get<std::string>(), "config.learning_rate");
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.mape_epsilon = from_hex(c.at("mape_epsilon").get<std::string>(), "config.mape_epsilon");
    m.train_rows = c.at("train_rows").get<std::size_t>();
    const auto& d = section(j, "dims");
    m.params = LstmParams::zeros(d.at("input_dim").get<Eigen::Index>(), d.at("hidden_dim").get<Eigen::Index>());

    const auto& params = section(j, "params");
    auto blocks = m.params.blocks();
    if (params.size() != blocks.size()) throw DataError("model stream has the wrong number of parameter blocks");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& pj = params[b];
      const auto name = pj.at("name").get<std::string>();
      if (name != blocks[b].name || pj.at("rows").get<Eigen::Index>() != blocks[b].rows ||
          pj.at("cols").get<Eigen::Index>() != blocks[b].cols) {
        throw DataError("parameter block '" + name + "' does not match the declared dimensions");
      }
      const auto& hex = pj.at("hex");
      const auto& values = pj.at("values");
      if (hex.size() != blocks[b].data.size() || values.size() != hex.size()) {
        throw DataError("parameter block '" + name + "' has the wrong length");
      }
      for (std::size_t i = 0; i < hex.size(); ++i) {
        const double v = from_hex(hex[i].get<std::string>(), name);
        if (values[i].get<double>() != v) throw DataError("corrupted float in '" + name + "': hex and decimal disagree");
        blocks[b].data[i] = v;
      }
    }
    for (const auto& h : section(j, "history")) {
      m.history.push_back(EpochRecord{h.at("epoch").get<int>(), from_hex(h.at("train_mape").get<std::string>(), "history"),
                                      from_hex(h.at("test_mape").get<std::string>(), "history")});
    }
    return m;
  } catch (const Json::exception& e) {
    throw DataError(std::string("model stream schema mismatch: ") + e.what());
  }
}

TrainedModel read_model_json(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_model(text);
}

void write_history_csv(std::ostream& out, const TrainedModel& model) {
  out << "epoch,train_mape,test_mape\n";
  for (const auto& h : model.history) {
    out << h.epoch << ',' << format_double(h.train_mape) << ',' << format_double(h.test_mape) << '\n';
  }
}

}  // namespace volfc
