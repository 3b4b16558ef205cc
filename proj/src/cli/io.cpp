#include "lacp/cli/io.hpp"

#include "lacp/error.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace lacp::io {

using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

bool looks_like_header(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r+");
      const auto e = cell.find_last_not_of(" \t\r");
      if (b == std::string::npos) return true;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e + 1, v);
      if (ec != std::errc{} || ptr != cell.data() + e + 1) return true;
    }
    return false;
  }
  return false;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<SynthHeader> parse_synth_header(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::optional<SynthHeader> header;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) != 0) break;
    std::istringstream words(line.substr(1));
    std::string word;
    std::map<std::string, std::string> fields;
    while (words >> word) {
      const auto eq = word.find('=');
      if (eq != std::string::npos) fields[word.substr(0, eq)] = word.substr(eq + 1);
    }
    if (fields.contains("kind")) {
      if (!header) header.emplace();
      header->kind = fields["kind"];
    }
    if (fields.contains("attribute_stats")) {
      if (!header) header.emplace();
      std::istringstream parts(fields["attribute_stats"]);
      std::string part;
      std::size_t c = 0;
      while (std::getline(parts, part, ';') && c < 3) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) throw Error("malformed attribute_stats comment");
        header->attribute_stats[c++] = {std::stod(part.substr(0, colon)), std::stod(part.substr(colon + 1))};
      }
      if (c != 3) throw Error("attribute_stats comment must list three columns");
    }
  }
  return header;
}

TransformFamily ModelFile::make_family() const {
  if (family.kind == FamilyKind::fixed) return TransformFamily::fixed();
  return TransformFamily(family.kind, localizer, options);
}

json to_json(const LocalizerNet& net) {
  json layers = json::array();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weights(l);
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      rows.push_back(std::move(row));
    }
    const auto b = net.bias(l);
    layers.push_back({{"weights", std::move(rows)}, {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  return {{"layer_dims", net.layer_dims()}, {"layers", std::move(layers)}};
}

LocalizerNet localizer_from_json(const json& j) {
  LocalizerNet net(j.at("layer_dims").get<std::vector<std::size_t>>());
  const auto& layers = j.at("layers");
  if (layers.size() != net.num_layers()) throw Error("model: localizer layer count mismatch");
  Eigen::VectorXd params = net.params();
  LocalizerNet staged(net.layer_dims(), params);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto w = staged.weights(l);
    const auto& rows = layers[l].at("weights");
    if (rows.size() != static_cast<std::size_t>(w.rows())) throw Error("model: weight shape mismatch");
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (row.size() != static_cast<std::size_t>(w.cols())) throw Error("model: weight shape mismatch");
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    auto b = staged.bias(l);
    const auto& bias = layers[l].at("bias");
    if (bias.size() != static_cast<std::size_t>(b.size())) throw Error("model: bias shape mismatch");
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = bias[static_cast<std::size_t>(i)].get<double>();
  }
  net.set_params(staged.params());
  return net;
}

json to_json(const NormalizationStats& stats) {
  json out = json::array();
  for (const auto& s : stats) out.push_back({s.mean, s.sd});
  return out;
}

NormalizationStats stats_from_json(const json& j) {
  NormalizationStats stats;
  for (const auto& e : j) stats.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return stats;
}

json to_json(const ModelFile& m) {
  json j;
  j["format_version"] = kFormatVersion;
  j["family"] = std::string(to_string(m.family.kind));
  j["training"] = m.family.kind == FamilyKind::fixed ? "none" : (m.family.error_fit ? "error-fit" : "size");
  j["gamma"] = m.options.gamma;
  j["log_offset"] = m.options.log_offset;
  j["epsilon_floor"] = m.options.epsilon_floor;
  j["localizer"] = m.localizer ? to_json(*m.localizer) : json(nullptr);
  j["normalization_stats"] = to_json(m.stats);
  j["knn_k"] = m.knn_k;
  j["split"] = {{"seed", m.split.seed}, {"fractions", m.split.fractions}};
  j["train"] = {{"seed", m.train.seed},
                {"epochs", m.train.epochs},
                {"batch_size", m.train.batch_size},
                {"learning_rate", m.train.learning_rate},
                {"patience", m.train.patience},
                {"best_epoch", m.best_epoch}};
  j["data_digest"] = m.data_digest;
  return j;
}

ModelFile model_from_json(const json& j) {
  if (j.value("format_version", 0) != kFormatVersion) throw Error("model: unsupported format_version");
  ModelFile m;
  m.family.kind = family_from_string(j.at("family").get<std::string>());
  m.family.error_fit = j.value("training", std::string("size")) == "error-fit";
  m.options.gamma = j.value("gamma", m.options.gamma);
  m.options.log_offset = j.value("log_offset", m.options.log_offset);
  m.options.epsilon_floor = j.value("epsilon_floor", m.options.epsilon_floor);
  if (!j.at("localizer").is_null()) m.localizer = localizer_from_json(j.at("localizer"));
  m.stats = stats_from_json(j.at("normalization_stats"));
  m.knn_k = j.at("knn_k").get<std::size_t>();
  m.split.seed = j.at("split").at("seed").get<std::uint64_t>();
  m.split.fractions = j.at("split").at("fractions").get<std::array<double, 4>>();
  const auto& t = j.at("train");
  m.train.family = m.family;
  m.train.seed = t.value("seed", std::uint64_t{0});
  m.train.epochs = t.value("epochs", m.train.epochs);
  m.train.batch_size = t.value("batch_size", m.train.batch_size);
  m.train.learning_rate = t.value("learning_rate", m.train.learning_rate);
  m.train.patience = t.value("patience", m.train.patience);
  m.best_epoch = t.value("best_epoch", std::size_t{0});
  m.data_digest = j.value("data_digest", std::string());
  return m;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  write_atomic(path, to_json(model).dump(1) + "\n");
}

ModelFile load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw Error("model " + path.string() + ": " + e.what());
  }
}

json Manifest::to_json() const {
  json j;
  j["format_version"] = kFormatVersion;
  j["tool"] = "lacp";
  j["tool_version"] = "0.1.0";
  j["command"] = command;
  j["config"] = config;
  json in = json::array();
  for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  j["inputs"] = std::move(in);
  json out = json::array();
  for (const auto& p : outputs) {
    out.push_back({{"path", p.string()}, {"sha256", std::filesystem::exists(p) ? sha256_file(p) : ""}});
  }
  j["outputs"] = std::move(out);
  return j;
}

std::filesystem::path manifest_path(const std::filesystem::path& primary_output) {
  auto p = primary_output;
  p += ".manifest.json";
  return p;
}

void write_manifest(const std::filesystem::path& primary_output, const Manifest& manifest) {
  write_atomic(manifest_path(primary_output), manifest.to_json().dump(2) + "\n");
}

std::string trace_csv(const TrainTrace& trace) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss\n";
  out << 0 << ",," << format_double(trace.initial_val_loss) << "\n";
  for (const auto& e : trace.epochs) {
    out << e.epoch << "," << format_double(e.train_loss) << "," << format_double(e.val_loss) << "\n";
  }
  return out.str();
}

std::string report_csv(std::span<const ProtocolRow> rows) {
  std::ostringstream out;
  out << "dataset,family,alpha,run_seed,mean_size,validity,error\n";
  for (const auto& r : rows) {
    std::string err = r.error.value_or("");
    for (auto& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    out << r.dataset << "," << r.family << "," << format_double(r.alpha) << "," << r.run_seed << ","
        << (r.error ? "" : format_double(r.mean_size)) << "," << (r.error ? "" : format_double(r.validity)) << ","
        << err << "\n";
  }
  return out.str();
}

std::string table_text(std::string_view dataset, std::span<const AggregateRow> table) {
  std::vector<double> alphas;
  std::vector<std::string> families;
  for (const auto& r : table) {
    if (std::find(alphas.begin(), alphas.end(), r.alpha) == alphas.end()) alphas.push_back(r.alpha);
    if (std::find(families.begin(), families.end(), r.family) == families.end()) families.push_back(r.family);
  }
  auto cell = [](double mean, double sd) {
    std::ostringstream s;
    s << std::setprecision(3) << mean << " ± " << std::setprecision(3) << sd;
    return s.str();
  };
  std::ostringstream out;
  out << "| " << dataset << " |";
  for (double a : alphas) out << " size (α=" << a << ") | val (α=" << a << ") |";
  out << "\n|---|";
  for (std::size_t i = 0; i < alphas.size(); ++i) out << "---|---|";
  out << "\n";
  for (const auto& f : families) {
    out << "| " << f << " |";
    for (double a : alphas) {
      const auto it = std::find_if(table.begin(), table.end(),
                                   [&](const AggregateRow& r) { return r.family == f && r.alpha == a; });
      if (it == table.end() || it->runs == 0) {
        out << " n/a | n/a |";
      } else {
        out << " " << cell(it->size_mean, it->size_sd) << " | " << cell(it->validity_mean, it->validity_sd) << " |";
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace lacp::io
