#include "dcci/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dcci::io {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericalError("cannot format number");
  return std::string(buf, ptr);
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw ValidationError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const MatrixXd& rows) {
  detail::require(static_cast<Index>(header.size()) == rows.cols(), "write_csv: header/column count mismatch");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (Index r = 0; r < rows.rows(); ++r) {
    for (Index c = 0; c < rows.cols(); ++c) {
      if (c) out += ',';
      out += format_double(rows(r, c));
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& cell, const fs::path& path, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    std::ostringstream os;
    os << path.string() << ":" << line_no << ": not a number: '" << cell << "'";
    throw ValidationError(os.str());
  }
  return v;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  t.header = split(line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": expected " << t.header.size() << " columns, got " << cells.size();
      throw ValidationError(os.str());
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path, line_no));
    rows.push_back(std::move(row));
  }
  t.rows.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) t.rows(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return t;
}

fs::path meta_path(const fs::path& data_path) {
  fs::path p = data_path;
  p += ".meta.json";
  return p;
}

void save_dataset(const fs::path& path, const PairDataset& data) {
  data.validate();
  std::vector<std::string> header;
  for (Index i = 0; i < data.dx(); ++i) header.push_back("x_" + std::to_string(i));
  for (Index i = 0; i < data.dy(); ++i) header.push_back("y_" + std::to_string(i));
  MatrixXd rows(data.size(), data.dx() + data.dy());
  rows << data.x, data.y;
  write_csv(path, header, rows);
  write_text_atomic(meta_path(path), data.meta.dump(2) + "\n");
}

PairDataset load_dataset(const fs::path& path) {
  const CsvTable t = read_csv(path);
  Index dx = 0;
  Index dy = 0;
  for (const auto& name : t.header) {
    const bool is_x = name.rfind("x_", 0) == 0;
    const bool is_y = name.rfind("y_", 0) == 0;
    const std::string expected = is_x ? "x_" + std::to_string(dx) : "y_" + std::to_string(dy);
    if ((!is_x && !is_y) || (is_x && dy > 0) || name != expected) {
      throw ValidationError(path.string() + ": header must be x_0,...,x_{dx-1},y_0,...,y_{dy-1}; got '" + name + "'");
    }
    (is_x ? dx : dy) += 1;
  }
  detail::require(dx >= 1 && dy >= 1, path.string() + ": need at least one x and one y column");
  PairDataset d;
  d.x = t.rows.leftCols(dx);
  d.y = t.rows.rightCols(dy);
  d.validate();
  if (fs::exists(meta_path(path))) {
    d.meta = json::parse(read_text(meta_path(path)));
  } else {
    d.meta = {{"generator", "file"}, {"source", path.string()}};
  }
  return d;
}

void save_joint(const fs::path& path, const JointDistribution<double>& joint) {
  std::vector<std::string> header;
  for (Index y = 0; y < joint.ny(); ++y) header.push_back("y" + std::to_string(y));
  write_csv(path, header, joint.table());
}

JointDistribution<double> load_joint(const fs::path& path) {
  const CsvTable t = read_csv(path);
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] != "y" + std::to_string(c)) {
      throw ValidationError(path.string() + ": joint header must be y0,y1,...; got '" + t.header[c] + "'");
    }
  }
  detail::require(t.rows.rows() >= 1, path.string() + ": joint table has no rows");
  return JointDistribution<double>(t.rows);
}

json matrix_to_json(const MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  detail::require(rows >= 0 && cols >= 0 && static_cast<Index>(data.size()) == rows * cols,
                  "matrix JSON: data length does not match shape");
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

namespace {

json inverse_mode_json(const InverseMode& m) {
  return {{"kind", m.kind == InverseMode::Kind::Pseudo ? "pseudo" : "ridge"}, {"value", m.value}};
}

InverseMode inverse_mode_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "pseudo") return InverseMode::pseudo(j.at("value").get<double>());
  if (kind == "ridge") return InverseMode::ridge(j.at("value").get<double>());
  throw ValidationError("unknown inverse mode '" + kind + "'");
}

}  // namespace

json to_json(const TrainConfig& cfg) {
  return {{"k0", cfg.k0},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"seed", cfg.seed},
          {"inverse_mode", inverse_mode_json(cfg.inverse_mode)},
          {"optimizer", cfg.optimizer == Optimizer::Adam ? "adam" : "gd"},
          {"adam", {{"beta1", cfg.beta1}, {"beta2", cfg.beta2}, {"eps", cfg.adam_eps}}},
          {"hidden_x", cfg.hidden_x},
          {"hidden_y", cfg.hidden_y},
          {"y_identity", cfg.y_identity}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.k0 = j.at("k0").get<Index>();
  cfg.batch_size = j.at("batch_size").get<Index>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<Index>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.inverse_mode = inverse_mode_from_json(j.at("inverse_mode"));
  const auto opt = j.at("optimizer").get<std::string>();
  detail::require(opt == "adam" || opt == "gd", "unknown optimizer '" + opt + "'");
  cfg.optimizer = opt == "adam" ? Optimizer::Adam : Optimizer::GradientDescent;
  cfg.beta1 = j.at("adam").at("beta1").get<double>();
  cfg.beta2 = j.at("adam").at("beta2").get<double>();
  cfg.adam_eps = j.at("adam").at("eps").get<double>();
  cfg.hidden_x = j.at("hidden_x").get<std::vector<Index>>();
  cfg.hidden_y = j.at("hidden_y").get<std::vector<Index>>();
  cfg.y_identity = j.at("y_identity").get<bool>();
  return cfg;
}

json to_json(const FeatureNetwork<double>& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"activation", to_string(l.activation)},
                      {"weight", matrix_to_json(l.weight)},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"input_dim", net.input_dim()}, {"layers", layers}};
}

FeatureNetwork<double> network_from_json(const json& j) {
  FeatureNetwork<double> net(j.at("input_dim").get<Index>());
  for (const auto& lj : j.at("layers")) {
    Layer<double> l;
    l.weight = matrix_from_json(lj.at("weight"));
    const auto bias = lj.at("bias").get<std::vector<double>>();
    l.bias = Eigen::Map<const RowVector<double>>(bias.data(), static_cast<Index>(bias.size()));
    l.activation = activation_from_string(lj.at("activation").get<std::string>());
    detail::require(l.in_dim() == lj.at("in").get<Index>() && l.out_dim() == lj.at("out").get<Index>(),
                    "network JSON: layer shape disagrees with its weight matrix");
    net.add_layer(std::move(l));
  }
  return net;
}

json to_json(const InferenceModel& inf) {
  std::vector<std::string> names;
  for (const auto& t : inf.targets) names.push_back(t.name);
  return {{"direction", to_string(inf.direction)},
          {"target_names", names},
          {"inverse_mode", inverse_mode_json(inf.inverse_mode)},
          {"n_samples", inf.triple.n_samples},
          {"K", matrix_to_json(inf.triple.K)},
          {"L", matrix_to_json(inf.triple.L)},
          {"A", matrix_to_json(inf.triple.A)},
          {"theta", matrix_to_json(inf.theta)}};
}

InferenceModel inference_from_json(const json& j, const TrainedModel& model) {
  CovarianceTriple t;
  t.K = matrix_from_json(j.at("K"));
  t.L = matrix_from_json(j.at("L"));
  t.A = matrix_from_json(j.at("A"));
  t.n_samples = j.at("n_samples").get<Index>();
  std::vector<Target> targets;
  for (const auto& name : j.at("target_names").get<std::vector<std::string>>()) targets.push_back(parse_target(name));
  InferenceModel inf = make_inference(std::move(t), matrix_from_json(j.at("theta")),
                                      direction_from_string(j.at("direction").get<std::string>()),
                                      std::move(targets), inverse_mode_from_json(j.at("inverse_mode")));
  inf.net_f = model.net_f;
  inf.net_g = model.net_g;
  return inf;
}

json to_json(const TrainedModel& model, const InferenceModel* inf) {
  json history = json::array();
  for (std::size_t e = 0; e < model.history.size(); ++e) {
    history.push_back(
        {{"epoch", e}, {"train_loss", model.history[e].train_loss}, {"test_loss", model.history[e].test_loss}});
  }
  json j = {{"format", "dcci-model"},
            {"version", 1},
            {"config", to_json(model.config)},
            {"net_f", to_json(model.net_f)},
            {"net_g", to_json(model.net_g)},
            {"history", history}};
  if (inf) j["inference"] = to_json(*inf);
  return j;
}

TrainedModel model_from_json(const json& j) {
  detail::require(j.value("format", "") == "dcci-model", "not a model file (missing format tag)");
  TrainedModel m;
  m.config = config_from_json(j.at("config"));
  m.net_f = network_from_json(j.at("net_f"));
  m.net_g = network_from_json(j.at("net_g"));
  for (const auto& h : j.at("history")) {
    m.history.push_back({h.at("train_loss").get<double>(), h.at("test_loss").get<double>()});
  }
  detail::require(m.net_f.output_dim() == m.config.k0, "model file: net_f output does not match k0");
  return m;
}

void save_model(const fs::path& path, const TrainedModel& model, const InferenceModel* inf) {
  write_text_atomic(path, to_json(model, inf).dump(1) + "\n");
}

TrainedModel load_model(const fs::path& path) {
  try {
    return model_from_json(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::optional<InferenceModel> load_inference(const fs::path& path, const TrainedModel& model) {
  const json j = json::parse(read_text(path));
  if (!j.contains("inference")) return std::nullopt;
  return inference_from_json(j.at("inference"), model);
}

}  // namespace dcci::io
