#ifndef DCCI_IO_HPP
#define DCCI_IO_HPP

// File formats: dataset CSV (x_0..,y_0.. header), joint-table CSV (y0,y1,..
// header, one row per x state), metadata sidecars and the model JSON document.
// Numbers are written in shortest round-trip form, so save/load is exact.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcci/datasets.hpp"
#include "dcci/discrete.hpp"
#include "dcci/inference.hpp"
#include "dcci/trainer.hpp"

namespace dcci::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v);

/// Writes to a temporary file next to `path`, then renames over it.
void write_text_atomic(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

void write_csv(const fs::path& path, const std::vector<std::string>& header, const MatrixXd& rows);

struct CsvTable {
  std::vector<std::string> header;
  MatrixXd rows;
};
CsvTable read_csv(const fs::path& path);

void save_dataset(const fs::path& path, const PairDataset& data);
/// Loads a dataset CSV; the metadata sidecar is read when present.
PairDataset load_dataset(const fs::path& path);
fs::path meta_path(const fs::path& data_path);

void save_joint(const fs::path& path, const JointDistribution<double>& joint);
JointDistribution<double> load_joint(const fs::path& path);

json matrix_to_json(const MatrixXd& m);  // {"rows", "cols", "data" (row-major)}
MatrixXd matrix_from_json(const json& j);

json to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const json& j);
json to_json(const FeatureNetwork<double>& net);
FeatureNetwork<double> network_from_json(const json& j);
json to_json(const InferenceModel& inf);  // without the networks
InferenceModel inference_from_json(const json& j, const TrainedModel& model);

json to_json(const TrainedModel& model, const InferenceModel* inf = nullptr);
TrainedModel model_from_json(const json& j);

void save_model(const fs::path& path, const TrainedModel& model, const InferenceModel* inf = nullptr);
TrainedModel load_model(const fs::path& path);
/// The inference section of a model file, if it has one.
std::optional<InferenceModel> load_inference(const fs::path& path, const TrainedModel& model);

}  // namespace dcci::io

#endif  // DCCI_IO_HPP
