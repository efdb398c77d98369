#ifndef SDEID_IO_HPP
#define SDEID_IO_HPP

#include "sdeid/estimate.hpp"
#include "sdeid/fisher.hpp"
#include "sdeid/metrics.hpp"
#include "sdeid/stationary.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

/**
 * @file io.hpp
 *
 * @brief JSON and CSV serialization plus file helpers.
 *
 * Every reader throws InputError with a location (JSON path or CSV row
 * number) on malformed input. Doubles are written with 17 significant
 * digits so CSV files round-trip exactly.
 */

namespace sdeid::io {

using json = nlohmann::json;

// ---- potentials and models
//   {"kind":"polynomial","d":2,"k":4,"coeffs":[{"alpha":[2,0],"value":1.0},...]}
//   {"kind":"styblinski_tang","d":2,"clip_radius":10.0,"scale":1.0}
json to_json(const Potential& p);
Potential potential_from_json(const json& j);

/// {"potential": {...}, "sigma2": 0.2}
json to_json(const LangevinModel& m);
LangevinModel model_from_json(const json& j);

/**
 * {"kind":"uniform","d":2,"half_length":4} | {"kind":"gaussian","mean":[..],"covariance":[[..],..]}
 * | {"kind":"rademacher","d":2,"level":1} | {"kind":"dirac","point":[..]}
 * | {"kind":"gibbs","steps":5000[,"proposal_scale":s]} | {"kind":"burn_in","steps":100,"dt":0.01,"start_half_length":4}
 * The last two refer to `model`, which must be supplied for them.
 */
json to_json(const InitialDistribution& dist);
InitialDistribution init_from_json(const json& j, const LangevinModel* model);

json to_json(const EstimatorConfig& c);
/// Missing fields keep their defaults; unknown fields are rejected.
EstimatorConfig estimator_config_from_json(const json& j);

json to_json(const EstimationResult& r);
EstimationResult estimation_result_from_json(const json& j);

json to_json(const FisherReport& r);
json to_json(const GapReport& r);
json to_json(const StationarityRecord& r);

/// Multi-index as a JSON array of exponents.
json to_json(const MultiIndex& a);

// ---- numbers

/// Shortest text of at most 17 significant digits that parses back to the same double.
std::string format_double(double v);

// ---- CSV datasets

/// Header `time,sample_id,x1,...,xd`; rows sorted by time then sample_id.
std::string snapshots_to_csv(const SnapshotSeries& s);
SnapshotSeries snapshots_from_csv(const std::string& text);

/// Header `path_id,time,x1,...,xd`; rows sorted by path then time.
std::string trajectories_to_csv(const TrajectorySet& t);
TrajectorySet trajectories_from_csv(const std::string& text);

enum class DatasetKind { Snapshots, Trajectories };

/// Decides from the header line.
DatasetKind detect_dataset(const std::string& text);

// ---- files

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`; creates parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& j);

/// Lower-case hex SHA-256 of `content`.
std::string sha256_hex(const std::string& content);

} // namespace sdeid::io

#endif
