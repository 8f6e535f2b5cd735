#include "pcsid/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "pcsid/errors.hpp"

namespace pcsid {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

CsvTable parse_csv(const std::string& text) {
  CsvTable out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty input");
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) out.header.push_back(cell);
  }
  const std::size_t cols = out.header.size();
  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t count = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (;;) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      const auto res = std::from_chars(p, comma, v);
      if (res.ec != std::errc() || res.ptr != comma) {
        throw ConfigError("csv: bad number on data line " + std::to_string(rows + 1));
      }
      flat.push_back(v);
      ++count;
      if (comma == end) break;
      p = comma + 1;
    }
    if (count != cols) throw ConfigError("csv: line " + std::to_string(rows + 1) + " has wrong column count");
    ++rows;
  }
  out.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * cols + c];
    }
  }
  return out;
}

std::string to_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw DimensionMismatchError("to_csv: header and column count differ");
  }
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) out += ',';
      out += format_number(values(r, c));
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

Eigen::MatrixXd with_time(const Eigen::VectorXd& t, const Eigen::MatrixXd& values) {
  Eigen::MatrixXd out(t.size(), values.cols() + 1);
  out.col(0) = t;
  out.rightCols(values.cols()) = values;
  return out;
}

json trajectory_entry(const std::string& stem, const TrajectoryDataset& d) {
  json j;
  j["markers"] = stem + ".csv";
  j["torques"] = stem + "_torques.csv";
  if (d.has_states()) j["states"] = stem + "_states.csv";
  j["actuation"] = to_string(d.actuation);
  j["frames"] = d.num_frames();
  j["dt"] = d.dt;
  return j;
}

void write_trajectory(const fs::path& dir, const std::string& stem, const TrajectoryDataset& d) {
  write_text_atomic(dir / (stem + ".csv"), markers_to_csv(d));
  write_text_atomic(dir / (stem + "_torques.csv"), torques_to_csv(d));
  if (d.has_states()) write_text_atomic(dir / (stem + "_states.csv"), states_to_csv(d));
}

TrajectoryDataset read_trajectory(const fs::path& dir, const json& entry) {
  const std::string states = entry.contains("states") ? read_text(dir / entry.at("states").get<std::string>()) : "";
  TrajectoryDataset d = dataset_from_csv(read_text(dir / entry.at("markers").get<std::string>()),
                                         read_text(dir / entry.at("torques").get<std::string>()), states,
                                         actuation_kind_from_string(entry.at("actuation").get<std::string>()));
  d.dt = entry.at("dt").get<double>();
  return d;
}

}  // namespace

std::string markers_to_csv(const TrajectoryDataset& d) {
  const int N = d.num_markers();
  Eigen::MatrixXd v(static_cast<Eigen::Index>(d.num_frames()) * N, 6);
  for (int k = 0; k < d.num_frames(); ++k) {
    for (int j = 0; j < N; ++j) {
      const Eigen::Index r = static_cast<Eigen::Index>(k) * N + j;
      v.row(r) << d.times[k], j, d.s[j], d.markers(k, 3 * j), d.markers(k, 3 * j + 1), d.markers(k, 3 * j + 2);
    }
  }
  return to_csv({"t", "marker_index", "s", "x", "y", "theta"}, v);
}

std::string torques_to_csv(const TrajectoryDataset& d) {
  std::vector<std::string> header{"t"};
  for (const std::string& h : numbered("tau_", d.torques.cols())) header.push_back(h);
  return to_csv(header, with_time(d.times, d.torques));
}

std::string states_to_csv(const TrajectoryDataset& d) {
  if (!d.has_states()) throw InvalidArgumentError("states_to_csv: dataset has no states");
  const Eigen::Index n = d.q.cols();
  std::vector<std::string> header{"t"};
  for (const char* p : {"q_", "qd_", "qdd_"}) {
    for (const std::string& h : numbered(p, n)) header.push_back(h);
  }
  Eigen::MatrixXd v(d.q.rows(), 3 * n);
  v << d.q, d.qd, d.qdd;
  return to_csv(header, with_time(d.times, v));
}

TrajectoryDataset dataset_from_csv(const std::string& markers, const std::string& torques,
                                   const std::string& states, ActuationKind actuation) {
  const CsvTable m = parse_csv(markers);
  if (m.values.cols() != 6) throw ConfigError("marker csv needs 6 columns");
  const Eigen::Index rows = m.values.rows();
  if (rows == 0) throw ConfigError("marker csv has no rows");
  int N = 0;
  while (N < rows && m.values(N, 1) == N) ++N;
  if (N == 0 || rows % N != 0) throw ConfigError("marker csv rows are not frame-major");
  const Eigen::Index T = rows / N;
  TrajectoryDataset d;
  d.actuation = actuation;
  std::vector<double> s(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) s[static_cast<std::size_t>(j)] = m.values(j, 2);
  d.s = BackboneAbscissas(s);
  d.times.resize(T);
  d.markers.resize(T, 3 * N);
  for (Eigen::Index k = 0; k < T; ++k) {
    d.times[k] = m.values(k * N, 0);
    for (int j = 0; j < N; ++j) {
      const Eigen::Index r = k * N + j;
      if (m.values(r, 1) != j) throw ConfigError("marker csv rows are not frame-major");
      d.markers.block(k, 3 * j, 1, 3) = m.values.block(r, 3, 1, 3);
    }
  }
  d.dt = T > 1 ? d.times[1] - d.times[0] : 0.0;
  const CsvTable tau = parse_csv(torques);
  if (tau.values.rows() != T) throw ConfigError("torque csv frame count differs from markers");
  d.torques = tau.values.rightCols(tau.values.cols() - 1);
  if (!states.empty()) {
    const CsvTable st = parse_csv(states);
    const Eigen::Index n = (st.values.cols() - 1) / 3;
    if (st.values.rows() != T || st.values.cols() != 3 * n + 1) throw ConfigError("state csv shape mismatch");
    d.q = st.values.middleCols(1, n);
    d.qd = st.values.middleCols(1 + n, n);
    d.qdd = st.values.middleCols(1 + 2 * n, n);
  }
  d.validate();
  return d;
}

std::string pac_to_csv(const PacDataset& pac) {
  std::vector<std::string> header{"sample", "kappa0", "kappa1"};
  for (int j = 0; j < pac.s.size(); ++j) {
    for (const char* c : {"x_", "y_", "theta_"}) header.push_back(c + std::to_string(j));
  }
  Eigen::MatrixXd v(pac.markers.rows(), 3 + pac.markers.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) v(r, 0) = static_cast<double>(r);
  v.col(1) = pac.kappa0;
  v.col(2) = pac.kappa1;
  v.rightCols(pac.markers.cols()) = pac.markers;
  return to_csv(header, v);
}

PacDataset pac_from_csv(const std::string& text, const BackboneAbscissas& s) {
  const CsvTable t = parse_csv(text);
  if (t.values.cols() != 3 + 3 * s.size()) throw ConfigError("pac csv column count does not match markers");
  PacDataset pac;
  pac.s = s;
  pac.kappa0 = t.values.col(1);
  pac.kappa1 = t.values.col(2);
  pac.markers = t.values.rightCols(3 * s.size());
  return pac;
}

void write_experiment(const fs::path& dir, const ExperimentConfig& config, const ExperimentData& data) {
  json m;
  m["schema_version"] = kDatasetSchemaVersion;
  m["config"] = json::parse(config_to_json(config));
  m["config"].erase("output_dir");
  m["seed"] = config.seed;
  if (data.pac) {
    m["marker_abscissas"] = data.pac->s.values();
    m["pac"] = {{"poses", "pac.csv"}, {"count", data.pac->markers.rows()}, {"length", config.dataset.pac.length}};
    write_text_atomic(dir / "pac.csv", pac_to_csv(*data.pac));
  } else {
    const RobotGeometry geom = true_geometry(config);
    m["geometry"] = {{"segment_lengths", geom.segment_lengths()}, {"radius", config.physical.radius}};
    m["marker_abscissas"] = data.test.s.values();
    json train = json::array();
    for (std::size_t k = 0; k < data.train.size(); ++k) {
      const std::string stem = "train_" + std::to_string(k);
      write_trajectory(dir, stem, data.train[k]);
      train.push_back(trajectory_entry(stem, data.train[k]));
    }
    m["train"] = train;
    write_trajectory(dir, "test", data.test);
    m["test"] = trajectory_entry("test", data.test);
  }
  write_text_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

StoredExperiment read_experiment(const fs::path& dir) {
  json m;
  try {
    m = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  if (m.value("schema_version", -1) != kDatasetSchemaVersion) {
    throw ConfigError("manifest: unsupported schema_version");
  }
  StoredExperiment out;
  try {
    out.config = config_from_json(m.at("config").dump());
    if (m.contains("pac")) {
      const BackboneAbscissas s(m.at("marker_abscissas").get<std::vector<double>>());
      out.data.pac = pac_from_csv(read_text(dir / m.at("pac").at("poses").get<std::string>()), s);
    } else {
      for (const json& e : m.at("train")) out.data.train.push_back(read_trajectory(dir, e));
      out.data.test = read_trajectory(dir, m.at("test"));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  return out;
}

std::string fusion_to_json(const FusionResult& f) {
  json j;
  j["num_segments"] = f.num_segments();
  j["segment_lengths"] = f.segment_lengths;
  j["abscissas"] = f.abscissas;
  j["kept_markers"] = f.kept_markers;
  j["iterations"] = f.iterations;
  json profiles = json::array();
  for (const DistanceProfile& p : f.profiles) {
    profiles.push_back({{"iteration", p.iteration},
                        {"boundaries", p.boundaries},
                        {"distances", std::vector<double>(p.distances.data(), p.distances.data() + p.distances.size())}});
  }
  j["profiles"] = profiles;
  return j.dump(2) + "\n";
}

std::string pareto_to_csv(const std::vector<ParetoPoint>& points) {
  std::string out = "h,num_segments,e_p_body,e_theta_body,segment_lengths\n";
  for (const ParetoPoint& p : points) {
    out += format_number(p.h) + ',' + std::to_string(p.num_segments) + ',' + format_number(p.e_p_body) + ',' +
           format_number(p.e_theta_body) + ',';
    for (std::size_t i = 0; i < p.segment_lengths.size(); ++i) {
      if (i) out += ';';
      out += format_number(p.segment_lengths[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace pcsid
