#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "koopid/dynamics.hpp"
#include "koopid/edmd.hpp"
#include "koopid/errors.hpp"
#include "koopid/identify.hpp"
#include "koopid/metrics.hpp"
#include "koopid/types.hpp"
#include "koopid/vector_field.hpp"

namespace koopid::io {

using nlohmann::json;

// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& text, const char* what_for) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw IoError(std::string("cannot parse '") + text + "' as a number in " +
                  what_for);
  return v;
}

// Write via a temporary file and rename, so readers never observe partial
// content.
inline void write_text_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// --- Simulation protocol ----------------------------------------------------

inline json protocol_to_json(const SimulationProtocol& p) {
  json box = json::array();
  for (const auto& iv : p.initial_box) box.push_back({iv.lo, iv.hi});
  json j{{"initial_box", box},
         {"trajectories", p.trajectories},
         {"snapshot_times", p.snapshot_times},
         {"substeps", p.substeps},
         {"seed", p.seed},
         {"sigma_meas", p.sigma_meas},
         {"sigma_proc", p.sigma_proc},
         {"input_signal", p.input_signal}};
  if (!p.noise_dims.empty()) j["noise_dims"] = p.noise_dims;
  return j;
}

inline SimulationProtocol protocol_from_json(const json& j) {
  SimulationProtocol p;
  for (const auto& iv : j.at("initial_box"))
    p.initial_box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
  p.trajectories = j.at("trajectories").get<int>();
  p.snapshot_times = j.at("snapshot_times").get<std::vector<double>>();
  p.substeps = j.at("substeps").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.sigma_meas = j.at("sigma_meas").get<double>();
  p.sigma_proc = j.at("sigma_proc").get<double>();
  p.input_signal = j.value("input_signal", std::string{});
  p.noise_dims = j.value("noise_dims", std::vector<int>{});
  return p;
}

// --- Vector fields ----------------------------------------------------------

inline json field_to_json(const PolynomialVectorField& field) {
  const MonomialBasis& basis = field.basis();
  json order = json::array();
  for (int k = 1; k <= basis.size(); ++k) order.push_back(basis.exponents(k));
  json coeffs = json::array();
  for (Index j = 0; j < field.coefficients.rows(); ++j) {
    json row = json::array();
    for (Index k = 0; k < field.coefficients.cols(); ++k)
      row.push_back(field.coefficients(j, k));
    coeffs.push_back(std::move(row));
  }
  return json{{"dim", field.dim},
              {"n_vars", field.n_vars},
              {"degree", field.degree},
              {"monomial_order", std::move(order)},
              {"coefficients", std::move(coeffs)}};
}

// Accepts any subset of monomials in any order; listed coefficients are
// placed at their canonical graded-lexicographic positions.
inline PolynomialVectorField field_from_json(const json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    const int n_vars = j.value("n_vars", dim);
    const int degree = j.at("degree").get<int>();
    const MonomialBasis basis(n_vars, degree);
    const auto& order = j.at("monomial_order");
    const auto& coeffs = j.at("coefficients");
    if (static_cast<Index>(coeffs.size()) != dim)
      throw IoError("field: one coefficient row per component required");
    Matrix table = Matrix::Zero(dim, basis.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const MultiIndex s = order[pos].get<MultiIndex>();
      const int k = basis.index_of(s);
      for (int row = 0; row < dim; ++row) {
        const auto& row_json = coeffs[static_cast<std::size_t>(row)];
        if (row_json.size() != order.size())
          throw IoError("field: coefficient row length must match monomial_order");
        table(row, k - 1) += row_json[pos].get<double>();
      }
    }
    return make_vector_field(dim, n_vars, degree, std::move(table));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed field JSON: ") + e.what());
  }
}

inline void write_field(const std::filesystem::path& path,
                        const PolynomialVectorField& field,
                        std::optional<json> extra = std::nullopt) {
  json j = field_to_json(field);
  if (extra)
    for (auto& [key, value] : extra->items()) j[key] = value;
  write_text_atomic(path, j.dump(2) + "\n");
}

inline PolynomialVectorField read_field(const std::filesystem::path& path) {
  return field_from_json(read_json(path));
}

// --- Datasets ---------------------------------------------------------------
//
// dataset.csv: header `traj_id,t,x_1..x_n[,u_1..u_p]`, one row per snapshot,
// consecutive rows with the same traj_id chained into pairs. The writer
// emits one two-row group per pair so that the x side stays noise-free while
// the y side carries the measurement noise. dataset.json: sampling period,
// dimensions, seed, and the generating protocol when known.

inline std::string dataset_csv_name() { return "dataset.csv"; }
inline std::string dataset_sidecar_name() { return "dataset.json"; }

inline void write_dataset(const std::filesystem::path& dir,
                          const SnapshotDataset& ds,
                          std::optional<json> protocol = std::nullopt,
                          std::optional<std::uint64_t> seed = std::nullopt) {
  const int n = ds.dim(), p = ds.input_dim();
  std::ostringstream csv;
  csv << "traj_id,t";
  for (int i = 1; i <= n; ++i) csv << ",x_" << i;
  for (int i = 1; i <= p; ++i) csv << ",u_" << i;
  csv << "\n";
  for (Index k = 0; k < ds.size(); ++k) {
    const double t0 = ds.t0.size() ? ds.t0[k] : 0.0;
    for (int side = 0; side < 2; ++side) {
      csv << k << "," << format_double(side == 0 ? t0 : t0 + ds.sampling_period);
      const auto& state = side == 0 ? ds.x : ds.y;
      for (int i = 0; i < n; ++i) csv << "," << format_double(state(k, i));
      for (int i = 0; i < p; ++i) csv << "," << format_double(ds.u(k, i));
      csv << "\n";
    }
  }
  write_text_atomic(dir / dataset_csv_name(), csv.str());

  json sidecar{{"T_s", ds.sampling_period},
               {"dim", n},
               {"input_dim", p},
               {"pairs", ds.size()}};
  if (seed) sidecar["seed"] = *seed;
  if (protocol) sidecar["protocol"] = *protocol;
  write_text_atomic(dir / dataset_sidecar_name(), sidecar.dump(2) + "\n");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

inline SnapshotDataset read_dataset(const std::filesystem::path& where) {
  namespace fs = std::filesystem;
  fs::path csv_path = where;
  if (fs::is_directory(where)) csv_path = where / dataset_csv_name();
  if (!fs::exists(csv_path)) throw IoError("dataset not found: " + csv_path.string());
  fs::path sidecar_path = csv_path;
  sidecar_path.replace_extension(".json");

  std::optional<double> ts;
  std::optional<int> dim, input_dim;
  if (fs::exists(sidecar_path)) {
    const json meta = read_json(sidecar_path);
    if (meta.contains("T_s")) ts = meta["T_s"].get<double>();
    if (meta.contains("dim")) dim = meta["dim"].get<int>();
    if (meta.contains("input_dim")) input_dim = meta["input_dim"].get<int>();
  }

  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset file " + csv_path.string());
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "traj_id" || header[1] != "t")
    throw IoError("dataset header must start with traj_id,t,x_1,...");
  int n = 0, p = 0;
  for (std::size_t i = 2; i < header.size(); ++i) {
    if (header[i] == "x_" + std::to_string(n + 1) && p == 0)
      ++n;
    else if (header[i] == "u_" + std::to_string(p + 1))
      ++p;
    else
      throw IoError("unexpected dataset column '" + header[i] + "'");
  }
  if (n == 0) throw IoError("dataset has no state columns");
  if (dim && *dim != n)
    throw IoError("sidecar dim disagrees with the dataset header");
  if (input_dim && *input_dim != p)
    throw IoError("sidecar input_dim disagrees with the dataset header");

  struct Row {
    std::string traj;
    double t;
    Vector state;
    Vector input;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << csv_path.string() << ":" << line_no << ": expected "
          << header.size() << " fields, found " << fields.size();
      throw IoError(msg.str());
    }
    Row row;
    row.traj = fields[0];
    row.t = parse_double(fields[1], "column t");
    row.state.resize(n);
    row.input.resize(p);
    for (int i = 0; i < n; ++i)
      row.state[i] = parse_double(fields[static_cast<std::size_t>(2 + i)], "state column");
    for (int i = 0; i < p; ++i)
      row.input[i] =
          parse_double(fields[static_cast<std::size_t>(2 + n + i)], "input column");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw IoError("dataset needs at least two snapshot rows");

  // Chain consecutive rows that share a traj_id into pairs.
  std::vector<Index> pair_of;  // indices of x rows
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    if (rows[i].traj == rows[i + 1].traj) pair_of.push_back(static_cast<Index>(i));
  if (pair_of.empty())
    throw IoError("no snapshot pairs: no consecutive rows share a traj_id");

  double spacing = ts.value_or(rows[static_cast<std::size_t>(pair_of[0]) + 1].t -
                               rows[static_cast<std::size_t>(pair_of[0])].t);
  if (!(spacing > 0.0)) throw IoError("dataset sampling period must be positive");
  const Index k_count = static_cast<Index>(pair_of.size());
  Matrix x(k_count, n), y(k_count, n), u(k_count, p);
  Vector t0(k_count);
  for (Index k = 0; k < k_count; ++k) {
    const Row& a = rows[static_cast<std::size_t>(pair_of[static_cast<std::size_t>(k)])];
    const Row& b = rows[static_cast<std::size_t>(pair_of[static_cast<std::size_t>(k)]) + 1];
    if (std::abs((b.t - a.t) - spacing) > 1e-6 * std::max(1.0, spacing)) {
      std::ostringstream msg;
      msg << "snapshot spacing " << (b.t - a.t) << " at t = " << a.t
          << " differs from the sampling period " << spacing;
      throw IoError(msg.str());
    }
    x.row(k) = a.state;
    y.row(k) = b.state;
    if (p > 0) u.row(k) = a.input;
    t0[k] = a.t;
  }
  try {
    return make_dataset(std::move(x), std::move(y), spacing, std::move(u),
                        std::move(t0));
  } catch (const Error& e) {
    throw IoError("invalid dataset in " + csv_path.string() + ": " + e.what());
  }
}

// --- Identification results --------------------------------------------------

inline json result_to_json(const IdentificationResult& result) {
  json j = field_to_json(result.field);
  j.erase("n_vars");
  json diag{{"residual", result.residual},
            {"dropped_rows", result.dropped_rows},
            {"koopman_residual", result.koopman.residual},
            {"rank_P_x", result.koopman.rank_p_x},
            {"underdetermined", result.koopman.underdetermined},
            {"min_real_eigenvalue", result.koopman.spectrum.min_real_eigenvalue},
            {"max_abs_imag_log", result.koopman.spectrum.max_abs_imag_log},
            {"n_vars", result.field.n_vars},
            {"input_dim", result.field.n_vars - result.field.dim},
            {"warnings", result.warnings}};
  if (result.scales.size() > 0)
    diag["rescaling"] = std::vector<double>(
        result.scales.data(), result.scales.data() + result.scales.size());
  if (result.input_row_coefficients.rows() > 0) {
    json rows = json::array();
    for (Index r = 0; r < result.input_row_coefficients.rows(); ++r) {
      json row = json::array();
      for (Index c = 0; c < result.input_row_coefficients.cols(); ++c)
        row.push_back(result.input_row_coefficients(r, c));
      rows.push_back(std::move(row));
    }
    diag["input_row_coefficients"] = std::move(rows);
  }
  j["sigma_proc_hat"] =
      result.sigma_proc_hat ? json(*result.sigma_proc_hat) : json(nullptr);
  j["diagnostics"] = std::move(diag);
  return j;
}

// --- Metrics / CSV helpers ----------------------------------------------------

inline json coefficient_error_to_json(const CoefficientError& err) {
  return json{{"rmse", err.rmse}, {"nrmse", err.nrmse}};
}

inline json link_score_to_json(const LinkScore& score) {
  return json{{"tpr", score.tpr ? json(*score.tpr) : json(nullptr)},
              {"fpr", score.fpr ? json(*score.fpr) : json(nullptr)}};
}

// Fig-2-style coefficient comparison: one row per coefficient index.
inline std::string scatter_csv(const PolynomialVectorField& exact,
                               const PolynomialVectorField& estimated) {
  std::ostringstream csv;
  csv << "index,w_exact,w_estimated\n";
  const Vector ve = vec(exact.coefficients.transpose());
  const Vector vm = vec(estimated.coefficients.transpose());
  for (Index i = 0; i < ve.size(); ++i)
    csv << (i + 1) << "," << format_double(ve[i]) << "," << format_double(vm[i])
        << "\n";
  return csv.str();
}

inline std::string roc_csv(const std::vector<RocPoint>& points) {
  std::ostringstream csv;
  csv << "threshold,tpr,fpr\n";
  for (const auto& pt : points) {
    csv << format_double(pt.threshold) << ",";
    if (pt.tpr) csv << format_double(*pt.tpr);
    csv << ",";
    if (pt.fpr) csv << format_double(*pt.fpr);
    csv << "\n";
  }
  return csv.str();
}

}  // namespace koopid::io
