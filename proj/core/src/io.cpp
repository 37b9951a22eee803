#include "vfpid/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace vfpid {

using nlohmann::json;

namespace {

constexpr std::size_t kPThetaSidecarThreshold = 500;  // externalize when n*p exceeds this

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  return in;
}

void write_provenance(std::ofstream& out, const Provenance* provenance) {
  if (provenance) out << provenance->comment_line() << "\n";
}

double parse_double(const std::string& field, const std::filesystem::path& path,
                    std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw io_error(path.string() + ":" + std::to_string(line_no) + ": cannot parse number '" +
                   field + "'");
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

const char* method_name(FitMethod method) {
  switch (method) {
    case FitMethod::ols: return "ols";
    case FitMethod::wls1: return "wls-1";
    case FitMethod::wls_iterated: return "wls-iterated";
  }
  return "ols";
}

FitMethod method_from_name(const std::string& name) {
  if (name == "ols") return FitMethod::ols;
  if (name == "wls-1") return FitMethod::wls1;
  if (name == "wls-iterated") return FitMethod::wls_iterated;
  throw io_error("unknown fit method '" + name + "'");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json values = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  return values;
}

Eigen::MatrixXd matrix_from_json(const json& values, Eigen::Index rows, Eigen::Index cols,
                                 const std::string& what) {
  if (static_cast<Eigen::Index>(values.size()) != rows * cols)
    throw io_error(what + ": expected " + std::to_string(rows * cols) + " entries, got " +
                   std::to_string(values.size()));
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(i++)];
  return m;
}

void write_f64_sidecar(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  // Row-major little-endian doubles (the build targets little-endian hosts).
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

Eigen::MatrixXd read_f64_sidecar(const std::filesystem::path& path, Eigen::Index rows,
                                 Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open sidecar " + path.string());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      if (!in) throw io_error("sidecar " + path.string() + " truncated");
      m(r, c) = v;
    }
  return m;
}

json model_to_json(const VfpArModel& model, const std::filesystem::path& json_path) {
  json doc;
  doc["format"] = "vfpid-model";
  doc["order"] = model.order;
  doc["fs"] = model.fs;
  doc["method"] = method_name(model.method);
  doc["converged"] = model.converged;
  doc["wls_iterations"] = model.wls_iterations;
  doc["basis"] = json::parse(basis_to_json(model.basis));
  doc["theta"] = matrix_to_json(model.theta);
  json states = json::array();
  for (const auto& s : model.training_states) states.push_back({s.airspeed, s.aoa});
  doc["training_states"] = states;
  json sigma2 = json::array();
  for (Eigen::Index i = 0; i < model.sigma2_by_state.size(); ++i)
    sigma2.push_back(model.sigma2_by_state(i));
  doc["sigma2"] = sigma2;
  doc["gamma_e"] = matrix_to_json(model.gamma_e);
  doc["warnings"] = model.warnings;

  if (model.p_theta.size() > 0) {
    if (model.n_params() > kPThetaSidecarThreshold) {
      const std::filesystem::path sidecar =
          json_path.parent_path() / (json_path.stem().string() + ".p_theta.f64");
      write_f64_sidecar(sidecar, model.p_theta);
      doc["p_theta_file"] = sidecar.filename().string();
    } else {
      doc["p_theta"] = matrix_to_json(model.p_theta);
    }
  }
  return doc;
}

VfpArModel model_from_json(const json& doc, const std::filesystem::path& json_path) {
  if (doc.value("format", "") != "vfpid-model")
    throw io_error(json_path.string() + ": not a vfpid model document");
  VfpArModel model;
  model.order = doc.at("order").get<int>();
  model.fs = doc.at("fs").get<double>();
  model.method = method_from_name(doc.value("method", "ols"));
  model.converged = doc.value("converged", true);
  model.wls_iterations = doc.value("wls_iterations", 0);
  model.basis = basis_from_json(doc.at("basis").dump());
  const auto p = static_cast<Eigen::Index>(model.basis.dimension());
  model.theta = matrix_from_json(doc.at("theta"), model.order, p, "theta");
  for (const auto& s : doc.at("training_states"))
    model.training_states.push_back(FlightState{s.at(0).get<double>(), s.at(1).get<double>()});
  const auto m = static_cast<Eigen::Index>(model.training_states.size());
  model.sigma2_by_state = matrix_from_json(doc.at("sigma2"), m, 1, "sigma2");
  model.gamma_e = matrix_from_json(doc.at("gamma_e"), m, m, "gamma_e");
  if (doc.contains("warnings")) model.warnings = doc["warnings"].get<std::vector<std::string>>();
  const auto np = static_cast<Eigen::Index>(model.n_params());
  if (doc.contains("p_theta_file"))
    model.p_theta = read_f64_sidecar(
        json_path.parent_path() / doc["p_theta_file"].get<std::string>(), np, np);
  else if (doc.contains("p_theta"))
    model.p_theta = matrix_from_json(doc["p_theta"], np, np, "p_theta");
  return model;
}

}  // namespace

std::string Provenance::comment_line() const {
  return "# " + tool + " " + version + " config=" + config_hash;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

SignalPool load_pool_csv(const std::filesystem::path& path, const PoolCsvSchema& schema) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;

  // Header (first non-comment line) maps column names to positions.
  std::map<std::string, std::size_t> columns;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    for (std::size_t i = 0; i < fields.size(); ++i) columns[fields[i]] = i;
    break;
  }
  for (const std::string& name : {schema.k1, schema.k2, schema.fs, schema.t, schema.y})
    if (!columns.count(name))
      throw io_error(path.string() + ": missing column '" + name + "' in header");
  const std::size_t c_k1 = columns[schema.k1], c_k2 = columns[schema.k2];
  const std::size_t c_fs = columns[schema.fs], c_t = columns[schema.t];
  const std::size_t c_y = columns[schema.y];
  const std::size_t width = columns.size();

  std::vector<SignalRecord> records;
  SignalRecord* current = nullptr;
  long expected_t = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (fields.size() < width)
      throw io_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                     std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    FlightState state{parse_double(fields[c_k1], path, line_no),
                      parse_double(fields[c_k2], path, line_no)};
    const double fs = parse_double(fields[c_fs], path, line_no);
    const double t = parse_double(fields[c_t], path, line_no);
    const double y = parse_double(fields[c_y], path, line_no);

    if (!current || !(current->state == state)) {
      records.push_back(SignalRecord{state, {}, fs});
      current = &records.back();
      expected_t = 0;
    }
    if (static_cast<long>(t) != expected_t || t != std::floor(t))
      throw io_error(path.string() + ":" + std::to_string(line_no) +
                     ": sample index must increase contiguously from 0 within a state group");
    if (fs != current->fs)
      throw io_error(path.string() + ":" + std::to_string(line_no) +
                     ": sampling rate changed within a state group");
    current->samples.push_back(y);
    ++expected_t;
  }
  if (records.empty()) throw io_error(path.string() + ": no data rows");
  try {
    return make_pool(std::move(records));
  } catch (const std::invalid_argument& err) {
    throw io_error(path.string() + ": " + err.what());
  }
}

void save_pool_csv(const SignalPool& pool, const std::filesystem::path& path,
                   const Provenance* provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "k1,k2,fs,t,y\n";
  for (const auto& record : pool.records) {
    const std::string prefix = format_double(record.state.airspeed) + "," +
                               format_double(record.state.aoa) + "," +
                               format_double(record.fs) + ",";
    for (std::size_t t = 0; t < record.samples.size(); ++t)
      out << prefix << t << "," << format_double(record.samples[t]) << "\n";
  }
}

void save_energy_csv(const EnergyStats& stats, const std::filesystem::path& path,
                     const Provenance* provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "window_index,t_start_s,mean,std,ci_lo,ci_hi\n";
  for (std::size_t w = 0; w < stats.means.size(); ++w) {
    const double t_start = static_cast<double>(w) * stats.window_s;
    out << w << "," << format_double(t_start) << "," << format_double(stats.means[w]) << ","
        << format_double(stats.std_devs[w]) << ","
        << format_double(stats.means[w] - stats.ci_half_widths[w]) << ","
        << format_double(stats.means[w] + stats.ci_half_widths[w]) << "\n";
  }
}

void save_psd_csv(const PsdEstimate& psd, const std::filesystem::path& path,
                  const Provenance* provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "# window=" << psd.window << " overlap=" << format_double(psd.overlap)
      << " resolution_hz=" << format_double(psd.resolution) << "\n";
  out << "freq_hz,psd\n";
  for (std::size_t i = 0; i < psd.freqs.size(); ++i)
    out << format_double(psd.freqs[i]) << "," << format_double(psd.values[i]) << "\n";
}

void save_stabilization_csv(const std::vector<StabilizationEntry>& diagram,
                            const std::filesystem::path& path, const Provenance* provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "order,frequency_hz,damping,stable\n";
  for (const auto& entry : diagram)
    for (std::size_t m = 0; m < entry.modes.size(); ++m)
      out << entry.order << "," << format_double(entry.modes[m].frequency_hz) << ","
          << format_double(entry.modes[m].damping_ratio) << "," << (entry.stable[m] ? 1 : 0)
          << "\n";
}

void save_selection_csv(const SelectionReport& report, const std::filesystem::path& path,
                        const Provenance* provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "n,p,bic,rss_sss,whiteness_pass_fraction\n";
  for (const auto& trial : report.trials)
    out << trial.order << "," << trial.p << "," << format_double(trial.bic) << ","
        << format_double(trial.rss_sss) << ","
        << format_double(trial.whiteness_pass_fraction) << "\n";
}

void save_selection_summary_json(const SelectionReport& report,
                                 const std::filesystem::path& path,
                                 const Provenance* provenance) {
  json doc;
  if (provenance) {
    doc["tool"] = provenance->tool;
    doc["version"] = provenance->version;
    doc["config"] = provenance->config_hash;
  }
  if (report.chosen) {
    doc["chosen"]["n"] = report.chosen->first;
    doc["chosen"]["p"] = report.chosen->second;
  } else {
    doc["chosen"] = nullptr;
    doc["diagnostic"] = report.diagnostic;
  }
  doc["trials"] = report.trials.size();
  std::ofstream out = open_out(path);
  out << doc.dump(2) << "\n";
}

std::string basis_to_json(const BasisSpec& spec) {
  json doc;
  doc["family"] = "chebyshev2";
  json pairs = json::array();
  for (const auto& pair : spec.pairs) pairs.push_back({pair[0], pair[1]});
  doc["pairs"] = pairs;
  doc["ranges"]["k1"] = {spec.ranges.k1[0], spec.ranges.k1[1]};
  doc["ranges"]["k2"] = {spec.ranges.k2[0], spec.ranges.k2[1]};
  return doc.dump();
}

BasisSpec basis_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw io_error(std::string("basis json: ") + err.what());
  }
  if (doc.value("family", "") != "chebyshev2")
    throw io_error("basis json: unsupported family '" + doc.value("family", "") + "'");
  BasisSpec spec;
  for (const auto& pair : doc.at("pairs"))
    spec.pairs.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
  spec.ranges.k1 = {doc.at("ranges").at("k1").at(0).get<double>(),
                    doc.at("ranges").at("k1").at(1).get<double>()};
  spec.ranges.k2 = {doc.at("ranges").at("k2").at(0).get<double>(),
                    doc.at("ranges").at("k2").at(1).get<double>()};
  validate_basis(spec);
  return spec;
}

void save_model_json(const VfpArModel& model, const std::filesystem::path& path,
                     const Provenance* provenance) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  json doc = model_to_json(model, path);
  if (provenance) {
    doc["tool"] = provenance->tool;
    doc["version"] = provenance->version;
    doc["config"] = provenance->config_hash;
  }
  std::ofstream out = open_out(path);
  out << doc.dump(2) << "\n";
}

VfpArModel load_model_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& err) {
    throw io_error(path.string() + ": " + err.what());
  }
  return model_from_json(doc, path);
}

void save_simspec_json(const SimSpec& spec, const std::filesystem::path& path,
                       const Provenance* provenance) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  json doc;
  doc["format"] = "vfpid-simspec";
  doc["model"] = model_to_json(spec.model, path);
  json states = json::array();
  for (const auto& s : spec.states) states.push_back({s.airspeed, s.aoa});
  doc["states"] = states;
  doc["n_samples"] = spec.n_samples;
  doc["burn_in"] = spec.burn_in;
  doc["seed"] = spec.seed;
  if (spec.innovation_gamma.size() > 0)
    doc["innovation_gamma"] = matrix_to_json(spec.innovation_gamma);
  if (provenance) {
    doc["tool"] = provenance->tool;
    doc["version"] = provenance->version;
    doc["config"] = provenance->config_hash;
  }
  std::ofstream out = open_out(path);
  out << doc.dump(2) << "\n";
}

SimSpec load_simspec_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& err) {
    throw io_error(path.string() + ": " + err.what());
  }
  if (doc.value("format", "") != "vfpid-simspec")
    throw io_error(path.string() + ": not a vfpid simspec document");
  SimSpec spec;
  spec.model = model_from_json(doc.at("model"), path);
  for (const auto& s : doc.at("states"))
    spec.states.push_back(FlightState{s.at(0).get<double>(), s.at(1).get<double>()});
  spec.n_samples = doc.at("n_samples").get<std::size_t>();
  spec.burn_in = doc.value("burn_in", std::size_t{0});
  spec.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("innovation_gamma")) {
    const auto m = static_cast<Eigen::Index>(spec.states.size());
    spec.innovation_gamma = matrix_from_json(doc["innovation_gamma"], m, m, "innovation_gamma");
  }
  return spec;
}

void save_frf_surface(const FrfSurface& surface, const std::filesystem::path& csv_path,
                      const Provenance* provenance) {
  std::ofstream out = open_out(csv_path);
  write_provenance(out, provenance);
  const std::string swept = surface.variable == SweepVariable::airspeed ? "k1" : "k2";
  out << swept;
  for (double f : surface.freq_axis) out << "," << format_double(f);
  out << "\n";
  for (Eigen::Index r = 0; r < surface.magnitudes_db.rows(); ++r) {
    out << format_double(surface.state_axis[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < surface.magnitudes_db.cols(); ++c)
      out << "," << format_double(surface.magnitudes_db(r, c));
    out << "\n";
  }

  const bool any_extrapolated =
      std::any_of(surface.extrapolated.begin(), surface.extrapolated.end(),
                  [](bool b) { return b; });
  const std::filesystem::path mask_path =
      csv_path.parent_path() / (csv_path.stem().string() + ".mask.csv");
  if (any_extrapolated) {
    std::ofstream mask = open_out(mask_path);
    mask << swept;
    for (double f : surface.freq_axis) mask << "," << format_double(f);
    mask << "\n";
    for (std::size_t r = 0; r < surface.state_axis.size(); ++r) {
      mask << format_double(surface.state_axis[r]);
      const int flag = surface.extrapolated[r] ? 1 : 0;
      for (std::size_t c = 0; c < surface.freq_axis.size(); ++c) mask << "," << flag;
      mask << "\n";
    }
  }

  json meta;
  meta["swept_variable"] = swept;
  meta["fixed_variable"] = surface.variable == SweepVariable::airspeed ? "k2" : "k1";
  meta["fixed_value"] = surface.fixed_value;
  meta["rows"] = surface.state_axis.size();
  meta["cols"] = surface.freq_axis.size();
  meta["freq_resolution_hz"] =
      surface.freq_axis.size() > 1 ? surface.freq_axis[1] - surface.freq_axis[0] : 0.0;
  meta["state_resolution"] =
      surface.state_axis.size() > 1 ? surface.state_axis[1] - surface.state_axis[0] : 0.0;
  meta["units"] = "dB";
  meta["layout"] = "rows: swept states, columns: frequencies";
  if (any_extrapolated) meta["mask_file"] = mask_path.filename().string();
  if (provenance) {
    meta["tool"] = provenance->tool;
    meta["version"] = provenance->version;
    meta["config"] = provenance->config_hash;
  }
  std::ofstream meta_out =
      open_out(csv_path.parent_path() / (csv_path.stem().string() + ".meta.json"));
  meta_out << meta.dump(2) << "\n";
}

void save_frozen_csv(const FrozenModel& frozen, double ci_level,
                     const std::filesystem::path& path, const Provenance* provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "# sigma2=" << format_double(frozen.model.sigma2) << " ci_level="
      << format_double(ci_level) << " stable=" << (frozen.stable ? 1 : 0)
      << " extrapolated=" << (frozen.extrapolated ? 1 : 0)
      << " sigma2_interpolated=" << (frozen.sigma2_interpolated ? 1 : 0) << "\n";
  out << "coefficient,estimate,half_width,ci_lo,ci_hi\n";
  for (std::size_t i = 0; i < frozen.bands.size(); ++i) {
    const auto& band = frozen.bands[i];
    out << "a" << (i + 1) << "," << format_double(band.estimate) << ","
        << format_double(band.half_width) << "," << format_double(band.estimate - band.half_width)
        << "," << format_double(band.estimate + band.half_width) << "\n";
  }
}

void save_validation_csv(const ValidationReport& report, const std::filesystem::path& path,
                         const Provenance* provenance) {
  std::ofstream out = open_out(path);
  write_provenance(out, provenance);
  out << "k1,k2,pass,exceed_fraction,bound,skewness,excess_kurtosis,excluded\n";
  for (std::size_t i = 0; i < report.states.size(); ++i) {
    out << format_double(report.states[i].airspeed) << ","
        << format_double(report.states[i].aoa) << ","
        << (report.excluded[i] ? 0 : (report.whiteness[i].pass ? 1 : 0)) << ","
        << format_double(report.whiteness[i].exceed_fraction) << ","
        << format_double(report.whiteness[i].bound) << ","
        << format_double(report.normality[i].skewness) << ","
        << format_double(report.normality[i].excess_kurtosis) << ","
        << (report.excluded[i] ? 1 : 0) << "\n";
  }
}

}  // namespace vfpid
