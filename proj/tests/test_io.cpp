#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "vfpid/io.hpp"
#include "vfpid/simulate.hpp"

using namespace vfpid;
using test_helpers::TempDir;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("format_double round-trips at 17 significant digits") {
  for (double v : {0.1, 1.0 / 3.0, 3.141592653589793, -2.5e-17, 565632.0}) {
    const std::string text = format_double(v);
    CHECK(std::stod(text) == v);
  }
}

TEST_CASE("pool csv round trip") {
  TempDir dir("pool");
  std::vector<SignalRecord> records;
  std::mt19937_64 rng(15);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double k1 : {11.0, 15.0}) {
    SignalRecord record{{k1, 3.0}, std::vector<double>(100), 200.0};
    for (double& v : record.samples) v = noise(rng);
    records.push_back(std::move(record));
  }
  const SignalPool pool = make_pool(records);
  const auto path = dir.path() / "pool.csv";
  save_pool_csv(pool, path);
  const SignalPool loaded = load_pool_csv(path);
  CHECK(loaded.records.size() == 2);
  CHECK(loaded.n_samples == 100);
  CHECK(loaded.fs == 200.0);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(loaded.records[s].state == pool.records[s].state);
    CHECK(loaded.records[s].samples == pool.records[s].samples);  // exact doubles
  }
}

TEST_CASE("pool csv accepts 144 states and arbitrary column order") {
  TempDir dir("pool144");
  const auto path = dir.path() / "pool.csv";
  {
    std::ofstream out(path);
    out << "t,y,fs,k2,k1\n";  // permuted header
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 16; ++j)
        for (int t = 0; t < 4; ++t)
          out << t << "," << (0.1 * t + i + j) << ",1000," << j << "," << (9 + i) << "\n";
  }
  const SignalPool pool = load_pool_csv(path);
  CHECK(pool.records.size() == 144);
  CHECK(pool.n_samples == 4);
  CHECK(pool.fs == 1000.0);
}

TEST_CASE("pool csv schema remapping") {
  TempDir dir("schema");
  const auto path = dir.path() / "pool.csv";
  {
    std::ofstream out(path);
    out << "airspeed,aoa,rate,sample,volts\n";
    for (int t = 0; t < 5; ++t) out << "12,3,100," << t << "," << (t * 0.5) << "\n";
    for (int t = 0; t < 5; ++t) out << "13,3,100," << t << "," << (t * 0.25) << "\n";
  }
  PoolCsvSchema schema;
  schema.k1 = "airspeed";
  schema.k2 = "aoa";
  schema.fs = "rate";
  schema.t = "sample";
  schema.y = "volts";
  const SignalPool pool = load_pool_csv(path, schema);
  CHECK(pool.records.size() == 2);
  CHECK(pool.records[1].samples[2] == 0.5);
}

TEST_CASE("pool csv rejects malformed inputs") {
  TempDir dir("badpool");

  const auto lengths = dir.path() / "lengths.csv";
  {
    std::ofstream out(lengths);
    out << "k1,k2,fs,t,y\n";
    for (int t = 0; t < 100; ++t) out << "10,0,200," << t << ",1.0\n";
    for (int t = 0; t < 99; ++t) out << "11,0,200," << t << ",1.0\n";
  }
  CHECK_THROWS_WITH_AS(load_pool_csv(lengths), doctest::Contains("inconsistent lengths"),
                       io_error);

  const auto duplicate = dir.path() / "duplicate.csv";
  {
    std::ofstream out(duplicate);
    out << "k1,k2,fs,t,y\n";
    for (int rep = 0; rep < 2; ++rep)
      for (int t = 0; t < 3; ++t) out << "10,0,200," << t << ",1.0\n";
  }
  CHECK_THROWS_WITH_AS(load_pool_csv(duplicate), doctest::Contains("duplicate"), io_error);

  const auto gap = dir.path() / "gap.csv";
  {
    std::ofstream out(gap);
    out << "k1,k2,fs,t,y\n";
    out << "10,0,200,0,1.0\n10,0,200,2,1.0\n";
  }
  CHECK_THROWS_AS(load_pool_csv(gap), io_error);

  const auto garbage = dir.path() / "garbage.csv";
  {
    std::ofstream out(garbage);
    out << "k1,k2,fs,t,y\n10,0,200,0,not_a_number\n";
  }
  CHECK_THROWS_AS(load_pool_csv(garbage), io_error);

  CHECK_THROWS_AS(load_pool_csv(dir.path() / "missing.csv"), io_error);
}

TEST_CASE("pool csv skips comment lines and records provenance") {
  TempDir dir("prov");
  const auto path = dir.path() / "pool.csv";
  std::vector<SignalRecord> records{{{10.0, 0.0}, {1.0, 2.0, 3.0}, 100.0}};
  Provenance provenance;
  provenance.version = "9.9.9";
  provenance.config_hash = "deadbeef";
  save_pool_csv(make_pool(records), path, &provenance);
  const std::string text = slurp(path);
  CHECK(text.rfind("# vfpid 9.9.9 config=deadbeef", 0) == 0);
  CHECK(load_pool_csv(path).n_samples == 3);
}

TEST_CASE("basis json matches the documented schema") {
  BasisSpec spec{BasisFamily::chebyshev2,
                 {{0, 0}, {1, 0}, {0, 1}},
                 Ranges{{9.0, 17.0}, {0.0, 15.0}}};
  const std::string text = basis_to_json(spec);
  CHECK(text.find("\"family\":\"chebyshev2\"") != std::string::npos);
  CHECK(text.find("\"pairs\":[[0,0],[1,0],[0,1]]") != std::string::npos);
  CHECK(text.find("\"k1\":[9.0,17.0]") != std::string::npos);
  const BasisSpec loaded = basis_from_json(text);
  CHECK(loaded.pairs == spec.pairs);
  CHECK(loaded.ranges.k1 == spec.ranges.k1);
  CHECK(loaded.ranges.k2 == spec.ranges.k2);
  CHECK_THROWS_AS(basis_from_json("{\"family\":\"legendre\",\"pairs\":[[0,0]]}"), io_error);
}

TEST_CASE("model json round trip embeds small p_theta") {
  TempDir dir("model");
  SimSpec spec = test_helpers::linear_truth_spec(0, 2);
  VfpArModel model = spec.model;
  model.p_theta = Eigen::MatrixXd::Identity(6, 6) * 0.25;
  model.warnings = {"example warning"};
  const auto path = dir.path() / "model.json";
  save_model_json(model, path);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "model.p_theta.f64"));
  const VfpArModel loaded = load_model_json(path);
  CHECK(loaded.order == 2);
  CHECK(loaded.fs == model.fs);
  CHECK((loaded.theta - model.theta).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((loaded.p_theta - model.p_theta).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((loaded.gamma_e - model.gamma_e).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(loaded.training_states == model.training_states);
  CHECK(loaded.warnings == model.warnings);
}

TEST_CASE("model json externalizes large p_theta to a binary sidecar") {
  TempDir dir("sidecar");
  VfpArModel model;
  model.order = 6;
  model.fs = 200.0;
  model.basis = complete_basis(100, Ranges{{0.0, 1.0}, {0.0, 1.0}});
  model.theta = Eigen::MatrixXd::Random(6, 100);
  model.training_states = {{0.5, 0.5}};
  model.sigma2_by_state = Eigen::VectorXd::Constant(1, 2.0);
  model.gamma_e = model.sigma2_by_state.asDiagonal();
  model.p_theta = Eigen::MatrixXd::Random(600, 600);  // n p = 600 > 500
  model.p_theta = (model.p_theta + model.p_theta.transpose()).eval();

  const auto path = dir.path() / "model.json";
  save_model_json(model, path);
  CHECK(std::filesystem::exists(dir.path() / "model.p_theta.f64"));
  CHECK(std::filesystem::file_size(dir.path() / "model.p_theta.f64") ==
        600u * 600u * sizeof(double));
  const VfpArModel loaded = load_model_json(path);
  CHECK((loaded.p_theta - model.p_theta).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("simspec json round trip") {
  TempDir dir("simspec");
  SimSpec spec = test_helpers::linear_truth_spec(424242, 321);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Identity(9, 9) * 0.5;
  spec.innovation_gamma = gamma;
  const auto path = dir.path() / "spec.json";
  save_simspec_json(spec, path);
  const SimSpec loaded = load_simspec_json(path);
  CHECK(loaded.n_samples == 321);
  CHECK(loaded.seed == 424242);
  CHECK(loaded.states == spec.states);
  CHECK((loaded.innovation_gamma - gamma).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((loaded.model.theta - spec.model.theta).lpNorm<Eigen::Infinity>() == 0.0);
  // Loaded specs simulate identically.
  const SignalPool a = simulate_pool(spec);
  const SignalPool b = simulate_pool(loaded);
  CHECK(a.records[0].samples == b.records[0].samples);
}

TEST_CASE("energy csv layout") {
  TempDir dir("energy");
  EnergyStats stats;
  stats.window_len = 100;
  stats.window_s = 0.5;
  stats.fs = 200.0;
  stats.ci_level = 0.99;
  stats.means = {1.0, 2.0};
  stats.std_devs = {0.125, 0.25};
  stats.ci_half_widths = {0.25, 0.5};
  const auto path = dir.path() / "energy.csv";
  save_energy_csv(stats, path);
  const std::string text = slurp(path);
  CHECK(text.find("window_index,t_start_s,mean,std,ci_lo,ci_hi") != std::string::npos);
  CHECK(text.find("1,0.5,2,0.25,1.5,2.5") != std::string::npos);
}

TEST_CASE("stabilization csv layout") {
  TempDir dir("stab");
  std::vector<StabilizationEntry> diagram(1);
  diagram[0].order = 4;
  diagram[0].modes = {{8.25, 0.0625}, {30.0, 0.125}};
  diagram[0].stable = {true, false};
  const auto path = dir.path() / "stab.csv";
  save_stabilization_csv(diagram, path);
  const std::string text = slurp(path);
  CHECK(text.find("order,frequency_hz,damping,stable") != std::string::npos);
  CHECK(text.find("4,8.25,0.0625,1") != std::string::npos);
  CHECK(text.find("4,30,0.125,0") != std::string::npos);
}

TEST_CASE("frf surface emits csv, metadata, and a mask only when extrapolated") {
  TempDir dir("surface");
  FrfSurface surface;
  surface.variable = SweepVariable::airspeed;
  surface.fixed_value = 3.0;
  surface.freq_axis = {1.0, 2.0, 3.0};
  surface.state_axis = {9.0, 10.0};
  surface.magnitudes_db.resize(2, 3);
  surface.magnitudes_db << 0.0, -1.0, -2.0, 0.5, -0.5, -1.5;
  surface.extrapolated = {false, false};

  const auto path = dir.path() / "surface.csv";
  save_frf_surface(surface, path);
  CHECK(std::filesystem::exists(dir.path() / "surface.meta.json"));
  CHECK_FALSE(std::filesystem::exists(dir.path() / "surface.mask.csv"));
  const std::string text = slurp(path);
  CHECK(text.find("k1,1,2,3") != std::string::npos);
  CHECK(text.find("9,0,-1,-2") != std::string::npos);

  surface.extrapolated = {false, true};
  save_frf_surface(surface, path);
  CHECK(std::filesystem::exists(dir.path() / "surface.mask.csv"));
  const std::string mask = slurp(dir.path() / "surface.mask.csv");
  CHECK(mask.find("10,1,1,1") != std::string::npos);
  CHECK(mask.find("9,0,0,0") != std::string::npos);
}

TEST_SUITE_END();
