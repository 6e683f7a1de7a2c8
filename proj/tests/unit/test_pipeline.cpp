#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "morphouq/errors.hpp"
#include "morphouq/pipeline/manifest.hpp"
#include "morphouq/pipeline/workflow.hpp"

using namespace morphouq;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("morphouq_pipeline_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

McDataset small_dataset() {
  McDataset ds;
  ds.prior = PriorSpec::reduced();
  ds.rows = 4;
  ds.design = sample_prior(ds.prior, ds.rows, 1);
  ds.field_cells = {10, 11, 12};
  ds.field_x = {1.0, 2.0, 3.0};
  ds.field_y = {0.5, 0.5, 0.5};
  ds.field_initial = {0.0, 0.0, 0.0};
  ds.outputs_field = {0.1, 0.0, 0.5, 0.2, 0.0, 0.6, 0.3, 0.0, 0.7, 0.4, 9.0, 0.8};
  ds.status = {1, 1, 1, 0};
  ds.failures = {"", "", "", "diverged"};
  return ds;
}

}  // namespace

TEST_CASE("manifest round trip and verification") {
  const auto dir = fresh_dir("manifest");
  std::ofstream(dir / "a.csv") << "x\n1\n";
  PipelineManifest m;
  m.stage = "mc";
  m.seed = 42;
  m.wall_seconds = 1.5;
  m.outputs.push_back(artifact_ref(dir / "a.csv"));
  m.inputs.push_back(artifact_ref(dir / "missing.bin"));
  m.options = {{"n", 10}};
  CHECK_FALSE(m.outputs[0].hash.empty());
  CHECK(m.inputs[0].hash.empty());
  write_manifest(dir, m);

  const PipelineManifest back = read_manifest(dir / "manifest.json");
  CHECK(back.stage == "mc");
  CHECK(back.seed == 42);
  CHECK(back.options == m.options);
  REQUIRE(back.outputs.size() == 1);
  CHECK(back.outputs[0].hash == m.outputs[0].hash);
  const auto clean = verify_manifest(back);

  std::ofstream(dir / "a.csv") << "x\n2\n";
  CHECK(verify_manifest(back).size() == clean.size() + 1);

  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(read_manifest(dir / "bad.json"), FormatError);
  CHECK_THROWS_AS(read_manifest(dir / "none.json"), FormatError);
}

TEST_CASE("training data from a dataset") {
  const McDataset ds = small_dataset();
  const auto cols = field_columns(ds, -1e300, 1e300);
  CHECK(cols == std::vector<std::size_t>{0, 2});
  CHECK(field_columns(ds, 2.5, 10.0) == std::vector<std::size_t>{2});

  const TrainingSet t = training_set(ds, {0, 2}, cols);
  CHECK(t.rows == 2);
  CHECK(t.in == 4);
  CHECK(t.out == 2);
  CHECK(t.outputs == std::vector<double>{0.1, 0.5, 0.3, 0.7});
  CHECK(std::equal(t.inputs.begin() + 4, t.inputs.end(), ds.design_row(2)));
  CHECK_THROWS_AS(training_set(ds, {7}, cols), SizingError);

  const auto names = input_names(ds.prior);
  CHECK(names == std::vector<std::string>{"alpha_mpm", "alpha_ks", "beta2", "beta"});
}

TEST_CASE("named parameter vectors") {
  const PriorSpec prior = PriorSpec::reduced();
  const auto truth = parameter_vector(prior, reference_truth());
  CHECK(truth == std::vector<double>{17.33, 3.8, 0.9, 2.5});
  const auto mid = parameter_vector(prior, {});
  for (std::size_t k = 0; k < prior.dim(); ++k) {
    CHECK(mid[k] == doctest::Approx(0.5 * (prior.bounds[k].lo + prior.bounds[k].hi)));
  }
  CHECK_THROWS_AS(parameter_vector(prior, {{"theta_cr", 0.04}}), ConfigError);
  CHECK_THROWS_AS(parameter_vector(prior, {{"beta", 7.0}}), ConfigError);
  CHECK_THROWS(parameter_vector(prior, {{"gamma", 1.0}}));
}

TEST_CASE("solver field lookup") {
  const Grid g = make_box_grid(5, 2, 1.0, 1.0);
  SimulationResult r;
  r.zb_final.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) r.zb_final[k] = static_cast<double>(k);
  MlpModel m = MlpModel::zeros(1, {2}, 2);
  m.output_x = {0.5, 3.5};
  m.output_y = {0.5, 1.5};
  const auto f = solver_field(r, g, m);
  CHECK(f[0] == r.zb_final[g.index(0, 0)]);
  CHECK(f[1] == r.zb_final[g.index(3, 1)]);
  m.output_x[1] = 50.0;
  CHECK_THROWS_AS(solver_field(r, g, m), DomainError);
}
