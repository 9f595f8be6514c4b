#include "mixhp/artifacts.hpp"

#include <fstream>

#include <json.hpp>

#include "mixhp/errors.hpp"

namespace mixhp {

using nlohmann::json;

namespace {

json from_vec(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd to_vec(const json& j) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& x : j) out[i++] = x.get<double>();
  return out;
}

json from_mat(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd to_mat(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.front().size()) : 0;
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& row : j) {
    Eigen::Index c = 0;
    for (const auto& x : row) out(r, c++) = x.get<double>();
    ++r;
  }
  return out;
}

json from_grid(const BoolGrid& g) {
  json out = json::array();
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < g.cols(); ++c) row.push_back(g(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

BoolGrid to_grid(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.front().size()) : 0;
  BoolGrid out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& row : j) {
    Eigen::Index c = 0;
    for (const auto& x : row) out(r, c++) = x.get<bool>();
    ++r;
  }
  return out;
}

const char* to_name(SigmaStructure s) {
  return s == SigmaStructure::identity ? "identity" : "ar1";
}
const char* to_name(SimPattern p) {
  return p == SimPattern::main ? "main" : "all-het";
}
const char* to_name(VarianceMode m) {
  return m == VarianceMode::unequal ? "unequal" : "equal";
}
const char* to_name(PenaltyForm f) {
  return f == PenaltyForm::effects ? "effects" : "component";
}
const char* to_name(CollapsePolicy p) {
  return p == CollapsePolicy::restart ? "restart" : "abort";
}

template <class E>
E enum_from(const std::string& name, std::initializer_list<E> values) {
  for (E v : values)
    if (name == to_name(v)) return v;
  throw ArtifactError("artifact: unknown enum value '" + name + "'");
}

}  // namespace

// --- model types ---

static void to_json(json& j, const EffectsModel& m) {
  j = json{{"common_effects", from_vec(m.common_effects)},
           {"cluster_effects", from_mat(m.cluster_effects)},
           {"mixing_probs", from_vec(m.mixing_probs)},
           {"inverse_scales", from_vec(m.inverse_scales)}};
}

static void from_json(const json& j, EffectsModel& m) {
  m.common_effects = to_vec(j.at("common_effects"));
  m.cluster_effects = to_mat(j.at("cluster_effects"));
  m.mixing_probs = to_vec(j.at("mixing_probs"));
  m.inverse_scales = to_vec(j.at("inverse_scales"));
}

static void to_json(json& j, const ScaledModel& m) {
  j = json{{"scaled_coefs", from_mat(m.scaled_coefs)},
           {"mixing_probs", from_vec(m.mixing_probs)},
           {"inverse_scales", from_vec(m.inverse_scales)}};
}

static void from_json(const json& j, ScaledModel& m) {
  m.scaled_coefs = to_mat(j.at("scaled_coefs"));
  m.mixing_probs = to_vec(j.at("mixing_probs"));
  m.inverse_scales = to_vec(j.at("inverse_scales"));
}

static void to_json(json& j, const RawModel& m) {
  j = json{{"raw_coefs", from_mat(m.raw_coefs)},
           {"variances", from_vec(m.variances)},
           {"mixing_probs", from_vec(m.mixing_probs)}};
}

static void to_json(json& j, const PenaltySpec& p) {
  j = json{{"lambda", p.lambda},
           {"gamma", p.gamma},
           {"weights", from_mat(p.weights)},
           {"excluded", from_grid(p.excluded)},
           {"exempt", p.exempt}};
}

static void from_json(const json& j, PenaltySpec& p) {
  p.lambda = j.at("lambda").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.weights = to_mat(j.at("weights"));
  p.excluded = to_grid(j.at("excluded"));
  p.exempt = j.at("exempt").get<std::vector<bool>>();
}

static void to_json(json& j, const FitConfig& c) {
  j = json{{"max_em_iter", c.max_em_iter},
           {"em_rel_tol", c.em_rel_tol},
           {"bcda_rel_tol", c.bcda_rel_tol},
           {"bcda_max_iter", c.bcda_max_iter},
           {"mu", c.mu},
           {"equal_variance", c.equal_variance},
           {"n_restarts", c.n_restarts},
           {"seed", c.seed},
           {"min_component_mass", c.min_component_mass},
           {"collapse_policy", to_name(c.collapse_policy)},
           {"single_cycle_mstep", c.single_cycle_mstep},
           {"warm_start_dual", c.warm_start_dual},
           {"screen_em_iter", c.screen_em_iter}};
}

static void from_json(const json& j, FitConfig& c) {
  c.max_em_iter = j.at("max_em_iter").get<int>();
  c.em_rel_tol = j.at("em_rel_tol").get<double>();
  c.bcda_rel_tol = j.at("bcda_rel_tol").get<double>();
  c.bcda_max_iter = j.at("bcda_max_iter").get<int>();
  c.mu = j.at("mu").get<double>();
  c.equal_variance = j.at("equal_variance").get<bool>();
  c.n_restarts = j.at("n_restarts").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.min_component_mass = j.at("min_component_mass").get<double>();
  c.collapse_policy = enum_from<CollapsePolicy>(
      j.at("collapse_policy").get<std::string>(),
      {CollapsePolicy::restart, CollapsePolicy::abort});
  c.single_cycle_mstep = j.at("single_cycle_mstep").get<bool>();
  c.warm_start_dual = j.at("warm_start_dual").get<bool>();
  c.screen_em_iter = j.at("screen_em_iter").get<int>();
}

static void to_json(json& j, const FitResult& f) {
  // responsibilities are recomputable from the model and data; not stored
  j = json{{"model", f.model},
           {"objective_trace", f.objective_trace},
           {"converged", f.converged},
           {"n_iter", f.n_iter},
           {"loglik", f.loglik},
           {"selected_relevant", f.selected_relevant},
           {"selected_heterogeneous", f.selected_heterogeneous},
           {"hard_assignments", f.hard_assignments},
           {"full_mstep_solve", f.full_mstep_solve},
           {"equal_variance", f.equal_variance},
           {"form", to_name(f.form)},
           {"nnz_coefs", f.nnz_coefs},
           {"scaled", effects_to_scaled(f.model)},
           {"raw", to_raw(f.model)}};
  if (f.component_model) j["component_model"] = *f.component_model;
}

static void from_json(const json& j, FitResult& f) {
  f.model = j.at("model").get<EffectsModel>();
  f.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  f.converged = j.at("converged").get<bool>();
  f.n_iter = j.at("n_iter").get<int>();
  f.loglik = j.at("loglik").get<double>();
  f.selected_relevant = j.at("selected_relevant").get<std::vector<int>>();
  f.selected_heterogeneous = j.at("selected_heterogeneous").get<std::vector<int>>();
  f.hard_assignments = j.at("hard_assignments").get<std::vector<int>>();
  f.full_mstep_solve = j.at("full_mstep_solve").get<bool>();
  f.equal_variance = j.at("equal_variance").get<bool>();
  f.form = enum_from<PenaltyForm>(j.at("form").get<std::string>(),
                                  {PenaltyForm::effects, PenaltyForm::component});
  f.nnz_coefs = j.at("nnz_coefs").get<int>();
  if (j.contains("component_model"))
    f.component_model = j.at("component_model").get<ScaledModel>();
}

// --- tuning types ---

static void to_json(json& j, const TuneGrid& g) {
  std::vector<std::string> modes;
  for (VarianceMode m : g.variance_modes) modes.emplace_back(to_name(m));
  j = json{{"component_range", g.component_range},
           {"lambda_count", g.lambda_count},
           {"lambda_min_ratio", g.lambda_min_ratio},
           {"variance_modes", modes},
           {"gamma", g.gamma}};
}

static void from_json(const json& j, TuneGrid& g) {
  g.component_range = j.at("component_range").get<std::vector<int>>();
  g.lambda_count = j.at("lambda_count").get<int>();
  g.lambda_min_ratio = j.at("lambda_min_ratio").get<double>();
  g.variance_modes.clear();
  for (const auto& name : j.at("variance_modes"))
    g.variance_modes.push_back(enum_from<VarianceMode>(
        name.get<std::string>(), {VarianceMode::unequal, VarianceMode::equal}));
  g.gamma = j.at("gamma").get<double>();
}

static void to_json(json& j, const TuneCell& c) {
  j = json{{"m", c.m},
           {"mode", to_name(c.mode)},
           {"stage", c.stage},
           {"lambda", c.lambda},
           {"bic", c.bic},
           {"df", c.df},
           {"loglik", c.loglik},
           {"converged", c.converged},
           {"failed", c.failed},
           {"error", c.error}};
}

static void from_json(const json& j, TuneCell& c) {
  c.m = j.at("m").get<int>();
  c.mode = enum_from<VarianceMode>(j.at("mode").get<std::string>(),
                                   {VarianceMode::unequal, VarianceMode::equal});
  c.stage = j.at("stage").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.bic = j.at("bic").get<double>();
  c.df = j.at("df").get<double>();
  c.loglik = j.at("loglik").get<double>();
  c.converged = j.at("converged").get<bool>();
  c.failed = j.at("failed").get<bool>();
  c.error = j.at("error").get<std::string>();
}

// --- simulation types ---

static void to_json(json& j, const SimDesign& d) {
  j = json{{"n", d.n},
           {"p", d.p},
           {"m", d.m},
           {"sigma", to_name(d.sigma)},
           {"delta", d.delta},
           {"mixing", from_vec(d.mixing)},
           {"pattern", to_name(d.pattern)},
           {"seed", d.seed}};
}

static void from_json(const json& j, SimDesign& d) {
  d.n = j.at("n").get<Eigen::Index>();
  d.p = j.at("p").get<Eigen::Index>();
  d.m = j.at("m").get<int>();
  d.sigma = enum_from<SigmaStructure>(j.at("sigma").get<std::string>(),
                                      {SigmaStructure::identity, SigmaStructure::ar1});
  d.delta = j.at("delta").get<double>();
  d.mixing = to_vec(j.at("mixing"));
  d.pattern = enum_from<SimPattern>(j.at("pattern").get<std::string>(),
                                    {SimPattern::main, SimPattern::all_heterogeneous});
  d.seed = j.at("seed").get<std::uint64_t>();
}

static void to_json(json& j, const GroundTruth& t) {
  j = json{{"model", t.model},
           {"labels", t.labels},
           {"s_relevant", t.s_relevant},
           {"s_heterogeneous", t.s_heterogeneous},
           {"snr", t.snr},
           {"raw", to_raw(t.model)}};
}

static void from_json(const json& j, GroundTruth& t) {
  t.model = j.at("model").get<EffectsModel>();
  t.labels = j.at("labels").get<std::vector<int>>();
  t.s_relevant = j.at("s_relevant").get<std::vector<int>>();
  t.s_heterogeneous = j.at("s_heterogeneous").get<std::vector<int>>();
  t.snr = j.at("snr").get<double>();
}

static void to_json(json& j, const EvalReport& r) {
  j = json{{"mse_b", r.mse_b},
           {"mse_sigma2", r.mse_sigma2},
           {"mse_pi", r.mse_pi},
           {"fpr", r.fpr},
           {"tpr", r.tpr},
           {"fhr", r.fhr ? json(*r.fhr) : json(nullptr)},
           {"permutation", r.permutation},
           {"selected_m", r.selected_m},
           {"m_mismatch", r.m_mismatch}};
}

static void from_json(const json& j, EvalReport& r) {
  r.mse_b = j.at("mse_b").get<double>();
  r.mse_sigma2 = j.at("mse_sigma2").get<double>();
  r.mse_pi = j.at("mse_pi").get<double>();
  r.fpr = j.at("fpr").get<double>();
  r.tpr = j.at("tpr").get<double>();
  if (!j.at("fhr").is_null()) r.fhr = j.at("fhr").get<double>();
  r.permutation = j.at("permutation").get<std::vector<int>>();
  r.selected_m = j.at("selected_m").get<int>();
  r.m_mismatch = j.at("m_mismatch").get<bool>();
}

static void to_json(json& j, const Aggregate& a) {
  j = json{{"mean", a.mean}, {"se", a.se}, {"count", a.count}};
}

static void from_json(const json& j, Aggregate& a) {
  a.mean = j.at("mean").get<double>();
  a.se = j.at("se").get<double>();
  a.count = j.at("count").get<int>();
}

static void to_json(json& j, const ReplicationRecord& r) {
  j = json{{"rep", r.rep},
           {"ok", r.ok},
           {"error", r.error},
           {"report", r.report},
           {"bic", r.bic},
           {"selected_m", r.selected_m}};
}

static void from_json(const json& j, ReplicationRecord& r) {
  r.rep = j.at("rep").get<int>();
  r.ok = j.at("ok").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.report = j.at("report").get<EvalReport>();
  r.bic = j.at("bic").get<double>();
  r.selected_m = j.at("selected_m").get<int>();
}

static void to_json(json& j, const MethodSummary& s) {
  json counts = json::object();
  for (const auto& [m, count] : s.selected_m_counts)
    counts[std::to_string(m)] = count;
  j = json{{"method", method_name(s.method)},
           {"reps", s.reps},
           {"mse_b", s.mse_b},
           {"mse_sigma2", s.mse_sigma2},
           {"mse_pi", s.mse_pi},
           {"fpr", s.fpr},
           {"tpr", s.tpr},
           {"fhr", s.fhr},
           {"selected_m_counts", counts},
           {"n_failed", s.n_failed}};
}

static void from_json(const json& j, MethodSummary& s) {
  const auto name = j.at("method").get<std::string>();
  const auto spec = parse_method(name);
  if (!spec) throw ArtifactError("artifact: unknown method '" + name + "'");
  s.method = *spec;
  s.reps = j.at("reps").get<std::vector<ReplicationRecord>>();
  s.mse_b = j.at("mse_b").get<Aggregate>();
  s.mse_sigma2 = j.at("mse_sigma2").get<Aggregate>();
  s.mse_pi = j.at("mse_pi").get<Aggregate>();
  s.fpr = j.at("fpr").get<Aggregate>();
  s.tpr = j.at("tpr").get<Aggregate>();
  s.fhr = j.at("fhr").get<Aggregate>();
  s.selected_m_counts.clear();
  for (const auto& [key, value] : j.at("selected_m_counts").items())
    s.selected_m_counts[std::stoi(key)] = value.get<int>();
  s.n_failed = j.at("n_failed").get<int>();
}

static void to_json(json& j, const ExperimentResult& r) {
  j = json{{"design", r.design}, {"reps", r.reps}, {"methods", r.methods}};
}

static void from_json(const json& j, ExperimentResult& r) {
  r.design = j.at("design").get<SimDesign>();
  r.reps = j.at("reps").get<int>();
  r.methods = j.at("methods").get<std::vector<MethodSummary>>();
}

static void to_json(json& j, const Timing& t) { j = json{{"seconds", t.seconds}}; }

static void from_json(const json& j, Timing& t) {
  t.seconds = j.at("seconds").get<double>();
}

// --- artifacts ---

static void to_json(json& j, const FitArtifact& a) {
  j = json{{"schema_version", a.schema_version},
           {"kind", "fit"},
           {"seed", a.seed},
           {"n", a.n},
           {"config", a.config},
           {"penalty", a.penalty},
           {"fit", a.fit},
           {"df", a.df},
           {"bic", a.bic},
           {"timing", a.timing}};
}

static void from_json(const json& j, FitArtifact& a) {
  a.schema_version = j.at("schema_version").get<int>();
  a.seed = j.at("seed").get<std::uint64_t>();
  a.n = j.at("n").get<Eigen::Index>();
  a.config = j.at("config").get<FitConfig>();
  a.penalty = j.at("penalty").get<PenaltySpec>();
  a.fit = j.at("fit").get<FitResult>();
  a.df = j.at("df").get<double>();
  a.bic = j.at("bic").get<double>();
  a.timing = j.at("timing").get<Timing>();
}

static void to_json(json& j, const TuneArtifact& a) {
  j = json{{"schema_version", a.schema_version},
           {"kind", "tune"},
           {"n", a.n},
           {"grid", a.grid},
           {"config", a.config},
           {"best", a.best},
           {"best_cell", a.best_cell},
           {"table", a.table},
           {"timing", a.timing}};
}

static void from_json(const json& j, TuneArtifact& a) {
  a.schema_version = j.at("schema_version").get<int>();
  a.n = j.at("n").get<Eigen::Index>();
  a.grid = j.at("grid").get<TuneGrid>();
  a.config = j.at("config").get<FitConfig>();
  a.best = j.at("best").get<FitArtifact>();
  a.best_cell = j.at("best_cell").get<TuneCell>();
  a.table = j.at("table").get<std::vector<TuneCell>>();
  a.timing = j.at("timing").get<Timing>();
}

static void to_json(json& j, const TruthArtifact& a) {
  j = json{{"schema_version", a.schema_version},
           {"kind", "truth"},
           {"design", a.design},
           {"truth", a.truth}};
}

static void from_json(const json& j, TruthArtifact& a) {
  a.schema_version = j.at("schema_version").get<int>();
  a.design = j.at("design").get<SimDesign>();
  a.truth = j.at("truth").get<GroundTruth>();
}

static void to_json(json& j, const ExperimentArtifact& a) {
  j = json{{"schema_version", a.schema_version},
           {"kind", "experiment"},
           {"design", a.design},
           {"grid", a.grid},
           {"result", a.result},
           {"timing", a.timing}};
}

static void from_json(const json& j, ExperimentArtifact& a) {
  a.schema_version = j.at("schema_version").get<int>();
  a.design = j.at("design").get<SimDesign>();
  a.grid = j.at("grid").get<TuneGrid>();
  a.result = j.at("result").get<ExperimentResult>();
  a.timing = j.at("timing").get<Timing>();
}

static void to_json(json& j, const ReportArtifact& a) {
  j = json{{"schema_version", a.schema_version},
           {"kind", "report"},
           {"report", a.report}};
}

static void from_json(const json& j, ReportArtifact& a) {
  a.schema_version = j.at("schema_version").get<int>();
  a.report = j.at("report").get<EvalReport>();
}

static void to_json(json& j, const SimulationManifest& a) {
  j = json{{"schema_version", a.schema_version},
           {"kind", "simulation"},
           {"design", a.design},
           {"snr", a.snr},
           {"reps", a.reps},
           {"data_files", a.data_files},
           {"truth_files", a.truth_files}};
}

static void from_json(const json& j, SimulationManifest& a) {
  a.schema_version = j.at("schema_version").get<int>();
  a.design = j.at("design").get<SimDesign>();
  a.snr = j.at("snr").get<double>();
  a.reps = j.at("reps").get<int>();
  a.data_files = j.at("data_files").get<std::vector<std::string>>();
  a.truth_files = j.at("truth_files").get<std::vector<std::string>>();
}

static void to_json(json& j, const BenchCell& c) {
  j = json{{"n", c.n},
           {"p", c.p},
           {"m", c.m},
           {"lambda_count", c.lambda_count},
           {"seconds", c.seconds}};
}

static void from_json(const json& j, BenchCell& c) {
  c.n = j.at("n").get<Eigen::Index>();
  c.p = j.at("p").get<Eigen::Index>();
  c.m = j.at("m").get<int>();
  c.lambda_count = j.at("lambda_count").get<int>();
  c.seconds = j.at("seconds").get<double>();
}

static void to_json(json& j, const BenchArtifact& a) {
  j = json{{"schema_version", a.schema_version},
           {"kind", "bench"},
           {"seed", a.seed},
           {"cells", a.cells}};
}

static void from_json(const json& j, BenchArtifact& a) {
  a.schema_version = j.at("schema_version").get<int>();
  a.seed = j.at("seed").get<std::uint64_t>();
  a.cells = j.at("cells").get<std::vector<BenchCell>>();
}

namespace {

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("artifact: cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw ArtifactError("artifact: write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path, const char* kind) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("artifact: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ArtifactError("artifact: parse error in " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version"))
    throw ArtifactError("artifact: missing schema_version in " + path.string());
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw ArtifactError("artifact: unsupported schema version in " + path.string());
  if (j.value("kind", std::string{}) != kind)
    throw ArtifactError("artifact: expected kind '" + std::string(kind) + "' in " +
                        path.string());
  return j;
}

template <class T>
T parse_artifact(const std::filesystem::path& path, const char* kind) {
  const json j = read_json_file(path, kind);
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ArtifactError("artifact: malformed " + std::string(kind) + " artifact " +
                        path.string() + ": " + e.what());
  }
}

void strip_timing(json& j) {
  if (j.is_object()) {
    j.erase("timing");
    for (auto& [key, value] : j.items()) strip_timing(value);
  } else if (j.is_array()) {
    for (auto& value : j) strip_timing(value);
  }
}

}  // namespace

FitArtifact make_fit_artifact(const Dataset& data, const PenaltySpec& penalty,
                              const FitConfig& config, const FitResult& fit,
                              double seconds) {
  FitArtifact artifact;
  artifact.seed = config.seed;
  artifact.n = data.n();
  artifact.config = config;
  artifact.penalty = penalty;
  artifact.fit = fit;
  artifact.df = degrees_of_freedom(fit);
  artifact.bic = bic(fit, data.n());
  artifact.timing.seconds = seconds;
  return artifact;
}

void write_fit_artifact(const FitArtifact& artifact, const std::filesystem::path& path) {
  write_json_file(json(artifact), path);
}
FitArtifact read_fit_artifact(const std::filesystem::path& path) {
  return parse_artifact<FitArtifact>(path, "fit");
}

void write_tune_artifact(const TuneArtifact& artifact, const std::filesystem::path& path) {
  write_json_file(json(artifact), path);
}
TuneArtifact read_tune_artifact(const std::filesystem::path& path) {
  return parse_artifact<TuneArtifact>(path, "tune");
}

void write_truth_artifact(const TruthArtifact& artifact,
                          const std::filesystem::path& path) {
  write_json_file(json(artifact), path);
}
TruthArtifact read_truth_artifact(const std::filesystem::path& path) {
  return parse_artifact<TruthArtifact>(path, "truth");
}

void write_experiment_artifact(const ExperimentArtifact& artifact,
                               const std::filesystem::path& path) {
  write_json_file(json(artifact), path);
}
ExperimentArtifact read_experiment_artifact(const std::filesystem::path& path) {
  return parse_artifact<ExperimentArtifact>(path, "experiment");
}

void write_report_artifact(const ReportArtifact& artifact,
                           const std::filesystem::path& path) {
  write_json_file(json(artifact), path);
}
ReportArtifact read_report_artifact(const std::filesystem::path& path) {
  return parse_artifact<ReportArtifact>(path, "report");
}

void write_simulation_manifest(const SimulationManifest& artifact,
                               const std::filesystem::path& path) {
  write_json_file(json(artifact), path);
}
SimulationManifest read_simulation_manifest(const std::filesystem::path& path) {
  return parse_artifact<SimulationManifest>(path, "simulation");
}

void write_bench_artifact(const BenchArtifact& artifact,
                          const std::filesystem::path& path) {
  write_json_file(json(artifact), path);
}
BenchArtifact read_bench_artifact(const std::filesystem::path& path) {
  return parse_artifact<BenchArtifact>(path, "bench");
}

std::string canonical_json(const std::filesystem::path& artifact_path) {
  std::ifstream in(artifact_path);
  if (!in) throw ArtifactError("artifact: cannot open " + artifact_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ArtifactError("artifact: parse error in " + artifact_path.string() + ": " +
                        e.what());
  }
  strip_timing(j);
  return j.dump(2);
}

}  // namespace mixhp
