#pragma once

// Experiment harness. A spec file holds `key = value` lines (`#` starts a
// comment) plus one `variant = NAME key=value ...` line per compared
// algorithm. Every run draws its tensor and its shared initialization from
// seeded substreams, so results depend only on the spec.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "paro/generators.hpp"
#include "paro/paro.hpp"
#include "paro/rank1.hpp"

namespace paro {

enum class TaskKind { rank1, cpd };

struct GeneratorSpec {
  /// mult | random | gaussian | file
  std::string kind = "gaussian";
  MultTensorSpec mult;
  Shape dims;
  std::size_t rank = 1;
  std::optional<Collinearity> collinearity;
  double snr_db = std::numeric_limits<double>::infinity();
  std::string input;
};

struct VariantSpec {
  std::string name;
  /// rank1 tasks: solver and initialization.
  Rank1Algorithm algorithm = Rank1Algorithm::als;
  Rank1Init init;
  /// cpd tasks: "als" or "paro".
  std::string cpd_algorithm = "als";
  MuSchedule schedule;
  Rank1Algorithm inner = Rank1Algorithm::als;
  std::size_t inner_steps = 1;
  /// Overrides the spec-wide iteration cap when set.
  std::optional<std::size_t> max_iters;
};

struct ExperimentSpec {
  TaskKind task = TaskKind::rank1;
  GeneratorSpec generator;
  std::vector<VariantSpec> variants;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  std::size_t max_iters = 1000;
  double tol = 1e-12;
  /// CPD rank; 0 means the generator's rank (or the known multiplication rank).
  std::size_t rank = 0;
  bool epc = true;
  double success_threshold = 1e-6;
  double failure_threshold = 1e-2;
  /// Output path prefix: success-ratio writes PREFIX_summary.csv and
  /// PREFIX_runs.csv, convergence writes PREFIX_trace.csv.
  std::string output = "experiment";
  ExecutionPolicy policy = ExecutionPolicy::openmp;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

ExperimentSpec parse_experiment_spec(std::istream& in);
ExperimentSpec read_experiment_spec(const std::string& path);

/// Tensor of run `run`.
DenseTensor make_tensor(const ExperimentSpec& spec, std::size_t run);
/// CPD rank implied by the spec.
std::size_t cpd_rank(const ExperimentSpec& spec);
/// Shared random initialization of run `run` (EPC-corrected when enabled).
KruskalModel shared_init(const ExperimentSpec& spec, const DenseTensor& y, std::size_t run);

struct RunOutcome {
  double error = 0.0;
  std::size_t iterations = 0;
  StopReason reason = StopReason::max_iters;
  std::vector<IterationRecord> trace;
};

/// Runs one variant on one tensor; `init` is ignored by rank-1 tasks.
RunOutcome run_variant(const ExperimentSpec& spec, const VariantSpec& variant,
                       const DenseTensor& y, const KruskalModel& init, std::size_t run);

struct SuccessTable {
  std::vector<std::string> variants;
  /// errors[run][variant], likewise iterations and reasons.
  std::vector<std::vector<double>> errors;
  std::vector<std::vector<std::size_t>> iterations;
  std::vector<std::vector<StopReason>> reasons;
  std::vector<double> best;
  std::vector<double> success_ratio;
  std::vector<double> failure_ratio;
  std::vector<double> middle_ratio;
};

/// Fills the best error and the per-variant ratios from `errors`. A run
/// counts as a success for a variant when |err - best| < success_threshold
/// and as a failure when |err - best| > failure_threshold.
void summarize(SuccessTable& table, double success_threshold, double failure_threshold);

SuccessTable run_success_ratio(const ExperimentSpec& spec);
void write_summary_csv(std::ostream& out, const SuccessTable& table, const ExperimentSpec& spec);
void write_runs_csv(std::ostream& out, const SuccessTable& table);

struct ConvergenceTrace {
  std::string variant;
  std::size_t run = 0;
  std::vector<IterationRecord> records;
};

std::vector<ConvergenceTrace> run_convergence(const ExperimentSpec& spec);

/// Header: variant,run,iter,relative_error,mu,gammaR,elapsed_ms. Quantities
/// a solver does not have (mu, gammaR, timings of rank-1 runs) are empty.
void write_trace_header(std::ostream& out);
void write_trace_rows(std::ostream& out, const std::string& variant, std::size_t run,
                      const std::vector<IterationRecord>& records);

}  // namespace paro
