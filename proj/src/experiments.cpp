#include "paro/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "paro/random.hpp"
#include "paro/tensor_io.hpp"

namespace paro {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != v.size()) throw std::invalid_argument("'" + key + "' expects a number, got '" + v + "'");
  return d;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != v.size() || v.empty() || v[0] == '-') {
    throw std::invalid_argument("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(n);
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const std::string& s : split(v, ',')) out.push_back(to_size(key, s));
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("'" + key + "' expects true or false, got '" + v + "'");
}

struct RawVariant {
  std::string name;
  std::map<std::string, std::string> fields;
};

VariantSpec resolve_variant(const RawVariant& raw, TaskKind task) {
  VariantSpec v;
  v.name = raw.name;
  for (const auto& [key, value] : raw.fields) {
    if (key == "algo") {
      if (task == TaskKind::rank1) {
        v.algorithm = parse_rank1_algorithm(value);
      } else if (value == "als" || value == "paro") {
        v.cpd_algorithm = value;
      } else {
        throw std::invalid_argument("cpd variants use algo=als or algo=paro");
      }
    } else if (key == "init") {
      v.init = parse_rank1_init(value);
    } else if (key == "schedule") {
      v.schedule = parse_mu_schedule(value);
    } else if (key == "inner") {
      v.inner = parse_rank1_algorithm(value);
    } else if (key == "inner_steps") {
      v.inner_steps = to_size(key, value);
    } else if (key == "max_iters") {
      v.max_iters = to_size(key, value);
    } else {
      throw std::invalid_argument("unknown variant key '" + key + "'");
    }
  }
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void ExperimentSpec::validate() const {
  if (runs < 1) throw std::invalid_argument("runs must be at least 1");
  if (variants.empty()) throw std::invalid_argument("at least one variant is required");
  if (!(success_threshold > 0.0) || !(failure_threshold > 0.0)) {
    throw std::invalid_argument("thresholds must be positive");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const std::string& g = generator.kind;
  if (g == "file") {
    if (generator.input.empty()) throw std::invalid_argument("generator=file needs input");
  } else if (g == "random" || g == "gaussian") {
    if (generator.dims.empty()) throw std::invalid_argument("generator needs dims");
  } else if (g != "mult") {
    throw std::invalid_argument("unknown generator '" + g + "'");
  }
  std::vector<std::string> names;
  for (const VariantSpec& v : variants) {
    if (std::find(names.begin(), names.end(), v.name) != names.end()) {
      throw std::invalid_argument("duplicate variant name '" + v.name + "'");
    }
    names.push_back(v.name);
  }
}

ExperimentSpec parse_experiment_spec(std::istream& in) {
  ExperimentSpec spec;
  std::vector<RawVariant> raw_variants;
  std::optional<std::pair<double, double>> collinear;
  std::vector<std::size_t> blocks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "task") {
        if (value == "rank1") {
          spec.task = TaskKind::rank1;
        } else if (value == "cpd") {
          spec.task = TaskKind::cpd;
        } else {
          throw std::invalid_argument("task must be rank1 or cpd");
        }
      } else if (key == "generator") {
        spec.generator.kind = value;
      } else if (key == "mult") {
        const auto s = to_sizes(key, value);
        if (s.size() != 3) throw std::invalid_argument("mult expects M,N,P");
        spec.generator.mult = {s[0], s[1], s[2]};
      } else if (key == "dims") {
        spec.generator.dims = to_sizes(key, value);
      } else if (key == "true_rank") {
        spec.generator.rank = to_size(key, value);
      } else if (key == "collinear") {
        const auto parts = split(value, ',');
        if (parts.size() != 2) throw std::invalid_argument("collinear expects LO,HI");
        collinear = std::make_pair(to_double(key, parts[0]), to_double(key, parts[1]));
      } else if (key == "blocks") {
        blocks = to_sizes(key, value);
      } else if (key == "snr_db") {
        spec.generator.snr_db = to_double(key, value);
      } else if (key == "input") {
        spec.generator.input = value;
      } else if (key == "runs") {
        spec.runs = to_size(key, value);
      } else if (key == "seed") {
        spec.seed = to_size(key, value);
      } else if (key == "max_iters") {
        spec.max_iters = to_size(key, value);
      } else if (key == "tol") {
        spec.tol = to_double(key, value);
      } else if (key == "rank") {
        spec.rank = to_size(key, value);
      } else if (key == "epc") {
        spec.epc = to_bool(key, value);
      } else if (key == "success_threshold") {
        spec.success_threshold = to_double(key, value);
      } else if (key == "failure_threshold") {
        spec.failure_threshold = to_double(key, value);
      } else if (key == "output") {
        spec.output = value;
      } else if (key == "policy") {
        spec.policy = parse_execution_policy(value);
      } else if (key == "variant") {
        std::istringstream ss(value);
        RawVariant rv;
        if (!(ss >> rv.name)) throw std::invalid_argument("variant needs a name");
        std::string tok;
        while (ss >> tok) {
          const auto e = tok.find('=');
          if (e == std::string::npos) throw std::invalid_argument("variant field '" + tok + "'");
          rv.fields[tok.substr(0, e)] = tok.substr(e + 1);
        }
        raw_variants.push_back(rv);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& err) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  if (collinear) {
    Collinearity c;
    c.lo = collinear->first;
    c.hi = collinear->second;
    c.blocks = blocks.empty() ? std::vector<std::size_t>{spec.generator.rank} : blocks;
    spec.generator.collinearity = c;
  }
  for (const RawVariant& rv : raw_variants) spec.variants.push_back(resolve_variant(rv, spec.task));
  spec.validate();
  return spec;
}

ExperimentSpec read_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file '" + path + "'");
  return parse_experiment_spec(in);
}

DenseTensor make_tensor(const ExperimentSpec& spec, std::size_t run) {
  const GeneratorSpec& g = spec.generator;
  const std::uint64_t seed = substream_seed(spec.seed, {run, 0});
  DenseTensor t;
  if (g.kind == "mult") {
    t = mult_tensor(g.mult);
  } else if (g.kind == "random") {
    t = random_kruskal(g.dims, g.rank, seed, g.collinearity).tensor;
  } else if (g.kind == "gaussian") {
    t = gaussian_tensor(g.dims, seed);
  } else if (g.kind == "file") {
    t = read_tensor_file(g.input);
  } else {
    throw std::invalid_argument("unknown generator '" + g.kind + "'");
  }
  return add_noise(t, g.snr_db, substream_seed(spec.seed, {run, 3}));
}

std::size_t cpd_rank(const ExperimentSpec& spec) {
  if (spec.rank > 0) return spec.rank;
  if (spec.generator.kind == "mult") {
    if (auto r = known_rank(spec.generator.mult)) return *r;
    throw std::invalid_argument("rank must be given for this multiplication tensor");
  }
  if (spec.generator.kind == "random") return spec.generator.rank;
  throw std::invalid_argument("rank must be given for this generator");
}

KruskalModel shared_init(const ExperimentSpec& spec, const DenseTensor& y, std::size_t run) {
  KruskalModel init =
      random_kruskal_init(y.shape(), cpd_rank(spec), substream_seed(spec.seed, {run, 1}));
  return spec.epc ? epc_init(y, init) : init;
}

RunOutcome run_variant(const ExperimentSpec& spec, const VariantSpec& variant,
                       const DenseTensor& y, const KruskalModel& init, std::size_t run) {
  const std::size_t max_iters = variant.max_iters.value_or(spec.max_iters);
  RunOutcome out;
  if (spec.task == TaskKind::rank1) {
    Rank1Options opts;
    opts.algorithm = variant.algorithm;
    opts.init = variant.init;
    opts.tol = spec.tol;
    opts.max_iters = max_iters;
    const Rank1Result r = solve_rank1(y, opts);
    out.error = r.trace.back();
    out.iterations = r.trace.size() - 1;
    out.reason = r.converged ? StopReason::converged : StopReason::max_iters;
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
      IterationRecord rec;
      rec.iter = k;
      rec.relative_error = r.trace[k];
      rec.elapsed_ms = std::numeric_limits<double>::quiet_NaN();
      out.trace.push_back(rec);
    }
    return out;
  }
  if (variant.cpd_algorithm == "als") {
    CpdAlsOptions opts;
    opts.tol = spec.tol;
    opts.max_iters = max_iters;
    CpdAlsResult r = cpd_als(y, init, opts);
    out.trace = std::move(r.trace);
    out.reason = r.reason;
  } else {
    ParoOptions opts;
    opts.schedule = variant.schedule;
    opts.inner = variant.inner;
    opts.inner_steps = variant.inner_steps;
    opts.tol = spec.tol;
    opts.max_iters = max_iters;
    opts.seed = substream_seed(spec.seed, {run, 2});
    ParoResult r = paro_decompose(y, init, opts);
    out.trace = std::move(r.trace);
    out.reason = r.reason;
  }
  out.error = out.trace.back().relative_error;
  out.iterations = out.trace.back().iter;
  return out;
}

void summarize(SuccessTable& t, double success_threshold, double failure_threshold) {
  const std::size_t runs = t.errors.size();
  const std::size_t nv = t.variants.size();
  t.best.assign(runs, 0.0);
  t.success_ratio.assign(nv, 0.0);
  t.failure_ratio.assign(nv, 0.0);
  t.middle_ratio.assign(nv, 0.0);
  if (runs == 0) return;
  for (std::size_t i = 0; i < runs; ++i) {
    t.best[i] = *std::min_element(t.errors[i].begin(), t.errors[i].end());
    for (std::size_t v = 0; v < nv; ++v) {
      const double gap = std::abs(t.errors[i][v] - t.best[i]);
      if (gap < success_threshold) {
        t.success_ratio[v] += 1.0;
      } else if (gap > failure_threshold) {
        t.failure_ratio[v] += 1.0;
      } else {
        t.middle_ratio[v] += 1.0;
      }
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    t.success_ratio[v] /= static_cast<double>(runs);
    t.failure_ratio[v] /= static_cast<double>(runs);
    t.middle_ratio[v] /= static_cast<double>(runs);
  }
}

SuccessTable run_success_ratio(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t nv = spec.variants.size();
  SuccessTable table;
  for (const VariantSpec& v : spec.variants) table.variants.push_back(v.name);
  table.errors.assign(spec.runs, std::vector<double>(nv, 0.0));
  table.iterations.assign(spec.runs, std::vector<std::size_t>(nv, 0));
  table.reasons.assign(spec.runs, std::vector<StopReason>(nv, StopReason::max_iters));
  parallel_for(spec.policy, spec.runs, [&](std::size_t run) {
    const DenseTensor y = make_tensor(spec, run);
    const KruskalModel init = spec.task == TaskKind::cpd ? shared_init(spec, y, run) : KruskalModel{};
    for (std::size_t v = 0; v < nv; ++v) {
      const RunOutcome o = run_variant(spec, spec.variants[v], y, init, run);
      table.errors[run][v] = o.error;
      table.iterations[run][v] = o.iterations;
      table.reasons[run][v] = o.reason;
    }
  });
  summarize(table, spec.success_threshold, spec.failure_threshold);
  return table;
}

void write_summary_csv(std::ostream& out, const SuccessTable& t, const ExperimentSpec& spec) {
  out << "variant,runs,success_ratio,failure_ratio,middle_ratio,success_threshold,"
         "failure_threshold\n";
  for (std::size_t v = 0; v < t.variants.size(); ++v) {
    out << t.variants[v] << ',' << t.errors.size() << ',' << format_double(t.success_ratio[v])
        << ',' << format_double(t.failure_ratio[v]) << ',' << format_double(t.middle_ratio[v])
        << ',' << format_double(spec.success_threshold) << ','
        << format_double(spec.failure_threshold) << '\n';
  }
}

void write_runs_csv(std::ostream& out, const SuccessTable& t) {
  out << "run,variant,relative_error,best_error,iterations,status\n";
  for (std::size_t i = 0; i < t.errors.size(); ++i) {
    for (std::size_t v = 0; v < t.variants.size(); ++v) {
      out << i << ',' << t.variants[v] << ',' << format_double(t.errors[i][v]) << ','
          << format_double(t.best[i]) << ',' << t.iterations[i][v] << ','
          << to_string(t.reasons[i][v]) << '\n';
    }
  }
}

std::vector<ConvergenceTrace> run_convergence(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t nv = spec.variants.size();
  std::vector<ConvergenceTrace> traces(spec.runs * nv);
  parallel_for(spec.policy, spec.runs, [&](std::size_t run) {
    const DenseTensor y = make_tensor(spec, run);
    const KruskalModel init = spec.task == TaskKind::cpd ? shared_init(spec, y, run) : KruskalModel{};
    for (std::size_t v = 0; v < nv; ++v) {
      ConvergenceTrace& ct = traces[run * nv + v];
      ct.variant = spec.variants[v].name;
      ct.run = run;
      ct.records = run_variant(spec, spec.variants[v], y, init, run).trace;
    }
  });
  return traces;
}

void write_trace_header(std::ostream& out) {
  out << "variant,run,iter,relative_error,mu,gammaR,elapsed_ms\n";
}

void write_trace_rows(std::ostream& out, const std::string& variant, std::size_t run,
                      const std::vector<IterationRecord>& records) {
  for (const IterationRecord& r : records) {
    out << variant << ',' << run << ',' << r.iter << ',' << format_double(r.relative_error) << ','
        << format_double(r.mu) << ',' << format_double(r.gamma_r) << ','
        << format_double(r.elapsed_ms) << '\n';
  }
}

}  // namespace paro
