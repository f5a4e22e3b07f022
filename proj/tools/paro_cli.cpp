// Command-line front end: tensor generation, rank-1 and rank-R fits, and
// experiment specs. Exit status: 0 converged, 2 iteration cap reached,
// 1 on any error.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "paro/experiments.hpp"
#include "paro/generators.hpp"
#include "paro/paro.hpp"
#include "paro/rank1.hpp"
#include "paro/tensor_io.hpp"

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIters = 2;

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start);
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad integer list '" + text + "'");
    out.push_back(static_cast<std::size_t>(v));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

int exit_code(paro::StopReason reason) {
  return reason == paro::StopReason::max_iters ? kExitMaxIters : kExitConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-1 and rank-R CP decomposition tools"};
  app.require_subcommand(1);
  int status = kExitConverged;

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a tensor file");
  gen->require_subcommand(1);

  auto* gen_mult = gen->add_subcommand("mult", "Matrix multiplication tensor of (MxN)(NxP)");
  std::size_t mm = 2, mn = 2, mp = 2;
  std::string mult_out;
  gen_mult->add_option("M", mm)->required()->check(CLI::PositiveNumber);
  gen_mult->add_option("N", mn)->required()->check(CLI::PositiveNumber);
  gen_mult->add_option("P", mp)->required()->check(CLI::PositiveNumber);
  gen_mult->add_option("-o,--output", mult_out, "Output .ten file")->required();
  gen_mult->callback([&] {
    paro::write_tensor_file(mult_out, paro::mult_tensor({mm, mn, mp}));
  });

  auto* gen_random = gen->add_subcommand("random", "Random Kruskal tensor");
  std::string dims_text, collinear_text, blocks_text, random_out;
  std::size_t random_rank = 1;
  std::uint64_t random_seed = 0;
  double snr_db = std::numeric_limits<double>::infinity();
  gen_random->add_option("--dims", dims_text, "Extents, e.g. 5,5,5")->required();
  gen_random->add_option("--rank", random_rank)->required()->check(CLI::PositiveNumber);
  gen_random->add_option("--collinear", collinear_text, "Cosine range LO,HI within blocks");
  gen_random->add_option("--blocks", blocks_text, "Block sizes summing to the rank, e.g. 4,4");
  gen_random->add_option("--snr", snr_db, "Additive Gaussian noise level in dB");
  gen_random->add_option("--seed", random_seed);
  gen_random->add_option("-o,--output", random_out, "Output .ten file")->required();
  gen_random->callback([&] {
    std::optional<paro::Collinearity> col;
    if (!collinear_text.empty()) {
      const auto comma = collinear_text.find(',');
      if (comma == std::string::npos) throw std::invalid_argument("--collinear expects LO,HI");
      paro::Collinearity c;
      c.lo = std::stod(collinear_text.substr(0, comma));
      c.hi = std::stod(collinear_text.substr(comma + 1));
      c.blocks = blocks_text.empty() ? std::vector<std::size_t>{random_rank}
                                     : parse_sizes(blocks_text);
      col = c;
    }
    const auto rk = paro::random_kruskal(parse_sizes(dims_text), random_rank, random_seed, col);
    paro::write_tensor_file(random_out, paro::add_noise(rk.tensor, snr_db, random_seed));
  });

  auto* gen_gauss = gen->add_subcommand("gaussian", "Tensor with standard normal entries");
  std::string gauss_dims, gauss_out;
  std::uint64_t gauss_seed = 0;
  gen_gauss->add_option("--dims", gauss_dims, "Extents, e.g. 10,10,10")->required();
  gen_gauss->add_option("--seed", gauss_seed);
  gen_gauss->add_option("-o,--output", gauss_out, "Output .ten file")->required();
  gen_gauss->callback([&] {
    paro::write_tensor_file(gauss_out, paro::gaussian_tensor(parse_sizes(gauss_dims), gauss_seed));
  });

  // rank1
  auto* rank1 = app.add_subcommand("rank1", "Best rank-1 approximation");
  std::string r1_input, r1_algo = "als", r1_init = "svd", r1_trace, r1_policy = "openmp";
  double r1_tol = 1e-12;
  std::size_t r1_max_iters = 1000;
  rank1->add_option("-i,--input", r1_input, "Input .ten file")->required();
  rank1->add_option("--algo", r1_algo, "als | r1lm | roro");
  rank1->add_option("--init", r1_init, "svd | ttsvd | ttsvd:P0,P1,... | ttsvd-best");
  rank1->add_option("--tol", r1_tol, "Stop when the error changes by less than this");
  rank1->add_option("--max-iters", r1_max_iters);
  rank1->add_option("--trace", r1_trace, "Write the per-iteration CSV trace");
  rank1->add_option("--policy", r1_policy, "serial | openmp (ttsvd-best permutations)");
  rank1->callback([&] {
    const paro::DenseTensor t = paro::read_tensor_file(r1_input);
    paro::Rank1Options opts;
    opts.algorithm = paro::parse_rank1_algorithm(r1_algo);
    opts.init = paro::parse_rank1_init(r1_init);
    opts.tol = r1_tol;
    opts.max_iters = r1_max_iters;
    opts.policy = paro::parse_execution_policy(r1_policy);
    const paro::Rank1Result res = paro::solve_rank1(t, opts);
    std::cout.precision(17);
    std::cout << "weight: " << res.model.weight << "\n"
              << "relative_error: " << res.trace.back() << "\n"
              << "iterations: " << res.trace.size() - 1 << "\n"
              << "status: " << (res.converged ? "converged" : "max-iters") << "\n";
    if (!res.perm.empty()) {
      std::cout << "permutation:";
      for (std::size_t p : res.perm) std::cout << ' ' << p;
      std::cout << "\n";
    }
    for (std::size_t n = 0; n < res.model.order(); ++n) {
      std::cout << "u" << n << ":";
      for (Eigen::Index i = 0; i < res.model.factors[n].size(); ++i) {
        std::cout << ' ' << res.model.factors[n](i);
      }
      std::cout << "\n";
    }
    if (!r1_trace.empty()) {
      auto out = open_output(r1_trace);
      paro::write_trace_header(out);
      std::vector<paro::IterationRecord> records;
      for (std::size_t k = 0; k < res.trace.size(); ++k) {
        paro::IterationRecord rec;
        rec.iter = k;
        rec.relative_error = res.trace[k];
        rec.elapsed_ms = std::numeric_limits<double>::quiet_NaN();
        records.push_back(rec);
      }
      paro::write_trace_rows(out, r1_algo, 0, records);
    }
    status = res.converged ? kExitConverged : kExitMaxIters;
  });

  // cpd
  auto* cpd = app.add_subcommand("cpd", "Rank-R CP decomposition");
  std::string cpd_input, cpd_algo = "paro", cpd_schedule = "adaptive:20:1.4142135623730951:5",
                         cpd_inner = "als", cpd_trace, cpd_factors, cpd_policy = "openmp";
  std::size_t cpd_rank = 1, cpd_max_iters = 1000, cpd_inner_steps = 1;
  std::uint64_t cpd_seed = 0;
  double cpd_tol = 1e-6;
  bool no_epc = false;
  cpd->add_option("-i,--input", cpd_input, "Input .ten file")->required();
  cpd->add_option("--rank", cpd_rank)->required()->check(CLI::PositiveNumber);
  cpd->add_option("--algo", cpd_algo, "als | paro");
  cpd->add_option("--schedule", cpd_schedule, "fixed:G | regular:K:ETA | adaptive:K:ETA:G0");
  cpd->add_option("--inner", cpd_inner, "Rank-1 step used by paro: als | r1lm | roro");
  cpd->add_option("--inner-steps", cpd_inner_steps, "Rank-1 steps per paro iteration");
  cpd->add_option("--seed", cpd_seed, "Seed of the random initialization");
  cpd->add_option("--tol", cpd_tol, "Stop when the relative error reaches this");
  cpd->add_option("--max-iters", cpd_max_iters);
  cpd->add_flag("--no-epc", no_epc, "Skip the initial rescaling of the random model");
  cpd->add_option("--trace", cpd_trace, "Write the per-iteration CSV trace");
  cpd->add_option("--factors", cpd_factors, "Write factor n to PREFIX_n.ten");
  cpd->add_option("--policy", cpd_policy, "serial | openmp (paro component loop)");
  cpd->callback([&] {
    const paro::DenseTensor t = paro::read_tensor_file(cpd_input);
    paro::KruskalModel init = paro::random_kruskal_init(t.shape(), cpd_rank, cpd_seed);
    if (!no_epc) init = paro::epc_init(t, init);
    std::vector<paro::IterationRecord> trace;
    paro::KruskalModel model;
    paro::StopReason reason;
    if (cpd_algo == "als") {
      paro::CpdAlsOptions opts;
      opts.tol = cpd_tol;
      opts.max_iters = cpd_max_iters;
      auto res = paro::cpd_als(t, init, opts);
      trace = std::move(res.trace);
      model = std::move(res.model);
      reason = res.reason;
    } else if (cpd_algo == "paro") {
      paro::ParoOptions opts;
      opts.schedule = paro::parse_mu_schedule(cpd_schedule);
      opts.inner = paro::parse_rank1_algorithm(cpd_inner);
      opts.inner_steps = cpd_inner_steps;
      opts.tol = cpd_tol;
      opts.max_iters = cpd_max_iters;
      opts.seed = cpd_seed;
      opts.policy = paro::parse_execution_policy(cpd_policy);
      auto res = paro::paro_decompose(t, init, opts);
      trace = std::move(res.trace);
      model = std::move(res.model);
      reason = res.reason;
    } else {
      throw std::invalid_argument("--algo must be als or paro");
    }
    std::cout.precision(17);
    std::cout << "relative_error: " << trace.back().relative_error << "\n"
              << "iterations: " << trace.back().iter << "\n"
              << "status: " << paro::to_string(reason) << "\n";
    if (!cpd_trace.empty()) {
      auto out = open_output(cpd_trace);
      paro::write_trace_header(out);
      paro::write_trace_rows(out, cpd_algo, 0, trace);
    }
    if (!cpd_factors.empty()) {
      for (std::size_t n = 0; n < model.order(); ++n) {
        const paro::Matrix& u = model.factors[n];
        paro::DenseTensor m({static_cast<std::size_t>(u.rows()), static_cast<std::size_t>(u.cols())},
                            std::vector<double>(u.data(), u.data() + u.size()));
        paro::write_tensor_file(cpd_factors + "_" + std::to_string(n) + ".ten", m);
      }
    }
    status = exit_code(reason);
  });

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run an experiment spec");
  std::string exp_kind, exp_spec, exp_output;
  experiment->add_option("kind", exp_kind, "success-ratio | convergence")
      ->required()
      ->check(CLI::IsMember({"success-ratio", "convergence"}));
  experiment->add_option("--spec", exp_spec, "Spec file")->required();
  experiment->add_option("--output", exp_output, "Overrides the spec's output prefix");
  experiment->callback([&] {
    paro::ExperimentSpec spec = paro::read_experiment_spec(exp_spec);
    if (!exp_output.empty()) spec.output = exp_output;
    std::cout.precision(6);
    if (exp_kind == "success-ratio") {
      const paro::SuccessTable table = paro::run_success_ratio(spec);
      auto summary = open_output(spec.output + "_summary.csv");
      paro::write_summary_csv(summary, table, spec);
      auto runs = open_output(spec.output + "_runs.csv");
      paro::write_runs_csv(runs, table);
      for (std::size_t v = 0; v < table.variants.size(); ++v) {
        std::cout << table.variants[v] << ": success " << 100.0 * table.success_ratio[v]
                  << "%, failure " << 100.0 * table.failure_ratio[v] << "%\n";
      }
    } else {
      const auto traces = paro::run_convergence(spec);
      auto out = open_output(spec.output + "_trace.csv");
      paro::write_trace_header(out);
      for (const auto& t : traces) {
        paro::write_trace_rows(out, t.variant, t.run, t.records);
        std::cout << t.variant << " run " << t.run << ": " << t.records.back().relative_error
                  << " after " << t.records.back().iter << " iterations\n";
      }
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return status;
}
