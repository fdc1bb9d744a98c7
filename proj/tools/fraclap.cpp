// fraclap: run, verify and operator front end.
//
//   fraclap run <config.json>
//   fraclap verify <config.json>
//   fraclap ops --alpha A --side left --op deriv --in f.csv --out g.csv
//   fraclap schema
//
// Exit codes: 0 success, 2 validation error, 3 solver non-convergence or failed check.

#include <iostream>

#include "CLI11.hpp"
#include <fraclap/cli.hpp>

namespace {

using namespace fraclap;

int run_config(const std::string& path, bool check) {
  const cli::ProblemConfig cfg = cli::load_config(path);
  const cli::RunResult r = cli::run(cfg, check);
  std::cout << cli::problem_name(cfg.problem) << ": wrote";
  for (const auto& f : r.files) std::cout << ' ' << f.string();
  std::cout << ' ' << (cfg.output / "manifest.json").string() << '\n';
  if (check) std::cout << "checks " << (r.report.value("checks_pass", false) ? "pass" : "FAIL") << '\n';
  if (r.exit_code == 3 && !check) std::cerr << "fraclap: solver did not converge\n";
  return r.exit_code;
}

int run_ops(double alpha, const std::string& side, const std::string& op, const std::string& in, const std::string& out,
            const std::vector<double>& tags) {
  if (side != "left" && side != "right") throw error(errc::config, "--side must be left or right");
  std::optional<Exponents> t;
  if (!tags.empty()) {
    if (tags.size() != 2) throw error(errc::config, "--tags takes two exponents");
    t = Exponents{tags[0], tags[1]};
  }
  const GridFunction f = read_csv(in, t);
  const Side s = side == "left" ? Side::left : Side::right;
  GridFunction g;
  if (op == "deriv") g = rl_derivative(f, alpha, s);
  else if (op == "integral") g = rl_integral(f, alpha, s);
  else if (op == "riesz") g = riesz_weak_derivative(f, alpha);
  else throw error(errc::config, "--op must be deriv, integral or riesz");
  write_csv(g, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional Laplacian toolkit"};
  app.require_subcommand(1);
  std::string cfg_path;
  auto* run = app.add_subcommand("run", "solve the problem described by a config");
  run->add_option("config", cfg_path, "config JSON")->required();
  auto* ver = app.add_subcommand("verify", "solve or sample, then apply a posteriori checks");
  ver->add_option("config", cfg_path, "config JSON")->required();
  double alpha = 0.5;
  std::string side = "left", op = "deriv", in, out;
  std::vector<double> tags;
  auto* ops = app.add_subcommand("ops", "apply a one-sided operator to CSV samples");
  ops->add_option("--alpha", alpha, "order in (0,1)")->required();
  ops->add_option("--side", side, "left or right");
  ops->add_option("--op", op, "deriv, integral or riesz");
  ops->add_option("--in", in, "input CSV with header x,value")->required();
  ops->add_option("--out", out, "output CSV")->required();
  ops->add_option("--tags", tags, "endpoint exponents ea eb of the input")->expected(2);
  auto* sch = app.add_subcommand("schema", "print the config JSON schema");
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker cap (overrides FRACLAP_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (threads > 0) thread_override() = threads;

  try {
    if (*run) return run_config(cfg_path, false);
    if (*ver) return run_config(cfg_path, true);
    if (*ops) return run_ops(alpha, side, op, in, out, tags);
    if (*sch) {
      std::cout << cli::config_schema().dump(2) << '\n';
      return 0;
    }
  } catch (const error& e) {
    std::cerr << "fraclap: " << e.what() << '\n';
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "fraclap: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
