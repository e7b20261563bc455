// Command-line front end: generate games, run experiments, score saved
// policy sets and re-render plots from ledger CSVs.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "epsro/epsro.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, io_error = 3, run_error = 4 };

struct RunArgs {
   std::string config;
   std::optional<std::uint64_t> seed;
   bool deterministic = false;
   std::string out_dir;
};

std::optional<std::uint64_t> env_seed()
{
   const char* s = std::getenv("EPSRO_SEED");
   if(s == nullptr or *s == '\0') {
      return std::nullopt;
   }
   char* end = nullptr;
   const unsigned long long v = std::strtoull(s, &end, 10);
   if(*end != '\0') {
      throw epsro::FormatError(std::string("EPSRO_SEED is not an integer: '") + s + "'");
   }
   return v;
}

epsro::ExperimentConfig load_experiment(const RunArgs& a)
{
   epsro::Config cfg = epsro::Config::load(a.config);
   // the flag wins over the environment, which wins over the file
   std::optional<std::uint64_t> seed = a.seed;
   if(not seed) {
      seed = env_seed();
   }
   if(seed) {
      cfg.set("run.seed", std::to_string(*seed));
   }
   if(a.deterministic) {
      cfg.set("run.deterministic", "true");
   }
   if(not a.out_dir.empty()) {
      cfg.set("output.dir", a.out_dir);
   }
   return epsro::parse_experiment(cfg);
}

int cmd_run(const RunArgs& a)
{
   epsro::ExperimentConfig x;
   try {
      x = load_experiment(a);
   } catch(const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return config_error;
   }
   epsro::ExperimentOutput out;
   try {
      out = epsro::run_experiment(x);
   } catch(const epsro::FormatError& e) {
      std::cerr << "input error: " << e.what() << '\n';
      return config_error;
   } catch(const std::exception& e) {
      std::cerr << "run failed: " << e.what() << '\n';
      return run_error;
   }
   try {
      std::optional<epsro::MixtureGame> mixture;
      if(x.game.kind == "mixture") {
         mixture.emplace(x.game.mixture);
      }
      epsro::write_experiment(x.out_dir, out, mixture ? &*mixture : nullptr, x.coverage_radius);
   } catch(const std::exception& e) {
      std::cerr << "output error: " << e.what() << '\n';
      return io_error;
   }
   for(const auto& r : out.summary) {
      std::cout << r.algo << " seed " << r.seed << ": NashConv " << r.last.nashconv << " after " << r.last.epoch << " epochs";
      if(r.coverage >= 0) {
         std::cout << ", coverage " << r.coverage;
      }
      std::cout << '\n';
   }
   std::cout << "wrote " << x.out_dir.string() << '\n';
   return ok;
}

struct GenerateArgs {
   std::string kind = "random_symmetric";
   epsro::Index n = 15;
   epsro::Index rows = 10;
   epsro::Index cols = 10;
   std::uint64_t seed = 0;
   std::string out;
};

int cmd_generate(const GenerateArgs& a)
{
   epsro::MatrixGame game;
   try {
      epsro::GameSpec spec;
      spec.kind = a.kind;
      spec.n = a.n;
      spec.rows = a.rows;
      spec.cols = a.cols;
      spec.seed = a.seed;
      if(a.kind == "kuhn" or a.kind == "mixture" or a.kind == "file") {
         throw epsro::FormatError("generate writes matrix games only, not '" + a.kind + "'");
      }
      game = std::get<epsro::MatrixGame>(epsro::make_game(spec));
   } catch(const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return config_error;
   }
   try {
      if(a.out.empty() or a.out == "-") {
         epsro::write_matrix_csv(std::cout, game);
      } else {
         epsro::save_matrix_csv(a.out, game);
      }
   } catch(const std::exception& e) {
      std::cerr << "output error: " << e.what() << '\n';
      return io_error;
   }
   return ok;
}

struct EvalArgs {
   std::string config;
   std::string test;
   std::string ref;
   std::uint64_t episodes = 0;
   std::uint64_t seed = 0;
};

epsro::PolicySetFile load_set(const std::string& path)
{
   std::ifstream is(path);
   if(not is) {
      throw epsro::FormatError("cannot open '" + path + "'");
   }
   return epsro::read_policy_set(is, path);
}

int cmd_eval(const EvalArgs& a)
{
   epsro::AnyGame game;
   epsro::PolicySetFile test;
   epsro::PolicySetFile ref;
   try {
      const epsro::ExperimentConfig x = epsro::parse_experiment(epsro::Config::load(a.config));
      game = epsro::make_game(x.game);
      test = load_set(a.test);
      ref = load_set(a.ref);
   } catch(const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return config_error;
   }
   try {
      const auto scores = epsro::eval_policy_sets(game, test, ref, a.episodes, a.seed);
      std::cout << "prefix,score\n";
      for(std::size_t i = 0; i < scores.size(); ++i) {
         std::cout << i + 1 << ',' << epsro::detail::format_double(scores[i]) << '\n';
      }
   } catch(const epsro::FormatError& e) {
      std::cerr << "input error: " << e.what() << '\n';
      return config_error;
   } catch(const std::exception& e) {
      std::cerr << "eval failed: " << e.what() << '\n';
      return run_error;
   }
   return ok;
}

struct PlotArgs {
   std::vector<std::string> ledgers;
   std::string out_dir = ".";
};

int cmd_plot(const PlotArgs& a)
{
   std::vector<epsro::RunLedger> all;
   try {
      for(const auto& path : a.ledgers) {
         std::ifstream is(path);
         if(not is) {
            throw epsro::FormatError("cannot open '" + path + "'");
         }
         auto part = epsro::read_ledger_csv(is, path);
         for(auto& l : part) {
            all.push_back(std::move(l));
         }
      }
   } catch(const std::exception& e) {
      std::cerr << "input error: " << e.what() << '\n';
      return config_error;
   }
   try {
      epsro::write_files(a.out_dir, epsro::render_plots(all));
   } catch(const std::exception& e) {
      std::cerr << "output error: " << e.what() << '\n';
      return io_error;
   }
   return ok;
}

}  // namespace

int main(int argc, char** argv)
{
   CLI::App app{"EPSRO experiments: pipelined meta-strategy solving against PSRO baselines"};
   app.require_subcommand(1);

   RunArgs run;
   auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
   run_cmd->add_option("--config", run.config, "config file (section.key = value lines)")->required()->check(CLI::ExistingFile);
   run_cmd->add_option("--seed", run.seed, "base seed; overrides run.seed and EPSRO_SEED");
   run_cmd->add_flag("--deterministic", run.deterministic, "serialized runners, no wall-clock column");
   run_cmd->add_option("--out-dir", run.out_dir, "output directory; overrides output.dir");

   GenerateArgs gen;
   auto* gen_cmd = app.add_subcommand("generate", "write a matrix game as CSV");
   gen_cmd->add_option("--kind", gen.kind, "random_symmetric, random_zero_sum, matching_pennies or rps");
   gen_cmd->add_option("--n", gen.n, "strategies of a random symmetric game");
   gen_cmd->add_option("--rows", gen.rows, "rows of a random zero-sum game");
   gen_cmd->add_option("--cols", gen.cols, "columns of a random zero-sum game");
   gen_cmd->add_option("--seed", gen.seed, "generator seed");
   gen_cmd->add_option("--out", gen.out, "output file (stdout when omitted)");

   EvalArgs ev;
   auto* eval_cmd = app.add_subcommand("eval", "prefix scores of a saved policy set against a reference set");
   eval_cmd->add_option("--config", ev.config, "config naming the game")->required()->check(CLI::ExistingFile);
   eval_cmd->add_option("--test", ev.test, "test policy set CSV")->required();
   eval_cmd->add_option("--ref", ev.ref, "reference policy set CSV")->required();
   eval_cmd->add_option("--episodes", ev.episodes, "episodes per cell; 0 evaluates exactly");
   eval_cmd->add_option("--seed", ev.seed, "sampling seed");

   PlotArgs plot;
   auto* plot_cmd = app.add_subcommand("plot", "re-render NashConv plots from ledger CSVs");
   plot_cmd->add_option("--ledger", plot.ledgers, "ledger CSV (repeatable)")->required();
   plot_cmd->add_option("--out-dir", plot.out_dir, "output directory");

   CLI11_PARSE(app, argc, argv);

   if(run_cmd->parsed()) {
      return cmd_run(run);
   }
   if(gen_cmd->parsed()) {
      return cmd_generate(gen);
   }
   if(eval_cmd->parsed()) {
      return cmd_eval(ev);
   }
   return cmd_plot(plot);
}
