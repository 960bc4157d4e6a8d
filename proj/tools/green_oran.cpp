#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oran/config.hpp"
#include "oran/experiment.hpp"
#include "oran/parallel.hpp"

namespace {

void emit_error(const std::string& mode, const std::string& message) {
  nlohmann::json j{{"error", message}, {"mode", mode}, {"code_version",
                   oran::experiment::code_version()}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"green-oran: eMBB/URLLC small-cell resource allocation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds;
  std::string master_checkpoint;
  std::string transfer_mode;
  int threads = 0;

  const std::vector<std::string> modes{"train_master", "train",  "eval",
                                       "sweep_arrival", "oracle", "gradcheck"};
  std::vector<CLI::App*> subs;
  for (const std::string& mode : modes) {
    CLI::App* sub = app.add_subcommand(mode);
    sub->add_option("--config", config_path, "experiment config (JSON)");
    sub->add_option("--seed", seeds, "seed list")->delimiter(',');
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--master-checkpoint", master_checkpoint,
                    "master policy checkpoint (teacher for transfer, policy for eval)");
    sub->add_option("--transfer", transfer_mode,
                    "transfer mode: on_policy | off_policy | random_init")
        ->check(CLI::IsMember({"on_policy", "off_policy", "random_init"}));
    sub->add_option("--threads", threads, "max worker threads for the parallel kernels");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);
  const std::string mode = app.get_subcommands().front()->get_name();

  try {
    if (threads > 0) oran::parallel::set_max_threads(threads);
    oran::config::ExperimentSpec spec;
    if (!config_path.empty()) spec = oran::config::load_config(config_path);
    spec.mode = mode;
    spec.output_dir = out_dir;
    if (!seeds.empty()) spec.seeds = seeds;
    if (!master_checkpoint.empty()) spec.master_checkpoint = master_checkpoint;
    if (!transfer_mode.empty()) spec.transfer_mode = transfer_mode;
    return oran::experiment::run(spec);
  } catch (const std::exception& e) {
    emit_error(mode, e.what());
    return 1;
  }
}
