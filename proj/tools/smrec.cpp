#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "smrec/pipeline.hpp"

namespace fs = std::filesystem;
using namespace smrec;

namespace {

pipeline::ExperimentConfig load_config(const std::string& path, std::optional<uint64_t> seed) {
  pipeline::ExperimentConfig cfg =
      path.empty() ? pipeline::ExperimentConfig{} : pipeline::ExperimentConfig::from_json_file(path);
  if (seed) cfg.world.seed = *seed;
  return cfg;
}

pipeline::ArmSpec find_arm(const pipeline::ExperimentConfig& cfg, const std::string& name) {
  for (const auto& arm : cfg.effective_arms())
    if (arm.name == name) return arm;
  throw std::invalid_argument("unknown arm: " + name);
}

struct ArmData {
  feat::DatasetSplit split;
  model::ModelConfig mcfg;
};

ArmData build_arm_split(const pipeline::ExperimentConfig& cfg, const pipeline::ArmSpec& arm) {
  const datagen::World world = datagen::gen_world(cfg.world);
  const datagen::Interactions inter = datagen::gen_interactions(world);
  tok::Vocabulary vocab;
  const pipeline::TokenizerSpec spec = arm.tokenizer.value_or(cfg.tokenizer);
  if ((arm.groups.item_tokens || arm.groups.profile_tokens) &&
      spec.kind == pipeline::TokenizerSpec::Kind::kVocab)
    vocab = pipeline::train_arm_vocabulary(world, cfg);
  feat::Dataset dataset = pipeline::build_arm_dataset(world, inter.impressions, arm, cfg, &vocab);

  ArmData out;
  out.split = feat::split(dataset, cfg.split_ratio, cfg.split_seed);
  out.mcfg.embedding_dim = cfg.embedding_dim;
  out.mcfg.visual_dim = cfg.world.visual_dim;
  out.mcfg.hidden = cfg.hidden;
  out.mcfg.user_rows = cfg.user_table;
  out.mcfg.item_rows = cfg.item_table;
  out.mcfg.item_token_rows = spec.kind == pipeline::TokenizerSpec::Kind::kVocab
                                 ? static_cast<uint32_t>(vocab.size())
                                 : spec.num_buckets;
  out.mcfg.profile_token_rows = out.mcfg.item_token_rows;
  out.mcfg.groups = arm.groups;
  return out;
}

nlohmann::json report_json(const metrics::MetricReport& r) {
  return nlohmann::json{
      {"auc", r.auc}, {"ne", r.ne}, {"mean_auc", r.mean_auc()}, {"mean_ne", r.mean_ne()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MM-LLM caption-feature ranking pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "run";
  std::optional<uint64_t> seed;
  app.add_option("--config", config_path, "experiment config JSON");
  app.add_option("--seed", seed, "override world seed");
  app.add_option("--out", out_dir, "output directory");

  auto* cmd_datagen = app.add_subcommand("datagen", "generate the synthetic world");
  bool emit_bundles = false;
  std::string bundle_arm = "mmllm_tokenizer_a";
  cmd_datagen->add_flag("--emit-bundles", emit_bundles,
                        "also write the per-example feature bundle file");
  cmd_datagen->add_option("--arm", bundle_arm, "arm whose bundles to emit");

  auto* cmd_train = app.add_subcommand("train", "train one arm and save a checkpoint");
  std::string train_arm = "mmllm_tokenizer_a";
  cmd_train->add_option("--arm", train_arm, "arm to train");

  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on the eval split");
  std::string ckpt_path;
  std::string eval_arm = "mmllm_tokenizer_a";
  cmd_eval->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
  cmd_eval->add_option("--arm", eval_arm, "arm whose dataset to evaluate on");

  auto* cmd_experiment = app.add_subcommand("experiment", "run the full experiment matrix");

  auto* cmd_importance = app.add_subcommand("importance", "shuffle-all feature importance");
  std::string imp_arm = "mmllm_tokenizer_a";
  cmd_importance->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
  cmd_importance->add_option("--arm", imp_arm, "arm whose dataset to shuffle");

  auto* cmd_report = app.add_subcommand("report", "render tables from a run directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_datagen->parsed()) {
      const auto cfg = load_config(config_path, seed);
      fs::create_directories(fs::path(out_dir) / "world");
      const datagen::World world = datagen::gen_world(cfg.world);
      const datagen::Interactions inter = datagen::gen_interactions(world);
      datagen::write_world_manifest((fs::path(out_dir) / "world" / "manifest.json").string(),
                                    cfg.world);
      datagen::write_impressions((fs::path(out_dir) / "world" / "impressions.jsonl").string(),
                                 inter.impressions);
      prof::write_event_log((fs::path(out_dir) / "world" / "events.jsonl").string(),
                            inter.events);
      if (emit_bundles) {
        const auto arm = find_arm(cfg, bundle_arm);
        tok::Vocabulary vocab;
        const pipeline::TokenizerSpec spec = arm.tokenizer.value_or(cfg.tokenizer);
        if ((arm.groups.item_tokens || arm.groups.profile_tokens) &&
            spec.kind == pipeline::TokenizerSpec::Kind::kVocab)
          vocab = pipeline::train_arm_vocabulary(world, cfg);
        fs::create_directories(fs::path(out_dir) / "datasets");
        feat::write_dataset((fs::path(out_dir) / "datasets" / (bundle_arm + ".jsonl")).string(),
                            pipeline::build_arm_dataset(world, inter.impressions, arm, cfg,
                                                        &vocab));
      }
      std::cout << "world written to " << out_dir << "\n";
    } else if (cmd_train->parsed()) {
      const auto cfg = load_config(config_path, seed);
      const auto arm = find_arm(cfg, train_arm);
      auto data = build_arm_split(cfg, arm);
      model::TrainLog log;
      const auto params = model::train(data.split, data.mcfg, cfg.train, &log);
      fs::create_directories(fs::path(out_dir) / "checkpoints");
      const std::string ckpt =
          (fs::path(out_dir) / "checkpoints" / (train_arm + ".ckpt")).string();
      model::save_checkpoint(params, ckpt);
      nlohmann::json epochs = nlohmann::json::array();
      for (const auto& e : log.epochs)
        epochs.push_back({{"train_loss", e.train_loss},
                          {"eval_auc", e.eval_auc},
                          {"eval_ne", e.eval_ne}});
      fs::create_directories(fs::path(out_dir) / "metrics");
      std::ofstream((fs::path(out_dir) / "metrics" / (train_arm + "_train_log.json")).string())
          << nlohmann::json{{"epochs", epochs},
                            {"seconds_per_example", log.seconds_per_example}}
                 .dump(2)
          << "\n";
      std::cout << "checkpoint written to " << ckpt << "\n";
    } else if (cmd_eval->parsed()) {
      const auto cfg = load_config(config_path, seed);
      const auto params = model::load_checkpoint(ckpt_path);
      auto data = build_arm_split(cfg, find_arm(cfg, eval_arm));
      const auto probs = model::predict(data.split.eval, params);
      const auto report = metrics::compute_report(data.split.eval, probs);
      fs::create_directories(out_dir);
      const std::string path = (fs::path(out_dir) / (eval_arm + "_eval.json")).string();
      std::ofstream(path) << report_json(report).dump(2) << "\n";
      std::cout << report_json(report).dump(2) << "\n";
    } else if (cmd_experiment->parsed()) {
      const auto cfg = load_config(config_path, seed);
      const auto summary = pipeline::run_experiment(cfg, out_dir);
      std::cout << pipeline::render_reports(out_dir);
    } else if (cmd_importance->parsed()) {
      const auto cfg = load_config(config_path, seed);
      const auto params = model::load_checkpoint(ckpt_path);
      auto data = build_arm_split(cfg, find_arm(cfg, imp_arm));
      const auto ranked =
          metrics::rank_feature_groups(params, data.split.eval, cfg.eval.importance_seed);
      nlohmann::json out = nlohmann::json::array();
      for (const auto& r : ranked)
        out.push_back({{"group", feat::feature_group_name(r.group)},
                       {"delta_ne", r.delta_ne},
                       {"mean_delta_ne", r.mean_delta_ne}});
      std::cout << out.dump(2) << "\n";
    } else if (cmd_report->parsed()) {
      std::cout << pipeline::render_reports(out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
