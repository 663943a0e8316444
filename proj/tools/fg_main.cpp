// Copyright (c) 2026 The fginfer Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fg/audit.hpp"
#include "fg/bp.hpp"
#include "fg/dataset.hpp"
#include "fg/exact.hpp"
#include "fg/fegnn.hpp"
#include "fg/fenbp.hpp"
#include "fg/generators.hpp"
#include "fg/metrics.hpp"
#include "fg/nn.hpp"
#include "fg/parallel.hpp"
#include "fg/search.hpp"
#include "fg/train.hpp"
#include "fg/uai.hpp"
#include "fg/witness.hpp"

namespace {

using nlohmann::json;

json number_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(1) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << "\n";
}

json metrics_to_json(const fg::Metrics& m, const std::string& algo, const std::string& dataset,
                     std::uint64_t seed, const json& config) {
  json per = json::array();
  for (std::size_t k = 0; k < std::max(m.per_instance_kl.size(), m.per_instance_uai.size()); ++k) {
    json row;
    if (k < m.per_instance_kl.size()) row["kl"] = number_or_string(m.per_instance_kl[k]);
    if (k < m.per_instance_uai.size()) row["uai_score"] = number_or_string(m.per_instance_uai[k]);
    per.push_back(row);
  }
  return json{{"algo", algo},
              {"dataset", dataset},
              {"kl", number_or_string(m.kl)},
              {"rmse", number_or_string(m.rmse)},
              {"uai_score", number_or_string(m.uai_score)},
              {"per_instance", per},
              {"seed", seed},
              {"config", config}};
}

std::vector<fg::ExactResult> labels_of(const std::vector<fg::StoredInstance>& data) {
  std::vector<fg::ExactResult> labels;
  for (const auto& inst : data) {
    if (!inst.label) throw std::runtime_error("dataset instance lacks oracle labels");
    labels.push_back(*inst.label);
  }
  return labels;
}

struct InferOptions {
  std::string algo = "bp";
  fg::BpMode mode = fg::BpMode::sum;
  double damping = 0.0;
  int iters = 0;  // 0: per-algo default
  std::string ckpt;
  std::uint64_t seed = 0;
  int hidden = 5;
  bool graph_norm = false;
  double init_damping = 0.5;
};

fg::BpMode mode_from(const std::string& s) {
  if (s == "sum") return fg::BpMode::sum;
  if (s == "max") return fg::BpMode::max;
  throw std::runtime_error("unknown mode: " + s);
}

/// Shared by `infer` and `eval`: per-instance estimates for any algorithm.
std::vector<fg::InstanceEstimate> run_inference(const std::vector<fg::StoredInstance>& data,
                                                const InferOptions& opt) {
  std::vector<fg::InstanceEstimate> estimates(data.size());

  fg::FeNbpModel fenbp;
  fg::FeGnnModel fegnn;
  if (opt.algo == "fenbp") {
    fg::FeNbpConfig cfg;
    cfg.iterations = opt.iters > 0 ? opt.iters : 10;
    cfg.mode = opt.mode;
    cfg.graph_norm = opt.graph_norm;
    fenbp = fg::FeNbpModel::zero_init(cfg);
    if (!opt.ckpt.empty()) fg::load_params(fenbp.params, opt.ckpt);
  } else if (opt.algo == "fegnn") {
    fg::FeGnnConfig cfg;
    cfg.hidden_dim = opt.hidden;
    cfg.layers = opt.iters > 0 ? opt.iters : 10;
    fegnn = fg::FeGnnModel::zero_init(cfg);
    if (!opt.ckpt.empty()) fg::load_params(fegnn.params, opt.ckpt);
  }

  fg::parallel_for_index(int(data.size()), [&](int k) {
    const fg::FactorGraph& g = data[std::size_t(k)].graph;
    fg::InstanceEstimate est;
    if (opt.algo == "exact") {
      fg::ExactResult r = fg::enumerate(g);
      est.marginals = r.marginals;
      est.map_assignment = r.map_assignment;
      est.map_log_score = r.map_log_score;
    } else if (opt.algo == "bp" || opt.algo == "fenbp") {
      fg::BpResult r;
      if (opt.algo == "bp") {
        fg::BpConfig cfg;
        cfg.mode = opt.mode;
        cfg.damping = opt.damping;
        cfg.max_iters = opt.iters > 0 ? opt.iters : 200;
        r = fg::run_bp(g, cfg);
      } else {
        fg::FeNbpModel local = fenbp;  // tapes bind one store; keep runs independent
        r = fg::fenbp_forward(g, local);
      }
      if (opt.mode == fg::BpMode::sum) est.marginals = r.beliefs.variable_beliefs;
      est.map_assignment = fg::decode_map(r.beliefs);
      est.map_log_score = g.log_score(*est.map_assignment);
    } else if (opt.algo == "fegnn") {
      fg::FeGnnModel local = fegnn;
      est.marginals = fg::fegnn_forward(g, local);
      fg::BeliefSet bs;
      bs.variable_beliefs = *est.marginals;
      est.map_assignment = fg::decode_map(bs);
      est.map_log_score = g.log_score(*est.map_assignment);
    } else if (opt.algo == "beam" || opt.algo == "bestfirst") {
      fg::SearchConfig cfg;
      cfg.seed = opt.seed ^ std::uint64_t(k) * 0x9E3779B97F4A7C15ULL;
      fg::SearchResult r =
          opt.algo == "beam" ? fg::beam_search(g, cfg) : fg::best_first_search(g, cfg);
      est.map_assignment = r.assignment;
      est.map_log_score = r.log_score;
    } else {
      throw std::runtime_error("unknown algo: " + opt.algo);
    }
    estimates[std::size_t(k)] = std::move(est);
  });
  return estimates;
}

int cmd_gen(const std::string& family, int n, int count, std::uint64_t seed, double sigma_b,
            double sigma_j, const std::string& out_dir) {
  fg::DatasetSpec spec;
  spec.family = fg::family_from_name(family);
  spec.n = n;
  spec.count = count;
  spec.seed = seed;
  spec.sigma_b = sigma_b;
  spec.sigma_j = sigma_j;
  auto data = fg::gen_dataset(spec);
  fg::save_dataset(out_dir, spec, data);
  int labeled = 0;
  for (const auto& inst : data) labeled += inst.label.has_value();
  std::cout << json{{"written", count}, {"labeled", labeled}, {"dir", out_dir}}.dump() << "\n";
  return 0;
}

int cmd_infer(const std::string& in_dir, const std::string& metrics_path, const InferOptions& opt,
              const json& config) {
  auto data = fg::load_dataset(in_dir);
  auto estimates = run_inference(data, opt);
  fg::Metrics m = fg::compute_metrics(estimates, labels_of(data));
  write_json(metrics_path, metrics_to_json(m, opt.algo, in_dir, opt.seed, config));
  return 0;
}

int cmd_train(const std::string& model_name, const std::string& train_dir,
              const std::string& val_dir, const std::string& ckpt, fg::TrainConfig tc,
              const InferOptions& opt) {
  auto train_data = fg::as_labeled(fg::load_dataset(train_dir));
  auto val_data = fg::as_labeled(fg::load_dataset(val_dir));
  fg::TrainHistory hist;
  if (model_name == "fenbp") {
    fg::FeNbpConfig cfg;
    cfg.iterations = opt.iters > 0 ? opt.iters : 10;
    cfg.mode = opt.mode;
    cfg.graph_norm = opt.graph_norm;
    fg::FeNbpModel model = fg::FeNbpModel::zero_init(cfg, opt.init_damping);
    if (!opt.ckpt.empty()) fg::load_params(model.params, opt.ckpt);
    hist = opt.mode == fg::BpMode::max ? fg::fenbp_train_map(model, train_data, val_data, tc)
                                       : fg::fenbp_train_marginals(model, train_data, val_data, tc);
    fg::save_params(model.params, ckpt);
  } else if (model_name == "fegnn") {
    fg::FeGnnConfig cfg;
    cfg.hidden_dim = opt.hidden;
    cfg.layers = opt.iters > 0 ? opt.iters : 10;
    fg::FeGnnModel model = opt.ckpt.empty()
                               ? fg::FeGnnModel::random_init(cfg, tc.seed)
                               : fg::FeGnnModel::zero_init(cfg);
    if (!opt.ckpt.empty()) fg::load_params(model.params, opt.ckpt);
    hist = fg::fegnn_train(model, train_data, val_data, tc);
    fg::save_params(model.params, ckpt);
  } else {
    throw std::runtime_error("unknown model: " + model_name);
  }
  std::cout << json{{"epochs_run", hist.train_loss.size()},
                    {"best_epoch", hist.best_epoch},
                    {"best_val_loss", hist.best_val_loss},
                    {"train_loss", hist.train_loss},
                    {"val_loss", hist.val_loss},
                    {"ckpt", ckpt}}
                   .dump(1)
            << "\n";
  return 0;
}

int cmd_permaudit(const std::string& algo, int graphs, int witnesses, double tol,
                  std::uint64_t seed, const std::string& out_path) {
  fg::Rng rng(seed);
  const bool binary_only = algo == "fegnn";
  std::vector<fg::FactorGraph> gs;
  for (int k = 0; k < graphs; ++k)
    gs.push_back(fg::random_audit_graph(rng, 8, 4, binary_only));

  std::function<std::vector<std::vector<double>>(const fg::FactorGraph&)> infer;
  std::vector<fg::Symmetry> asserted{fg::Symmetry::global, fg::Symmetry::local,
                                     fg::Symmetry::assignment};
  fg::FeNbpModel fenbp = fg::FeNbpModel::random_init(fg::FeNbpConfig{}, seed ^ 0xF17EULL);
  fg::FeGnnModel fegnn = fg::FeGnnModel::random_init(fg::FeGnnConfig{}, seed ^ 0xF17EULL);
  if (algo == "bp") {
    infer = [](const fg::FactorGraph& g) {
      fg::BpConfig cfg;
      cfg.damping = 0.5;
      cfg.max_iters = 30;
      cfg.convergence_tol = 0.0;
      return fg::run_bp(g, cfg).beliefs.variable_beliefs;
    };
  } else if (algo == "fenbp") {
    infer = [&](const fg::FactorGraph& g) { return fg::fenbp_marginals(g, fenbp); };
  } else if (algo == "fegnn") {
    infer = [&](const fg::FactorGraph& g) { return fg::fegnn_forward(g, fegnn); };
    asserted = {fg::Symmetry::global, fg::Symmetry::local};
  } else {
    throw std::runtime_error("unknown algo for permaudit: " + algo);
  }

  fg::AuditReport report = audit_equivariance(algo, infer, gs, witnesses, tol, seed, asserted);
  json rows = json::array();
  for (const auto& row : report.results)
    rows.push_back({{"symmetry", fg::symmetry_name(row.symmetry)},
                    {"asserted", row.asserted},
                    {"max_deviation", row.max_deviation},
                    {"comparisons", row.comparisons},
                    {"pass", row.pass}});
  write_json(out_path, json{{"model", report.model},
                            {"tolerance", report.tolerance},
                            {"graphs", graphs},
                            {"witnesses_per_symmetry", witnesses},
                            {"seed", seed},
                            {"results", rows},
                            {"pass", report.pass}});
  return report.pass ? 0 : 2;
}

int cmd_gradcheck(const std::string& target, std::uint64_t seed, const std::string& out_path) {
  fg::DatasetSpec spec;
  spec.family = fg::Family::asym_bmrf;
  spec.n = 3;
  spec.count = 1;
  spec.seed = seed;
  auto data = fg::gen_dataset(spec);
  const fg::FactorGraph& g = data[0].graph;
  const fg::ExactResult& label = *data[0].label;

  fg::GradCheckOptions opt;
  opt.max_coords = 50;
  opt.seed = seed;

  json out = json::array();
  bool pass = true;
  auto record = [&](const std::string& name, const fg::GradCheckResult& r) {
    bool ok = r.max_rel_err < 1e-4 && r.checked > 0;
    pass = pass && ok;
    out.push_back({{"target", name},
                   {"max_rel_err", r.max_rel_err},
                   {"checked", r.checked},
                   {"skipped", r.skipped},
                   {"pass", ok}});
  };

  if (target == "fenbp-marginal" || target == "all") {
    fg::FeNbpConfig cfg;
    cfg.iterations = 5;
    fg::FeNbpModel model = fg::FeNbpModel::random_init(cfg, seed + 1);
    record("fenbp-marginal", fg::gradcheck(
                                 [&](fg::Tape& t) {
                                   return fg::fenbp_marginal_loss(t, g, model.params, cfg,
                                                                  label.marginals);
                                 },
                                 model.params, opt));
  }
  if (target == "fenbp-uai" || target == "all") {
    fg::FeNbpConfig cfg;
    cfg.iterations = 5;
    cfg.mode = fg::BpMode::max;
    fg::FeNbpModel model = fg::FeNbpModel::random_init(cfg, seed + 2);
    record("fenbp-uai", fg::gradcheck(
                            [&](fg::Tape& t) {
                              return fg::fenbp_uai_loss(t, g, model.params, cfg,
                                                        label.map_log_score);
                            },
                            model.params, opt));
  }
  if (target == "fegnn-marginal" || target == "all") {
    fg::FeGnnConfig cfg;
    cfg.layers = 4;
    fg::FeGnnModel model = fg::FeGnnModel::random_init(cfg, seed + 3);
    record("fegnn-marginal", fg::gradcheck(
                                 [&](fg::Tape& t) {
                                   return fg::fegnn_marginal_loss(t, g, model.params, cfg,
                                                                  label.marginals);
                                 },
                                 model.params, opt));
  }
  if (out.empty()) throw std::runtime_error("unknown gradcheck target: " + target);
  write_json(out_path, json{{"seed", seed}, {"results", out}, {"pass", pass}});
  return pass ? 0 : 2;
}

int cmd_bounds(const std::string& in_dir, const std::string& algo, std::uint64_t seed,
               const std::string& metrics_path) {
  auto data = fg::load_dataset(in_dir);
  json rows = json::array();
  bool all_ok = true;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const fg::FactorGraph& g = data[k].graph;
    if (!data[k].label) throw std::runtime_error("bounds requires oracle labels");
    const fg::ExactResult& label = *data[k].label;
    fg::BpResult r;
    if (algo == "fenbp") {
      fg::FeNbpConfig cfg;
      cfg.mode = fg::BpMode::max;
      fg::FeNbpModel model = fg::FeNbpModel::random_init(cfg, seed);
      r = fg::fenbp_forward(g, model);
    } else {
      fg::BpConfig cfg;
      cfg.mode = fg::BpMode::max;
      cfg.damping = 0.5;
      r = fg::run_bp(g, cfg);
    }
    auto [lower, upper] = fg::map_bounds(g, r, label.log_Z);
    double p_star = std::exp(label.map_log_score - label.log_Z);
    bool ok = lower <= p_star + 1e-10 && upper >= p_star - 1e-10;
    all_ok = all_ok && ok;
    rows.push_back({{"index", k},
                    {"lower", lower},
                    {"upper", upper},
                    {"p_star", p_star},
                    {"sandwich_ok", ok}});
  }
  write_json(metrics_path,
             json{{"algo", algo}, {"dataset", in_dir}, {"seed", seed}, {"instances", rows},
                  {"pass", all_ok}});
  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete factor-graph inference: exact enumeration, loopy BP, learned-damping BP,"
               " GNN message passing, local search, dataset generation and symmetry audits"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a seeded synthetic dataset with oracle labels");
  std::string family = "ising", out_dir;
  int n = 4, count = 1;
  std::uint64_t seed = 0;
  double sigma_b = 0.25, sigma_j = 1.0;
  gen->add_option("--family", family, "ising|asym")->capture_default_str();
  gen->add_option("--n", n, "grid side")->capture_default_str();
  gen->add_option("--count", count, "instances")->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--sigma-b", sigma_b, "bias std dev")->capture_default_str();
  gen->add_option("--sigma-j", sigma_j, "coupling std dev")->capture_default_str();
  gen->add_option("--out", out_dir, "output directory")->required();

  // infer / eval share options
  InferOptions iopt;
  std::string in_dir, metrics_path = "-", mode_str = "sum";
  auto add_infer_opts = [&](CLI::App* cmd, bool require_ckpt) {
    cmd->add_option("--in", in_dir, "dataset directory")->required();
    cmd->add_option("--metrics", metrics_path, "metric JSON output path, - for stdout");
    cmd->add_option("--mode", mode_str, "sum|max")->capture_default_str();
    cmd->add_option("--damping", iopt.damping)->capture_default_str();
    cmd->add_option("--iters", iopt.iters, "iterations/layers (0 = default)");
    auto* ck = cmd->add_option("--ckpt", iopt.ckpt, "parameter checkpoint");
    if (require_ckpt) ck->required();
    cmd->add_option("--seed", iopt.seed)->capture_default_str();
    cmd->add_option("--hidden", iopt.hidden, "GNN hidden dim")->capture_default_str();
    cmd->add_flag("--graph-norm", iopt.graph_norm, "graph-wise normalization inside phi");
  };

  auto* infer = app.add_subcommand("infer", "Run an inference algorithm over a dataset and score it");
  infer->add_option("--algo", iopt.algo, "exact|bp|fenbp|fegnn|beam|bestfirst")
      ->capture_default_str();
  add_infer_opts(infer, false);

  std::string eval_model = "fenbp";
  auto* eval = app.add_subcommand("eval", "Score a trained checkpoint on a dataset");
  eval->add_option("--model", eval_model, "fenbp|fegnn")->capture_default_str();
  add_infer_opts(eval, true);

  // train
  auto* train = app.add_subcommand("train", "Train a model; writes the best-validation checkpoint");
  std::string train_model = "fenbp", train_dir, val_dir, ckpt_out;
  fg::TrainConfig tc;
  train->add_option("--model", train_model, "fenbp|fegnn")->capture_default_str();
  train->add_option("--train", train_dir, "training dataset dir")->required();
  train->add_option("--val", val_dir, "validation dataset dir")->required();
  train->add_option("--ckpt", ckpt_out, "checkpoint output path")->required();
  train->add_option("--init-ckpt", iopt.ckpt, "warm-start checkpoint");
  train->add_option("--mode", mode_str, "fenbp objective: sum (marginals) | max (MAP)")
      ->capture_default_str();
  train->add_option("--lr", tc.lr)->capture_default_str();
  train->add_option("--epochs", tc.epochs)->capture_default_str();
  train->add_option("--early-stop", tc.early_stop_window)->capture_default_str();
  train->add_option("--batch", tc.batch_size)->capture_default_str();
  train->add_option("--seed", tc.seed)->capture_default_str();
  train->add_option("--iters", iopt.iters, "iterations/layers (0 = default)");
  train->add_option("--hidden", iopt.hidden)->capture_default_str();
  train->add_option("--init-damping", iopt.init_damping, "fenbp initial damping ratio")
      ->capture_default_str();
  train->add_flag("--graph-norm", iopt.graph_norm);
  train->add_flag("--verbose", tc.verbose);

  // permaudit
  auto* permaudit = app.add_subcommand("permaudit", "Verify symmetry equivariance empirically");
  std::string audit_algo = "bp", audit_out = "-";
  int audit_graphs = 50, audit_witnesses = 10;
  double audit_tol = 1e-8;
  permaudit->add_option("--algo", audit_algo, "bp|fenbp|fegnn")->capture_default_str();
  permaudit->add_option("--graphs", audit_graphs)->capture_default_str();
  permaudit->add_option("--witnesses", audit_witnesses)->capture_default_str();
  permaudit->add_option("--tol", audit_tol)->capture_default_str();
  permaudit->add_option("--seed", seed)->capture_default_str();
  permaudit->add_option("--out", audit_out, "report path, - for stdout");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks of the training losses");
  std::string gc_target = "all", gc_out = "-";
  gradcheck->add_option("--target", gc_target, "all|fenbp-marginal|fenbp-uai|fegnn-marginal")
      ->capture_default_str();
  gradcheck->add_option("--seed", seed)->capture_default_str();
  gradcheck->add_option("--out", gc_out, "report path, - for stdout");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "MAP probability bounds against oracle labels");
  std::string bounds_algo = "bp";
  bounds->add_option("--in", in_dir, "dataset directory")->required();
  bounds->add_option("--algo", bounds_algo, "bp|fenbp")->capture_default_str();
  bounds->add_option("--seed", seed)->capture_default_str();
  bounds->add_option("--metrics", metrics_path, "report path, - for stdout");

  try {
    app.parse(argc, argv);
    iopt.mode = mode_from(mode_str);

    if (gen->parsed()) return cmd_gen(family, n, count, seed, sigma_b, sigma_j, out_dir);
    if (infer->parsed()) {
      json config{{"mode", mode_str},      {"damping", iopt.damping}, {"iters", iopt.iters},
                  {"ckpt", iopt.ckpt},     {"hidden", iopt.hidden},
                  {"graph_norm", iopt.graph_norm}};
      return cmd_infer(in_dir, metrics_path, iopt, config);
    }
    if (eval->parsed()) {
      iopt.algo = eval_model;
      json config{{"mode", mode_str}, {"iters", iopt.iters}, {"ckpt", iopt.ckpt},
                  {"hidden", iopt.hidden}, {"graph_norm", iopt.graph_norm}};
      return cmd_infer(in_dir, metrics_path, iopt, config);
    }
    if (train->parsed()) return cmd_train(train_model, train_dir, val_dir, ckpt_out, tc, iopt);
    if (permaudit->parsed())
      return cmd_permaudit(audit_algo, audit_graphs, audit_witnesses, audit_tol, seed, audit_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_target, seed, gc_out);
    if (bounds->parsed()) return cmd_bounds(in_dir, bounds_algo, seed, metrics_path);
    throw std::runtime_error("no subcommand");
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
}
