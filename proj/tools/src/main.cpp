#include "cpdsde/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace cpdsde::cli;
  CLI::App app{"Change point detection with latent stochastic differential equations"};
  app.require_subcommand(1);

  GenerateOptions gen;
  long gen_length = 0;
  auto* g = app.add_subcommand("generate", "Write the synthetic corpus");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Corpus seed");
  g->add_option("--rows", gen.rows, "Corpus rows to write (1..13)")->delimiter(',');
  g->add_option("--length", gen_length, "Total series length");

  TrainOptions tr;
  std::uint64_t tr_seed = 0;
  auto* t = app.add_subcommand("train", "Fit the latent SDE to one series");
  t->add_option("--data", tr.data, "Series CSV")->required();
  t->add_option("--config", tr.config, "Run config JSON");
  t->add_option("--out", tr.out, "Model JSON")->required();
  t->add_option("--loss", tr.loss, "Loss history CSV");
  auto* tr_seed_opt = t->add_option("--seed", tr_seed, "Training seed");
  t->add_option("--profile", tr.profile, "desk or paper");

  ScoreOptions sc;
  std::uint64_t sc_seed = 0;
  auto* s = app.add_subcommand("score", "Score a series with a trained model");
  s->add_option("--data", sc.data, "Series CSV")->required();
  s->add_option("--model", sc.model, "Model JSON")->required();
  s->add_option("--out", sc.out, "Scores JSON")->required();
  s->add_option("--detections", sc.detections, "Detections JSON");
  s->add_option("--config", sc.config, "Run config JSON");
  auto* sc_seed_opt = s->add_option("--seed", sc_seed, "Sampling seed");

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "Best-threshold metrics for one score series");
  e->add_option("--scores", ev.scores, "Scores JSON")->required();
  e->add_option("--labels", ev.labels, "Labels JSON")->required();
  e->add_option("--config", ev.config, "Run config JSON");
  e->add_option("--out", ev.out, "Report CSV")->required();
  e->add_option("--dataset", ev.dataset, "Dataset name for the report row");
  e->add_option("--seed", ev.seed, "Seed label for the report row");

  RunCorpusOptions rc;
  long rc_length = 0;
  auto* r = app.add_subcommand("run-corpus", "Train, score and evaluate the synthetic corpus");
  r->add_option("--config", rc.config, "Run config JSON");
  r->add_option("--out", rc.out, "Output directory")->required();
  r->add_option("--rows", rc.rows, "Corpus rows (1..13)")->delimiter(',');
  r->add_option("--seeds", rc.seeds, "Seeds")->delimiter(',');
  r->add_option("--length", rc_length, "Total series length");
  r->add_option("--profile", rc.profile, "desk or paper");
  r->add_option("--threads", rc.threads, "Worker threads (default CPD_SDE_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kInputError;
  }

  if (*g) {
    if (gen_length > 0) gen.length = gen_length;
    return cmd_generate(gen, std::cerr);
  }
  if (*t) {
    if (*tr_seed_opt) tr.seed = tr_seed;
    return cmd_train(tr, std::cerr);
  }
  if (*s) {
    if (*sc_seed_opt) sc.seed = sc_seed;
    return cmd_score(sc, std::cerr);
  }
  if (*e) return cmd_evaluate(ev, std::cerr);
  if (rc_length > 0) rc.length = rc_length;
  return cmd_run_corpus(rc, std::cout, std::cerr);
}
