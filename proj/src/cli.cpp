#include "gmwae/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmwae/checkpoint.hpp"
#include "gmwae/data.hpp"
#include "gmwae/evaluation.hpp"
#include "gmwae/generation.hpp"
#include "gmwae/synth.hpp"
#include "gmwae/trainer.hpp"

namespace gmwae {

namespace {

struct TrainArgs {
  std::string corpus, out;
  ModelConfig model;
  TrainConfig train;
  std::size_t vocab_size = 30000;
  std::string cross_coeff = "standard";
  bool single_prior = false;
};

struct GenerateArgs {
  std::string ckpt;
  std::string style;
  std::vector<std::string> styles;
  std::vector<double> weights;
  std::size_t num = 1;
  double temperature = 0.0;
  std::uint64_t seed = 1;
  std::string sample_mode = "average";
  bool with_meta = false;
};

struct EvalArgs {
  std::string ckpt, corpus, report;
  std::vector<std::string> metrics = {"distinct", "entropy", "ppl", "accuracy", "jsd"};
  std::size_t samples = 200;
  double temperature = 0.0;
  std::uint64_t seed = 1;
};

struct SynthArgs {
  std::size_t styles = 4;
  std::size_t per_class = 2000;
  std::string out;
  std::uint64_t seed = 1;
};

std::size_t resolve_class(const std::string& key, const std::vector<std::string>& names) {
  auto it = std::find(names.begin(), names.end(), key);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  std::size_t pos = 0;
  unsigned long k = 0;
  try {
    k = std::stoul(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != key.size() || key.empty()) throw UsageError("unknown style '" + key + "'");
  if (k >= names.size()) {
    throw UsageError("style " + key + " out of range for " + std::to_string(names.size()) + " classes");
  }
  return k;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  a.train.validate();
  auto lines = read_labeled_tsv(std::filesystem::path(a.corpus));
  const Vocab vocab = Vocab::build(lines, a.vocab_size);
  LabeledCorpus corpus = LabeledCorpus::build(lines, vocab, a.model.max_len);
  if (a.single_prior) corpus = corpus.single_class();

  ModelConfig mc = a.model;
  mc.vocab_size = vocab.size();
  mc.num_classes = corpus.num_classes();
  TrainConfig tc = a.train;
  tc.mmd_cross_coeff = parse_mmd_cross_coeff(a.cross_coeff);
  if (a.single_prior) tc.freeze_priors = true;

  Seq2SeqModel<float> model(mc, tc.seed);
  if (a.single_prior) model.set_priors(PriorBank<float>::standard_normal(mc.latent_dim));
  Trainer<float> trainer(model, tc);
  trainer.fit(corpus);

  const Checkpoint ckpt = make_checkpoint(trainer, model, vocab, corpus.class_names(), tc.seed);
  save_run_dir(a.out, ckpt, trainer.history());

  out << "trained " << trainer.steps_taken() << " steps over " << trainer.epochs_taken()
      << " epochs; vocab " << vocab.size() << ", classes " << corpus.num_classes() << '\n';
  const auto first = epoch_class_mmd(trainer.history(), 0, corpus.num_classes());
  const auto last = epoch_class_mmd(trainer.history(), trainer.epochs_taken() - 1, corpus.num_classes());
  for (std::size_t k = 0; k < corpus.num_classes(); ++k) {
    out << "  " << corpus.class_names()[k] << ": mmd first epoch " << first[k] << ", last epoch "
        << last[k] << '\n';
  }
  return kExitOk;
}

int run_generate(const GenerateArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_run(a.ckpt);
  const auto& names = ckpt.class_names;
  const std::size_t m = names.size();
  std::vector<double> w(m, 0.0);
  if (!a.style.empty()) {
    w[resolve_class(a.style, names)] = 1.0;
  } else {
    if (a.styles.size() != a.weights.size()) throw UsageError("--styles and --weights need the same count");
    for (std::size_t i = 0; i < a.styles.size(); ++i) {
      const std::size_t k = resolve_class(a.styles[i], names);
      if (w[k] != 0.0) throw UsageError("style '" + a.styles[i] + "' listed twice");
      if (!(a.weights[i] >= 0.0)) throw UsageError("weights must be >= 0");
      w[k] = a.weights[i];
    }
    double total = 0.0;
    for (double v : w) total += v;
    if (std::abs(total - 1.0) > 1e-6) {
      throw UsageError("weights must sum to 1 (got " + std::to_string(total) + ")");
    }
  }
  if (a.temperature < 0.0) throw UsageError("--temperature must be >= 0");
  if (a.num == 0) throw UsageError("--num must be >= 1");
  SampleMode mode;
  try {
    mode = parse_sample_mode(a.sample_mode);
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }

  const Seq2SeqModel<float> model = model_from_checkpoint(ckpt);
  const GenerationRequest request{StyleWeights(w), a.num, a.temperature, a.seed, mode};
  const std::string meta = nlohmann::json(w).dump();
  for (const auto& ids : generate(model, request)) {
    if (a.with_meta) out << meta << '\t';
    const auto words = ckpt.vocab.decode(ids);
    for (std::size_t i = 0; i < words.size(); ++i) out << (i ? " " : "") << words[i];
    out << '\n';
  }
  return kExitOk;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const std::set<std::string> known = {"distinct", "entropy", "ppl", "accuracy", "jsd"};
  std::set<std::string> metrics;
  for (const auto& m : a.metrics) {
    if (!known.count(m)) throw UsageError("unknown metric '" + m + "'");
    metrics.insert(m);
  }
  if (a.samples == 0) throw UsageError("--samples must be >= 1");
  const Checkpoint ckpt = load_run(a.ckpt);
  const Seq2SeqModel<float> model = model_from_checkpoint(ckpt);
  const std::size_t m = ckpt.class_names.size();

  const auto lines = read_labeled_tsv(std::filesystem::path(a.corpus));
  if (lines.empty()) throw IngestionError("eval corpus is empty");
  std::vector<TokenSentence> real;
  std::vector<std::size_t> labels;
  for (const auto& line : lines) {
    auto it = std::find(ckpt.class_names.begin(), ckpt.class_names.end(), line.label);
    if (it == ckpt.class_names.end()) {
      if (m == 1) {
        labels.push_back(0);
      } else {
        throw IngestionError("eval corpus: unknown class '" + line.label + "'");
      }
    } else {
      labels.push_back(static_cast<std::size_t>(it - ckpt.class_names.begin()));
    }
    real.push_back(line.tokens);
  }

  Rng rng(a.seed);
  MetricReport report;
  report.class_names = ckpt.class_names;
  std::vector<TokenSentence> pooled;
  const bool want_rows = metrics.count("accuracy") || metrics.count("jsd");
  if (want_rows) {
    if (m < 2) throw UsageError("accuracy/jsd need a model with at least two styles");
    const StyleClassifier clf = StyleClassifier::fit(real, labels, m);
    std::vector<StyleWeights> rows;
    for (std::size_t k = 0; k < m; ++k) rows.push_back(StyleWeights::one_hot(m, k));
    if (metrics.count("jsd")) rows = standard_report_rows(m);
    std::vector<std::vector<TokenSentence>> samples;
    report = style_report(model, ckpt.vocab, clf, rows, ckpt.class_names, a.samples, a.temperature,
                          rng, &samples);
    for (std::size_t k = 0; k < m; ++k) pooled.insert(pooled.end(), samples[k].begin(), samples[k].end());
    if (!metrics.count("accuracy")) report.accuracy = MetricReport::kUnset;
  } else {
    for (std::size_t k = 0; k < m; ++k) {
      for (const auto& ids : generate_conditioned(model, k, a.samples, a.temperature, rng)) {
        pooled.push_back(ckpt.vocab.decode(ids));
      }
    }
  }
  if (metrics.count("distinct")) {
    report.distinct1 = distinct_n(pooled, 1);
    report.distinct2 = distinct_n(pooled, 2);
  }
  if (metrics.count("entropy")) report.entropy = unigram_entropy(pooled);
  if (metrics.count("ppl")) report.perplexity = TrigramKN::fit(real).perplexity(pooled);

  report.write_table(out);
  if (!a.report.empty()) {
    std::ofstream csv(a.report);
    if (!csv) throw IoError("cannot write report " + a.report);
    report.write_csv(csv);
    std::ofstream metrics_csv(a.report + ".metrics.csv");
    report.write_metrics_csv(metrics_csv);
    std::ofstream table(a.report + ".txt");
    report.write_table(table);
  }
  return kExitOk;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  const auto lines = synthesize_corpus(a.styles, a.per_class, a.seed);
  if (a.out.empty() || a.out == "-") {
    write_labeled_tsv(out, lines);
  } else {
    std::ofstream f(a.out);
    if (!f) throw IoError("cannot write " + a.out);
    write_labeled_tsv(f, lines);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wasserstein autoencoder with a Gaussian-mixture prior for style-controlled text"};
  app.name("gmwae");
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a model on a <class>\\t<sentence> corpus");
  train->add_option("--corpus", ta.corpus, "training corpus (TSV)")->required();
  train->add_option("--out", ta.out, "output run directory")->required();
  train->add_option("--latent-dim", ta.model.latent_dim)->capture_default_str();
  train->add_option("--embed-dim", ta.model.embed_dim)->capture_default_str();
  train->add_option("--hidden-dim", ta.model.hidden_dim)->capture_default_str();
  train->add_option("--max-len", ta.model.max_len)->capture_default_str();
  train->add_option("--prior-init-scale", ta.model.prior_init_scale)->capture_default_str();
  train->add_option("--vocab-size", ta.vocab_size)->capture_default_str();
  train->add_option("--batch", ta.train.batch_size)->capture_default_str();
  train->add_option("--lambda-kl", ta.train.lambda_kl)->capture_default_str();
  train->add_option("--lambda-mmd", ta.train.lambda_mmd)->capture_default_str();
  train->add_option("--lr", ta.train.learning_rate)->capture_default_str();
  train->add_option("--epochs", ta.train.epochs)->capture_default_str();
  train->add_option("--seed", ta.train.seed)->capture_default_str();
  train->add_flag("--freeze-priors", ta.train.freeze_priors, "keep prior parameters fixed");
  train->add_option("--mmd-cross-coeff", ta.cross_coeff)
      ->check(CLI::IsMember({"standard", "paper"}))
      ->capture_default_str();
  train->add_flag("--single-prior", ta.single_prior,
                  "ablation: one frozen standard-normal prior, labels ignored");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "sample sentences from a trained model");
  gen->add_option("--ckpt", ga.ckpt, "run directory or model.bin")->required();
  auto* style = gen->add_option("--style", ga.style, "single style (index or name)");
  auto* styles = gen->add_option("--styles", ga.styles, "styles to mix")->delimiter(',');
  auto* weights = gen->add_option("--weights", ga.weights, "mixing weights")->delimiter(',');
  style->excludes(styles);
  styles->needs(weights);
  weights->needs(styles);
  gen->add_option("--num", ga.num)->capture_default_str();
  gen->add_option("--temperature", ga.temperature)->capture_default_str();
  gen->add_option("--seed", ga.seed)->capture_default_str();
  gen->add_option("--sample-mode", ga.sample_mode)
      ->check(CLI::IsMember({"average", "mixture"}))
      ->capture_default_str();
  gen->add_flag("--with-meta", ga.with_meta, "prefix each line with the weight vector as JSON");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "evaluate generations against a labeled corpus");
  eval->add_option("--ckpt", ea.ckpt, "run directory or model.bin")->required();
  eval->add_option("--corpus", ea.corpus, "labeled reference corpus (TSV)")->required();
  eval->add_option("--metrics", ea.metrics, "distinct,entropy,ppl,accuracy,jsd")->delimiter(',');
  eval->add_option("--report", ea.report, "CSV output path");
  eval->add_option("--samples", ea.samples, "samples per report row")->capture_default_str();
  eval->add_option("--temperature", ea.temperature)->capture_default_str();
  eval->add_option("--seed", ea.seed)->capture_default_str();

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "write the built-in synthetic style corpus");
  synth->add_option("--styles", sa.styles)->capture_default_str();
  synth->add_option("--per-class", sa.per_class)->capture_default_str();
  synth->add_option("--out", sa.out, "output TSV (stdout when omitted)");
  synth->add_option("--seed", sa.seed)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
      err << sub->help();
    }
    return kExitUsage;
  }

  try {
    if (*train) return run_train(ta, out);
    if (*gen) {
      if (ga.style.empty() && ga.styles.empty()) throw UsageError("generate needs --style or --styles/--weights");
      return run_generate(ga, out);
    }
    if (*eval) return run_eval(ea, out);
    if (*synth) return run_synth(sa, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace gmwae
