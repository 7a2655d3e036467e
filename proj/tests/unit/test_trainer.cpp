#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gmwae/error.hpp"
#include "gmwae/trainer.hpp"

namespace gmwae {
namespace {

using TD = Tensor<double>;
using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

ModelConfig tiny_config(std::size_t classes = 3) {
  ModelConfig c;
  c.vocab_size = 12;
  c.embed_dim = 4;
  c.hidden_dim = 5;
  c.latent_dim = 3;
  c.num_classes = classes;
  c.max_len = 8;
  return c;
}

// ---- plain re-implementation of the objective -------------------------------

Mat to_mat(const TD& t) {
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  return m;
}

Vec affine(const Vec& x, const Mat& w, const Mat& b) {
  Vec out = b[0];
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[i] * w[i][j];
  return out;
}

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct RefGru {
  Mat wz, wr, wc, bz, br, bc;
  Vec step(const Vec& x, const Vec& h) const {
    Vec xh = x;
    xh.insert(xh.end(), h.begin(), h.end());
    Vec z = affine(xh, wz, bz), r = affine(xh, wr, br);
    for (auto& v : z) v = sig(v);
    for (auto& v : r) v = sig(v);
    Vec xrh = x;
    for (std::size_t j = 0; j < h.size(); ++j) xrh.push_back(r[j] * h[j]);
    Vec c = affine(xrh, wc, bc);
    Vec out(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) out[j] = (1 - z[j]) * h[j] + z[j] * std::tanh(c[j]);
    return out;
  }
};

RefGru ref_gru(const Seq2SeqModel<double>& m, const std::string& p) {
  auto g = [&](const char* n) { return to_mat(m.parameter(p + "." + n)); };
  return {g("w_update"), g("w_reset"), g("w_candidate"), g("b_update"), g("b_reset"), g("b_candidate")};
}

double ref_kernel(const Vec& x, const Vec& y, double c) {
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return c / (c + d2);
}

struct RefTerms {
  double recon, kl, mmd, total;
};

RefTerms ref_objective(const Seq2SeqModel<double>& m, const std::vector<std::vector<int>>& seqs,
                       std::size_t cls, const Mat& eps_post, const Mat& eps_prior,
                       const TrainConfig& tc) {
  const Mat emb = to_mat(m.parameter("embedding"));
  const RefGru enc = ref_gru(m, "encoder"), dec = ref_gru(m, "decoder");
  const Mat mu_w = to_mat(m.parameter("posterior.mu_w")), mu_b = to_mat(m.parameter("posterior.mu_b"));
  const Mat ls_w = to_mat(m.parameter("posterior.log_sigma_w")),
            ls_b = to_mat(m.parameter("posterior.log_sigma_b"));
  const Mat br_w = to_mat(m.parameter("bridge.w")), br_b = to_mat(m.parameter("bridge.b"));
  const Mat out_w = to_mat(m.parameter("output.w")), out_b = to_mat(m.parameter("output.b"));
  const Vec pmu = to_mat(m.priors()[cls].mu)[0], pls = to_mat(m.priors()[cls].log_sigma)[0];
  const std::size_t d = pmu.size(), n = seqs.size();

  double nll = 0, kl = 0;
  std::size_t predicted = 0;
  Mat h_all, prior_all;
  for (std::size_t r = 0; r < n; ++r) {
    Vec state(m.config().hidden_dim, 0.0);
    for (int w : seqs[r]) state = enc.step(emb[w], state);
    Vec mu = affine(state, mu_w, mu_b), ls = affine(state, ls_w, ls_b);
    Vec h(d), p(d);
    for (std::size_t j = 0; j < d; ++j) {
      h[j] = mu[j] + std::exp(ls[j]) * eps_post[r][j];
      p[j] = pmu[j] + std::exp(pls[j]) * eps_prior[r][j];
      kl += 0.5 * (std::exp(2 * ls[j]) - 2 * ls[j] - 1);
    }
    h_all.push_back(h);
    prior_all.push_back(p);

    std::vector<int> tokens{kBos};
    tokens.insert(tokens.end(), seqs[r].begin(), seqs[r].end());
    tokens.push_back(kEos);
    Vec dstate = affine(h, br_w, br_b);
    for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
      Vec x = emb[tokens[t]];
      x.insert(x.end(), h.begin(), h.end());
      dstate = dec.step(x, dstate);
      Vec logits = affine(dstate, out_w, out_b);
      double mx = logits[0];
      for (double v : logits) mx = std::max(mx, v);
      double z = 0;
      for (double v : logits) z += std::exp(v - mx);
      nll += -(logits[tokens[t + 1]] - mx - std::log(z));
      ++predicted;
    }
  }
  const double c = 2.0 * d;
  double xx = 0, yy = 0, xy = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      xx += ref_kernel(h_all[a], h_all[b], c);
      yy += ref_kernel(prior_all[a], prior_all[b], c);
      xy += ref_kernel(h_all[a], prior_all[b], c);
    }
  }
  const double nn = static_cast<double>(n * (n - 1));
  RefTerms out;
  out.recon = nll / static_cast<double>(predicted);
  out.kl = kl / static_cast<double>(n);
  out.mmd = (xx + yy) / nn - 2.0 * xy / nn;
  out.total = out.recon + tc.lambda_kl * out.kl + tc.lambda_mmd * out.mmd;
  return out;
}

Mat random_mat(std::size_t r, std::size_t c, Rng& rng) {
  Mat m(r, Vec(c));
  for (auto& row : m)
    for (auto& v : row) v = standard_normal(rng);
  return m;
}

TD to_tensor(const Mat& m) {
  Vec flat;
  for (const auto& row : m) flat.insert(flat.end(), row.begin(), row.end());
  return TD::from({m.size(), m[0].size()}, flat);
}

// ---- tests ------------------------------------------------------------------

TEST(WaeLoss, MatchesScriptedObjective) {
  Seq2SeqModel<double> model(tiny_config(), 11);
  const std::vector<std::vector<int>> seqs{{4, 5, 6}, {7, 8}};
  Rng rng(1);
  const Mat ep = random_mat(2, 3, rng), epr = random_mat(2, 3, rng);
  TrainConfig tc;
  auto terms = wae_loss(model, make_batch(1, seqs), to_tensor(ep), to_tensor(epr), tc);
  const RefTerms ref = ref_objective(model, seqs, 1, ep, epr, tc);
  EXPECT_NEAR(terms.recon.item(), ref.recon, 1e-10);
  EXPECT_NEAR(terms.kl.item(), ref.kl, 1e-10);
  EXPECT_NEAR(terms.mmd.item(), ref.mmd, 1e-10);
  EXPECT_NEAR(terms.total.item(), ref.total, 1e-5);
  Tape<double>::current().clear();
}

TEST(WaeLoss, ZeroLambdasLeaveReconstruction) {
  Seq2SeqModel<double> model(tiny_config(), 11);
  const std::vector<std::vector<int>> seqs{{4, 5, 6}, {7, 8}};
  Rng rng(2);
  TrainConfig tc;
  tc.lambda_kl = 0;
  tc.lambda_mmd = 0;
  auto terms = wae_loss(model, make_batch(0, seqs), to_tensor(random_mat(2, 3, rng)),
                        to_tensor(random_mat(2, 3, rng)), tc);
  EXPECT_EQ(terms.total.item(), terms.recon.item());
  Tape<double>::current().clear();
}

TEST(WaeLoss, MixedClassBatchRejected) {
  Seq2SeqModel<double> model(tiny_config(), 11);
  const std::vector<std::vector<int>> seqs{{4, 5}, {7, 8}};
  auto batch = make_batch(0, seqs, {0, 1});
  EXPECT_THROW(wae_loss(model, batch, TD::zeros({2, 3}), TD::zeros({2, 3}), TrainConfig{}), ContractError);
}

TEST(TrainStep, InactivePriorsGetExactlyZeroGradient) {
  Seq2SeqModel<float> model(tiny_config(), 3);
  Trainer<float> trainer(model, TrainConfig{});
  const std::vector<std::vector<int>> seqs{{4, 5, 6}, {7, 8}, {9}};
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<std::vector<float>> before;
    for (std::size_t i = 0; i < 3; ++i) {
      before.emplace_back(model.priors()[i].mu.values().begin(), model.priors()[i].mu.values().end());
    }
    trainer.train_step(make_batch(j, seqs));
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& comp = model.priors()[i];
      if (i == j) {
        EXPECT_TRUE(comp.mu.has_grad());
        continue;
      }
      for (float g : comp.mu.grad_or_zeros()) EXPECT_EQ(g, 0.0f);
      for (float g : comp.log_sigma.grad_or_zeros()) EXPECT_EQ(g, 0.0f);
      for (std::size_t k = 0; k < before[i].size(); ++k) EXPECT_EQ(comp.mu.values()[k], before[i][k]);
    }
  }
}

TEST(TrainStep, InactivePriorValuesDoNotAffectTheUpdate) {
  const std::vector<std::vector<int>> seqs{{4, 5, 6}, {7, 8}};
  auto run = [&](bool perturb) {
    Seq2SeqModel<float> model(tiny_config(), 3);
    if (perturb) {
      for (auto& v : model.priors()[0].mu.mutable_values()) v += 5.0f;
      for (auto& v : model.priors()[2].log_sigma.mutable_values()) v -= 1.0f;
    }
    Trainer<float> trainer(model, TrainConfig{});
    trainer.train_step(make_batch(1, seqs));
    std::vector<float> out;
    for (const auto& [name, t] : model.named_parameters()) {
      if (name.rfind("prior.0", 0) == 0 || name.rfind("prior.2", 0) == 0) continue;
      out.insert(out.end(), t.values().begin(), t.values().end());
    }
    return out;
  };
  EXPECT_EQ(run(false), run(true));
}

TEST(TrainStep, FrozenPriorsStayFixed) {
  Seq2SeqModel<float> model(tiny_config(), 3);
  TrainConfig tc;
  tc.freeze_priors = true;
  Trainer<float> trainer(model, tc);
  const std::vector<float> before(model.priors()[0].mu.values().begin(), model.priors()[0].mu.values().end());
  const std::vector<std::vector<int>> seqs{{4, 5, 6}, {7, 8}};
  trainer.train_step(make_batch(0, seqs));
  EXPECT_EQ(std::vector<float>(model.priors()[0].mu.values().begin(), model.priors()[0].mu.values().end()),
            before);
}

TEST(TrainStep, NonFiniteLossReportsStepDiagnostics) {
  Seq2SeqModel<float> model(tiny_config(), 3);
  Trainer<float> trainer(model, TrainConfig{});
  model.parameter("output.b").mutable_values()[5] = std::numeric_limits<float>::quiet_NaN();
  const std::vector<std::vector<int>> seqs{{4, 5, 6}, {7, 8}};
  try {
    trainer.train_step(make_batch(0, seqs));
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
  Tape<float>::current().clear();
}

TEST(Adam, ConvergesOnQuadraticBowl) {
  auto x = TD::from({1, 3}, {3.0, -2.0, 0.5}, true);
  const auto target = TD::from({1, 3}, {1.0, 1.0, -1.0});
  AdamOptimizer<double> opt({{"x", x}}, 0.05);
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    backward(sum(square(sub(x, target))));
    opt.step();
  }
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(x.values()[j], target.values()[j], 1e-3);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto x = TD::from({1, 2}, {1.0, -1.0}, true);
  AdamOptimizer<double> opt({{"x", x}}, 0.1);
  backward(sum(mul(x, TD::from({1, 2}, {3.0, -0.5}))));
  opt.step();
  EXPECT_NEAR(x.values()[0], 0.9, 1e-7);
  EXPECT_NEAR(x.values()[1], -0.9, 1e-7);
  EXPECT_EQ(opt.slots()[0].steps, 1u);
}

TEST(TrainConfig, Validation) {
  TrainConfig tc;
  tc.lambda_kl = -1;
  EXPECT_THROW(tc.validate(), ContractError);
  tc = TrainConfig{};
  tc.learning_rate = 0;
  EXPECT_THROW(tc.validate(), ContractError);
  tc = TrainConfig{};
  tc.batch_size = 1;
  EXPECT_THROW(tc.validate(), ContractError);
}

LabeledCorpus toy_corpus() {
  std::vector<LabeledLine> lines;
  for (int i = 0; i < 12; ++i) {
    lines.push_back({"a", {"red", "apple", i % 2 ? "big" : "small"}});
    lines.push_back({"b", {"blue", "sky", i % 3 ? "wide" : "calm"}});
  }
  const Vocab vocab = Vocab::build(lines);
  return LabeledCorpus::build(lines, vocab, 8);
}

TEST(Fit, HistoryAndDeterminism) {
  const LabeledCorpus corpus = toy_corpus();
  ModelConfig mc = tiny_config(2);
  mc.vocab_size = 4 + 8;
  TrainConfig tc;
  tc.batch_size = 4;
  tc.epochs = 3;
  auto train = [&] {
    Seq2SeqModel<float> model(mc, 5);
    Trainer<float> trainer(model, tc);
    auto history = trainer.fit(corpus);
    std::vector<float> params;
    for (const auto& [n, t] : model.named_parameters()) params.insert(params.end(), t.values().begin(), t.values().end());
    return std::make_pair(history, params);
  };
  auto [h1, p1] = train();
  auto [h2, p2] = train();
  EXPECT_EQ(h1.size(), 3u * 6u);
  for (std::size_t i = 0; i < h1.size(); ++i) {
    EXPECT_EQ(h1[i].step, i);
    EXPECT_EQ(h1[i].total, h2[i].total);
  }
  EXPECT_EQ(p1, p2);
  auto mmd = epoch_class_mmd(h1, 0, 2);
  EXPECT_EQ(mmd.size(), 2u);
  EXPECT_TRUE(std::isfinite(mmd[0]));
  EXPECT_TRUE(std::isnan(epoch_class_mmd(h1, 9, 2)[0]));
}

TEST(Fit, ClassCountMustMatchPriors) {
  const LabeledCorpus corpus = toy_corpus();
  ModelConfig mc = tiny_config(3);
  Seq2SeqModel<float> model(mc, 5);
  Trainer<float> trainer(model, TrainConfig{});
  EXPECT_THROW(trainer.fit(corpus), ContractError);
}

TEST(History, CsvHeaderAndRows) {
  std::ostringstream out;
  write_history_csv(out, {{0, 0, 1, 0.5, 0.25, 0.125, 2.0}});
  EXPECT_EQ(out.str(), "step,class,recon,kl,mmd,total\n0,1,0.5,0.25,0.125,2\n");
}

}  // namespace
}  // namespace gmwae
