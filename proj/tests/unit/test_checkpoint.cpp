#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gmwae/error.hpp"
#include "gmwae/checkpoint.hpp"
#include "gmwae/generation.hpp"

namespace gmwae {
namespace {

namespace fs = std::filesystem;

struct Fixture {
  std::vector<LabeledLine> lines;
  Vocab vocab;
  LabeledCorpus corpus;
  ModelConfig config;
};

Fixture make_fixture() {
  Fixture f;
  for (int i = 0; i < 8; ++i) {
    f.lines.push_back({"a", {"red", "apple", i % 2 ? "big" : "small"}});
    f.lines.push_back({"b", {"blue", "sky", i % 3 ? "wide" : "calm"}});
  }
  f.vocab = Vocab::build(f.lines);
  f.corpus = LabeledCorpus::build(f.lines, f.vocab, 6);
  f.config.vocab_size = f.vocab.size();
  f.config.embed_dim = 4;
  f.config.hidden_dim = 6;
  f.config.latent_dim = 3;
  f.config.num_classes = 2;
  f.config.max_len = 6;
  return f;
}

TrainConfig small_train() {
  TrainConfig tc;
  tc.batch_size = 4;
  tc.epochs = 1;
  tc.seed = 3;
  return tc;
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gmwae_ckpt_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<float> flat_params(const Seq2SeqModel<float>& m) {
  std::vector<float> out;
  for (const auto& [n, t] : m.named_parameters()) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  auto f = make_fixture();
  Seq2SeqModel<float> model(f.config, 1);
  Trainer<float> trainer(model, small_train());
  trainer.fit(f.corpus);
  const auto bytes = encode_checkpoint(make_checkpoint(trainer, model, f.vocab, f.corpus.class_names(), 1));
  EXPECT_EQ(bytes.substr(0, 4), "GMWA");
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);

  auto dir = temp_dir("bytes");
  save_checkpoint(decode_checkpoint(bytes), dir / "a.bin");
  save_checkpoint(load_checkpoint(dir / "a.bin"), dir / "b.bin");
  std::ifstream a(dir / "a.bin", std::ios::binary), b(dir / "b.bin", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, bytes);
  EXPECT_EQ(sa, sb);
}

TEST(Checkpoint, ParametersAndGenerationSurviveReload) {
  auto f = make_fixture();
  Seq2SeqModel<float> model(f.config, 2);
  Trainer<float> trainer(model, small_train());
  trainer.fit(f.corpus);
  auto dir = temp_dir("reload");
  save_run_dir(dir, make_checkpoint(trainer, model, f.vocab, f.corpus.class_names(), 2), trainer.history());
  EXPECT_TRUE(fs::exists(dir / "model.bin"));
  EXPECT_TRUE(fs::exists(dir / "vocab.tsv"));
  EXPECT_TRUE(fs::exists(dir / "history.csv"));

  const Checkpoint ck = load_run(dir);
  EXPECT_EQ(ck.class_names, f.corpus.class_names());
  EXPECT_EQ(ck.vocab.tokens(), f.vocab.tokens());
  const auto loaded = model_from_checkpoint(ck);
  EXPECT_EQ(flat_params(loaded), flat_params(model));

  GenerationRequest req{StyleWeights({0.5, 0.5}), 5, 0.0, 9};
  EXPECT_EQ(generate(model, req), generate(loaded, req));
  EXPECT_EQ(load_run(dir / "model.bin").tensors.size(), ck.tensors.size());
}

TEST(Checkpoint, ResumedTrainingMatchesUninterrupted) {
  auto f = make_fixture();
  TrainConfig tc = small_train();
  tc.epochs = 2;
  Seq2SeqModel<float> straight(f.config, 4);
  Trainer<float> t1(straight, tc);
  t1.fit(f.corpus);

  tc.epochs = 1;
  Seq2SeqModel<float> first(f.config, 4);
  Trainer<float> t2(first, tc);
  t2.fit(f.corpus);
  const Checkpoint ck = decode_checkpoint(
      encode_checkpoint(make_checkpoint(t2, first, f.vocab, f.corpus.class_names(), 4)));
  Seq2SeqModel<float> resumed = model_from_checkpoint(ck);
  Trainer<float> t3(resumed, ck.train_config);
  restore_trainer(ck, t3);
  t3.fit(f.corpus);
  EXPECT_EQ(t3.steps_taken(), t1.steps_taken());
  EXPECT_EQ(flat_params(resumed), flat_params(straight));
}

TEST(Checkpoint, FlippedMagicRejected) {
  auto f = make_fixture();
  Seq2SeqModel<float> model(f.config, 1);
  auto bytes = encode_checkpoint(make_checkpoint(model, f.vocab, f.corpus.class_names()));
  bytes[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, VersionMismatchRejected) {
  auto f = make_fixture();
  Seq2SeqModel<float> model(f.config, 1);
  auto bytes = encode_checkpoint(make_checkpoint(model, f.vocab, f.corpus.class_names()));
  bytes[4] = 2;
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, TruncationIsAnIoError) {
  auto f = make_fixture();
  Seq2SeqModel<float> model(f.config, 1);
  const auto bytes = encode_checkpoint(make_checkpoint(model, f.vocab, f.corpus.class_names()));
  for (std::size_t cut : {std::size_t{6}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(decode_checkpoint(std::string_view(bytes).substr(0, cut)), IoError) << cut;
  }
  EXPECT_THROW(decode_checkpoint(bytes + "x"), FormatError);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.bin"), IoError);
}

TEST(Checkpoint, ShapeMismatchOnLoadRejected) {
  auto f = make_fixture();
  Seq2SeqModel<float> model(f.config, 1);
  Checkpoint ck = make_checkpoint(model, f.vocab, f.corpus.class_names());
  ck.model_config.hidden_dim = 7;
  EXPECT_THROW(model_from_checkpoint(ck), FormatError);
}

TEST(Checkpoint, ClassNamesMustMatchModel) {
  auto f = make_fixture();
  Seq2SeqModel<float> model(f.config, 1);
  EXPECT_THROW(make_checkpoint(model, f.vocab, {"only"}), ContractError);
}

}  // namespace
}  // namespace gmwae
