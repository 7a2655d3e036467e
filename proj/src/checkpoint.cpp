#include "gmwae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace gmwae {

namespace {

constexpr char kMagic[4] = {'G', 'M', 'W', 'A'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_block(std::string& out, std::string_view bytes) {
  put_u32(out, static_cast<std::uint32_t>(bytes.size()));
  out.append(bytes);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint: truncated file");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::string block() { return std::string(take(u32())); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json model_config_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim}, {"latent_dim", c.latent_dim},
          {"num_classes", c.num_classes}, {"max_len", c.max_len},
          {"prior_init_scale", c.prior_init_scale}};
}

ModelConfig model_config_from(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.prior_init_scale = j.value("prior_init_scale", 2.0);
  return c;
}

nlohmann::json train_config_json(const TrainConfig& c) {
  return {{"lambda_kl", c.lambda_kl},
          {"lambda_mmd", c.lambda_mmd},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"mmd_cross_coeff", to_string(c.mmd_cross_coeff)},
          {"freeze_priors", c.freeze_priors}};
}

TrainConfig train_config_from(const nlohmann::json& j) {
  TrainConfig c;
  c.lambda_kl = j.at("lambda_kl").get<double>();
  c.lambda_mmd = j.at("lambda_mmd").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mmd_cross_coeff = parse_mmd_cross_coeff(j.at("mmd_cross_coeff").get<std::string>());
  c.freeze_priors = j.at("freeze_priors").get<bool>();
  return c;
}

TensorRecord record_of(const std::string& name, const Shape& shape, std::span<const float> data) {
  return {name, shape, std::vector<float>(data.begin(), data.end())};
}

void copy_into(const TensorRecord& rec, Tensor<float>& dst) {
  if (rec.shape != dst.shape()) {
    throw FormatError("checkpoint: tensor '" + rec.name + "' has shape " + shape_str(rec.shape) +
                      ", model expects " + shape_str(dst.shape()));
  }
  std::copy(rec.data.begin(), rec.data.end(), dst.mutable_values().begin());
}

}  // namespace

const TensorRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Checkpoint make_checkpoint(const Seq2SeqModel<float>& model, const Vocab& vocab,
                           std::vector<std::string> class_names, std::uint64_t model_seed) {
  if (vocab.size() != model.config().vocab_size) throw ContractError("checkpoint: vocab size mismatch");
  if (class_names.size() != model.config().num_classes) {
    throw ContractError("checkpoint: class name count mismatch");
  }
  Checkpoint c;
  c.model_config = model.config();
  c.class_names = std::move(class_names);
  c.vocab = vocab;
  c.model_seed = model_seed;
  c.train_config.freeze_priors = !model.priors().trainable();
  for (const auto& [name, t] : model.named_parameters()) {
    c.tensors.push_back(record_of("param/" + name, t.shape(), t.values()));
  }
  return c;
}

Checkpoint make_checkpoint(const Trainer<float>& trainer, const Seq2SeqModel<float>& model,
                           const Vocab& vocab, std::vector<std::string> class_names,
                           std::uint64_t model_seed) {
  Checkpoint c = make_checkpoint(model, vocab, std::move(class_names), model_seed);
  c.train_config = trainer.config();
  c.steps = trainer.steps_taken();
  c.epochs = trainer.epochs_taken();
  c.rng_state = trainer.rng_state();
  for (const auto& s : trainer.optimizer().slots()) {
    c.adam_steps[s.name] = s.steps;
    c.tensors.push_back(record_of("adam.m/" + s.name, s.param.shape(), s.m));
    c.tensors.push_back(record_of("adam.v/" + s.name, s.param.shape(), s.v));
  }
  return c;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json config = {{"model", model_config_json(ckpt.model_config)},
                           {"train", train_config_json(ckpt.train_config)},
                           {"class_names", ckpt.class_names},
                           {"model_seed", ckpt.model_seed},
                           {"steps", ckpt.steps},
                           {"epochs", ckpt.epochs},
                           {"rng_state", ckpt.rng_state},
                           {"adam_steps", ckpt.adam_steps}};
  std::string vocab;
  for (const auto& tok : ckpt.vocab.tokens()) {
    vocab += tok;
    vocab += '\n';
  }

  std::string out(kMagic, 4);
  put_u32(out, Checkpoint::kVersion);
  put_block(out, config.dump());
  put_block(out, vocab);
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (shape_size(t.shape) != t.data.size()) {
      throw ContractError("checkpoint: tensor '" + t.name + "' data does not match its shape");
    }
    put_block(out, t.name);
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t e : t.shape) put_u32(out, static_cast<std::uint32_t>(e));
    for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic bytes");
  }
  in.take(4);
  const std::uint32_t version = in.u32();
  if (version != Checkpoint::kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  const std::string config_text = in.block();
  const std::string vocab_text = in.block();
  try {
    const auto config = nlohmann::json::parse(config_text);
    c.model_config = model_config_from(config.at("model"));
    c.train_config = train_config_from(config.at("train"));
    c.class_names = config.at("class_names").get<std::vector<std::string>>();
    c.model_seed = config.at("model_seed").get<std::uint64_t>();
    c.steps = config.at("steps").get<std::uint64_t>();
    c.epochs = config.at("epochs").get<std::uint64_t>();
    c.rng_state = config.at("rng_state").get<std::string>();
    c.adam_steps = config.at("adam_steps").get<std::map<std::string, std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad config block: ") + e.what());
  }
  std::vector<std::string> tokens;
  std::istringstream vs(vocab_text);
  for (std::string tok; std::getline(vs, tok);) tokens.push_back(tok);
  c.vocab = Vocab::from_tokens(std::move(tokens));

  const std::uint32_t count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord rec;
    rec.name = in.block();
    const std::uint32_t rank = in.u32();
    for (std::uint32_t r = 0; r < rank; ++r) rec.shape.push_back(in.u32());
    const std::size_t n = shape_size(rec.shape);
    if (n > bytes.size()) throw IoError("checkpoint: truncated file");
    rec.data.resize(n);
    for (auto& v : rec.data) v = std::bit_cast<float>(in.u32());
    c.tensors.push_back(std::move(rec));
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes after tensor table");
  c.model_config.validate();
  if (c.vocab.size() != c.model_config.vocab_size) throw FormatError("checkpoint: vocab size mismatch");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to checkpoint " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + file.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Seq2SeqModel<float> model_from_checkpoint(const Checkpoint& ckpt) {
  Seq2SeqModel<float> model(ckpt.model_config, ckpt.model_seed, !ckpt.train_config.freeze_priors);
  for (auto& [name, t] : model.named_parameters()) {
    const TensorRecord* rec = ckpt.find("param/" + name);
    if (!rec) throw FormatError("checkpoint: missing parameter '" + name + "'");
    Tensor<float> dst = t;
    copy_into(*rec, dst);
  }
  return model;
}

void restore_trainer(const Checkpoint& ckpt, Trainer<float>& trainer) {
  for (auto& s : trainer.optimizer().slots()) {
    const TensorRecord* m = ckpt.find("adam.m/" + s.name);
    const TensorRecord* v = ckpt.find("adam.v/" + s.name);
    if (!m || !v) throw FormatError("checkpoint: missing optimizer state for '" + s.name + "'");
    if (m->data.size() != s.m.size() || v->data.size() != s.v.size()) {
      throw FormatError("checkpoint: optimizer state for '" + s.name + "' has the wrong size");
    }
    s.m = m->data;
    s.v = v->data;
    auto it = ckpt.adam_steps.find(s.name);
    s.steps = it == ckpt.adam_steps.end() ? 0 : it->second;
  }
  trainer.restore_progress(ckpt.steps, ckpt.epochs, ckpt.rng_state);
}

void save_run_dir(const std::filesystem::path& dir, const Checkpoint& ckpt,
                  const std::vector<LossBreakdown>& history) {
  std::filesystem::create_directories(dir);
  save_checkpoint(ckpt, dir / "model.bin");
  std::ofstream vocab(dir / "vocab.tsv");
  if (!vocab) throw IoError("cannot write " + (dir / "vocab.tsv").string());
  ckpt.vocab.write_tsv(vocab);
  std::ofstream hist(dir / "history.csv");
  if (!hist) throw IoError("cannot write " + (dir / "history.csv").string());
  write_history_csv(hist, history);
}

Checkpoint load_run(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return load_checkpoint(path / "model.bin");
  return load_checkpoint(path);
}

}  // namespace gmwae
