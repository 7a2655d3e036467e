#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "gmwae/checkpoint.hpp"
#include "gmwae/cli.hpp"
#include "gmwae/evaluation.hpp"
#include "gmwae/generation.hpp"
#include "gmwae/synth.hpp"

namespace py = pybind11;
using namespace gmwae;

namespace {

std::vector<TokenSentence> tokenize_all(const std::vector<std::string>& lines) {
  std::vector<TokenSentence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(tokenize(l));
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (std::size_t i = 0; i < words.size(); ++i) s += (i ? " " : "") + words[i];
  return s;
}

Tensor<double> to_tensor(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ContractError("mmd: empty sample set");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw DimensionError("mmd: ragged sample rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Tensor<double>::from({rows.size(), rows[0].size()}, std::move(flat));
}

class PyModel {
 public:
  explicit PyModel(const std::filesystem::path& path)
      : ckpt_(load_run(path)), model_(model_from_checkpoint(ckpt_)) {}

  const std::vector<std::string>& class_names() const { return ckpt_.class_names; }
  std::size_t latent_dim() const { return model_.config().latent_dim; }

  std::vector<std::vector<double>> prior_means() const {
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < model_.priors().size(); ++k) {
      const auto mu = model_.priors()[k].mu.values();
      out.emplace_back(mu.begin(), mu.end());
    }
    return out;
  }

  std::vector<std::string> generate(const std::vector<double>& weights, std::size_t num, double temperature,
                                    std::uint64_t seed, const std::string& mode) const {
    GenerationRequest req{StyleWeights(weights), num, temperature, seed, parse_sample_mode(mode)};
    std::vector<std::string> out;
    for (const auto& ids : gmwae::generate(model_, req)) out.push_back(join(ckpt_.vocab.decode(ids)));
    return out;
  }

 private:
  Checkpoint ckpt_;
  Seq2SeqModel<float> model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "GMM-prior Wasserstein autoencoder for style-controlled text generation";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a gmwae subcommand; returns (exit_code, stdout, stderr).");

  m.def(
      "synthesize",
      [](std::size_t styles, std::size_t per_class, std::uint64_t seed) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& l : synthesize_corpus(styles, per_class, seed)) out.emplace_back(l.label, join(l.tokens));
        return out;
      },
      py::arg("styles") = 4, py::arg("per_class") = 2000, py::arg("seed") = 1,
      "Synthetic labeled corpus as (label, sentence) pairs.");

  m.def(
      "distinct_n", [](const std::vector<std::string>& s, std::size_t n) { return distinct_n(tokenize_all(s), n); },
      py::arg("sentences"), py::arg("n"));
  m.def(
      "unigram_entropy", [](const std::vector<std::string>& s) { return unigram_entropy(tokenize_all(s)); },
      py::arg("sentences"));
  m.def(
      "jsd", [](const std::vector<double>& p, const std::vector<double>& q) { return jsd(p, q); }, py::arg("p"),
      py::arg("q"));
  m.def(
      "kn_perplexity",
      [](const std::vector<std::string>& train, const std::vector<std::string>& test) {
        return TrigramKN::fit(tokenize_all(train)).perplexity(tokenize_all(test));
      },
      py::arg("train"), py::arg("test"));
  m.def(
      "mmd",
      [](const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
         const std::string& cross_coeff) {
        const auto tx = to_tensor(x), ty = to_tensor(y);
        const double c = default_kernel_constant(tx.shape()[1]);
        return mmd_hat(tx, ty, c, parse_mmd_cross_coeff(cross_coeff)).item();
      },
      py::arg("x"), py::arg("y"), py::arg("cross_coeff") = "standard",
      "IMQ-kernel MMD estimate between two [N x d] sample sets.");

  py::class_<PyModel>(m, "Model")
      .def(py::init<const std::filesystem::path&>(), py::arg("path"))
      .def_property_readonly("class_names", &PyModel::class_names)
      .def_property_readonly("latent_dim", &PyModel::latent_dim)
      .def("prior_means", &PyModel::prior_means)
      .def("generate", &PyModel::generate, py::arg("weights"), py::arg("num") = 1, py::arg("temperature") = 0.0,
           py::arg("seed") = 1, py::arg("mode") = "average");
}
