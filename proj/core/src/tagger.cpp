#include "seqtag/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "container.hpp"
#include "seqtag/error.hpp"
#include "seqtag/log.hpp"
#include "seqtag/utf8.hpp"

namespace seqtag {

using nlohmann::json;

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid hyperparameter: " + what); };
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
  if (epochs < 1) fail("epochs must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be non-negative");
  if (word_dim == 0 || subtoken_dim == 0 || hidden_dim == 0) fail("dimensions must be positive");
  if (!(unk_replace_prob >= 0.0 && unk_replace_prob <= 1.0)) fail("unk_replace_prob outside [0, 1]");
  if (!(freqbin_log_base > 1.0)) fail("freqbin_log_base must exceed 1");
}

ReprConfig Hyperparams::repr_config() const {
  ReprConfig c;
  c.mode = repr;
  c.use_pretrained = pretrained_path.has_value();
  c.word_dim = word_dim;
  c.subtoken_dim = subtoken_dim;
  c.hidden_dim = hidden_dim;
  c.cell = cell;
  return c;
}

std::size_t freqbin_label(std::size_t freq, double log_base) {
  if (freq <= 1) return 0;
  const double f = static_cast<double>(freq);
  auto k = static_cast<long>(std::log(f) / std::log(log_base));
  // Exact powers of an integer base can land a hair below the integer.
  while (std::pow(log_base, static_cast<double>(k + 1)) <= f) ++k;
  while (k > 0 && std::pow(log_base, static_cast<double>(k)) > f) --k;
  return static_cast<std::size_t>(k);
}

TaggerModel::TaggerModel() : params_(std::make_unique<ParameterStore>()) {}
TaggerModel::TaggerModel(TaggerModel&&) noexcept = default;
TaggerModel& TaggerModel::operator=(TaggerModel&&) noexcept = default;
TaggerModel::~TaggerModel() = default;

std::size_t TaggerModel::tag_index(std::string_view tag) const {
  auto it = tag_ids_.find(std::string(tag));
  if (it == tag_ids_.end()) throw DataError("tag '" + std::string(tag) + "' is not in the model tagset");
  return it->second;
}

std::size_t TaggerModel::freq_label(std::string_view form) const {
  return std::min(freqbin_label(vocab_.frequency(form), hp_.freqbin_log_base), n_bins_ - 1);
}

std::string TaggerModel::name() const {
  return std::string("bilstm-") + to_string(hp_.repr) + (hp_.freqbin ? "-freqbin" : "");
}

// Creates (rng set) or binds (rng null) the context cells and output heads.
void TaggerModel::build_heads(Rng* rng) {
  const std::size_t in = repr_.output_dim();
  const std::size_t h = hp_.hidden_dim;
  auto& store = *params_;
  if (rng) {
    ctx_f_ = Cell::create(store, "ctx.fwd", hp_.cell, in, h, *rng);
    ctx_r_ = Cell::create(store, "ctx.rev", hp_.cell, in, h, *rng);
    tag_w_ = &store.add_glorot("head.tag.W", tagset_.size(), 2 * h, *rng);
    tag_b_ = &store.add_zeros("head.tag.b", tagset_.size());
    if (hp_.freqbin) {
      freq_w_ = &store.add_glorot("head.freq.W", n_bins_, 2 * h, *rng);
      freq_b_ = &store.add_zeros("head.freq.b", n_bins_);
    }
  } else {
    ctx_f_ = Cell::bind(store, "ctx.fwd", hp_.cell, in, h);
    ctx_r_ = Cell::bind(store, "ctx.rev", hp_.cell, in, h);
    tag_w_ = &store.at("head.tag.W");
    tag_b_ = &store.at("head.tag.b");
    if (tag_w_->value().rows() != tagset_.size()) throw FormatError("tag head does not match tagset");
    if (hp_.freqbin) {
      freq_w_ = &store.at("head.freq.W");
      freq_b_ = &store.at("head.freq.b");
      if (freq_w_->value().rows() != n_bins_) throw FormatError("frequency head does not match n_bins");
    }
  }
}

TaggerModel TaggerModel::initialize(const Corpus& train, const Hyperparams& hp) {
  hp.validate();
  if (train.empty()) throw DataError("training corpus is empty");
  TaggerModel m;
  m.hp_ = hp;
  m.vocab_ = Vocab::build(train);
  m.tagset_ = seqtag::tagset(train);
  for (std::size_t i = 0; i < m.tagset_.size(); ++i) m.tag_ids_.emplace(m.tagset_[i], i);
  std::size_t max_bin = 0;
  for (std::size_t id = 1; id < m.vocab_.word_count(); ++id) {
    max_bin = std::max(max_bin, freqbin_label(m.vocab_.frequency_of_id(id), hp.freqbin_log_base));
  }
  m.n_bins_ = max_bin + 1;

  Rng init_rng = Rng(hp.seed).derive(0);
  if (hp.pretrained_path && uses_words(hp.repr)) {
    // The word table takes the file's dimension before anything downstream is sized.
    const std::size_t dim = pretrained_dim(*hp.pretrained_path);
    if (dim != 0) m.hp_.word_dim = dim;
  }
  m.repr_ = ReprLayer::create(*m.params_, m.vocab_, m.hp_.repr_config(), init_rng);
  if (hp.pretrained_path && uses_words(hp.repr)) {
    const auto st = load_pretrained(*hp.pretrained_path, m.vocab_, *m.repr_.word_table(), false, init_rng);
    log::info("pretrained embeddings: " + std::to_string(st.loaded) + " loaded, " +
              std::to_string(st.missed) + " not in vocabulary, dim " + std::to_string(st.dim));
  }
  m.build_heads(&init_rng);
  return m;
}

std::vector<TokenOutputs> TaggerModel::forward_sentence(Tape& tape,
                                                        std::span<const std::string> tokens,
                                                        bool training, Rng* rng) const {
  if (tokens.empty()) throw DataError("cannot tag an empty sentence");
  if (training && !rng) throw Error("forward_sentence: training mode needs an rng");
  std::vector<Var> xs;
  xs.reserve(tokens.size());
  for (const auto& form : tokens) {
    if (form.empty()) throw DataError("empty token");
    std::optional<std::size_t> word_id;
    if (training && uses_words(hp_.repr) && hp_.unk_replace_prob > 0.0 &&
        vocab_.frequency(form) == 1 && rng->bernoulli(hp_.unk_replace_prob)) {
      word_id = Vocab::kUnkWord;
    }
    Var x = token_repr(tape, form, repr_, vocab_, word_id);
    if (training && hp_.sigma > 0.0) x = tape.gaussian_noise(x, hp_.sigma, *rng);
    xs.push_back(x);
  }
  const auto states = birnn_ctx(tape, ctx_f_, ctx_r_, xs);
  std::vector<TokenOutputs> out;
  out.reserve(states.size());
  const Var tw = tape.param(*tag_w_);
  const Var tb = tape.param(*tag_b_);
  std::optional<Var> fw, fb;
  if (freq_w_) {
    fw = tape.param(*freq_w_);
    fb = tape.param(*freq_b_);
  }
  for (Var v : states) {
    TokenOutputs o;
    o.tag_logits = tape.affine(tw, v, tb);
    if (fw) o.freq_logits = tape.affine(*fw, v, *fb);
    out.push_back(o);
  }
  return out;
}

Var TaggerModel::sentence_loss(Tape& tape, const Sentence& sentence, bool training, Rng* rng) const {
  if (sentence.forms.size() != sentence.tags.size()) throw DataError("sentence forms/tags differ in length");
  std::vector<std::size_t> gold;
  gold.reserve(sentence.size());
  for (const auto& t : sentence.tags) gold.push_back(tag_index(t));
  const auto outputs = forward_sentence(tape, sentence.forms, training, rng);
  std::vector<Var> terms;
  terms.reserve(2 * outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    terms.push_back(tape.softmax_xent(outputs[i].tag_logits, gold[i]));
    if (outputs[i].freq_logits) {
      terms.push_back(tape.softmax_xent(*outputs[i].freq_logits, freq_label(sentence.forms[i])));
    }
  }
  return tape.add(terms);
}

Var TaggerModel::tag_loss(Tape& tape, const Sentence& sentence) const {
  const auto outputs = forward_sentence(tape, sentence.forms, false, nullptr);
  std::vector<Var> terms;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    terms.push_back(tape.softmax_xent(outputs[i].tag_logits, tag_index(sentence.tags[i])));
  }
  return tape.add(terms);
}

double TaggerModel::train_epoch(const Corpus& train, std::vector<std::size_t>& order, Rng& rng,
                                int epoch) {
  rng.shuffle(std::span<std::size_t>(order));
  double total = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Sentence& s = train.sentences[order[k]];
    Tape tape;
    double loss_value = 0.0;
    Var loss;
    try {
      loss = sentence_loss(tape, s, true, &rng);
      loss_value = tape.scalar(loss);
    } catch (const NumericError& e) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", sentence " +
                                std::to_string(order[k]) + ": " + e.what(),
                            epoch, order[k]);
    }
    if (!std::isfinite(loss_value)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", sentence " +
                                std::to_string(order[k]),
                            epoch, order[k]);
    }
    tape.backward(loss);
    sgd_step(*params_, hp_.lr);
    total += loss_value;
  }
  return total / static_cast<double>(order.size());
}

TaggerModel TaggerModel::train(const Corpus& train, const Hyperparams& hp, const Corpus* dev,
                               const EpochCallback& on_epoch) {
  TaggerModel m = initialize(train, hp);
  Rng rng = Rng(hp.seed).derive(1);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    EpochReport report;
    report.epoch = epoch;
    report.mean_loss = m.train_epoch(train, order, rng, epoch);
    if (dev && !dev->empty()) {
      std::size_t correct = 0;
      std::size_t total = 0;
      for (const auto& s : dev->sentences) {
        const auto pred = m.predict(s.forms);
        for (std::size_t i = 0; i < s.size(); ++i) correct += pred[i] == s.tags[i];
        total += s.size();
      }
      report.dev_accuracy = static_cast<double>(correct) / static_cast<double>(total);
    }
    if (on_epoch) on_epoch(report);
  }
  return m;
}

std::vector<std::size_t> TaggerModel::predict_ids(std::span<const std::string> tokens) const {
  Tape tape(Tape::Mode::inference);
  const auto outputs = forward_sentence(tape, tokens, false, nullptr);
  std::vector<std::size_t> ids;
  ids.reserve(outputs.size());
  for (const auto& o : outputs) {
    const auto z = tape.value(o.tag_logits);
    // max_element returns the first maximum: ties go to the lowest index.
    ids.push_back(static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin()));
  }
  return ids;
}

std::vector<std::string> TaggerModel::predict(std::span<const std::string> tokens) const {
  std::vector<std::string> tags;
  for (std::size_t id : predict_ids(tokens)) tags.push_back(tagset_[id]);
  return tags;
}

namespace {

json hyperparams_to_json(const Hyperparams& hp) {
  json j;
  j["lr"] = hp.lr;
  j["epochs"] = hp.epochs;
  j["sigma"] = hp.sigma;
  j["word_dim"] = hp.word_dim;
  j["subtoken_dim"] = hp.subtoken_dim;
  j["hidden_dim"] = hp.hidden_dim;
  j["seed"] = hp.seed;
  j["repr"] = to_string(hp.repr);
  j["freqbin"] = hp.freqbin;
  j["pretrained_path"] = hp.pretrained_path ? json(*hp.pretrained_path) : json(nullptr);
  j["cell"] = to_string(hp.cell);
  j["unk_replace_prob"] = hp.unk_replace_prob;
  j["freqbin_log_base"] = hp.freqbin_log_base;
  return j;
}

Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  hp.lr = j.at("lr").get<double>();
  hp.epochs = j.at("epochs").get<int>();
  hp.sigma = j.at("sigma").get<double>();
  hp.word_dim = j.at("word_dim").get<std::size_t>();
  hp.subtoken_dim = j.at("subtoken_dim").get<std::size_t>();
  hp.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.repr = repr_mode_from_string(j.at("repr").get<std::string>());
  hp.freqbin = j.at("freqbin").get<bool>();
  if (!j.at("pretrained_path").is_null()) hp.pretrained_path = j.at("pretrained_path").get<std::string>();
  hp.cell = cell_kind_from_string(j.at("cell").get<std::string>());
  hp.unk_replace_prob = j.at("unk_replace_prob").get<double>();
  hp.freqbin_log_base = j.at("freqbin_log_base").get<double>();
  return hp;
}

}  // namespace

std::vector<char> TaggerModel::serialize() const {
  container::Contents c;
  auto& h = c.header;
  h["kind"] = "bilstm";
  h["hyperparams"] = hyperparams_to_json(hp_);
  h["tagset"] = tagset_;
  h["n_bins"] = n_bins_;
  std::vector<std::string> order;
  if (uses_words(hp_.repr)) order.push_back("word");
  if (uses_chars(hp_.repr)) order.push_back("char");
  if (uses_bytes(hp_.repr)) order.push_back("byte");
  h["repr_order"] = order;
  h["vocab"]["words"] = std::vector<std::string>(vocab_.words().begin() + 1, vocab_.words().end());
  h["vocab"]["counts"] = std::vector<std::size_t>(vocab_.counts().begin() + 1, vocab_.counts().end());
  h["vocab"]["chars"] = std::vector<std::uint32_t>(vocab_.chars().begin() + 3, vocab_.chars().end());
  for (const auto& p : *params_) c.blocks.push_back({p.name(), p.value()});
  return container::encode(c);
}

TaggerModel TaggerModel::deserialize(std::span<const char> bytes) {
  auto c = container::decode(bytes);
  const auto& h = c.header;
  TaggerModel m;
  try {
    if (h.at("kind").get<std::string>() != "bilstm") {
      throw FormatError("model file holds a '" + h.at("kind").get<std::string>() + "' model, not bilstm");
    }
    m.hp_ = hyperparams_from_json(h.at("hyperparams"));
    m.tagset_ = h.at("tagset").get<std::vector<std::string>>();
    m.n_bins_ = h.at("n_bins").get<std::size_t>();
    const auto chars = h.at("vocab").at("chars").get<std::vector<std::uint32_t>>();
    m.vocab_ = Vocab::from_parts(h.at("vocab").at("words").get<std::vector<std::string>>(),
                                 h.at("vocab").at("counts").get<std::vector<std::size_t>>(),
                                 std::vector<char32_t>(chars.begin(), chars.end()));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  }
  for (std::size_t i = 0; i < m.tagset_.size(); ++i) m.tag_ids_.emplace(m.tagset_[i], i);
  for (auto& b : c.blocks) m.params_->add(b.name, std::move(b.value));
  m.repr_ = ReprLayer::bind(*m.params_, m.vocab_, m.hp_.repr_config());
  m.hp_.word_dim = m.repr_.config().word_dim;
  m.build_heads(nullptr);
  return m;
}

void TaggerModel::save(const std::filesystem::path& path) const {
  container::write_file(path, serialize());
}

TaggerModel TaggerModel::load(const std::filesystem::path& path) {
  return deserialize(container::read_file(path));
}

}  // namespace seqtag
