#include "seqtag/tnt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "container.hpp"
#include "seqtag/error.hpp"
#include "seqtag/utf8.hpp"

namespace seqtag {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// (f - 1) / (n - 1), defined as 0 when n <= 1.
double deleted_ratio(double f, double n) { return n > 1.0 ? (f - 1.0) / (n - 1.0) : 0.0; }

bool starts_upper(std::span<const char32_t> cps) { return !cps.empty() && utf8::is_upper(cps[0]); }

}  // namespace

SuffixTrie::SuffixTrie(std::size_t tag_count) : tag_count_(tag_count) {
  nodes_.push_back(Node{{}, std::vector<double>(tag_count, 0.0), 0.0, {}});
}

void SuffixTrie::add(std::span<const char32_t> word, std::size_t tag, double count,
                     std::size_t max_suffix) {
  std::uint32_t cur = 0;
  nodes_[0].counts[tag] += count;
  nodes_[0].total += count;
  const std::size_t depth = std::min(max_suffix, word.size());
  for (std::size_t k = 0; k < depth; ++k) {
    const char32_t ch = word[word.size() - 1 - k];
    auto it = nodes_[cur].children.find(ch);
    std::uint32_t next;
    if (it == nodes_[cur].children.end()) {
      next = static_cast<std::uint32_t>(nodes_.size());
      nodes_[cur].children.emplace(ch, next);
      nodes_.push_back(Node{{}, std::vector<double>(tag_count_, 0.0), 0.0, {}});
    } else {
      next = it->second;
    }
    cur = next;
    nodes_[cur].counts[tag] += count;
    nodes_[cur].total += count;
  }
}

void SuffixTrie::finalize(double theta) {
  // Children are always created after their parent, so index order is a
  // valid top-down order.
  std::vector<std::uint32_t> parent(nodes_.size(), 0);
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& [ch, child] : nodes_[i].children) parent[child] = i;
  }
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    n.prob.assign(tag_count_, 0.0);
    if (i == 0) {
      if (n.total > 0.0) {
        for (std::size_t t = 0; t < tag_count_; ++t) n.prob[t] = n.counts[t] / n.total;
      }
      continue;
    }
    const auto& up = nodes_[parent[i]].prob;
    for (std::size_t t = 0; t < tag_count_; ++t) {
      n.prob[t] = (n.counts[t] / n.total + theta * up[t]) / (1.0 + theta);
    }
  }
}

std::span<const double> SuffixTrie::lookup(std::span<const char32_t> word, std::size_t max_suffix,
                                           std::size_t* matched_length) const {
  std::uint32_t cur = 0;
  std::size_t k = 0;
  const std::size_t depth = std::min(max_suffix, word.size());
  for (; k < depth; ++k) {
    const auto& children = nodes_[cur].children;
    auto it = children.find(word[word.size() - 1 - k]);
    if (it == children.end()) break;
    cur = it->second;
  }
  if (matched_length) *matched_length = k;
  return nodes_[cur].prob;
}

std::vector<std::span<const double>> SuffixTrie::distributions() const {
  std::vector<std::span<const double>> out;
  for (const auto& n : nodes_) out.emplace_back(n.prob);
  return out;
}

TrigramModel TrigramModel::train(const Corpus& corpus, const TntConfig& config) {
  if (corpus.empty() || corpus.token_count() == 0) throw DataError("training corpus is empty");
  TrigramModel m;
  m.config_ = config;
  m.tagset_ = seqtag::tagset(corpus);
  const std::size_t T = m.tagset_.size();
  const std::size_t B = T;
  std::unordered_map<std::string, std::size_t> tag_ids;
  for (std::size_t i = 0; i < T; ++i) tag_ids.emplace(m.tagset_[i], i);

  m.unigram_.assign(T, 0.0);
  m.bigram_.assign((T + 1) * T, 0.0);
  m.trigram_.assign((T + 1) * (T + 1) * T, 0.0);
  for (const auto& s : corpus.sentences) {
    std::size_t t1 = B;
    std::size_t t2 = B;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t t3 = tag_ids.at(s.tags[i]);
      m.unigram_[t3] += 1.0;
      m.bigram_[t2 * T + t3] += 1.0;
      m.trigram_[(t1 * (T + 1) + t2) * T + t3] += 1.0;
      auto [it, inserted] = m.word_index_.try_emplace(s.forms[i], m.words_.size());
      if (inserted) {
        m.words_.push_back(s.forms[i]);
        m.lexicon_.resize(m.lexicon_.size() + T, 0.0);
      }
      m.lexicon_[it->second * T + t3] += 1.0;
      t1 = t2;
      t2 = t3;
    }
  }
  m.tokens_ = corpus.token_count();
  m.rebuild();
  return m;
}

// Derives interpolation weights, transition table, theta and suffix tries
// from the raw counts.
void TrigramModel::rebuild() {
  const std::size_t T = tag_count();
  const double N = static_cast<double>(tokens_);

  std::vector<double> hist1(T + 1, 0.0);
  std::vector<double> hist2((T + 1) * (T + 1), 0.0);
  for (std::size_t a = 0; a <= T; ++a) {
    for (std::size_t c = 0; c < T; ++c) hist1[a] += bigram_[a * T + c];
    for (std::size_t b = 0; b <= T; ++b) {
      for (std::size_t c = 0; c < T; ++c) hist2[a * (T + 1) + b] += trigram_[(a * (T + 1) + b) * T + c];
    }
  }

  // Deleted interpolation: each trigram votes, with its count, for the
  // order whose estimate survives removing that trigram best. Ties go to
  // the lower order.
  std::array<double, 3> votes{0.0, 0.0, 0.0};
  for (std::size_t a = 0; a <= T; ++a) {
    for (std::size_t b = 0; b <= T; ++b) {
      for (std::size_t c = 0; c < T; ++c) {
        const double f = trigram_[(a * (T + 1) + b) * T + c];
        if (f <= 0.0) continue;
        const double c3 = deleted_ratio(f, hist2[a * (T + 1) + b]);
        const double c2 = deleted_ratio(bigram_[b * T + c], hist1[b]);
        const double c1 = deleted_ratio(unigram_[c], N);
        std::size_t best = 0;
        double best_v = c1;
        if (c2 > best_v) {
          best = 1;
          best_v = c2;
        }
        if (c3 > best_v) best = 2;
        votes[best] += f;
      }
    }
  }
  const double total_votes = votes[0] + votes[1] + votes[2];
  for (std::size_t k = 0; k < 3; ++k) lambdas_[k] = votes[k] / total_votes;

  log_trans_.assign((T + 1) * (T + 1) * T, kNegInf);
  for (std::size_t a = 0; a <= T; ++a) {
    for (std::size_t b = 0; b <= T; ++b) {
      for (std::size_t c = 0; c < T; ++c) {
        log_trans_[(a * (T + 1) + b) * T + c] = safe_log(transition(a, b, c));
      }
    }
  }

  // Successive-abstraction weight: standard deviation of the unconditional
  // ML tag probabilities.
  if (T > 1) {
    const double mean = 1.0 / static_cast<double>(T);
    double ss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double d = unigram_[t] / N - mean;
      ss += d * d;
    }
    theta_ = std::sqrt(ss / static_cast<double>(T - 1));
  } else {
    theta_ = 0.0;
  }

  upper_ = SuffixTrie(T);
  lower_ = SuffixTrie(T);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    double freq = 0.0;
    for (std::size_t t = 0; t < T; ++t) freq += lexicon_[w * T + t];
    if (freq > static_cast<double>(config_.suffix_max_freq)) continue;
    const auto cps = utf8::decode(words_[w]);
    SuffixTrie& trie = starts_upper(cps) ? upper_ : lower_;
    for (std::size_t t = 0; t < T; ++t) {
      if (lexicon_[w * T + t] > 0.0) trie.add(cps, t, lexicon_[w * T + t], config_.max_suffix);
    }
  }
  upper_.finalize(theta_);
  lower_.finalize(theta_);
}

double TrigramModel::transition(std::size_t t1, std::size_t t2, std::size_t t3) const {
  const std::size_t T = tag_count();
  const double uni = unigram_[t3] / static_cast<double>(tokens_);
  double h1 = 0.0;
  for (std::size_t c = 0; c < T; ++c) h1 += bigram_[t2 * T + c];
  const double bi = h1 > 0.0 ? bigram_[t2 * T + t3] / h1 : uni;
  double h2 = 0.0;
  const std::size_t base = (t1 * (T + 1) + t2) * T;
  for (std::size_t c = 0; c < T; ++c) h2 += trigram_[base + c];
  const double tri = h2 > 0.0 ? trigram_[base + t3] / h2 : bi;
  return lambdas_[0] * uni + lambdas_[1] * bi + lambdas_[2] * tri;
}

bool TrigramModel::is_known(std::string_view word) const {
  return word_index_.contains(std::string(word));
}

std::size_t TrigramModel::train_frequency(std::string_view form) const {
  auto it = word_index_.find(std::string(form));
  if (it == word_index_.end()) return 0;
  const std::size_t T = tag_count();
  double f = 0.0;
  for (std::size_t t = 0; t < T; ++t) f += lexicon_[it->second * T + t];
  return static_cast<std::size_t>(f);
}

const SuffixTrie& TrigramModel::unknown_trie(std::string_view word) const {
  const auto cps = utf8::decode(word);
  const bool upper = starts_upper(cps);
  const SuffixTrie& preferred = upper ? upper_ : lower_;
  const SuffixTrie& other = upper ? lower_ : upper_;
  return preferred.empty() && !other.empty() ? other : preferred;
}

std::vector<double> TrigramModel::emissions(std::string_view word) const {
  const std::size_t T = tag_count();
  std::vector<double> out(T, 0.0);
  auto it = word_index_.find(std::string(word));
  if (it != word_index_.end()) {
    for (std::size_t t = 0; t < T; ++t) {
      out[t] = unigram_[t] > 0.0 ? lexicon_[it->second * T + t] / unigram_[t] : 0.0;
    }
    return out;
  }
  const SuffixTrie& trie = unknown_trie(word);
  if (trie.empty()) {
    std::fill(out.begin(), out.end(), 1.0);  // no rare words at all: uniform
    return out;
  }
  const auto dist = trie.lookup(utf8::decode(word), config_.max_suffix);
  const auto prior = trie.root();
  for (std::size_t t = 0; t < T; ++t) out[t] = prior[t] > 0.0 ? dist[t] / prior[t] : 0.0;
  return out;
}

double TrigramModel::emission(std::string_view word, std::size_t tag) const {
  return emissions(word).at(tag);
}

std::vector<double> TrigramModel::log_emissions(std::string_view word) const {
  auto out = emissions(word);
  for (double& v : out) v = safe_log(v);
  return out;
}

void TrigramModel::set_beam(double beam) {
  if (!(beam == 0.0 || beam >= 1.0)) throw Error("beam factor must be 0 (exact) or >= 1");
  config_.beam = beam;
}

std::vector<std::string> TrigramModel::tag(std::span<const std::string> forms) const {
  std::vector<std::string> out;
  for (std::size_t t : viterbi(*this, forms, config_.beam)) out.push_back(tagset_[t]);
  return out;
}

std::vector<std::size_t> viterbi(const TrigramModel& model, std::span<const std::string> tokens,
                                 double beam) {
  if (tokens.empty()) throw DataError("cannot tag an empty sentence");
  if (!(beam == 0.0 || beam >= 1.0)) throw Error("beam factor must be 0 (exact) or >= 1");
  const std::size_t T = model.tag_count();
  const std::size_t B = model.boundary();
  const std::size_t H = T + 1;  // history values including the boundary
  const std::size_t n = tokens.size();
  const double log_beam = beam > 0.0 ? std::log(beam) : 0.0;

  // delta[i][prev * T + cur]; prev ranges over H values.
  std::vector<std::vector<double>> delta(n, std::vector<double>(H * T, kNegInf));
  std::vector<std::vector<char>> active(n, std::vector<char>(H * T, 0));
  std::vector<std::vector<std::uint32_t>> back(n, std::vector<std::uint32_t>(H * T, 0));

  auto prune = [&](std::size_t i) {
    if (beam == 0.0) return;
    double best = kNegInf;
    for (std::size_t s = 0; s < H * T; ++s) {
      if (active[i][s]) best = std::max(best, delta[i][s]);
    }
    if (best == kNegInf) return;
    const double floor = best - log_beam;
    for (std::size_t s = 0; s < H * T; ++s) {
      if (active[i][s] && delta[i][s] < floor) active[i][s] = 0;
    }
  };

  {
    const auto emit = model.log_emissions(tokens[0]);
    for (std::size_t c = 0; c < T; ++c) {
      const std::size_t s = B * T + c;
      delta[0][s] = 0.0 + (model.log_transition(B, B, c) + emit[c]);
      active[0][s] = 1;
    }
    prune(0);
  }
  for (std::size_t i = 1; i < n; ++i) {
    const auto emit = model.log_emissions(tokens[i]);
    for (std::size_t b = 0; b < T; ++b) {
      for (std::size_t c = 0; c < T; ++c) {
        bool found = false;
        double best = kNegInf;
        std::uint32_t arg = 0;
        for (std::size_t a = 0; a < H; ++a) {
          const std::size_t prev = a * T + b;
          if (!active[i - 1][prev]) continue;
          const double cand = delta[i - 1][prev] + (model.log_transition(a, b, c) + emit[c]);
          if (!found || cand > best) {
            found = true;
            best = cand;
            arg = static_cast<std::uint32_t>(a);
          }
        }
        if (!found) continue;
        const std::size_t s = b * T + c;
        delta[i][s] = best;
        back[i][s] = arg;
        active[i][s] = 1;
      }
    }
    prune(i);
  }

  // Final state: lowest last tag first, then lowest previous tag.
  bool found = false;
  double best = kNegInf;
  std::size_t best_prev = 0;
  std::size_t best_cur = 0;
  for (std::size_t c = 0; c < T; ++c) {
    for (std::size_t a = 0; a < H; ++a) {
      const std::size_t s = a * T + c;
      if (!active[n - 1][s]) continue;
      if (!found || delta[n - 1][s] > best) {
        found = true;
        best = delta[n - 1][s];
        best_prev = a;
        best_cur = c;
      }
    }
  }
  std::vector<std::size_t> tags(n);
  tags[n - 1] = best_cur;
  std::size_t prev = best_prev;
  for (std::size_t i = n - 1; i > 0; --i) {
    tags[i - 1] = prev;
    const std::size_t earlier = back[i][prev * T + tags[i]];
    prev = earlier;
  }
  return tags;
}

std::vector<char> TrigramModel::serialize() const {
  const std::size_t T = tag_count();
  container::Contents c;
  auto& h = c.header;
  h["kind"] = "tnt";
  h["config"] = {{"max_suffix", config_.max_suffix},
                 {"suffix_max_freq", config_.suffix_max_freq},
                 {"beam", config_.beam}};
  h["tagset"] = tagset_;
  h["tokens"] = tokens_;
  h["words"] = words_;
  h["lambdas"] = lambdas_;
  h["theta"] = theta_;
  c.blocks.push_back({"unigram", Tensor({T, 1}, unigram_)});
  c.blocks.push_back({"bigram", Tensor({T + 1, T}, bigram_)});
  c.blocks.push_back({"trigram", Tensor({(T + 1) * (T + 1), T}, trigram_)});
  c.blocks.push_back({"lexicon", Tensor({words_.size(), T}, lexicon_)});
  return container::encode(c);
}

TrigramModel TrigramModel::deserialize(std::span<const char> bytes) {
  auto c = container::decode(bytes);
  const auto& h = c.header;
  TrigramModel m;
  try {
    if (h.at("kind").get<std::string>() != "tnt") {
      throw FormatError("model file holds a '" + h.at("kind").get<std::string>() + "' model, not tnt");
    }
    m.config_.max_suffix = h.at("config").at("max_suffix").get<std::size_t>();
    m.config_.suffix_max_freq = h.at("config").at("suffix_max_freq").get<std::size_t>();
    m.config_.beam = h.at("config").at("beam").get<double>();
    m.tagset_ = h.at("tagset").get<std::vector<std::string>>();
    m.tokens_ = h.at("tokens").get<std::size_t>();
    m.words_ = h.at("words").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  }
  const std::size_t T = m.tagset_.size();
  auto take = [&](const char* name, std::size_t expected) {
    for (auto& b : c.blocks) {
      if (b.name == name) {
        if (b.value.size() != expected) throw FormatError(std::string("block ") + name + " has wrong size");
        return std::vector<double>(b.value.values().begin(), b.value.values().end());
      }
    }
    throw FormatError(std::string("missing block ") + name);
  };
  m.unigram_ = take("unigram", T);
  m.bigram_ = take("bigram", (T + 1) * T);
  m.trigram_ = take("trigram", (T + 1) * (T + 1) * T);
  m.lexicon_ = take("lexicon", m.words_.size() * T);
  for (std::size_t i = 0; i < m.words_.size(); ++i) m.word_index_.emplace(m.words_[i], i);
  m.rebuild();
  return m;
}

void TrigramModel::save(const std::filesystem::path& path) const {
  container::write_file(path, serialize());
}

TrigramModel TrigramModel::load(const std::filesystem::path& path) {
  return deserialize(container::read_file(path));
}

}  // namespace seqtag
