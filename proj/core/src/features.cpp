#include "ewer/features.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "ewer/errors.hpp"
#include "ewer/signal.hpp"
#include "ewer/util.hpp"

namespace ewer {

namespace {

// Split a token into UTF-8 code points.
std::vector<std::string> codepoints(const std::string& token) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < token.size()) {
    std::size_t len = 1;
    unsigned char c = static_cast<unsigned char>(token[i]);
    if ((c & 0xe0) == 0xc0)
      len = 2;
    else if ((c & 0xf0) == 0xe0)
      len = 3;
    else if ((c & 0xf8) == 0xf0)
      len = 4;
    len = std::min(len, token.size() - i);
    out.push_back(token.substr(i, len));
    i += len;
  }
  return out;
}

void bump(std::unordered_map<std::string, int>& index, const std::string& key) {
  index.emplace(key, static_cast<int>(index.size()));
}

constexpr char kCacheMagic[8] = {'E', 'W', 'E', 'R', 'F', 'E', 'A', 'T'};
constexpr std::uint8_t kCacheVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}
void put_str(std::string& out, const std::string& s) {
  auto len = static_cast<std::uint16_t>(s.size());
  out.append(reinterpret_cast<const char*>(&len), 2);
  out += s;
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size())
      throw input_error("ChecksumMismatch", "truncated feature cache");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::string str() {
    need(2);
    std::uint16_t len;
    std::memcpy(&len, data.data() + pos, 2);
    pos += 2;
    need(len);
    std::string s = data.substr(pos, len);
    pos += len;
    return s;
  }
};

}  // namespace

int BlockLayout::total_dim() const {
  int d = 0;
  for (const auto& [name, dim] : blocks) d += dim;
  return d;
}

int BlockLayout::offset_of(const std::string& name) const {
  int off = 0;
  for (const auto& [n, dim] : blocks) {
    if (n == name) return off;
    off += dim;
  }
  return -1;
}

int BlockLayout::dim_of(const std::string& name) const {
  for (const auto& [n, dim] : blocks)
    if (n == name) return dim;
  return -1;
}

Vocab build_vocab(const Corpus& train) {
  std::vector<const Utterance*> order;
  order.reserve(train.size());
  for (const auto& u : train) order.push_back(&u);
  std::sort(order.begin(), order.end(),
            [](const Utterance* a, const Utterance* b) { return a->id < b->id; });

  Vocab v;
  for (const Utterance* u : order) {
    for (const auto& token : u->hypothesis) {
      bump(v.words, token);
      auto cps = codepoints(token);
      for (const auto& cp : cps) bump(v.monograms, cp);
      for (std::size_t i = 1; i < cps.size(); ++i)
        bump(v.bigrams, cps[i - 1] + cps[i]);
    }
  }
  return v;
}

Eigen::Vector3d numerical_features(const Utterance& u) {
  std::size_t graphemes = 0;
  for (const auto& token : u.hypothesis) graphemes += count_graphemes(token);
  return {static_cast<double>(u.hypothesis.size()),
          static_cast<double>(graphemes), u.duration};
}

Eigen::VectorXd text_features(std::span<const std::string> hypothesis,
                              const Vocab& vocab) {
  const int word_dim = static_cast<int>(vocab.words.size()) + 1;
  const int mono_dim = static_cast<int>(vocab.monograms.size()) + 1;
  const int bi_dim = static_cast<int>(vocab.bigrams.size()) + 1;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(word_dim + mono_dim + bi_dim);

  auto count = [&](const std::unordered_map<std::string, int>& index,
                   int base, int oov_slot, const std::string& key) {
    auto it = index.find(key);
    out[it != index.end() ? base + it->second : oov_slot] += 1.0;
  };

  const int mono_base = word_dim;
  const int bi_base = word_dim + mono_dim;
  for (const auto& token : hypothesis) {
    count(vocab.words, 0, word_dim - 1, token);
    auto cps = codepoints(token);
    for (const auto& cp : cps)
      count(vocab.monograms, mono_base, mono_base + mono_dim - 1, cp);
    for (std::size_t i = 1; i < cps.size(); ++i)
      count(vocab.bigrams, bi_base, bi_base + bi_dim - 1, cps[i - 1] + cps[i]);
  }
  return out;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("IoFailure", "cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  int dim = 0;
  hs >> magic >> version >> dim;
  if (magic != "EWER-EMB" || version != "v1" || dim <= 0)
    throw input_error("UnsupportedFormat",
                      path + ": expected 'EWER-EMB v1 <dim>' header");

  EmbeddingTable table;
  table.dim = dim;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id;
    ls >> id;
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
      if (!(ls >> v[i]))
        throw input_error("DimensionMismatch",
                          path + " line " + std::to_string(lineno) +
                              ": expected " + std::to_string(dim) + " values");
    }
    double extra;
    if (ls >> extra)
      throw input_error("DimensionMismatch",
                        path + " line " + std::to_string(lineno) +
                            ": more than " + std::to_string(dim) + " values");
    if (table.vectors.count(id)) {
      ++table.duplicate_ids;
      std::cerr << "warning: duplicate embedding id '" << id
                << "', keeping the last occurrence\n";
    }
    table.vectors[id] = std::move(v);
  }
  return table;
}

FeaturizeResult featurize_corpus(const Corpus& corpus,
                                 const FeatureConfig& config,
                                 const Vocab* vocab, int workers) {
  if (config.text && vocab == nullptr)
    throw internal_error("MissingVocab",
                         "text features need a training vocabulary");

  EmbeddingTable embeddings;
  if (!config.embedding_path.empty()) {
    embeddings = load_embeddings(config.embedding_path);
    for (const auto& u : corpus)
      if (!embeddings.vectors.count(u.id))
        throw input_error("MissingId",
                          "no embedding for utterance '" + u.id + "'");
  }

  BlockLayout layout;
  if (config.numerical) layout.blocks.emplace_back("numerical", 3);
  if (config.text) layout.blocks.emplace_back("text", vocab->text_dim());
  if (config.signal_mfcc) layout.blocks.emplace_back("signal:mfcc", 52);
  if (config.signal_melspec) layout.blocks.emplace_back("signal:melspec", 384);
  if (config.signal_rawsig) layout.blocks.emplace_back("signal:rawsig", 5);
  if (!config.embedding_path.empty())
    layout.blocks.emplace_back("embedding", embeddings.dim);

  const bool wants_signal =
      config.signal_mfcc || config.signal_melspec || config.signal_rawsig;

  FeaturizeResult result;
  result.set.layout = layout;
  result.set.ids.reserve(corpus.size());
  for (const auto& u : corpus) result.set.ids.push_back(u.id);
  result.set.data.setZero(static_cast<Eigen::Index>(corpus.size()),
                          layout.total_dim());

  std::vector<char> missing(corpus.size(), 0);

  auto extract = [&](std::size_t i) {
    const Utterance& u = corpus[i];
    auto row = result.set.data.row(static_cast<Eigen::Index>(i));
    int off = 0;
    if (config.numerical) {
      row.segment(off, 3) = numerical_features(u).transpose();
      off += 3;
    }
    if (config.text) {
      row.segment(off, vocab->text_dim()) =
          text_features(u.hypothesis, *vocab).transpose();
      off += vocab->text_dim();
    }
    if (wants_signal) {
      Pcm pcm;
      bool have_audio = false;
      if (!u.audio_path.empty()) {
        try {
          pcm = load_pcm(u.audio_path);
          have_audio = true;
        } catch (const Error&) {
        }
      }
      if (!have_audio) {
        missing[i] = 1;
        off += layout.total_dim() - off -
               (config.embedding_path.empty() ? 0 : embeddings.dim);
      } else {
        auto emit = [&](const std::vector<double>& pooled) {
          for (double v : pooled) row[off++] = v;
        };
        if (config.signal_mfcc) emit(pool_signal(mfcc(pcm.samples, pcm.rate)));
        if (config.signal_melspec)
          emit(pool_signal(mel_spectrogram(pcm.samples, pcm.rate)));
        if (config.signal_rawsig) {
          auto raw = raw_signal_prep(pcm.samples, pcm.rate);
          SignalMatrix col;
          col.data = Eigen::Map<const Eigen::MatrixXd>(
              raw.data(), static_cast<Eigen::Index>(raw.size()), 1);
          emit(pool_signal(col));
        }
      }
    }
    if (!config.embedding_path.empty()) {
      row.segment(off, embeddings.dim) =
          embeddings.vectors.at(u.id).transpose();
    }
  };

  if (workers <= 1 || corpus.size() < 2) {
    for (std::size_t i = 0; i < corpus.size(); ++i) extract(i);
  } else {
    std::vector<std::thread> pool;
    std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(workers), corpus.size());
    for (std::size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < corpus.size(); i += n_workers) extract(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (missing[i]) result.missing_audio.push_back(corpus[i].id);
  if (!result.missing_audio.empty() && !config.allow_missing_audio)
    throw input_error("MissingAudio",
                      "no usable audio for utterance '" +
                          result.missing_audio.front() + "'" +
                          (result.missing_audio.size() > 1
                               ? " and " +
                                     std::to_string(
                                         result.missing_audio.size() - 1) +
                                     " more"
                               : ""));
  return result;
}

void save_features(const FeatureSet& set, const std::string& path) {
  std::string out;
  out.append(kCacheMagic, sizeof(kCacheMagic));
  out.push_back(static_cast<char>(kCacheVersion));
  put_u32(out, static_cast<std::uint32_t>(set.ids.size()));
  put_u32(out, static_cast<std::uint32_t>(set.layout.blocks.size()));
  for (const auto& [name, dim] : set.layout.blocks) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(dim));
  }
  for (const auto& id : set.ids) put_str(out, id);
  const auto rows = set.data.rows();
  const auto cols = set.data.cols();
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v = set.data(r, c);
      out.append(reinterpret_cast<const char*>(&v), 8);
    }
  write_file(path, out);
}

FeatureSet load_features(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() < 9 || std::memcmp(raw.data(), kCacheMagic, 8) != 0)
    throw input_error("UnsupportedFormat", path + ": not a feature cache");
  if (static_cast<std::uint8_t>(raw[8]) != kCacheVersion)
    throw input_error("VersionMismatch",
                      path + ": unsupported feature cache version");

  Reader rd{raw, 9};
  FeatureSet set;
  std::uint32_t n_rows = rd.u32();
  std::uint32_t n_blocks = rd.u32();
  for (std::uint32_t b = 0; b < n_blocks; ++b) {
    std::string name = rd.str();
    std::uint32_t dim = rd.u32();
    set.layout.blocks.emplace_back(std::move(name), static_cast<int>(dim));
  }
  for (std::uint32_t r = 0; r < n_rows; ++r) set.ids.push_back(rd.str());

  const int total = set.layout.total_dim();
  set.data.resize(n_rows, total);
  rd.need(static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(total) *
          8);
  for (std::uint32_t r = 0; r < n_rows; ++r)
    for (int c = 0; c < total; ++c) {
      double v;
      std::memcpy(&v, raw.data() + rd.pos, 8);
      rd.pos += 8;
      set.data(r, c) = v;
    }
  return set;
}

}  // namespace ewer
