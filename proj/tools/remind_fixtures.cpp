// Generates a self-contained demo workspace: an embedding table over a
// synthetic word vocabulary, three JSONL corpus splits with paraphrases,
// and a ready-to-run config wired to the synthetic oracle. Lets someone try
// the full pipeline without network access or a real model.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "remind/embedding.hpp"
#include "remind/error.hpp"
#include "remind/rng.hpp"

namespace {

std::vector<std::string> make_vocab(int size) {
  static const char* syllables[] = {"ba", "del", "fi",  "gor", "han", "jel", "ki",  "lor",
                                    "mun", "nev", "pol", "qua", "ris", "sul", "tam", "vor"};
  const int n = 16;
  std::vector<std::string> vocab;
  vocab.reserve(size);
  for (int i = 0; vocab.size() < static_cast<size_t>(size); ++i) {
    std::string word = syllables[i % n];
    word += syllables[(i / n) % n];
    if (i >= n * n) word += syllables[(i / (n * n)) % n];
    vocab.push_back(word);
  }
  return vocab;
}

std::string make_text(remind::CounterRng& rng, const std::vector<std::string>& vocab,
                      int length) {
  std::string text;
  for (int t = 0; t < length; ++t) {
    if (t) text += ' ';
    text += vocab[rng.next_range(0, vocab.size() - 1)];
  }
  return text;
}

std::string paraphrase(remind::CounterRng& rng, const std::vector<std::string>& vocab,
                       const std::string& text) {
  std::string out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t space = text.find(' ', pos);
    if (space == std::string::npos) space = text.size();
    if (!out.empty()) out += ' ';
    if (rng.next_bernoulli(0.3))
      out += vocab[rng.next_range(0, vocab.size() - 1)];
    else
      out += text.substr(pos, space - pos);
    pos = space + 1;
  }
  return out;
}

void write_split(const std::string& path, const std::string& prefix,
                 const std::vector<std::string>& vocab, int count, int tokens_per_sample,
                 uint64_t seed, bool paraphrases) {
  std::ofstream out(path, std::ios::binary);
  if (!out) remind::raise(remind::ErrorKind::Data, "cannot write " + path);
  for (int i = 0; i < count; ++i) {
    auto rng = remind::CounterRng::keyed(seed, remind::rng::hash_bytes(0, prefix.data(), prefix.size()), i);
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%04d", prefix.c_str(), i);
    const std::string text = make_text(rng, vocab, tokens_per_sample);
    out << "{\"id\":\"" << id << "\",\"text\":\"" << text << "\"}\n";
    if (paraphrases) {
      out << "{\"id\":\"" << id << "-p1\",\"text\":\"" << paraphrase(rng, vocab, text)
          << "\",\"paraphrase_of\":\"" << id << "\"}\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate a demo corpus, embedding table, and config"};
  std::string out_dir = "demo-data";
  int vocab_size = 240;
  int dim = 24;
  int per_class = 40;
  int tokens_per_sample = 24;
  uint64_t seed = 7;
  bool no_paraphrases = false;
  app.add_option("-o,--out", out_dir, "directory to create");
  app.add_option("--vocab", vocab_size, "vocabulary size");
  app.add_option("--dim", dim, "embedding dimension");
  app.add_option("--per-class", per_class, "samples per class");
  app.add_option("--tokens", tokens_per_sample, "tokens per sample");
  app.add_option("--seed", seed, "generator seed");
  app.add_flag("--no-paraphrases", no_paraphrases, "skip paraphrase rows");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    const auto vocab = make_vocab(vocab_size);

    std::vector<std::vector<double>> rows(vocab.size(), std::vector<double>(dim));
    for (size_t i = 0; i < vocab.size(); ++i) {
      auto rng = remind::CounterRng::keyed(seed, 0xe0b, i);
      for (int d = 0; d < dim; ++d) rows[i][d] = rng.next_signed_unit();
    }
    auto table = remind::TokenEmbeddingTable::build(vocab, std::move(rows), 20);
    table.save(out_dir + "/embeddings.txt");

    write_split(out_dir + "/retain.jsonl", "retain", vocab, per_class, tokens_per_sample,
                seed, !no_paraphrases);
    write_split(out_dir + "/forget.jsonl", "forget", vocab, per_class, tokens_per_sample,
                seed + 1, !no_paraphrases);
    write_split(out_dir + "/holdout.jsonl", "holdout", vocab, per_class, tokens_per_sample,
                seed + 2, !no_paraphrases);

    std::ofstream cfg(out_dir + "/config.ini", std::ios::binary);
    cfg << "# demo config: synthetic oracle, no network\n"
        << "corpus_retain = " << out_dir << "/retain.jsonl\n"
        << "corpus_forget = " << out_dir << "/forget.jsonl\n"
        << "corpus_holdout = " << out_dir << "/holdout.jsonl\n"
        << "embedding_table = " << out_dir << "/embeddings.txt\n"
        << "oracle_kind = synthetic\n"
        << "cache_path = " << out_dir << "/oracle-cache.jsonl\n"
        << "view = both\n"
        << "seed = 42\n"
        << "K = 15\n"
        << "m = 20\n"
        << "p = 0.3\n"
        << "oracle_parallelism = 4\n"
        << "output_dir = " << out_dir << "/out\n";
    std::cout << "wrote " << out_dir << "/{retain,forget,holdout}.jsonl, embeddings.txt, config.ini\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
