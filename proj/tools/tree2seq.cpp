// tree2seq: command-line front end (data preparation, training, decoding,
// scoring, gradient checking and attention inspection).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "t2s/beam_search.hpp"
#include "t2s/bleu.hpp"
#include "t2s/checkpoint.hpp"
#include "t2s/config.hpp"
#include "t2s/corpus.hpp"
#include "t2s/grad_check.hpp"
#include "t2s/length_model.hpp"
#include "t2s/toy.hpp"
#include "t2s/trainer.hpp"

namespace fs = std::filesystem;
using namespace t2s;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// PREFIX.src / PREFIX.tgt / PREFIX.tree (the tree file is optional).
CorpusFiles prefix_files(const std::string& prefix, bool need_target) {
  CorpusFiles f{prefix + ".src", prefix + ".tgt", prefix + ".tree"};
  if (!fs::exists(f.source)) throw UsageError("missing file " + f.source.string());
  if (!need_target) f.target.clear();
  else if (!fs::exists(f.target)) throw UsageError("missing file " + f.target.string());
  if (!fs::exists(f.trees)) f.trees.clear();
  return f;
}

void write_corpus(const std::string& prefix, std::span<const TextPair> pairs,
                  bool with_trees) {
  std::vector<std::string> src, tgt, trees;
  for (const auto& p : pairs) {
    src.push_back(join_tokens(p.source));
    tgt.push_back(join_tokens(p.target));
    trees.push_back(p.tree ? p.tree->to_sexpr(p.source) : std::string(kNoParse));
  }
  write_lines(prefix + ".src", src);
  write_lines(prefix + ".tgt", tgt);
  if (with_trees) write_lines(prefix + ".tree", trees);
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) throw CheckpointError("corrupt shuffle rng state in checkpoint");
  return rng;
}

// ---- gen-toy ---------------------------------------------------------------

struct GenToyArgs {
  std::string task = "copy";
  std::size_t size = 2000;
  std::size_t vocab = 50;
  std::uint64_t seed = 1;
  std::string out;
};

int run_gen_toy(const GenToyArgs& a) {
  const auto corpus = generate_toy_corpus(a.size, a.vocab, parse_toy_task(a.task), a.seed);
  write_corpus(a.out, corpus.pairs(), true);
  std::cout << "wrote " << corpus.source.size() << " " << a.task << " pairs to "
            << a.out << ".{src,tgt,tree}\n";
  return 0;
}

// ---- build-vocab -----------------------------------------------------------

struct BuildVocabArgs {
  std::vector<std::string> inputs;
  std::size_t min_count = 2;
  std::string out;
};

int run_build_vocab(const BuildVocabArgs& a) {
  std::vector<Sentence> corpus;
  for (const auto& path : a.inputs) {
    for (const auto& line : read_lines(path)) corpus.push_back(split_tokens(line));
  }
  const Vocab v = build_vocab(corpus, a.min_count);
  v.save(a.out);
  std::cout << "vocabulary of " << v.size() << " types (min count " << a.min_count
            << ") written to " << a.out << "\n";
  return 0;
}

// ---- prepare ---------------------------------------------------------------

struct PrepareArgs {
  std::string src, tgt, trees, out;
  std::size_t max_length = 50;
  bool keep_unparsed = false;
  bool left_binarize = false;
  std::size_t length_cap = std::numeric_limits<std::size_t>::max();
};

int run_prepare(const PrepareArgs& a) {
  CorpusFiles files{a.src, a.tgt, a.trees};
  const auto pairs = load_corpus(files, TreeParseOptions{a.left_binarize});
  FilterStats stats;
  const auto kept = filter_pairs(pairs, FilterOptions{a.max_length, !a.keep_unparsed}, &stats);
  write_corpus(a.out, kept, !a.trees.empty());
  std::vector<std::pair<std::size_t, std::size_t>> lengths;
  for (const auto& p : kept) lengths.emplace_back(p.source.size(), p.target.size());
  LengthModel::estimate_from_lengths(lengths, a.length_cap).save(a.out + ".len");
  std::cout << "read " << pairs.size() << " pairs: kept " << stats.kept << ", too long "
            << stats.too_long << ", unparsed " << stats.unparsed << ", empty "
            << stats.empty << "\n"
            << "wrote " << a.out << ".{src,tgt" << (a.trees.empty() ? "" : ",tree")
            << ",len}\n";
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;  // TrainConfig overrides
  std::string train, dev, source_vocab, target_vocab, checkpoint, log, resume;
};

int run_train(TrainArgs a) {
  TrainConfig config;
  std::map<std::string, std::string> paths;
  const std::vector<std::string> path_keys{"train", "dev", "source_vocab",
                                           "target_vocab", "checkpoint", "log"};
  auto apply = [&](const std::string& key, const std::string& value) {
    if (apply_config_value(config, key, value)) return;
    if (std::find(path_keys.begin(), path_keys.end(), key) != path_keys.end()) {
      paths[key] = value;
      return;
    }
    throw UsageError("unknown config key '" + key + "'");
  };
  if (!a.config_file.empty()) {
    for (const auto& [k, v] : read_key_values(a.config_file)) apply(k, v);
  }
  for (const auto& [k, v] : a.flags) apply(k, v);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    apply(kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto path = [&](const std::string& flag, const std::string& key) {
    return flag.empty() ? (paths.count(key) ? paths[key] : std::string()) : flag;
  };
  a.train = path(a.train, "train");
  a.dev = path(a.dev, "dev");
  a.source_vocab = path(a.source_vocab, "source_vocab");
  a.target_vocab = path(a.target_vocab, "target_vocab");
  a.checkpoint = path(a.checkpoint, "checkpoint");
  a.log = path(a.log, "log");
  if (a.train.empty()) throw UsageError("train: --train PREFIX is required");
  if (a.checkpoint.empty()) throw UsageError("train: --checkpoint PATH is required");

  std::optional<Checkpoint> resumed;
  if (!a.resume.empty()) {
    resumed = load_checkpoint(a.resume);
    const std::size_t max_epochs = config.max_epochs;
    config = resumed->config;
    if (a.flags.count("max_epochs")) config.max_epochs = max_epochs;
  }
  config.validate();

  const CorpusFiles train_files = prefix_files(a.train, true);
  const bool uses_trees =
      !train_files.trees.empty() && config.encoder != EncoderKind::kSequential;
  const auto train_text =
      filter_pairs(load_corpus(train_files), FilterOptions{50, uses_trees});
  if (train_text.empty()) throw std::runtime_error("no training pairs left after filtering");
  std::vector<TextPair> dev_text;
  if (!a.dev.empty()) {
    dev_text = filter_pairs(load_corpus(prefix_files(a.dev, true)),
                            FilterOptions{50, false});
  }

  Vocab src_vocab, tgt_vocab;
  if (resumed) {
    src_vocab = resumed->source_vocab;
    tgt_vocab = resumed->target_vocab;
  } else {
    std::vector<Sentence> src_side, tgt_side;
    for (const auto& p : train_text) {
      src_side.push_back(p.source);
      tgt_side.push_back(p.target);
    }
    src_vocab = a.source_vocab.empty() ? build_vocab(src_side, config.min_count)
                                       : Vocab::load(a.source_vocab);
    tgt_vocab = a.target_vocab.empty() ? build_vocab(tgt_side, config.min_count)
                                       : Vocab::load(a.target_vocab);
  }
  const EncodeOptions enc_options{config.reverse_source};
  const auto train = encode_pairs(train_text, src_vocab, tgt_vocab, enc_options);
  const auto dev = encode_pairs(dev_text, src_vocab, tgt_vocab, enc_options);

  const auto counts = resumed ? resumed->unigram_counts
                              : unigram_counts(train, tgt_vocab.size());
  const ModelDims dims{src_vocab.size(), tgt_vocab.size(), config.embed, config.hidden};
  Rng init_rng(config.seed);
  ModelParams<float> params = resumed ? resumed->params
                                      : init_params<float>(dims, config.init_range, init_rng);
  Trainer<float> trainer(config, std::move(params), UnigramSampler(counts, config.beta));
  if (resumed) {
    trainer.set_epoch(resumed->epoch);
    trainer.set_schedule(LearningRateSchedule(resumed->learning_rate,
                                              resumed->previous_dev_loss));
    trainer.set_shuffle_rng(rng_from_state(resumed->rng_state));
  }

  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log, resumed ? std::ios::app : std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write log " + a.log);
  }
  std::cout << "training on " << train.size() << " pairs (dev " << dev.size()
            << "), vocab " << src_vocab.size() << "/" << tgt_vocab.size() << ", "
            << to_string(config.loss) << ", encoder " << to_string(config.encoder) << "\n";

  trainer.run_training(train, dev, [&](const EpochRecord& r, const Trainer<float>& t) {
    std::ostringstream line;
    line << std::fixed << std::setprecision(4) << "epoch " << r.epoch << "\ttrain_loss "
         << r.train_loss << "\tdev_loss " << r.dev_loss << "\tlr " << r.learning_rate
         << "\ttime " << std::setprecision(1) << r.seconds << "s"
         << (r.halved ? "\tlr_halved" : "");
    std::cout << line.str() << std::endl;
    if (log) log << line.str() << std::endl;
    Checkpoint ckpt;
    ckpt.params = t.params();
    ckpt.config = t.config();
    ckpt.source_vocab = src_vocab;
    ckpt.target_vocab = tgt_vocab;
    ckpt.unigram_counts = counts;
    ckpt.epoch = t.epoch();
    ckpt.learning_rate = t.schedule().rate();
    ckpt.previous_dev_loss = t.schedule().previous();
    ckpt.rng_state = rng_state(t.shuffle_rng());
    save_checkpoint(ckpt, a.checkpoint);
    return true;
  });
  std::cout << "checkpoint: " << a.checkpoint << "\n";
  return 0;
}

// ---- translate / inspect-attention -----------------------------------------

struct TranslateArgs {
  std::string checkpoint, src, trees, out, length_model, attention_dump;
  std::size_t beam = 20;
  std::string scoring = "simple";
  std::size_t max_length = 100;
  bool left_binarize = false;
};

std::vector<std::string> candidate_labels(const SentencePair& p, EncoderKind kind) {
  std::vector<std::string> labels;
  const std::size_t n = p.source_length();
  for (std::size_t k = 0; k <= n; ++k) {
    labels.push_back("[" + std::to_string(k) + "," + std::to_string(k + 1) + ")");
  }
  if (p.tree && kind != EncoderKind::kSequential) {
    for (const auto& node : p.tree->phrases()) {
      labels.push_back("[" + std::to_string(node.begin) + "," + std::to_string(node.end) + ")");
    }
  }
  return labels;
}

void write_attention(std::ostream& os, std::size_t index, const SentencePair& p,
                     const Sentence& source, const Translation& t, const Vocab& tgt_vocab,
                     EncoderKind kind) {
  const auto labels = candidate_labels(p, kind);
  os << "# sentence " << index << "\tcandidates " << labels.size() << "\t"
     << join_tokens(source) << "\n";
  for (std::size_t step = 0; step < t.attention.size(); ++step) {
    const std::string token =
        step < t.tokens.size() ? tgt_vocab.token(t.tokens[step]) : std::string(Vocab::kEosToken);
    os << step << "\t" << token;
    for (std::size_t k = 0; k < t.attention[step].size(); ++k) {
      os << "\t" << labels.at(k) << ":" << std::fixed << std::setprecision(6)
         << t.attention[step][k];
    }
    os << "\n";
  }
}

int run_translate(const TranslateArgs& a, bool inspect) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  std::optional<LengthModel> lm;
  if (a.scoring == "proposed") {
    if (a.length_model.empty()) throw UsageError("--scoring proposed needs --length-model");
    lm = LengthModel::load(a.length_model);
  } else if (a.scoring != "simple") {
    throw UsageError("--scoring must be simple or proposed");
  }
  const auto text = load_corpus(CorpusFiles{a.src, {}, a.trees},
                                TreeParseOptions{a.left_binarize});
  const auto pairs = encode_pairs(text, ckpt.source_vocab, ckpt.target_vocab,
                                  EncodeOptions{ckpt.config.reverse_source});
  const std::string dump_path = inspect ? a.out : a.attention_dump;
  BeamOptions options;
  options.width = a.beam;
  options.max_length = a.max_length;
  options.length_model = lm ? &*lm : nullptr;
  options.record_attention = !dump_path.empty();
  const auto translations =
      translate_corpus<float>(pairs, ckpt.params, ckpt.config.encoder, options);

  std::size_t unterminated = 0, fallback = 0;
  for (const auto& p : pairs) fallback += p.tree ? 0 : 1;
  std::vector<std::string> lines;
  for (const auto& t : translations) {
    if (!t.terminated) ++unterminated;
    lines.push_back(join_tokens(decode_sentence(t.tokens, ckpt.target_vocab)));
  }
  if (!inspect) write_lines(a.out, lines);
  if (!dump_path.empty()) {
    std::ofstream os(dump_path);
    if (!os) throw std::runtime_error("cannot write " + dump_path);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      write_attention(os, i, pairs[i], text[i].source, translations[i],
                      ckpt.target_vocab, ckpt.config.encoder);
    }
  }
  std::cerr << "translated " << pairs.size() << " sentences (beam " << a.beam << ", "
            << a.scoring << "); fallback encodings " << fallback << "; unterminated "
            << unterminated << "\n";
  for (std::size_t i = 0; i < translations.size(); ++i) {
    if (!translations[i].terminated) {
      std::cerr << "  sentence " << i << " hit the " << a.max_length << "-token cap\n";
    }
  }
  return 0;
}

// ---- score-bleu --------------------------------------------------------------

int run_score_bleu(const std::string& hyp, const std::string& ref) {
  std::vector<Sentence> h, r;
  for (const auto& l : read_lines(hyp)) h.push_back(split_tokens(l));
  for (const auto& l : read_lines(ref)) r.push_back(split_tokens(l));
  const BleuReport b = bleu(h, r);
  std::cout << std::fixed << std::setprecision(2) << "BLEU = " << b.bleu << " ("
            << std::setprecision(4) << b.precisions[0] << "/" << b.precisions[1] << "/"
            << b.precisions[2] << "/" << b.precisions[3] << ") BP = " << b.brevity_penalty
            << " hyp_len = " << b.hypothesis_length << " ref_len = " << b.reference_length;
  if (b.zero_precision_order) std::cout << " (zero " << *b.zero_precision_order << "-gram precision)";
  std::cout << "\n";
  return 0;
}

// ---- grad-check --------------------------------------------------------------

int run_grad_check(const PipelineCheck& base) {
  constexpr double kThreshold = 1e-4;
  bool ok = true;
  for (bool tree : {true, false}) {
    for (LossMode mode : {LossMode::kBlackOut, LossMode::kSoftmax}) {
      PipelineCheck c = base;
      c.with_tree = tree;
      c.loss = mode;
      const auto r = pipeline_gradient_check(c);
      const bool pass = r.max_relative_error < kThreshold;
      ok = ok && pass;
      std::cout << (pass ? "PASS" : "FAIL") << "\t" << (tree ? "tree" : "fallback") << "\t"
                << to_string(mode) << "\tmax_rel_err " << std::scientific
                << std::setprecision(3) << r.max_relative_error << "\tat " << r.worst_entry
                << "\t(" << r.checked << " scalars)\n";
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree2seq: tree-to-sequence attentional translation"};
  app.require_subcommand(1);

  GenToyArgs toy;
  auto* gen = app.add_subcommand("gen-toy", "generate a synthetic parallel corpus with trees");
  gen->add_option("--task", toy.task, "copy | reverse | bracket-sensitive")->capture_default_str();
  gen->add_option("--size", toy.size, "number of pairs")->capture_default_str();
  gen->add_option("--vocab", toy.vocab, "number of word types")->capture_default_str();
  gen->add_option("--seed", toy.seed)->capture_default_str();
  gen->add_option("--out", toy.out, "output prefix")->required();

  BuildVocabArgs bv;
  auto* vocab = app.add_subcommand("build-vocab", "count tokens and write a vocabulary");
  vocab->add_option("--input", bv.inputs, "tokenized text file(s)")
      ->required()
      ->check(CLI::ExistingFile);
  vocab->add_option("--min-count", bv.min_count)->capture_default_str();
  vocab->add_option("--out", bv.out)->required();

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "filter a corpus and estimate the length model");
  prepare->add_option("--src", prep.src)->required()->check(CLI::ExistingFile);
  prepare->add_option("--tgt", prep.tgt)->required()->check(CLI::ExistingFile);
  prepare->add_option("--trees", prep.trees, "bracketed source trees")->check(CLI::ExistingFile);
  prepare->add_option("--out", prep.out, "output prefix")->required();
  prepare->add_option("--max-length", prep.max_length)->capture_default_str();
  prepare->add_option("--length-cap", prep.length_cap, "pairs used for the length model");
  prepare->add_flag("--keep-unparsed", prep.keep_unparsed);
  prepare->add_flag("--left-binarize", prep.left_binarize);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train a model and write checkpoints");
  train->add_option("--config", tr.config_file, "key=value file")->check(CLI::ExistingFile);
  train->add_option("--set", tr.sets, "override any config key (key=value)");
  train->add_option("--train", tr.train, "training corpus prefix");
  train->add_option("--dev", tr.dev, "dev corpus prefix");
  train->add_option("--source-vocab", tr.source_vocab)->check(CLI::ExistingFile);
  train->add_option("--target-vocab", tr.target_vocab)->check(CLI::ExistingFile);
  train->add_option("--checkpoint", tr.checkpoint, "checkpoint written after every epoch");
  train->add_option("--log", tr.log, "training log");
  train->add_option("--resume", tr.resume)->check(CLI::ExistingFile);
  const std::vector<std::pair<std::string, std::string>> overrides{
      {"--embed", "embed"},         {"--hidden", "hidden"},     {"--negatives", "negatives"},
      {"--beta", "beta"},           {"--batch-size", "batch_size"},
      {"--lr", "learning_rate"},    {"--clip", "clip"},         {"--epochs", "max_epochs"},
      {"--seed", "seed"},           {"--loss", "loss"},         {"--encoder", "encoder"},
      {"--min-count", "min_count"}, {"--init-range", "init_range"}};
  std::map<std::string, std::string> override_values;
  for (const auto& [flag, key] : overrides) {
    train->add_option(flag, override_values[key], "config key " + key);
  }

  TranslateArgs tl;
  auto* translate = app.add_subcommand("translate", "beam-search decode a source file");
  TranslateArgs ia;
  auto* inspect = app.add_subcommand("inspect-attention", "dump per-step attention weights");
  for (auto [cmd, args] : {std::pair{translate, &tl}, std::pair{inspect, &ia}}) {
    cmd->add_option("--checkpoint", args->checkpoint)->required()->check(CLI::ExistingFile);
    cmd->add_option("--src", args->src)->required()->check(CLI::ExistingFile);
    cmd->add_option("--trees", args->trees, "bracketed source trees")->check(CLI::ExistingFile);
    cmd->add_option("--out", args->out)->required();
    cmd->add_option("--beam", args->beam)->capture_default_str();
    cmd->add_option("--scoring", args->scoring, "simple | proposed")->capture_default_str();
    cmd->add_option("--length-model", args->length_model)->check(CLI::ExistingFile);
    cmd->add_option("--max-length", args->max_length)->capture_default_str();
    cmd->add_flag("--left-binarize", args->left_binarize);
  }
  translate->add_option("--attention-dump", tl.attention_dump);

  std::string hyp, ref;
  auto* score = app.add_subcommand("score-bleu", "corpus BLEU of hypotheses against references");
  score->add_option("--hyp", hyp)->required()->check(CLI::ExistingFile);
  score->add_option("--ref", ref)->required()->check(CLI::ExistingFile);

  PipelineCheck gc;
  auto* grad = app.add_subcommand("grad-check", "finite-difference check of the full model");
  grad->add_option("--seed", gc.seed)->capture_default_str();
  grad->add_option("--eps", gc.eps)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  CLI::App* used = app.get_subcommands().front();
  try {
    if (used == gen) return run_gen_toy(toy);
    if (used == vocab) return run_build_vocab(bv);
    if (used == prepare) return run_prepare(prep);
    if (used == train) {
      for (const auto& [key, value] : override_values) {
        if (!value.empty()) tr.flags[key] = value;
      }
      return run_train(tr);
    }
    if (used == translate) return run_translate(tl, false);
    if (used == inspect) return run_translate(ia, true);
    if (used == score) return run_score_bleu(hyp, ref);
    if (used == grad) return run_grad_check(gc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << used->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
