#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "t2s/beam_search.hpp"
#include "t2s/checkpoint.hpp"
#include "t2s/toy.hpp"

using namespace t2s;

namespace {

struct Fixture {
  Vocab vocab;
  std::vector<SentencePair> train, dev;
  Checkpoint ckpt;

  Fixture() {
    const auto tr = generate_toy_corpus(60, 10, ToyTask::kReverse, 5);
    const auto dv = generate_toy_corpus(12, 10, ToyTask::kReverse, 6);
    vocab = build_vocab(tr.source, 1);
    train = encode_pairs(tr.pairs(), vocab, vocab);
    dev = encode_pairs(dv.pairs(), vocab, vocab);

    TrainConfig c;
    c.embed = c.hidden = 12;
    c.negatives = 4;
    c.batch_size = 8;
    c.max_epochs = 2;
    Rng rng(c.seed);
    Trainer<float> t(c,
                     init_params<float>({vocab.size(), vocab.size(), 12, 12},
                                        c.init_range, rng),
                     UnigramSampler(unigram_counts(train, vocab.size()), c.beta));
    t.run_training(train, dev);
    ckpt.params = t.params();
    ckpt.config = c;
    ckpt.source_vocab = ckpt.target_vocab = vocab;
    ckpt.unigram_counts = unigram_counts(train, vocab.size());
    ckpt.epoch = t.epoch();
    ckpt.learning_rate = t.schedule().rate();
    ckpt.previous_dev_loss = t.schedule().previous();
    std::ostringstream os;
    os << t.shuffle_rng();
    ckpt.rng_state = os.str();
  }
};

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("t2s_test_" + name);
}

}  // namespace

TEST_CASE("checkpoint round trip") {
  Fixture f;
  const auto path = temp_path("a.ckpt"), again = temp_path("b.ckpt");
  save_checkpoint(f.ckpt, path);
  const Checkpoint loaded = load_checkpoint(path);
  save_checkpoint(loaded, again);

  std::ifstream a(path, std::ios::binary), b(again, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  CHECK(bytes_a == bytes_b);

  CHECK(loaded.params == f.ckpt.params);
  CHECK(loaded.config == f.ckpt.config);
  CHECK(loaded.source_vocab == f.vocab);
  CHECK(loaded.unigram_counts == f.ckpt.unigram_counts);
  CHECK(loaded.epoch == 2);
  CHECK(loaded.learning_rate == f.ckpt.learning_rate);
  CHECK(loaded.previous_dev_loss == f.ckpt.previous_dev_loss);
  CHECK(loaded.rng_state == f.ckpt.rng_state);

  const auto before = evaluate_dev(f.ckpt.params, f.dev, EncoderKind::kTree);
  const auto after = evaluate_dev(loaded.params, f.dev, EncoderKind::kTree);
  CHECK(before.mean_loss == after.mean_loss);

  BeamOptions o;
  o.width = 4;
  o.max_length = 20;
  const auto t1 = translate_corpus<float>(f.dev, f.ckpt.params, EncoderKind::kTree, o);
  const auto t2 = translate_corpus<float>(f.dev, loaded.params, EncoderKind::kTree, o);
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].tokens == t2[i].tokens);
    CHECK(t1[i].score == t2[i].score);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(again);
}

TEST_CASE("checkpoint corruption is detected") {
  Fixture f;
  const std::string good = serialize_checkpoint(f.ckpt);
  CHECK_NOTHROW(deserialize_checkpoint(good));

  std::string bad = good;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad), doctest::Contains("magic"),
                       CheckpointError);

  bad = good;
  bad[8] = static_cast<char>(kCheckpointVersion + 1);
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad), doctest::Contains("version"),
                       CheckpointError);

  CHECK_THROWS_WITH_AS(deserialize_checkpoint(good.substr(0, good.size() - 3)),
                       doctest::Contains("truncated"), CheckpointError);
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(good.substr(0, 14)),
                       doctest::Contains("truncated"), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(good + "x"), CheckpointError);

  bad = good;
  bad[20] = '}';  // inside the JSON header
  CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);

  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), CheckpointError);
}
