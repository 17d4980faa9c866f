#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "kgalign/checkpoint.hpp"
#include "kgalign/encoder.hpp"

using kgalign::Checkpoint;
using kgalign::EncoderParams;
using kgalign::Rng;

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* tag) {
  static int counter = 0;
  return fs::temp_directory_path() / ("kgalign_ckpt_" + std::to_string(::getpid()) + "_" +
                                      std::to_string(counter++) + "_" + tag + ".bin");
}

}  // namespace

TEST_CASE("checkpoint round trip preserves tensors, config, rng states, epoch") {
  Rng rng(1);
  auto params = EncoderParams<double>::init(10, 4, 6, 3, 5, 2, rng);

  Checkpoint ckpt;
  ckpt.precision_bytes = 8;
  ckpt.config_text = "seed = 7\ntrain.lr = 0.001\n";
  ckpt.rng_states = {{"init", "123 456"}, {"dropout", "789"}};
  ckpt.epoch = 42;
  pack_params(params, ckpt);

  const auto file = temp_file("roundtrip");
  save_checkpoint(file, ckpt);
  auto loaded = kgalign::load_checkpoint(file);

  CHECK(loaded.precision_bytes == 8);
  CHECK(loaded.config_text == ckpt.config_text);
  CHECK(loaded.rng_states == ckpt.rng_states);
  CHECK(loaded.epoch == 42);
  REQUIRE(loaded.tensors.size() == ckpt.tensors.size());

  Rng rng2(99);
  auto restored = EncoderParams<double>::init(10, 4, 6, 3, 5, 2, rng2);
  unpack_params(loaded, restored);
  CHECK(restored.entity_embeddings.values() == params.entity_embeddings.values());
  CHECK(restored.projection.bias.values() == params.projection.bias.values());
  fs::remove(file);
}

TEST_CASE("32-bit checkpoints quantize to float") {
  Rng rng(2);
  auto params = EncoderParams<float>::init(4, 2, 3, 2, 2, 1, rng);
  Checkpoint ckpt;
  ckpt.precision_bytes = 4;
  pack_params(params, ckpt);
  const auto file = temp_file("f32");
  save_checkpoint(file, ckpt);
  auto loaded = kgalign::load_checkpoint(file);
  // float-precision values survive the f32 container exactly
  for (std::size_t t = 0; t < ckpt.tensors.size(); ++t) {
    for (std::size_t i = 0; i < ckpt.tensors[t].data.size(); ++i) {
      CHECK(static_cast<float>(loaded.tensors[t].data[i]) ==
            static_cast<float>(ckpt.tensors[t].data[i]));
    }
  }
  fs::remove(file);
}

TEST_CASE("bad magic and shape mismatches raise versioned-checkpoint errors") {
  const auto file = temp_file("badmagic");
  {
    std::ofstream out(file, std::ios::binary);
    out << "NOTACKPT garbage";
  }
  CHECK_THROWS_AS(kgalign::load_checkpoint(file), kgalign::DataError);
  fs::remove(file);

  Rng rng(3);
  auto small = EncoderParams<double>::init(4, 2, 3, 2, 2, 1, rng);
  Checkpoint ckpt;
  ckpt.precision_bytes = 8;
  pack_params(small, ckpt);
  const auto file2 = temp_file("shape");
  save_checkpoint(file2, ckpt);
  auto loaded = kgalign::load_checkpoint(file2);

  Rng rng2(4);
  auto bigger = EncoderParams<double>::init(9, 2, 3, 2, 2, 1, rng2);
  CHECK_THROWS_AS(unpack_params(loaded, bigger), kgalign::DataError);

  // a missing tensor is also an error
  loaded.tensors.pop_back();
  auto same = EncoderParams<double>::init(4, 2, 3, 2, 2, 1, rng2);
  CHECK_THROWS_AS(unpack_params(loaded, same), kgalign::DataError);
  fs::remove(file2);
}

TEST_CASE("truncated checkpoint files are rejected") {
  Rng rng(5);
  auto params = EncoderParams<double>::init(4, 2, 3, 2, 2, 1, rng);
  Checkpoint ckpt;
  ckpt.precision_bytes = 8;
  pack_params(params, ckpt);
  const auto file = temp_file("trunc");
  save_checkpoint(file, ckpt);

  const auto size = fs::file_size(file);
  fs::resize_file(file, size / 2);
  CHECK_THROWS_AS(kgalign::load_checkpoint(file), kgalign::DataError);
  fs::remove(file);
}
