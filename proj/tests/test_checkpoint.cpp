#include "hrlf/checkpoint.hpp"
#include "hrlf/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace hrlf;
using namespace hrlf::checkpoint;

namespace {

ModelConfig tiny_model() {
  ModelConfig c;
  c.input_dims = {3, 2, 2};
  c.encoder.embed_dim = 4;
  c.encoder.layers = 1;
  c.encoder.heads = 2;
  c.encoder.ff_dim = 8;
  c.combine = fusion::ScaleCombine::sum;
  c.stats_hidden = 5;
  return c;
}

bool same_values(const nn::ParamList& a, const nn::ParamList& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].var.value() != b[i].var.value()) return false;
  }
  return true;
}

void flip_byte(const std::filesystem::path& file, std::size_t at) {
  auto bytes = data::read_bytes(file);
  bytes[at] ^= std::byte{0x10};
  std::ofstream(file, std::ios::binary | std::ios::trunc)
      .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("model config survives a json round trip") {
  const auto c = tiny_model();
  const auto back = parse_model_config(model_config_json(c));
  CHECK(back.input_dims == c.input_dims);
  CHECK(back.encoder.embed_dim == 4);
  CHECK(back.encoder.dropout == c.encoder.dropout);
  CHECK(back.combine == fusion::ScaleCombine::sum);
  CHECK(back.stats_hidden == 5);
  CHECK(back.task == c.task);
  CHECK(back.num_outputs == c.num_outputs);
}

TEST_CASE("networks round trip bit for bit") {
  const auto dir = test::scratch_dir("ckpt-net");
  const Network net(tiny_model(), Role::student, 4);
  save_network(net, dir);
  const Network back = load_network(dir);
  CHECK(back.role() == Role::student);
  CHECK(same_values(net.parameters(), back.parameters()));
}

TEST_CASE("student bundles round trip") {
  const auto root = test::scratch_dir("ckpt-bundle");
  const Network student(tiny_model(), Role::student, 5);
  Rng rng(6);
  const hmi::StatisticsNets stats(4, 5, rng);
  const hal::ScaleDiscriminators discs(4, rng);
  save_student(student, stats, discs, root);
  const auto back = load_student(root);
  CHECK(same_values(student.parameters(), back.student.parameters()));
  nn::ParamList a;
  nn::ParamList b;
  stats.collect(a, "stats");
  back.stats.collect(b, "stats");
  CHECK(same_values(a, b));
  a.clear();
  b.clear();
  discs.collect(a, "discs");
  back.discs.collect(b, "discs");
  CHECK(same_values(a, b));
}

TEST_CASE("a corrupted tensor raises ChecksumError") {
  const auto dir = test::scratch_dir("ckpt-corrupt");
  const Network net(tiny_model(), Role::teacher, 1);
  save_network(net, dir);
  flip_byte(dir / "head.weight.f64", 3);
  CHECK_THROWS_AS(load_network(dir), ChecksumError);
}

TEST_CASE("loading into a different structure raises ShapeError") {
  const auto dir = test::scratch_dir("ckpt-shape");
  const Network net(tiny_model(), Role::teacher, 1);
  save_params(net.parameters(), dir);
  auto other = tiny_model();
  other.input_dims[0] = 5;
  const Network wrong(other, Role::teacher, 1);
  CHECK_THROWS_AS(load_params(wrong.parameters(), dir), ShapeError);
  nn::ParamList fewer = net.parameters();
  fewer.pop_back();
  CHECK_THROWS_AS(load_params(fewer, dir), ShapeError);
}

TEST_CASE("missing checkpoints raise IoError") {
  const auto dir = test::scratch_dir("ckpt-missing");
  CHECK_THROWS_AS(load_network(dir), IoError);
}
