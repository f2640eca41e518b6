#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "bsf/core/error.hpp"
#include "bsf/net/checkpoint.hpp"
#include "oracles.hpp"

using namespace bsf;
using namespace bsf::net;

namespace {

Network sample_network() {
  Network net({2, 12});
  net.conv1d(2, 3, 5, 2).relu().gate(filter::GroupMap::per_channel(3, 6), 0.3, 0.01);
  net.flatten().gate(filter::GroupMap::identity(18), 0.25, 0.5).dense(18, 4).relu().dense(4, 3);
  net.init(123);
  RngStream rng(5);
  for (std::size_t g : net.gate_indices())
    for (double& p : net.gate_at(g).p) p = rng.uniform();
  net.gate_at(2).estimator = filter::GradientEstimator::plain;
  net.gate_at(2).mask_mode = filter::MaskMode::per_sample;
  net.gate_at(4).trainable = false;
  auto& d = std::get<Dense>(net.layers()[5]);
  d.weight[0] = std::numeric_limits<double>::denorm_min();
  d.weight[1] = -0.0;
  d.weight[2] = 1e308;
  d.bias[0] = 1.0 / 3.0;
  return net;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  const Network net = sample_network();
  const Network back = from_checkpoint_string(to_checkpoint_string(net));
  CHECK(back == net);
  CHECK(back.mode() == Mode::infer);
  CHECK(std::signbit(std::get<Dense>(back.layers()[5]).weight[1]));
  CHECK(to_checkpoint_string(back) == to_checkpoint_string(net));
  RngStream rng(2);
  const Tensor x = oracle::random_tensor({5, 2, 12}, rng);
  CHECK(back.predict(x) == net.predict(x));
}

TEST_CASE("checkpoint files") {
  const auto path = std::filesystem::temp_directory_path() / "bsf_checkpoint_test.txt";
  const Network net = sample_network();
  save_checkpoint(net, path);
  CHECK(load_checkpoint(path) == net);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), InputError);
}

TEST_CASE("malformed checkpoints are rejected") {
  const std::string good = to_checkpoint_string(sample_network());
  CHECK_THROWS_AS(from_checkpoint_string(""), InputError);
  CHECK_THROWS_AS(from_checkpoint_string("bsfnet 99\n"), InputError);
  CHECK_THROWS_AS(from_checkpoint_string(good.substr(0, good.size() / 2)), InputError);
  std::string unknown = good;
  unknown.replace(unknown.find("relu"), 4, "tanh");
  CHECK_THROWS_AS(from_checkpoint_string(unknown), InputError);
}
