#include <cmath>

#include "doctest.h"
#include "qlink/net/channel.hpp"

using namespace qlink;
using namespace qlink::net;

TEST_CASE("propagation delay follows fiber light speed") {
  // 15 km arm: 72.55 us
  CHECK(propagation_delay_ns(15.0) == 72550);
  CHECK(std::abs(propagation_delay_ns(15.0) - 72600) < 100);  // paper quotes 72.6 us
  CHECK(propagation_delay_ns(10.0) == 48367);  // 48.4 us
  CHECK(propagation_delay_ns(0.0) == 0);
}

TEST_CASE("lossless channel delivers everything after exactly the delay") {
  des::Engine eng;
  std::mt19937_64 rng(1);
  SimChannel ch("c", ChannelConfig{15.0, 0.0, 0}, eng, rng, nullptr);
  int delivered = 0;
  des::SimTime when = -1;
  ch.set_receiver([&](const WirePacket&) {
    ++delivered;
    when = eng.now();
  });
  GenPacket p;
  p.aid = AbsQueueId{1, 2};
  ch.send(p);
  eng.run_until(100'000);
  CHECK(delivered == 1);
  CHECK(when == 72550);
}

TEST_CASE("messages on one channel deliver in send order") {
  des::Engine eng;
  std::mt19937_64 rng(1);
  SimChannel ch("c", ChannelConfig{1.0, 0.0, 0}, eng, rng, nullptr);
  std::vector<std::uint8_t> order;
  ch.set_receiver([&](const WirePacket& p) { order.push_back(std::get<GenPacket>(p).aid.qseq); });
  for (std::uint8_t i = 0; i < 50; ++i) {
    GenPacket p;
    p.aid = AbsQueueId{0, i};
    ch.send(p);
  }
  eng.run_until(10'000'000);
  for (std::uint8_t i = 0; i < 50; ++i) CHECK(order[i] == i);
}

TEST_CASE("loss is Bernoulli at the configured rate") {
  des::Engine eng;
  std::mt19937_64 rng(7);
  SimChannel ch("c", ChannelConfig{0.001, 0.5, 0}, eng, rng, nullptr);
  int delivered = 0;
  ch.set_receiver([&](const WirePacket&) { ++delivered; });
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    GenPacket p;
    ch.send(p);
    eng.run_until(eng.now() + 10);
  }
  eng.run_until(eng.now() + 100000);
  CHECK(ch.dropped() + delivered == static_cast<std::uint64_t>(n));
  double sigma = std::sqrt(n * 0.25);
  CHECK(std::abs(delivered - n * 0.5) < 4 * sigma);
}

TEST_CASE("trace records send, deliver, drop dispositions") {
  des::Engine eng;
  std::mt19937_64 rng(3);
  des::TraceLog trace(true);
  SimChannel ch("wire", ChannelConfig{0.0, 0.0, 5}, eng, rng, &trace);
  ch.set_receiver([](const WirePacket&) {});
  GenPacket p;
  ch.send(p);
  eng.run_until(100);
  CHECK(trace.rows() == 2);
  CHECK(trace.text().find("wire,GEN,send") != std::string::npos);
  CHECK(trace.text().find("wire,GEN,deliver") != std::string::npos);
}

TEST_CASE("channel config validation") {
  CHECK_THROWS_AS(ChannelConfig({-1.0, 0.0, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ChannelConfig({1.0, 1.5, 0}).validate(), std::invalid_argument);
}
