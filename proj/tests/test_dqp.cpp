#include <algorithm>
#include <set>
#include <random>

#include "doctest.h"
#include "qlink/dqp/dqp.hpp"

using namespace qlink;
using namespace qlink::dqp;
using net::AbsQueueId;

namespace {

// Two replicas joined by lossy channels.
struct Harness {
  des::Engine eng;
  std::mt19937_64 loss_rng{11};
  net::SimChannel ab;
  net::SimChannel ba;
  DistributedQueue master;
  DistributedQueue slave;

  explicit Harness(double p_loss = 0.0, int window = 8, std::size_t inflight = 128)
      : ab("ab", net::ChannelConfig{1.0, p_loss, 0}, eng, loss_rng, nullptr),
        ba("ba", net::ChannelConfig{1.0, p_loss, 0}, eng, loss_rng, nullptr),
        master({true, 50'000, 10, window, inflight}, eng, ab, nullptr),
        slave({false, 50'000, 10, window, inflight}, eng, ba, nullptr) {
    ab.set_receiver([&](const net::WirePacket& p) { slave.on_packet(std::get<net::DqpPacket>(p)); });
    ba.set_receiver([&](const net::WirePacket& p) { master.on_packet(std::get<net::DqpPacket>(p)); });
  }

  AddRequest req(std::uint8_t queue, std::uint16_t create_id, std::uint16_t pairs = 1) {
    AddRequest r;
    r.queue = queue;
    r.create_id = create_id;
    r.num_pairs = pairs;
    r.priority = 1;
    return r;
  }

  void settle() { eng.run_until(eng.now() + 20'000'000); }
};

}  // namespace

TEST_CASE("master add lands in both replicas with the same id") {
  Harness h;
  AddStatus status = AddStatus::Timeout;
  AbsQueueId got{};
  h.master.add(h.req(1, 100), [&](AddStatus s, AbsQueueId aid) {
    status = s;
    got = aid;
  });
  h.settle();
  CHECK(status == AddStatus::Success);
  REQUIRE(h.master.peek(got) != nullptr);
  REQUIRE(h.slave.peek(got) != nullptr);
  CHECK(h.master.peek(got)->create_id == 100);
  CHECK(h.slave.peek(got)->create_id == 100);
}

TEST_CASE("slave add receives the master-assigned sequence number") {
  Harness h;
  AbsQueueId got{};
  AddStatus status = AddStatus::Timeout;
  h.slave.add(h.req(2, 7), [&](AddStatus s, AbsQueueId aid) {
    status = s;
    got = aid;
  });
  h.settle();
  CHECK(status == AddStatus::Success);
  CHECK(h.master.peek(got) != nullptr);
  CHECK(h.slave.peek(got) != nullptr);
  CHECK(h.master.peek(got)->origin_is_master == false);
}

TEST_CASE("full queue rejects") {
  Harness h;
  int rejects = 0, successes = 0;
  for (int i = 0; i < 300; ++i) {
    h.master.add(h.req(0, static_cast<std::uint16_t>(i)), [&](AddStatus s, AbsQueueId) {
      if (s == AddStatus::Reject) ++rejects;
      if (s == AddStatus::Success) ++successes;
    });
  }
  h.settle();
  CHECK(h.master.size(0) == kQueueCapacity);
  CHECK(successes == static_cast<int>(kQueueCapacity));
  CHECK(rejects == 300 - static_cast<int>(kQueueCapacity));
}

TEST_CASE("admission policy rejection surfaces as Reject") {
  Harness h;
  h.slave.set_admission_policy([](const QueueItem& item) { return item.purpose_id != 99; });
  AddStatus status = AddStatus::Success;
  AddRequest r = h.req(0, 5);
  r.purpose_id = 99;
  h.master.add(r, [&](AddStatus s, AbsQueueId) { status = s; });
  h.settle();
  CHECK(status == AddStatus::Reject);
  CHECK(h.master.size(0) == 0);
  CHECK(h.slave.size(0) == 0);
}

TEST_CASE("lost ADD triggers retransmission and a single insertion") {
  Harness h(0.0);
  // force-drop the first transmission only
  h.ab.set_loss(1.0);
  AddStatus status = AddStatus::Reject;
  h.master.add(h.req(0, 42), [&](AddStatus s, AbsQueueId) { status = s; });
  h.eng.run_until(h.eng.now() + 10'000);  // first send dropped
  h.ab.set_loss(0.0);
  h.settle();
  CHECK(status == AddStatus::Success);
  CHECK(h.master.retransmissions() > 0);
  CHECK(h.master.size(0) == 1);
  CHECK(h.slave.size(0) == 1);
}

TEST_CASE("handshake gives up after max retries and reports orphan") {
  Harness h(1.0);  // nothing ever arrives
  AddStatus status = AddStatus::Success;
  int orphans = 0;
  h.master.set_orphan_callback([&](const QueueItem&) { ++orphans; });
  h.master.add(h.req(0, 1), [&](AddStatus s, AbsQueueId) { status = s; });
  h.eng.run_until(h.eng.now() + 5'000'000);
  CHECK(status == AddStatus::Timeout);
  CHECK(orphans == 1);
  CHECK(h.master.size(0) == 0);
}

TEST_CASE("pop_ready honors min_time, order, and timeout") {
  Harness h;
  AddRequest a = h.req(0, 1);
  a.schedule_cycle = 100;
  AddRequest b = h.req(0, 2);
  b.schedule_cycle = 10;
  b.timeout_cycle = 500;
  h.master.add(a, nullptr);
  h.master.add(b, nullptr);
  h.settle();
  // all items min_time > now: none ready
  CHECK(h.master.head_ready(0, 5) == nullptr);
  // head not ready blocks later items (total order)
  CHECK(h.master.head_ready(0, 50) == nullptr);
  const QueueItem* ready = h.master.head_ready(0, 150);
  REQUIRE(ready != nullptr);
  CHECK(ready->create_id == 1);
  // timed-out items are skipped
  h.master.remove(ready->aid);
  CHECK(h.master.head_ready(0, 600) == nullptr);
}

TEST_CASE("fairness: contending backlogs interleave in bounded blocks of queue order") {
  // a small handshake window forces a standing backlog at the master, so
  // the per-origin fairness windows govern the committed order
  Harness h(0.0, 4, 2);
  for (int i = 0; i < 40; ++i) {
    h.master.add(h.req(0, static_cast<std::uint16_t>(i)), nullptr);
    h.slave.add(h.req(0, static_cast<std::uint16_t>(100 + i)), nullptr);
  }
  h.settle();
  const auto& items = h.master.queue_items(0);
  REQUIRE(items.size() == 80);
  // skip the contention-free prefix granted before the slave's burst landed
  std::size_t skip = 4;
  int run = 0;
  bool prev = false;
  bool first = true;
  std::size_t idx = 0;
  int max_run = 0;
  for (const auto& [abs, item] : items) {
    if (idx++ < skip) continue;
    if (first || item.origin_is_master != prev) {
      run = 1;
      prev = item.origin_is_master;
      first = false;
    } else {
      ++run;
    }
    max_run = std::max(max_run, run);
  }
  CHECK(max_run <= 4);
  // both origins are represented throughout the tail
  std::size_t master_items = 0;
  for (const auto& [abs, item] : items) {
    if (item.origin_is_master) ++master_items;
  }
  CHECK(master_items == 40);
}

TEST_CASE("replicas converge under random loss") {
  std::mt19937_64 meta(5);
  for (int trial = 0; trial < 10; ++trial) {
    double p_loss = 0.05 + 0.3 * (trial / 10.0);
    Harness h(p_loss);
    int submitted = 0;
    for (int i = 0; i < 30; ++i) {
      std::uint8_t queue = static_cast<std::uint8_t>(meta() % 3);
      if (meta() % 2 == 0) {
        h.master.add(h.req(queue, static_cast<std::uint16_t>(i)), nullptr);
      } else {
        h.slave.add(h.req(queue, static_cast<std::uint16_t>(i)), nullptr);
      }
      ++submitted;
      h.eng.run_until(h.eng.now() + 100'000);
    }
    h.eng.run_until(h.eng.now() + 60'000'000);  // quiescence

    // Equal queue number, uniqueness, consistency at quiescence.
    for (int q = 0; q < 3; ++q) {
      const auto& m = h.master.queue_items(static_cast<std::uint8_t>(q));
      const auto& s = h.slave.queue_items(static_cast<std::uint8_t>(q));
      CHECK(m.size() == s.size());
      for (const auto& [abs, item] : m) {
        REQUIRE(s.count(abs) == 1);
        const QueueItem& other = s.at(abs);
        CHECK(other.aid == item.aid);
        CHECK(other.create_id == item.create_id);
        CHECK(other.origin_is_master == item.origin_is_master);
        CHECK(other.schedule_cycle == item.schedule_cycle);
      }
      // uniqueness of ids within the replica
      std::set<std::uint16_t> seen;
      for (const auto& [abs, item] : m) {
        std::uint16_t key = static_cast<std::uint16_t>((item.aid.qid << 8) | item.aid.qseq);
        CHECK(seen.insert(key).second);
      }
    }
  }
}

TEST_CASE("order property: earlier submissions get earlier ids") {
  Harness h;
  std::vector<std::uint64_t> abs_order;
  h.master.set_commit_callback([&](const QueueItem& it) {
    if (it.origin_is_master) abs_order.push_back(it.abs_seq);
  });
  for (int i = 0; i < 20; ++i) {
    h.master.add(h.req(0, static_cast<std::uint16_t>(i)), nullptr);
    h.eng.run_until(h.eng.now() + 200'000);
  }
  h.settle();
  for (std::size_t i = 1; i < abs_order.size(); ++i) {
    // (i2 - i1) mod 256 > 0 for later create times
    int diff = static_cast<int>((abs_order[i] - abs_order[i - 1]) % kSeqModulus);
    CHECK(diff > 0);
  }
}
