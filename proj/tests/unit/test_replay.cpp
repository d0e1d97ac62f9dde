#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "doctest.h"
#include "super/errors.hpp"
#include "super/prioritized_buffer.hpp"
#include "super/sum_tree.hpp"
#include "support/test_support.hpp"

using namespace super;
using super::testing::make_experience;

namespace {

Experience tagged(int tag) { return make_experience(2, 0, static_cast<float>(tag), false, static_cast<float>(tag)); }

int tag_of(const Experience& e) { return static_cast<int>(e.reward); }

// Buffer holding four experiences whose sampling probabilities are 0.1..0.4.
PrioritizedBuffer four_leaf_buffer() {
  PrioritizedBuffer buf({16, 1.0, 1e-9});
  std::vector<SlotId> slots;
  for (int i = 0; i < 4; ++i) slots.push_back(buf.insert(tagged(i)));
  const std::vector<double> td{0.1, 0.2, 0.3, 0.4};
  buf.update_priorities(slots, td);
  return buf;
}

}  // namespace

TEST_CASE("sum tree prefix descent enumerates every leaf interval") {
  const std::vector<double> leaves{0.5, 0.0, 1.5, 0.0, 0.0, 2.0, 0.25};
  SumTree tree(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) tree.set(i, leaves[i]);
  CHECK(tree.padded_capacity() == 8);
  CHECK(tree.total() == doctest::Approx(4.25));
  double before = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i] > 0) {
      CHECK(tree.find_prefix(before) == i);
      CHECK(tree.find_prefix(before + 0.5 * leaves[i]) == i);
      CHECK(tree.find_prefix(std::nextafter(before + leaves[i], 0.0)) == i);
    }
    before += leaves[i];
  }
  // never lands on a zero leaf even at the very top of the range
  CHECK(tree.find_prefix(std::nextafter(tree.total(), 0.0)) == 6);
  CHECK_THROWS_AS(tree.set(7, 1.0), ContractViolation);
  CHECK_THROWS_AS(tree.set(0, -1.0), ContractViolation);
}

TEST_CASE("sum tree root stays consistent under random updates") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> idx(0, 999);
  std::exponential_distribution<double> val(1.0);
  SumTree tree(1000);
  std::vector<double> leaves(1000, 0.0);
  for (int k = 0; k < 20000; ++k) {
    const auto i = idx(rng);
    leaves[i] = (k % 7 == 0) ? 0.0 : val(rng);
    tree.set(i, leaves[i]);
  }
  CHECK(tree.max_inconsistency() < 1e-9);
  CHECK(tree.total() == doctest::Approx(std::accumulate(leaves.begin(), leaves.end(), 0.0)).epsilon(1e-12));
}

TEST_CASE("leaf priority follows (|td| + eps)^alpha") {
  PrioritizedBuffer buf({8, 0.6, 1e-6});
  const auto slot = buf.insert(tagged(0), 2.3);
  CHECK(buf.leaf_priority(slot.index) == doctest::Approx(std::pow(2.3 + 1e-6, 0.6)));
  CHECK(buf.leaf_priority(slot.index) == doctest::Approx(1.648).epsilon(1e-3));
  buf.update_priorities(std::vector<SlotId>{slot}, std::vector<double>{0.0});
  CHECK(buf.leaf_priority(slot.index) == doctest::Approx(std::pow(1e-6, 0.6)));
  CHECK_THROWS_AS(buf.update_priorities(std::vector<SlotId>{slot}, std::vector<double>{-1.0}), ContractViolation);
}

TEST_CASE("new experiences enter at the largest priority seen") {
  PrioritizedBuffer buf({8, 0.6, 1e-6});
  const auto a = buf.insert(tagged(0));
  CHECK(buf.leaf_priority(a.index) == doctest::Approx(1.0));
  buf.update_priorities(std::vector<SlotId>{a}, std::vector<double>{9.0});
  const auto b = buf.insert(tagged(1));
  CHECK(buf.leaf_priority(b.index) == doctest::Approx(std::pow(9.0 + 1e-6, 0.6)));
  CHECK(buf.max_priority() == doctest::Approx(std::pow(9.0 + 1e-6, 0.6)));
}

TEST_CASE("sampling frequencies match priorities") {
  const auto buf = four_leaf_buffer();
  std::mt19937_64 rng(12);
  std::map<int, int> counts;
  const int rounds = 25000;
  for (int r = 0; r < rounds; ++r) {
    const auto s = buf.sample(4, 0.4, rng);
    for (const auto& e : s.experiences) ++counts[tag_of(e)];
  }
  const double total = 4.0 * rounds;
  for (int i = 0; i < 4; ++i) {
    const double expected = 0.1 * (i + 1);
    CHECK(counts[i] / total == doctest::Approx(expected).epsilon(0.03));
  }
}

TEST_CASE("importance weights are normalized by the batch maximum") {
  const auto buf = four_leaf_buffer();
  std::mt19937_64 rng(2);
  const double beta = 0.4;
  const auto s = buf.sample(32, beta, rng);
  double max_raw = 0.0;
  std::vector<double> raw;
  for (const auto& e : s.experiences) {
    const double p = 0.1 * (tag_of(e) + 1);
    raw.push_back(std::pow(4.0 * p, -beta));
    max_raw = std::max(max_raw, raw.back());
  }
  double largest = 0.0;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    CHECK(s.weights[j] == doctest::Approx(raw[j] / max_raw).epsilon(1e-6));
    CHECK(s.weights[j] > 0.0);
    CHECK(s.weights[j] <= 1.0);
    largest = std::max(largest, s.weights[j]);
  }
  CHECK(largest == 1.0);

  const auto flat = buf.sample(16, 0.0, rng);
  for (double w : flat.weights) CHECK(w == 1.0);
}

TEST_CASE("alpha zero samples uniformly") {
  PrioritizedBuffer buf({8, 0.0, 1e-6});
  std::vector<SlotId> slots;
  for (int i = 0; i < 4; ++i) slots.push_back(buf.insert(tagged(i)));
  buf.update_priorities(slots, std::vector<double>{0.0, 5.0, 100.0, 1e-3});
  for (int i = 0; i < 4; ++i) CHECK(buf.leaf_priority(static_cast<std::size_t>(i)) == 1.0);
  std::mt19937_64 rng(5);
  std::map<int, int> counts;
  for (int r = 0; r < 20000; ++r) {
    for (const auto& e : buf.sample(4, 1.0, rng).experiences) ++counts[tag_of(e)];
  }
  for (int i = 0; i < 4; ++i) CHECK(counts[i] / 80000.0 == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("a dominant priority is drawn almost always") {
  PrioritizedBuffer buf({64, 0.6, 1e-6});
  std::vector<SlotId> slots;
  for (int i = 0; i < 50; ++i) slots.push_back(buf.insert(tagged(i)));
  std::vector<double> td(50, 1e-3);
  td[17] = 1e6;
  buf.update_priorities(slots, td);
  std::mt19937_64 rng(6);
  int hits = 0, draws = 0;
  for (int r = 0; r < 500; ++r) {
    for (const auto& e : buf.sample(1, 0.4, rng).experiences) {
      hits += tag_of(e) == 17;
      ++draws;
    }
  }
  CHECK(hits >= 0.95 * draws);
}

TEST_CASE("eviction is first in, first out and stale updates are ignored") {
  PrioritizedBuffer buf({3, 0.6, 1e-6});
  std::vector<SlotId> slots;
  for (int i = 0; i < 5; ++i) slots.push_back(buf.insert(tagged(i)));
  CHECK(buf.size() == 3);
  CHECK(buf.insert_count() == 5);
  CHECK(tag_of(buf.at(0)) == 3);
  CHECK(tag_of(buf.at(1)) == 4);
  CHECK(tag_of(buf.at(2)) == 2);
  CHECK(slots[3].index == 0);
  CHECK(slots[3].generation == slots[0].generation + 1);

  const double before = buf.leaf_priority(0);
  buf.update_priorities(std::vector<SlotId>{slots[0]}, std::vector<double>{50.0});
  CHECK(buf.stale_updates() == 1);
  CHECK(buf.leaf_priority(0) == before);
  buf.update_priorities(std::vector<SlotId>{slots[3]}, std::vector<double>{50.0});
  CHECK(buf.stale_updates() == 1);
  CHECK(buf.leaf_priority(0) == doctest::Approx(std::pow(50.0 + 1e-6, 0.6)));
}

TEST_CASE("empty buffers refuse to sample") {
  PrioritizedBuffer buf({4, 0.6, 1e-6});
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(buf.sample(2, 0.4, rng), EmptySampleError);
  CHECK_THROWS_AS(PrioritizedBuffer({4, 0.6, 0.0}), ConfigError);
}

TEST_CASE("restore reproduces sampling exactly") {
  PrioritizedBuffer buf({10, 0.6, 1e-6});
  std::vector<SlotId> slots;
  for (int i = 0; i < 13; ++i) slots.push_back(buf.insert(tagged(i), 0.1 * i));
  std::vector<Experience> stored;
  std::vector<double> leaves;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    stored.push_back(buf.at(i));
    leaves.push_back(buf.leaf_priority(i));
  }
  auto copy = PrioritizedBuffer::restore(buf.config(), stored, leaves, buf.counters());
  std::mt19937_64 r1(3), r2(3);
  const auto a = buf.sample(8, 0.5, r1);
  const auto b = copy.sample(8, 0.5, r2);
  CHECK(a.experiences == b.experiences);
  CHECK(a.slots == b.slots);
  CHECK(a.weights == b.weights);
  CHECK(buf.insert(tagged(99)) == copy.insert(tagged(99)));

  auto broken = buf.counters();
  broken.size = 2;
  CHECK_THROWS_AS(PrioritizedBuffer::restore(buf.config(), stored, leaves, broken), FormatError);
}
