#include "rcis/mealy.hpp"

#include <functional>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "rcis/errors.hpp"

using rcis::MealyMachine;

namespace {

MealyMachine random_machine(std::mt19937& rng) {
  std::uniform_int_distribution<int> nq(2, 5), nk(1, 3);
  const int q = nq(rng), k = nk(rng);
  std::uniform_int_distribution<int> ns(1, q + 2);
  const int sym = ns(rng);
  std::uniform_int_distribution<int> ds(0, q - 1), dy(0, sym - 1);
  std::vector<std::vector<int>> trans(q, std::vector<int>(k));
  std::vector<std::vector<int>> out(q, std::vector<int>(k));
  for (int s = 0; s < q; ++s)
    for (int d = 0; d < k; ++d) {
      trans[s][d] = ds(rng);
      out[s][d] = dy(rng);
    }
  return MealyMachine(q, k, sym, 1, std::move(trans), std::move(out));
}

// Definitional check: enumerate every action sequence of length 1..bound,
// fold the transition explicitly, and require the resulting symbol pairs to
// form a function from s1-symbols to s2-symbols.
bool dominates_by_sequences(const MealyMachine& mm, int s1, int s2,
                            int bound) {
  std::vector<int> to_symbol(mm.num_symbols, -1);
  std::vector<int> seq;
  const auto run = [&](int s0) {
    int q = s0;
    for (size_t i = 0; i + 1 < seq.size(); ++i) q = mm.step(q, seq[i]);
    return mm.out(q, seq.back());
  };
  bool ok = true;
  const std::function<void(int)> rec = [&](int len) {
    if (!ok) return;
    if (!seq.empty()) {
      const int o1 = run(s1), o2 = run(s2);
      if (to_symbol[o1] == -1) to_symbol[o1] = o2;
      else if (to_symbol[o1] != o2) {
        ok = false;
        return;
      }
    }
    if (len == 0) return;
    for (int d = 0; d < mm.num_actions; ++d) {
      seq.push_back(d);
      rec(len - 1);
      seq.pop_back();
    }
  };
  rec(bound);
  return ok;
}

// Symbol pairs reachable from (s1, s2) along sequences of length <= bound.
std::set<std::pair<int, int>> pair_relation(const MealyMachine& mm, int s1,
                                            int s2, int bound) {
  std::set<std::pair<int, int>> rel;
  std::set<std::pair<int, int>> level = {{s1, s2}};
  for (int len = 0; len < bound; ++len) {
    std::set<std::pair<int, int>> next;
    for (const auto& [a, b] : level)
      for (int d = 0; d < mm.num_actions; ++d) {
        rel.emplace(mm.out(a, d), mm.out(b, d));
        next.emplace(mm.step(a, d), mm.step(b, d));
      }
    level = std::move(next);
  }
  return rel;
}

MealyMachine incompatible_pair() {
  // Identity transitions; the two output rows cannot be aligned in either
  // direction, so neither state dominates the other.
  return MealyMachine(2, 3, 4, 1, {{0, 0, 0}, {1, 1, 1}},
                      {{0, 0, 1}, {2, 3, 3}});
}

}  // namespace

TEST_CASE("mealy: constructor validates tables") {
  CHECK_THROWS_AS(MealyMachine(2, 1, 1, 1, {{0}}, {{0}, {0}}),
                  rcis::DimensionMismatch);
  CHECK_THROWS_AS(MealyMachine(2, 1, 1, 1, {{0}, {0, 0}}, {{0}, {0}}),
                  rcis::DimensionMismatch);
  CHECK_THROWS_AS(MealyMachine(2, 1, 1, 1, {{0}, {2}}, {{0}, {0}}),
                  rcis::Error);
  CHECK_THROWS_AS(MealyMachine(2, 1, 1, 1, {{0}, {1}}, {{0}, {1}}),
                  rcis::Error);
  CHECK_THROWS_AS(MealyMachine(0, 1, 1, 1, {}, {}), rcis::Error);
}

TEST_CASE("mealy: unused symbols are reported") {
  MealyMachine mm(2, 2, 3, 1, {{0, 1}, {1, 0}}, {{0, 2}, {2, 0}});
  CHECK(mm.unused_symbols() == std::vector<int>{1});
  CHECK(rcis::simple_loop(3, 2, 1).unused_symbols().empty());
}

TEST_CASE("mealy: parameter vector layout") {
  Eigen::VectorXd th(6);
  th << 1, 2, 3, 4, 5, 6;
  rcis::ParamVector pv(th, 2, 3);
  CHECK(pv.symbol_value(0) == Eigen::Vector2d(1, 2));
  CHECK(pv.symbol_value(2) == Eigen::Vector2d(5, 6));
  CHECK_THROWS_AS(rcis::ParamVector(th, 2, 4), rcis::DimensionMismatch);
}

TEST_CASE("mealy: simple loop cycles and is action independent") {
  const auto mm = rcis::simple_loop(3, 2, 1);
  CHECK(mm.num_states == 3);
  CHECK(mm.num_symbols == 3);
  for (int s = 0; s < 3; ++s)
    for (int d = 0; d < 2; ++d) {
      CHECK(mm.step(s, d) == (s + 1) % 3);
      CHECK(mm.out(s, d) == (s + 1) % 3);
      CHECK(mm.out(s, d) == mm.out(s, 0));
    }
  CHECK(mm.state_names[0] == "s1");
  CHECK(mm.symbol_names[0] == "u1");

  const auto one = rcis::simple_loop(1, 3, 2);
  CHECK(one.num_states == 1);
  CHECK(one.step(0, 2) == 0);
  CHECK(one.out(0, 1) == 0);
}

TEST_CASE("mealy: tree machine state count and naming") {
  const auto t1 = rcis::tree_machine(1, 2, 1);
  CHECK(t1.num_states == 3);
  CHECK(t1.num_symbols == 2);
  const auto t2 = rcis::tree_machine(2, 2, 1);
  CHECK(t2.num_states == 7);
  CHECK(rcis::tree_machine(3, 2, 1).num_states == 15);
  CHECK(rcis::tree_machine(2, 3, 1).num_states == 13);

  CHECK(t2.state_names[0] == "s0");
  CHECK(t2.state_names[1] == "d1");
  CHECK(t2.state_names[2] == "d2");
  CHECK(t2.state_names[3] == "d1 d1");
  CHECK(t2.state_names[4] == "d1 d2");
  CHECK(t2.state_names[6] == "d2 d2");
}

TEST_CASE("mealy: tree transitions append then slide") {
  const auto t = rcis::tree_machine(2, 2, 1);
  // Root and depth-1 states append the action.
  CHECK(t.step(0, 0) == 1);
  CHECK(t.step(0, 1) == 2);
  CHECK(t.step(1, 0) == 3);
  CHECK(t.step(1, 1) == 4);
  CHECK(t.step(2, 1) == 6);
  // Depth-2 states drop the oldest action: (d1 d2) + d1 -> (d2 d1).
  CHECK(t.step(4, 0) == 5);
  CHECK(t.step(4, 1) == 6);
  CHECK(t.step(3, 1) == 4);
  CHECK(t.step(6, 0) == 5);
  // Output is the target state's symbol.
  for (int s = 0; s < t.num_states; ++s)
    for (int d = 0; d < 2; ++d) CHECK(t.out(s, d) == t.step(s, d) - 1);
}

TEST_CASE("mealy: tree machine respects state cap") {
  CHECK_THROWS_AS(rcis::tree_machine(20, 2, 1, 1000),
                  rcis::StateCountExceedsCap);
  CHECK_THROWS_AS(rcis::tree_machine(60, 3, 1), rcis::StateCountExceedsCap);
  CHECK(rcis::tree_machine(14, 2, 1).num_states == (1 << 15) - 1);
}

TEST_CASE("mealy: nested output folds the prefix") {
  const auto t = rcis::tree_machine(2, 2, 1);
  CHECK(rcis::nested_output(t, 0, {0}) == 0);
  CHECK(rcis::nested_output(t, 0, {1}) == 1);
  CHECK(rcis::nested_output(t, 0, {0, 1}) == 3);
  CHECK(rcis::nested_output(t, 0, {0, 1, 0}) == 4);
  const auto loop = rcis::simple_loop(3, 1, 1);
  CHECK(rcis::nested_output(loop, 0, {0, 0, 0, 0}) == 1);
  CHECK_THROWS_AS(rcis::nested_output(t, 0, {}), rcis::Error);
  CHECK_THROWS_AS(rcis::nested_output(t, 0, {2}), rcis::Error);
}

TEST_CASE("mealy: product machine synchronizes") {
  const auto t = rcis::tree_machine(1, 2, 1);
  const auto pm = rcis::product(t);
  CHECK(pm.base_states == 3);
  CHECK(static_cast<int>(pm.transition.size()) == 9);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int d = 0; d < 2; ++d) {
        const int id = pm.pair_id(a, b);
        CHECK(pm.transition[id][d] == pm.pair_id(t.step(a, d), t.step(b, d)));
        CHECK(pm.output[id][d] ==
              std::make_pair(t.out(a, d), t.out(b, d)));
      }
  CHECK_THROWS_AS(rcis::product(t, 5), rcis::StateCountExceedsCap);
}

TEST_CASE("mealy: dominance is reflexive") {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const auto mm = random_machine(rng);
    for (int s = 0; s < mm.num_states; ++s) CHECK(rcis::dominates(mm, s, s));
  }
}

TEST_CASE("mealy: depth-one tree states are mutually dominant") {
  // All states of the depth-1 tree emit the symbol of the incoming action,
  // so every state dominates every other.
  const auto t = rcis::tree_machine(1, 2, 1);
  CHECK(rcis::dominates(t, 1, 2));
  CHECK(rcis::dominates(t, 2, 1));
  CHECK(rcis::dominates(t, 0, 1));
  CHECK(rcis::find_dominant(t) == 0);
  CHECK(rcis::maximal_partition(t) == std::vector<int>{0});
}

TEST_CASE("mealy: depth-two tree root dominates, leaves do not") {
  const auto t = rcis::tree_machine(2, 2, 1);
  for (int s = 0; s < t.num_states; ++s) CHECK(rcis::dominates(t, 0, s));
  for (int leaf = 3; leaf <= 6; ++leaf) {
    CHECK_FALSE(rcis::dominates(t, leaf, 0));
  }
  CHECK_FALSE(rcis::dominates(t, 1, 0));
  CHECK(rcis::find_dominant(t) == 0);
  CHECK(rcis::maximal_partition(t) == std::vector<int>{0});
}

TEST_CASE("mealy: loop machines have a dominant initial state") {
  for (int L = 1; L <= 4; ++L) {
    const auto mm = rcis::simple_loop(L, 2, 1);
    CHECK(rcis::find_dominant(mm).has_value());
    // Rotations differ only by symbol relabeling, so all states are mutually
    // dominant and the lowest index wins.
    CHECK(rcis::find_dominant(mm) == 0);
    CHECK(rcis::maximal_partition(mm) == std::vector<int>{0});
  }
}

TEST_CASE("mealy: incompatible outputs leave no dominant state") {
  const auto mm = incompatible_pair();
  CHECK_FALSE(rcis::dominates(mm, 0, 1));
  CHECK_FALSE(rcis::dominates(mm, 1, 0));
  CHECK_FALSE(rcis::find_dominant(mm).has_value());
  CHECK(rcis::maximal_partition(mm) == std::vector<int>{0, 1});
}

TEST_CASE("mealy: maximal partition groups mutual dominance") {
  // States 0 and 3 share an output row, states 1 and 2 are incompatible with
  // everything else; identity transitions throughout.
  MealyMachine mm(4, 3, 6, 1,
                  {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}},
                  {{0, 0, 1}, {2, 3, 3}, {4, 5, 4}, {0, 0, 1}});
  CHECK(rcis::dominates(mm, 0, 3));
  CHECK(rcis::dominates(mm, 3, 0));
  CHECK_FALSE(rcis::dominates(mm, 1, 2));
  CHECK_FALSE(rcis::dominates(mm, 2, 1));
  CHECK(rcis::maximal_partition(mm) == std::vector<int>{0, 1, 2});
  CHECK_FALSE(rcis::find_dominant(mm).has_value());
}

TEST_CASE("mealy: certificate agrees with the bounded reference") {
  std::vector<MealyMachine> machines;
  for (int L = 1; L <= 3; ++L)
    for (int k = 1; k <= 3; ++k) machines.push_back(rcis::simple_loop(L, k, 1));
  machines.push_back(rcis::tree_machine(1, 2, 1));
  machines.push_back(rcis::tree_machine(1, 3, 1));
  machines.push_back(rcis::tree_machine(2, 2, 1));
  machines.push_back(incompatible_pair());
  std::mt19937 rng(23);
  for (int rep = 0; rep < 25; ++rep) machines.push_back(random_machine(rng));

  for (const auto& mm : machines) {
    REQUIRE(mm.num_states <= 7);
    for (int s1 = 0; s1 < mm.num_states; ++s1)
      for (int s2 = 0; s2 < mm.num_states; ++s2) {
        CHECK(rcis::dominates(mm, s1, s2) ==
              rcis::dominates_naive(mm, s1, s2));
      }
  }
  CHECK_THROWS_AS(rcis::dominates_naive(rcis::simple_loop(8, 1, 1), 0, 1),
                  rcis::Error);
}

TEST_CASE("mealy: certificate agrees with explicit sequence enumeration") {
  std::vector<MealyMachine> machines;
  machines.push_back(rcis::tree_machine(1, 2, 1));
  machines.push_back(rcis::simple_loop(2, 2, 1));
  machines.push_back(rcis::simple_loop(3, 2, 1));
  std::mt19937 rng(37);
  std::uniform_int_distribution<int> ds(0, 2), dy(0, 2);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::vector<int>> trans(3, std::vector<int>(2));
    std::vector<std::vector<int>> out(3, std::vector<int>(2));
    for (int s = 0; s < 3; ++s)
      for (int d = 0; d < 2; ++d) {
        trans[s][d] = ds(rng);
        out[s][d] = dy(rng);
      }
    machines.push_back(
        MealyMachine(3, 2, 3, 1, std::move(trans), std::move(out)));
  }
  for (const auto& mm : machines) {
    const int bound = mm.num_states * mm.num_states;
    for (int s1 = 0; s1 < mm.num_states; ++s1)
      for (int s2 = 0; s2 < mm.num_states; ++s2) {
        CHECK(rcis::dominates(mm, s1, s2) ==
              dominates_by_sequences(mm, s1, s2, bound));
      }
  }
}

TEST_CASE("mealy: pair relation saturates at the squared state count") {
  std::vector<MealyMachine> machines;
  machines.push_back(rcis::tree_machine(1, 3, 1));
  machines.push_back(rcis::simple_loop(4, 2, 1));
  std::mt19937 rng(41);
  std::uniform_int_distribution<int> ds(0, 3), dy(0, 3);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::vector<int>> trans(4, std::vector<int>(2));
    std::vector<std::vector<int>> out(4, std::vector<int>(2));
    for (int s = 0; s < 4; ++s)
      for (int d = 0; d < 2; ++d) {
        trans[s][d] = ds(rng);
        out[s][d] = dy(rng);
      }
    machines.push_back(
        MealyMachine(4, 2, 4, 1, std::move(trans), std::move(out)));
  }
  for (const auto& mm : machines) {
    const int bound = mm.num_states * mm.num_states;
    for (int s1 = 0; s1 < mm.num_states; ++s1)
      for (int s2 = 0; s2 < mm.num_states; ++s2) {
        const auto base = pair_relation(mm, s1, s2, bound);
        CHECK(base == pair_relation(mm, s1, s2, bound + 1));
        CHECK(base == pair_relation(mm, s1, s2, bound + 2));
      }
  }
}
