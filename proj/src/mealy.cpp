#include "rcis/mealy.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_set>

#include "rcis/errors.hpp"

namespace rcis {

namespace {

void check_table(const std::vector<std::vector<int>>& table, int num_states,
                 int num_actions, int limit, const char* what) {
  if (static_cast<int>(table.size()) != num_states) {
    throw DimensionMismatch(std::string(what) + " table has " +
                            std::to_string(table.size()) + " rows, expected " +
                            std::to_string(num_states));
  }
  for (int s = 0; s < num_states; ++s) {
    if (static_cast<int>(table[s].size()) != num_actions) {
      throw DimensionMismatch(std::string(what) + " row " + std::to_string(s) +
                              " has " + std::to_string(table[s].size()) +
                              " entries, expected " +
                              std::to_string(num_actions));
    }
    for (int d = 0; d < num_actions; ++d) {
      const int v = table[s][d];
      if (v < 0 || v >= limit) {
        throw Error(std::string(what) + " entry (" + std::to_string(s) + ", " +
                    std::to_string(d) + ") = " + std::to_string(v) +
                    " out of range [0, " + std::to_string(limit) + ")");
      }
    }
  }
}

}  // namespace

MealyMachine::MealyMachine(int num_states_, int num_actions_, int num_symbols_,
                           int m_, std::vector<std::vector<int>> transition_,
                           std::vector<std::vector<int>> output_)
    : num_states(num_states_),
      num_actions(num_actions_),
      num_symbols(num_symbols_),
      m(m_),
      transition(std::move(transition_)),
      output(std::move(output_)) {
  if (num_states < 1) throw Error("machine needs at least one state");
  if (num_actions < 1) throw Error("machine needs at least one action");
  if (num_symbols < 1) throw Error("machine needs at least one output symbol");
  if (m < 1) throw Error("machine input dimension must be positive");
  check_table(transition, num_states, num_actions, num_states, "transition");
  check_table(output, num_states, num_actions, num_symbols, "output");
  state_names.resize(num_states);
  symbol_names.resize(num_symbols);
  for (int s = 0; s < num_states; ++s) state_names[s] = "q" + std::to_string(s);
  for (int j = 0; j < num_symbols; ++j)
    symbol_names[j] = "u" + std::to_string(j + 1);
}

std::vector<int> MealyMachine::unused_symbols() const {
  std::vector<char> used(num_symbols, 0);
  for (int s = 0; s < num_states; ++s)
    for (int d = 0; d < num_actions; ++d) used[output[s][d]] = 1;
  std::vector<int> res;
  for (int j = 0; j < num_symbols; ++j)
    if (!used[j]) res.push_back(j);
  return res;
}

ParamVector::ParamVector(Eigen::VectorXd theta_, int m_, int num_symbols)
    : theta(std::move(theta_)), m(m_) {
  if (m < 1) throw Error("parameter block size must be positive");
  if (theta.size() != static_cast<long>(m) * num_symbols) {
    throw DimensionMismatch(
        "parameter vector has length " + std::to_string(theta.size()) +
        ", expected " + std::to_string(static_cast<long>(m) * num_symbols));
  }
}

MealyMachine simple_loop(int L, int num_actions, int m) {
  if (L < 1) throw Error("loop length must be positive");
  std::vector<std::vector<int>> trans(L, std::vector<int>(num_actions));
  std::vector<std::vector<int>> out(L, std::vector<int>(num_actions));
  for (int s = 0; s < L; ++s)
    for (int d = 0; d < num_actions; ++d) {
      trans[s][d] = (s + 1) % L;
      out[s][d] = (s + 1) % L;
    }
  MealyMachine mm(L, num_actions, L, m, std::move(trans), std::move(out));
  for (int s = 0; s < L; ++s) mm.state_names[s] = "s" + std::to_string(s + 1);
  return mm;
}

MealyMachine tree_machine(int L, int K, int m, long long state_cap) {
  if (L < 1) throw Error("tree depth must be positive");
  if (K < 1) throw Error("tree needs at least one action");
  // |Q| = 1 + K + K^2 + ... + K^L, checked against the cap before allocating.
  long long total = 1, pw = 1;
  std::vector<long long> block_start(L + 1);  // first id of each depth
  block_start[0] = 0;
  for (int depth = 1; depth <= L; ++depth) {
    if (pw > state_cap / K + 1) {
      throw StateCountExceedsCap("tree machine with depth " +
                                 std::to_string(L) + " and " +
                                 std::to_string(K) + " actions exceeds cap " +
                                 std::to_string(state_cap));
    }
    pw *= K;
    block_start[depth] = total;
    total += pw;
    if (total > state_cap) {
      throw StateCountExceedsCap("tree machine with depth " +
                                 std::to_string(L) + " and " +
                                 std::to_string(K) + " actions has " +
                                 std::to_string(total) + "+ states, cap " +
                                 std::to_string(state_cap));
    }
  }
  const int n = static_cast<int>(total);
  std::vector<std::vector<int>> trans(n, std::vector<int>(K));
  std::vector<std::vector<int>> out(n, std::vector<int>(K));
  std::vector<int> depth_of(n, 0);
  for (int depth = 1; depth <= L; ++depth) {
    const long long end = depth < L ? block_start[depth + 1] : total;
    for (long long i = block_start[depth]; i < end; ++i) depth_of[i] = depth;
  }
  // State id at depth l encodes the action string as a base-K offset with the
  // oldest action most significant; append = offset*K + d, slide drops the
  // leading digit first.
  long long top = 1;
  for (int i = 1; i < L; ++i) top *= K;  // K^{L-1}
  for (int s = 0; s < n; ++s) {
    const int depth = depth_of[s];
    for (int d = 0; d < K; ++d) {
      long long nxt;
      if (depth < L) {
        const long long off = s - block_start[depth];  // root: off 0, depth 0
        nxt = block_start[depth + 1] + off * K + d;
      } else {
        const long long off = (s - block_start[L]) % top;
        nxt = block_start[L] + off * K + d;
      }
      trans[s][d] = static_cast<int>(nxt);
      out[s][d] = static_cast<int>(nxt) - 1;  // symbol j names state j+1
    }
  }
  MealyMachine mm(n, K, n - 1, m, std::move(trans), std::move(out));
  mm.state_names[0] = "s0";
  for (int s = 1; s < n; ++s) {
    const int depth = depth_of[s];
    long long off = s - block_start[depth];
    std::vector<int> digits(depth);
    for (int i = depth - 1; i >= 0; --i) {
      digits[i] = static_cast<int>(off % K);
      off /= K;
    }
    std::string name;
    for (int i = 0; i < depth; ++i) {
      if (i) name += ' ';
      name += "d" + std::to_string(digits[i] + 1);
    }
    mm.state_names[s] = name;
  }
  return mm;
}

int nested_output(const MealyMachine& mm, int s, const std::vector<int>& dseq) {
  if (dseq.empty()) throw Error("nested_output needs a nonempty sequence");
  if (s < 0 || s >= mm.num_states) throw Error("nested_output: bad state");
  for (int d : dseq)
    if (d < 0 || d >= mm.num_actions)
      throw Error("nested_output: action index out of range");
  int q = s;
  for (size_t i = 0; i + 1 < dseq.size(); ++i) q = mm.step(q, dseq[i]);
  return mm.out(q, dseq.back());
}

ProductMachine product(const MealyMachine& mm, long long pair_cap) {
  const long long n = mm.num_states;
  if (n * n > pair_cap) {
    throw StateCountExceedsCap("product machine has " + std::to_string(n * n) +
                               " states, cap " + std::to_string(pair_cap));
  }
  ProductMachine pm;
  pm.base_states = mm.num_states;
  pm.num_actions = mm.num_actions;
  pm.transition.resize(n * n, std::vector<int>(mm.num_actions));
  pm.output.resize(n * n,
                   std::vector<std::pair<int, int>>(mm.num_actions));
  for (int a = 0; a < mm.num_states; ++a)
    for (int b = 0; b < mm.num_states; ++b) {
      const int id = pm.pair_id(a, b);
      for (int d = 0; d < mm.num_actions; ++d) {
        pm.transition[id][d] = pm.pair_id(mm.step(a, d), mm.step(b, d));
        pm.output[id][d] = {mm.out(a, d), mm.out(b, d)};
      }
    }
  return pm;
}

bool dominates(const MealyMachine& mm, int s1, int s2) {
  if (s1 < 0 || s1 >= mm.num_states || s2 < 0 || s2 >= mm.num_states)
    throw Error("dominates: state index out of range");
  // Explore the synchronized product reachable from (s1, s2) lazily; the
  // output-pair relation must map each s1-symbol to a single s2-symbol.
  std::vector<int> to_symbol(mm.num_symbols, -1);
  std::unordered_set<long long> seen;
  std::deque<std::pair<int, int>> queue;
  const auto key = [&](int a, int b) {
    return static_cast<long long>(a) * mm.num_states + b;
  };
  seen.insert(key(s1, s2));
  queue.emplace_back(s1, s2);
  while (!queue.empty()) {
    const auto [a, b] = queue.front();
    queue.pop_front();
    for (int d = 0; d < mm.num_actions; ++d) {
      const int o1 = mm.out(a, d), o2 = mm.out(b, d);
      if (to_symbol[o1] == -1) to_symbol[o1] = o2;
      else if (to_symbol[o1] != o2) return false;
      const int na = mm.step(a, d), nb = mm.step(b, d);
      if (seen.insert(key(na, nb)).second) queue.emplace_back(na, nb);
    }
  }
  return true;
}

bool dominates_naive(const MealyMachine& mm, int s1, int s2) {
  if (mm.num_states > 7)
    throw Error("dominates_naive supports at most 7 states");
  if (s1 < 0 || s1 >= mm.num_states || s2 < 0 || s2 >= mm.num_states)
    throw Error("dominates_naive: state index out of range");
  // Walk every action sequence up to length |Q|^2, grouped by length: the
  // pairs reachable after l steps determine all outputs of length-(l+1)
  // sequences. No cross-length dedup, deliberately.
  const int bound = mm.num_states * mm.num_states;
  std::vector<int> to_symbol(mm.num_symbols, -1);
  std::set<std::pair<int, int>> level = {{s1, s2}};
  for (int len = 0; len < bound; ++len) {
    std::set<std::pair<int, int>> next;
    for (const auto& [a, b] : level) {
      for (int d = 0; d < mm.num_actions; ++d) {
        const int o1 = mm.out(a, d), o2 = mm.out(b, d);
        if (to_symbol[o1] == -1) to_symbol[o1] = o2;
        else if (to_symbol[o1] != o2) return false;
        next.emplace(mm.step(a, d), mm.step(b, d));
      }
    }
    level = std::move(next);
  }
  return true;
}

std::optional<int> find_dominant(const MealyMachine& mm) {
  for (int s = 0; s < mm.num_states; ++s) {
    bool all = true;
    for (int t = 0; t < mm.num_states && all; ++t)
      if (t != s && !dominates(mm, s, t)) all = false;
    if (all) return s;
  }
  return std::nullopt;
}

std::vector<int> maximal_partition(const MealyMachine& mm) {
  const int n = mm.num_states;
  std::vector<std::vector<char>> dom(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dom[i][j] = dominates(mm, i, j) ? 1 : 0;
  std::vector<int> qmax;
  for (int i = 0; i < n; ++i) {
    bool maximal = true;
    for (int j = 0; j < n && maximal; ++j)
      if (dom[j][i] && !dom[i][j]) maximal = false;
    if (maximal) qmax.push_back(i);
  }
  // Group maximal states by the transitive closure of mutual dominance.
  std::vector<int> comp(n, -1);
  std::vector<int> reps;
  for (int i : qmax) {
    if (comp[i] != -1) continue;
    reps.push_back(i);
    std::deque<int> queue = {i};
    comp[i] = i;
    while (!queue.empty()) {
      const int a = queue.front();
      queue.pop_front();
      for (int b : qmax)
        if (comp[b] == -1 && dom[a][b] && dom[b][a]) {
          comp[b] = i;
          queue.push_back(b);
        }
    }
  }
  std::sort(reps.begin(), reps.end());
  return reps;
}

}  // namespace rcis
