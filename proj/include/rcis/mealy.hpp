#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace rcis {

// Finite Mealy machine over states Q = {0..num_states-1}, actions
// D = {0..num_actions-1} (indices into the plant's disturbance vertices),
// output symbols {0..num_symbols-1}, each symbol naming a vector in R^m.
// Transition and output tables are total.
struct MealyMachine {
  int num_states = 0;
  int num_actions = 0;
  int num_symbols = 0;
  int m = 0;
  std::vector<std::vector<int>> transition;  // [state][action] -> state
  std::vector<std::vector<int>> output;      // [state][action] -> symbol
  std::vector<std::string> state_names;
  std::vector<std::string> symbol_names;

  MealyMachine(int num_states_, int num_actions_, int num_symbols_, int m_,
               std::vector<std::vector<int>> transition_,
               std::vector<std::vector<int>> output_);

  int step(int s, int d) const { return transition[s][d]; }
  int out(int s, int d) const { return output[s][d]; }
  // Symbols never emitted by the output map (permitted, but callers may warn).
  std::vector<int> unused_symbols() const;
};

// theta = (u_1, ..., u_L) in R^{m L}: one R^m block per output symbol.
struct ParamVector {
  Eigen::VectorXd theta;
  int m = 0;

  ParamVector(Eigen::VectorXd theta_, int m_, int num_symbols);
  Eigen::VectorXd symbol_value(int symbol) const {
    return theta.segment(static_cast<long>(symbol) * m, m);
  }
};

// Synchronized self-product: states Q x Q, shared action, paired outputs.
struct ProductMachine {
  int base_states = 0;
  int num_actions = 0;
  std::vector<std::vector<int>> transition;                  // [pair][action]
  std::vector<std::vector<std::pair<int, int>>> output;      // symbol pairs

  int pair_id(int a, int b) const { return a * base_states + b; }
};

// L states in a cycle; outputs are action-independent: moving to the next
// state emits that state's symbol.
MealyMachine simple_loop(int L, int num_actions, int m);

// Root plus all action strings of length <= L with sliding-window truncation
// at depth L; one output symbol per non-root state; o(s,d) = symbol of T(s,d).
MealyMachine tree_machine(int L, int K, int m, long long state_cap = 100000);

// Folds the transition over dseq[0..k-1], then applies the output map on the
// final action; parameter-free symbol-level evaluation.
int nested_output(const MealyMachine& mm, int s, const std::vector<int>& dseq);

ProductMachine product(const MealyMachine& mm, long long pair_cap = 1000000);

// Dominance preorder: s1 >= s2 iff outputs from s2 are determined by outputs
// from s1 along every shared action sequence. Decided by synchronized
// exploration from (s1, s2): the set of reachable output-symbol pairs must be
// a function from s1-symbols to s2-symbols.
bool dominates(const MealyMachine& mm, int s1, int s2);

// Reference implementation of the bounded-length definition (sequence lengths
// up to |Q|^2), organized as per-length reachable pair sets; |Q| <= 7 only.
bool dominates_naive(const MealyMachine& mm, int s1, int s2);

// Lowest-index state dominating all others, if any.
std::optional<int> find_dominant(const MealyMachine& mm);

// Lowest-index representative of each mutual-dominance component of the
// maximal states (transitive closure of mutual dominance).
std::vector<int> maximal_partition(const MealyMachine& mm);

}  // namespace rcis
