#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "qrps/errors.hpp"
#include "qrps/parallel.hpp"
#include "qrps/rng.hpp"

namespace qrps {

using NodeId = std::size_t;

// Full joint assignment: one category index per node, in node-id order.
using Assignment = std::vector<int>;

// One categorical variable and its conditional probability table. Rows are
// indexed by the joint parent assignment in mixed-radix order with the last
// listed parent varying fastest; each row is a distribution over the node's
// categories. Root nodes carry a single row.
struct Node {
  std::string name;
  std::vector<NodeId> parents;
  std::vector<std::vector<double>> cpt;

  int cardinality() const {
    return cpt.empty() ? 0 : static_cast<int>(cpt.front().size());
  }
};

class CausalModel;
inline std::vector<NodeId> topo_order(const CausalModel& model);

// Finite discrete DAG with per-node cpts. Build with add_node (parents may
// reference nodes added later), then seal(); a sealed model is validated,
// immutable, and safe to share across threads.
class CausalModel {
 public:
  NodeId add_node(std::string name, std::vector<NodeId> parents,
                  std::vector<std::vector<double>> cpt) {
    if (sealed_) throw std::logic_error("add_node on a sealed model");
    nodes_.push_back({std::move(name), std::move(parents), std::move(cpt)});
    return nodes_.size() - 1;
  }

  // Validates the node set and freezes the model. Throws ModelError on a
  // malformed cpt and CycleError if the graph has a cycle.
  CausalModel& seal() {
    validate();
    order_ = topo_order(*this);
    sealed_ = true;
    return *this;
  }

  bool sealed() const { return sealed_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }

  const std::vector<NodeId>& order() const {
    if (!sealed_) throw std::logic_error("model must be sealed before use");
    return order_;
  }

  NodeId id_of(const std::string& name) const {
    for (NodeId i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].name == name) return i;
    throw ModelError("no node named '" + name + "'");
  }

  // Product of cardinalities, saturating at uint64 max.
  std::uint64_t state_space_size() const {
    std::uint64_t s = 1;
    for (const Node& n : nodes_) {
      const auto k = static_cast<std::uint64_t>(n.cardinality());
      if (k == 0 || s > std::numeric_limits<std::uint64_t>::max() / k)
        return std::numeric_limits<std::uint64_t>::max();
      s *= k;
    }
    return s;
  }

  // cpt row index of `node` under the (partially) sampled assignment.
  std::size_t cpt_row(NodeId node, const Assignment& a) const {
    std::size_t row = 0;
    for (NodeId p : nodes_[node].parents)
      row = row * static_cast<std::size_t>(nodes_[p].cardinality()) +
            static_cast<std::size_t>(a[p]);
    return row;
  }

  void validate() const {
    for (NodeId id = 0; id < nodes_.size(); ++id) {
      const Node& n = nodes_[id];
      if (n.cpt.empty())
        throw ModelError("node '" + n.name + "' has an empty cpt");
      if (n.cardinality() < 2)
        throw ModelError("node '" + n.name + "' needs cardinality >= 2");
      std::size_t rows_needed = 1;
      for (NodeId p : n.parents) {
        if (p >= nodes_.size())
          throw ModelError("node '" + n.name + "' references unknown parent");
        rows_needed *= static_cast<std::size_t>(nodes_[p].cardinality());
      }
      if (n.cpt.size() != rows_needed)
        throw ModelError("node '" + n.name + "' has " + std::to_string(n.cpt.size()) +
                         " cpt rows, needs " + std::to_string(rows_needed));
      for (const auto& row : n.cpt) {
        if (static_cast<int>(row.size()) != n.cardinality())
          throw ModelError("node '" + n.name + "' has ragged cpt rows");
        double sum = 0.0;
        for (double v : row) {
          if (v < 0.0)
            throw ModelError("node '" + n.name + "' has a negative cpt entry");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
          throw ModelError("node '" + n.name + "' has a cpt row summing to " +
                           std::to_string(sum));
      }
    }
  }

 private:
  std::vector<Node> nodes_;
  std::vector<NodeId> order_;
  bool sealed_ = false;
};

// Kahn's algorithm, smallest id first. Throws CycleError.
inline std::vector<NodeId> topo_order(const CausalModel& model) {
  const auto& nodes = model.nodes();
  std::vector<int> indegree(nodes.size(), 0);
  std::vector<std::vector<NodeId>> children(nodes.size());
  for (NodeId id = 0; id < nodes.size(); ++id)
    for (NodeId p : nodes[id].parents) {
      if (p >= nodes.size()) throw ModelError("parent id out of range");
      children[p].push_back(id);
      ++indegree[id];
    }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId id = 0; id < nodes.size(); ++id)
    if (indegree[id] == 0) ready.push(id);
  std::vector<NodeId> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    const NodeId id = ready.top();
    ready.pop();
    order.push_back(id);
    for (NodeId ch : children[id])
      if (--indegree[ch] == 0) ready.push(ch);
  }
  if (order.size() != nodes.size()) throw CycleError("graph has a cycle");
  return order;
}

// Restriction applied at a collider node: only the listed categories survive.
struct ColliderConstraint {
  NodeId node = 0;
  std::vector<int> allowed;

  bool allows(int value) const {
    return std::find(allowed.begin(), allowed.end(), value) != allowed.end();
  }
};

// Dense probability table over full assignments, last node varying fastest.
// keep_rate records the acceptance probability of whatever event this table
// was conditioned on (1 for an unconditioned joint).
struct ExactJoint {
  std::vector<int> cards;
  std::vector<double> probs;
  double keep_rate = 1.0;

  std::size_t size() const { return probs.size(); }

  std::size_t index_of(const Assignment& a) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < cards.size(); ++i)
      idx = idx * static_cast<std::size_t>(cards[i]) + static_cast<std::size_t>(a[i]);
    return idx;
  }

  void decode(std::size_t idx, Assignment& out) const {
    out.resize(cards.size());
    for (std::size_t i = cards.size(); i-- > 0;) {
      out[i] = static_cast<int>(idx % static_cast<std::size_t>(cards[i]));
      idx /= static_cast<std::size_t>(cards[i]);
    }
  }

  Assignment assignment_of(std::size_t idx) const {
    Assignment a;
    decode(idx, a);
    return a;
  }

  double total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }

  std::vector<double> marginal(NodeId node) const {
    std::uint64_t stride = 1;
    for (std::size_t i = node + 1; i < cards.size(); ++i)
      stride *= static_cast<std::uint64_t>(cards[i]);
    std::vector<double> m(cards[node], 0.0);
    for (std::size_t idx = 0; idx < probs.size(); ++idx)
      m[(idx / stride) % static_cast<std::uint64_t>(cards[node])] += probs[idx];
    return m;
  }
};

inline constexpr std::uint64_t kExactJointGuard = 10'000'000;

// Brute-force enumeration of the full joint. The universal small-instance
// oracle; guarded so nobody enumerates themselves into the ground.
inline ExactJoint exact_joint(const CausalModel& model) {
  const std::uint64_t states = model.state_space_size();
  if (states > kExactJointGuard)
    throw TooLargeError("state space " + std::to_string(states) + " exceeds guard " +
                        std::to_string(kExactJointGuard));
  ExactJoint joint;
  joint.cards.reserve(model.node_count());
  for (const Node& n : model.nodes()) joint.cards.push_back(n.cardinality());
  joint.probs.resize(states);
  Assignment a;
  for (std::size_t idx = 0; idx < states; ++idx) {
    joint.decode(idx, a);
    double p = 1.0;
    for (NodeId id = 0; id < model.node_count(); ++id) {
      const Node& n = model.nodes()[id];
      p *= n.cpt[model.cpt_row(id, a)][static_cast<std::size_t>(a[id])];
    }
    joint.probs[idx] = p;
  }
  return joint;
}

// Post-selection: restrict to assignments with the collider in `allowed`,
// renormalize, and record the acceptance probability as keep_rate.
inline ExactJoint condition(const ExactJoint& joint, const ColliderConstraint& c) {
  if (c.node >= joint.cards.size()) throw ModelError("constraint node out of range");
  if (c.allowed.empty()) throw ModelError("constraint allows no categories");
  for (int v : c.allowed)
    if (v < 0 || v >= joint.cards[c.node])
      throw ModelError("constraint category out of range");
  std::uint64_t stride = 1;
  for (std::size_t i = c.node + 1; i < joint.cards.size(); ++i)
    stride *= static_cast<std::uint64_t>(joint.cards[i]);
  const auto card = static_cast<std::uint64_t>(joint.cards[c.node]);

  double keep = 0.0;
  for (std::size_t idx = 0; idx < joint.probs.size(); ++idx)
    if (c.allows(static_cast<int>((idx / stride) % card))) keep += joint.probs[idx];
  if (keep <= 0.0)
    throw ZeroSupportError("conditioning event has probability 0");

  ExactJoint out;
  out.cards = joint.cards;
  out.keep_rate = keep;
  out.probs.resize(joint.probs.size(), 0.0);
  for (std::size_t idx = 0; idx < joint.probs.size(); ++idx)
    if (c.allows(static_cast<int>((idx / stride) % card)))
      out.probs[idx] = joint.probs[idx] / keep;
  return out;
}

// Forward (ancestral) sampling: each node drawn from its cpt row given the
// already-sampled parents, in topological order. One uniform per node.
inline void sample_into(const CausalModel& model, RandomStream& stream, Assignment& a) {
  a.assign(model.node_count(), -1);
  for (NodeId id : model.order()) {
    const Node& n = model.nodes()[id];
    a[id] = stream.categorical(n.cpt[model.cpt_row(id, a)]);
  }
}

inline Assignment sample(const CausalModel& model, RandomStream& stream) {
  Assignment a;
  sample_into(model, stream, a);
  return a;
}

struct SampleOptions {
  std::uint64_t budget = 1'000'000'000;  // trial cap before BudgetExceededError
  int threads = 1;
};

struct SampledAssignments {
  std::vector<Assignment> kept;
  std::uint64_t trials = 0;

  double keep_rate() const {
    return trials == 0 ? 0.0
                       : static_cast<double>(kept.size()) / static_cast<double>(trials);
  }
};

// Post-selection by discarding: forward-sample trials 0,1,2,... and keep the
// ones satisfying the constraint, until n_kept survive. Trial t uses stream
// (seed, t), so the output is a pure function of (model, constraint, seed).
inline SampledAssignments rejection_sample(const CausalModel& model,
                                           const ColliderConstraint& constraint,
                                           std::uint64_t n_kept, std::uint64_t seed,
                                           const SampleOptions& opt = {}) {
  auto fn = [&](std::uint64_t t) {
    RandomStream s(seed, t);
    Assignment a = sample(model, s);
    const bool keep = constraint.allows(a[constraint.node]);
    return std::pair<Assignment, bool>(std::move(a), keep);
  };
  auto res = detail::run_until_kept<Assignment>(n_kept, opt.budget, opt.threads,
                                                /*store_discarded=*/false, fn);
  return {std::move(res.records), res.trials};
}

// Exact conditional sampler: draws i.i.d. from condition(exact_joint(model),
// constraint) with a single uniform per draw and never rejects. The only
// observable difference from rejection_sample is the keep rate, which is 1.
class ConstrainedSampler {
 public:
  ConstrainedSampler(const CausalModel& model, const ColliderConstraint& constraint)
      : joint_(condition(exact_joint(model), constraint)) {
    double cum = 0.0;
    for (std::size_t idx = 0; idx < joint_.probs.size(); ++idx) {
      if (joint_.probs[idx] > 0.0) {
        cum += joint_.probs[idx];
        support_.push_back(idx);
        cdf_.push_back(cum);
      }
    }
    cdf_.back() = 1.0;  // table is normalized within 1e-9; close the gap
  }

  Assignment draw(RandomStream& stream) const {
    Assignment a;
    draw_into(stream, a);
    return a;
  }

  void draw_into(RandomStream& stream, Assignment& a) const {
    const double u = stream.next_unit();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    joint_.decode(support_[static_cast<std::size_t>(it - cdf_.begin())], a);
  }

  // Never rejects, by construction.
  double keep_rate() const { return 1.0; }

  // Probability of the conditioning event under the unconstrained model,
  // i.e. what a rejection sampler's keep rate would have been.
  double event_probability() const { return joint_.keep_rate; }

  const ExactJoint& joint() const { return joint_; }

 private:
  ExactJoint joint_;
  std::vector<std::size_t> support_;
  std::vector<double> cdf_;
};

inline ConstrainedSampler constrain(const CausalModel& model,
                                    const ColliderConstraint& constraint) {
  return {model, constraint};
}

// do-operator: sever `node` from its parents and pin it to `value`.
inline CausalModel intervene(const CausalModel& model, NodeId node, int value) {
  if (node >= model.node_count()) throw ModelError("intervention node out of range");
  const int card = model.nodes()[node].cardinality();
  if (value < 0 || value >= card) throw ModelError("intervention value out of range");
  CausalModel out;
  for (NodeId id = 0; id < model.node_count(); ++id) {
    const Node& n = model.nodes()[id];
    if (id == node) {
      std::vector<double> row(card, 0.0);
      row[static_cast<std::size_t>(value)] = 1.0;
      out.add_node(n.name, {}, {row});
    } else {
      out.add_node(n.name, n.parents, n.cpt);
    }
  }
  out.seal();
  return out;
}

// The "what if I had chosen differently" contrast: distribution of `target`
// (i) under do(cause=value) in the plain model, (ii) observed, conditioning
// on cause=value and the constraint, (iii) under do(cause=value) with the
// constraint still enforced. do_matches_plain flags whether the constraint
// leaves the interventional answer unchanged.
struct CounterfactualReport {
  std::vector<double> do_plain;
  std::vector<double> conditioned;
  std::vector<double> do_constrained;
  bool do_matches_plain = false;
};

inline CounterfactualReport counterfactual_compare(
    const CausalModel& model, NodeId cause, int cause_value, NodeId target,
    const std::optional<ColliderConstraint>& constraint = std::nullopt) {
  CounterfactualReport report;
  const ExactJoint j_do = exact_joint(intervene(model, cause, cause_value));
  report.do_plain = j_do.marginal(target);

  ExactJoint j_obs =
      condition(exact_joint(model), ColliderConstraint{cause, {cause_value}});
  if (constraint) j_obs = condition(j_obs, *constraint);
  report.conditioned = j_obs.marginal(target);

  if (constraint) {
    report.do_constrained = condition(j_do, *constraint).marginal(target);
  } else {
    report.do_constrained = report.do_plain;
  }

  double delta = 0.0;
  for (std::size_t k = 0; k < report.do_plain.size(); ++k)
    delta = std::max(delta, std::abs(report.do_plain[k] - report.do_constrained[k]));
  report.do_matches_plain = delta <= 1e-9;
  return report;
}

}  // namespace qrps
