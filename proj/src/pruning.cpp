#include "confold/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_set>

#include "confold/learner.hpp"

namespace confold {

double wilson(const WilsonParams& p) {
  if (p.n_p > p.n) throw Error("wilson: n_p exceeds n");
  if (!(p.z > 0.0) || !std::isfinite(p.z)) throw Error("wilson: z must be > 0");
  const double z2 = p.z * p.z;
  return (static_cast<double>(p.n_p) + z2 / 2.0) / (static_cast<double>(p.n) + z2);
}

std::vector<Rule> remove_rule(std::span<const Rule> rules, const Rule& victim) {
  auto it = std::find(rules.begin(), rules.end(), victim);
  if (it == rules.end()) throw Error("remove_rule: rule '" + victim.head + "' is not in the set");

  std::unordered_set<std::string> referenced;
  for (const auto& r : rules) {
    referenced.insert(r.calls.begin(), r.calls.end());
    referenced.insert(r.exceptions.begin(), r.exceptions.end());
  }
  std::vector<std::string> roots;
  for (const auto& r : rules)
    if (!referenced.contains(r.head) && std::find(roots.begin(), roots.end(), r.head) == roots.end())
      roots.push_back(r.head);

  std::vector<Rule> kept;
  kept.reserve(rules.size());
  for (auto r = rules.begin(); r != rules.end(); ++r)
    if (r != it) kept.push_back(*r);

  const bool still_defined =
      std::any_of(kept.begin(), kept.end(), [&](const Rule& r) { return r.head == victim.head; });
  if (!still_defined) {
    for (auto& r : kept) {
      std::erase(r.calls, victim.head);
      std::erase(r.exceptions, victim.head);
    }
    std::erase(roots, victim.head);
  }

  std::unordered_map<std::string, std::vector<const Rule*>> by_head;
  for (const auto& r : kept) by_head[r.head].push_back(&r);
  std::unordered_set<std::string> live;
  std::function<void(const std::string&)> mark = [&](const std::string& head) {
    if (!live.insert(head).second) return;
    auto found = by_head.find(head);
    if (found == by_head.end()) return;
    for (const Rule* r : found->second) {
      for (const auto& c : r->calls) mark(c);
      for (const auto& e : r->exceptions) mark(e);
    }
  };
  for (const auto& root : roots) mark(root);
  std::erase_if(kept, [&](const Rule& r) { return !live.contains(r.head); });
  return kept;
}

std::vector<Rule> ev_ex_loop(const Rule& r, std::vector<Rule> aux, const Rule& current,
                             std::span<const Example* const> pos, std::span<const Example* const> neg,
                             double threshold, double z) {
  const std::vector<std::string> exceptions = current.exceptions;
  for (const auto& e : exceptions) {
    std::vector<Rule> defs;
    for (const auto& rule : aux)
      if (rule.head == e) defs.push_back(rule);
    for (const auto& victim : defs) {
      if (std::find(aux.begin(), aux.end(), victim) == aux.end()) continue;
      std::vector<Rule> trial = remove_rule(aux, victim);
      const double c = conf(r, aux, pos, neg, z);
      const double c_t = conf(r, trial, pos, neg, z);
      if (c - c_t < threshold) {
        aux = std::move(trial);  // tolerable loss of confidence
      } else {
        aux = ev_ex_loop(r, std::move(aux), victim, pos, neg, threshold, z);
      }
    }
  }
  return aux;
}

std::vector<Rule> evaluate_exceptions(const Rule& r, std::vector<Rule> aux, std::span<const Example* const> pos,
                                      std::span<const Example* const> neg, double threshold, double z) {
  if (aux.empty()) return aux;
  if (r.calls.empty()) throw MalformedProgram("evaluate_exceptions: top-level rule has no body symbol");
  if (threshold < 0.0) throw Error("evaluate_exceptions: threshold must be >= 0");
  const std::string& body = r.calls.front();
  std::vector<Rule> bodies;
  for (const auto& rule : aux)
    if (rule.head == body) bodies.push_back(rule);
  if (bodies.empty()) throw MalformedProgram("evaluate_exceptions: body symbol '" + body + "' undefined");
  // One sweep can leave an exception whose contribution only dropped below
  // the threshold after its own sub-exceptions went, so sweep until stable.
  while (true) {
    const std::size_t before = aux.size();
    for (const auto& b : bodies) {
      auto current = std::find_if(aux.begin(), aux.end(), [&](const Rule& x) {
        return x.head == b.head && x.body == b.body && x.calls == b.calls;
      });
      if (current == aux.end()) continue;
      const Rule snapshot = *current;
      aux = ev_ex_loop(r, std::move(aux), snapshot, pos, neg, threshold, z);
    }
    if (aux.size() == before) return aux;
  }
}

Program confidence_filter(const Program& program, double t_con) {
  std::vector<AnnotatedRule> kept;
  for (const auto& ar : program.rules())
    if (ar.fixed || ar.confidence >= t_con) kept.push_back(ar);
  return Program(program.schema(), program.target(), program.classes(), std::move(kept));
}

}  // namespace confold
