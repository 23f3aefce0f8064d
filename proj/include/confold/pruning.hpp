#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "confold/model.hpp"

namespace confold {

struct WilsonParams {
  std::size_t n_p = 0;  // covered examples of the target class
  std::size_t n = 0;    // covered examples of any class
  double z = 3.0;
};

/// Centre of the Wilson score interval, (n_p + z^2/2) / (n + z^2).
double wilson(const WilsonParams& p);
inline double wilson(std::size_t n_p, std::size_t n, double z = 3.0) { return wilson({n_p, n, z}); }

/// Drops `victim` from `rules`, erases references to its head when no other
/// definition of that head remains, and collects rules that are no longer
/// reachable from the original roots (heads nobody in `rules` references).
/// Throws Error if `victim` is not in `rules`.
std::vector<Rule> remove_rule(std::span<const Rule> rules, const Rule& victim);

/// Improvement-threshold pruning of the exceptions below top-level rule `r`.
/// An exception is removed when taking it out costs less than `threshold`
/// confidence; surviving exceptions are searched recursively.
std::vector<Rule> evaluate_exceptions(const Rule& r, std::vector<Rule> aux, std::span<const Example* const> pos,
                                      std::span<const Example* const> neg, double threshold, double z = 3.0);

std::vector<Rule> ev_ex_loop(const Rule& r, std::vector<Rule> aux, const Rule& current,
                             std::span<const Example* const> pos, std::span<const Example* const> neg,
                             double threshold, double z = 3.0);

/// Keeps top-level rules with confidence >= t_con (and fixed rules), in order.
Program confidence_filter(const Program& program, double t_con);

}  // namespace confold
