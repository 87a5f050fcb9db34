// Step-by-step transcription of the signed-knockoff procedure that recomputes
// orderings, regions and counts from scratch at every step. Quadratic; meant
// for cross-checking `run` on small instances.

#pragma once

#include "sko/procedure.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sko::reference {

// Chooses a side after k steps with i positive and j negative pairs accepted.
// Only consulted when neither side is exhausted.
using Chooser = std::function<Side(std::size_t k, std::size_t i, std::size_t j)>;

struct Trace {
    std::vector<std::size_t> rejected;
    double lower = -1.0;
    double upper = 1.0;
    StopReason stopped_by = StopReason::Exhaustion;
    std::vector<double> fdr_hat_trace;
    std::vector<Side> choices;
};

Trace run_literal(std::span<const double> q, double alpha, const Chooser& choose);

Chooser alternate_chooser();
// Uses the q values directly: distance |q - 1/2| or |q + 1/2| of the next pair per side.
Chooser nearest_chooser(std::span<const double> q);
// Delegates to a library strategy through masked views of `pairs`.
Chooser strategy_chooser(const PairSet& pairs, SideStrategy& strategy);

// Empty when equal; otherwise a description of the first difference.
std::string compare(const Trace& expected, const ProcedureResult& actual);

struct SelfTestSummary {
    std::size_t instances = 0;
    std::size_t mismatches = 0;
    std::vector<std::string> details;  // first few mismatches
};

// Random instances with n <= max_n, random alpha, each of the three
// strategies; every run is compared against run_literal.
SelfTestSummary self_test(std::size_t instances, std::size_t max_n, std::uint64_t seed);

}  // namespace sko::reference
