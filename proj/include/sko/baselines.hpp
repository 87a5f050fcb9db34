// Reference procedures: BH step-up and the oracle local-FDR procedure.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sko {

// Benjamini-Hochberg: rejects the k* smallest p-values, k* = max{k : p_(k) <= k alpha / n}.
// Returns ascending indices.
std::vector<std::size_t> bh(std::span<const double> p_values, double alpha);

// True mixture (1 - p1 - p2) N(0,1) + p1 N(mu1,1) + p2 N(mu2,1) on z-values.
struct OracleTruth {
    double p1 = 0.0;
    double p2 = 0.0;
    double mu1 = -3.0;
    double mu2 = 3.0;

    void validate() const;
};

double oracle_lfdr(double z, const OracleTruth& truth);

// Rejects the largest prefix of the Lfdr-sorted hypotheses whose running mean
// Lfdr is <= alpha. Returns ascending indices.
std::vector<std::size_t> oracle_procedure(std::span<const double> z_values,
                                          const OracleTruth& truth, double alpha);

// Same thresholding rule applied to precomputed local FDR values.
std::vector<std::size_t> lfdr_threshold(std::span<const double> lfdr, double alpha);

// Hook for procedures implemented elsewhere (e.g. weighted BH): z-values and
// p-values in, rejected indices out.
using ExternalProcedure = std::function<std::vector<std::size_t>(
    std::span<const double> z_values, std::span<const double> p_values, double alpha)>;

}  // namespace sko
