// Side-selection rules. Each reads only the MaskedView handed to it.

#pragma once

#include "sko/mixture_em.hpp"
#include "sko/procedure.hpp"

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>

namespace sko {

// Positive on even steps, negative on odd steps.
class AlternateStrategy final : public SideStrategy {
public:
    Side choose(const MaskedView& view) override;
    std::string name() const override { return "alternate"; }
};

// Shrinks the side whose next pair is closer to +-1/2; ties go positive.
class NearestStrategy final : public SideStrategy {
public:
    Side choose(const MaskedView& view) override;
    std::string name() const override { return "nearest"; }
};

struct LfdrOptions {
    // Accepted steps between EM refits; 0 selects max(1, n/50).
    std::size_t refit_interval = 0;
    std::size_t max_iter = 200;
    double tol = 1e-6;
    std::optional<MixtureParams> init;

    static constexpr std::size_t kFitOnce = std::numeric_limits<std::size_t>::max();
};

// Fits the two-group model on the masked data and shrinks the side whose next
// pair has the larger local FDR (ties go positive; when pi0 == 0 makes every
// Lfdr zero, the lower pair density counts as the larger Lfdr). The model is refit every
// refit_interval accepted pairs, warm-started from the previous fit.
class LfdrStrategy final : public SideStrategy {
public:
    explicit LfdrStrategy(LfdrOptions options = {});

    Side choose(const MaskedView& view) override;
    std::string name() const override { return "lfdr"; }

    const std::optional<MixtureParams>& params() const { return params_; }
    std::size_t fits() const { return fits_; }

private:
    void refit(const MaskedView& view);

    LfdrOptions options_;
    std::optional<MixtureParams> params_;
    std::size_t next_refit_ = 0;
    std::size_t fits_ = 0;
};

std::size_t default_refit_interval(std::size_t n);

// Builds a strategy from its name: "alternate", "nearest" or "lfdr".
std::unique_ptr<SideStrategy> make_strategy(const std::string& name, LfdrOptions options = {});

}  // namespace sko
