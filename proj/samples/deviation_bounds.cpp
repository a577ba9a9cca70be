// Side-by-side Monte-Carlo estimate of how far each compressed aggregate
// drifts from the exact mean gradient, as the worker count grows.  The
// averaged variant is flat; the cascaded chain compounds per hop.

#include <marsit/analysis.hpp>

#include <cstdio>

int main() {
    using namespace marsit;

    constexpr std::size_t kDim = 16;
    constexpr double kNorm = 1.0;
    constexpr std::size_t kTrials = 4000;
    constexpr std::uint64_t kSeed = 7;

    std::puts("workers | averaged est (bound) | cascaded est (bound)");
    std::puts("--------+----------------------+---------------------");
    for (std::uint32_t m = 1; m <= 5; ++m) {
        DeviationConfig cfg{m, kDim, kNorm, kTrials, DeviationMode::ps, kSeed};
        const DeviationResult ps = deviation_experiment(cfg);
        cfg.mode = DeviationMode::cascading;
        const DeviationResult casc = deviation_experiment(cfg);
        std::printf("%7u | %12.4f (%5.1f) | %12.2f (%.3g)\n", m, ps.estimate, ps.bound,
                    casc.estimate, casc.bound);
    }
    return 0;
}
