// End-to-end training without any JSON: configure a run in code, train,
// and read the per-round metrics straight from the result.

#include <marsit/trainer.hpp>

#include <cstdio>
#include <string>

int main() {
    using namespace marsit;

    RunConfig cfg;
    cfg.mode = SyncMode::marsit;
    cfg.workers = 4;
    cfg.rounds = 60;
    cfg.full_precision_period = 20; // dense sync every 20th round
    cfg.eta_l = 0.05;               // explicit stepsizes; omit to use the
    cfg.eta_s = 0.005;              // 1/sqrt defaults derived from T, M, D
    cfg.global_seed = 42;
    cfg.model = ModelConfig{ModelConfig::Kind::least_squares, 0};
    cfg.dataset = DatasetConfig{DatasetConfig::Source::synthetic, 256, 16, 0.1,
                                std::nullopt, {}};
    cfg.validate();

    const TrainResult result = train(cfg);

    std::puts("round |    loss    | payload bits | matching");
    std::puts("------+------------+--------------+---------");
    for (const MetricsRecord& r : result.metrics) {
        if (r.round % 10 != 0 && r.round + 1 != result.metrics.size()) continue;
        const std::string matching =
            r.matching_rate ? std::to_string(*r.matching_rate) : std::string("dense");
        std::printf("%5llu | %10.6f | %12llu | %s\n",
                    static_cast<unsigned long long>(r.round), r.loss,
                    static_cast<unsigned long long>(r.round_bits), matching.c_str());
    }
    std::printf("\nfinal loss %.6f after %zu rounds (%s)\n", result.final_loss,
                result.metrics.size(), result.diverged ? "diverged" : "converged");
    return 0;
}
