#pragma once

#include "milrisk/aggregate.hpp"
#include "milrisk/instances.hpp"
#include "milrisk/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace milrisk {

/// Adam defaults plus the batching and early-stopping schedule.
struct TrainConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 128;     // instances, half of them positive
    std::size_t set_batch_bags = 8;   // bags per SET batch
    int max_epochs = 30;
    int early_stop_patience = 5;
    double validation_fraction = 0.2;  // of training patients, stratified
    std::uint64_t seed = 1;
    AggregatorSpec aggregator;         // used to score validation patients

    void validate() const;
};

struct OptimizerState {
    ModelParams first_moment;
    ModelParams second_moment;
    std::int64_t step = 0;

    static OptimizerState for_params(const ModelParams& params);
};

/// Binary cross-entropy with p clamped to [1e-12, 1 - 1e-12].
double bce_loss(double p, int y);

/// Accumulates d(bce)/d(params) for one instance into `grads` from a forward
/// cache of the same instance. Max-pool gradients go to the first maximal
/// position of each window.
void backward(const ModelParams& params, const ForwardCache& cache, int y, ModelParams& grads);

/// Same, starting from an arbitrary gradient at the logit.
void backward_from_logit(const ModelParams& params, const ForwardCache& cache, double dlogit, ModelParams& grads);

/// Gradient of the bag loss for a SET model.
void set_backward(const ModelParams& params, const SetCache& cache, int y, ModelParams& grads);

/// Adam with bias correction; increments the step counter.
void adam_step(ModelParams& params, const ModelParams& grads, OptimizerState& state, const TrainConfig& config);

/// One epoch of batches over labelled items (indices into `labels`). Each batch
/// pairs a slice of the shuffled negatives with as many positives drawn with
/// replacement, so every negative appears exactly once per epoch.
std::vector<std::vector<std::size_t>> balanced_batches(std::span<const int> labels, std::size_t batch_size,
                                                        std::uint64_t seed);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_auc = 0.0;  // NaN when no validation split was possible
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
};

/// Trains `variant` on labelled bags (labels 0/1, one per bag). Instance-level
/// variants learn from instances inheriting their bag label; SET learns from
/// whole bags. Returns the parameters of the epoch with the best validation
/// AUC. A pure function of its arguments.
TrainResult train(Variant variant, std::span<const InstanceBag> bags, std::span<const int> labels,
                  const TrainConfig& config);

/// `epoch,train_loss,val_auc`
void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history);

}  // namespace milrisk
