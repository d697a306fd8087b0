#include "milrisk/training.hpp"
#include "milrisk/error.hpp"
#include "milrisk/eval.hpp"
#include "milrisk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace milrisk {

namespace {

constexpr double kProbClamp = 1e-12;

// Seed streams derived from TrainConfig::seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kHoldoutStream = 1;
constexpr std::uint64_t kEpochStreamBase = 1000;

void trunk_backward(const ModelParams& params, const ForwardCache& cache, std::span<const double> dembed,
                    ModelParams& grads) {
    const auto& a = params.arch;
    std::vector<double> dconv2(cache.conv2.size(), 0.0);
    kernels::maxpool_backward(a.pool2, cache.arg2, dembed, dconv2);
    std::vector<double> dpool1(cache.pool1.size(), 0.0);
    kernels::conv1d_backward(a.conv2, cache.pool1, params.layers[1].weights, dconv2, grads.layers[1].weights,
                             grads.layers[1].bias, dpool1);
    std::vector<double> dconv1(cache.conv1.size(), 0.0);
    kernels::maxpool_backward(a.pool1, cache.arg1, dpool1, dconv1);
    kernels::conv1d_backward(a.conv1, cache.input, params.layers[0].weights, dconv1, grads.layers[0].weights,
                             grads.layers[0].bias, {});
}

// Sum slots[0..count) into slots[0] by pairwise halving; the order is fixed.
void pairwise_reduce(std::vector<ModelParams>& slots, std::size_t count) {
    for (std::size_t stride = 1; stride < count; stride *= 2) {
        for (std::size_t i = 0; i + stride < count; i += 2 * stride) {
            slots[i].add(slots[i + stride]);
        }
    }
}

int instance_count_check(std::span<const InstanceBag> bags) {
    int beats = 0;
    for (const auto& bag : bags) {
        if (bag.instances.empty()) {
            throw Error(ErrorKind::EmptyBag, "training bag '" + bag.patient_id + "' is empty");
        }
        if (beats == 0) {
            beats = bag.instances.front().beats;
        } else if (bag.instances.front().beats != beats) {
            throw Error(ErrorKind::ShapeMismatch, "training bags mix instance lengths");
        }
    }
    return beats;
}

double validation_auc(const ModelParams& params, std::span<const InstanceBag> bags, std::span<const int> labels,
                      const std::vector<std::size_t>& val, const AggregatorSpec& spec) {
    std::vector<double> scores;
    std::vector<int> y;
    for (std::size_t i : val) {
        scores.push_back(score_patient(bags[i], params, spec, 0).score);
        y.push_back(labels[i]);
    }
    return roc_auc(scores, y);
}

struct ItemRef {
    std::size_t bag;
    std::size_t instance;
};

}  // namespace

void TrainConfig::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
    if (!(learning_rate > 0.0)) bad("learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) bad("beta1 must be in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) bad("beta2 must be in (0, 1)");
    if (!(epsilon > 0.0)) bad("epsilon must be positive");
    if (batch_size < 2) bad("batch_size must be at least 2");
    if (set_batch_bags < 2) bad("set_batch_bags must be at least 2");
    if (max_epochs < 0) bad("max_epochs must be non-negative");
    if (early_stop_patience < 1) bad("early_stop_patience must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) bad("validation_fraction must be in [0, 1)");
    aggregator.validate();
}

OptimizerState OptimizerState::for_params(const ModelParams& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
}

double bce_loss(double p, int y) {
    const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return y == 1 ? -std::log(q) : -std::log1p(-q);
}

void backward_from_logit(const ModelParams& params, const ForwardCache& cache, double dlogit, ModelParams& grads) {
    const auto& a = params.arch;
    switch (a.variant) {
        case Variant::CNN: {
            std::vector<double> dembed(cache.pool2.size(), 0.0);
            const Layer& head = params.layers[2];
            kernels::dense_backward(1, cache.pool2.size(), head.weights, cache.pool2, std::span<const double>(&dlogit, 1),
                                    grads.layers[2].weights, grads.layers[2].bias, dembed);
            trunk_backward(params, cache, dembed, grads);
            break;
        }
        case Variant::LR:
            kernels::dense_backward(1, a.input_length, params.layers[0].weights, cache.input,
                                    std::span<const double>(&dlogit, 1), grads.layers[0].weights,
                                    grads.layers[0].bias, {});
            break;
        case Variant::FC2:
        case Variant::FC3: {
            std::vector<double> dhidden(a.hidden, 0.0);
            kernels::dense_backward(1, a.hidden, params.layers[1].weights, cache.hidden,
                                    std::span<const double>(&dlogit, 1), grads.layers[1].weights,
                                    grads.layers[1].bias, dhidden);
            for (std::size_t h = 0; h < a.hidden; ++h) {
                dhidden[h] *= 1.0 - cache.hidden[h] * cache.hidden[h];
            }
            kernels::dense_backward(a.hidden, a.input_length, params.layers[0].weights, cache.input, dhidden,
                                    grads.layers[0].weights, grads.layers[0].bias, {});
            break;
        }
        case Variant::SET:
            throw Error(ErrorKind::ShapeMismatch, "backward on a SET model needs set_backward");
    }
}

void backward(const ModelParams& params, const ForwardCache& cache, int y, ModelParams& grads) {
    backward_from_logit(params, cache, cache.prob - static_cast<double>(y), grads);
}

void set_backward(const ModelParams& params, const SetCache& cache, int y, ModelParams& grads) {
    const double dlogit = cache.prob - static_cast<double>(y);
    const std::size_t e = cache.pooled.size();
    std::vector<double> dpooled(e, 0.0);
    kernels::dense_backward(1, e, params.layers[2].weights, cache.pooled, std::span<const double>(&dlogit, 1),
                            grads.layers[2].weights, grads.layers[2].bias, dpooled);
    const double inv_n = 1.0 / static_cast<double>(cache.items.size());
    for (double& v : dpooled) {
        v *= inv_n;
    }
    for (std::size_t i : cache.order) {
        trunk_backward(params, cache.items[i], dpooled, grads);
    }
}

void adam_step(ModelParams& params, const ModelParams& grads, OptimizerState& state, const TrainConfig& config) {
    if (grads.layers.size() != params.layers.size() || grads.parameter_count() != params.parameter_count() ||
        state.first_moment.parameter_count() != params.parameter_count()) {
        throw Error(ErrorKind::ShapeMismatch, "gradient/optimizer state shape differs from parameters");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(config.beta1, t);
    const double correct2 = 1.0 - std::pow(config.beta2, t);
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correct1;
            const double v_hat = v[i] / correct2;
            p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        update(params.layers[l].weights, grads.layers[l].weights, state.first_moment.layers[l].weights,
               state.second_moment.layers[l].weights);
        update(params.layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
               state.second_moment.layers[l].bias);
    }
}

std::vector<std::vector<std::size_t>> balanced_batches(std::span<const int> labels, std::size_t batch_size,
                                                        std::uint64_t seed) {
    if (batch_size < 2) {
        throw Error(ErrorKind::Config, "batch_size must be at least 2");
    }
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == 1 ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) {
        throw Error(ErrorKind::OneClassOnly, "balanced batches need positive and negative items");
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(neg));
    const std::size_t half = batch_size / 2;
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < neg.size(); start += half) {
        const std::size_t take = std::min(half, neg.size() - start);
        std::vector<std::size_t> batch;
        batch.reserve(2 * take);
        for (std::size_t i = 0; i < take; ++i) {
            batch.push_back(pos[rng.below(pos.size())]);
        }
        batch.insert(batch.end(), neg.begin() + static_cast<std::ptrdiff_t>(start),
                     neg.begin() + static_cast<std::ptrdiff_t>(start + take));
        batches.push_back(std::move(batch));
    }
    return batches;
}

TrainResult train(Variant variant, std::span<const InstanceBag> bags, std::span<const int> labels,
                  const TrainConfig& config) {
    config.validate();
    if (bags.size() != labels.size()) {
        throw Error(ErrorKind::ShapeMismatch, "one label per training bag is required");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw Error(ErrorKind::Config, "training labels must be 0 or 1 (excluded patients removed)");
        }
    }
    if (std::count(labels.begin(), labels.end(), 1) == 0 || std::count(labels.begin(), labels.end(), 0) == 0) {
        throw Error(ErrorKind::OneClassOnly, "training data must contain both classes");
    }
    const int beats = instance_count_check(bags);
    const auto length = bags.front().instance_length();
    const int rate = static_cast<int>(length / static_cast<std::size_t>(beats));

    TrainResult result;
    result.params = init_params(ArchitectureDescriptor::make(variant, beats, rate),
                                derive_seed(config.seed, kInitStream));
    if (config.max_epochs == 0) {
        return result;
    }

    // Inner validation hold-out; skipped when a class is too small to split.
    std::vector<std::size_t> fit;
    std::vector<std::size_t> val;
    const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t n_neg = labels.size() - n_pos;
    if (config.validation_fraction > 0.0 && n_pos >= 2 && n_neg >= 2) {
        SplitPlan plan = holdout_split(labels, derive_seed(config.seed, kHoldoutStream), config.validation_fraction);
        fit = std::move(plan.train);
        val = std::move(plan.test);
    } else {
        for (std::size_t i = 0; i < bags.size(); ++i) {
            fit.push_back(i);
        }
    }

    // Training items: instances for instance-level variants, bags for SET.
    const bool bag_level = variant == Variant::SET;
    std::vector<ItemRef> items;
    std::vector<int> item_labels;
    for (std::size_t b : fit) {
        if (bag_level) {
            items.push_back({b, 0});
            item_labels.push_back(labels[b]);
            continue;
        }
        for (std::size_t i = 0; i < bags[b].size(); ++i) {
            items.push_back({b, i});
            item_labels.push_back(labels[b]);
        }
    }
    const std::size_t batch_size = bag_level ? config.set_batch_bags : config.batch_size;

    ModelParams& params = result.params;
    OptimizerState state = OptimizerState::for_params(params);
    std::vector<ModelParams> slots(2 * (batch_size / 2), params.zeros_like());
    std::vector<double> losses(slots.size(), 0.0);

    ModelParams best = params;
    double best_auc = -std::numeric_limits<double>::infinity();
    int stale = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto batches = balanced_batches(item_labels, batch_size,
                                              derive_seed(config.seed, kEpochStreamBase + static_cast<std::uint64_t>(epoch)));
        double epoch_loss = 0.0;
        for (const auto& batch : batches) {
            const std::size_t count = batch.size();
#pragma omp parallel
            {
                ForwardCache cache;
                SetCache set_cache;
#pragma omp for schedule(static)
                for (std::size_t s = 0; s < count; ++s) {
                    const ItemRef ref = items[batch[s]];
                    const int y = item_labels[batch[s]];
                    slots[s].set_zero();
                    if (bag_level) {
                        const double p = set_forward(params, bags[ref.bag].instances, set_cache);
                        losses[s] = bce_loss(p, y);
                        set_backward(params, set_cache, y, slots[s]);
                    } else {
                        const double p = forward(params, bags[ref.bag].instances[ref.instance].values, cache);
                        losses[s] = bce_loss(p, y);
                        backward(params, cache, y, slots[s]);
                    }
                }
            }
            pairwise_reduce(slots, count);
            ModelParams& grads = slots[0];
            grads.scale(1.0 / static_cast<double>(count));
            double batch_loss = 0.0;
            for (std::size_t s = 0; s < count; ++s) {
                batch_loss += losses[s];
            }
            batch_loss /= static_cast<double>(count);
            if (!std::isfinite(batch_loss) || !grads.all_finite()) {
                throw Error(ErrorKind::NonFiniteLoss, "non-finite loss or gradient in epoch " + std::to_string(epoch) +
                                                          " (" + std::string(to_string(variant)) + ")");
            }
            adam_step(params, grads, state, config);
            epoch_loss += batch_loss;
        }
        epoch_loss /= static_cast<double>(batches.size());

        const double auc = val.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : validation_auc(params, bags, labels, val, config.aggregator);
        result.history.push_back({epoch, epoch_loss, auc});

        if (val.empty()) {
            best = params;
            result.best_epoch = epoch;
            continue;
        }
        if (auc > best_auc) {
            best_auc = auc;
            best = params;
            result.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= config.early_stop_patience) {
            break;
        }
    }
    result.params = std::move(best);
    return result;
}

void write_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.precision(17);
    out << "epoch,train_loss,val_auc\n";
    for (const auto& r : history) {
        out << r.epoch << ',' << r.train_loss << ',';
        if (std::isnan(r.val_auc)) {
            out << "nan";
        } else {
            out << r.val_auc;
        }
        out << '\n';
    }
}

}  // namespace milrisk
