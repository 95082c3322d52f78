#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fraxnet/augment.hpp"
#include "fraxnet/batch.hpp"
#include "fraxnet/error.hpp"
#include "fraxnet/metrics.hpp"
#include "fraxnet/model.hpp"
#include "fraxnet/model_io.hpp"
#include "fraxnet/optim.hpp"

namespace fraxnet {

struct TrainSeeds {
    std::uint64_t shuffle = 1;
    std::uint64_t augment = 2;
    std::uint64_t dropout = 3;
};

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::size_t early_stop_patience = 10;
    double early_stop_min_delta = 1e-4;
    std::filesystem::path checkpoint_path;  // empty: keep the best weights in memory only
    TrainSeeds seeds;
    bool oversample_minority = false;
    double threshold = 0.5;

    void validate() const
    {
        if (epochs < 1) throw ValueError("epochs must be at least 1");
        if (batch_size < 1) throw ValueError("batch size must be at least 1");
    }
};

struct OptimConfig {
    AdamOptions adam;
    double plateau_factor = 0.1;
    std::size_t plateau_patience = 5;
    double plateau_min_delta = 1e-4;
    double min_lr = 1e-6;
    double positive_class_weight = 1.0;  // 1 = unweighted BCE
};

struct HistoryRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double val_precision = 0.0;
    double val_recall = 0.0;
    double lr = 0.0;  // rate used during this epoch
};

struct EarlyStopState {
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t epochs_without_improvement = 0;

    /// Returns true when training should stop.
    bool update(std::size_t epoch, double val_loss, double min_delta, std::size_t patience)
    {
        if (val_loss < best_val_loss - min_delta) {
            best_val_loss = val_loss;
            best_epoch = epoch;
            epochs_without_improvement = 0;
            return false;
        }
        ++epochs_without_improvement;
        return epochs_without_improvement >= patience;
    }
};

struct EpochDecision {
    double next_lr;
    bool checkpoint;
    bool stop;
};

/// End-of-epoch callbacks in their fixed order: reduce-on-plateau, then
/// best-weights checkpoint (strict improvement of validation loss), then
/// early stopping.
class EpochCallbacks {
public:
    EpochCallbacks(const TrainConfig& train, const OptimConfig& optim) : train_(train)
    {
        plateau_.factor = optim.plateau_factor;
        plateau_.patience = optim.plateau_patience;
        plateau_.min_delta = optim.plateau_min_delta;
        plateau_.min_lr = optim.min_lr;
    }

    EpochDecision on_epoch_end(std::size_t epoch, double val_loss, double lr)
    {
        EpochDecision d{};
        d.next_lr = plateau_update(plateau_, val_loss, lr);
        d.checkpoint = val_loss < best_checkpoint_loss_;
        if (d.checkpoint) {
            best_checkpoint_loss_ = val_loss;
            best_checkpoint_epoch_ = epoch;
        }
        d.stop = early_.update(epoch, val_loss, train_.early_stop_min_delta, train_.early_stop_patience);
        return d;
    }

    std::size_t best_epoch() const noexcept { return best_checkpoint_epoch_; }
    double best_val_loss() const noexcept { return best_checkpoint_loss_; }
    const PlateauState& plateau() const noexcept { return plateau_; }
    const EarlyStopState& early_stop() const noexcept { return early_; }

private:
    TrainConfig train_;
    PlateauState plateau_;
    EarlyStopState early_;
    double best_checkpoint_loss_ = std::numeric_limits<double>::infinity();
    std::size_t best_checkpoint_epoch_ = 0;
};

struct EvalResult {
    double loss = 0.0;
    ConfusionMatrix cm;
};

/// Infer-mode loss and confusion matrix over one split. Loss is accumulated
/// per sample in split order, so the result does not depend on batch size.
template <Real T>
EvalResult evaluate_split(const Model<T>& model, const ImageDataset& data, Split split, std::size_t batch_size = 32,
                          double threshold = 0.5)
{
    auto stream = batch_iter<T>(data, split, batch_size, BatchOptions{.shuffle = false});
    double total = 0.0;
    std::size_t count = 0;
    EvalResult r;
    while (auto b = stream.next()) {
        auto pass = model.forward_infer(b->images);
        const auto& logits = pass.graph.value(pass.logits);
        const auto& probs = pass.graph.value(pass.probabilities);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const auto y = static_cast<int>(b->labels[i]);
            const double z = logits[i];
            total += y == 1 ? detail::softplus(-z) : detail::softplus(z);
            r.cm.add(y, static_cast<int>(classify(probs[i], threshold)));
            ++count;
        }
    }
    r.loss = total / static_cast<double>(count);
    return r;
}

template <Real T>
struct TrainHooks {
    /// Replaces validation-split evaluation (scripted losses in tests).
    std::function<EvalResult(const Model<T>&, std::size_t epoch)> validate;
    /// Observes the model after each epoch's callbacks have run.
    std::function<void(const HistoryRecord&, const Model<T>&)> on_epoch_end;
};

template <Real T>
struct TrainResult {
    Model<T> best_model;
    std::vector<HistoryRecord> history;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

/// Runs the epoch loop: train batches (forward, BCE, backward, Adam), then
/// validation in infer mode, then the callbacks. Returns the weights of the
/// epoch with the lowest validation loss.
template <Real T>
TrainResult<T> train(Model<T> model, const ImageDataset& data, const TrainConfig& cfg, const OptimConfig& optim,
                     const AugmentConfig& augment_cfg = AugmentConfig{.enabled = false}, const TrainHooks<T>& hooks = {})
{
    cfg.validate();
    if (augment_cfg.enabled) augment_cfg.validate();
    if (data.count(Split::train) == 0) throw ValueError("training split is empty");
    if (!hooks.validate && data.count(Split::val) == 0) throw ValueError("validation split is empty");

    AdamState<T> adam(optim.adam);
    EpochCallbacks callbacks(cfg, optim);
    TrainResult<T> result{model, {}, 0, false};
    std::uint64_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        BatchOptions bo;
        bo.shuffle_seed = cfg.seeds.shuffle;
        bo.epoch = epoch;
        bo.augment = augment_cfg;
        bo.augment_seed = cfg.seeds.augment;
        bo.oversample_minority = cfg.oversample_minority;
        auto stream = batch_iter<T>(data, Split::train, cfg.batch_size, bo);

        double loss_sum = 0.0;
        std::size_t seen = 0, correct = 0, batch_no = 0;
        while (auto b = stream.next()) {
            ++batch_no;
            try {
                auto pass = model.forward(b->images, Mode::train, mix_seed({cfg.seeds.dropout, step++}));
                auto loss = pass.graph.bce_with_logits(pass.logits, b->labels, optim.positive_class_weight);
                const double lv = pass.graph.value(loss)[0];
                if (!std::isfinite(lv)) throw NumericError("non-finite training loss");
                const auto& probs = pass.graph.value(pass.probabilities);
                const auto n = b->labels.size();
                for (std::size_t i = 0; i < n; ++i)
                    if (static_cast<int>(classify(probs[i], cfg.threshold)) == static_cast<int>(b->labels[i]))
                        ++correct;
                loss_sum += lv * static_cast<double>(n);
                seen += n;

                auto grads = pass.graph.backward(loss);
                adam_step(model.parameters(), grads.params(), adam);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no) + ": " +
                                   e.what());
            }
        }

        EvalResult val;
        try {
            val = hooks.validate ? hooks.validate(model, epoch)
                                 : evaluate_split(model, data, Split::val, cfg.batch_size, cfg.threshold);
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + ", validation: " + e.what());
        }
        if (!std::isfinite(val.loss))
            throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
        const auto rep = report(val.cm);

        HistoryRecord h;
        h.epoch = epoch;
        h.train_loss = loss_sum / static_cast<double>(seen);
        h.val_loss = val.loss;
        h.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
        h.val_accuracy = rep.accuracy.value;
        h.val_precision = rep.fractured.precision.value;
        h.val_recall = rep.fractured.recall.value;
        h.lr = adam.lr;
        result.history.push_back(h);

        const auto decision = callbacks.on_epoch_end(epoch, val.loss, adam.lr);
        adam.lr = decision.next_lr;
        if (decision.checkpoint) {
            result.best_model = model;
            result.best_epoch = epoch;
            if (!cfg.checkpoint_path.empty()) save_model(model, cfg.checkpoint_path);
        }
        if (hooks.on_epoch_end) hooks.on_epoch_end(h, model);
        if (decision.stop) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// History CSV
// ---------------------------------------------------------------------------

inline std::string history_csv(std::span<const HistoryRecord> history)
{
    std::string out = "epoch,train_loss,val_loss,train_acc,val_acc,val_precision,val_recall,lr\n";
    char buf[256];
    for (const auto& h : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", h.epoch, h.train_loss, h.val_loss,
                      h.train_accuracy, h.val_accuracy, h.val_precision, h.val_recall, h.lr);
        out += buf;
    }
    return out;
}

inline void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRecord> history)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write history '" + path.string() + "'");
    out << history_csv(history);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace fraxnet
