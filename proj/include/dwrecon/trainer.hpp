#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "dwrecon/model.hpp"
#include "dwrecon/tensor.hpp"

namespace dw::train {

struct TrainConfig {
    std::size_t batch_size = 10;
    double initial_lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t lr_patience_epochs = 20;   // halve lr after this many epochs without improvement
    std::size_t stop_patience_epochs = 40; // stop training after this many
    std::size_t max_epochs = 500;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Adam first/second moment tensors mirroring the parameter shapes.
template <typename T>
struct AdamStateT {
    model::ModelParamsT<T> m;
    model::ModelParamsT<T> v;
    std::size_t step = 0;
};

template <typename T>
AdamStateT<T> make_adam_state(const model::ModelParamsT<T>& params);

/// One bias-corrected Adam update on a flat parameter block.
template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> m,
                 std::span<T> v, std::size_t step, double lr, double beta1, double beta2,
                 double epsilon);

/// Applies Adam to every parameter tensor. Throws on non-finite gradients.
template <typename T>
void adam_step(model::ModelParamsT<T>& params, const model::ModelParamsT<T>& grads,
               AdamStateT<T>& state, double lr, const TrainConfig& cfg);

enum class ScheduleAction { none, halved, stop };

struct ScheduleState {
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_improvement = 0;
    double current_lr = 0.0;
};

/// Early-stopping schedule: a strict decrease of the best validation loss
/// resets the counter; the counter reaching lr_patience halves the rate and
/// keeps counting; reaching stop_patience ends training.
ScheduleAction schedule_update(ScheduleState& state, double val_loss, const TrainConfig& cfg);

struct Sample {
    TensorF x;  // [m, H, W]
    TensorF y;  // [1, H, W]
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::size_t> train_idx, val_idx, test_idx;
};

/// Seeded permutation then partition into train/val/test.
void split_dataset(Dataset& ds, const double fractions[3], std::uint64_t seed);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    model::CheckpointF best;
    std::vector<EpochRecord> log;
    bool diverged = false;
    bool stopped_early = false;
};

/// Mean MSE of checkpoint outputs over the given sample indices.
double evaluate_loss(const model::CheckpointF& ckpt, const Dataset& ds,
                     std::span<const std::size_t> indices, std::size_t batch_size);

/// Mini-batch MSE minimization with Adam and the patience schedule.
/// `log_jsonl`, when set, receives one JSON record per epoch. `warm_start`
/// resumes from existing weights (with a fresh optimizer state).
TrainResult train(const model::ModelConfig& config, const Dataset& ds, const TrainConfig& tc,
                  std::ostream* log_jsonl = nullptr,
                  const std::function<void(const EpochRecord&)>& on_epoch = nullptr,
                  const model::CheckpointF* warm_start = nullptr);

}  // namespace dw::train
