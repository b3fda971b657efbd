#include "dwrecon/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"

namespace dw::train {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
    if (!(initial_lr > 0)) throw ConfigError("train: initial_lr must be positive");
    if (lr_patience_epochs < 1 || stop_patience_epochs < 1)
        throw ConfigError("train: patience values must be positive");
    if (stop_patience_epochs < lr_patience_epochs)
        throw ConfigError("train: stop_patience must be >= lr_patience");
}

template <typename T>
AdamStateT<T> make_adam_state(const model::ModelParamsT<T>& params) {
    AdamStateT<T> st;
    for (const auto& lp : params.layers) {
        model::LayerParamsT<T> zm, zv;
        for (const auto& w : lp.weights) {
            zm.weights.emplace_back(w.dims());
            zv.weights.emplace_back(w.dims());
        }
        for (const auto& b : lp.biases) {
            zm.biases.emplace_back(b.size(), T{0});
            zv.biases.emplace_back(b.size(), T{0});
        }
        st.m.layers.push_back(std::move(zm));
        st.v.layers.push_back(std::move(zv));
    }
    return st;
}

template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> m,
                 std::span<T> v, std::size_t step, double lr, double beta1, double beta2,
                 double epsilon) {
    if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size())
        throw std::invalid_argument("adam: size mismatch");
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grads[i]);
        const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
        const double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        params[i] = static_cast<T>(static_cast<double>(params[i]) -
                                   lr * mhat / (std::sqrt(vhat) + epsilon));
    }
}

template <typename T>
void adam_step(model::ModelParamsT<T>& params, const model::ModelParamsT<T>& grads,
               AdamStateT<T>& state, double lr, const TrainConfig& cfg) {
    for (const auto& lp : grads.layers) {
        for (const auto& w : lp.weights)
            if (!w.all_finite())
                throw std::runtime_error("adam: non-finite weight gradient encountered");
        for (const auto& b : lp.biases)
            for (T g : b)
                if (!std::isfinite(static_cast<double>(g)))
                    throw std::runtime_error("adam: non-finite bias gradient encountered");
    }
    ++state.step;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& pl = params.layers[l];
        const auto& gl = grads.layers[l];
        for (std::size_t p = 0; p < pl.weights.size(); ++p) {
            adam_update<T>({pl.weights[p].data(), pl.weights[p].size()},
                           {gl.weights[p].data(), gl.weights[p].size()},
                           {state.m.layers[l].weights[p].data(), pl.weights[p].size()},
                           {state.v.layers[l].weights[p].data(), pl.weights[p].size()},
                           state.step, lr, cfg.beta1, cfg.beta2, cfg.epsilon);
            adam_update<T>({pl.biases[p].data(), pl.biases[p].size()},
                           {gl.biases[p].data(), gl.biases[p].size()},
                           {state.m.layers[l].biases[p].data(), pl.biases[p].size()},
                           {state.v.layers[l].biases[p].data(), pl.biases[p].size()},
                           state.step, lr, cfg.beta1, cfg.beta2, cfg.epsilon);
        }
    }
}

ScheduleAction schedule_update(ScheduleState& state, double val_loss, const TrainConfig& cfg) {
    if (!std::isfinite(val_loss))
        throw std::invalid_argument("schedule: validation loss must be finite");
    if (val_loss < state.best_val_loss) {
        state.best_val_loss = val_loss;
        state.epochs_since_improvement = 0;
        return ScheduleAction::none;
    }
    ++state.epochs_since_improvement;
    if (state.epochs_since_improvement >= cfg.stop_patience_epochs) return ScheduleAction::stop;
    if (state.epochs_since_improvement % cfg.lr_patience_epochs == 0) {
        state.current_lr *= 0.5;
        return ScheduleAction::halved;
    }
    return ScheduleAction::none;
}

void split_dataset(Dataset& ds, const double fractions[3], std::uint64_t seed) {
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split: fractions must sum to 1");
    const std::size_t n = ds.samples.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    const std::size_t n_train = static_cast<std::size_t>(std::llround(n * fractions[0]));
    const std::size_t n_val = static_cast<std::size_t>(std::llround(n * fractions[1]));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw std::invalid_argument("split: a split would be empty for n=" + std::to_string(n));
    ds.train_idx.assign(perm.begin(), perm.begin() + n_train);
    ds.val_idx.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    ds.test_idx.assign(perm.begin() + n_train + n_val, perm.end());
}

namespace {

TensorF gather_batch(const Dataset& ds, std::span<const std::size_t> idx, bool target) {
    const TensorF& first = target ? ds.samples[idx[0]].y : ds.samples[idx[0]].x;
    const std::size_t C = first.dim(0), H = first.dim(1), W = first.dim(2);
    TensorF batch({idx.size(), C, H, W});
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const TensorF& s = target ? ds.samples[idx[b]].y : ds.samples[idx[b]].x;
        if (s.dims() != first.dims())
            throw std::invalid_argument("dataset: inhomogeneous sample dims");
        std::copy(s.data(), s.data() + s.size(), batch.data() + b * C * H * W);
    }
    return batch;
}

}  // namespace

double evaluate_loss(const model::CheckpointF& ckpt, const Dataset& ds,
                     std::span<const std::size_t> indices, std::size_t batch_size) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t off = 0; off < indices.size(); off += batch_size) {
        const std::size_t nb = std::min(batch_size, indices.size() - off);
        auto idx = indices.subspan(off, nb);
        TensorF x = gather_batch(ds, idx, false);
        TensorF y = gather_batch(ds, idx, true);
        TensorF pred = model::forward(ckpt, x);
        acc += nn::mse_loss(pred, y).loss * static_cast<double>(nb);
        count += nb;
    }
    if (count == 0) throw std::invalid_argument("evaluate_loss: empty index set");
    return acc / static_cast<double>(count);
}

TrainResult train(const model::ModelConfig& config, const Dataset& ds, const TrainConfig& tc,
                  std::ostream* log_jsonl,
                  const std::function<void(const EpochRecord&)>& on_epoch,
                  const model::CheckpointF* warm_start) {
    tc.validate();
    if (ds.train_idx.empty() || ds.val_idx.empty())
        throw std::invalid_argument("train: dataset needs nonempty train and val splits");

    TrainResult result;
    model::CheckpointF ckpt =
        warm_start ? *warm_start : model::build<float>(config, tc.seed);
    ckpt.meta.learning_rate = tc.initial_lr;
    auto adam = make_adam_state(ckpt.params);

    ScheduleState sched;
    sched.current_lr = tc.initial_lr;

    std::mt19937_64 shuffle_rng(tc.seed ^ 0x5f3759df9e3779b9ull);
    std::vector<std::size_t> order = ds.train_idx;

    result.best = ckpt;
    result.best.meta.best_val_loss = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double train_acc = 0.0;
        std::size_t train_count = 0;
        for (std::size_t off = 0; off < order.size(); off += tc.batch_size) {
            const std::size_t nb = std::min(tc.batch_size, order.size() - off);
            auto idx = std::span<const std::size_t>(order).subspan(off, nb);
            TensorF x = gather_batch(ds, idx, false);
            TensorF y = gather_batch(ds, idx, true);
            auto cache = model::forward_cached(ckpt, x);
            auto mse = nn::mse_loss(cache.post_activation.back(), y);
            if (!std::isfinite(mse.loss)) {
                result.diverged = true;
                return result;  // best holds the last improving checkpoint
            }
            train_acc += mse.loss * static_cast<double>(nb);
            train_count += nb;
            auto grads = model::backward(ckpt, cache, mse.grad_pred);
            bool finite = true;
            for (const auto& gl : grads.layers) {
                for (const auto& w : gl.weights) finite = finite && w.all_finite();
                for (const auto& b : gl.biases)
                    for (float g : b) finite = finite && std::isfinite(g);
            }
            if (!finite) {
                result.diverged = true;
                return result;
            }
            adam_step(ckpt.params, grads, adam, sched.current_lr, tc);
        }

        const double val_loss = evaluate_loss(ckpt, ds, ds.val_idx, tc.batch_size);
        const ScheduleAction action = schedule_update(sched, val_loss, tc);
        if (val_loss == sched.best_val_loss && sched.epochs_since_improvement == 0) {
            result.best = ckpt;
            result.best.meta.epoch = static_cast<std::int64_t>(epoch);
            result.best.meta.learning_rate = sched.current_lr;
            result.best.meta.best_val_loss = val_loss;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_acc / static_cast<double>(train_count);
        rec.val_loss = val_loss;
        rec.lr = sched.current_lr;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(rec);
        if (log_jsonl) {
            nlohmann::json j = {{"epoch", rec.epoch},
                                {"train_loss", rec.train_loss},
                                {"val_loss", rec.val_loss},
                                {"lr", rec.lr},
                                {"seconds", rec.seconds}};
            (*log_jsonl) << j.dump() << '\n' << std::flush;
        }
        if (on_epoch) on_epoch(rec);
        if (action == ScheduleAction::stop) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

#define DW_INSTANTIATE(T)                                                                 \
    template AdamStateT<T> make_adam_state<T>(const model::ModelParamsT<T>&);             \
    template void adam_update<T>(std::span<T>, std::span<const T>, std::span<T>,          \
                                 std::span<T>, std::size_t, double, double, double,       \
                                 double);                                                 \
    template void adam_step<T>(model::ModelParamsT<T>&, const model::ModelParamsT<T>&,    \
                               AdamStateT<T>&, double, const TrainConfig&);

DW_INSTANTIATE(float)
DW_INSTANTIATE(double)
#undef DW_INSTANTIATE

}  // namespace dw::train
