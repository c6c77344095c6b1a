#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "astm/calendar.hpp"
#include "astm/errors.hpp"
#include "astm/random.hpp"

namespace astm {

inline constexpr int kFeatureDim = 6;

/// One forecasting input: the previous hour's vehicle count plus the
/// calendar fields of the hour being described. `normalized` is filled by
/// LstmModel::normalize_features; the recurrence itself always normalizes
/// from the raw fields.
struct FeatureVector {
    double count_last_hour = 0.0;
    int year = 2017;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    std::array<double, kFeatureDim> normalized{};

    double raw(int j) const {
        switch (j) {
            case 0: return count_last_hour;
            case 1: return static_cast<double>(year);
            case 2: return static_cast<double>(month);
            case 3: return static_cast<double>(day);
            case 4: return static_cast<double>(hour);
            case 5: return static_cast<double>(minute);
            default: throw ArgumentError("FeatureVector::raw: index out of range");
        }
    }

    CalendarTime timestamp() const { return {year, month, day, hour, minute}; }
};

/// Features from an hourly count series: the vector at position t carries
/// the count of hour t ("last hour") and the calendar of hour t+1, so the
/// output is one shorter than the input.
inline std::vector<FeatureVector> build_features(const std::vector<double>& counts,
                                                 const std::vector<CalendarTime>& timestamps) {
    if (counts.size() != timestamps.size())
        throw ArgumentError("build_features: counts and timestamps must have equal length");
    if (counts.size() < 2)
        throw ArgumentError("build_features: need at least two hours of history");
    std::vector<FeatureVector> out;
    out.reserve(counts.size() - 1);
    for (std::size_t i = 0; i + 1 < counts.size(); ++i) {
        const CalendarTime& t = timestamps[i + 1];
        validate_calendar(t);
        FeatureVector fv;
        fv.count_last_hour = counts[i];
        fv.year = t.year;
        fv.month = t.month;
        fv.day = t.day;
        fv.hour = t.hour;
        fv.minute = t.minute;
        out.push_back(fv);
    }
    return out;
}

/// Min-max constants fitted on the training split.
struct Normalization {
    std::array<double, kFeatureDim> feat_min{};
    std::array<double, kFeatureDim> feat_max{};
    double target_min = 0.0;
    double target_max = 1.0;
    bool fitted = false;

    double normalize_feature(int j, double x) const {
        const double span = feat_max[j] - feat_min[j];
        return span == 0.0 ? 0.0 : (x - feat_min[j]) / span;
    }
    double normalize_target(double y) const {
        const double span = target_max - target_min;
        return span == 0.0 ? 0.0 : (y - target_min) / span;
    }
    double denormalize_target(double y) const {
        return target_min + y * (target_max - target_min);
    }

    bool operator==(const Normalization&) const = default;
};

/// Single-layer LSTM with input, forget and output gates, a candidate-cell
/// transform, and a scalar output projection on the final hidden state.
/// Weight rows concatenate [input, recurrent] columns.
class LstmModel {
public:
    int hidden_dim = 32;
    int context_window = 24;

    std::vector<double> w_i, w_f, w_o, w_c; // hidden x (kFeatureDim + hidden)
    std::vector<double> b_i, b_f, b_o, b_c; // hidden
    std::vector<double> w_y;                // hidden
    double b_y = 0.0;

    Normalization norm;

    int input_dim() const { return kFeatureDim; }
    int cols() const { return kFeatureDim + hidden_dim; }

    /// Random initialization; the forget bias starts at 1 so early training
    /// keeps cell memory open.
    static LstmModel random_init(int hidden, std::uint64_t seed, int window = 24) {
        if (hidden < 1) throw ArgumentError("LstmModel: hidden_dim must be >= 1");
        if (window < 1) throw ArgumentError("LstmModel: context_window must be >= 1");
        LstmModel m;
        m.hidden_dim = hidden;
        m.context_window = window;
        const int nc = m.cols();
        const double scale = 1.0 / std::sqrt(static_cast<double>(nc));
        RandomStream rs(derive_seed(seed, stream::kInit));
        auto fill = [&](std::vector<double>& v, std::size_t n, double s) {
            v.resize(n);
            for (double& x : v) x = rs.uniform(-s, s);
        };
        fill(m.w_i, static_cast<std::size_t>(hidden) * nc, scale);
        fill(m.w_f, static_cast<std::size_t>(hidden) * nc, scale);
        fill(m.w_o, static_cast<std::size_t>(hidden) * nc, scale);
        fill(m.w_c, static_cast<std::size_t>(hidden) * nc, scale);
        m.b_i.assign(hidden, 0.0);
        m.b_f.assign(hidden, 1.0);
        m.b_o.assign(hidden, 0.0);
        m.b_c.assign(hidden, 0.0);
        fill(m.w_y, hidden, scale);
        m.b_y = 0.0;
        return m;
    }

    /// All-zero parameters (useful for tests and as a save/load skeleton).
    static LstmModel zeros(int hidden, int window = 24) {
        LstmModel m;
        m.hidden_dim = hidden;
        m.context_window = window;
        const std::size_t wn = static_cast<std::size_t>(hidden) * m.cols();
        m.w_i.assign(wn, 0.0);
        m.w_f.assign(wn, 0.0);
        m.w_o.assign(wn, 0.0);
        m.w_c.assign(wn, 0.0);
        m.b_i.assign(hidden, 0.0);
        m.b_f.assign(hidden, 0.0);
        m.b_o.assign(hidden, 0.0);
        m.b_c.assign(hidden, 0.0);
        m.w_y.assign(hidden, 0.0);
        m.b_y = 0.0;
        return m;
    }

    void check_dimensions() const {
        const std::size_t wn = static_cast<std::size_t>(hidden_dim) * cols();
        const std::size_t hn = static_cast<std::size_t>(hidden_dim);
        if (w_i.size() != wn || w_f.size() != wn || w_o.size() != wn || w_c.size() != wn ||
            b_i.size() != hn || b_f.size() != hn || b_o.size() != hn || b_c.size() != hn ||
            w_y.size() != hn) {
            throw ModelError("LSTM parameter tensors do not match hidden_dim");
        }
        auto finite = [](const std::vector<double>& v) {
            for (double x : v) {
                if (!std::isfinite(x)) return false;
            }
            return true;
        };
        if (!finite(w_i) || !finite(w_f) || !finite(w_o) || !finite(w_c) || !finite(b_i) ||
            !finite(b_f) || !finite(b_o) || !finite(b_c) || !finite(w_y) ||
            !std::isfinite(b_y)) {
            throw ModelError("LSTM parameters must be finite");
        }
    }

    /// Fills the `normalized` copies of a feature sequence.
    void normalize_features(std::vector<FeatureVector>& features) const {
        require_fitted();
        for (FeatureVector& fv : features) {
            for (int j = 0; j < kFeatureDim; ++j) fv.normalized[j] = norm.normalize_feature(j, fv.raw(j));
        }
    }

    void require_fitted() const {
        if (!norm.fitted) throw ModelError("normalization constants not fitted");
    }

    // Flat parameter indexing, used by clipping and the gradient checker.
    std::size_t parameter_count() const {
        return 4 * (static_cast<std::size_t>(hidden_dim) * cols() + hidden_dim) + hidden_dim + 1;
    }

    double& parameter_at(std::size_t idx) {
        const std::size_t wn = static_cast<std::size_t>(hidden_dim) * cols();
        const std::size_t hn = static_cast<std::size_t>(hidden_dim);
        std::vector<double>* tensors[] = {&w_i, &w_f, &w_o, &w_c, &b_i, &b_f, &b_o, &b_c, &w_y};
        const std::size_t sizes[] = {wn, wn, wn, wn, hn, hn, hn, hn, hn};
        for (int k = 0; k < 9; ++k) {
            if (idx < sizes[k]) return (*tensors[k])[idx];
            idx -= sizes[k];
        }
        if (idx == 0) return b_y;
        throw ArgumentError("parameter_at: index out of range");
    }
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Per-step activations cached for backpropagation through time.
struct LstmStep {
    std::vector<double> x; // normalized inputs, kFeatureDim
    std::vector<double> i, f, o, g, c, tanh_c, h;
};

} // namespace detail

struct LstmCache {
    std::vector<detail::LstmStep> steps;
};

struct ForwardResult {
    double prediction = 0.0;      // vehicles
    double prediction_norm = 0.0; // normalized target space
    LstmCache cache;
};

/// Runs the LSTM recurrence over the sequence and projects the final hidden
/// state to a (de-normalized) vehicle count.
inline ForwardResult lstm_forward(const LstmModel& model,
                                  const std::vector<FeatureVector>& sequence) {
    if (sequence.empty()) throw ArgumentError("lstm_forward: sequence must be non-empty");
    model.check_dimensions();
    model.require_fitted();

    const int H = model.hidden_dim;
    const int C = model.cols();
    ForwardResult result;
    result.cache.steps.reserve(sequence.size());

    std::vector<double> h(H, 0.0), c(H, 0.0), z(C, 0.0);
    for (const FeatureVector& fv : sequence) {
        detail::LstmStep step;
        step.x.resize(kFeatureDim);
        for (int j = 0; j < kFeatureDim; ++j) {
            step.x[j] = model.norm.normalize_feature(j, fv.raw(j));
            z[j] = step.x[j];
        }
        for (int j = 0; j < H; ++j) z[kFeatureDim + j] = h[j];

        step.i.resize(H);
        step.f.resize(H);
        step.o.resize(H);
        step.g.resize(H);
        step.c.resize(H);
        step.tanh_c.resize(H);
        step.h.resize(H);
        for (int r = 0; r < H; ++r) {
            double ai = model.b_i[r], af = model.b_f[r], ao = model.b_o[r], ag = model.b_c[r];
            const std::size_t row = static_cast<std::size_t>(r) * C;
            for (int k = 0; k < C; ++k) {
                ai += model.w_i[row + k] * z[k];
                af += model.w_f[row + k] * z[k];
                ao += model.w_o[row + k] * z[k];
                ag += model.w_c[row + k] * z[k];
            }
            step.i[r] = detail::sigmoid(ai);
            step.f[r] = detail::sigmoid(af);
            step.o[r] = detail::sigmoid(ao);
            step.g[r] = std::tanh(ag);
            step.c[r] = step.f[r] * c[r] + step.i[r] * step.g[r];
            step.tanh_c[r] = std::tanh(step.c[r]);
            step.h[r] = step.o[r] * step.tanh_c[r];
        }
        h = step.h;
        c = step.c;
        result.cache.steps.push_back(std::move(step));
    }

    double y = model.b_y;
    for (int r = 0; r < H; ++r) y += model.w_y[r] * h[r];
    result.prediction_norm = y;
    result.prediction = model.norm.denormalize_target(y);
    if (!std::isfinite(result.prediction)) throw ModelError("lstm_forward: non-finite prediction");
    return result;
}

/// One (sequence, target) training pair; the target is in vehicles.
struct TrainSample {
    std::vector<FeatureVector> sequence;
    double target = 0.0;
};

namespace detail {

/// Gradient buffers mirroring the model tensors.
struct LstmGrads {
    std::vector<double> w_i, w_f, w_o, w_c, b_i, b_f, b_o, b_c, w_y;
    double b_y = 0.0;

    explicit LstmGrads(const LstmModel& m) {
        const std::size_t wn = static_cast<std::size_t>(m.hidden_dim) * m.cols();
        w_i.assign(wn, 0.0);
        w_f.assign(wn, 0.0);
        w_o.assign(wn, 0.0);
        w_c.assign(wn, 0.0);
        b_i.assign(m.hidden_dim, 0.0);
        b_f.assign(m.hidden_dim, 0.0);
        b_o.assign(m.hidden_dim, 0.0);
        b_c.assign(m.hidden_dim, 0.0);
        w_y.assign(m.hidden_dim, 0.0);
    }

    double& at(std::size_t idx, const LstmModel& m) {
        const std::size_t wn = static_cast<std::size_t>(m.hidden_dim) * m.cols();
        const std::size_t hn = static_cast<std::size_t>(m.hidden_dim);
        std::vector<double>* tensors[] = {&w_i, &w_f, &w_o, &w_c, &b_i, &b_f, &b_o, &b_c, &w_y};
        const std::size_t sizes[] = {wn, wn, wn, wn, hn, hn, hn, hn, hn};
        for (int k = 0; k < 9; ++k) {
            if (idx < sizes[k]) return (*tensors[k])[idx];
            idx -= sizes[k];
        }
        return b_y;
    }

    void reset() {
        b_y = 0.0;
        for (auto* v : {&w_i, &w_f, &w_o, &w_c, &b_i, &b_f, &b_o, &b_c, &w_y}) {
            std::fill(v->begin(), v->end(), 0.0);
        }
    }

    double squared_norm() const {
        double s = b_y * b_y;
        for (const auto* v : {&w_i, &w_f, &w_o, &w_c, &b_i, &b_f, &b_o, &b_c, &w_y}) {
            for (double x : *v) s += x * x;
        }
        return s;
    }

    void scale(double k) {
        b_y *= k;
        for (auto* v : {&w_i, &w_f, &w_o, &w_c, &b_i, &b_f, &b_o, &b_c, &w_y}) {
            for (double& x : *v) x *= k;
        }
    }
};

/// Accumulates d(prediction_norm - target_norm)^2 / d(params) into `grads`
/// and returns the squared error for this sample (normalized space).
inline double backprop_sample(const LstmModel& model, const TrainSample& sample,
                              LstmGrads& grads) {
    const ForwardResult fwd = lstm_forward(model, sample.sequence);
    const double target_norm = model.norm.normalize_target(sample.target);
    const double err = fwd.prediction_norm - target_norm;

    const int H = model.hidden_dim;
    const int C = model.cols();
    const auto& steps = fwd.cache.steps;
    const int T = static_cast<int>(steps.size());

    const double dy = 2.0 * err;
    std::vector<double> dh(H, 0.0), dc(H, 0.0);
    for (int r = 0; r < H; ++r) {
        grads.w_y[r] += dy * steps[T - 1].h[r];
        dh[r] = model.w_y[r] * dy;
    }
    grads.b_y += dy;

    std::vector<double> da_i(H), da_f(H), da_o(H), da_g(H);
    for (int t = T - 1; t >= 0; --t) {
        const detail::LstmStep& st = steps[t];
        const std::vector<double>* c_prev = t > 0 ? &steps[t - 1].c : nullptr;
        const std::vector<double>* h_prev = t > 0 ? &steps[t - 1].h : nullptr;

        for (int r = 0; r < H; ++r) {
            const double do_ = dh[r] * st.tanh_c[r];
            const double dct = dc[r] + dh[r] * st.o[r] * (1.0 - st.tanh_c[r] * st.tanh_c[r]);
            const double di = dct * st.g[r];
            const double dg = dct * st.i[r];
            const double cp = c_prev ? (*c_prev)[r] : 0.0;
            const double df = dct * cp;
            dc[r] = dct * st.f[r]; // becomes dc_{t-1}
            da_i[r] = di * st.i[r] * (1.0 - st.i[r]);
            da_f[r] = df * st.f[r] * (1.0 - st.f[r]);
            da_o[r] = do_ * st.o[r] * (1.0 - st.o[r]);
            da_g[r] = dg * (1.0 - st.g[r] * st.g[r]);
        }

        std::vector<double> dh_prev(H, 0.0);
        for (int r = 0; r < H; ++r) {
            const std::size_t row = static_cast<std::size_t>(r) * C;
            for (int k = 0; k < C; ++k) {
                const double zk = k < kFeatureDim ? st.x[k]
                                                  : (h_prev ? (*h_prev)[k - kFeatureDim] : 0.0);
                grads.w_i[row + k] += da_i[r] * zk;
                grads.w_f[row + k] += da_f[r] * zk;
                grads.w_o[row + k] += da_o[r] * zk;
                grads.w_c[row + k] += da_g[r] * zk;
                if (k >= kFeatureDim) {
                    dh_prev[k - kFeatureDim] += model.w_i[row + k] * da_i[r] +
                                                model.w_f[row + k] * da_f[r] +
                                                model.w_o[row + k] * da_o[r] +
                                                model.w_c[row + k] * da_g[r];
                }
            }
            grads.b_i[r] += da_i[r];
            grads.b_f[r] += da_f[r];
            grads.b_o[r] += da_o[r];
            grads.b_c[r] += da_g[r];
        }
        dh = std::move(dh_prev);
    }
    return err * err;
}

} // namespace detail

struct TrainResult {
    std::vector<double> loss_history; // normalized MSE per epoch, pre-update
};

inline constexpr double kGradClipNorm = 5.0;

/// Gradient descent with backpropagation through time: one clipped descent
/// step per sample, taken in dataset order. The loss is mean squared error
/// in normalized target space; each epoch's entry is the mean of the
/// per-sample losses measured as the epoch sweeps the dataset.
inline TrainResult train(LstmModel& model, const std::vector<TrainSample>& dataset, int epochs,
                         double learning_rate) {
    if (dataset.empty()) throw ArgumentError("train: dataset must be non-empty");
    if (learning_rate < 0.0) throw ArgumentError("train: learning rate must be >= 0");
    if (epochs < 0) throw ArgumentError("train: epochs must be >= 0");
    model.check_dimensions();
    model.require_fitted();
    for (const TrainSample& s : dataset) {
        if (s.sequence.empty()) throw ArgumentError("train: empty sequence in dataset");
    }

    TrainResult result;
    result.loss_history.reserve(epochs);
    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    detail::LstmGrads grads(model);

    auto step = [&](std::vector<double>& p, const std::vector<double>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * g[i];
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
        double loss = 0.0;
        for (const TrainSample& s : dataset) {
            grads.reset();
            loss += detail::backprop_sample(model, s, grads);
            const double norm = std::sqrt(grads.squared_norm());
            if (!std::isfinite(norm))
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
            if (norm > kGradClipNorm) grads.scale(kGradClipNorm / norm);
            step(model.w_i, grads.w_i);
            step(model.w_f, grads.w_f);
            step(model.w_o, grads.w_o);
            step(model.w_c, grads.w_c);
            step(model.b_i, grads.b_i);
            step(model.b_f, grads.b_f);
            step(model.b_o, grads.b_o);
            step(model.b_c, grads.b_c);
            step(model.w_y, grads.w_y);
            model.b_y -= learning_rate * grads.b_y;
        }
        loss *= inv_n;
        if (!std::isfinite(loss))
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
        result.loss_history.push_back(loss);
    }
    return result;
}

/// Compares analytic gradients against central finite differences (step
/// 1e-5) for every parameter and returns the worst relative error;
/// near-zero pairs fall back to absolute error below 1e-8.
inline double gradient_check(const LstmModel& model, const TrainSample& sample) {
    LstmModel m = model;
    m.check_dimensions();
    m.require_fitted();

    detail::LstmGrads grads(m);
    detail::backprop_sample(m, sample, grads);

    const double target_norm = m.norm.normalize_target(sample.target);
    auto loss_at = [&]() {
        const double err = lstm_forward(m, sample.sequence).prediction_norm - target_norm;
        return err * err;
    };

    const double step = 1e-5;
    double worst = 0.0;
    const std::size_t np = m.parameter_count();
    for (std::size_t idx = 0; idx < np; ++idx) {
        double& p = m.parameter_at(idx);
        const double saved = p;
        p = saved + step;
        const double lp = loss_at();
        p = saved - step;
        const double lm = loss_at();
        p = saved;
        const double numeric = (lp - lm) / (2.0 * step);
        const double analytic = grads.at(idx, m);
        const double denom = std::max(std::abs(numeric), std::abs(analytic));
        const double err = denom < 1e-8 ? std::abs(numeric - analytic)
                                        : std::abs(numeric - analytic) / denom;
        worst = std::max(worst, err);
    }
    return worst;
}

inline constexpr int kForecastHorizonHours = 12;

/// 12-hour autoregressive forecast; mse/rmse are filled when truth is given.
struct ForecastResult {
    std::array<double, kForecastHorizonHours> predictions{};
    std::optional<double> mse;
    std::optional<double> rmse;
};

struct EvalResult {
    double mse = 0.0;  // vehicles^2
    double rmse = 0.0; // vehicles
};

/// Mean squared error and its root, in vehicles.
inline EvalResult evaluate(const std::vector<double>& predictions,
                           const std::vector<double>& truth) {
    if (predictions.size() != truth.size())
        throw ArgumentError("evaluate: predictions and truth must have equal length");
    if (predictions.empty()) throw ArgumentError("evaluate: need at least one value");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - truth[i];
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(predictions.size());
    return {mse, std::sqrt(mse)};
}

/// Rolls the model forward 12 hours: each prediction feeds the next step's
/// count_last_hour and the calendar advances hour by hour from
/// `start` (the hour the last history vector describes). Predictions are
/// clamped at zero vehicles.
inline ForecastResult predict_horizon(const LstmModel& model,
                                      const std::vector<FeatureVector>& history,
                                      const CalendarTime& start,
                                      const std::vector<double>* truth = nullptr) {
    model.check_dimensions();
    model.require_fitted();
    const std::size_t window = static_cast<std::size_t>(model.context_window);
    if (history.size() < window)
        throw ArgumentError("predict_horizon: history shorter than the context window");

    std::vector<FeatureVector> buffer(history.end() - window, history.end());
    ForecastResult result;
    for (int k = 0; k < kForecastHorizonHours; ++k) {
        const double pred = std::max(0.0, lstm_forward(model, buffer).prediction);
        result.predictions[k] = pred;

        const CalendarTime next = add_hours(start, k + 1);
        FeatureVector fv;
        fv.count_last_hour = pred;
        fv.year = next.year;
        fv.month = next.month;
        fv.day = next.day;
        fv.hour = next.hour;
        fv.minute = next.minute;
        buffer.erase(buffer.begin());
        buffer.push_back(fv);
    }

    if (truth) {
        const std::vector<double> preds(result.predictions.begin(), result.predictions.end());
        const EvalResult ev = evaluate(preds, *truth);
        result.mse = ev.mse;
        result.rmse = ev.rmse;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Dataset plumbing

/// Aligned hourly counts and timestamps.
struct HourlySeries {
    std::vector<double> counts;
    std::vector<CalendarTime> timestamps;
};

/// Sliding-window (sequence, target) pairs for one-step-ahead training.
inline std::vector<TrainSample> make_training_samples(const HourlySeries& series, int window) {
    if (window < 1) throw ArgumentError("make_training_samples: window must be >= 1");
    const std::vector<FeatureVector> features = build_features(series.counts, series.timestamps);
    std::vector<TrainSample> samples;
    if (static_cast<int>(features.size()) < window) return samples;
    for (std::size_t k = static_cast<std::size_t>(window) - 1; k + 1 < series.counts.size();
         ++k) {
        TrainSample s;
        s.sequence.assign(features.begin() + (k + 1 - window), features.begin() + (k + 1));
        s.target = series.counts[k + 1];
        samples.push_back(std::move(s));
    }
    return samples;
}

/// Fits min-max constants from the training samples.
inline void fit_normalization(LstmModel& model, const std::vector<TrainSample>& samples) {
    if (samples.empty()) throw ArgumentError("fit_normalization: no samples");
    Normalization n;
    for (int j = 0; j < kFeatureDim; ++j) {
        n.feat_min[j] = std::numeric_limits<double>::infinity();
        n.feat_max[j] = -std::numeric_limits<double>::infinity();
    }
    n.target_min = std::numeric_limits<double>::infinity();
    n.target_max = -std::numeric_limits<double>::infinity();
    for (const TrainSample& s : samples) {
        for (const FeatureVector& fv : s.sequence) {
            for (int j = 0; j < kFeatureDim; ++j) {
                n.feat_min[j] = std::min(n.feat_min[j], fv.raw(j));
                n.feat_max[j] = std::max(n.feat_max[j], fv.raw(j));
            }
        }
        n.target_min = std::min(n.target_min, s.target);
        n.target_max = std::max(n.target_max, s.target);
    }
    n.fitted = true;
    model.norm = n;
}

struct ForecasterOptions {
    int hidden = 32;
    int window = 24;
    int epochs = 80;
    double learning_rate = 0.1;
    std::uint64_t seed = 7;
};

/// End-to-end helper: init, fit normalization, train on the whole series.
/// Runs a three-stage step decay (lr, lr/5, lr/20 over 50/30/20 percent of
/// the epochs) so the descent settles instead of bouncing at a fixed step.
inline LstmModel train_forecaster_on_series(const HourlySeries& series,
                                            const ForecasterOptions& opts,
                                            TrainResult* out_history = nullptr) {
    LstmModel model = LstmModel::random_init(opts.hidden, opts.seed, opts.window);
    const std::vector<TrainSample> samples = make_training_samples(series, opts.window);
    if (samples.empty())
        throw ArgumentError("train_forecaster_on_series: series shorter than the window");
    fit_normalization(model, samples);

    const int stage1 = opts.epochs / 2;
    const int stage2 = opts.epochs * 3 / 10;
    const int stage3 = opts.epochs - stage1 - stage2;
    TrainResult history = train(model, samples, stage1, opts.learning_rate);
    TrainResult h2 = train(model, samples, stage2, opts.learning_rate / 5.0);
    TrainResult h3 = train(model, samples, stage3, opts.learning_rate / 20.0);
    history.loss_history.insert(history.loss_history.end(), h2.loss_history.begin(),
                                h2.loss_history.end());
    history.loss_history.insert(history.loss_history.end(), h3.loss_history.begin(),
                                h3.loss_history.end());
    if (out_history) *out_history = std::move(history);
    return model;
}

// ---------------------------------------------------------------------------
// File formats

/// CSV rows of "YYYY-MM-DD HH:MM,count"; a "timestamp,count" header line is
/// accepted and skipped.
inline HourlySeries load_counts_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    HourlySeries series;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'timestamp,count'");
        const std::string ts = line.substr(0, comma);
        const std::string count = line.substr(comma + 1);
        if (line_no == 1 && ts == "timestamp") continue;
        try {
            series.timestamps.push_back(parse_calendar(ts));
            series.counts.push_back(std::stod(count));
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return series;
}

inline void save_counts_csv(const HourlySeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "timestamp,count\n";
    char buf[64];
    for (std::size_t i = 0; i < series.counts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f", series.counts[i]);
        out << format_calendar(series.timestamps[i]) << ',' << buf << '\n';
    }
}

inline void save_model(const LstmModel& model, const std::string& path) {
    model.check_dimensions();
    nlohmann::json j;
    j["input_dim"] = kFeatureDim;
    j["hidden_dim"] = model.hidden_dim;
    j["context_window"] = model.context_window;
    j["w_i"] = model.w_i;
    j["w_f"] = model.w_f;
    j["w_o"] = model.w_o;
    j["w_c"] = model.w_c;
    j["b_i"] = model.b_i;
    j["b_f"] = model.b_f;
    j["b_o"] = model.b_o;
    j["b_c"] = model.b_c;
    j["w_y"] = model.w_y;
    j["b_y"] = model.b_y;
    j["normalization"] = {
        {"feature_min", model.norm.feat_min}, {"feature_max", model.norm.feat_max},
        {"target_min", model.norm.target_min}, {"target_max", model.norm.target_max},
        {"fitted", model.norm.fitted},
    };
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

inline LstmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        LstmModel m;
        if (j.at("input_dim").get<int>() != kFeatureDim)
            throw ModelError(path + ": unsupported input_dim");
        m.hidden_dim = j.at("hidden_dim").get<int>();
        m.context_window = j.at("context_window").get<int>();
        m.w_i = j.at("w_i").get<std::vector<double>>();
        m.w_f = j.at("w_f").get<std::vector<double>>();
        m.w_o = j.at("w_o").get<std::vector<double>>();
        m.w_c = j.at("w_c").get<std::vector<double>>();
        m.b_i = j.at("b_i").get<std::vector<double>>();
        m.b_f = j.at("b_f").get<std::vector<double>>();
        m.b_o = j.at("b_o").get<std::vector<double>>();
        m.b_c = j.at("b_c").get<std::vector<double>>();
        m.w_y = j.at("w_y").get<std::vector<double>>();
        m.b_y = j.at("b_y").get<double>();
        const auto& n = j.at("normalization");
        m.norm.feat_min = n.at("feature_min").get<std::array<double, kFeatureDim>>();
        m.norm.feat_max = n.at("feature_max").get<std::array<double, kFeatureDim>>();
        m.norm.target_min = n.at("target_min").get<double>();
        m.norm.target_max = n.at("target_max").get<double>();
        m.norm.fitted = n.at("fitted").get<bool>();
        m.check_dimensions();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace astm
