// Copyright (C) 2026 The lapsekit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "lapsekit/errors.hpp"
#include "lapsekit/rng.hpp"

// Desk-scale diffusion numerics: dense Eigen storage, scalar-templated
// types, free functions that compose like expressions. No model weights and
// no GPU; the denoiser is a plug-in callable.

namespace lapsekit::diffusion {

template <typename Scalar>
using Vector = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMajorMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// (batch, channel, frame, height, width)
struct Shape5 {
    Eigen::Index b = 0, c = 0, f = 0, h = 0, w = 0;

    Eigen::Index total() const { return b * c * f * h * w; }
    bool operator==(const Shape5&) const = default;
};

/// Dense 5-axis tensor, flat row-major storage (width contiguous).
template <typename Scalar>
struct Tensor5 {
    Shape5 shape{};
    Vector<Scalar> data;

    Tensor5() = default;

    static Tensor5 zeros(Shape5 shape) {
        check_shape(shape);
        Tensor5 t;
        t.shape = shape;
        t.data = Vector<Scalar>::Zero(shape.total());
        return t;
    }

    static Tensor5 constant(Shape5 shape, Scalar value) {
        check_shape(shape);
        Tensor5 t;
        t.shape = shape;
        t.data = Vector<Scalar>::Constant(shape.total(), value);
        return t;
    }

    static Tensor5 from_data(Shape5 shape, Vector<Scalar> values) {
        check_shape(shape);
        if (values.size() != shape.total())
            throw ShapeMismatch("tensor: data length does not match shape");
        if (!values.allFinite()) throw Error("tensor: entries must be finite");
        Tensor5 t;
        t.shape = shape;
        t.data = std::move(values);
        return t;
    }

    static Tensor5 gaussian(Shape5 shape, Rng& rng) {
        check_shape(shape);
        Tensor5 t;
        t.shape = shape;
        t.data.resize(shape.total());
        for (Eigen::Index i = 0; i < t.data.size(); ++i)
            t.data(i) = static_cast<Scalar>(rng.next_gaussian());
        return t;
    }

    Scalar& operator()(Eigen::Index bi, Eigen::Index ci, Eigen::Index fi, Eigen::Index hi,
                       Eigen::Index wi) {
        return data((((bi * shape.c + ci) * shape.f + fi) * shape.h + hi) * shape.w + wi);
    }
    Scalar operator()(Eigen::Index bi, Eigen::Index ci, Eigen::Index fi, Eigen::Index hi,
                      Eigen::Index wi) const {
        return data((((bi * shape.c + ci) * shape.f + fi) * shape.h + hi) * shape.w + wi);
    }

private:
    static void check_shape(const Shape5& shape) {
        if (shape.b < 1 || shape.c < 1 || shape.f < 1 || shape.h < 1 || shape.w < 1)
            throw ShapeMismatch("tensor: every axis must be at least 1");
    }
};

template <typename Scalar>
void require_same_shape(const Tensor5<Scalar>& a, const Tensor5<Scalar>& b, const char* what) {
    if (!(a.shape == b.shape)) throw ShapeMismatch(std::string(what) + ": tensor shapes differ");
}

// ---------------------------------------------------------------------------
// Noise schedule

/// beta/alpha/alpha-bar tables for steps 1..T; alpha_bar(0) is 1 by
/// convention so stepping all the way to 0 reconstructs the data estimate.
template <typename Scalar>
struct NoiseSchedule {
    Vector<Scalar> betas;       // beta_1..beta_T
    Vector<Scalar> alphas;      // 1 - beta_t
    Vector<Scalar> alpha_bars;  // cumulative products

    int steps() const { return static_cast<int>(betas.size()); }

    Scalar beta(int t) const {
        require_step(t);
        return betas(t - 1);
    }
    Scalar alpha(int t) const {
        require_step(t);
        return alphas(t - 1);
    }
    Scalar alpha_bar(int t) const {
        if (t == 0) return Scalar(1);
        require_step(t);
        return alpha_bars(t - 1);
    }

private:
    void require_step(int t) const {
        if (t < 1 || t > steps())
            throw StepOutOfRange("schedule: step " + std::to_string(t) + " outside [1, " +
                                 std::to_string(steps()) + "]");
    }
};

/// Endpoint-inclusive linear interpolation from beta_start to beta_end.
template <typename Scalar>
NoiseSchedule<Scalar> linear_beta_schedule(int total_steps, Scalar beta_start, Scalar beta_end) {
    if (total_steps < 1) throw InvalidRange("schedule: total_steps must be at least 1");
    if (!(Scalar(0) < beta_start && beta_start <= beta_end && beta_end < Scalar(1)))
        throw InvalidRange("schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule<Scalar> schedule;
    if (total_steps == 1) {
        schedule.betas = Vector<Scalar>::Constant(1, beta_start);
    } else {
        schedule.betas = Vector<Scalar>::LinSpaced(total_steps, beta_start, beta_end);
        schedule.betas(0) = beta_start;  // pin endpoints against interpolation rounding
        schedule.betas(total_steps - 1) = beta_end;
    }
    schedule.alphas = Scalar(1) - schedule.betas.array();
    schedule.alpha_bars.resize(total_steps);
    Scalar running = Scalar(1);
    for (int t = 0; t < total_steps; ++t) {
        running *= schedule.alphas(t);
        schedule.alpha_bars(t) = running;
    }
    return schedule;
}

// ---------------------------------------------------------------------------
// Forward process and loss

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
template <typename Scalar>
Tensor5<Scalar> q_sample(const Tensor5<Scalar>& x0, int t, const Tensor5<Scalar>& eps,
                         const NoiseSchedule<Scalar>& schedule) {
    require_same_shape(x0, eps, "q_sample");
    if (t < 1 || t > schedule.steps())
        throw StepOutOfRange("q_sample: step " + std::to_string(t) + " outside [1, " +
                             std::to_string(schedule.steps()) + "]");
    const Scalar ab = schedule.alpha_bar(t);
    Tensor5<Scalar> xt;
    xt.shape = x0.shape;
    xt.data = std::sqrt(ab) * x0.data + std::sqrt(Scalar(1) - ab) * eps.data;
    return xt;
}

/// Mean squared error between predicted and true noise.
template <typename Scalar>
Scalar epsilon_loss(const Tensor5<Scalar>& eps_pred, const Tensor5<Scalar>& eps) {
    require_same_shape(eps_pred, eps, "epsilon_loss");
    return (eps_pred.data - eps.data).squaredNorm() / static_cast<Scalar>(eps.data.size());
}

/// eps_uncond + scale * (eps_cond - eps_uncond). The scale 0 and 1
/// endpoints return the corresponding input exactly.
template <typename Scalar>
Tensor5<Scalar> cfg_combine(const Tensor5<Scalar>& eps_uncond, const Tensor5<Scalar>& eps_cond,
                            Scalar scale) {
    require_same_shape(eps_uncond, eps_cond, "cfg_combine");
    if (scale == Scalar(0)) return eps_uncond;
    if (scale == Scalar(1)) return eps_cond;
    Tensor5<Scalar> out;
    out.shape = eps_uncond.shape;
    out.data = eps_uncond.data + scale * (eps_cond.data - eps_uncond.data);
    return out;
}

/// Keep-conditioning mask: entry i is true (drop the text) with probability
/// `ratio`, independently per batch element.
inline Eigen::Array<bool, Eigen::Dynamic, 1> null_text_mask(int batch_size, double ratio,
                                                            Rng& rng) {
    if (batch_size < 0) throw InvalidRange("null_text_mask: batch_size must be nonnegative");
    if (!(ratio >= 0.0 && ratio <= 1.0))
        throw InvalidRange("null_text_mask: ratio must lie in [0, 1]");
    Eigen::Array<bool, Eigen::Dynamic, 1> mask(batch_size);
    for (int i = 0; i < batch_size; ++i) mask(i) = rng.next_double() < ratio;
    return mask;
}

// ---------------------------------------------------------------------------
// Deterministic DDIM stepping

/// One eta = 0 update from step t to t_prev:
///   pred_x0 = (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t)
///   x_prev  = sqrt(ab_prev) pred_x0 + sqrt(1 - ab_prev) eps
/// t_prev == t returns the input unchanged (the update is the identity).
template <typename Scalar>
Tensor5<Scalar> ddim_step(const Tensor5<Scalar>& x_t, const Tensor5<Scalar>& eps_pred, int t,
                          int t_prev, const NoiseSchedule<Scalar>& schedule) {
    require_same_shape(x_t, eps_pred, "ddim_step");
    if (t_prev < 0 || t_prev > t)
        throw StepOrderViolation("ddim_step: need t >= t_prev >= 0, got t=" + std::to_string(t) +
                                 " t_prev=" + std::to_string(t_prev));
    if (t_prev == t) return x_t;

    const Scalar ab_t = schedule.alpha_bar(t);
    const Scalar ab_prev = schedule.alpha_bar(t_prev);
    Tensor5<Scalar> out;
    out.shape = x_t.shape;
    const auto pred_x0 =
        (x_t.data - std::sqrt(Scalar(1) - ab_t) * eps_pred.data) / std::sqrt(ab_t);
    out.data = std::sqrt(ab_prev) * pred_x0 + std::sqrt(Scalar(1) - ab_prev) * eps_pred.data;
    return out;
}

/// Noise prediction callable: (x_t, t, conditioning-or-null) -> eps.
template <typename Scalar>
using Denoiser =
    std::function<Tensor5<Scalar>(const Tensor5<Scalar>&, int, const Vector<Scalar>*)>;

/// Descending step grid from T to 0, inclusive on both ends (size steps+1).
inline std::vector<int> ddim_timesteps(int total_steps, int sampling_steps) {
    if (sampling_steps < 1 || sampling_steps > total_steps)
        throw InvalidRange("ddim_timesteps: need 1 <= sampling_steps <= total_steps");
    std::vector<int> grid;
    grid.reserve(sampling_steps + 1);
    for (int i = 0; i <= sampling_steps; ++i)
        grid.push_back(static_cast<int>(static_cast<std::int64_t>(total_steps) *
                                        (sampling_steps - i) / sampling_steps));
    return grid;
}

/// Full deterministic trajectory from x_T to the data estimate. With
/// conditioning and guidance != 1 the denoiser is queried twice per step and
/// combined with cfg_combine.
template <typename Scalar>
Tensor5<Scalar> sample_ddim(const Tensor5<Scalar>& x_start, const Denoiser<Scalar>& denoiser,
                            const NoiseSchedule<Scalar>& schedule, int sampling_steps,
                            Scalar guidance_scale = Scalar(1),
                            const Vector<Scalar>* conditioning = nullptr) {
    const std::vector<int> grid = ddim_timesteps(schedule.steps(), sampling_steps);
    Tensor5<Scalar> x = x_start;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const int t = grid[i];
        const int t_prev = grid[i + 1];
        Tensor5<Scalar> eps = denoiser(x, t, conditioning);
        if (conditioning != nullptr && guidance_scale != Scalar(1)) {
            const Tensor5<Scalar> eps_uncond = denoiser(x, t, nullptr);
            eps = cfg_combine(eps_uncond, eps, guidance_scale);
        }
        x = ddim_step(x, eps, t, t_prev, schedule);
    }
    return x;
}

/// Analytic noise prediction for a point-mass data distribution at x0_star:
/// eps = (x_t - sqrt(ab_t) x0*) / sqrt(1 - ab_t). Exact oracle for DDIM.
template <typename Scalar>
Denoiser<Scalar> point_mass_denoiser(Tensor5<Scalar> x0_star, NoiseSchedule<Scalar> schedule) {
    return [x0 = std::move(x0_star), sched = std::move(schedule)](
               const Tensor5<Scalar>& x_t, int t, const Vector<Scalar>*) {
        require_same_shape(x_t, x0, "point_mass_denoiser");
        const Scalar ab = sched.alpha_bar(t);
        Tensor5<Scalar> eps;
        eps.shape = x_t.shape;
        eps.data = (x_t.data - std::sqrt(ab) * x0.data) / std::sqrt(Scalar(1) - ab);
        return eps;
    };
}

// ---------------------------------------------------------------------------
// Residual adapter stacks

enum class Nonlinearity { Identity, Relu };

/// y = weight * x + bias; weight is (out x in).
template <typename Scalar>
struct AdapterLayer {
    Matrix<Scalar> weight;
    Vector<Scalar> bias;

    Eigen::Index in_width() const { return weight.cols(); }
    Eigen::Index out_width() const { return weight.rows(); }
};

/// A few affine layers with a pointwise nonlinearity between them, applied
/// along the feature (last) axis of a tensor. Freshly attached stacks
/// zero-initialize the final layer so they start as an exact no-op.
template <typename Scalar>
struct AdapterStack {
    std::vector<AdapterLayer<Scalar>> layers;
    Nonlinearity nonlinearity = Nonlinearity::Relu;
    Scalar scale = Scalar(1);  // alpha / beta weight coefficient

    static AdapterStack identity(Eigen::Index width) {
        AdapterStack stack;
        stack.nonlinearity = Nonlinearity::Identity;
        stack.layers.push_back({Matrix<Scalar>::Identity(width, width), Vector<Scalar>::Zero(width)});
        return stack;
    }

    /// depth affine layers (width -> hidden -> ... -> width); hidden layers
    /// get small random weights, the final layer is zero-initialized.
    static AdapterStack fresh(Eigen::Index width, Eigen::Index hidden, int depth, Rng& rng,
                              Nonlinearity nonlinearity = Nonlinearity::Relu) {
        if (depth < 1) throw InvalidRange("adapter: depth must be at least 1");
        if (width < 1 || hidden < 1) throw InvalidRange("adapter: widths must be at least 1");
        AdapterStack stack;
        stack.nonlinearity = nonlinearity;
        Eigen::Index in = width;
        for (int d = 0; d + 1 < depth; ++d) {
            AdapterLayer<Scalar> layer;
            layer.weight.resize(hidden, in);
            for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
                layer.weight.data()[i] = static_cast<Scalar>(rng.next_gaussian() * 0.1);
            layer.bias = Vector<Scalar>::Zero(hidden);
            stack.layers.push_back(std::move(layer));
            in = hidden;
        }
        stack.layers.push_back({Matrix<Scalar>::Zero(width, in), Vector<Scalar>::Zero(width)});
        return stack;
    }

    void validate() const {
        if (layers.empty()) throw DimensionMismatch("adapter: at least one layer required");
        for (std::size_t i = 0; i + 1 < layers.size(); ++i)
            if (layers[i].out_width() != layers[i + 1].in_width())
                throw DimensionMismatch("adapter: adjacent layer widths do not compose");
        for (const auto& layer : layers)
            if (layer.bias.size() != layer.out_width())
                throw DimensionMismatch("adapter: bias length does not match layer output");
    }
};

/// Applies the stack along the last (width) axis at every (b,c,f,h) site.
/// The stack must map the tensor's width back to itself.
template <typename Scalar>
Tensor5<Scalar> adapter_forward(const Tensor5<Scalar>& x, const AdapterStack<Scalar>& stack) {
    stack.validate();
    if (stack.layers.front().in_width() != x.shape.w)
        throw DimensionMismatch("adapter_forward: first layer width does not match tensor width");
    if (stack.layers.back().out_width() != x.shape.w)
        throw DimensionMismatch("adapter_forward: final layer must restore tensor width");

    const Eigen::Index sites = x.shape.total() / x.shape.w;
    Eigen::Map<const RowMajorMatrix<Scalar>> rows(x.data.data(), sites, x.shape.w);
    RowMajorMatrix<Scalar> current = rows;
    for (std::size_t i = 0; i < stack.layers.size(); ++i) {
        if (i > 0 && stack.nonlinearity == Nonlinearity::Relu)
            current = current.cwiseMax(Scalar(0));
        current = (current * stack.layers[i].weight.transpose()).rowwise() +
                  stack.layers[i].bias.transpose();
    }

    Tensor5<Scalar> out;
    out.shape = x.shape;
    out.data = Eigen::Map<const Vector<Scalar>>(current.data(), current.size());
    return out;
}

template <typename Scalar>
using BlockMap = std::function<Tensor5<Scalar>(const Tensor5<Scalar>&)>;

/// Spatial residual wiring: base(X) + alpha * adapter(base(X)).
/// The frame axis must be singleton.
template <typename Scalar>
Tensor5<Scalar> spatial_block_forward(const Tensor5<Scalar>& x, const BlockMap<Scalar>& base,
                                      const AdapterStack<Scalar>& stack, Scalar alpha) {
    if (x.shape.f != 1)
        throw FrameAxisNotSingleton("spatial_block_forward: frame axis must be 1");
    Tensor5<Scalar> base_out = base(x);
    require_same_shape(base_out, x, "spatial_block_forward");
    Tensor5<Scalar> out;
    out.shape = base_out.shape;
    out.data = base_out.data + alpha * adapter_forward(base_out, stack).data;
    return out;
}

/// Temporal residual wiring: base(Y) + beta * adapter(Y). The adapter taps
/// the block input, not the block output.
template <typename Scalar>
Tensor5<Scalar> temporal_block_forward(const Tensor5<Scalar>& y, const BlockMap<Scalar>& base,
                                       const AdapterStack<Scalar>& stack, Scalar beta) {
    Tensor5<Scalar> base_out = base(y);
    require_same_shape(base_out, y, "temporal_block_forward");
    Tensor5<Scalar> out;
    out.shape = base_out.shape;
    out.data = base_out.data + beta * adapter_forward(y, stack).data;
    return out;
}

// Overloads scaling by the stack's own weight coefficient.
template <typename Scalar>
Tensor5<Scalar> spatial_block_forward(const Tensor5<Scalar>& x, const BlockMap<Scalar>& base,
                                      const AdapterStack<Scalar>& stack) {
    return spatial_block_forward(x, base, stack, stack.scale);
}

template <typename Scalar>
Tensor5<Scalar> temporal_block_forward(const Tensor5<Scalar>& y, const BlockMap<Scalar>& base,
                                       const AdapterStack<Scalar>& stack) {
    return temporal_block_forward(y, base, stack, stack.scale);
}

// ---------------------------------------------------------------------------
// Augmented text projection

/// Frozen projection (w x r) plus a low-rank trainable bypass (w x e, e x r)
/// and a tag embedding added to every token row before both paths.
template <typename Scalar>
struct TextEncoderAugment {
    Matrix<Scalar> base_weight;                          // w x r, frozen
    Matrix<Scalar> adapter_down;                         // w x e, trainable
    Matrix<Scalar> adapter_up;                           // e x r, trainable
    Eigen::RowVector<Scalar, Eigen::Dynamic> tag_embedding;  // 1 x w, broadcast over tokens
    Scalar gamma = Scalar(1);

    void validate() const {
        if (base_weight.rows() < 1 || base_weight.cols() < 1)
            throw DimensionMismatch("text augment: base projection is empty");
        if (adapter_down.rows() != base_weight.rows())
            throw DimensionMismatch("text augment: adapter_down rows must match base rows");
        if (adapter_up.cols() != base_weight.cols())
            throw DimensionMismatch("text augment: adapter_up cols must match base cols");
        if (adapter_down.cols() != adapter_up.rows())
            throw DimensionMismatch("text augment: low-rank widths do not compose");
        if (tag_embedding.size() != base_weight.rows())
            throw DimensionMismatch("text augment: tag embedding width must match base rows");
    }
};

/// (tokens x w) -> (tokens x r):
///   Y = (X + tag) W + gamma (X + tag) Down Up
template <typename Scalar>
Matrix<Scalar> augmented_text_encode(const Matrix<Scalar>& tokens,
                                     const TextEncoderAugment<Scalar>& augment) {
    augment.validate();
    if (tokens.cols() != augment.base_weight.rows())
        throw DimensionMismatch("augmented_text_encode: token width must match base rows");
    const Matrix<Scalar> shifted = tokens.rowwise() + augment.tag_embedding;
    return shifted * augment.base_weight +
           augment.gamma * ((shifted * augment.adapter_down) * augment.adapter_up);
}

}  // namespace lapsekit::diffusion
