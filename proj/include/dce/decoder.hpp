// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dce/rng.hpp"
#include "dce/tensor.hpp"

namespace dce {

/// Shape of the untrained decoder network.
///
/// Hidden layers 0..layers-2 are conv -> 2x bilinear upsample -> ReLU ->
/// batchnorm, hidden layer layers-1 is conv -> ReLU -> batchnorm and the
/// output layer is a bare 1x1 conv. All hidden layers are `width` channels
/// wide and the network input carries `width` channels as well.
struct DecoderArch {
  std::size_t layers = 6;
  std::size_t width = 16;
  std::size_t out_channels = 2;
  std::size_t out_freq = 64;
  std::size_t out_time = 64;
  double bn_eps = 1e-5;

  std::size_t upsample_layers() const noexcept { return layers - 1; }
  std::size_t input_freq() const noexcept { return out_freq >> upsample_layers(); }
  std::size_t input_time() const noexcept { return out_time >> upsample_layers(); }

  /// Throws DimensionMismatch if the output grid is not divisible by 2^(layers-1).
  void validate() const;
};

/// l*k^2 + k*out + 2*k*l: bias-free convs plus a (scale, shift) pair per hidden channel.
std::size_t weight_count(const DecoderArch& arch);

/// All trainable parameters in one contiguous buffer.
///
/// Layout: conv kernels 0..layers (row-major C_out x C_in) followed by the
/// batchnorm scale and shift vectors of every hidden layer. A gradient is
/// stored in the same type.
class DecoderParams {
 public:
  DecoderParams() = default;
  explicit DecoderParams(const DecoderArch& arch);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Kernel of layer i, i == layers is the output layer.
  RealMatrixMap conv(std::size_t i);
  ConstRealMatrixMap conv(std::size_t i) const;
  std::span<double> gamma(std::size_t i);
  std::span<const double> gamma(std::size_t i) const;
  std::span<double> beta(std::size_t i);
  std::span<const double> beta(std::size_t i) const;

  std::size_t layers() const noexcept { return layers_; }

 private:
  struct Block {
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
  };
  std::size_t layers_ = 0;
  std::vector<Block> conv_;
  std::vector<std::size_t> gamma_offset_;
  std::vector<std::size_t> beta_offset_;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

/// Variance-preserving uniform init of the kernels, gamma = 1, beta = 0.
DecoderParams init_params(const DecoderArch& arch, RngStream& rng);

/// Fixed network input: width x input_freq x input_time, uniform on [0, high).
RealTensor3 draw_decoder_input(const DecoderArch& arch, RngStream& rng, double high = 0.1);

// ---- individual layers -------------------------------------------------

RealTensor3 conv1x1_forward(const RealTensor3& x, ConstRealMatrixMap w);
/// Accumulates dL/dW into `dw` and returns dL/dx.
RealTensor3 conv1x1_backward(const RealTensor3& x, ConstRealMatrixMap w, const RealTensor3& dy, RealMatrixMap dw);

/// Half-pixel, edge-clamped separable bilinear upsampling by 2 (freq then time).
RealTensor3 upsample2x_forward(const RealTensor3& x);
/// Adjoint of upsample2x_forward; dy has shape C x 2F x 2T.
RealTensor3 upsample2x_backward(const RealTensor3& dy);

RealTensor3 relu_forward(const RealTensor3& x);
RealTensor3 relu_backward(const RealTensor3& x, const RealTensor3& dy);

/// Per-channel statistics retained from the forward pass.
struct BatchNormCache {
  RealTensor3 normalized;
  std::vector<double> inv_std;
};

/// Always uses the batch statistics of x (population variance over F*T).
RealTensor3 batchnorm_forward(const RealTensor3& x, std::span<const double> gamma, std::span<const double> beta,
                              double eps, BatchNormCache* cache = nullptr);
RealTensor3 batchnorm_backward(const BatchNormCache& cache, std::span<const double> gamma, const RealTensor3& dy,
                               std::span<double> dgamma, std::span<double> dbeta);

// ---- whole network -----------------------------------------------------

RealTensor3 decoder_forward(const DecoderArch& arch, const DecoderParams& params, const RealTensor3& input);

struct LossAndGradient {
  double loss = 0.0;
  DecoderParams grads;
};

/// Loss ||target - forward||^2 (plain sum of squares) and its exact gradient.
LossAndGradient decoder_backward(const DecoderArch& arch, const DecoderParams& params, const RealTensor3& input,
                                 const RealTensor3& target);

/// Reusable buffers for repeated forward/backward passes of one architecture.
class DecoderEngine {
 public:
  explicit DecoderEngine(const DecoderArch& arch);
  ~DecoderEngine();
  DecoderEngine(DecoderEngine&&) noexcept;
  DecoderEngine& operator=(DecoderEngine&&) noexcept;

  const DecoderArch& arch() const noexcept;
  const RealTensor3& forward(const DecoderParams& params, const RealTensor3& input);
  /// Runs forward + backward; writes the gradient into `grads` (overwritten).
  double loss_and_gradient(const DecoderParams& params, const RealTensor3& input, const RealTensor3& target,
                           DecoderParams& grads);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---- optimisation ------------------------------------------------------

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t n, AdamConfig config) : config(config), first(n, 0.0), second(n, 0.0) {}

  AdamConfig config;
  std::vector<double> first;
  std::vector<double> second;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update; the step counter is incremented first.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct FitOptions {
  std::size_t epochs = 1970;
  AdamConfig adam;
  double input_high = 0.1;
};

struct FitReport {
  double final_loss = 0.0;
  std::vector<double> loss_trace;  // loss before each update
  std::size_t epochs_run = 0;
  RealTensor3 output;
  DecoderParams params;
};

/// Fits the decoder to `target` with exactly `options.epochs` full-gradient
/// Adam steps. The input and initial weights are drawn from `rng` (input
/// first). Throws NonFiniteLoss if the loss diverges.
FitReport fit(const DecoderArch& arch, const RealTensor3& target, const FitOptions& options, RngStream& rng);

}  // namespace dce
