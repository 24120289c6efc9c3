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

#include "dce/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dce {
namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double w_lo;
  double w_hi;
};

// Output index j samples input coordinate (j + 0.5) / 2 - 0.5, clamped to [0, n - 1].
std::vector<Tap> bilinear_taps(std::size_t n) {
  std::vector<Tap> taps(2 * n);
  const double last = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < 2 * n; ++j) {
    const double c = std::clamp((static_cast<double>(j) + 0.5) / 2.0 - 0.5, 0.0, last);
    const auto lo = static_cast<std::size_t>(std::floor(c));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double w = c - static_cast<double>(lo);
    taps[j] = {lo, hi, 1.0 - w, w};
  }
  return taps;
}

// x: C x F x T  ->  tmp: C x 2F x T  ->  out: C x 2F x 2T
void upsample_into(const double* x, std::size_t channels, std::size_t freq, std::size_t time, double* tmp,
                   double* out) {
  const auto ftaps = bilinear_taps(freq);
  const auto ttaps = bilinear_taps(time);
  const std::size_t f2 = 2 * freq;
  const std::size_t t2 = 2 * time;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* xc = x + c * freq * time;
    double* tc = tmp + c * f2 * time;
    for (std::size_t j = 0; j < f2; ++j) {
      const Tap& tap = ftaps[j];
      const double* lo = xc + tap.lo * time;
      const double* hi = xc + tap.hi * time;
      double* row = tc + j * time;
      for (std::size_t t = 0; t < time; ++t) row[t] = tap.w_lo * lo[t] + tap.w_hi * hi[t];
    }
    double* oc = out + c * f2 * t2;
    for (std::size_t f = 0; f < f2; ++f) {
      const double* src = tc + f * time;
      double* dst = oc + f * t2;
      for (std::size_t j = 0; j < t2; ++j) dst[j] = ttaps[j].w_lo * src[ttaps[j].lo] + ttaps[j].w_hi * src[ttaps[j].hi];
    }
  }
}

// Adjoint of upsample_into. dy: C x 2F x 2T -> tmp: C x 2F x T -> dx: C x F x T.
void upsample_adjoint_into(const double* dy, std::size_t channels, std::size_t freq, std::size_t time, double* tmp,
                           double* dx) {
  const auto ftaps = bilinear_taps(freq);
  const auto ttaps = bilinear_taps(time);
  const std::size_t f2 = 2 * freq;
  const std::size_t t2 = 2 * time;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* gc = dy + c * f2 * t2;
    double* tc = tmp + c * f2 * time;
    for (std::size_t f = 0; f < f2; ++f) {
      const double* src = gc + f * t2;
      double* dst = tc + f * time;
      std::fill(dst, dst + time, 0.0);
      for (std::size_t j = 0; j < t2; ++j) {
        dst[ttaps[j].lo] += ttaps[j].w_lo * src[j];
        dst[ttaps[j].hi] += ttaps[j].w_hi * src[j];
      }
    }
    double* xc = dx + c * freq * time;
    std::fill(xc, xc + freq * time, 0.0);
    for (std::size_t j = 0; j < f2; ++j) {
      const Tap& tap = ftaps[j];
      const double* row = tc + j * time;
      double* lo = xc + tap.lo * time;
      double* hi = xc + tap.hi * time;
      for (std::size_t t = 0; t < time; ++t) {
        lo[t] += tap.w_lo * row[t];
        hi[t] += tap.w_hi * row[t];
      }
    }
  }
}

void batchnorm_into(const RealTensor3& x, std::span<const double> gamma, std::span<const double> beta, double eps,
                    RealTensor3& y, RealTensor3& normalized, std::vector<double>& inv_std) {
  const std::size_t n = x.plane();
  const auto nd = static_cast<double>(n);
  inv_std.resize(x.channels());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const double* xc = x.data().data() + c * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xc[i];
    mean /= nd;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xc[i] - mean) * (xc[i] - mean);
    var /= nd;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[c] = is;
    double* hc = normalized.data().data() + c * n;
    double* yc = y.data().data() + c * n;
    for (std::size_t i = 0; i < n; ++i) {
      hc[i] = (xc[i] - mean) * is;
      yc[i] = gamma[c] * hc[i] + beta[c];
    }
  }
}

void batchnorm_adjoint_into(const RealTensor3& normalized, const std::vector<double>& inv_std,
                            std::span<const double> gamma, const RealTensor3& dy, std::span<double> dgamma,
                            std::span<double> dbeta, RealTensor3& dx) {
  const std::size_t n = normalized.plane();
  const auto nd = static_cast<double>(n);
  for (std::size_t c = 0; c < normalized.channels(); ++c) {
    const double* hc = normalized.data().data() + c * n;
    const double* gc = dy.data().data() + c * n;
    double sum_g = 0.0;
    double sum_gh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_g += gc[i];
      sum_gh += gc[i] * hc[i];
    }
    dbeta[c] = sum_g;
    dgamma[c] = sum_gh;
    const double scale = gamma[c] * inv_std[c] / nd;
    double* xc = dx.data().data() + c * n;
    for (std::size_t i = 0; i < n; ++i) xc[i] = scale * (nd * gc[i] - sum_g - hc[i] * sum_gh);
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace

// ---- architecture / parameters -------------------------------------------

void DecoderArch::validate() const {
  require(layers >= 1, "decoder: at least one hidden layer required");
  require(width >= 1 && out_channels >= 1, "decoder: widths must be positive");
  const std::size_t factor = std::size_t{1} << upsample_layers();
  require(out_freq % factor == 0 && out_time % factor == 0 && out_freq >= factor && out_time >= factor,
          "decoder: output grid " + std::to_string(out_freq) + "x" + std::to_string(out_time) +
              " not divisible by 2^" + std::to_string(upsample_layers()));
  require(input_freq() * input_time() >= 2 || layers > 1, "decoder: batchnorm needs at least two positions");
}

std::size_t weight_count(const DecoderArch& arch) {
  const std::size_t k = arch.width;
  return arch.layers * k * k + k * arch.out_channels + arch.layers * 2 * k;
}

DecoderParams::DecoderParams(const DecoderArch& arch) : layers_(arch.layers), width_(arch.width) {
  std::size_t offset = 0;
  for (std::size_t i = 0; i <= arch.layers; ++i) {
    const std::size_t rows = (i == arch.layers) ? arch.out_channels : arch.width;
    conv_.push_back({offset, rows, arch.width});
    offset += rows * arch.width;
  }
  for (std::size_t i = 0; i < arch.layers; ++i) {
    gamma_offset_.push_back(offset);
    offset += arch.width;
    beta_offset_.push_back(offset);
    offset += arch.width;
  }
  values_.assign(offset, 0.0);
}

RealMatrixMap DecoderParams::conv(std::size_t i) {
  const Block& b = conv_.at(i);
  return {values_.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
}

ConstRealMatrixMap DecoderParams::conv(std::size_t i) const {
  const Block& b = conv_.at(i);
  return {values_.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
}

std::span<double> DecoderParams::gamma(std::size_t i) { return {values_.data() + gamma_offset_.at(i), width_}; }
std::span<const double> DecoderParams::gamma(std::size_t i) const {
  return {values_.data() + gamma_offset_.at(i), width_};
}
std::span<double> DecoderParams::beta(std::size_t i) { return {values_.data() + beta_offset_.at(i), width_}; }
std::span<const double> DecoderParams::beta(std::size_t i) const {
  return {values_.data() + beta_offset_.at(i), width_};
}

DecoderParams init_params(const DecoderArch& arch, RngStream& rng) {
  arch.validate();
  DecoderParams params(arch);
  for (std::size_t i = 0; i <= arch.layers; ++i) {
    auto w = params.conv(i);
    const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    const auto draws = draw_uniform(rng, static_cast<std::size_t>(w.size()), -a, a);
    std::copy(draws.begin(), draws.end(), w.data());
  }
  for (std::size_t i = 0; i < arch.layers; ++i) std::ranges::fill(params.gamma(i), 1.0);
  return params;
}

RealTensor3 draw_decoder_input(const DecoderArch& arch, RngStream& rng, double high) {
  arch.validate();
  RealTensor3 z(arch.width, arch.input_freq(), arch.input_time());
  const auto draws = draw_uniform(rng, z.size(), 0.0, high);
  std::ranges::copy(draws, z.data().begin());
  return z;
}

// ---- layers --------------------------------------------------------------

RealTensor3 conv1x1_forward(const RealTensor3& x, ConstRealMatrixMap w) {
  require(static_cast<std::size_t>(w.cols()) == x.channels(),
          "conv1x1: kernel has " + std::to_string(w.cols()) + " columns, input has " +
              std::to_string(x.channels()) + " channels");
  RealTensor3 y(static_cast<std::size_t>(w.rows()), x.freq(), x.time());
  y.matrix().noalias() = w * x.matrix();
  return y;
}

RealTensor3 conv1x1_backward(const RealTensor3& x, ConstRealMatrixMap w, const RealTensor3& dy, RealMatrixMap dw) {
  require(dy.channels() == static_cast<std::size_t>(w.rows()) && dy.plane() == x.plane(),
          "conv1x1_backward: gradient shape mismatch");
  dw.noalias() += dy.matrix() * x.matrix().transpose();
  RealTensor3 dx(x.channels(), x.freq(), x.time());
  dx.matrix().noalias() = w.transpose() * dy.matrix();
  return dx;
}

RealTensor3 upsample2x_forward(const RealTensor3& x) {
  require(x.freq() >= 1 && x.time() >= 1, "upsample2x: empty grid");
  RealTensor3 y(x.channels(), 2 * x.freq(), 2 * x.time());
  std::vector<double> tmp(x.channels() * 2 * x.freq() * x.time());
  upsample_into(x.data().data(), x.channels(), x.freq(), x.time(), tmp.data(), y.data().data());
  return y;
}

RealTensor3 upsample2x_backward(const RealTensor3& dy) {
  require(dy.freq() % 2 == 0 && dy.time() % 2 == 0, "upsample2x_backward: odd gradient grid");
  const std::size_t f = dy.freq() / 2;
  const std::size_t t = dy.time() / 2;
  RealTensor3 dx(dy.channels(), f, t);
  std::vector<double> tmp(dy.channels() * dy.freq() * t);
  upsample_adjoint_into(dy.data().data(), dy.channels(), f, t, tmp.data(), dx.data().data());
  return dx;
}

RealTensor3 relu_forward(const RealTensor3& x) {
  RealTensor3 y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

RealTensor3 relu_backward(const RealTensor3& x, const RealTensor3& dy) {
  require(x.same_shape(dy), "relu_backward: shape mismatch");
  RealTensor3 dx = dy;
  auto xs = x.data();
  auto ds = dx.data();
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!(xs[i] > 0.0)) ds[i] = 0.0;
  return dx;
}

RealTensor3 batchnorm_forward(const RealTensor3& x, std::span<const double> gamma, std::span<const double> beta,
                              double eps, BatchNormCache* cache) {
  require(gamma.size() == x.channels() && beta.size() == x.channels(), "batchnorm: parameter count mismatch");
  RealTensor3 y(x.channels(), x.freq(), x.time());
  BatchNormCache local;
  BatchNormCache& c = cache ? *cache : local;
  c.normalized = RealTensor3(x.channels(), x.freq(), x.time());
  batchnorm_into(x, gamma, beta, eps, y, c.normalized, c.inv_std);
  return y;
}

RealTensor3 batchnorm_backward(const BatchNormCache& cache, std::span<const double> gamma, const RealTensor3& dy,
                               std::span<double> dgamma, std::span<double> dbeta) {
  require(cache.normalized.same_shape(dy), "batchnorm_backward: shape mismatch");
  RealTensor3 dx(dy.channels(), dy.freq(), dy.time());
  batchnorm_adjoint_into(cache.normalized, cache.inv_std, gamma, dy, dgamma, dbeta, dx);
  return dx;
}

// ---- engine --------------------------------------------------------------

struct DecoderEngine::Impl {
  DecoderArch arch;
  std::vector<RealTensor3> conv_out;  // per hidden layer, input resolution
  std::vector<RealTensor3> pre_relu;  // after (optional) upsampling
  std::vector<RealTensor3> relu_out;
  std::vector<RealTensor3> act;  // batchnorm output = next layer input
  std::vector<RealTensor3> normalized;
  std::vector<std::vector<double>> inv_std;
  RealTensor3 output;
  RealTensor3 d_output;
  std::vector<RealTensor3> d_act;
  std::vector<RealTensor3> d_pre;
  std::vector<RealTensor3> d_conv;
  std::vector<double> scratch;

  explicit Impl(const DecoderArch& a) : arch(a) {
    arch.validate();
    const std::size_t k = arch.width;
    std::size_t f = arch.input_freq();
    std::size_t t = arch.input_time();
    std::size_t scratch_size = 0;
    for (std::size_t i = 0; i < arch.layers; ++i) {
      conv_out.emplace_back(k, f, t);
      d_conv.emplace_back(k, f, t);
      if (i + 1 < arch.layers) {
        scratch_size = std::max(scratch_size, k * 2 * f * t);
        f *= 2;
        t *= 2;
      }
      pre_relu.emplace_back(k, f, t);
      relu_out.emplace_back(k, f, t);
      act.emplace_back(k, f, t);
      normalized.emplace_back(k, f, t);
      inv_std.emplace_back(k, 0.0);
      d_act.emplace_back(k, f, t);
      d_pre.emplace_back(k, f, t);
    }
    output = RealTensor3(arch.out_channels, f, t);
    d_output = RealTensor3(arch.out_channels, f, t);
    scratch.resize(scratch_size);
  }

  void run_forward(const DecoderParams& params, const RealTensor3& input) {
    require(input.channels() == arch.width && input.freq() == arch.input_freq() &&
                input.time() == arch.input_time(),
            "decoder_forward: input must be " + std::to_string(arch.width) + "x" +
                std::to_string(arch.input_freq()) + "x" + std::to_string(arch.input_time()));
    require(params.layers() == arch.layers && params.size() == weight_count(arch),
            "decoder_forward: parameters do not match architecture");
    const RealTensor3* x = &input;
    for (std::size_t i = 0; i < arch.layers; ++i) {
      conv_out[i].matrix().noalias() = params.conv(i) * x->matrix();
      if (i + 1 < arch.layers) {
        upsample_into(conv_out[i].data().data(), arch.width, conv_out[i].freq(), conv_out[i].time(),
                      scratch.data(), pre_relu[i].data().data());
      } else {
        std::ranges::copy(conv_out[i].data(), pre_relu[i].data().begin());
      }
      auto src = pre_relu[i].data();
      auto dst = relu_out[i].data();
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] > 0.0 ? src[j] : 0.0;
      batchnorm_into(relu_out[i], params.gamma(i), params.beta(i), arch.bn_eps, act[i], normalized[i], inv_std[i]);
      x = &act[i];
    }
    output.matrix().noalias() = params.conv(arch.layers) * x->matrix();
  }

  double run_backward(const DecoderParams& params, const RealTensor3& input, const RealTensor3& target,
                      DecoderParams& grads) {
    require(target.same_shape(output), "decoder_backward: target must match the output shape");
    double loss = 0.0;
    {
      auto y = output.data();
      auto tg = target.data();
      auto dy = d_output.data();
      for (std::size_t j = 0; j < y.size(); ++j) {
        const double r = y[j] - tg[j];
        loss += r * r;
        dy[j] = 2.0 * r;
      }
    }
    const std::size_t l = arch.layers;
    grads.conv(l).noalias() = d_output.matrix() * act[l - 1].matrix().transpose();
    d_act[l - 1].matrix().noalias() = params.conv(l).transpose() * d_output.matrix();
    for (std::size_t i = l; i-- > 0;) {
      batchnorm_adjoint_into(normalized[i], inv_std[i], params.gamma(i), d_act[i], grads.gamma(i), grads.beta(i),
                             d_pre[i]);
      auto pre = pre_relu[i].data();
      auto g = d_pre[i].data();
      for (std::size_t j = 0; j < g.size(); ++j)
        if (!(pre[j] > 0.0)) g[j] = 0.0;
      if (i + 1 < l) {
        upsample_adjoint_into(d_pre[i].data().data(), arch.width, conv_out[i].freq(), conv_out[i].time(),
                              scratch.data(), d_conv[i].data().data());
      } else {
        std::ranges::copy(d_pre[i].data(), d_conv[i].data().begin());
      }
      const RealTensor3& x = (i == 0) ? input : act[i - 1];
      grads.conv(i).noalias() = d_conv[i].matrix() * x.matrix().transpose();
      if (i > 0) d_act[i - 1].matrix().noalias() = params.conv(i).transpose() * d_conv[i].matrix();
    }
    return loss;
  }
};

DecoderEngine::DecoderEngine(const DecoderArch& arch) : impl_(std::make_unique<Impl>(arch)) {}
DecoderEngine::~DecoderEngine() = default;
DecoderEngine::DecoderEngine(DecoderEngine&&) noexcept = default;
DecoderEngine& DecoderEngine::operator=(DecoderEngine&&) noexcept = default;

const DecoderArch& DecoderEngine::arch() const noexcept { return impl_->arch; }

const RealTensor3& DecoderEngine::forward(const DecoderParams& params, const RealTensor3& input) {
  impl_->run_forward(params, input);
  return impl_->output;
}

double DecoderEngine::loss_and_gradient(const DecoderParams& params, const RealTensor3& input,
                                        const RealTensor3& target, DecoderParams& grads) {
  require(grads.size() == params.size(), "decoder_backward: gradient buffer mismatch");
  impl_->run_forward(params, input);
  return impl_->run_backward(params, input, target, grads);
}

RealTensor3 decoder_forward(const DecoderArch& arch, const DecoderParams& params, const RealTensor3& input) {
  DecoderEngine engine(arch);
  return engine.forward(params, input);
}

LossAndGradient decoder_backward(const DecoderArch& arch, const DecoderParams& params, const RealTensor3& input,
                                 const RealTensor3& target) {
  DecoderEngine engine(arch);
  LossAndGradient out{0.0, DecoderParams(arch)};
  out.loss = engine.loss_and_gradient(params, input, target, out.grads);
  return out;
}

// ---- optimisation --------------------------------------------------------

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  require(params.size() == grads.size() && state.first.size() == params.size() &&
              state.second.size() == params.size(),
          "adam_step: parameter, gradient and moment sizes differ");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first[i] = c.beta1 * state.first[i] + (1.0 - c.beta1) * g;
    state.second[i] = c.beta2 * state.second[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.first[i] / bc1;
    const double v_hat = state.second[i] / bc2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

FitReport fit(const DecoderArch& arch, const RealTensor3& target, const FitOptions& options, RngStream& rng) {
  if (options.epochs == 0) throw std::invalid_argument("fit: epochs must be >= 1");
  arch.validate();
  require(target.channels() == arch.out_channels && target.freq() == arch.out_freq &&
              target.time() == arch.out_time,
          "fit: target shape does not match the decoder output");

  const RealTensor3 input = draw_decoder_input(arch, rng, options.input_high);
  FitReport report;
  report.params = init_params(arch, rng);
  DecoderParams grads(arch);
  AdamState adam(report.params.size(), options.adam);
  DecoderEngine engine(arch);

  report.loss_trace.reserve(options.epochs);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const double loss = engine.loss_and_gradient(report.params, input, target, grads);
    if (!std::isfinite(loss)) throw NonFiniteLoss(epoch, loss);
    report.loss_trace.push_back(loss);
    adam_step(adam, report.params.values(), grads.values());
  }
  report.epochs_run = options.epochs;
  report.output = engine.forward(report.params, input);
  report.final_loss = 0.0;
  auto y = report.output.data();
  auto tg = target.data();
  for (std::size_t j = 0; j < y.size(); ++j) report.final_loss += (y[j] - tg[j]) * (y[j] - tg[j]);
  if (!std::isfinite(report.final_loss)) throw NonFiniteLoss(options.epochs, report.final_loss);
  return report;
}

}  // namespace dce
