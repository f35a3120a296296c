#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dds/conv.hpp"
#include "dds/distortion.hpp"
#include "dds/image.hpp"
#include "dds/mci.hpp"
#include "dds/tensor.hpp"

namespace dds {

/// Learnable-parameter partition: the distortion-adaptive kernels, the
/// feature extractor, and one group per side output. Disjoint and
/// exhaustive; the optimizer keys learning rates off it.
enum class ParamGroup { kDa, kBackbone, kHead1, kHead2, kHead3, kHead4, kHead5 };

ParamGroup head_group(int side);  // side in 1..5
std::string to_string(ParamGroup g);

struct ParamRef {
  std::string name;
  ParamGroup group;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

// ---------------------------------------------------------------------------
// Backbone profiles

struct ConvDef {
  int out_ch = 0;
  int k = 3;
  int stride = 1;
  int dilation = 1;
};

struct BottleneckDef {
  int mid_ch = 0;
  int out_ch = 0;
  int stride = 1;
  int dilation = 1;
  bool project = false;
};

struct StageDef {
  bool maxpool_first = false;
  std::vector<ConvDef> convs;              // plain stage
  std::vector<BottleneckDef> bottlenecks;  // residual stage
};

/// Five-stage feature extractor description. Output strides are fixed at
/// [2, 4, 8, 8, 8]: the last two stages trade stride for dilation rates
/// 2 and 4, so the deepest feature map is H/8 x W/8.
struct BackboneProfile {
  std::string name;
  std::array<StageDef, 5> stages;
  std::array<int, 5> tap_channels{};
  std::array<int, 5> tap_strides{2, 4, 8, 8, 8};

  /// Reduced-width plain-convolution profile for desk-scale runs.
  static BackboneProfile mini();
  /// ResNet-50 with the last two stages dilated to keep stride 8.
  static BackboneProfile resnet50_dilated();
  static BackboneProfile by_name(const std::string& name);
};

// ---------------------------------------------------------------------------
// Network configuration and outputs

struct NetConfig {
  std::string profile = "mini";
  int blocks_n = 4;       // distortion-adaptive grid
  int da_kernel_size = 3;
  bool enable_da = true;
  bool enable_mci = true;
  /// Apply the distortion-adaptive module after input normalization
  /// instead of on the raw [0,1] raster.
  bool da_on_normalized = false;
  std::array<double, 3> norm_mean{0.485, 0.456, 0.406};
  std::array<double, 3> norm_std{0.229, 0.224, 0.225};
  int head_channels = 128;  // per-tap compression width, matches the MCI width
};

constexpr int kSideOutputs = 5;

/// Per-level saliency logits, finest (stride 2) first, plus the final map:
/// sigmoid of side output 1 upsampled to the input resolution.
struct SideOutputs {
  std::vector<Tensor> logits;  // 5 entries, each (1, h_s, w_s)
  std::vector<int> strides;    // {2, 4, 8, 8, 8}
  SaliencyMap final_map;
};

struct CountReport {
  std::int64_t params = 0;
  std::int64_t macs = 0;  // multiply-accumulate ops of all convolutions
};

// ---------------------------------------------------------------------------
// Layers (shared by the backbone and the decoder)

struct ConvLayer {
  ConvGeom geom;
  bool has_bias = true;
  Tensor w, dw, b, db;

  ConvLayer() = default;
  ConvLayer(ConvGeom g, bool bias);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  Tensor x_cache_;
};

struct BottleneckLayer {
  ConvLayer reduce, spatial, expand, proj;
  bool has_proj = false;

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  Tensor a_cache_, b_cache_, y_cache_;
};

struct Stage {
  bool maxpool_first = false;
  std::vector<ConvLayer> convs;
  std::vector<BottleneckLayer> blocks;

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  std::vector<Tensor> relu_cache_;
  std::vector<std::int64_t> pool_argmax_;
  int pool_in_c_ = 0, pool_in_h_ = 0, pool_in_w_ = 0;
};

// ---------------------------------------------------------------------------

/// The assembled pipeline: distortion adaptation, five-stage feature
/// extractor with per-stage side taps, per-tap channel compression,
/// multi-scale context integration at the deepest tap, and a progressive
/// coarse-to-fine decoder that threads each coarser saliency feature into
/// the next finer level.
class DdsNet {
 public:
  explicit DdsNet(NetConfig cfg);
  DdsNet(const DdsNet&) = delete;
  DdsNet& operator=(const DdsNet&) = delete;

  const NetConfig& config() const { return cfg_; }
  const BackboneProfile& profile() const { return profile_; }

  /// He-normal weights, zero biases, zero distortion kernels (the module
  /// starts as an identity and learns corrections).
  void init_params(std::uint64_t seed);

  /// Input must be a (3, H, W) raster with H, W divisible by 8 and by the
  /// block count. Caches activations for a subsequent backward().
  SideOutputs forward(const Tensor& image);

  /// Upstream gradients, one per side-output logit map.
  void backward(const std::vector<Tensor>& dlogits);

  void zero_grads();
  std::vector<ParamRef>& params() { return params_; }
  const std::vector<ParamRef>& params() const { return params_; }
  std::int64_t total_param_count() const;
  double grad_norm(ParamGroup g) const;

  DistortionKernels& da_kernels() { return da_.kernels; }

 private:
  struct DaState {
    DistortionKernels kernels, grads;
    Tensor x_cache;
  };
  struct MciState {
    MciParams params, grads;
    Tensor x_cache;
  };

  void register_params();
  Tensor normalize(const Tensor& x) const;
  Tensor normalize_backward(const Tensor& dy) const;

  NetConfig cfg_;
  BackboneProfile profile_;

  DaState da_;
  std::array<Stage, 5> stages_;
  std::array<ConvLayer, 5> compress_;  // index 0 = side 1 (finest)
  MciState mci_;
  std::array<ConvLayer, 4> fuse_;  // sides 1..4
  std::array<ConvLayer, 5> score_;

  std::vector<ParamRef> params_;

  // forward caches
  std::array<Tensor, 4> fuse_relu_cache_;
  std::array<std::array<int, 2>, 5> logit_sizes_{};
  int in_h_ = 0, in_w_ = 0;
};

/// Layer-shape accounting of learnable parameters and convolution
/// multiply-adds at the given input size; nothing is executed.
CountReport count_params_flops(const NetConfig& cfg, int width, int height);

}  // namespace dds
