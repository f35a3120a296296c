#include "dds/network.hpp"

#include <cmath>
#include <random>

namespace dds {

ParamGroup head_group(int side) {
  switch (side) {
    case 1: return ParamGroup::kHead1;
    case 2: return ParamGroup::kHead2;
    case 3: return ParamGroup::kHead3;
    case 4: return ParamGroup::kHead4;
    case 5: return ParamGroup::kHead5;
  }
  throw ConfigError("head_group: side must be in 1..5");
}

std::string to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::kDa: return "da";
    case ParamGroup::kBackbone: return "backbone";
    case ParamGroup::kHead1: return "head1";
    case ParamGroup::kHead2: return "head2";
    case ParamGroup::kHead3: return "head3";
    case ParamGroup::kHead4: return "head4";
    case ParamGroup::kHead5: return "head5";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Profiles

BackboneProfile BackboneProfile::mini() {
  BackboneProfile p;
  p.name = "mini";
  const std::array<int, 5> widths{16, 32, 64, 64, 64};
  const std::array<int, 5> strides{2, 2, 2, 1, 1};
  const std::array<int, 5> dilations{1, 1, 1, 2, 4};
  for (int s = 0; s < 5; ++s) {
    StageDef& st = p.stages[static_cast<std::size_t>(s)];
    st.convs.push_back({widths[s], 3, strides[s], 1});
    st.convs.push_back({widths[s], 3, 1, dilations[s]});
    p.tap_channels[static_cast<std::size_t>(s)] = widths[s];
  }
  return p;
}

BackboneProfile BackboneProfile::resnet50_dilated() {
  BackboneProfile p;
  p.name = "resnet50-dilated";
  // Stem: 7x7/2. The following stage starts with the 3x3/2 max pool.
  p.stages[0].convs.push_back({64, 7, 2, 1});

  auto residual_stage = [](int count, int mid, int out, int stride, int dilation) {
    StageDef st;
    for (int i = 0; i < count; ++i) {
      BottleneckDef b;
      b.mid_ch = mid;
      b.out_ch = out;
      b.stride = (i == 0) ? stride : 1;
      b.dilation = dilation;
      b.project = (i == 0);
      st.bottlenecks.push_back(b);
    }
    return st;
  };
  p.stages[1] = residual_stage(3, 64, 256, 1, 1);
  p.stages[1].maxpool_first = true;
  p.stages[2] = residual_stage(4, 128, 512, 2, 1);
  p.stages[3] = residual_stage(6, 256, 1024, 1, 2);  // stride swapped for dilation
  p.stages[4] = residual_stage(3, 512, 2048, 1, 4);
  p.tap_channels = {64, 256, 512, 1024, 2048};
  return p;
}

BackboneProfile BackboneProfile::by_name(const std::string& name) {
  if (name == "mini") return mini();
  if (name == "resnet50-dilated") return resnet50_dilated();
  throw ConfigError("unknown backbone profile: " + name);
}

// ---------------------------------------------------------------------------
// Layers

ConvLayer::ConvLayer(ConvGeom g, bool bias) : geom(g), has_bias(bias) {
  w = Tensor({g.out_ch, g.in_per_group(), g.k, g.k});
  dw = Tensor({g.out_ch, g.in_per_group(), g.k, g.k});
  if (has_bias) {
    b = Tensor({g.out_ch});
    db = Tensor({g.out_ch});
  }
}

Tensor ConvLayer::forward(const Tensor& x) {
  x_cache_ = x;
  return conv2d_forward(x, w, has_bias ? &b : nullptr, geom);
}

Tensor ConvLayer::backward(const Tensor& dy) {
  conv2d_backward_params(x_cache_, dy, geom, dw, has_bias ? &db : nullptr);
  return conv2d_backward_input(dy, w, geom, x_cache_.dim(1), x_cache_.dim(2));
}

Tensor BottleneckLayer::forward(const Tensor& x) {
  a_cache_ = relu(reduce.forward(x));
  b_cache_ = relu(spatial.forward(a_cache_));
  Tensor y = expand.forward(b_cache_);
  y.add_scaled(has_proj ? proj.forward(x) : x, 1.0);
  y_cache_ = relu(y);
  return y_cache_;
}

Tensor BottleneckLayer::backward(const Tensor& dy) {
  Tensor dz = relu_backward(dy, y_cache_);
  Tensor da = relu_backward(expand.backward(dz), b_cache_);
  Tensor dx = reduce.backward(relu_backward(spatial.backward(da), a_cache_));
  if (has_proj)
    dx.add_scaled(proj.backward(dz), 1.0);
  else
    dx.add_scaled(dz, 1.0);
  return dx;
}

Tensor Stage::forward(const Tensor& x) {
  Tensor t = x;
  if (maxpool_first) {
    pool_in_c_ = t.dim(0);
    pool_in_h_ = t.dim(1);
    pool_in_w_ = t.dim(2);
    t = maxpool3x3s2_forward(t, pool_argmax_);
  }
  if (!convs.empty()) {
    relu_cache_.assign(convs.size(), Tensor());
    for (std::size_t i = 0; i < convs.size(); ++i) {
      t = relu(convs[i].forward(t));
      relu_cache_[i] = t;
    }
  }
  for (BottleneckLayer& blk : blocks) t = blk.forward(t);
  return t;
}

Tensor Stage::backward(const Tensor& dy) {
  Tensor dt = dy;
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) dt = it->backward(dt);
  for (std::size_t i = convs.size(); i-- > 0;)
    dt = convs[i].backward(relu_backward(dt, relu_cache_[i]));
  if (maxpool_first) dt = maxpool3x3s2_backward(dt, pool_argmax_, pool_in_c_, pool_in_h_, pool_in_w_);
  return dt;
}

// ---------------------------------------------------------------------------
// Network assembly

namespace {

ConvGeom make_geom(int in_ch, int out_ch, int k, int stride, int dilation) {
  ConvGeom g;
  g.in_ch = in_ch;
  g.out_ch = out_ch;
  g.k = k;
  g.stride = stride;
  g.pad = dilation * (k - 1) / 2;
  g.dilation = dilation;
  return g;
}

}  // namespace

DdsNet::DdsNet(NetConfig cfg) : cfg_(std::move(cfg)), profile_(BackboneProfile::by_name(cfg_.profile)) {
  if (cfg_.blocks_n <= 0) throw ConfigError("DdsNet: block count must be positive");
  if (cfg_.da_kernel_size <= 0 || cfg_.da_kernel_size % 2 == 0)
    throw ConfigError("DdsNet: distortion kernel size must be odd");
  if (cfg_.head_channels != kMciChannels)
    throw ConfigError("DdsNet: head compression width must match the context-integration width");

  if (cfg_.enable_da) da_.kernels = DistortionKernels(cfg_.blocks_n, cfg_.da_kernel_size);

  int in_ch = 3;
  for (int s = 0; s < 5; ++s) {
    const StageDef& def = profile_.stages[static_cast<std::size_t>(s)];
    Stage& st = stages_[static_cast<std::size_t>(s)];
    st.maxpool_first = def.maxpool_first;
    for (const ConvDef& cd : def.convs) {
      st.convs.emplace_back(make_geom(in_ch, cd.out_ch, cd.k, cd.stride, cd.dilation), true);
      in_ch = cd.out_ch;
    }
    for (const BottleneckDef& bd : def.bottlenecks) {
      BottleneckLayer blk;
      blk.reduce = ConvLayer(make_geom(in_ch, bd.mid_ch, 1, 1, 1), true);
      blk.spatial = ConvLayer(make_geom(bd.mid_ch, bd.mid_ch, 3, bd.stride, bd.dilation), true);
      blk.expand = ConvLayer(make_geom(bd.mid_ch, bd.out_ch, 1, 1, 1), true);
      blk.has_proj = bd.project;
      if (bd.project) blk.proj = ConvLayer(make_geom(in_ch, bd.out_ch, 1, bd.stride, 1), true);
      st.blocks.push_back(std::move(blk));
      in_ch = bd.out_ch;
    }
  }

  const int hc = cfg_.head_channels;
  for (int s = 0; s < 5; ++s)
    compress_[static_cast<std::size_t>(s)] =
        ConvLayer(make_geom(profile_.tap_channels[static_cast<std::size_t>(s)], hc, 1, 1, 1), true);
  if (cfg_.enable_mci) mci_.params = MciParams(hc);
  for (int s = 0; s < 4; ++s)
    fuse_[static_cast<std::size_t>(s)] = ConvLayer(make_geom(hc + 1, hc, 3, 1, 1), true);
  for (int s = 0; s < 5; ++s)
    score_[static_cast<std::size_t>(s)] = ConvLayer(make_geom(hc, 1, 1, 1, 1), true);

  if (cfg_.enable_da) {
    da_.grads = DistortionKernels(cfg_.blocks_n, cfg_.da_kernel_size);
  }
  if (cfg_.enable_mci) mci_.grads = MciParams(hc);

  register_params();
}

void DdsNet::register_params() {
  auto add_conv = [this](const std::string& name, ParamGroup group, ConvLayer& layer) {
    params_.push_back({name + ".w", group, &layer.w, &layer.dw});
    if (layer.has_bias) params_.push_back({name + ".b", group, &layer.b, &layer.db});
  };

  if (cfg_.enable_da)
    params_.push_back({"da.kernels", ParamGroup::kDa, &da_.kernels.weights, &da_.grads.weights});

  for (int s = 0; s < 5; ++s) {
    Stage& st = stages_[static_cast<std::size_t>(s)];
    const std::string stage_name = "backbone.stage" + std::to_string(s + 1);
    for (std::size_t i = 0; i < st.convs.size(); ++i)
      add_conv(stage_name + ".conv" + std::to_string(i + 1), ParamGroup::kBackbone, st.convs[i]);
    for (std::size_t i = 0; i < st.blocks.size(); ++i) {
      const std::string blk = stage_name + ".block" + std::to_string(i + 1);
      add_conv(blk + ".reduce", ParamGroup::kBackbone, st.blocks[i].reduce);
      add_conv(blk + ".spatial", ParamGroup::kBackbone, st.blocks[i].spatial);
      add_conv(blk + ".expand", ParamGroup::kBackbone, st.blocks[i].expand);
      if (st.blocks[i].has_proj) add_conv(blk + ".proj", ParamGroup::kBackbone, st.blocks[i].proj);
    }
  }

  for (int s = 1; s <= 5; ++s) {
    const ParamGroup grp = head_group(s);
    const std::string head = "head" + std::to_string(s);
    add_conv(head + ".compress", grp, compress_[static_cast<std::size_t>(s - 1)]);
    if (s == 5 && cfg_.enable_mci) {
      for (int b = 0; b < kMciBranches; ++b) {
        const std::string br = head + ".mci.branch" + std::to_string(b + 1);
        params_.push_back({br + ".w", grp, &mci_.params.weights[b], &mci_.grads.weights[b]});
        params_.push_back({br + ".b", grp, &mci_.params.biases[b], &mci_.grads.biases[b]});
      }
    }
    if (s < 5) add_conv(head + ".fuse", grp, fuse_[static_cast<std::size_t>(s - 1)]);
    add_conv(head + ".score", grp, score_[static_cast<std::size_t>(s - 1)]);
  }
}

void DdsNet::init_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (ParamRef& p : params_) {
    if (p.group == ParamGroup::kDa) {
      p.value->fill(0.0);  // identity start for the distortion module
      continue;
    }
    if (p.value->ndim() == 1) {
      p.value->fill(0.0);  // biases
      continue;
    }
    if (p.name.ends_with(".score.w")) {
      // Saliency scores start at zero logits: the first iterations see a
      // bounded |I|*ln2 loss instead of whatever random projections give.
      p.value->fill(0.0);
      continue;
    }
    const int fan_in = p.value->dim(1) * p.value->dim(2) * p.value->dim(3);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (std::int64_t i = 0; i < p.value->size(); ++i) (*p.value)[i] = stddev * normal(rng);
  }
}

void DdsNet::zero_grads() {
  for (ParamRef& p : params_) p.grad->fill(0.0);
}

std::int64_t DdsNet::total_param_count() const {
  std::int64_t n = 0;
  for (const ParamRef& p : params_) n += p.value->size();
  return n;
}

double DdsNet::grad_norm(ParamGroup g) const {
  double s = 0.0;
  for (const ParamRef& p : params_)
    if (p.group == g)
      for (std::int64_t i = 0; i < p.grad->size(); ++i) s += (*p.grad)[i] * (*p.grad)[i];
  return std::sqrt(s);
}

Tensor DdsNet::normalize(const Tensor& x) const {
  Tensor y = x;
  const int h = x.dim(1), w = x.dim(2);
  for (int c = 0; c < 3; ++c) {
    const double m = cfg_.norm_mean[static_cast<std::size_t>(c)];
    const double s = cfg_.norm_std[static_cast<std::size_t>(c)];
    double* p = y.data() + static_cast<std::size_t>(c) * h * w;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; ++i) p[i] = (p[i] - m) / s;
  }
  return y;
}

Tensor DdsNet::normalize_backward(const Tensor& dy) const {
  Tensor dx = dy;
  const int h = dy.dim(1), w = dy.dim(2);
  for (int c = 0; c < 3; ++c) {
    const double s = cfg_.norm_std[static_cast<std::size_t>(c)];
    double* p = dx.data() + static_cast<std::size_t>(c) * h * w;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(h) * w; ++i) p[i] /= s;
  }
  return dx;
}

SideOutputs DdsNet::forward(const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 3) throw ConfigError("DdsNet: input must be (3, H, W)");
  in_h_ = image.dim(1);
  in_w_ = image.dim(2);
  if (in_h_ % 8 != 0 || in_w_ % 8 != 0)
    throw ConfigError("DdsNet: input size must be divisible by 8");
  if (cfg_.enable_da && (in_h_ % cfg_.blocks_n != 0 || in_w_ % cfg_.blocks_n != 0))
    throw ConfigError("DdsNet: input size must be divisible by the block count");

  Tensor t;
  if (cfg_.da_on_normalized) {
    t = normalize(image);
    if (cfg_.enable_da) {
      da_.x_cache = t;
      t = da_forward_grouped(t, da_.kernels);
    }
  } else {
    t = image;
    if (cfg_.enable_da) {
      da_.x_cache = t;
      t = da_forward_grouped(t, da_.kernels);
    }
    t = normalize(t);
  }

  std::array<Tensor, 5> comp;
  for (int s = 0; s < 5; ++s) {
    t = stages_[static_cast<std::size_t>(s)].forward(t);
    comp[static_cast<std::size_t>(s)] = compress_[static_cast<std::size_t>(s)].forward(t);
  }

  SideOutputs out;
  out.logits.resize(5);
  out.strides.assign(profile_.tap_strides.begin(), profile_.tap_strides.end());

  // Deepest side: context integration, then the 1-channel saliency feature.
  Tensor deep = comp[4];
  if (cfg_.enable_mci) {
    mci_.x_cache = deep;
    deep = mci_forward(deep, mci_.params);
  }
  out.logits[4] = score_[4].forward(deep);
  logit_sizes_[4] = {out.logits[4].dim(1), out.logits[4].dim(2)};

  // Progressive refinement: thread each coarser saliency feature into the
  // next finer tap.
  for (int s = 3; s >= 0; --s) {
    const Tensor& tap = comp[static_cast<std::size_t>(s)];
    Tensor guide = resize_bilinear(out.logits[static_cast<std::size_t>(s + 1)], tap.dim(1), tap.dim(2));
    Tensor fused = fuse_[static_cast<std::size_t>(s)].forward(concat_channels(tap, guide));
    fuse_relu_cache_[static_cast<std::size_t>(s)] = relu(fused);
    out.logits[static_cast<std::size_t>(s)] = score_[static_cast<std::size_t>(s)].forward(
        fuse_relu_cache_[static_cast<std::size_t>(s)]);
    logit_sizes_[static_cast<std::size_t>(s)] = {out.logits[static_cast<std::size_t>(s)].dim(1),
                                                 out.logits[static_cast<std::size_t>(s)].dim(2)};
  }

  Tensor full = sigmoid(resize_bilinear(out.logits[0], in_h_, in_w_));
  out.final_map.values = Tensor({in_h_, in_w_});
  std::copy(full.data(), full.data() + full.size(), out.final_map.values.data());
  return out;
}

void DdsNet::backward(const std::vector<Tensor>& dlogits) {
  if (dlogits.size() != kSideOutputs) throw ConfigError("DdsNet::backward: need 5 upstream maps");

  std::array<Tensor, 5> dl;
  for (int s = 0; s < 5; ++s) dl[static_cast<std::size_t>(s)] = dlogits[static_cast<std::size_t>(s)];

  std::array<Tensor, 5> dcomp;
  for (int s = 0; s <= 3; ++s) {
    Tensor df = score_[static_cast<std::size_t>(s)].backward(dl[static_cast<std::size_t>(s)]);
    Tensor dcat = fuse_[static_cast<std::size_t>(s)].backward(
        relu_backward(df, fuse_relu_cache_[static_cast<std::size_t>(s)]));
    dcomp[static_cast<std::size_t>(s)] = slice_channels(dcat, 0, cfg_.head_channels);
    Tensor dguide = slice_channels(dcat, cfg_.head_channels, cfg_.head_channels + 1);
    dl[static_cast<std::size_t>(s + 1)].add_scaled(
        resize_bilinear_backward(dguide, logit_sizes_[static_cast<std::size_t>(s + 1)][0],
                                 logit_sizes_[static_cast<std::size_t>(s + 1)][1]),
        1.0);
  }
  Tensor ddeep = score_[4].backward(dl[4]);
  if (cfg_.enable_mci) {
    MciGradients g = mci_gradients(mci_.x_cache, mci_.params, ddeep);
    for (int b = 0; b < kMciBranches; ++b) {
      mci_.grads.weights[b].add_scaled(g.wrt_params.weights[b], 1.0);
      mci_.grads.biases[b].add_scaled(g.wrt_params.biases[b], 1.0);
    }
    ddeep = std::move(g.wrt_features);
  }
  dcomp[4] = std::move(ddeep);

  Tensor carry;
  for (int s = 4; s >= 0; --s) {
    Tensor dtap = compress_[static_cast<std::size_t>(s)].backward(dcomp[static_cast<std::size_t>(s)]);
    if (s == 4)
      carry = std::move(dtap);
    else
      carry.add_scaled(dtap, 1.0);
    carry = stages_[static_cast<std::size_t>(s)].backward(carry);
  }

  if (cfg_.da_on_normalized) {
    if (cfg_.enable_da) {
      DaGradients g = da_gradients(da_.x_cache, da_.kernels, carry);
      da_.grads.weights.add_scaled(g.wrt_kernels.weights, 1.0);
      carry = std::move(g.wrt_image);
    }
    carry = normalize_backward(carry);
  } else {
    carry = normalize_backward(carry);
    if (cfg_.enable_da) {
      DaGradients g = da_gradients(da_.x_cache, da_.kernels, carry);
      da_.grads.weights.add_scaled(g.wrt_kernels.weights, 1.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Analytic parameter / multiply-add accounting

namespace {

struct Counter {
  std::int64_t params = 0;
  std::int64_t macs = 0;

  void conv(int in_ch, int out_ch, int k, int groups, bool bias, std::int64_t out_h,
            std::int64_t out_w) {
    const std::int64_t weights = static_cast<std::int64_t>(out_ch) * (in_ch / groups) * k * k;
    params += weights + (bias ? out_ch : 0);
    macs += weights * out_h * out_w;
  }
};

}  // namespace

CountReport count_params_flops(const NetConfig& cfg, int width, int height) {
  const BackboneProfile profile = BackboneProfile::by_name(cfg.profile);
  if (width <= 0 || height <= 0 || width % 8 != 0 || height % 8 != 0)
    throw ConfigError("count_params_flops: input size must be positive and divisible by 8");

  Counter c;
  int h = height, w = width;

  if (cfg.enable_da) {
    const int n = cfg.blocks_n, k = cfg.da_kernel_size;
    c.params += static_cast<std::int64_t>(n) * n * 3 * 3 * k * k;
    c.macs += static_cast<std::int64_t>(h) * w * 3 * 3 * k * k;
  }

  int in_ch = 3;
  std::array<std::array<int, 2>, 5> tap_sizes{};
  for (int s = 0; s < 5; ++s) {
    const StageDef& st = profile.stages[static_cast<std::size_t>(s)];
    if (st.maxpool_first) {
      h = conv_out_size(h, 3, 2, 1, 1);
      w = conv_out_size(w, 3, 2, 1, 1);
    }
    for (const ConvDef& cd : st.convs) {
      const int pad = cd.dilation * (cd.k - 1) / 2;
      h = conv_out_size(h, cd.k, cd.stride, pad, cd.dilation);
      w = conv_out_size(w, cd.k, cd.stride, pad, cd.dilation);
      c.conv(in_ch, cd.out_ch, cd.k, 1, true, h, w);
      in_ch = cd.out_ch;
    }
    for (const BottleneckDef& bd : st.bottlenecks) {
      const int h_in = h, w_in = w;
      c.conv(in_ch, bd.mid_ch, 1, 1, true, h_in, w_in);
      h = conv_out_size(h, 3, bd.stride, bd.dilation, bd.dilation);
      w = conv_out_size(w, 3, bd.stride, bd.dilation, bd.dilation);
      c.conv(bd.mid_ch, bd.mid_ch, 3, 1, true, h, w);
      c.conv(bd.mid_ch, bd.out_ch, 1, 1, true, h, w);
      if (bd.project) c.conv(in_ch, bd.out_ch, 1, 1, true, h, w);
      in_ch = bd.out_ch;
    }
    tap_sizes[static_cast<std::size_t>(s)] = {h, w};
  }

  const int hc = cfg.head_channels;
  for (int s = 0; s < 5; ++s) {
    const auto [th, tw] = tap_sizes[static_cast<std::size_t>(s)];
    c.conv(profile.tap_channels[static_cast<std::size_t>(s)], hc, 1, 1, true, th, tw);  // compress
    c.conv(hc, 1, 1, 1, true, th, tw);                                                  // score
    if (s < 4) c.conv(hc + 1, hc, 3, 1, true, th, tw);                                  // fuse
  }
  if (cfg.enable_mci) {
    const auto [th, tw] = tap_sizes[4];
    for (int b = 0; b < kMciBranches; ++b) c.conv(hc, kMciChannels, 3, 1, true, th, tw);
  }

  return {c.params, c.macs};
}

}  // namespace dds
