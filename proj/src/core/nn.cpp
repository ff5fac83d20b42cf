#include "nn.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

namespace gi::nn {

using MatRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

static float he_std(int fan_in) { return std::sqrt(2.0f / fan_in); }

static void init_normal(Tensor& t, float std, Rng& rng) {
  for (size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<float>(rng.normal()) * std;
}

// ---- Dense ----

Dense::Dense(int in, int out, Rng& rng, bool zero_init)
    : in_(in),
      out_(out),
      w_({out, in}),
      b_({out}),
      gw_({out, in}),
      gb_({out}) {
  if (!zero_init) init_normal(w_, he_std(in), rng);
}

Tensor Dense::forward(const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != in_)
    throw ShapeError("dense: expected [N," + std::to_string(in_) + "], got " +
                     x.shape_str());
  x_ = x;
  int n = x.dim(0);
  Tensor y({n, out_});
  CMapM xm(x.data(), n, in_);
  CMapM wm(w_.data(), out_, in_);
  MapM ym(y.data(), n, out_);
  ym.noalias() = xm * wm.transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < out_; ++j) y[i * out_ + j] += b_[j];
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  int n = x_.dim(0);
  if (dy.rank() != 2 || dy.dim(0) != n || dy.dim(1) != out_)
    throw ShapeError("dense backward: bad grad shape " + dy.shape_str());
  CMapM dym(dy.data(), n, out_);
  CMapM xm(x_.data(), n, in_);
  MapM gwm(gw_.data(), out_, in_);
  gwm.noalias() += dym.transpose() * xm;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < out_; ++j) gb_[j] += dy[i * out_ + j];
  Tensor dx({n, in_});
  MapM dxm(dx.data(), n, in_);
  CMapM wm(w_.data(), out_, in_);
  dxm.noalias() = dym * wm;
  return dx;
}

void Dense::collect_params(const std::string& prefix,
                           std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", &w_, &gw_});
  out.push_back({prefix + ".b", &b_, &gb_});
}

std::string Dense::spec() const {
  return "dense(" + std::to_string(in_) + "," + std::to_string(out_) + ")";
}

// ---- Conv2d ----

Conv2d::Conv2d(int cin, int cout, int k, int stride, int pad, Rng& rng)
    : cin_(cin),
      cout_(cout),
      k_(k),
      stride_(stride),
      pad_(pad),
      w_({cout, cin * k * k}),
      b_({cout}),
      gw_({cout, cin * k * k}),
      gb_({cout}) {
  init_normal(w_, he_std(cin * k * k), rng);
}

static void im2col(const float* x, int c, int h, int w, int k, int stride,
                   int pad, int ho, int wo, float* cols) {
  // cols layout: [c*k*k, ho*wo]
  const int plane = ho * wo;
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* dst = cols + ((ci * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            std::memset(dst + oy * wo, 0, sizeof(float) * wo);
            continue;
          }
          const float* src = x + (ci * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            int ix = ox * stride + kx - pad;
            dst[oy * wo + ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

static void col2im(const float* cols, int c, int h, int w, int k, int stride,
                   int pad, int ho, int wo, float* x) {
  const int plane = ho * wo;
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* src = cols + ((ci * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          float* dst = x + (ci * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) dst[ix] += src[oy * wo + ox];
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != cin_)
    throw ShapeError("conv: expected [N," + std::to_string(cin_) +
                     ",H,W], got " + x.shape_str());
  x_ = x;
  int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  int ho = (h + 2 * pad_ - k_) / stride_ + 1;
  int wo = (w + 2 * pad_ - k_) / stride_ + 1;
  Tensor y({n, cout_, ho, wo});
  const int ck = cin_ * k_ * k_;
  std::vector<float> cols(static_cast<size_t>(ck) * ho * wo);
  CMapM wm(w_.data(), cout_, ck);
  for (int s = 0; s < n; ++s) {
    im2col(x.data() + static_cast<size_t>(s) * cin_ * h * w, cin_, h, w, k_,
           stride_, pad_, ho, wo, cols.data());
    CMapM cm(cols.data(), ck, ho * wo);
    MapM ym(y.data() + static_cast<size_t>(s) * cout_ * ho * wo, cout_,
            ho * wo);
    ym.noalias() = wm * cm;
    for (int co = 0; co < cout_; ++co) ym.row(co).array() += b_[co];
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
  int ho = dy.dim(2), wo = dy.dim(3);
  const int ck = cin_ * k_ * k_;
  Tensor dx(x_.shape());
  std::vector<float> cols(static_cast<size_t>(ck) * ho * wo);
  std::vector<float> dcols(cols.size());
  CMapM wm(w_.data(), cout_, ck);
  MapM gwm(gw_.data(), cout_, ck);
  for (int s = 0; s < n; ++s) {
    im2col(x_.data() + static_cast<size_t>(s) * cin_ * h * w, cin_, h, w, k_,
           stride_, pad_, ho, wo, cols.data());
    CMapM cm(cols.data(), ck, ho * wo);
    CMapM dym(dy.data() + static_cast<size_t>(s) * cout_ * ho * wo, cout_,
              ho * wo);
    gwm.noalias() += dym * cm.transpose();
    for (int co = 0; co < cout_; ++co) gb_[co] += dym.row(co).sum();
    MapM dcm(dcols.data(), ck, ho * wo);
    dcm.noalias() = wm.transpose() * dym;
    col2im(dcols.data(), cin_, h, w, k_, stride_, pad_, ho, wo,
           dx.data() + static_cast<size_t>(s) * cin_ * h * w);
  }
  return dx;
}

void Conv2d::collect_params(const std::string& prefix,
                            std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", &w_, &gw_});
  out.push_back({prefix + ".b", &b_, &gb_});
}

std::string Conv2d::spec() const {
  return "conv(" + std::to_string(cin_) + "," + std::to_string(cout_) + ",k" +
         std::to_string(k_) + ",s" + std::to_string(stride_) + ",p" +
         std::to_string(pad_) + ")";
}

// ---- Upsample2x ----

Tensor Upsample2x::forward(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("upsample: expected [N,C,H,W]");
  in_shape_ = x.shape();
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, c, 2 * h, 2 * w});
  for (int s = 0; s < n * c; ++s) {
    const float* xp = x.data() + static_cast<size_t>(s) * h * w;
    float* yp = y.data() + static_cast<size_t>(s) * 4 * h * w;
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        float v = xp[iy * w + ix];
        float* row0 = yp + (2 * iy) * 2 * w + 2 * ix;
        float* row1 = row0 + 2 * w;
        row0[0] = row0[1] = row1[0] = row1[1] = v;
      }
    }
  }
  return y;
}

Tensor Upsample2x::backward(const Tensor& dy) {
  int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  Tensor dx(in_shape_);
  for (int s = 0; s < n * c; ++s) {
    const float* dyp = dy.data() + static_cast<size_t>(s) * 4 * h * w;
    float* dxp = dx.data() + static_cast<size_t>(s) * h * w;
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        const float* row0 = dyp + (2 * iy) * 2 * w + 2 * ix;
        const float* row1 = row0 + 2 * w;
        dxp[iy * w + ix] = row0[0] + row0[1] + row1[0] + row1[1];
      }
    }
  }
  return dx;
}

// ---- Activations ----

Tensor LeakyReLU::forward(const Tensor& x) {
  x_ = x;
  Tensor y(x.shape());
  for (size_t i = 0; i < x.size(); ++i)
    y[i] = x[i] > 0.0f ? x[i] : alpha_ * x[i];
  return y;
}

Tensor LeakyReLU::backward(const Tensor& dy) {
  Tensor dx(dy.shape());
  for (size_t i = 0; i < dy.size(); ++i)
    dx[i] = x_[i] > 0.0f ? dy[i] : alpha_ * dy[i];
  return dx;
}

std::string LeakyReLU::spec() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "lrelu(%g)", alpha_);
  return buf;
}

Tensor Tanh::forward(const Tensor& x) {
  Tensor y(x.shape());
  for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  y_ = y;
  return y;
}

Tensor Tanh::backward(const Tensor& dy) {
  Tensor dx(dy.shape());
  for (size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * (1.0f - y_[i] * y_[i]);
  return dx;
}

// ---- Reshape ----

Tensor Reshape::forward(const Tensor& x) {
  in_shape_ = x.shape();
  std::vector<int> shape{x.dim(0)};
  shape.insert(shape.end(), per_sample_.begin(), per_sample_.end());
  Tensor y = x;
  y.reshape(shape);
  return y;
}

Tensor Reshape::backward(const Tensor& dy) {
  Tensor dx = dy;
  dx.reshape(in_shape_);
  return dx;
}

std::string Reshape::spec() const {
  std::string s = "reshape(";
  for (size_t i = 0; i < per_sample_.size(); ++i)
    s += (i ? "," : "") + std::to_string(per_sample_[i]);
  return s + ")";
}

// ---- ResidualBlock ----

ResidualBlock::ResidualBlock(int cin, int cout, int stride, Rng& rng)
    : cin_(cin), cout_(cout), stride_(stride) {
  conv1_ = std::make_unique<Conv2d>(cin, cout, 3, stride, 1, rng);
  conv2_ = std::make_unique<Conv2d>(cout, cout, 3, 1, 1, rng);
  if (cin != cout || stride != 1)
    proj_ = std::make_unique<Conv2d>(cin, cout, 1, stride, 0, rng);
}

Tensor ResidualBlock::forward(const Tensor& x) {
  Tensor h = act1_.forward(conv1_->forward(x));
  Tensor out = conv2_->forward(h);
  Tensor skip = proj_ ? proj_->forward(x) : x;
  skip_in_ = skip;
  for (size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
  return act_out_.forward(out);
}

Tensor ResidualBlock::backward(const Tensor& dy) {
  Tensor d = act_out_.backward(dy);
  Tensor dx = conv1_->backward(act1_.backward(conv2_->backward(d)));
  if (proj_) {
    Tensor dskip = proj_->backward(d);
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += dskip[i];
  } else {
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += d[i];
  }
  return dx;
}

void ResidualBlock::collect_params(const std::string& prefix,
                                   std::vector<ParamRef>& out) {
  conv1_->collect_params(prefix + ".conv1", out);
  conv2_->collect_params(prefix + ".conv2", out);
  if (proj_) proj_->collect_params(prefix + ".proj", out);
}

std::string ResidualBlock::spec() const {
  return "resblock(" + std::to_string(cin_) + "," + std::to_string(cout_) +
         ",s" + std::to_string(stride_) + ")";
}

// ---- GlobalAvgPool ----

Tensor GlobalAvgPool::forward(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("gap: expected [N,C,H,W]");
  in_shape_ = x.shape();
  int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor y({n, c});
  for (int s = 0; s < n * c; ++s) {
    const float* xp = x.data() + static_cast<size_t>(s) * hw;
    double acc = 0.0;
    for (int i = 0; i < hw; ++i) acc += xp[i];
    y[s] = static_cast<float>(acc / hw);
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
  int hw = in_shape_[2] * in_shape_[3];
  Tensor dx(in_shape_);
  int nc = in_shape_[0] * in_shape_[1];
  for (int s = 0; s < nc; ++s) {
    float g = dy[s] / static_cast<float>(hw);
    float* dxp = dx.data() + static_cast<size_t>(s) * hw;
    for (int i = 0; i < hw; ++i) dxp[i] = g;
  }
  return dx;
}

// ---- Sequential ----

Tensor Sequential::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Tensor Sequential::backward(const Tensor& dy) {
  Tensor d = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    d = (*it)->backward(d);
  return d;
}

Tensor Sequential::forward_recording(const Tensor& x,
                                     std::vector<Tensor>& outputs) {
  outputs.clear();
  outputs.reserve(layers_.size());
  Tensor h = x;
  for (auto& l : layers_) {
    h = l->forward(h);
    outputs.push_back(h);
  }
  return h;
}

Tensor Sequential::backward_with_taps(
    const Tensor& dy, const std::vector<std::pair<size_t, Tensor>>& tap_grads) {
  Tensor d = dy;
  for (size_t i = layers_.size(); i-- > 0;) {
    for (const auto& [idx, g] : tap_grads) {
      if (idx == i) {
        if (!d.same_shape(g)) throw ShapeError("tap gradient shape mismatch");
        for (size_t j = 0; j < d.size(); ++j) d[j] += g[j];
      }
    }
    d = layers_[i]->backward(d);
  }
  return d;
}

void Sequential::collect_params(const std::string& prefix,
                                std::vector<ParamRef>& out) {
  for (size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_params(prefix + ".l" + std::to_string(i), out);
}

std::string Sequential::spec() const {
  std::string s;
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (i) s += "|";
    s += layers_[i]->spec();
  }
  return s;
}

// ---- Helpers ----

std::vector<ParamRef> params_of(Layer& layer) {
  std::vector<ParamRef> out;
  layer.collect_params("net", out);
  return out;
}

void zero_grads(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.grad->fill(0.0f);
}

size_t param_count(const std::vector<ParamRef>& params) {
  size_t n = 0;
  for (const auto& p : params) n += p.value->size();
  return n;
}

uint64_t weights_hash(const std::vector<ParamRef>& params) {
  uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.value->data());
    size_t nbytes = p.value->size() * sizeof(float);
    for (size_t i = 0; i < nbytes; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

// ---- AdamOpt ----

AdamOpt::AdamOpt(std::vector<ParamRef> params, double lr, double beta1,
                 double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.value->size(), 0.0f);
    v_.emplace_back(p.value->size(), 0.0f);
  }
}

void AdamOpt::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    float* w = params_[pi].value->data();
    const float* g = params_[pi].grad->data();
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < m.size(); ++i) {
      m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * g[i]);
      v[i] = static_cast<float>(beta2_ * v[i] +
                                (1.0 - beta2_) * double(g[i]) * g[i]);
      double mh = m[i] / bc1;
      double vh = v[i] / bc2;
      w[i] -= static_cast<float>(lr_ * mh / (std::sqrt(vh) + eps_));
    }
  }
}

void AdamOpt::zero_grad() { zero_grads(params_); }

}  // namespace gi::nn
