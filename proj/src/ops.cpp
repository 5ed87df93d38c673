// Copyright (c) the BVC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bvc/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace bvc {

namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;

Var unary_op(const Var& a, Tensor value,
             std::function<float(float, float)> dfn_xy) {
  // dfn_xy(x, y) returns dy/dx given input x and output y.
  return make_op(std::move(value), {a}, [dfn_xy](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (size_t i = 0; i < n.value.numel(); ++i)
      g[i] += n.grad[i] * dfn_xy(p.value[i], n.value[i]);
  });
}

void im2col(const Tensor& x, int kh, int kw, int stride, int pad, int ho,
            int wo, float* col) {
  const int ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  const size_t plane = static_cast<size_t>(ho) * wo;
  for (int c = 0; c < ci; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        float* dst = col + ((static_cast<size_t>(c) * kh + ky) * kw + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < wo; ++ox) dst[oy * wo + ox] = 0.0f;
            continue;
          }
          const float* src = x.data() + (static_cast<size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[oy * wo + ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_acc(const float* col, int ci, int h, int w, int kh, int kw,
                int stride, int pad, int ho, int wo, Tensor& dx) {
  const size_t plane = static_cast<size_t>(ho) * wo;
  for (int c = 0; c < ci; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const float* src = col + ((static_cast<size_t>(c) * kh + ky) * kw + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          float* dst = dx.data() + (static_cast<size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_arg(a.value().same_shape(b.value()), "add: shape mismatch");
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = a.value()[i] + b.value()[i];
  return make_op(std::move(v), {a, b}, [](Node& n) {
    for (int k = 0; k < 2; ++k) {
      Node& p = *n.parents[k];
      if (!p.requires_grad) continue;
      Tensor& g = p.ensure_grad();
      for (size_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_arg(a.value().same_shape(b.value()), "sub: shape mismatch");
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = a.value()[i] - b.value()[i];
  return make_op(std::move(v), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      Tensor& g = n.parents[0]->ensure_grad();
      for (size_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i];
    }
    if (n.parents[1]->requires_grad) {
      Tensor& g = n.parents[1]->ensure_grad();
      for (size_t i = 0; i < n.grad.numel(); ++i) g[i] -= n.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_arg(a.value().same_shape(b.value()), "mul: shape mismatch");
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = a.value()[i] * b.value()[i];
  return make_op(std::move(v), {a, b}, [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad) {
      Tensor& g = pa.ensure_grad();
      for (size_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.ensure_grad();
      for (size_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i] * pa.value[i];
    }
  });
}

Var add_scalar(const Var& a, float s) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = a.value()[i] + s;
  return unary_op(a, std::move(v), [](float, float) { return 1.0f; });
}

Var mul_scalar(const Var& a, float s) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = a.value()[i] * s;
  return unary_op(a, std::move(v), [s](float, float) { return s; });
}

Var leaky_relu(const Var& a, float slope) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) {
    const float x = a.value()[i];
    v[i] = x >= 0.0f ? x : slope * x;
  }
  return unary_op(a, std::move(v),
                  [slope](float x, float) { return x >= 0.0f ? 1.0f : slope; });
}

Var sigmoid(const Var& a) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i)
    v[i] = 1.0f / (1.0f + std::exp(-a.value()[i]));
  return unary_op(a, std::move(v),
                  [](float, float y) { return y * (1.0f - y); });
}

Var tanh_op(const Var& a) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = std::tanh(a.value()[i]);
  return unary_op(a, std::move(v),
                  [](float, float y) { return 1.0f - y * y; });
}

Var exp_op(const Var& a) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = std::exp(a.value()[i]);
  return unary_op(a, std::move(v), [](float, float y) { return y; });
}

Var log_op(const Var& a) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = std::log(a.value()[i]);
  return unary_op(a, std::move(v), [](float x, float) { return 1.0f / x; });
}

Var softplus(const Var& a) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) {
    const float x = a.value()[i];
    v[i] = x > 20.0f ? x : std::log1p(std::exp(x));
  }
  return unary_op(a, std::move(v), [](float x, float) {
    return 1.0f / (1.0f + std::exp(-x));
  });
}

Var reciprocal(const Var& a) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = 1.0f / a.value()[i];
  return unary_op(a, std::move(v),
                  [](float, float y) { return -y * y; });
}

Var clamp(const Var& a, float lo, float hi) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i)
    v[i] = std::min(hi, std::max(lo, a.value()[i]));
  return unary_op(a, std::move(v), [lo, hi](float x, float) {
    return (x >= lo && x <= hi) ? 1.0f : 0.0f;
  });
}

Var square(const Var& a) {
  Tensor v(a.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = a.value()[i] * a.value()[i];
  return unary_op(a, std::move(v), [](float x, float) { return 2.0f * x; });
}

Var sum_all(const Var& a) {
  double acc = 0.0;
  for (size_t i = 0; i < a.value().numel(); ++i) acc += a.value()[i];
  return make_op(Tensor::scalar(static_cast<float>(acc)), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    const float gv = n.grad[0];
    for (size_t i = 0; i < g.numel(); ++i) g[i] += gv;
  });
}

Var mean_all(const Var& a) {
  return mul_scalar(sum_all(a), 1.0f / static_cast<float>(a.value().numel()));
}

Var concat_ch(const std::vector<Var>& xs) {
  check_arg(!xs.empty(), "concat_ch: empty input");
  const int h = xs[0].value().dim(1), w = xs[0].value().dim(2);
  int ctot = 0;
  for (const auto& x : xs) {
    check_arg(x.value().ndim() == 3 && x.value().dim(1) == h &&
                  x.value().dim(2) == w,
              "concat_ch: spatial mismatch");
    ctot += x.value().dim(0);
  }
  Tensor v({ctot, h, w});
  size_t off = 0;
  for (const auto& x : xs) {
    std::copy(x.value().data(), x.value().data() + x.value().numel(),
              v.data() + off);
    off += x.value().numel();
  }
  return make_op(std::move(v), xs, [](Node& n) {
    size_t off = 0;
    for (auto& pp : n.parents) {
      Node& p = *pp;
      const size_t cnt = p.value.numel();
      if (p.requires_grad) {
        Tensor& g = p.ensure_grad();
        for (size_t i = 0; i < cnt; ++i) g[i] += n.grad[off + i];
      }
      off += cnt;
    }
  });
}

Var slice_ch(const Var& x, int c0, int c1) {
  const Tensor& xv = x.value();
  check_arg(xv.ndim() == 3 && c0 >= 0 && c1 <= xv.dim(0) && c0 < c1,
            "slice_ch: bad range");
  const int h = xv.dim(1), w = xv.dim(2);
  Tensor v({c1 - c0, h, w});
  const size_t plane = static_cast<size_t>(h) * w;
  std::copy(xv.data() + c0 * plane, xv.data() + c1 * plane, v.data());
  return make_op(std::move(v), {x}, [c0, plane](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (size_t i = 0; i < n.grad.numel(); ++i) g[c0 * plane + i] += n.grad[i];
  });
}

Var reshape(const Var& x, std::vector<int> shape) {
  Tensor v = x.value().reshaped(std::move(shape));
  return make_op(std::move(v), {x}, [](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (size_t i = 0; i < n.grad.numel(); ++i) g[i] += n.grad[i];
  });
}

Var crop_hw(const Var& x, int h, int w) {
  const Tensor& xv = x.value();
  check_arg(xv.ndim() == 3 && h <= xv.dim(1) && w <= xv.dim(2),
            "crop_hw: target larger than input");
  if (h == xv.dim(1) && w == xv.dim(2)) return x;
  const int c = xv.dim(0), hi = xv.dim(1), wi = xv.dim(2);
  Tensor v({c, h, w});
  for (int cc = 0; cc < c; ++cc)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) v.at(cc, y, xx) = xv.at(cc, y, xx);
  return make_op(std::move(v), {x}, [hi, wi](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    const int c = n.grad.dim(0), h = n.grad.dim(1), w = n.grad.dim(2);
    for (int cc = 0; cc < c; ++cc)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
          g[(static_cast<size_t>(cc) * hi + y) * wi + xx] += n.grad.at(cc, y, xx);
  });
}

Var channel_scale(const Var& x, const Var& s) {
  const Tensor& xv = x.value();
  check_arg(xv.ndim() == 3 && s.value().ndim() == 1 &&
                s.value().dim(0) == xv.dim(0),
            "channel_scale: shape mismatch");
  const int c = xv.dim(0);
  const size_t plane = static_cast<size_t>(xv.dim(1)) * xv.dim(2);
  Tensor v(xv.shape());
  for (int cc = 0; cc < c; ++cc) {
    const float sc = s.value()[cc];
    for (size_t i = 0; i < plane; ++i)
      v[cc * plane + i] = xv[cc * plane + i] * sc;
  }
  return make_op(std::move(v), {x, s}, [c, plane](Node& n) {
    Node& px = *n.parents[0];
    Node& ps = *n.parents[1];
    if (px.requires_grad) {
      Tensor& g = px.ensure_grad();
      for (int cc = 0; cc < c; ++cc) {
        const float sc = ps.value[cc];
        for (size_t i = 0; i < plane; ++i)
          g[cc * plane + i] += n.grad[cc * plane + i] * sc;
      }
    }
    if (ps.requires_grad) {
      Tensor& g = ps.ensure_grad();
      for (int cc = 0; cc < c; ++cc) {
        double acc = 0.0;
        for (size_t i = 0; i < plane; ++i)
          acc += static_cast<double>(n.grad[cc * plane + i]) * px.value[cc * plane + i];
        g[cc] += static_cast<float>(acc);
      }
    }
  });
}

Var mul_ch_bcast(const Var& x, const Var& m) {
  const Tensor& xv = x.value();
  const Tensor& mv = m.value();
  check_arg(xv.ndim() == 3 && mv.ndim() == 3 && mv.dim(0) == 1 &&
                mv.dim(1) == xv.dim(1) && mv.dim(2) == xv.dim(2),
            "mul_ch_bcast: shape mismatch");
  const int c = xv.dim(0);
  const size_t plane = static_cast<size_t>(xv.dim(1)) * xv.dim(2);
  Tensor v(xv.shape());
  for (int cc = 0; cc < c; ++cc)
    for (size_t i = 0; i < plane; ++i)
      v[cc * plane + i] = xv[cc * plane + i] * mv[i];
  return make_op(std::move(v), {x, m}, [c, plane](Node& n) {
    Node& px = *n.parents[0];
    Node& pm = *n.parents[1];
    if (px.requires_grad) {
      Tensor& g = px.ensure_grad();
      for (int cc = 0; cc < c; ++cc)
        for (size_t i = 0; i < plane; ++i)
          g[cc * plane + i] += n.grad[cc * plane + i] * pm.value[i];
    }
    if (pm.requires_grad) {
      Tensor& g = pm.ensure_grad();
      for (int cc = 0; cc < c; ++cc)
        for (size_t i = 0; i < plane; ++i)
          g[i] += n.grad[cc * plane + i] * px.value[cc * plane + i];
    }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  check_arg(xv.ndim() == 3 && wv.ndim() == 4 && wv.dim(1) == xv.dim(0),
            "conv2d: shape mismatch");
  const int ci = xv.dim(0), h = xv.dim(1), win = xv.dim(2);
  const int co = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (win + 2 * pad - kw) / stride + 1;
  check_arg(ho > 0 && wo > 0, "conv2d: output would be empty");

  const int kdim = ci * kh * kw;
  const size_t plane = static_cast<size_t>(ho) * wo;
  std::vector<float> col(static_cast<size_t>(kdim) * plane);
  im2col(xv, kh, kw, stride, pad, ho, wo, col.data());

  Tensor v({co, ho, wo});
  {
    CMapM wm(wv.data(), co, kdim);
    CMapM cm(col.data(), kdim, static_cast<Eigen::Index>(plane));
    MapM om(v.data(), co, static_cast<Eigen::Index>(plane));
    om.noalias() = wm * cm;
  }
  if (b.defined()) {
    check_arg(b.value().ndim() == 1 && b.value().dim(0) == co,
              "conv2d: bias mismatch");
    for (int c = 0; c < co; ++c) {
      const float bb = b.value()[c];
      for (size_t i = 0; i < plane; ++i) v[c * plane + i] += bb;
    }
  }

  std::vector<Var> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  return make_op(
      std::move(v), std::move(parents),
      [stride, pad, ci, h, win, co, kh, kw, ho, wo, kdim, plane](Node& n) {
        Node& px = *n.parents[0];
        Node& pw = *n.parents[1];
        // col is recomputed instead of stored; memory beats the extra pass.
        std::vector<float> col(static_cast<size_t>(kdim) * plane);
        im2col(px.value, kh, kw, stride, pad, ho, wo, col.data());
        CMapM gm(n.grad.data(), co, static_cast<Eigen::Index>(plane));
        if (pw.requires_grad) {
          Tensor& gw = pw.ensure_grad();
          MapM gwm(gw.data(), co, kdim);
          CMapM cm(col.data(), kdim, static_cast<Eigen::Index>(plane));
          gwm.noalias() += gm * cm.transpose();
        }
        if (px.requires_grad) {
          std::vector<float> dcol(static_cast<size_t>(kdim) * plane);
          MapM dcm(dcol.data(), kdim, static_cast<Eigen::Index>(plane));
          CMapM wm(pw.value.data(), co, kdim);
          dcm.noalias() = wm.transpose() * gm;
          col2im_acc(dcol.data(), ci, h, win, kh, kw, stride, pad, ho, wo,
                     px.ensure_grad());
        }
        if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
          Tensor& gb = n.parents[2]->ensure_grad();
          for (int c = 0; c < co; ++c) {
            double acc = 0.0;
            for (size_t i = 0; i < plane; ++i) acc += n.grad[c * plane + i];
            gb[c] += static_cast<float>(acc);
          }
        }
      });
}

Var pixel_shuffle(const Var& x, int r) {
  const Tensor& xv = x.value();
  check_arg(xv.ndim() == 3 && xv.dim(0) % (r * r) == 0,
            "pixel_shuffle: channel count not divisible by r^2");
  const int co = xv.dim(0) / (r * r), h = xv.dim(1), w = xv.dim(2);
  Tensor v({co, h * r, w * r});
  for (int c = 0; c < co; ++c)
    for (int y = 0; y < h; ++y)
      for (int x2 = 0; x2 < w; ++x2)
        for (int dy = 0; dy < r; ++dy)
          for (int dx = 0; dx < r; ++dx)
            v.at(c, y * r + dy, x2 * r + dx) =
                xv.at(c * r * r + dy * r + dx, y, x2);
  return make_op(std::move(v), {x}, [r, co, h, w](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (int c = 0; c < co; ++c)
      for (int y = 0; y < h; ++y)
        for (int x2 = 0; x2 < w; ++x2)
          for (int dy = 0; dy < r; ++dy)
            for (int dx = 0; dx < r; ++dx)
              g.at(c * r * r + dy * r + dx, y, x2) +=
                  n.grad.at(c, y * r + dy, x2 * r + dx);
  });
}

Var avg_pool2(const Var& x) {
  const Tensor& xv = x.value();
  check_arg(xv.ndim() == 3 && xv.dim(1) % 2 == 0 && xv.dim(2) % 2 == 0,
            "avg_pool2: odd spatial size");
  const int c = xv.dim(0), h = xv.dim(1) / 2, w = xv.dim(2) / 2;
  Tensor v({c, h, w});
  for (int cc = 0; cc < c; ++cc)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        v.at(cc, y, xx) =
            0.25f * (xv.at(cc, 2 * y, 2 * xx) + xv.at(cc, 2 * y, 2 * xx + 1) +
                     xv.at(cc, 2 * y + 1, 2 * xx) +
                     xv.at(cc, 2 * y + 1, 2 * xx + 1));
  return make_op(std::move(v), {x}, [c, h, w](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (int cc = 0; cc < c; ++cc)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const float gv = 0.25f * n.grad.at(cc, y, xx);
          g.at(cc, 2 * y, 2 * xx) += gv;
          g.at(cc, 2 * y, 2 * xx + 1) += gv;
          g.at(cc, 2 * y + 1, 2 * xx) += gv;
          g.at(cc, 2 * y + 1, 2 * xx + 1) += gv;
        }
  });
}

Var bilinear_up2(const Var& x) {
  const Tensor& xv = x.value();
  check_arg(xv.ndim() == 3, "bilinear_up2: need [C,H,W]");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const int ho = 2 * h, wo = 2 * w;
  Tensor v({c, ho, wo});
  // align_corners=false sampling: in = (out + 0.5) / 2 - 0.5
  auto sample_axis = [](int o, int n, int& i0, float& a) {
    float p = (o + 0.5f) * 0.5f - 0.5f;
    if (p < 0.0f) p = 0.0f;
    if (p > n - 1) p = static_cast<float>(n - 1);
    i0 = static_cast<int>(p);
    if (i0 > n - 2) i0 = std::max(0, n - 2);
    a = p - i0;
  };
  for (int oy = 0; oy < ho; ++oy) {
    int y0;
    float by;
    sample_axis(oy, h, y0, by);
    for (int ox = 0; ox < wo; ++ox) {
      int x0;
      float bx;
      sample_axis(ox, w, x0, bx);
      for (int cc = 0; cc < c; ++cc) {
        const float v00 = xv.at(cc, y0, x0), v01 = xv.at(cc, y0, x0 + 1);
        const float v10 = xv.at(cc, y0 + 1, x0), v11 = xv.at(cc, y0 + 1, x0 + 1);
        v.at(cc, oy, ox) = (1 - by) * ((1 - bx) * v00 + bx * v01) +
                           by * ((1 - bx) * v10 + bx * v11);
      }
    }
  }
  return make_op(std::move(v), {x}, [c, h, w, ho, wo, sample_axis](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    for (int oy = 0; oy < ho; ++oy) {
      int y0;
      float by;
      sample_axis(oy, h, y0, by);
      for (int ox = 0; ox < wo; ++ox) {
        int x0;
        float bx;
        sample_axis(ox, w, x0, bx);
        for (int cc = 0; cc < c; ++cc) {
          const float gv = n.grad.at(cc, oy, ox);
          g.at(cc, y0, x0) += gv * (1 - by) * (1 - bx);
          g.at(cc, y0, x0 + 1) += gv * (1 - by) * bx;
          g.at(cc, y0 + 1, x0) += gv * by * (1 - bx);
          g.at(cc, y0 + 1, x0 + 1) += gv * by * bx;
        }
      }
    }
  });
}

Var warp_bilinear(const Var& feat, const Var& flow) {
  const Tensor& fv = feat.value();
  const Tensor& vv = flow.value();
  check_arg(fv.ndim() == 3 && vv.ndim() == 3 && vv.dim(0) == 2 &&
                vv.dim(1) == fv.dim(1) && vv.dim(2) == fv.dim(2),
            "warp: dimension mismatch");
  const int c = fv.dim(0), h = fv.dim(1), w = fv.dim(2);
  Tensor v({c, h, w});
  auto clampi = [](int i, int n) { return std::min(std::max(i, 0), n - 1); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float sx = x + vv.at(0, y, x);
      const float sy = y + vv.at(1, y, x);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const float ax = sx - x0, ay = sy - y0;
      const int x0c = clampi(x0, w), x1c = clampi(x0 + 1, w);
      const int y0c = clampi(y0, h), y1c = clampi(y0 + 1, h);
      for (int cc = 0; cc < c; ++cc) {
        const float v00 = fv.at(cc, y0c, x0c), v01 = fv.at(cc, y0c, x1c);
        const float v10 = fv.at(cc, y1c, x0c), v11 = fv.at(cc, y1c, x1c);
        v.at(cc, y, x) = (1 - ay) * ((1 - ax) * v00 + ax * v01) +
                         ay * ((1 - ax) * v10 + ax * v11);
      }
    }
  }
  return make_op(std::move(v), {feat, flow}, [c, h, w, clampi](Node& n) {
    Node& pf = *n.parents[0];
    Node& pv = *n.parents[1];
    Tensor* gf = pf.requires_grad ? &pf.ensure_grad() : nullptr;
    Tensor* gv = pv.requires_grad ? &pv.ensure_grad() : nullptr;
    const Tensor& fv = pf.value;
    const Tensor& vv = pv.value;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const float sx = x + vv.at(0, y, x);
        const float sy = y + vv.at(1, y, x);
        const int x0 = static_cast<int>(std::floor(sx));
        const int y0 = static_cast<int>(std::floor(sy));
        const float ax = sx - x0, ay = sy - y0;
        const int x0c = clampi(x0, w), x1c = clampi(x0 + 1, w);
        const int y0c = clampi(y0, h), y1c = clampi(y0 + 1, h);
        float dsx = 0.0f, dsy = 0.0f;
        for (int cc = 0; cc < c; ++cc) {
          const float go = n.grad.at(cc, y, x);
          const float v00 = fv.at(cc, y0c, x0c), v01 = fv.at(cc, y0c, x1c);
          const float v10 = fv.at(cc, y1c, x0c), v11 = fv.at(cc, y1c, x1c);
          if (gf) {
            gf->at(cc, y0c, x0c) += go * (1 - ay) * (1 - ax);
            gf->at(cc, y0c, x1c) += go * (1 - ay) * ax;
            gf->at(cc, y1c, x0c) += go * ay * (1 - ax);
            gf->at(cc, y1c, x1c) += go * ay * ax;
          }
          dsx += go * ((1 - ay) * (v01 - v00) + ay * (v11 - v10));
          dsy += go * ((1 - ax) * (v10 - v00) + ax * (v11 - v01));
        }
        if (gv) {
          gv->at(0, y, x) += dsx;
          gv->at(1, y, x) += dsy;
        }
      }
    }
  });
}

Var gauss_blur_valid(const Var& x, const std::vector<float>& kernel) {
  const Tensor& xv = x.value();
  const int k = static_cast<int>(kernel.size());
  check_arg(xv.ndim() == 3 && xv.dim(1) >= k && xv.dim(2) >= k,
            "gauss_blur_valid: image smaller than kernel");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const int ho = h - k + 1, wo = w - k + 1;
  // separable: rows then cols
  Tensor tmp({c, h, wo});
  for (int cc = 0; cc < c; ++cc)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < wo; ++xx) {
        float acc = 0.0f;
        for (int i = 0; i < k; ++i) acc += kernel[i] * xv.at(cc, y, xx + i);
        tmp.at(cc, y, xx) = acc;
      }
  Tensor v({c, ho, wo});
  for (int cc = 0; cc < c; ++cc)
    for (int y = 0; y < ho; ++y)
      for (int xx = 0; xx < wo; ++xx) {
        float acc = 0.0f;
        for (int i = 0; i < k; ++i) acc += kernel[i] * tmp.at(cc, y + i, xx);
        v.at(cc, y, xx) = acc;
      }
  return make_op(std::move(v), {x}, [kernel, k, c, h, w, ho, wo](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    Tensor& g = p.ensure_grad();
    Tensor tmp({c, h, wo});
    for (int cc = 0; cc < c; ++cc)
      for (int y = 0; y < ho; ++y)
        for (int xx = 0; xx < wo; ++xx) {
          const float gv = n.grad.at(cc, y, xx);
          for (int i = 0; i < k; ++i) tmp.at(cc, y + i, xx) += kernel[i] * gv;
        }
    for (int cc = 0; cc < c; ++cc)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < wo; ++xx) {
          const float gv = tmp.at(cc, y, xx);
          if (gv == 0.0f) continue;
          for (int i = 0; i < k; ++i) g.at(cc, y, xx + i) += kernel[i] * gv;
        }
  });
}

Var round_ste(const Var& x) {
  Tensor v(x.value().shape());
  for (size_t i = 0; i < v.numel(); ++i) v[i] = std::nearbyint(x.value()[i]);
  return unary_op(x, std::move(v), [](float, float) { return 1.0f; });
}

Var add_uniform_noise(const Var& x, Rng& rng) {
  Tensor v(x.value().shape());
  for (size_t i = 0; i < v.numel(); ++i)
    v[i] = x.value()[i] + rng.uniform(-0.5f, 0.5f);
  return unary_op(x, std::move(v), [](float, float) { return 1.0f; });
}

namespace {

// Probability of the unit-width bin around integer offset `delta` under a
// zero-mean Laplace with scale b. Exact piecewise form; log-domain for tails.
inline double laplace_bin_bits(double delta, double b, double* dbits_ddelta,
                               double* dbits_db) {
  constexpr double kLn2 = 0.6931471805599453;
  const double ad = std::abs(delta);
  if (ad >= 0.5) {
    // log P = -|d|/b + log(sinh(0.5/b))
    const double u = 0.5 / b;
    const double lsinh = u + std::log1p(-std::exp(-2.0 * u)) - kLn2;
    const double bits = (ad / b - lsinh) / kLn2;
    if (dbits_ddelta) {
      const double sg = delta >= 0.0 ? 1.0 : -1.0;
      *dbits_ddelta = sg / (b * kLn2);
      const double coth = 1.0 / std::tanh(u);
      *dbits_db = -(ad - 0.5 * coth) / (b * b * kLn2);
    }
    return bits;
  }
  const double e = std::exp(-0.5 / b);
  const double ch = std::cosh(delta / b);
  double p = 1.0 - e * ch;
  if (p < 1e-12) p = 1e-12;
  const double bits = -std::log(p) / kLn2;
  if (dbits_ddelta) {
    const double sh = std::sinh(delta / b);
    const double dp_dd = -e * sh / b;
    const double dp_db = -e * (0.5 * ch - delta * sh) / (b * b);
    *dbits_ddelta = -dp_dd / (p * kLn2);
    *dbits_db = -dp_db / (p * kLn2);
  }
  return bits;
}

}  // namespace

Var laplace_bits(const Var& delta, const Var& b) {
  check_arg(delta.value().same_shape(b.value()), "laplace_bits: shape mismatch");
  Tensor v(delta.value().shape());
  for (size_t i = 0; i < v.numel(); ++i)
    v[i] = static_cast<float>(laplace_bin_bits(delta.value()[i],
                                               b.value()[i], nullptr, nullptr));
  return make_op(std::move(v), {delta, b}, [](Node& n) {
    Node& pd = *n.parents[0];
    Node& pb = *n.parents[1];
    Tensor* gd = pd.requires_grad ? &pd.ensure_grad() : nullptr;
    Tensor* gb = pb.requires_grad ? &pb.ensure_grad() : nullptr;
    for (size_t i = 0; i < n.grad.numel(); ++i) {
      double dd, db;
      laplace_bin_bits(pd.value[i], pb.value[i], &dd, &db);
      if (gd) (*gd)[i] += n.grad[i] * static_cast<float>(dd);
      if (gb) (*gb)[i] += n.grad[i] * static_cast<float>(db);
    }
  });
}

Var channel_affine(const Var& x, const Var& w, const Var& b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  check_arg(xv.ndim() == 3 && wv.ndim() == 3 && bv.ndim() == 2 &&
                wv.dim(0) == xv.dim(0) && wv.dim(2) == xv.dim(1) &&
                bv.dim(0) == xv.dim(0) && bv.dim(1) == wv.dim(1),
            "channel_affine: shape mismatch");
  const int c = xv.dim(0), a = xv.dim(1), nn = xv.dim(2), bb = wv.dim(1);
  Tensor v({c, bb, nn});
  for (int cc = 0; cc < c; ++cc)
    for (int j = 0; j < bb; ++j) {
      const float bias = bv[cc * bb + j];
      for (int i = 0; i < nn; ++i) {
        float acc = bias;
        for (int k = 0; k < a; ++k)
          acc += wv[(cc * bb + j) * a + k] * xv[(cc * a + k) * nn + i];
        v[(cc * bb + j) * nn + i] = acc;
      }
    }
  return make_op(std::move(v), {x, w, b}, [c, a, nn, bb](Node& n) {
    Node& px = *n.parents[0];
    Node& pw = *n.parents[1];
    Node& pb = *n.parents[2];
    for (int cc = 0; cc < c; ++cc)
      for (int j = 0; j < bb; ++j)
        for (int i = 0; i < nn; ++i) {
          const float go = n.grad[(cc * bb + j) * nn + i];
          if (go == 0.0f) continue;
          if (pb.requires_grad) pb.ensure_grad()[cc * bb + j] += go;
          for (int k = 0; k < a; ++k) {
            if (pw.requires_grad)
              pw.ensure_grad()[(cc * bb + j) * a + k] +=
                  go * px.value[(cc * a + k) * nn + i];
            if (px.requires_grad)
              px.ensure_grad()[(cc * a + k) * nn + i] +=
                  go * pw.value[(cc * bb + j) * a + k];
          }
        }
  });
}

Var channel_scale_vec(const Var& x, const Var& s) {
  const Tensor& xv = x.value();
  const Tensor& sv = s.value();
  check_arg(xv.ndim() == 3 && sv.ndim() == 2 && sv.dim(0) == xv.dim(0) &&
                sv.dim(1) == xv.dim(1),
            "channel_scale_vec: shape mismatch");
  const int c = xv.dim(0), bdim = xv.dim(1), nn = xv.dim(2);
  Tensor v(xv.shape());
  for (int cc = 0; cc < c; ++cc)
    for (int j = 0; j < bdim; ++j) {
      const float sc = sv[cc * bdim + j];
      for (int i = 0; i < nn; ++i)
        v[(cc * bdim + j) * nn + i] = xv[(cc * bdim + j) * nn + i] * sc;
    }
  return make_op(std::move(v), {x, s}, [c, bdim, nn](Node& n) {
    Node& px = *n.parents[0];
    Node& ps = *n.parents[1];
    for (int cc = 0; cc < c; ++cc)
      for (int j = 0; j < bdim; ++j) {
        const float sc = ps.value[cc * bdim + j];
        double acc = 0.0;
        for (int i = 0; i < nn; ++i) {
          const float go = n.grad[(cc * bdim + j) * nn + i];
          if (px.requires_grad)
            px.ensure_grad()[(cc * bdim + j) * nn + i] += go * sc;
          acc += static_cast<double>(go) * px.value[(cc * bdim + j) * nn + i];
        }
        if (ps.requires_grad)
          ps.ensure_grad()[cc * bdim + j] += static_cast<float>(acc);
      }
  });
}

Tensor reflect_pad_hw(const Tensor& x, int pad_right, int pad_bottom) {
  check_arg(x.ndim() == 3, "reflect_pad_hw: need [C,H,W]");
  if (pad_right == 0 && pad_bottom == 0) return x;
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  check_arg(pad_right < w && pad_bottom < h, "reflect_pad_hw: pad too large");
  Tensor out({c, h + pad_bottom, w + pad_right});
  for (int cc = 0; cc < c; ++cc)
    for (int y = 0; y < h + pad_bottom; ++y) {
      const int sy = y < h ? y : 2 * h - 2 - y;
      for (int xx = 0; xx < w + pad_right; ++xx) {
        const int sx = xx < w ? xx : 2 * w - 2 - xx;
        out.at(cc, y, xx) = x.at(cc, sy, sx);
      }
    }
  return out;
}

Tensor crop_tensor_hw(const Tensor& x, int h, int w) {
  check_arg(x.ndim() == 3 && h <= x.dim(1) && w <= x.dim(2),
            "crop_tensor_hw: target larger than input");
  Tensor out({x.dim(0), h, w});
  for (int cc = 0; cc < x.dim(0); ++cc)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) out.at(cc, y, xx) = x.at(cc, y, xx);
  return out;
}

}  // namespace bvc
