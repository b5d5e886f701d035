#pragma once

#include <cmath>
#include <vector>

#include "drysep/nn/tensor.hpp"

namespace drysep::nn {

namespace detail {

template <typename T>
void check_rank(const Tensor<T>& t, size_t rank, const char* op) {
  if (t->shape.size() != rank) {
    throw DataError(std::string(op) + ": expected rank " + std::to_string(rank) +
                    " tensor, got " + shape_str(t));
  }
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!same_shape(a, b)) {
    throw DataError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

// zero-pad a [H,W] plane by p on every side into [H+2p, W+2p]; only the
// border strips are cleared, the interior is copied
template <typename T>
void pad_plane(const T* __restrict__ src, size_t h, size_t w, size_t p, T* __restrict__ dst) {
  const size_t wp = w + 2 * p;
  for (size_t i = 0; i < p * wp; ++i) dst[i] = T(0);
  for (size_t i = (h + p) * wp; i < (h + 2 * p) * wp; ++i) dst[i] = T(0);
  for (size_t y = 0; y < h; ++y) {
    T* row = dst + (y + p) * wp;
    const T* s = src + y * w;
    for (size_t x = 0; x < p; ++x) row[x] = T(0);
    for (size_t x = 0; x < w; ++x) row[p + x] = s[x];
    for (size_t x = 0; x < p; ++x) row[p + w + x] = T(0);
  }
}

// out[y][x] += sum over the k*k taps of w (row-major) against the padded
// plane; all taps fused into one pass so each output row is written once.
// The k == 3 case is the hot path and fully unrolled.
template <typename T>
void accumulate_conv_plane(T* __restrict__ out, const T* __restrict__ pad,
                           const T* __restrict__ w, size_t h, size_t wd, size_t k, size_t wp) {
  if (k == 3) {
    const T w00 = w[0], w01 = w[1], w02 = w[2];
    const T w10 = w[3], w11 = w[4], w12 = w[5];
    const T w20 = w[6], w21 = w[7], w22 = w[8];
    for (size_t y = 0; y < h; ++y) {
      const T* __restrict__ r0 = pad + y * wp;
      const T* __restrict__ r1 = r0 + wp;
      const T* __restrict__ r2 = r1 + wp;
      T* __restrict__ dst = out + y * wd;
#ifdef _OPENMP
#pragma omp simd
#endif
      for (size_t x = 0; x < wd; ++x) {
        dst[x] += w00 * r0[x] + w01 * r0[x + 1] + w02 * r0[x + 2] +
                  w10 * r1[x] + w11 * r1[x + 1] + w12 * r1[x + 2] +
                  w20 * r2[x] + w21 * r2[x + 1] + w22 * r2[x + 2];
      }
    }
    return;
  }
  if (k == 1) {
    const T w0 = w[0];
    for (size_t y = 0; y < h; ++y) {
      const T* __restrict__ r = pad + y * wp;
      T* __restrict__ dst = out + y * wd;
#ifdef _OPENMP
#pragma omp simd
#endif
      for (size_t x = 0; x < wd; ++x) dst[x] += w0 * r[x];
    }
    return;
  }
  for (size_t y = 0; y < h; ++y) {
    T* __restrict__ dst = out + y * wd;
    for (size_t dy = 0; dy < k; ++dy) {
      const T* __restrict__ r = pad + (y + dy) * wp;
      for (size_t dx = 0; dx < k; ++dx) {
        const T wv = w[dy * k + dx];
#ifdef _OPENMP
#pragma omp simd
#endif
        for (size_t x = 0; x < wd; ++x) dst[x] += wv * r[x + dx];
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise ops

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  auto out = make_op_result<T>(
      a->shape, {a, b}, [a, b](Node<T>& node) {
        const size_t n = node.grad.size();
        if (a->requires_grad) {
          T* __restrict__ ga = a->grad.data();
          const T* __restrict__ g = node.grad.data();
#ifdef _OPENMP
#pragma omp parallel for simd schedule(static) if (n > 65536)
#endif
          for (size_t i = 0; i < n; ++i) ga[i] += g[i];
        }
        if (b->requires_grad) {
          T* __restrict__ gb = b->grad.data();
          const T* __restrict__ g = node.grad.data();
#ifdef _OPENMP
#pragma omp parallel for simd schedule(static) if (n > 65536)
#endif
          for (size_t i = 0; i < n; ++i) gb[i] += g[i];
        }
      });
  const size_t n = out->value.size();
  T* __restrict__ o = out->value.data();
  const T* __restrict__ pa = a->value.data();
  const T* __restrict__ pb = b->value.data();
#ifdef _OPENMP
#pragma omp parallel for simd schedule(static) if (n > 65536)
#endif
  for (size_t i = 0; i < n; ++i) o[i] = pa[i] + pb[i];
  return out;
}

template <typename T>
Tensor<T> elementwise_mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "elementwise_mul");
  auto out = make_op_result<T>(
      a->shape, {a, b}, [a, b](Node<T>& node) {
        const size_t n = node.grad.size();
        if (a->requires_grad) {
          T* __restrict__ ga = a->grad.data();
          const T* __restrict__ g = node.grad.data();
          const T* __restrict__ vb = b->value.data();
#ifdef _OPENMP
#pragma omp parallel for simd schedule(static) if (n > 65536)
#endif
          for (size_t i = 0; i < n; ++i) ga[i] += g[i] * vb[i];
        }
        if (b->requires_grad) {
          T* __restrict__ gb = b->grad.data();
          const T* __restrict__ g = node.grad.data();
          const T* __restrict__ va = a->value.data();
#ifdef _OPENMP
#pragma omp parallel for simd schedule(static) if (n > 65536)
#endif
          for (size_t i = 0; i < n; ++i) gb[i] += g[i] * va[i];
        }
      });
  const size_t n = out->value.size();
  T* __restrict__ o = out->value.data();
  const T* __restrict__ pa = a->value.data();
  const T* __restrict__ pb = b->value.data();
#ifdef _OPENMP
#pragma omp parallel for simd schedule(static) if (n > 65536)
#endif
  for (size_t i = 0; i < n; ++i) o[i] = pa[i] * pb[i];
  return out;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope = 0.01) {
  const T s = static_cast<T>(slope);
  auto out = make_op_result<T>(
      x->shape, {x}, [x, s](Node<T>& node) {
        if (!x->requires_grad) return;
        const size_t n = node.grad.size();
        T* __restrict__ gx = x->grad.data();
        const T* __restrict__ g = node.grad.data();
        const T* __restrict__ v = x->value.data();
#ifdef _OPENMP
#pragma omp parallel for simd schedule(static) if (n > 65536)
#endif
        for (size_t i = 0; i < n; ++i) gx[i] += g[i] * (v[i] > T(0) ? T(1) : s);
      });
  const size_t n = out->value.size();
  T* __restrict__ o = out->value.data();
  const T* __restrict__ v = x->value.data();
#ifdef _OPENMP
#pragma omp parallel for simd schedule(static) if (n > 65536)
#endif
  for (size_t i = 0; i < n; ++i) o[i] = v[i] > T(0) ? v[i] : s * v[i];
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  auto out_node = make_tensor<T>(x->shape);
  for (size_t i = 0; i < out_node->value.size(); ++i) {
    out_node->value[i] = T(1) / (T(1) + std::exp(-x->value[i]));
  }
  if (x->requires_grad) {
    out_node->requires_grad = true;
    out_node->parents = {x};
    // capture the output values weakly through the node reference
    out_node->backward_fn = [x](Node<T>& node) {
      for (size_t i = 0; i < node.grad.size(); ++i) {
        const T y = node.value[i];
        x->grad[i] += node.grad[i] * y * (T(1) - y);
      }
    };
  }
  return out_node;
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  auto out = make_op_result<T>(
      {1}, {x}, [x](Node<T>& node) {
        if (!x->requires_grad) return;
        for (size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += node.grad[0];
      });
  T acc = T(0);
  for (T v : x->value) acc += v;
  out->value[0] = acc;
  return out;
}

// mean absolute error; the subgradient at zero is taken as zero
template <typename T>
Tensor<T> mae(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mae");
  const T inv_n = T(1) / static_cast<T>(a->numel());
  auto out = make_op_result<T>(
      {1}, {a, b}, [a, b, inv_n](Node<T>& node) {
        const T g = node.grad[0] * inv_n;
        for (size_t i = 0; i < a->value.size(); ++i) {
          const T d = a->value[i] - b->value[i];
          const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
          if (a->requires_grad) a->grad[i] += g * s;
          if (b->requires_grad) b->grad[i] -= g * s;
        }
      });
  T acc = T(0);
  for (size_t i = 0; i < a->value.size(); ++i) acc += std::abs(a->value[i] - b->value[i]);
  out->value[0] = acc * inv_n;
  return out;
}

// ---------------------------------------------------------------------------
// convolutions (stride 1, same padding, odd kernel)

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  detail::check_rank(x, 4, "conv2d input");
  detail::check_rank(w, 4, "conv2d weight");
  detail::check_rank(b, 1, "conv2d bias");
  const size_t n = x->shape[0], ci = x->shape[1], h = x->shape[2], wd = x->shape[3];
  const size_t co = w->shape[0], k = w->shape[2];
  if (w->shape[1] != ci || w->shape[3] != k || k % 2 == 0) {
    throw DataError("conv2d: weight shape " + shape_str(w) + " incompatible with input " +
                    shape_str(x));
  }
  if (b->shape[0] != co) throw DataError("conv2d: bias size mismatch");
  const size_t p = k / 2;
  const size_t hp = h + 2 * p, wp = wd + 2 * p;

  // pad all input planes once; reused across output channels
  ValueArray<T> xpad(n * ci * hp * wp);
  for (size_t in = 0; in < n * ci; ++in) {
    detail::pad_plane(&x->value[in * h * wd], h, wd, p, &xpad[in * hp * wp]);
  }

  auto out = make_op_result<T>(
      {n, co, h, wd}, {x, w, b},
      [x, w, b, n, ci, co, h, wd, k, p, hp, wp](Node<T>& node) {
        const std::vector<T>& g = node.grad;
        if (b->requires_grad) {
          for (size_t oc = 0; oc < co; ++oc) {
            T acc = T(0);
            for (size_t in = 0; in < n; ++in) {
              const T* gp = &g[(in * co + oc) * h * wd];
              for (size_t i = 0; i < h * wd; ++i) acc += gp[i];
            }
            b->grad[oc] += acc;
          }
        }
        if (w->requires_grad) {
          ValueArray<T> xpad(n * ci * hp * wp);
          for (size_t in = 0; in < n * ci; ++in) {
            detail::pad_plane(&x->value[in * h * wd], h, wd, p, &xpad[in * hp * wp]);
          }
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
          for (size_t oc = 0; oc < co; ++oc) {
            for (size_t icn = 0; icn < ci; ++icn) {
              T* dw = &w->grad[(oc * ci + icn) * k * k];
              for (size_t in = 0; in < n; ++in) {
                const T* gp = &g[(in * co + oc) * h * wd];
                const T* xp = &xpad[(in * ci + icn) * hp * wp];
                for (size_t dy = 0; dy < k; ++dy) {
                  for (size_t dx = 0; dx < k; ++dx) {
                    T acc = T(0);
                    for (size_t y = 0; y < h; ++y) {
                      const T* __restrict__ gr = gp + y * wd;
                      const T* __restrict__ xr = xp + (y + dy) * wp + dx;
                      T row = T(0);
#ifdef _OPENMP
#pragma omp simd reduction(+ : row)
#endif
                      for (size_t xx = 0; xx < wd; ++xx) row += gr[xx] * xr[xx];
                      acc += row;
                    }
                    dw[dy * k + dx] += acc;
                  }
                }
              }
            }
          }
        }
        if (x->requires_grad) {
          ValueArray<T> gpad(n * co * hp * wp);
          for (size_t in = 0; in < n; ++in) {
            for (size_t oc = 0; oc < co; ++oc) {
              detail::pad_plane(&g[(in * co + oc) * h * wd], h, wd, p,
                                &gpad[(in * co + oc) * hp * wp]);
            }
          }
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
          for (size_t in = 0; in < n; ++in) {
            for (size_t icn = 0; icn < ci; ++icn) {
              T* dx = &x->grad[(in * ci + icn) * h * wd];
              std::vector<T> wflip(k * k);
              for (size_t oc = 0; oc < co; ++oc) {
                const T* gp = &gpad[(in * co + oc) * hp * wp];
                const T* wk = &w->value[(oc * ci + icn) * k * k];
                // correlation with the flipped kernel over padded grads
                for (size_t i = 0; i < k * k; ++i) wflip[i] = wk[k * k - 1 - i];
                detail::accumulate_conv_plane(dx, gp, wflip.data(), h, wd, k, wp);
              }
            }
          }
        }
      });

#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (size_t in = 0; in < n; ++in) {
    for (size_t oc = 0; oc < co; ++oc) {
      T* outp = &out->value[(in * co + oc) * h * wd];
      const T bias = b->value[oc];
      for (size_t i = 0; i < h * wd; ++i) outp[i] = bias;
      for (size_t icn = 0; icn < ci; ++icn) {
        detail::accumulate_conv_plane(outp, &xpad[(in * ci + icn) * hp * wp],
                                      &w->value[(oc * ci + icn) * k * k], h, wd, k, wp);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  detail::check_rank(x, 3, "conv1d input");
  detail::check_rank(w, 3, "conv1d weight");
  detail::check_rank(b, 1, "conv1d bias");
  const size_t n = x->shape[0], ci = x->shape[1], len = x->shape[2];
  const size_t co = w->shape[0], k = w->shape[2];
  if (w->shape[1] != ci || k % 2 == 0) {
    throw DataError("conv1d: weight shape " + shape_str(w) + " incompatible with input " +
                    shape_str(x));
  }
  if (b->shape[0] != co) throw DataError("conv1d: bias size mismatch");
  const size_t p = k / 2;
  const size_t lp = len + 2 * p;

  std::vector<T> xpad(n * ci * lp, T(0));
  for (size_t in = 0; in < n * ci; ++in) {
    for (size_t i = 0; i < len; ++i) xpad[in * lp + p + i] = x->value[in * len + i];
  }

  auto out = make_op_result<T>(
      {n, co, len}, {x, w, b},
      [x, w, b, n, ci, co, len, k, p, lp](Node<T>& node) {
        const std::vector<T>& g = node.grad;
        if (b->requires_grad) {
          for (size_t oc = 0; oc < co; ++oc) {
            T acc = T(0);
            for (size_t in = 0; in < n; ++in) {
              const T* gp = &g[(in * co + oc) * len];
              for (size_t i = 0; i < len; ++i) acc += gp[i];
            }
            b->grad[oc] += acc;
          }
        }
        if (w->requires_grad) {
          std::vector<T> xpad(n * ci * lp, T(0));
          for (size_t in = 0; in < n * ci; ++in) {
            for (size_t i = 0; i < len; ++i) xpad[in * lp + p + i] = x->value[in * len + i];
          }
          for (size_t oc = 0; oc < co; ++oc) {
            for (size_t icn = 0; icn < ci; ++icn) {
              T* dw = &w->grad[(oc * ci + icn) * k];
              for (size_t in = 0; in < n; ++in) {
                const T* gp = &g[(in * co + oc) * len];
                const T* xp = &xpad[(in * ci + icn) * lp];
                for (size_t dk = 0; dk < k; ++dk) {
                  T acc = T(0);
#ifdef _OPENMP
#pragma omp simd reduction(+ : acc)
#endif
                  for (size_t i = 0; i < len; ++i) acc += gp[i] * xp[i + dk];
                  dw[dk] += acc;
                }
              }
            }
          }
        }
        if (x->requires_grad) {
          std::vector<T> gpad(n * co * lp, T(0));
          for (size_t in = 0; in < n * co; ++in) {
            for (size_t i = 0; i < len; ++i) gpad[in * lp + p + i] = g[in * len + i];
          }
          for (size_t in = 0; in < n; ++in) {
            for (size_t icn = 0; icn < ci; ++icn) {
              T* dx = &x->grad[(in * ci + icn) * len];
              for (size_t oc = 0; oc < co; ++oc) {
                const T* gp = &gpad[(in * co + oc) * lp];
                const T* wk = &w->value[(oc * ci + icn) * k];
                for (size_t dk = 0; dk < k; ++dk) {
                  const T wv = wk[dk];
                  const T* src = gp + 2 * p - dk;
                  for (size_t i = 0; i < len; ++i) dx[i] += wv * src[i];
                }
              }
            }
          }
        }
      });

  for (size_t in = 0; in < n; ++in) {
    for (size_t oc = 0; oc < co; ++oc) {
      T* outp = &out->value[(in * co + oc) * len];
      const T bias = b->value[oc];
      for (size_t i = 0; i < len; ++i) outp[i] = bias;
      for (size_t icn = 0; icn < ci; ++icn) {
        const T* xp = &xpad[(in * ci + icn) * lp];
        const T* wk = &w->value[(oc * ci + icn) * k];
        for (size_t dk = 0; dk < k; ++dk) {
          const T wv = wk[dk];
          for (size_t i = 0; i < len; ++i) outp[i] += wv * xp[i + dk];
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// resolution ops

template <typename T>
Tensor<T> avgpool2(const Tensor<T>& x) {
  detail::check_rank(x, 4, "avgpool2");
  const size_t n = x->shape[0], c = x->shape[1], h = x->shape[2], w = x->shape[3];
  if (h % 2 != 0 || w % 2 != 0) {
    throw DataError("avgpool2: spatial dims must be even, got " + shape_str(x));
  }
  const size_t ho = h / 2, wo = w / 2;
  auto out = make_op_result<T>(
      {n, c, ho, wo}, {x}, [x, n, c, h, w, ho, wo](Node<T>& node) {
        if (!x->requires_grad) return;
        for (size_t pc = 0; pc < n * c; ++pc) {
          const T* gp = &node.grad[pc * ho * wo];
          T* dx = &x->grad[pc * h * w];
          for (size_t y = 0; y < ho; ++y) {
            for (size_t xx = 0; xx < wo; ++xx) {
              const T g = gp[y * wo + xx] * T(0.25);
              dx[(2 * y) * w + 2 * xx] += g;
              dx[(2 * y) * w + 2 * xx + 1] += g;
              dx[(2 * y + 1) * w + 2 * xx] += g;
              dx[(2 * y + 1) * w + 2 * xx + 1] += g;
            }
          }
        }
      });
  for (size_t pc = 0; pc < n * c; ++pc) {
    const T* xp = &x->value[pc * h * w];
    T* op = &out->value[pc * ho * wo];
    for (size_t y = 0; y < ho; ++y) {
      for (size_t xx = 0; xx < wo; ++xx) {
        op[y * wo + xx] = T(0.25) * (xp[(2 * y) * w + 2 * xx] + xp[(2 * y) * w + 2 * xx + 1] +
                                     xp[(2 * y + 1) * w + 2 * xx] + xp[(2 * y + 1) * w + 2 * xx + 1]);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> upsample2(const Tensor<T>& x) {
  detail::check_rank(x, 4, "upsample2");
  const size_t n = x->shape[0], c = x->shape[1], h = x->shape[2], w = x->shape[3];
  const size_t ho = h * 2, wo = w * 2;
  auto out = make_op_result<T>(
      {n, c, ho, wo}, {x}, [x, n, c, h, w, ho, wo](Node<T>& node) {
        if (!x->requires_grad) return;
        for (size_t pc = 0; pc < n * c; ++pc) {
          const T* gp = &node.grad[pc * ho * wo];
          T* dx = &x->grad[pc * h * w];
          for (size_t y = 0; y < h; ++y) {
            for (size_t xx = 0; xx < w; ++xx) {
              dx[y * w + xx] += gp[(2 * y) * wo + 2 * xx] + gp[(2 * y) * wo + 2 * xx + 1] +
                                gp[(2 * y + 1) * wo + 2 * xx] + gp[(2 * y + 1) * wo + 2 * xx + 1];
            }
          }
        }
      });
  for (size_t pc = 0; pc < n * c; ++pc) {
    const T* xp = &x->value[pc * h * w];
    T* op = &out->value[pc * ho * wo];
    for (size_t y = 0; y < h; ++y) {
      for (size_t xx = 0; xx < w; ++xx) {
        const T v = xp[y * w + xx];
        op[(2 * y) * wo + 2 * xx] = v;
        op[(2 * y) * wo + 2 * xx + 1] = v;
        op[(2 * y + 1) * wo + 2 * xx] = v;
        op[(2 * y + 1) * wo + 2 * xx + 1] = v;
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_rank(a, 4, "concat_channels");
  detail::check_rank(b, 4, "concat_channels");
  if (a->shape[0] != b->shape[0] || a->shape[2] != b->shape[2] || a->shape[3] != b->shape[3]) {
    throw DataError("concat_channels: shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
  const size_t n = a->shape[0], ca = a->shape[1], cb = b->shape[1];
  const size_t hw = a->shape[2] * a->shape[3];
  auto out = make_op_result<T>(
      {n, ca + cb, a->shape[2], a->shape[3]}, {a, b},
      [a, b, n, ca, cb, hw](Node<T>& node) {
        for (size_t in = 0; in < n; ++in) {
          const T* gp = &node.grad[in * (ca + cb) * hw];
          if (a->requires_grad) {
            T* ga = &a->grad[in * ca * hw];
            for (size_t i = 0; i < ca * hw; ++i) ga[i] += gp[i];
          }
          if (b->requires_grad) {
            T* gb = &b->grad[in * cb * hw];
            for (size_t i = 0; i < cb * hw; ++i) gb[i] += gp[ca * hw + i];
          }
        }
      });
  for (size_t in = 0; in < n; ++in) {
    T* op = &out->value[in * (ca + cb) * hw];
    const T* pa = &a->value[in * ca * hw];
    const T* pb = &b->value[in * cb * hw];
    for (size_t i = 0; i < ca * hw; ++i) op[i] = pa[i];
    for (size_t i = 0; i < cb * hw; ++i) op[ca * hw + i] = pb[i];
  }
  return out;
}

// zero-pad / crop along the frame (time) axis of a [N,C,T,M] tensor
template <typename T>
Tensor<T> pad_frames(const Tensor<T>& x, size_t new_t) {
  detail::check_rank(x, 4, "pad_frames");
  const size_t n = x->shape[0], c = x->shape[1], t = x->shape[2], m = x->shape[3];
  if (new_t < t) throw DataError("pad_frames: target smaller than input");
  if (new_t == t) return x;
  auto out = make_op_result<T>(
      {n, c, new_t, m}, {x}, [x, n, c, t, m, new_t](Node<T>& node) {
        if (!x->requires_grad) return;
        for (size_t pc = 0; pc < n * c; ++pc) {
          const T* gp = &node.grad[pc * new_t * m];
          T* dx = &x->grad[pc * t * m];
          for (size_t i = 0; i < t * m; ++i) dx[i] += gp[i];
        }
      });
  for (size_t pc = 0; pc < n * c; ++pc) {
    const T* xp = &x->value[pc * t * m];
    T* op = &out->value[pc * new_t * m];
    for (size_t i = 0; i < t * m; ++i) op[i] = xp[i];
    for (size_t i = t * m; i < new_t * m; ++i) op[i] = T(0);
  }
  return out;
}

template <typename T>
Tensor<T> crop_frames(const Tensor<T>& x, size_t new_t) {
  detail::check_rank(x, 4, "crop_frames");
  const size_t n = x->shape[0], c = x->shape[1], t = x->shape[2], m = x->shape[3];
  if (new_t > t) throw DataError("crop_frames: target larger than input");
  if (new_t == t) return x;
  auto out = make_op_result<T>(
      {n, c, new_t, m}, {x}, [x, n, c, t, m, new_t](Node<T>& node) {
        if (!x->requires_grad) return;
        for (size_t pc = 0; pc < n * c; ++pc) {
          const T* gp = &node.grad[pc * new_t * m];
          T* dx = &x->grad[pc * t * m];
          for (size_t i = 0; i < new_t * m; ++i) dx[i] += gp[i];
        }
      });
  for (size_t pc = 0; pc < n * c; ++pc) {
    const T* xp = &x->value[pc * t * m];
    T* op = &out->value[pc * new_t * m];
    for (size_t i = 0; i < new_t * m; ++i) op[i] = xp[i];
  }
  return out;
}

// [N,1,T,M] -> [N,M,T]: mel bins become conv1d channels
template <typename T>
Tensor<T> mel_to_seq(const Tensor<T>& x) {
  detail::check_rank(x, 4, "mel_to_seq");
  if (x->shape[1] != 1) throw DataError("mel_to_seq: expected a single channel, got " + shape_str(x));
  const size_t n = x->shape[0], t = x->shape[2], m = x->shape[3];
  auto out = make_op_result<T>(
      {n, m, t}, {x}, [x, n, t, m](Node<T>& node) {
        if (!x->requires_grad) return;
        for (size_t in = 0; in < n; ++in) {
          const T* gp = &node.grad[in * m * t];
          T* dx = &x->grad[in * t * m];
          for (size_t j = 0; j < m; ++j) {
            for (size_t i = 0; i < t; ++i) dx[i * m + j] += gp[j * t + i];
          }
        }
      });
  for (size_t in = 0; in < n; ++in) {
    const T* xp = &x->value[in * t * m];
    T* op = &out->value[in * m * t];
    for (size_t j = 0; j < m; ++j) {
      for (size_t i = 0; i < t; ++i) op[j * t + i] = xp[i * m + j];
    }
  }
  return out;
}

// x[N,C,T,M] scaled per frame by m[N,1,T]
template <typename T>
Tensor<T> scale_time(const Tensor<T>& x, const Tensor<T>& mask) {
  detail::check_rank(x, 4, "scale_time");
  detail::check_rank(mask, 3, "scale_time mask");
  const size_t n = x->shape[0], c = x->shape[1], t = x->shape[2], m = x->shape[3];
  if (mask->shape[0] != n || mask->shape[1] != 1 || mask->shape[2] != t) {
    throw DataError("scale_time: mask shape " + shape_str(mask) + " incompatible with " +
                    shape_str(x));
  }
  auto out = make_op_result<T>(
      x->shape, {x, mask}, [x, mask, n, c, t, m](Node<T>& node) {
        for (size_t in = 0; in < n; ++in) {
          for (size_t ch = 0; ch < c; ++ch) {
            const T* gp = &node.grad[(in * c + ch) * t * m];
            const T* xp = &x->value[(in * c + ch) * t * m];
            for (size_t i = 0; i < t; ++i) {
              const T mv = mask->value[in * t + i];
              if (x->requires_grad) {
                T* dx = &x->grad[(in * c + ch) * t * m + i * m];
                for (size_t j = 0; j < m; ++j) dx[j] += gp[i * m + j] * mv;
              }
              if (mask->requires_grad) {
                T acc = T(0);
                for (size_t j = 0; j < m; ++j) acc += gp[i * m + j] * xp[i * m + j];
                mask->grad[in * t + i] += acc;
              }
            }
          }
        }
      });
  for (size_t in = 0; in < n; ++in) {
    for (size_t ch = 0; ch < c; ++ch) {
      const T* xp = &x->value[(in * c + ch) * t * m];
      T* op = &out->value[(in * c + ch) * t * m];
      for (size_t i = 0; i < t; ++i) {
        const T mv = mask->value[in * t + i];
        for (size_t j = 0; j < m; ++j) op[i * m + j] = xp[i * m + j] * mv;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// batch normalization

template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;  // biased estimate
};

// Per-channel normalization over all remaining axes of a rank-3 or rank-4
// [N,C,...] tensor. Training mode normalizes with batch statistics and
// updates the running estimates; eval mode is an affine map using them.
template <typename T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    BatchNormState<T>& state, bool training, double momentum = 0.9,
                    double eps = 1e-5) {
  if (x->shape.size() != 3 && x->shape.size() != 4) {
    throw DataError("batchnorm: expected rank 3 or 4 input, got " + shape_str(x));
  }
  const size_t n = x->shape[0], c = x->shape[1];
  size_t inner = 1;
  for (size_t i = 2; i < x->shape.size(); ++i) inner *= x->shape[i];
  if (gamma->shape != std::vector<size_t>{c} || beta->shape != std::vector<size_t>{c}) {
    throw DataError("batchnorm: scale/shift size mismatch for " + shape_str(x));
  }
  if (state.running_mean.size() != c) {
    state.running_mean.assign(c, T(0));
    state.running_var.assign(c, T(1));
  }

  const T count = static_cast<T>(n * inner);
  std::vector<T> mean(c, T(0)), inv_std(c, T(0));
  if (training) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (c > 1 && n * inner > 4096)
#endif
    for (size_t ch = 0; ch < c; ++ch) {
      T acc = T(0);
      for (size_t in = 0; in < n; ++in) {
        const T* __restrict__ xp = &x->value[(in * c + ch) * inner];
#ifdef _OPENMP
#pragma omp simd reduction(+ : acc)
#endif
        for (size_t i = 0; i < inner; ++i) acc += xp[i];
      }
      mean[ch] = acc / count;
      T var = T(0);
      for (size_t in = 0; in < n; ++in) {
        const T* __restrict__ xp = &x->value[(in * c + ch) * inner];
        const T mu = mean[ch];
#ifdef _OPENMP
#pragma omp simd reduction(+ : var)
#endif
        for (size_t i = 0; i < inner; ++i) {
          const T d = xp[i] - mu;
          var += d * d;
        }
      }
      var /= count;
      inv_std[ch] = T(1) / std::sqrt(var + static_cast<T>(eps));
      state.running_mean[ch] = static_cast<T>(momentum) * state.running_mean[ch] +
                               (T(1) - static_cast<T>(momentum)) * mean[ch];
      state.running_var[ch] = static_cast<T>(momentum) * state.running_var[ch] +
                              (T(1) - static_cast<T>(momentum)) * var;
    }
  } else {
    for (size_t ch = 0; ch < c; ++ch) {
      mean[ch] = state.running_mean[ch];
      inv_std[ch] = T(1) / std::sqrt(state.running_var[ch] + static_cast<T>(eps));
    }
  }

  auto out = make_op_result<T>(
      x->shape, {x, gamma, beta},
      [x, gamma, beta, n, c, inner, count, mean, inv_std, training](Node<T>& node) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (c > 1 && n * inner > 4096)
#endif
        for (size_t ch = 0; ch < c; ++ch) {
          const T g_scale = gamma->value[ch];
          const T is = inv_std[ch];
          const T mu = mean[ch];
          // reductions shared by every input position of this channel
          T sum_g = T(0), sum_gx = T(0);
          for (size_t in = 0; in < n; ++in) {
            const T* __restrict__ gp = &node.grad[(in * c + ch) * inner];
            const T* __restrict__ xp = &x->value[(in * c + ch) * inner];
#ifdef _OPENMP
#pragma omp simd reduction(+ : sum_g, sum_gx)
#endif
            for (size_t i = 0; i < inner; ++i) {
              sum_g += gp[i];
              sum_gx += gp[i] * (xp[i] - mu) * is;
            }
          }
          if (gamma->requires_grad) gamma->grad[ch] += sum_gx;
          if (beta->requires_grad) beta->grad[ch] += sum_g;
          if (!x->requires_grad) continue;
          const T mg = sum_g / count;
          const T mgx = sum_gx / count;
          for (size_t in = 0; in < n; ++in) {
            const T* __restrict__ gp = &node.grad[(in * c + ch) * inner];
            const T* __restrict__ xp = &x->value[(in * c + ch) * inner];
            T* __restrict__ dx = &x->grad[(in * c + ch) * inner];
            if (training) {
#ifdef _OPENMP
#pragma omp simd
#endif
              for (size_t i = 0; i < inner; ++i) {
                const T xhat = (xp[i] - mu) * is;
                dx[i] += g_scale * is * (gp[i] - mg - xhat * mgx);
              }
            } else {
#ifdef _OPENMP
#pragma omp simd
#endif
              for (size_t i = 0; i < inner; ++i) dx[i] += g_scale * is * gp[i];
            }
          }
        }
      });

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (c > 1 && n * inner > 4096)
#endif
  for (size_t ch = 0; ch < c; ++ch) {
    const T gs = gamma->value[ch], bs = beta->value[ch], is = inv_std[ch], mu = mean[ch];
    for (size_t in = 0; in < n; ++in) {
      const T* __restrict__ xp = &x->value[(in * c + ch) * inner];
      T* __restrict__ op = &out->value[(in * c + ch) * inner];
#ifdef _OPENMP
#pragma omp simd
#endif
      for (size_t i = 0; i < inner; ++i) op[i] = gs * (xp[i] - mu) * is + bs;
    }
  }
  return out;
}

}  // namespace drysep::nn
