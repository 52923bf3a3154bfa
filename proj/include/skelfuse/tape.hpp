#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "skelfuse/errors.hpp"
#include "skelfuse/tensor.hpp"

namespace skelfuse {

/// Reverse-mode tape. One tape is built per forward pass; backward() walks the
/// node list in reverse and accumulates into the referenced Param gradients.
template <class S>
class Tape {
 public:
  using Id = int;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapM = Eigen::Map<Mat>;
  using CMapM = Eigen::Map<const Mat>;

  Id input(Tensor<S> v) {
    Node n;
    n.val = std::move(v);
    nodes_.push_back(std::move(n));
    return last();
  }

  Id param(Param<S>& p) {
    Node n;
    n.ext = &p.value;
    n.sink = &p;
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return last();
  }

  const Tensor<S>& val(Id id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.ext ? *n.ext : n.val;
  }

  S scalar(Id id) const { return val(id).data[0]; }

  /// y = x.reshape(-1, in) * w (+ b), result keeps x's leading dims.
  Id linear(Id x, Id w, Id b = -1) {
    const Tensor<S>& xv = val(x);
    const Tensor<S>& wv = val(w);
    const int in = wv.dim(0), out = wv.dim(1);
    if (xv.cols() != in) throw ContractError("linear: dimension mismatch");
    const std::int64_t R = xv.rows();
    std::vector<int> oshape = xv.shape;
    oshape.back() = out;
    Tensor<S> y(oshape);
    MapM Y(y.ptr(), R, out);
    Y.noalias() = CMapM(xv.ptr(), R, in) * CMapM(wv.ptr(), in, out);
    if (b >= 0) Y.rowwise() += Eigen::Map<const Eigen::RowVector<S, Eigen::Dynamic>>(val(b).ptr(), out);
    return make(std::move(y), {x, w, b}, [x, w, b, R, in, out](Tape& t, Node& n) {
      CMapM dY(n.grad.ptr(), R, out);
      if (t.wants(x)) MapM(t.grad(x).ptr(), R, in).noalias() += dY * CMapM(t.val(w).ptr(), in, out).transpose();
      if (t.wants(w)) MapM(t.grad(w).ptr(), in, out).noalias() += CMapM(t.val(x).ptr(), R, in).transpose() * dY;
      if (b >= 0 && t.wants(b))
        Eigen::Map<Eigen::RowVector<S, Eigen::Dynamic>>(t.grad(b).ptr(), out) += dY.colwise().sum();
    });
  }

  Id add(Id a, Id b) {
    Tensor<S> y = val(a);
    const Tensor<S>& bv = val(b);
    for (std::int64_t i = 0; i < y.size(); ++i) y.data[i] += bv.data[i];
    return make(std::move(y), {a, b}, [a, b](Tape& t, Node& n) {
      t.axpy(a, S(1), n.grad);
      t.axpy(b, S(1), n.grad);
    });
  }

  Id sub(Id a, Id b) {
    Tensor<S> y = val(a);
    const Tensor<S>& bv = val(b);
    for (std::int64_t i = 0; i < y.size(); ++i) y.data[i] -= bv.data[i];
    return make(std::move(y), {a, b}, [a, b](Tape& t, Node& n) {
      t.axpy(a, S(1), n.grad);
      t.axpy(b, S(-1), n.grad);
    });
  }

  Id mul(Id a, Id b) {
    Tensor<S> y = val(a);
    const Tensor<S>& bv = val(b);
    for (std::int64_t i = 0; i < y.size(); ++i) y.data[i] *= bv.data[i];
    return make(std::move(y), {a, b}, [a, b](Tape& t, Node& n) {
      if (t.wants(a)) {
        Tensor<S>& ga = t.grad(a);
        const Tensor<S>& bv2 = t.val(b);
        for (std::int64_t i = 0; i < ga.size(); ++i) ga.data[i] += n.grad.data[i] * bv2.data[i];
      }
      if (t.wants(b)) {
        Tensor<S>& gb = t.grad(b);
        const Tensor<S>& av = t.val(a);
        for (std::int64_t i = 0; i < gb.size(); ++i) gb.data[i] += n.grad.data[i] * av.data[i];
      }
    });
  }

  Id scale(Id a, S c) {
    Tensor<S> y = val(a);
    for (auto& v : y.data) v *= c;
    return make(std::move(y), {a}, [a, c](Tape& t, Node& n) { t.axpy(a, c, n.grad); });
  }

  Id relu(Id a) {
    Tensor<S> y = val(a);
    for (auto& v : y.data) v = v > S(0) ? v : S(0);
    return make(std::move(y), {a}, [a, me = last() + 1](Tape& t, Node& n) {
      Tensor<S>& ga = t.grad(a);
      const Tensor<S>& y2 = t.val(me);
      for (std::int64_t i = 0; i < ga.size(); ++i)
        if (y2.data[i] > S(0)) ga.data[i] += n.grad.data[i];
    });
  }

  Id sigmoid(Id a) {
    Tensor<S> y = val(a);
    for (auto& v : y.data) v = S(1) / (S(1) + std::exp(-v));
    return make(std::move(y), {a}, [a, me = last() + 1](Tape& t, Node& n) {
      Tensor<S>& ga = t.grad(a);
      const Tensor<S>& y2 = t.val(me);
      for (std::int64_t i = 0; i < ga.size(); ++i)
        ga.data[i] += n.grad.data[i] * y2.data[i] * (S(1) - y2.data[i]);
    });
  }

  /// Row-wise softmax over the last dimension.
  Id softmax_last(Id a) {
    Tensor<S> y = val(a);
    const int c = y.cols();
    const std::int64_t R = y.rows();
    for (std::int64_t r = 0; r < R; ++r) {
      S* row = y.ptr() + r * c;
      S mx = row[0];
      for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
      S sum = S(0);
      for (int j = 0; j < c; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (int j = 0; j < c; ++j) row[j] /= sum;
    }
    return make(std::move(y), {a}, [a, c, R, me = last() + 1](Tape& t, Node& n) {
      Tensor<S>& ga = t.grad(a);
      const Tensor<S>& y2 = t.val(me);
      for (std::int64_t r = 0; r < R; ++r) {
        const S* yr = y2.ptr() + r * c;
        const S* gr = n.grad.ptr() + r * c;
        S dot = S(0);
        for (int j = 0; j < c; ++j) dot += yr[j] * gr[j];
        S* out = ga.ptr() + r * c;
        for (int j = 0; j < c; ++j) out[j] += yr[j] * (gr[j] - dot);
      }
    });
  }

  /// Batched matmul over the leading dimension: out[f] = a[f] * op(b[f]).
  Id bmm(Id a, Id b, bool trans_b = false) {
    const Tensor<S>& av = val(a);
    const Tensor<S>& bv = val(b);
    const int F = av.dim(0), m = av.dim(1), n = av.dim(2);
    const int p = trans_b ? bv.dim(1) : bv.dim(2);
    Tensor<S> y({F, m, p});
    for (int f = 0; f < F; ++f) {
      CMapM A(av.ptr() + static_cast<std::int64_t>(f) * m * n, m, n);
      MapM Y(y.ptr() + static_cast<std::int64_t>(f) * m * p, m, p);
      if (trans_b) {
        CMapM B(bv.ptr() + static_cast<std::int64_t>(f) * p * n, p, n);
        Y.noalias() = A * B.transpose();
      } else {
        CMapM B(bv.ptr() + static_cast<std::int64_t>(f) * n * p, n, p);
        Y.noalias() = A * B;
      }
    }
    return make(std::move(y), {a, b}, [a, b, F, m, n, p, trans_b](Tape& t, Node& nd) {
      const Tensor<S>& av2 = t.val(a);
      const Tensor<S>& bv2 = t.val(b);
      for (int f = 0; f < F; ++f) {
        CMapM dY(nd.grad.ptr() + static_cast<std::int64_t>(f) * m * p, m, p);
        CMapM A(av2.ptr() + static_cast<std::int64_t>(f) * m * n, m, n);
        if (trans_b) {
          CMapM B(bv2.ptr() + static_cast<std::int64_t>(f) * p * n, p, n);
          if (t.wants(a))
            MapM(t.grad(a).ptr() + static_cast<std::int64_t>(f) * m * n, m, n).noalias() += dY * B;
          if (t.wants(b))
            MapM(t.grad(b).ptr() + static_cast<std::int64_t>(f) * p * n, p, n).noalias() += dY.transpose() * A;
        } else {
          CMapM B(bv2.ptr() + static_cast<std::int64_t>(f) * n * p, n, p);
          if (t.wants(a))
            MapM(t.grad(a).ptr() + static_cast<std::int64_t>(f) * m * n, m, n).noalias() += dY * B.transpose();
          if (t.wants(b))
            MapM(t.grad(b).ptr() + static_cast<std::int64_t>(f) * n * p, n, p).noalias() += A.transpose() * dY;
        }
      }
    });
  }

  /// Max over the middle of [A,B,C]; wrappers below pick the axis.
  Id reduce_max_mid(Id x, int A, int B, int C, std::vector<int> oshape) {
    const Tensor<S>& xv = val(x);
    Tensor<S> y(std::move(oshape));
    auto arg = std::make_shared<std::vector<int>>(static_cast<std::size_t>(A) * C);
    for (int a = 0; a < A; ++a)
      for (int c = 0; c < C; ++c) {
        S best = xv.data[(static_cast<std::size_t>(a) * B) * C + c];
        int bi = 0;
        for (int b = 1; b < B; ++b) {
          const S v = xv.data[(static_cast<std::size_t>(a) * B + b) * C + c];
          if (v > best) {
            best = v;
            bi = b;
          }
        }
        y.data[static_cast<std::size_t>(a) * C + c] = best;
        (*arg)[static_cast<std::size_t>(a) * C + c] = bi;
      }
    return make(std::move(y), {x}, [x, A, B, C, arg](Tape& t, Node& n) {
      Tensor<S>& gx = t.grad(x);
      for (int a = 0; a < A; ++a)
        for (int c = 0; c < C; ++c) {
          const int b = (*arg)[static_cast<std::size_t>(a) * C + c];
          gx.data[(static_cast<std::size_t>(a) * B + b) * C + c] += n.grad.data[static_cast<std::size_t>(a) * C + c];
        }
    });
  }

  /// [k,N,D] -> [k,D], max over joints.
  Id max_axis1(Id x) {
    const Tensor<S>& xv = val(x);
    return reduce_max_mid(x, xv.dim(0), xv.dim(1), xv.dim(2), {xv.dim(0), xv.dim(2)});
  }

  /// [k,D] -> [D], max over frames.
  Id max_axis0(Id x) {
    const Tensor<S>& xv = val(x);
    return reduce_max_mid(x, 1, xv.dim(0), xv.dim(1), {xv.dim(1)});
  }

  Id concat_last(Id a, Id b) {
    const Tensor<S>& av = val(a);
    const Tensor<S>& bv = val(b);
    const int ca = av.cols(), cb = bv.cols();
    const std::int64_t R = av.rows();
    std::vector<int> oshape = av.shape;
    oshape.back() = ca + cb;
    Tensor<S> y(oshape);
    for (std::int64_t r = 0; r < R; ++r) {
      std::copy(av.ptr() + r * ca, av.ptr() + (r + 1) * ca, y.ptr() + r * (ca + cb));
      std::copy(bv.ptr() + r * cb, bv.ptr() + (r + 1) * cb, y.ptr() + r * (ca + cb) + ca);
    }
    return make(std::move(y), {a, b}, [a, b, ca, cb, R](Tape& t, Node& n) {
      for (std::int64_t r = 0; r < R; ++r) {
        if (t.wants(a)) {
          S* ga = t.grad(a).ptr() + r * ca;
          const S* gy = n.grad.ptr() + r * (ca + cb);
          for (int j = 0; j < ca; ++j) ga[j] += gy[j];
        }
        if (t.wants(b)) {
          S* gb = t.grad(b).ptr() + r * cb;
          const S* gy = n.grad.ptr() + r * (ca + cb) + ca;
          for (int j = 0; j < cb; ++j) gb[j] += gy[j];
        }
      }
    });
  }

  /// Repeat x along a new leading dimension.
  Id broadcast0(Id x, int k) {
    const Tensor<S>& xv = val(x);
    std::vector<int> oshape;
    oshape.push_back(k);
    for (int d : xv.shape) oshape.push_back(d);
    Tensor<S> y(oshape);
    const std::int64_t n = xv.size();
    for (int i = 0; i < k; ++i) std::copy(xv.ptr(), xv.ptr() + n, y.ptr() + i * n);
    return make(std::move(y), {x}, [x, k, n](Tape& t, Node& nd) {
      Tensor<S>& gx = t.grad(x);
      for (int i = 0; i < k; ++i)
        for (std::int64_t j = 0; j < n; ++j) gx.data[j] += nd.grad.data[i * n + j];
    });
  }

  /// [k,D] -> [k,N,D], repeat along a new middle dimension.
  Id broadcast_mid(Id x, int N) {
    const Tensor<S>& xv = val(x);
    const int k = xv.dim(0), D = xv.dim(1);
    Tensor<S> y({k, N, D});
    for (int t = 0; t < k; ++t)
      for (int i = 0; i < N; ++i)
        std::copy(xv.ptr() + t * D, xv.ptr() + (t + 1) * D, y.ptr() + (static_cast<std::int64_t>(t) * N + i) * D);
    return make(std::move(y), {x}, [x, k, N, D](Tape& t, Node& nd) {
      Tensor<S>& gx = t.grad(x);
      for (int f = 0; f < k; ++f)
        for (int i = 0; i < N; ++i) {
          const S* g = nd.grad.ptr() + (static_cast<std::int64_t>(f) * N + i) * D;
          for (int j = 0; j < D; ++j) gx.data[static_cast<std::size_t>(f) * D + j] += g[j];
        }
    });
  }

  /// Embedding lookup: out[r] = table[ids[r]].
  Id gather_rows(Id table, std::vector<int> ids, std::vector<int> oshape) {
    const Tensor<S>& tv = val(table);
    const int D = tv.cols();
    Tensor<S> y(std::move(oshape));
    for (std::size_t r = 0; r < ids.size(); ++r)
      std::copy(tv.ptr() + static_cast<std::int64_t>(ids[r]) * D, tv.ptr() + static_cast<std::int64_t>(ids[r] + 1) * D,
                y.ptr() + static_cast<std::int64_t>(r) * D);
    auto idsp = std::make_shared<std::vector<int>>(std::move(ids));
    return make(std::move(y), {table}, [table, idsp, D](Tape& t, Node& n) {
      Tensor<S>& gt = t.grad(table);
      for (std::size_t r = 0; r < idsp->size(); ++r) {
        const S* g = n.grad.ptr() + static_cast<std::int64_t>(r) * D;
        S* dst = gt.ptr() + static_cast<std::int64_t>((*idsp)[r]) * D;
        for (int j = 0; j < D; ++j) dst[j] += g[j];
      }
    });
  }

  /// Temporal convolution, width 3, zero-padded to the same length.
  /// w has shape [3*D_in, D_out] with taps stacked [prev; curr; next].
  Id conv1d_k3(Id x, Id w, Id b) {
    const Tensor<S>& xv = val(x);
    const Tensor<S>& wv = val(w);
    const int k = xv.dim(0), din = xv.dim(1), dout = wv.dim(1);
    Tensor<S> y({k, dout});
    MapM Y(y.ptr(), k, dout);
    CMapM X(xv.ptr(), k, din);
    for (int tap = 0; tap < 3; ++tap) {
      const int shift = tap - 1;
      const int r0 = std::max(0, -shift), r1 = std::min(k, k - shift);
      if (r1 <= r0) continue;
      CMapM W(wv.ptr() + static_cast<std::int64_t>(tap) * din * dout, din, dout);
      Y.middleRows(r0, r1 - r0).noalias() += X.middleRows(r0 + shift, r1 - r0) * W;
    }
    Y.rowwise() += Eigen::Map<const Eigen::RowVector<S, Eigen::Dynamic>>(val(b).ptr(), dout);
    return make(std::move(y), {x, w, b}, [x, w, b, k, din, dout](Tape& t, Node& n) {
      CMapM dY(n.grad.ptr(), k, dout);
      CMapM X(t.val(x).ptr(), k, din);
      const Tensor<S>& wv2 = t.val(w);
      for (int tap = 0; tap < 3; ++tap) {
        const int shift = tap - 1;
        const int r0 = std::max(0, -shift), r1 = std::min(k, k - shift);
        if (r1 <= r0) continue;
        CMapM W(wv2.ptr() + static_cast<std::int64_t>(tap) * din * dout, din, dout);
        if (t.wants(x))
          MapM(t.grad(x).ptr(), k, din).middleRows(r0 + shift, r1 - r0).noalias() +=
              dY.middleRows(r0, r1 - r0) * W.transpose();
        if (t.wants(w))
          MapM(t.grad(w).ptr() + static_cast<std::int64_t>(tap) * din * dout, din, dout).noalias() +=
              X.middleRows(r0 + shift, r1 - r0).transpose() * dY.middleRows(r0, r1 - r0);
      }
      if (t.wants(b))
        Eigen::Map<Eigen::RowVector<S, Eigen::Dynamic>>(t.grad(b).ptr(), dout) += dY.colwise().sum();
    });
  }

  /// Attention-weighted average of candidate embeddings per frame.
  Id fuse_weighted(Id att, Id eo, S eps) {
    const Tensor<S>& wv = val(att);
    const Tensor<S>& ev = val(eo);
    const int k = wv.dim(0), no = wv.dim(1), D = ev.dim(2);
    Tensor<S> y({k, D});
    for (int t = 0; t < k; ++t) {
      S s = S(0);
      for (int j = 0; j < no; ++j) s += wv.at(t, j);
      const S inv = S(1) / (s + eps);
      for (int j = 0; j < no; ++j) {
        const S wj = wv.at(t, j) * inv;
        const S* e = ev.ptr() + (static_cast<std::int64_t>(t) * no + j) * D;
        S* r = y.ptr() + static_cast<std::int64_t>(t) * D;
        for (int d = 0; d < D; ++d) r[d] += wj * e[d];
      }
    }
    return make(std::move(y), {att, eo}, [att, eo, k, no, D, eps, me = last() + 1](Tape& t, Node& n) {
      const Tensor<S>& wv2 = t.val(att);
      const Tensor<S>& ev2 = t.val(eo);
      const Tensor<S>& rv = t.val(me);
      for (int f = 0; f < k; ++f) {
        S s = S(0);
        for (int j = 0; j < no; ++j) s += wv2.at(f, j);
        const S inv = S(1) / (s + eps);
        const S* dr = n.grad.ptr() + static_cast<std::int64_t>(f) * D;
        const S* r = rv.ptr() + static_cast<std::int64_t>(f) * D;
        for (int j = 0; j < no; ++j) {
          const S* e = ev2.ptr() + (static_cast<std::int64_t>(f) * no + j) * D;
          if (t.wants(eo)) {
            S* ge = t.grad(eo).ptr() + (static_cast<std::int64_t>(f) * no + j) * D;
            const S wj = wv2.at(f, j) * inv;
            for (int d = 0; d < D; ++d) ge[d] += wj * dr[d];
          }
          if (t.wants(att)) {
            S acc = S(0);
            for (int d = 0; d < D; ++d) acc += dr[d] * (e[d] - r[d]);
            t.grad(att).at(f, j) += acc * inv;
          }
        }
      }
    });
  }

  /// Per-frame category distribution: scatter attention mass by category and
  /// normalize. cats[t*no+j] in [0, m).
  Id category_timeline(Id att, std::vector<int> cats, int m, S eps) {
    const Tensor<S>& wv = val(att);
    const int k = wv.dim(0), no = wv.dim(1);
    Tensor<S> y({k, m});
    for (int t = 0; t < k; ++t) {
      S s = S(0);
      for (int j = 0; j < no; ++j) {
        y.at(t, cats[static_cast<std::size_t>(t) * no + j]) += wv.at(t, j);
        s += wv.at(t, j);
      }
      const S inv = S(1) / (s + eps);
      for (int c = 0; c < m; ++c) y.at(t, c) *= inv;
    }
    auto catsp = std::make_shared<std::vector<int>>(std::move(cats));
    return make(std::move(y), {att}, [att, catsp, k, no, m, eps, me = last() + 1](Tape& t, Node& n) {
      const Tensor<S>& wv2 = t.val(att);
      const Tensor<S>& pv = t.val(me);
      Tensor<S>& gw = t.grad(att);
      for (int f = 0; f < k; ++f) {
        S s = S(0);
        for (int j = 0; j < no; ++j) s += wv2.at(f, j);
        const S inv = S(1) / (s + eps);
        S dot = S(0);  // sum_c dP[c] * P[c]
        for (int c = 0; c < m; ++c) dot += n.grad.at(f, c) * pv.at(f, c);
        for (int j = 0; j < no; ++j) {
          const int c = (*catsp)[static_cast<std::size_t>(f) * no + j];
          gw.at(f, j) += (n.grad.at(f, c) - dot) * inv;
        }
      }
    });
  }

  Id reduce_mean0(Id x) {
    const Tensor<S>& xv = val(x);
    const int k = xv.dim(0), m = xv.dim(1);
    Tensor<S> y({m});
    for (int t = 0; t < k; ++t)
      for (int c = 0; c < m; ++c) y.at(c) += xv.at(t, c);
    const S inv = S(1) / S(k);
    for (auto& v : y.data) v *= inv;
    return make(std::move(y), {x}, [x, k, m, inv](Tape& t, Node& n) {
      Tensor<S>& gx = t.grad(x);
      for (int f = 0; f < k; ++f)
        for (int c = 0; c < m; ++c) gx.at(f, c) += n.grad.at(c) * inv;
    });
  }

  Id reduce_mean_all(Id x) {
    const Tensor<S>& xv = val(x);
    S acc = S(0);
    for (const auto& v : xv.data) acc += v;
    const S inv = S(1) / S(xv.size());
    Tensor<S> y({1});
    y.at(0) = acc * inv;
    return make(std::move(y), {x}, [x, inv](Tape& t, Node& n) {
      Tensor<S>& gx = t.grad(x);
      const S g = n.grad.at(0) * inv;
      for (auto& v : gx.data) v += g;
    });
  }

  /// x - row (row broadcast over the leading dimension of [k,m]).
  Id sub_broadcast0(Id x, Id row) {
    const Tensor<S>& xv = val(x);
    const Tensor<S>& rv = val(row);
    const int k = xv.dim(0), m = xv.dim(1);
    Tensor<S> y({k, m});
    for (int t = 0; t < k; ++t)
      for (int c = 0; c < m; ++c) y.at(t, c) = xv.at(t, c) - rv.at(c);
    return make(std::move(y), {x, row}, [x, row, k, m](Tape& t, Node& n) {
      for (int f = 0; f < k; ++f)
        for (int c = 0; c < m; ++c) {
          if (t.wants(x)) t.grad(x).at(f, c) += n.grad.at(f, c);
          if (t.wants(row)) t.grad(row).at(c) -= n.grad.at(f, c);
        }
    });
  }

  /// Cross entropy against a label-smoothed target.
  Id cross_entropy_smooth(Id logits, int label, S eps) {
    const Tensor<S>& lv = val(logits);
    const int C = static_cast<int>(lv.size());
    S mx = lv.at(0);
    for (int j = 1; j < C; ++j) mx = std::max(mx, lv.at(j));
    S sum = S(0);
    for (int j = 0; j < C; ++j) sum += std::exp(lv.at(j) - mx);
    const S lse = std::log(sum) + mx;
    const S off = eps / S(C);
    S dot = S(0);
    for (int j = 0; j < C; ++j) dot += (j == label ? S(1) - eps + off : off) * lv.at(j);
    Tensor<S> y({1});
    y.at(0) = lse - dot;
    return make(std::move(y), {logits}, [logits, label, eps, C](Tape& t, Node& n) {
      const Tensor<S>& lv2 = t.val(logits);
      S mx2 = lv2.at(0);
      for (int j = 1; j < C; ++j) mx2 = std::max(mx2, lv2.at(j));
      S sum2 = S(0);
      for (int j = 0; j < C; ++j) sum2 += std::exp(lv2.at(j) - mx2);
      Tensor<S>& g = t.grad(logits);
      const S off = eps / S(C);
      for (int j = 0; j < C; ++j) {
        const S p = std::exp(lv2.at(j) - mx2) / sum2;
        const S q = j == label ? S(1) - eps + off : off;
        g.at(j) += n.grad.at(0) * (p - q);
      }
    });
  }

  /// Cut the graph: value flows, gradient does not.
  Id detach(Id x) { return input(val(x)); }

  /// Seed d(out)=seed and accumulate into every reachable Param's grad.
  void backward(Id out, S seed = S(1)) {
    Node& o = nodes_[static_cast<std::size_t>(out)];
    if ((o.ext ? o.ext->size() : o.val.size()) != 1) throw ContractError("backward: output must be scalar");
    grad(out).at(0) = seed;
    for (int id = last(); id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.grad.size() == 0) continue;
      if (n.back) n.back(*this, n);
      if (n.sink) {
        Tensor<S>& pg = redirect_ ? *redirect_->at(n.sink) : n.sink->grad;
        for (std::int64_t i = 0; i < pg.size(); ++i) pg.data[i] += n.grad.data[i];
      }
    }
  }

  /// Redirect parameter gradient accumulation, e.g. into per-worker buffers.
  void set_grad_redirect(const std::unordered_map<Param<S>*, Tensor<S>*>* redirect) {
    redirect_ = redirect;
  }

  bool wants(Id id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  Tensor<S>& grad(Id id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Tensor<S>(n.ext ? n.ext->shape : n.val.shape);
    return n.grad;
  }

 private:
  struct Node {
    Tensor<S> val;
    const Tensor<S>* ext = nullptr;
    Tensor<S> grad;
    bool needs_grad = false;
    Param<S>* sink = nullptr;
    std::function<void(Tape&, Node&)> back;
  };

  Id last() const { return static_cast<Id>(nodes_.size()) - 1; }

  Id make(Tensor<S> v, std::initializer_list<Id> parents, std::function<void(Tape&, Node&)> back) {
    Node n;
    n.val = std::move(v);
    for (Id p : parents)
      if (p >= 0 && nodes_[static_cast<std::size_t>(p)].needs_grad) n.needs_grad = true;
    if (n.needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return last();
  }

  void axpy(Id id, S c, const Tensor<S>& g) {
    if (!wants(id)) return;
    Tensor<S>& dst = grad(id);
    for (std::int64_t i = 0; i < dst.size(); ++i) dst.data[i] += c * g.data[i];
  }

  std::vector<Node> nodes_;
  const std::unordered_map<Param<S>*, Tensor<S>*>* redirect_ = nullptr;
};

}  // namespace skelfuse
