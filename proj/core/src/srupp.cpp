// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/srupp.hpp"

#include <cmath>
#include <string>

#include "srupp/flops.hpp"

namespace srupp {

namespace {

constexpr double kNormEps = 1e-5;

template <typename T>
struct tag {
  using type = T;
};

template <typename F>
decltype(auto) dispatch(Dtype dt, F&& f) {
  if (dt == Dtype::F32) return f(tag<float>{});
  return f(tag<double>{});
}

Tensor init_matrix(std::int64_t rows, std::int64_t cols, SeededRng& rng,
                   Dtype dt) {
  const double bound = std::sqrt(3.0 / static_cast<double>(cols));
  return Tensor::uniform({rows, cols}, rng, -bound, bound, dt);
}

struct NormResult {
  Tensor y;           // L x d
  Tensor mean, rstd;  // L
};

NormResult layer_norm_rows(const Tensor& x, const Tensor& gain,
                           const Tensor& bias) {
  const std::int64_t m = x.dim(0), n = x.dim(1);
  NormResult res;
  res.y = Tensor::zeros({m, n}, x.dtype());
  res.mean = Tensor::zeros({m}, x.dtype());
  res.rstd = Tensor::zeros({m}, x.dtype());
  dispatch(x.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto px = x.data<T>();
    auto pg = gain.data<T>();
    auto pb = bias.data<T>();
    auto py = res.y.data<T>();
    auto pm = res.mean.data<T>();
    auto ps = res.rstd.data<T>();
    for (std::int64_t i = 0; i < m; ++i) {
      const T* row = px.data() + i * n;
      T total = T(0);
      for (std::int64_t j = 0; j < n; ++j) total += row[j];
      const T mean = total / static_cast<T>(n);
      T var = T(0);
      for (std::int64_t j = 0; j < n; ++j) {
        const T d = row[j] - mean;
        var += d * d;
      }
      var /= static_cast<T>(n);
      const T rstd = T(1) / std::sqrt(var + static_cast<T>(kNormEps));
      pm[i] = mean;
      ps[i] = rstd;
      for (std::int64_t j = 0; j < n; ++j) {
        py[i * n + j] = (row[j] - mean) * rstd * pg[j] + pb[j];
      }
    }
  });
  flops::add(flops::layer_norm_rows(m, n));
  check_finite(res.y, "layer_norm_rows");
  return res;
}

struct NormGrads {
  Tensor x, gain, bias;
};

NormGrads layer_norm_backward(const Tensor& x, const Tensor& mean,
                              const Tensor& rstd, const Tensor& gain,
                              const Tensor& gy) {
  const std::int64_t m = x.dim(0), n = x.dim(1);
  NormGrads res;
  res.x = Tensor::zeros({m, n}, x.dtype());
  res.gain = Tensor::zeros({n}, x.dtype());
  res.bias = Tensor::zeros({n}, x.dtype());
  dispatch(x.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto px = x.data<T>();
    auto pm = mean.data<T>();
    auto ps = rstd.data<T>();
    auto pg = gain.data<T>();
    auto pgy = gy.data<T>();
    auto pgx = res.x.data<T>();
    auto pgg = res.gain.data<T>();
    auto pgb = res.bias.data<T>();
    for (std::int64_t i = 0; i < m; ++i) {
      const T* row = px.data() + i * n;
      const T* gyr = pgy.data() + i * n;
      const T rs = ps[i];
      // ghat = gy * gain; accumulate its mean and its correlation with xhat.
      T sum_ghat = T(0), sum_ghat_xhat = T(0);
      for (std::int64_t j = 0; j < n; ++j) {
        const T xhat = (row[j] - pm[i]) * rs;
        const T ghat = gyr[j] * pg[j];
        sum_ghat += ghat;
        sum_ghat_xhat += ghat * xhat;
        pgg[j] += gyr[j] * xhat;
        pgb[j] += gyr[j];
      }
      const T inv_n = T(1) / static_cast<T>(n);
      for (std::int64_t j = 0; j < n; ++j) {
        const T xhat = (row[j] - pm[i]) * rs;
        const T ghat = gyr[j] * pg[j];
        pgx[i * n + j] =
            rs * (ghat - inv_n * sum_ghat - xhat * inv_n * sum_ghat_xhat);
      }
    }
  });
  return res;
}

// Row-wise softmax Jacobian-vector product: given the stored weights S and
// upstream gS, returns gP with gP[i,:] = (gS[i,:] - <gS[i,:], S[i,:]>) . S[i,:].
Tensor softmax_backward_rows(const Tensor& weights, const Tensor& gw) {
  const std::int64_t m = weights.dim(0), n = weights.dim(1);
  Tensor out = Tensor::zeros({m, n}, weights.dtype());
  dispatch(weights.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto ps = weights.data<T>();
    auto pg = gw.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < m; ++i) {
      T dot = T(0);
      for (std::int64_t j = 0; j < n; ++j) dot += pg[i * n + j] * ps[i * n + j];
      for (std::int64_t j = 0; j < n; ++j) {
        po[i * n + j] = (pg[i * n + j] - dot) * ps[i * n + j];
      }
    }
  });
  return out;
}

// Direction split of U (L x 3 x H) into two L x 3 x H/2 halves: per gate
// slice, the forward direction takes dimensions [0, H/2), the backward
// direction [H/2, H).  Pure data movement.
std::pair<Tensor, Tensor> split_u_halves(const Tensor& u) {
  const std::int64_t steps = u.dim(0), total = u.dim(2), half = total / 2;
  Tensor uf = Tensor::zeros({steps, 3, half}, u.dtype());
  Tensor ub = Tensor::zeros({steps, 3, half}, u.dtype());
  for (std::int64_t t = 0; t < steps; ++t) {
    for (std::int64_t j = 0; j < 3; ++j) {
      for (std::int64_t i = 0; i < half; ++i) {
        uf.set((t * 3 + j) * half + i, u.get((t * 3 + j) * total + i));
        ub.set((t * 3 + j) * half + i, u.get((t * 3 + j) * total + half + i));
      }
    }
  }
  return {std::move(uf), std::move(ub)};
}

void merge_u_halves(const Tensor& guf, const Tensor& gub, Tensor* gu) {
  const std::int64_t steps = gu->dim(0), total = gu->dim(2), half = total / 2;
  for (std::int64_t t = 0; t < steps; ++t) {
    for (std::int64_t j = 0; j < 3; ++j) {
      for (std::int64_t i = 0; i < half; ++i) {
        gu->set((t * 3 + j) * total + i, guf.get((t * 3 + j) * half + i));
        gu->set((t * 3 + j) * total + half + i,
                gub.get((t * 3 + j) * half + i));
      }
    }
  }
}

Tensor reverse_time(const Tensor& u3) {
  const std::int64_t steps = u3.dim(0);
  Tensor flat = u3.reshaped({steps, u3.dim(1) * u3.dim(2)});
  return reverse_rows(flat).reshaped(u3.shape());
}

Tensor zeros_c0(std::int64_t hidden, Dtype dt) {
  return Tensor::zeros({hidden}, dt);
}

}  // namespace

SruppParams SruppParams::init(std::int64_t input, std::int64_t hidden_total,
                              std::int64_t attn_dim, RnnMode mode, bool norm,
                              SeededRng& rng, Dtype dt) {
  if (attn_dim < 1) throw ConfigError("attention dimension must be >= 1");
  if (mode == RnnMode::Bidirectional && hidden_total % 2 != 0) {
    throw ConfigError("bidirectional SRU++ needs an even hidden size, got " +
                      std::to_string(hidden_total));
  }
  SruppParams p;
  p.wq = init_matrix(attn_dim, input, rng, dt);
  p.wk = init_matrix(attn_dim, attn_dim, rng, dt);
  p.wv = init_matrix(attn_dim, attn_dim, rng, dt);
  p.wo = init_matrix(3 * hidden_total, attn_dim, rng, dt);
  p.alpha = Tensor::zeros({1}, dt);
  p.norm = norm;
  if (norm) {
    p.norm_gain = Tensor::full({input}, 1.0, dt);
    p.norm_bias = Tensor::zeros({input}, dt);
  }
  p.mode = mode;
  const std::int64_t half =
      mode == RnnMode::Bidirectional ? hidden_total / 2 : hidden_total;
  p.fwd = RecurrenceParams::init(input, half, rng, dt);
  if (mode == RnnMode::Bidirectional) {
    p.bwd = RecurrenceParams::init(input, half, rng, dt);
  }
  return p;
}

void SruppParams::named_tensors(
    const std::string& prefix,
    std::vector<std::pair<std::string, Tensor*>>& out) {
  out.emplace_back(prefix + ".wq", &wq);
  out.emplace_back(prefix + ".wk", &wk);
  out.emplace_back(prefix + ".wv", &wv);
  out.emplace_back(prefix + ".wo", &wo);
  out.emplace_back(prefix + ".alpha", &alpha);
  if (norm) {
    out.emplace_back(prefix + ".norm.gain", &norm_gain);
    out.emplace_back(prefix + ".norm.bias", &norm_bias);
  }
  auto dir = [&out](const std::string& base, RecurrenceParams& r) {
    out.emplace_back(base + ".v", &r.v);
    out.emplace_back(base + ".v_r", &r.v_r);
    out.emplace_back(base + ".b", &r.b);
    out.emplace_back(base + ".b_r", &r.b_r);
    if (r.w_high.has_value()) out.emplace_back(base + ".w_high", &*r.w_high);
  };
  dir(prefix + ".fwd", fwd);
  if (bwd.has_value()) dir(prefix + ".bwd", *bwd);
}

Qkv attention_qkv(const SruppParams& p, const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != p.input()) {
    throw ShapeError("attention_qkv: input " + x.shape_str() +
                     " does not match wq " + p.wq.shape_str());
  }
  Qkv out;
  out.q = matmul(p.wq, transpose(x));
  out.k = matmul(p.wk, out.q);
  out.v = matmul(p.wv, out.q);
  return out;
}

std::pair<Tensor, Tensor> attention_output(const Tensor& q, const Tensor& k,
                                           const Tensor& v) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.rank() != 2) {
    throw ShapeError("attention_output: Q " + q.shape_str() + ", K " +
                     k.shape_str() + ", V " + v.shape_str() +
                     " must be identical d' x L");
  }
  const std::int64_t attn_dim = q.dim(0);
  Tensor scores = matmul(transpose(q), k);  // L x L
  Tensor weights = softmax_rows(
      scale(scores, 1.0 / std::sqrt(static_cast<double>(attn_dim))));
  Tensor a = transpose(matmul(weights, transpose(v)));
  return {std::move(a), std::move(weights)};
}

namespace {

struct ProjectResult {
  Tensor u;
  AttentionRecord rec;
  Tensor xn;
  Tensor mean, rstd;
};

ProjectResult project_core(const SruppParams& p, const Tensor& x) {
  ProjectResult res;
  if (p.norm) {
    NormResult n = layer_norm_rows(x, p.norm_gain, p.norm_bias);
    res.xn = std::move(n.y);
    res.mean = std::move(n.mean);
    res.rstd = std::move(n.rstd);
  } else {
    res.xn = x;
  }
  Qkv qkv = attention_qkv(p, res.xn);
  auto [a, weights] = attention_output(qkv.q, qkv.k, qkv.v);
  const double alpha = p.alpha.get(0);
  // alpha == 0 contributes exactly nothing; skipping the axpy keeps the
  // output bit-identical to the attention-deleted projection.
  Tensor z = alpha == 0.0 ? qkv.q : axpy(alpha, a, qkv.q);
  const std::int64_t steps = x.dim(0);
  res.u = transpose(matmul(p.wo, z)).reshaped({steps, 3, p.hidden_total()});
  res.rec.q = std::move(qkv.q);
  res.rec.k = std::move(qkv.k);
  res.rec.v = std::move(qkv.v);
  res.rec.weights = std::move(weights);
  res.rec.a = std::move(a);
  return res;
}

struct RecurApplied {
  Tensor h;
  SruTape fwd;
  std::optional<SruTape> bwd;
};

RecurApplied apply_recurrence(const SruppParams& p, const Tensor& u,
                              const Tensor& x, const Tensor* c0_fwd,
                              const Tensor* c0_bwd) {
  const Dtype dt = x.dtype();
  RecurApplied res;
  if (p.mode == RnnMode::Unidirectional) {
    auto [h, tape] = sru_recurrence(
        p.fwd, u, x,
        c0_fwd != nullptr ? *c0_fwd : zeros_c0(p.fwd.hidden(), dt));
    res.h = std::move(h);
    res.fwd = std::move(tape);
    return res;
  }
  auto [uf, ub] = split_u_halves(u);
  auto [hf, tape_f] = sru_recurrence(
      p.fwd, uf, x, c0_fwd != nullptr ? *c0_fwd : zeros_c0(p.fwd.hidden(), dt));
  res.fwd = std::move(tape_f);
  Tensor x_rev = reverse_rows(x);
  auto [hb_rev, tape_b] = sru_recurrence(
      *p.bwd, reverse_time(ub), x_rev,
      c0_bwd != nullptr ? *c0_bwd : zeros_c0(p.bwd->hidden(), dt));
  res.bwd = std::move(tape_b);
  res.h = concat_cols(hf, reverse_rows(hb_rev));
  return res;
}

}  // namespace

std::pair<Tensor, AttentionRecord> srupp_project_u(const SruppParams& p,
                                                   const Tensor& x) {
  ProjectResult res = project_core(p, x);
  return {std::move(res.u), std::move(res.rec)};
}

Tensor srupp_recurrence_from_u(const SruppParams& p, const Tensor& u,
                               const Tensor& x) {
  return apply_recurrence(p, u, x, nullptr, nullptr).h;
}

std::pair<Tensor, SruppTape> srupp_forward(const SruppParams& p,
                                           const Tensor& x,
                                           const Tensor* c0_fwd,
                                           const Tensor* c0_bwd) {
  ProjectResult proj = project_core(p, x);
  SruppTape tape;
  tape.params = p;
  tape.x = x;
  tape.xn = std::move(proj.xn);
  tape.mean = std::move(proj.mean);
  tape.rstd = std::move(proj.rstd);
  tape.attn = std::move(proj.rec);
  tape.u = proj.u;
  RecurApplied rec = apply_recurrence(p, proj.u, x, c0_fwd, c0_bwd);
  tape.fwd = std::move(rec.fwd);
  tape.bwd = std::move(rec.bwd);
  return {std::move(rec.h), std::move(tape)};
}

SruppGrads srupp_backward(const SruppTape& tape, const Tensor& grad_h) {
  const SruppParams& p = tape.params;
  const std::int64_t steps = tape.x.dim(0);
  const std::int64_t total = p.hidden_total();
  SruppGrads g;

  // Recurrence stage.
  Tensor gu = Tensor::zeros({steps, 3, total}, grad_h.dtype());
  Tensor gx_rec;
  if (p.mode == RnnMode::Unidirectional) {
    RecurrenceGrads rec = sru_recurrence_backward(tape.fwd, grad_h);
    gu = std::move(rec.u);
    gx_rec = std::move(rec.x);
    g.fwd = {std::move(rec.v), std::move(rec.v_r), std::move(rec.b),
             std::move(rec.b_r), std::move(rec.w_high)};
  } else {
    const std::int64_t half = total / 2;
    RecurrenceGrads rec_f =
        sru_recurrence_backward(tape.fwd, slice_cols(grad_h, 0, half));
    RecurrenceGrads rec_b = sru_recurrence_backward(
        *tape.bwd, reverse_rows(slice_cols(grad_h, half, total)));
    merge_u_halves(rec_f.u, reverse_time(rec_b.u), &gu);
    gx_rec = add(rec_f.x, reverse_rows(rec_b.x));
    g.fwd = {std::move(rec_f.v), std::move(rec_f.v_r), std::move(rec_f.b),
             std::move(rec_f.b_r), std::move(rec_f.w_high)};
    g.bwd = RecurrenceParamGrads{std::move(rec_b.v), std::move(rec_b.v_r),
                                 std::move(rec_b.b), std::move(rec_b.b_r),
                                 std::move(rec_b.w_high)};
  }

  // Output projection U^T = Wo (Q + alpha A).
  const double alpha = p.alpha.get(0);
  const AttentionRecord& attn = tape.attn;
  Tensor gu_t = transpose(gu.reshaped({steps, 3 * total}));  // 3H x L
  Tensor z = alpha == 0.0 ? attn.q : axpy(alpha, attn.a, attn.q);
  g.wo = matmul(gu_t, transpose(z));
  Tensor gz = matmul(transpose(p.wo), gu_t);  // d' x L

  g.alpha = Tensor::from({1}, {sum(mul(gz, attn.a))}, grad_h.dtype());
  Tensor gq = gz;
  Tensor ga = scale(gz, alpha);

  // A^T = weights V^T.
  Tensor ga_t = transpose(ga);
  Tensor gweights = matmul(ga_t, attn.v);
  Tensor gv = transpose(matmul(transpose(attn.weights), ga_t));

  // weights = softmax_rows(Q^T K / sqrt(d')).
  Tensor gscaled = softmax_backward_rows(attn.weights, gweights);
  Tensor gscores =
      scale(gscaled, 1.0 / std::sqrt(static_cast<double>(p.attn_dim())));
  gq = add(gq, transpose(matmul(gscores, transpose(attn.k))));
  Tensor gk = matmul(attn.q, gscores);

  // K = Wk Q, V = Wv Q.
  g.wk = matmul(gk, transpose(attn.q));
  gq = add(gq, matmul(transpose(p.wk), gk));
  g.wv = matmul(gv, transpose(attn.q));
  gq = add(gq, matmul(transpose(p.wv), gv));

  // Q = Wq Xn^T.
  g.wq = matmul(gq, tape.xn);
  Tensor gxn = transpose(matmul(transpose(p.wq), gq));

  Tensor gx_attn;
  if (p.norm) {
    NormGrads ng =
        layer_norm_backward(tape.x, tape.mean, tape.rstd, p.norm_gain, gxn);
    gx_attn = std::move(ng.x);
    g.norm_gain = std::move(ng.gain);
    g.norm_bias = std::move(ng.bias);
  } else {
    gx_attn = std::move(gxn);
  }
  g.x = add(gx_rec, gx_attn);
  return g;
}

const Tensor& attention_weights(const SruppTape& tape) {
  return tape.attn.weights;
}

}  // namespace srupp
