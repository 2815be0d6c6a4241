// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/profile.hpp"

#include <cstdio>
#include <sstream>

#include "srupp/flops.hpp"

namespace srupp {

namespace {

using u64 = std::uint64_t;

const char* kConvention =
    "MAC = 2 FLOPs; exp/add/mul/div/sqrt/compare = 1 FLOP; "
    "data movement (transpose/reshape/slice/reverse/concat) = 0";

struct Dims {
  u64 c, d, dp, n, out;
  u64 f1, f2;
  bool bi, norm;
  u64 dirs() const { return bi ? 2 : 1; }
  u64 d_dir() const { return bi ? d / 2 : d; }
};

Dims dims_of(const EncoderConfig& cfg) {
  Dims m;
  m.c = static_cast<u64>(cfg.subsample_channels);
  m.d = static_cast<u64>(cfg.embed_dim);
  m.dp = static_cast<u64>(cfg.attn_dim);
  m.n = static_cast<u64>(cfg.num_layers);
  m.out = static_cast<u64>(cfg.output_dim);
  m.f1 = static_cast<u64>(EncoderConfig::subsampled_extent(cfg.feat_dim));
  m.f2 = static_cast<u64>(EncoderConfig::subsampled_extent(
      static_cast<std::int64_t>(m.f1)));
  m.bi = cfg.bidirectional;
  m.norm = cfg.normalization;
  return m;
}

void add_params(ProfileReport* rep, const Dims& m) {
  auto comp = [rep](const std::string& name, u64 params) {
    rep->components.push_back({name, params, 0});
  };
  comp("conv1", m.c * 9 + m.c);
  comp("conv2", m.c * m.c * 9 + m.c);
  comp("input_linear", m.d * (m.c * m.f2) + m.d);
  if (m.norm) comp("layers.norm", m.n * 2 * m.d);
  comp("layers.attn_qkv", m.n * (m.dp * m.d + 2 * m.dp * m.dp));
  comp("layers.attn_scores", 0);
  comp("layers.attn_softmax", 0);
  comp("layers.attn_context", 0);
  comp("layers.attn_residual", m.n * 1);
  comp("layers.attn_output", m.n * 3 * m.d * m.dp);
  // Highway projections exist only where the layer input width differs from
  // the per-direction width, i.e. in bidirectional stacks.
  if (m.bi) comp("layers.highway", m.n * m.dirs() * m.d_dir() * m.d);
  comp("layers.recurrence", m.n * m.dirs() * 4 * m.d_dir());
  if (m.out > 0) comp("output_linear", m.out * m.d + m.out);
}

ProfileComponent* find_mut(ProfileReport* rep, const std::string& name) {
  for (auto& c : rep->components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void add_flops(ProfileReport* rep, const Dims& m, u64 t1, u64 lp) {
  auto comp = [rep](const std::string& name, u64 flops) {
    if (ProfileComponent* c = find_mut(rep, name)) {
      c->flops += flops;
    } else {
      rep->components.push_back({name, 0, flops});
    }
  };
  // Convolution frontend: conv + channel bias + rectifier per stage.
  comp("conv1", flops::conv2d(m.c, 1, t1, m.f1) +
                    2 * flops::elementwise(m.c * t1 * m.f1));
  comp("conv2", flops::conv2d(m.c, m.c, lp, m.f2) +
                    2 * flops::elementwise(m.c * lp * m.f2));
  comp("input_linear",
       flops::matmul(lp, m.c * m.f2, m.d) + flops::elementwise(lp * m.d));
  if (m.norm) comp("layers.norm", m.n * flops::layer_norm_rows(lp, m.d));
  comp("layers.attn_qkv", m.n * (flops::matmul(m.dp, m.d, lp) +
                                 2 * flops::matmul(m.dp, m.dp, lp)));
  comp("layers.attn_scores", m.n * flops::matmul(lp, m.dp, lp));
  comp("layers.attn_softmax",
       m.n * (flops::elementwise(lp * lp) + flops::softmax_rows(lp, lp)));
  comp("layers.attn_context", m.n * flops::matmul(lp, lp, m.dp));
  comp("layers.attn_residual", m.n * flops::axpy(lp * m.dp));
  comp("layers.attn_output", m.n * flops::matmul(3 * m.d, m.dp, lp));
  if (m.bi) {
    comp("layers.highway",
         m.n * m.dirs() * flops::matmul(lp, m.d, m.d_dir()));
  }
  comp("layers.recurrence",
       m.n * m.dirs() * flops::sru_recurrence(lp, m.d_dir()));
  if (m.out > 0) {
    comp("output_linear",
         flops::matmul(lp, m.d, m.out) + flops::elementwise(lp * m.out));
  }
}

void add_assumptions(ProfileReport* rep, const EncoderConfig& cfg) {
  auto put = [rep](const std::string& k, const std::string& v) {
    rep->assumptions.emplace_back(k, v);
  };
  put("num_layers", std::to_string(cfg.num_layers));
  put("subsample_factor", "4 (two stride-2 3x3 stages)");
  put("subsample_channels", std::to_string(cfg.subsample_channels));
  put("mac_flops", "2");
  put("alpha_residual", "counted (nonzero residual scale)");
}

}  // namespace

std::uint64_t ProfileReport::total_params() const {
  u64 total = 0;
  for (const auto& c : components) total += c.params;
  return total;
}

std::uint64_t ProfileReport::total_flops() const {
  u64 total = 0;
  for (const auto& c : components) total += c.flops;
  return total;
}

const ProfileComponent* ProfileReport::find(const std::string& name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string ProfileReport::to_text() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %16s %20s\n", "component", "params",
                "flops");
  os << line;
  for (const auto& c : components) {
    std::snprintf(line, sizeof(line), "%-24s %16llu %20llu\n", c.name.c_str(),
                  static_cast<unsigned long long>(c.params),
                  static_cast<unsigned long long>(c.flops));
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-24s %16llu %20llu\n", "total",
                static_cast<unsigned long long>(total_params()),
                static_cast<unsigned long long>(total_flops()));
  os << line;
  if (input_len > 0) {
    os << "input_len: " << input_len << "\n";
    std::snprintf(line, sizeof(line), "total_gflops: %.3f\n",
                  static_cast<double>(total_flops()) * 1e-9);
    os << line;
  }
  os << "convention: " << convention << "\n";
  for (const auto& [k, v] : assumptions) {
    os << "assumption: " << k << " = " << v << "\n";
  }
  return os.str();
}

std::string ProfileReport::to_csv() const {
  std::ostringstream os;
  os << "component,params,flops\n";
  for (const auto& c : components) {
    os << c.name << ',' << c.params << ',' << c.flops << '\n';
  }
  os << "total," << total_params() << ',' << total_flops() << '\n';
  return os.str();
}

ProfileReport param_count(const EncoderConfig& cfg) {
  cfg.validate();
  ProfileReport rep;
  rep.convention = kConvention;
  add_params(&rep, dims_of(cfg));
  add_assumptions(&rep, cfg);
  return rep;
}

ProfileReport flops_estimate(const EncoderConfig& cfg, std::int64_t input_len) {
  cfg.validate();
  if (input_len < EncoderConfig::kMinInputLen) {
    throw ConfigError("flops_estimate: input length " +
                      std::to_string(input_len) + " below minimum " +
                      std::to_string(EncoderConfig::kMinInputLen));
  }
  Dims m = dims_of(cfg);
  if (m.f2 < 1) {
    throw ConfigError("flops_estimate: feat_dim " +
                      std::to_string(cfg.feat_dim) +
                      " too small for the convolution chain (need >= 7)");
  }
  ProfileReport rep;
  rep.convention = kConvention;
  rep.input_len = input_len;
  add_params(&rep, m);
  const u64 t1 = static_cast<u64>(EncoderConfig::subsampled_extent(input_len));
  const u64 lp = static_cast<u64>(EncoderConfig::output_len(input_len));
  add_flops(&rep, m, t1, lp);
  add_assumptions(&rep, cfg);
  return rep;
}

}  // namespace srupp
