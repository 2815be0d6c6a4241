// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace srupp {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long out = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" +
                      v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || v.find('-') != std::string::npos) {
    throw ConfigError("config: key '" + key +
                      "' expects an unsigned integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v +
                      "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config: key '" + key + "' expects true or false, got '" +
                    v + "'");
}

Dtype parse_dtype(const std::string& key, const std::string& v) {
  if (v == "f32") return Dtype::F32;
  if (v == "f64") return Dtype::F64;
  throw ConfigError("config: key '" + key + "' expects f32 or f64, got '" + v +
                    "'");
}

TaskKind parse_task(const std::string& key, const std::string& v) {
  if (v == "copy") return TaskKind::Copy;
  if (v == "delayed-echo") return TaskKind::DelayedEcho;
  throw ConfigError("config: key '" + key +
                    "' expects copy or delayed-echo, got '" + v + "'");
}

const char* task_name(TaskKind k) {
  return k == TaskKind::Copy ? "copy" : "delayed-echo";
}

}  // namespace

void TaskSpec::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (train_len < 1) throw ConfigError("train_len must be >= 1");
  if (eval_len < train_len) throw ConfigError("eval_len must be >= train_len");
  if (samples < 1) throw ConfigError("samples must be >= 1");
}

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (lr < 0) throw ConfigError("lr must be >= 0");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (eps <= 0) throw ConfigError("adam_eps must be > 0");
  if (clip_norm <= 0) throw ConfigError("clip_norm must be > 0");
}

void RunConfig::validate() const {
  encoder.validate();
  task.validate();
  train.validate();
  // The file format carries a single dtype key.
  if (encoder.dtype != train.dtype) {
    throw ConfigError("encoder and training dtype must agree");
  }
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " has an empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError("config: duplicate key '" + key + "'");
    }
  }

  std::set<std::string> seen;
  auto take = [&](const char* key) -> const std::string* {
    seen.insert(key);
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto geti = [&](const char* key, std::int64_t* dst) {
    if (const std::string* v = take(key)) *dst = parse_int(key, *v);
  };
  auto getu = [&](const char* key, std::uint64_t* dst) {
    if (const std::string* v = take(key)) *dst = parse_u64(key, *v);
  };
  auto getd = [&](const char* key, double* dst) {
    if (const std::string* v = take(key)) *dst = parse_double(key, *v);
  };
  auto getb = [&](const char* key, bool* dst) {
    if (const std::string* v = take(key)) *dst = parse_bool(key, *v);
  };

  geti("feat_dim", &cfg.encoder.feat_dim);
  geti("embed_dim", &cfg.encoder.embed_dim);
  geti("attn_dim", &cfg.encoder.attn_dim);
  geti("num_layers", &cfg.encoder.num_layers);
  geti("output_dim", &cfg.encoder.output_dim);
  getb("bidirectional", &cfg.encoder.bidirectional);
  geti("subsample_channels", &cfg.encoder.subsample_channels);
  getb("normalization", &cfg.encoder.normalization);
  if (const std::string* v = take("dtype")) {
    cfg.encoder.dtype = parse_dtype("dtype", *v);
    cfg.train.dtype = cfg.encoder.dtype;
  }

  if (const std::string* v = take("task")) {
    cfg.task.kind = parse_task("task", *v);
  }
  geti("vocab_size", &cfg.task.vocab_size);
  geti("train_len", &cfg.task.train_len);
  geti("eval_len", &cfg.task.eval_len);
  geti("samples", &cfg.task.samples);
  getu("task_seed", &cfg.task.seed);

  geti("steps", &cfg.train.steps);
  geti("batch_size", &cfg.train.batch_size);
  getd("lr", &cfg.train.lr);
  getd("adam_beta1", &cfg.train.beta1);
  getd("adam_beta2", &cfg.train.beta2);
  getd("adam_eps", &cfg.train.eps);
  getd("clip_norm", &cfg.train.clip_norm);
  getu("seed", &cfg.train.seed);

  for (const auto& [key, value] : kv) {
    if (!seen.contains(key)) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (in " + path + ")");
  }
}

std::string RunConfig::render() const {
  std::ostringstream os;
  os << "# encoder\n";
  os << "feat_dim = " << encoder.feat_dim << "\n";
  os << "embed_dim = " << encoder.embed_dim << "\n";
  os << "attn_dim = " << encoder.attn_dim << "\n";
  os << "num_layers = " << encoder.num_layers << "\n";
  os << "output_dim = " << encoder.output_dim << "\n";
  os << "bidirectional = " << (encoder.bidirectional ? "true" : "false")
     << "\n";
  os << "subsample_channels = " << encoder.subsample_channels << "\n";
  os << "normalization = " << (encoder.normalization ? "true" : "false")
     << "\n";
  os << "dtype = " << dtype_name(encoder.dtype) << "\n";
  os << "\n# task\n";
  os << "task = " << task_name(task.kind) << "\n";
  os << "vocab_size = " << task.vocab_size << "\n";
  os << "train_len = " << task.train_len << "\n";
  os << "eval_len = " << task.eval_len << "\n";
  os << "samples = " << task.samples << "\n";
  os << "task_seed = " << task.seed << "\n";
  os << "\n# training\n";
  os << "steps = " << train.steps << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  os << "lr = " << fmt_double(train.lr) << "\n";
  os << "adam_beta1 = " << fmt_double(train.beta1) << "\n";
  os << "adam_beta2 = " << fmt_double(train.beta2) << "\n";
  os << "adam_eps = " << fmt_double(train.eps) << "\n";
  os << "clip_norm = " << fmt_double(train.clip_norm) << "\n";
  os << "seed = " << train.seed << "\n";
  return os.str();
}

}  // namespace srupp
