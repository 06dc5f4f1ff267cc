#include "sdd/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sdd/error.hpp"
#include "sdd/rng.hpp"

namespace sdd {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

int64_t parse_int(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  return x;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_int(key, trim(item))));
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_int_list(const std::vector<int>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

const char* kKnownKeys[] = {
    "dataset",          "idx.train_images", "idx.train_labels",
    "idx.test_images",  "idx.test_labels",  "subset",
    "split.train_fraction", "blobs.classes", "blobs.per_class",
    "blobs.dim",        "blobs.spread",     "blobs.test_fraction",
    "noise.epsilon",    "model.hidden",     "opt.lr",
    "opt.momentum",     "opt.milestones",   "opt.decay",
    "opt.lambda",       "opt.epochs",       "opt.batch",
    "prune.zeta_iter",  "prune.zeta_end",   "prune.scope",
    "prune.max_rounds", "kd.alpha",         "kd.tau",
    "kd.teacher",       "kd.teacher_run",   "kd.teacher_kind",
    "seed",             "out"};

}  // namespace

void config_set(RunConfig& cfg, const std::string& key,
                const std::string& value) {
  if (key == "dataset") {
    if (value == "idx")
      cfg.dataset = DatasetKind::kIdx;
    else if (value == "blobs")
      cfg.dataset = DatasetKind::kBlobs;
    else
      throw ConfigError("dataset: expected idx or blobs, got '" + value + "'");
  } else if (key == "idx.train_images") {
    cfg.idx.train_images = value;
  } else if (key == "idx.train_labels") {
    cfg.idx.train_labels = value;
  } else if (key == "idx.test_images") {
    cfg.idx.test_images = value;
  } else if (key == "idx.test_labels") {
    cfg.idx.test_labels = value;
  } else if (key == "subset") {
    cfg.subset = parse_int(key, value);
  } else if (key == "split.train_fraction") {
    cfg.train_fraction = parse_double(key, value);
  } else if (key == "blobs.classes") {
    cfg.blobs.classes = static_cast<int>(parse_int(key, value));
  } else if (key == "blobs.per_class") {
    cfg.blobs.per_class = static_cast<int>(parse_int(key, value));
  } else if (key == "blobs.dim") {
    cfg.blobs.dim = static_cast<int>(parse_int(key, value));
  } else if (key == "blobs.spread") {
    cfg.blobs.spread = parse_double(key, value);
  } else if (key == "blobs.test_fraction") {
    cfg.blobs.test_fraction = parse_double(key, value);
  } else if (key == "noise.epsilon") {
    cfg.noise_epsilon = parse_double(key, value);
  } else if (key == "model.hidden") {
    cfg.hidden = parse_int_list(key, value);
  } else if (key == "opt.lr") {
    cfg.opt.base_lr = parse_double(key, value);
  } else if (key == "opt.momentum") {
    cfg.opt.momentum = parse_double(key, value);
  } else if (key == "opt.milestones") {
    cfg.opt.milestones = parse_int_list(key, value);
  } else if (key == "opt.decay") {
    cfg.opt.decay_factor = parse_double(key, value);
  } else if (key == "opt.lambda") {
    cfg.opt.lambda_l2 = parse_double(key, value);
  } else if (key == "opt.epochs") {
    cfg.opt.epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "opt.batch") {
    cfg.opt.batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "prune.zeta_iter") {
    cfg.schedule.zeta_iter = parse_double(key, value);
  } else if (key == "prune.zeta_end") {
    cfg.schedule.zeta_end = parse_double(key, value);
  } else if (key == "prune.scope") {
    if (value == "global")
      cfg.prune_scope = PruneScope::kGlobal;
    else if (value == "per_layer")
      cfg.prune_scope = PruneScope::kPerLayer;
    else
      throw ConfigError("prune.scope: expected global or per_layer, got '" +
                        value + "'");
  } else if (key == "prune.max_rounds") {
    cfg.max_rounds = static_cast<int>(parse_int(key, value));
  } else if (key == "kd.alpha") {
    cfg.kd.alpha = parse_double(key, value);
  } else if (key == "kd.tau") {
    cfg.kd.tau = parse_double(key, value);
  } else if (key == "kd.teacher") {
    cfg.kd.teacher_checkpoint = value;
  } else if (key == "kd.teacher_run") {
    cfg.kd_teacher_run = value;
  } else if (key == "kd.teacher_kind") {
    if (value == "none")
      cfg.kd.teacher_kind = TeacherKind::kNone;
    else if (value == "dense")
      cfg.kd.teacher_kind = TeacherKind::kDense;
    else if (value == "best_fit_pruned")
      cfg.kd.teacher_kind = TeacherKind::kBestFitPruned;
    else
      throw ConfigError(
          "kd.teacher_kind: expected none, dense or best_fit_pruned, got '" +
          value + "'");
  } else if (key == "seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else {
    std::string known;
    for (const char* k : kKnownKeys) {
      if (!known.empty()) known += ", ";
      known += k;
    }
    throw ConfigError("unknown config key '" + key + "' (known keys: " + known +
                      ")");
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    config_set(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

void RunConfig::validate() const {
  opt.validate();
  schedule.validate();
  if (subset < 0)
    throw ConfigError("subset must be >= 0, got " + std::to_string(subset));
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("split.train_fraction must be in (0,1), got " +
                      std::to_string(train_fraction));
  if (noise_epsilon < 0.0 || noise_epsilon > 1.0)
    throw ConfigError("noise.epsilon must be in [0,1], got " +
                      std::to_string(noise_epsilon));
  for (int h : hidden)
    if (h <= 0) throw ConfigError("model.hidden dims must be positive");
  if (max_rounds < 0)
    throw ConfigError("prune.max_rounds must be >= 0, got " +
                      std::to_string(max_rounds));
  if (kd.alpha < 0.0 || kd.alpha > 1.0)
    throw ConfigError("kd.alpha must be in [0,1], got " +
                      std::to_string(kd.alpha));
  if (!(kd.tau > 0.0))
    throw ConfigError("kd.tau must be > 0, got " + std::to_string(kd.tau));
  if (dataset == DatasetKind::kBlobs) {
    if (blobs.classes <= 1 || blobs.per_class <= 0 || blobs.dim <= 0)
      throw ConfigError("blobs.classes/per_class/dim must be positive");
    if (blobs.spread < 0.0)
      throw ConfigError("blobs.spread must be >= 0");
    if (!(blobs.test_fraction > 0.0 && blobs.test_fraction < 1.0))
      throw ConfigError("blobs.test_fraction must be in (0,1)");
  }
}

void RunConfig::validate_for_run() const {
  validate();
  if (out_dir.empty()) throw ConfigError("out: output directory is required");
  if (opt.epochs < 1)
    throw ConfigError("opt.epochs must be >= 1 for a pruning run");
  if (dataset == DatasetKind::kIdx &&
      (idx.train_images.empty() || idx.train_labels.empty() ||
       idx.test_images.empty() || idx.test_labels.empty()))
    throw ConfigError("dataset = idx requires all four idx.* paths");
  if (kd.alpha > 0.0 && kd.teacher_checkpoint.empty() && kd_teacher_run.empty())
    throw ConfigError(
        "kd.alpha > 0 requires kd.teacher or kd.teacher_run to resolve a "
        "teacher");
  if (!kd_teacher_run.empty() && kd.teacher_kind == TeacherKind::kNone)
    throw ConfigError("kd.teacher_run requires kd.teacher_kind");
}

namespace {

void emit(std::string& out, const char* key, const std::string& v) {
  out += key;
  out += " = ";
  out += v;
  out += '\n';
}

std::string canonical_body(const RunConfig& c, bool neutral) {
  std::string o;
  emit(o, "dataset", c.dataset == DatasetKind::kIdx ? "idx" : "blobs");
  emit(o, "idx.train_images", c.idx.train_images);
  emit(o, "idx.train_labels", c.idx.train_labels);
  emit(o, "idx.test_images", c.idx.test_images);
  emit(o, "idx.test_labels", c.idx.test_labels);
  emit(o, "subset", std::to_string(c.subset));
  emit(o, "split.train_fraction", fmt_double(c.train_fraction));
  emit(o, "blobs.classes", std::to_string(c.blobs.classes));
  emit(o, "blobs.per_class", std::to_string(c.blobs.per_class));
  emit(o, "blobs.dim", std::to_string(c.blobs.dim));
  emit(o, "blobs.spread", fmt_double(c.blobs.spread));
  emit(o, "blobs.test_fraction", fmt_double(c.blobs.test_fraction));
  emit(o, "noise.epsilon", fmt_double(c.noise_epsilon));
  emit(o, "model.hidden", fmt_int_list(c.hidden));
  emit(o, "opt.lr", fmt_double(c.opt.base_lr));
  emit(o, "opt.momentum", fmt_double(c.opt.momentum));
  emit(o, "opt.milestones", fmt_int_list(c.opt.milestones));
  emit(o, "opt.decay", fmt_double(c.opt.decay_factor));
  emit(o, "opt.lambda", fmt_double(c.opt.lambda_l2));
  emit(o, "opt.epochs", std::to_string(c.opt.epochs));
  emit(o, "opt.batch", std::to_string(c.opt.batch_size));
  emit(o, "prune.zeta_iter", fmt_double(c.schedule.zeta_iter));
  emit(o, "prune.zeta_end", fmt_double(c.schedule.zeta_end));
  emit(o, "prune.scope",
       c.prune_scope == PruneScope::kGlobal ? "global" : "per_layer");
  emit(o, "prune.max_rounds", std::to_string(c.max_rounds));
  emit(o, "kd.alpha", fmt_double(c.kd.alpha));
  emit(o, "kd.tau", fmt_double(c.kd.tau));
  emit(o, "kd.teacher", c.kd.teacher_checkpoint);
  emit(o, "kd.teacher_run", c.kd_teacher_run);
  emit(o, "kd.teacher_kind",
       c.kd.teacher_kind == TeacherKind::kNone
           ? "none"
           : (c.kd.teacher_kind == TeacherKind::kDense ? "dense"
                                                       : "best_fit_pruned"));
  emit(o, "seed", neutral ? "0" : std::to_string(c.seed));
  emit(o, "out", neutral ? "" : c.out_dir);
  return o;
}

}  // namespace

std::string canonical_config(const RunConfig& cfg) {
  return canonical_body(cfg, false);
}

uint64_t config_hash(const RunConfig& cfg) {
  std::string s = canonical_config(cfg);
  return fnv1a64(s.data(), s.size());
}

std::string config_group_key(const RunConfig& cfg) {
  return canonical_body(cfg, true);
}

}  // namespace sdd
