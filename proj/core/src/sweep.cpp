#include "sdd/sweep.hpp"

#include <array>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "sdd/analyze.hpp"
#include "sdd/error.hpp"
#include "sdd/rng.hpp"
#include "sdd/stats.hpp"

namespace sdd {
namespace {

namespace fs = std::filesystem;

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string sanitize_for_path(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '/' || c == ',' || c == ' ') c = '_';
  return out;
}

struct GroupAccum {
  RunConfig config;           // representative (first seen)
  std::vector<double> final_acc, stop_acc;
  std::vector<double> final_flops, stop_flops;
  std::vector<double> final_sparsity, stop_sparsity;
};

SummaryRow make_row(const std::string& label, uint64_t hash,
                    const RunConfig& cfg, bool early_stop,
                    const std::vector<double>& acc,
                    const std::vector<double>& flops,
                    const std::vector<double>& sparsity,
                    const SummaryOptions& opts) {
  SummaryRow row;
  row.group_label = label;
  row.group_hash = hash;
  row.early_stop = early_stop;
  row.distilled = cfg.kd.alpha > 0.0;
  row.pruned_teacher =
      row.distilled && cfg.kd.teacher_kind == TeacherKind::kBestFitPruned;
  row.seeds = static_cast<int>(acc.size());
  MeanStd f = mean_std(flops);
  MeanStd a = mean_std(acc);
  MeanStd s = mean_std(sparsity);
  row.flops_mean = f.mean;
  row.test_acc_mean = a.mean;
  row.test_acc_std = a.std;
  row.sparsity_mean = s.mean;
  if (opts.flops_per_joule > 0.0)
    row.co2_mean_g =
        co2_grams(f.mean, opts.flops_per_joule, opts.grams_co2_per_kwh);
  return row;
}

std::string group_label(const RunConfig& cfg) {
  std::ostringstream os;
  os << (cfg.dataset == DatasetKind::kIdx ? "idx" : "blobs");
  os << " eps=" << fmt12(cfg.noise_epsilon);
  os << " wd=" << fmt12(cfg.opt.lambda_l2);
  if (cfg.kd.alpha > 0.0) {
    os << " kd=" << fmt12(cfg.kd.alpha);
    if (cfg.kd.teacher_kind == TeacherKind::kBestFitPruned)
      os << "(pruned)";
    else if (cfg.kd.teacher_kind == TeacherKind::kDense)
      os << "(dense)";
  }
  return os.str();
}

void check_csv_safe(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos)
    throw IoError("summary label not CSV-safe: " + s);
}

}  // namespace

std::vector<RunOutcome> run_sweep(const std::vector<RunConfig>& configs,
                                  int parallelism) {
  if (parallelism < 1) throw InputError("sweep parallelism must be >= 1");
  std::map<std::string, size_t> seen;
  for (size_t i = 0; i < configs.size(); ++i) {
    configs[i].validate_for_run();
    std::string key =
        fs::absolute(fs::path(configs[i].out_dir)).lexically_normal().string();
    auto [it, fresh] = seen.emplace(key, i);
    if (!fresh)
      throw InputError("sweep configs " + std::to_string(it->second) +
                       " and " + std::to_string(i) +
                       " share the output directory " + key);
  }

  std::vector<RunOutcome> out(configs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      RunOutcome& o = out[i];
      o.config = configs[i];
      o.config_hash = config_hash(configs[i]);
      o.dir = configs[i].out_dir;
      try {
        PruneRun run = imp_run(configs[i]);
        o.rounds = std::move(run.rounds);
        o.ok = true;
      } catch (const std::exception& e) {
        o.ok = false;
        o.error = e.what();
      }
    }
  };
  size_t n_threads =
      std::min(static_cast<size_t>(parallelism), configs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

std::vector<RunConfig> expand_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep file: " + path);
  std::string base_text;
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("sweep file line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.rfind("sweep.", 0) == 0) {
      std::string axis = key.substr(6);
      if (axis.empty())
        throw ConfigError("sweep file line " + std::to_string(line_no) +
                          ": empty sweep key");
      for (const auto& a : axes)
        if (a.first == axis)
          throw ConfigError("duplicate sweep axis: " + axis);
      std::vector<std::string> values = split_list(value);
      for (const std::string& v : values)
        if (v.empty())
          throw ConfigError("sweep axis " + axis + " has an empty value");
      axes.emplace_back(axis, std::move(values));
    } else {
      base_text += t;
      base_text += '\n';
    }
  }
  RunConfig base = parse_config_text(base_text);
  if (axes.empty()) return {base};
  if (base.out_dir.empty())
    throw ConfigError("a sweep with axes requires a base out directory");

  // Type-check every axis value against a scratch config up front so a
  // bad entry fails before any run starts.
  for (const auto& [axis, values] : axes) {
    RunConfig scratch = base;
    for (const std::string& v : values) config_set(scratch, axis, v);
  }

  std::vector<RunConfig> expanded;
  std::vector<size_t> idx(axes.size(), 0);
  for (;;) {
    RunConfig cfg = base;
    std::string suffix;
    for (size_t a = 0; a < axes.size(); ++a) {
      const std::string& value = axes[a].second[idx[a]];
      config_set(cfg, axes[a].first, value);
      if (!suffix.empty()) suffix += '_';
      suffix += axes[a].first + "-" + sanitize_for_path(value);
    }
    cfg.out_dir = (fs::path(base.out_dir) / suffix).string();
    expanded.push_back(std::move(cfg));
    size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
      if (a == 0) return expanded;
    }
  }
}

std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& outcomes,
                                  const SummaryOptions& opts) {
  if (opts.apply_early_stop) {
    if (opts.patience < 1)
      throw InputError("early-stop patience must be >= 1");
    if (opts.tol < 0.0) throw InputError("early-stop tol must be >= 0");
  }
  if ((opts.flops_per_joule > 0.0) != (opts.grams_co2_per_kwh > 0.0))
    throw InputError(
        "co2 accounting requires both flops_per_joule and "
        "grams_co2_per_kwh");

  std::vector<std::string> order;
  std::map<std::string, GroupAccum> groups;
  for (const RunOutcome& o : outcomes) {
    if (!o.ok || o.rounds.empty()) continue;
    std::string key = config_group_key(o.config);
    auto it = groups.find(key);
    if (it == groups.end()) {
      order.push_back(key);
      it = groups.emplace(key, GroupAccum{}).first;
      it->second.config = o.config;
    }
    GroupAccum& g = it->second;

    std::vector<double> acc;
    acc.reserve(o.rounds.size());
    double cum = 0.0;
    std::vector<double> cum_flops;
    for (const RoundRecord& r : o.rounds) {
      acc.push_back(r.test_acc);
      cum += static_cast<double>(r.flops);
      cum_flops.push_back(cum);
    }
    size_t last = o.rounds.size() - 1;
    g.final_acc.push_back(acc[last]);
    g.final_flops.push_back(cum_flops[last]);
    g.final_sparsity.push_back(o.rounds[last].sparsity);
    if (opts.apply_early_stop) {
      int stop = early_stop_index(acc, opts.patience, opts.tol);
      size_t sel = stop < 0 ? last : static_cast<size_t>(stop);
      g.stop_acc.push_back(acc[sel]);
      g.stop_flops.push_back(cum_flops[sel]);
      g.stop_sparsity.push_back(o.rounds[sel].sparsity);
    }
  }

  std::vector<SummaryRow> rows;
  for (const std::string& key : order) {
    const GroupAccum& g = groups.at(key);
    std::string label = group_label(g.config);
    uint64_t hash = fnv1a64(key);
    rows.push_back(make_row(label, hash, g.config, false, g.final_acc,
                            g.final_flops, g.final_sparsity, opts));
    if (opts.apply_early_stop)
      rows.push_back(make_row(label, hash, g.config, true, g.stop_acc,
                              g.stop_flops, g.stop_sparsity, opts));
  }
  return rows;
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows) {
  std::string body =
      "group,early_stop,distilled,pruned_teacher,seeds,flops,co2_g,"
      "test_acc_mean,test_acc_std,sparsity\n";
  for (const SummaryRow& r : rows) {
    check_csv_safe(r.group_label);
    body += r.group_label;
    body += r.early_stop ? ",1" : ",0";
    body += r.distilled ? ",1" : ",0";
    body += r.pruned_teacher ? ",1" : ",0";
    body += "," + std::to_string(r.seeds);
    body += "," + fmt12(r.flops_mean);
    body += ",";
    if (r.co2_mean_g >= 0.0) body += fmt12(r.co2_mean_g);
    body += "," + fmt12(r.test_acc_mean);
    body += "," + fmt12(r.test_acc_std);
    body += "," + fmt12(r.sparsity_mean);
    body += "\n";
  }
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << body;
    if (!out.flush()) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::vector<std::array<std::string, 7>> cells;
  cells.push_back({"group", "stop", "seeds", "test_acc", "sparsity",
                   "flops", "co2_g"});
  for (const SummaryRow& r : rows) {
    std::string label = r.group_label;
    if (r.distilled) label += r.pruned_teacher ? " [kd:pruned]" : " [kd]";
    char acc[64];
    std::snprintf(acc, sizeof acc, "%.4f +/- %.4f", r.test_acc_mean,
                  r.test_acc_std);
    cells.push_back({label, r.early_stop ? "early" : "final",
                     std::to_string(r.seeds), acc, fmt12(r.sparsity_mean),
                     fmt12(r.flops_mean),
                     r.co2_mean_g >= 0.0 ? fmt12(r.co2_mean_g) : "-"});
  }
  std::array<size_t, 7> width{};
  for (const auto& row : cells)
    for (size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      if (c + 1 < row.size())
        out += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace sdd
