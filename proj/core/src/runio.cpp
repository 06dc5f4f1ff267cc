#include "sdd/runio.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdd/error.hpp"

namespace sdd {

const char kRoundsCsvHeader[] =
    "round,sparsity,train_acc,val_acc,test_acc,test_loss,epochs,flops,"
    "checkpoint_path";

namespace {

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void check_csv_safe(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos)
    throw InputError("checkpoint path not CSV-safe: '" + s + "'");
}

}  // namespace

std::string round_checkpoint_name(int round) {
  return "round-" + std::to_string(round) + ".ckpt";
}

void write_rounds_csv(const std::string& path,
                      const std::vector<RoundRecord>& records) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp);
    f << kRoundsCsvHeader << '\n';
    for (const auto& r : records) {
      check_csv_safe(r.checkpoint_path);
      f << r.round << ',' << fmt12(r.sparsity) << ',' << fmt12(r.train_acc)
        << ',' << fmt12(r.val_acc) << ',' << fmt12(r.test_acc) << ','
        << fmt12(r.test_loss) << ',' << r.epochs << ',' << r.flops << ','
        << r.checkpoint_path << '\n';
    }
    if (!f) throw IoError("short write on " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

std::vector<RoundRecord> read_rounds_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw TruncatedError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRoundsCsvHeader)
    throw MagicError(path + ": unexpected CSV header '" + line + "'");

  std::vector<RoundRecord> out;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 9)
      throw IoError(path + " line " + std::to_string(lineno) + ": expected 9 columns, got " +
                    std::to_string(cols.size()));
    RoundRecord r;
    try {
      r.round = std::stoi(cols[0]);
      r.sparsity = std::stod(cols[1]);
      r.train_acc = std::stod(cols[2]);
      r.val_acc = std::stod(cols[3]);
      r.test_acc = std::stod(cols[4]);
      r.test_loss = std::stod(cols[5]);
      r.epochs = std::stoi(cols[6]);
      r.flops = std::stoll(cols[7]);
    } catch (const std::exception&) {
      throw IoError(path + " line " + std::to_string(lineno) +
                    ": malformed numeric field");
    }
    r.checkpoint_path = cols[8];
    out.push_back(std::move(r));
  }
  return out;
}

void write_resolved_config(const RunConfig& cfg, const std::string& dir) {
  std::string path = dir + "/config.resolved.cfg";
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  char head[64];
  std::snprintf(head, sizeof head, "# config-hash = 0x%016" PRIx64 "\n",
                config_hash(cfg));
  f << head << canonical_config(cfg);
  if (!f) throw IoError("short write on " + path);
}

ResolvedConfig read_resolved_config(const std::string& dir) {
  std::string path = dir + "/config.resolved.cfg";
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string first;
  if (!std::getline(f, first))
    throw TruncatedError(path + ": empty file");
  uint64_t hash = 0;
  if (std::sscanf(first.c_str(), "# config-hash = 0x%" SCNx64, &hash) != 1)
    throw MagicError(path + ": missing config-hash line");
  std::stringstream rest;
  rest << f.rdbuf();
  ResolvedConfig rc;
  rc.config = parse_config_text(rest.str());
  rc.hash = hash;
  if (config_hash(rc.config) != hash)
    throw NumericError(path + ": config does not match its recorded hash");
  return rc;
}

}  // namespace sdd
