#include "palmkit/harness/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "palmkit/errors.hpp"

namespace palmkit {

namespace {

constexpr char kRawHeader[] = "epoch,objective,grad_sq_norm,wall_seconds,seed,status";
constexpr char kAggHeader[] = "epoch,mean_obj,std_obj,mean_grad_sq,mean_wall";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("csv: cannot open '" + tmp + "'");
    f << content;
    if (!f) throw Error("csv: write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("csv: cannot rename '" + tmp + "' to '" + path + "'");
}

}  // namespace

void write_raw_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ostringstream out;
  out << kRawHeader << "\n";
  for (const TraceRow& r : rows)
    out << r.epoch << ',' << fmt(r.objective) << ',' << fmt(r.grad_sq_norm)
        << ',' << fmt(r.wall_seconds) << ',' << r.seed << ',' << r.status
        << "\n";
  write_atomic(path, out.str());
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << kAggHeader << "\n";
  for (const AggregateRow& r : rows)
    out << r.epoch << ',' << fmt(r.mean_obj) << ',' << fmt(r.std_obj) << ','
        << fmt(r.mean_grad_sq) << ',' << fmt(r.mean_wall) << "\n";
  write_atomic(path, out.str());
}

std::vector<AggregateRow> aggregate_traces(
    const std::vector<std::vector<TraceRow>>& per_seed) {
  if (per_seed.empty()) throw ConfigError("aggregate: no traces given");
  std::size_t max_len = 0;
  for (const auto& t : per_seed) max_len = std::max(max_len, t.size());

  std::vector<AggregateRow> out;
  for (std::size_t e = 0; e < max_len; ++e) {
    double sum = 0.0, sum_g = 0.0, sum_w = 0.0;
    std::int64_t m = 0;
    int epoch = 0;
    for (const auto& t : per_seed) {
      if (e >= t.size()) continue;
      sum += t[e].objective;
      sum_g += t[e].grad_sq_norm;
      sum_w += t[e].wall_seconds;
      epoch = t[e].epoch;
      ++m;
    }
    AggregateRow row;
    row.epoch = epoch;
    row.mean_obj = sum / static_cast<double>(m);
    row.mean_grad_sq = sum_g / static_cast<double>(m);
    row.mean_wall = sum_w / static_cast<double>(m);
    if (m > 1) {
      double acc = 0.0;
      for (const auto& t : per_seed) {
        if (e >= t.size()) continue;
        const double dev = t[e].objective - row.mean_obj;
        acc += dev * dev;
      }
      row.std_obj = std::sqrt(acc / static_cast<double>(m - 1));
    }
    out.push_back(row);
  }
  return out;
}

std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("read_aggregate_csv: cannot open '" + path + "'");
  std::string line;
  std::uint64_t offset = 0;
  int lineno = 0;

  const auto fail = [&](const std::string& what) -> FormatError {
    return FormatError("aggregate csv (" + path + "): " + what + " at line " +
                           std::to_string(lineno),
                       offset);
  };

  if (!std::getline(f, line)) {
    lineno = 1;
    throw fail("missing header");
  }
  lineno = 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kAggHeader) throw fail("unexpected header");
  offset += line.size() + 1;

  std::vector<AggregateRow> rows;
  while (std::getline(f, line)) {
    ++lineno;
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (fields.size() != 5) {
      offset = line_offset;
      throw fail("expected 5 columns");
    }
    AggregateRow r;
    try {
      std::size_t used = 0;
      r.epoch = std::stoi(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("epoch");
      const auto num = [&](const std::string& s) {
        std::size_t u = 0;
        const double v = std::stod(s, &u);
        if (u != s.size()) throw std::invalid_argument("number");
        return v;
      };
      r.mean_obj = num(fields[1]);
      r.std_obj = num(fields[2]);
      r.mean_grad_sq = num(fields[3]);
      r.mean_wall = num(fields[4]);
    } catch (const std::exception&) {
      offset = line_offset;
      throw fail("malformed numeric field");
    }
    rows.push_back(r);
  }
  if (rows.empty()) {
    lineno = 1;
    offset = 0;
    throw fail("no data rows");
  }
  return rows;
}

}  // namespace palmkit
