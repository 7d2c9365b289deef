#pragma once

#include <string>
#include <vector>

#include "palmkit/optim/solver.hpp"

namespace palmkit {

// Raw trace schema:      epoch,objective,grad_sq_norm,wall_seconds,seed,status
// Aggregate schema:      epoch,mean_obj,std_obj,mean_grad_sq,mean_wall
// Doubles are printed with %.17g (exact round trip); files are written to a
// temporary name and renamed into place so readers never observe a partial
// file.

struct AggregateRow {
  int epoch = 0;
  double mean_obj = 0.0;
  double std_obj = 0.0;  // sample standard deviation (n - 1)
  double mean_grad_sq = 0.0;
  double mean_wall = 0.0;
};

void write_raw_csv(const std::string& path, const std::vector<TraceRow>& rows);
void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows);

// Per-epoch mean/std over the seed traces.  Traces may have different
// lengths (aborted runs are truncated); each epoch aggregates the traces
// that reached it.
std::vector<AggregateRow> aggregate_traces(
    const std::vector<std::vector<TraceRow>>& per_seed);

// Strict reader for aggregate files; throws FormatError (with the line's
// byte offset and the line number in the message) on any schema violation.
std::vector<AggregateRow> read_aggregate_csv(const std::string& path);

}  // namespace palmkit
