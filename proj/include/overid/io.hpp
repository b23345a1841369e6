#pragma once

#include <iosfwd>
#include <string>

#include "overid/experiments.hpp"
#include "overid/partial_mle.hpp"
#include "overid/scm.hpp"

namespace overid {

/// Headered CSV with lowercase columns x, y, w (or w1..wk), m. The schema is
/// inferred from which columns are present; x and y are always required.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);

/// Covariate table with a binary treatment: columns x and w (or w1..wk).
Covariates read_covariates_csv(std::istream& in);
Covariates read_covariates_csv(const std::string& path);
void write_covariates_csv(std::ostream& out, const Covariates& cov);

void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);

/// Per-(estimator, n) rows, then MAPE rows when present.
void write_summary_csv(std::ostream& out, const McSummary& summary);
/// Two columns k, ve.
void write_curve_csv(std::ostream& out, const OptimalK& curve);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace overid
