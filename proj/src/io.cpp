#include "overid/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "overid/error.hpp"

namespace overid {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw Error(ErrorCode::Schema,
                "line " + std::to_string(line) + ": '" + cell + "' is not a number");
  }
  return v;
}

}  // namespace

namespace {

struct CsvTable {
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> rows;

  long find(const std::string& name) const {
    const auto it = index.find(name);
    return it == index.end() ? -1 : static_cast<long>(it->second);
  }
  Eigen::VectorXd column(long j) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(j)];
    }
    return v;
  }
  // Column w, else w1, w2, ... in order; empty matrix when absent.
  Eigen::MatrixXd confounders() const {
    std::vector<long> iw;
    if (find("w") >= 0) {
      iw.push_back(find("w"));
    } else {
      for (int k = 1; find("w" + std::to_string(k)) >= 0; ++k) iw.push_back(find("w" + std::to_string(k)));
    }
    Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(iw.size()));
    for (std::size_t k = 0; k < iw.size(); ++k) w.col(static_cast<Eigen::Index>(k)) = column(iw[k]);
    return w;
  }
};

CsvTable read_table(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyDataset, "CSV input is empty");
  const std::vector<std::string> header = split(line);
  for (std::size_t i = 0; i < header.size(); ++i) t.index[header[i]] = i;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::Schema, "line " + std::to_string(lineno) + " has " +
                                         std::to_string(cells.size()) + " fields, header has " +
                                         std::to_string(header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) row[j] = parse_number(cells[j], lineno);
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw Error(ErrorCode::EmptyDataset, "CSV has no data rows");
  return t;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  const CsvTable t = read_table(in);
  const long ix = t.find("x"), iy = t.find("y"), im = t.find("m");
  if (ix < 0) throw Error(ErrorCode::Schema, "CSV is missing column x");
  if (iy < 0) throw Error(ErrorCode::Schema, "CSV is missing column y");
  Eigen::MatrixXd w = t.confounders();
  if (w.cols() > 0 && im >= 0) return Dataset::full(t.column(ix), t.column(iy), std::move(w), t.column(im));
  if (w.cols() > 0) return Dataset::confounder_only(t.column(ix), t.column(iy), std::move(w));
  if (im >= 0) return Dataset::mediator_only(t.column(ix), t.column(iy), t.column(im));
  throw Error(ErrorCode::Schema, "CSV needs column w (or w1..wk) or column m");
}

Covariates read_covariates_csv(std::istream& in) {
  const CsvTable t = read_table(in);
  const long ix = t.find("x");
  if (ix < 0) throw Error(ErrorCode::Schema, "covariate CSV is missing column x");
  Covariates c;
  c.w = t.confounders();
  if (c.w.cols() == 0) throw Error(ErrorCode::Schema, "covariate CSV needs columns w1..wk");
  c.x = t.column(ix);
  return c;
}

Covariates read_covariates_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open '" + path + "'");
  return read_covariates_csv(in);
}

void write_covariates_csv(std::ostream& out, const Covariates& cov) {
  out << "x";
  for (Eigen::Index j = 0; j < cov.w.cols(); ++j) out << ",w" << j + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < cov.w.rows(); ++i) {
    out << format_double(cov.x(i));
    for (Eigen::Index j = 0; j < cov.w.cols(); ++j) out << ',' << format_double(cov.w(i, j));
    out << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open '" + path + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  std::vector<std::string> names{"x", "y"};
  const std::size_t k = data.has_w() ? data.w_dim() : 0;
  if (k == 1) {
    names.emplace_back("w");
  } else {
    for (std::size_t j = 1; j <= k; ++j) names.push_back("w" + std::to_string(j));
  }
  if (data.has_m()) names.emplace_back("m");
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << format_double(data.x()(r)) << ',' << format_double(data.y()(r));
    for (std::size_t j = 0; j < k; ++j) {
      out << ',' << format_double(data.w()(r, static_cast<Eigen::Index>(j)));
    }
    if (data.has_m()) out << ',' << format_double(data.m()(r));
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Config, "cannot write '" + path + "'");
  write_dataset_csv(out, data);
}

void write_summary_csv(std::ostream& out, const McSummary& s) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "estimator,n,reps,excluded,flagged,seed,truth,mean,variance,mse,mse_se,theory_variance,"
         "theory_lower,theory_upper\n";
  for (const auto& r : s.rows) {
    out << r.estimator << ',' << r.n << ',' << r.reps << ',' << r.excluded << ',' << r.flagged
        << ',' << r.seed << ',' << format_double(r.truth) << ',' << format_double(r.mean) << ','
        << format_double(r.variance) << ',' << format_double(r.mse) << ','
        << format_double(r.mse_se) << ',' << opt(r.theory_variance) << ','
        << (r.theory_interval ? format_double(r.theory_interval->lower) : "") << ','
        << (r.theory_interval ? format_double(r.theory_interval->upper) : "") << '\n';
  }
  if (!s.mape.empty()) {
    out << "\nestimator,n,draws,reps,mape_mean,mape_std,inside_fraction\n";
    for (const auto& m : s.mape) {
      out << m.estimator << ',' << m.n << ',' << m.draws << ',' << m.reps << ','
          << format_double(m.mape_mean) << ',' << format_double(m.mape_std) << ','
          << opt(m.inside_fraction) << '\n';
    }
  }
}

void write_curve_csv(std::ostream& out, const OptimalK& curve) {
  out << "k,ve\n";
  for (const auto& [k, ve] : curve.curve) out << format_double(k) << ',' << format_double(ve) << '\n';
}

}  // namespace overid
