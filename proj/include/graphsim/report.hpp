#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace graphsim {

struct ReportRow {
    int n = 0;
    double beta = 1.0;
    double n_beta = 0.0;
    int seeds = 0;
    double err_l1 = 0.0, err_l1_se = 0.0;
    double err_l2 = 0.0, err_l2_se = 0.0;
    double err_dbl = 0.0, err_dbl_se = 0.0;
    long wall_ms = 0;
    // extras carried in meta.json only; the CSV schema is fixed
    double moment2 = 0.0;
    std::vector<double> err_l1_at_times;   // 5 checkpoints
    std::vector<double> err_dbl_at_times;  // 5 checkpoints
};

struct ConvergenceReport {
    std::vector<ReportRow> rows;
};

// csv column order is part of the external contract
inline const char* kReportCsvHeader =
    "N,beta,n_beta,seeds,err_l1,err_l1_se,err_l2,err_l2_se,err_dbl,err_dbl_se,wall_ms";

std::string report_to_csv(const ConvergenceReport& r);
ConvergenceReport report_from_csv(const std::string& csv);

// log-log error vs N*beta with a reference-slope envelope line
std::string report_to_svg(const ConvergenceReport& r, double envelope_slope);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double envelope = 0.0;  // theoretical upper-bound exponent, display only
};

RateFit fit_rate(const std::vector<double>& n_beta, const std::vector<double>& errors,
                 double envelope);

std::string fnv1a_hex(const std::string& data);
std::string git_describe();

}  // namespace graphsim
