#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "protocols.hpp"

namespace ncdrec {

/// One cell of a result table. `n` is the cutoff, keep fraction or split name, or empty.
struct ReportRow {
  std::string protocol;
  std::string method;
  std::string metric;
  std::string n;
  double value = 0.0;
};

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::vector<ReportRow> ranking_rows(const std::string& protocol, const std::string& method,
                                           const RankingReport& r) {
  std::vector<ReportRow> rows;
  for (std::size_t n = 1; n <= r.recall.size(); ++n) {
    const std::string N = std::to_string(n);
    rows.push_back({protocol, method, "recall", N, r.recall[n - 1]});
    rows.push_back({protocol, method, "precision", N, r.precision[n - 1]});
    rows.push_back({protocol, method, "ndcg", N, r.ndcg[n - 1]});
  }
  rows.push_back({protocol, method, "r_score", "5", r.r5});
  rows.push_back({protocol, method, "r_score", "10", r.r10});
  rows.push_back({protocol, method, "mrr", "", r.mrr});
  rows.push_back({protocol, method, "cases", "", static_cast<double>(r.cases)});
  rows.push_back({protocol, method, "truncated_pools", "", static_cast<double>(r.truncated)});
  return rows;
}

inline std::vector<ReportRow> new_user_rows(const std::vector<NewUserResult>& results) {
  std::vector<ReportRow> rows;
  for (const auto& r : results) {
    const std::string frac = format_value(r.keep_fraction);
    rows.push_back({"new-users", r.method, "kendall_tau", frac, r.scores.kendall_tau});
    rows.push_back({"new-users", r.method, "spearman_rho", frac, r.scores.spearman_rho});
    rows.push_back({"new-users", r.method, "doa_macro", frac, 100.0 * r.scores.doa_macro});
    rows.push_back({"new-users", r.method, "doa_micro", frac, 100.0 * r.scores.doa_micro});
    rows.push_back({"new-users", r.method, "ndpm", frac, r.scores.ndpm});
  }
  return rows;
}

/// RFC 4180 CSV. Lines starting with '#' before the header echo the resolved config.
inline void write_csv(const std::string& path, const std::vector<ReportRow>& rows, const RunConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot write " + path);
  for (const auto& [k, v] : config.entries()) out << "# " << k << " = " << v << "\r\n";
  out << "protocol,method,metric,n,value\r\n";
  for (const auto& r : rows)
    out << csv_field(r.protocol) << ',' << csv_field(r.method) << ',' << csv_field(r.metric) << ','
        << csv_field(r.n) << ',' << format_value(r.value) << "\r\n";
}

inline nlohmann::json config_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : config.entries()) j[k] = v;
  return j;
}

inline nlohmann::json rows_json(const std::vector<ReportRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"protocol", r.protocol}, {"method", r.method}, {"metric", r.metric}, {"n", r.n}, {"value", r.value}});
  return arr;
}

}  // namespace ncdrec
