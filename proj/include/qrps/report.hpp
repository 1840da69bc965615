#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <span>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrps/errors.hpp"
#include "qrps/stats.hpp"
#include "qrps/version.hpp"

namespace qrps {

using nlohmann::json;

inline json counts_to_json(const CountsTable& c) {
  json sa_arr = json::array();
  for (std::size_t sa = 0; sa < c.n_sa; ++sa) {
    json sb_arr = json::array();
    for (std::size_t sb = 0; sb < c.n_sb; ++sb) {
      json oa_arr = json::array();
      for (std::size_t oa = 0; oa < c.n_oa; ++oa) {
        json ob_arr = json::array();
        for (std::size_t ob = 0; ob < c.n_ob; ++ob) ob_arr.push_back(c.at(sa, sb, oa, ob));
        oa_arr.push_back(ob_arr);
      }
      sb_arr.push_back(oa_arr);
    }
    sa_arr.push_back(sb_arr);
  }
  return sa_arr;
}

inline CountsTable counts_from_json(const json& j) {
  CountsTable c;
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty() ||
      !j[0][0].is_array() || j[0][0].empty() || !j[0][0][0].is_array())
    throw ConfigError("report counts table is not a 4-level nested array");
  c.n_sa = j.size();
  c.n_sb = j[0].size();
  c.n_oa = j[0][0].size();
  c.n_ob = j[0][0][0].size();
  c.n.assign(c.n_sa * c.n_sb * c.n_oa * c.n_ob, 0);
  for (std::size_t sa = 0; sa < c.n_sa; ++sa)
    for (std::size_t sb = 0; sb < c.n_sb; ++sb)
      for (std::size_t oa = 0; oa < c.n_oa; ++oa)
        for (std::size_t ob = 0; ob < c.n_ob; ++ob)
          c.at(sa, sb, oa, ob) = j.at(sa).at(sb).at(oa).at(ob).get<std::uint64_t>();
  return c;
}

inline json report_to_json(const StatsReport& rep, const json& config_echo,
                           bool stamp = false) {
  json manifest;
  manifest["version"] = std::string(kVersion);
  manifest["config"] = config_echo;
  if (stamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&now));
    manifest["timestamp"] = buf;
  } else {
    manifest["timestamp"] = "";
  }

  json e_values = nullptr;
  if (!rep.e_values.empty()) {
    e_values = json::array();
    const std::size_t n_sb = rep.counts.n_sb;
    for (std::size_t sa = 0; sa < rep.counts.n_sa; ++sa) {
      json row = json::array();
      for (std::size_t sb = 0; sb < n_sb; ++sb) {
        const double e = rep.e_values[sa * n_sb + sb];
        row.push_back(std::isnan(e) ? json(nullptr) : json(e));
      }
      e_values.push_back(row);
    }
  }

  json out;
  out["manifest"] = manifest;
  out["counts"] = counts_to_json(rep.counts);
  out["e_values"] = e_values;
  out["chsh_s"] = rep.chsh ? json(*rep.chsh) : json(nullptr);
  out["keep_rate"] = rep.keep_rate;
  out["nosignal_delta"] = rep.nosignal ? json(*rep.nosignal) : json(nullptr);
  out["extras"] = json::object();
  return out;
}

// Flat CSV rendering of the same report: `key,value` scalars, then dense
// `e_value` and `count` rows in canonical order.
inline std::string report_to_csv(const json& report) {
  std::ostringstream out;
  out << "key,value\n";
  out << "version," << report.at("manifest").at("version").get<std::string>() << "\n";
  const json& cfg = report.at("manifest").at("config");
  out << "scenario," << cfg.at("scenario").get<std::string>() << "\n";
  out << "seed," << cfg.at("seed").get<std::uint64_t>() << "\n";
  auto scalar = [&](const char* key) {
    const json& v = report.at(key);
    out << key << ",";
    if (v.is_null())
      out << "";
    else
      out << v.dump();
    out << "\n";
  };
  scalar("keep_rate");
  scalar("chsh_s");
  scalar("nosignal_delta");
  for (const auto& [k, v] : report.at("extras").items())
    if (v.is_primitive()) out << "extras." << k << "," << v.dump() << "\n";
  const json& e = report.at("e_values");
  if (e.is_array())
    for (std::size_t sa = 0; sa < e.size(); ++sa)
      for (std::size_t sb = 0; sb < e[sa].size(); ++sb)
        out << "e_value," << sa << "," << sb << ","
            << (e[sa][sb].is_null() ? std::string() : e[sa][sb].dump()) << "\n";
  const json& counts = report.at("counts");
  for (std::size_t sa = 0; sa < counts.size(); ++sa)
    for (std::size_t sb = 0; sb < counts[sa].size(); ++sb)
      for (std::size_t oa = 0; oa < counts[sa][sb].size(); ++oa)
        for (std::size_t ob = 0; ob < counts[sa][sb][oa].size(); ++ob)
          out << "count," << sa << "," << sb << "," << oa << "," << ob << ","
              << counts[sa][sb][oa][ob].get<std::uint64_t>() << "\n";
  return out.str();
}

// Raw ensemble rows, one per trial (discarded rounds included when they were
// stored). Outcomes print as +1/-1 in coin scenarios and as category indices
// otherwise.
inline void write_raw_csv(std::ostream& out, const Ensemble& e) {
  out << "round,setting_a,setting_b,outcome_a,outcome_b,kept\n";
  std::uint64_t round = 0;
  for (const RoundRecord& r : e.records) {
    out << round++ << "," << static_cast<int>(r.setting_a) << ","
        << static_cast<int>(r.setting_b) << ",";
    if (e.outcomes_pm_one)
      out << (r.outcome_a > 0 ? "+1" : "-1") << "," << (r.outcome_b > 0 ? "+1" : "-1");
    else
      out << static_cast<int>(r.outcome_a) << "," << static_cast<int>(r.outcome_b);
    out << "," << (r.kept ? 1 : 0) << "\n";
  }
}

inline double tv_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d / 2.0;
}

// ---------------------------------------------------------------------------
// Report comparison
// ---------------------------------------------------------------------------

struct PairDiff {
  std::size_t sa = 0, sb = 0;
  double tv = 0.0;
  double e_delta = 0.0;
  bool e_defined = false;
};

struct CompareSummary {
  bool alphabets_match = false;
  double max_tv = 0.0;
  double max_e_delta = 0.0;
  std::optional<double> chsh_delta;
  std::vector<PairDiff> pairs;

  bool within(double tolerance) const {
    return alphabets_match && max_tv <= tolerance && max_e_delta <= tolerance;
  }
};

inline CompareSummary compare_reports(const json& report_a, const json& report_b) {
  CompareSummary sum;
  const CountsTable a = counts_from_json(report_a.at("counts"));
  const CountsTable b = counts_from_json(report_b.at("counts"));
  if (a.n_sa != b.n_sa || a.n_sb != b.n_sb || a.n_oa != b.n_oa || a.n_ob != b.n_ob)
    return sum;  // alphabets_match stays false
  sum.alphabets_match = true;

  const auto ja = empirical_joint(a);
  const auto jb = empirical_joint(b);
  for (std::size_t sa = 0; sa < a.n_sa; ++sa)
    for (std::size_t sb = 0; sb < a.n_sb; ++sb) {
      PairDiff d;
      d.sa = sa;
      d.sb = sb;
      const auto& pa = ja[sa * a.n_sb + sb];
      const auto& pb = jb[sa * a.n_sb + sb];
      if (pa.populated && pb.populated) {
        d.tv = tv_distance(pa.p, pb.p);
        sum.max_tv = std::max(sum.max_tv, d.tv);
      }
      const json& ea = report_a.at("e_values");
      const json& eb = report_b.at("e_values");
      if (ea.is_array() && eb.is_array() && !ea[sa][sb].is_null() && !eb[sa][sb].is_null()) {
        d.e_defined = true;
        d.e_delta = std::abs(ea[sa][sb].get<double>() - eb[sa][sb].get<double>());
        sum.max_e_delta = std::max(sum.max_e_delta, d.e_delta);
      }
      sum.pairs.push_back(d);
    }

  const json& ca = report_a.at("chsh_s");
  const json& cb = report_b.at("chsh_s");
  if (!ca.is_null() && !cb.is_null())
    sum.chsh_delta = std::abs(ca.get<double>() - cb.get<double>());
  return sum;
}

inline json compare_to_json(const CompareSummary& sum, double tolerance) {
  json pairs = json::array();
  for (const PairDiff& d : sum.pairs) {
    json p{{"setting_a", d.sa}, {"setting_b", d.sb}, {"tv", d.tv}};
    p["e_delta"] = d.e_defined ? json(d.e_delta) : json(nullptr);
    pairs.push_back(p);
  }
  return json{{"alphabets_match", sum.alphabets_match},
              {"max_tv", sum.max_tv},
              {"max_e_delta", sum.max_e_delta},
              {"chsh_delta", sum.chsh_delta ? json(*sum.chsh_delta) : json(nullptr)},
              {"tolerance", tolerance},
              {"within_tolerance", sum.within(tolerance)},
              {"pairs", pairs}};
}

}  // namespace qrps
