#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qrps/causal.hpp"
#include "qrps/config.hpp"
#include "qrps/quantum.hpp"
#include "qrps/report.hpp"
#include "qrps/scenarios.hpp"
#include "qrps/stats.hpp"

namespace qrps {

struct RunArtifacts {
  Ensemble ensemble;
  StatsReport report;
  json report_json;
};

namespace rundetail {

inline json dist_json(const std::vector<double>& d) { return json(d); }

inline json ward_c_extras(const RunConfig& cfg, const Ensemble& e) {
  const ScenarioModel sc = ward_c_model(cfg.ward);
  const NodeId a = sc.model.id_of("virus_a");
  const NodeId b = sc.model.id_of("virus_b");
  const ExactJoint joint = exact_joint(sc.model);
  const ExactJoint admitted = condition(joint, sc.constraint);

  auto conditional_b1 = [&](const ExactJoint& j, int a_value) {
    return condition(j, ColliderConstraint{a, {a_value}}).marginal(b)[1];
  };

  json exact;
  exact["keep_rate"] = admitted.keep_rate;
  exact["p_b1_given_a0"] = conditional_b1(joint, 0);
  exact["p_b1_given_a1"] = conditional_b1(joint, 1);
  exact["p_b1_given_a0_admitted"] = conditional_b1(admitted, 0);
  exact["p_b1_given_a1_admitted"] = conditional_b1(admitted, 1);

  // phi of the admitted exact table
  const ExactJoint ja = admitted;
  std::array<std::array<std::uint64_t, 2>, 2> scaled{};
  // association_2x2 is scale-invariant; use a large common denominator to
  // keep integer counts.
  Assignment x;
  std::array<std::array<double, 2>, 2> p{};
  for (std::size_t idx = 0; idx < ja.probs.size(); ++idx) {
    ja.decode(idx, x);
    p[x[a]][x[b]] += ja.probs[idx];
  }
  const double scale = 1e15;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      scaled[i][j] = static_cast<std::uint64_t>(p[i][j] * scale);
  exact["phi"] = association_2x2(scaled).value;

  // empirical conditionals over all recorded trials
  std::uint64_t a0 = 0, a0_b1 = 0, a0_adm = 0, a0_b1_adm = 0;
  for (const RoundRecord& r : e.records) {
    const bool a1 = r.outcome_a > 0;
    const bool b1 = r.outcome_b > 0;
    if (!a1) {
      ++a0;
      if (b1) ++a0_b1;
      if (r.kept) {
        ++a0_adm;
        if (b1) ++a0_b1_adm;
      }
    }
  }
  json empirical;
  empirical["p_b1_given_a0"] =
      a0 ? json(static_cast<double>(a0_b1) / static_cast<double>(a0)) : json(nullptr);
  empirical["p_b1_given_a0_admitted"] =
      a0_adm ? json(static_cast<double>(a0_b1_adm) / static_cast<double>(a0_adm))
             : json(nullptr);

  return json{{"exact", exact}, {"empirical", empirical}};
}

inline json win_probs_json(const std::vector<double>& w) {
  return json{{"draw", w[kDraw]}, {"alice_wins", w[kAliceWins]}, {"bob_wins", w[kBobWins]}};
}

inline json rps_extras(const RunConfig& cfg, const Ensemble& e) {
  const ScenarioModel sc = rps_filter_model(cfg.rps);
  const NodeId win = sc.model.id_of("win_label");
  const ExactJoint kept_joint = condition(exact_joint(sc.model), sc.constraint);

  std::vector<std::uint64_t> tally(3, 0);
  std::uint64_t kept_rounds = 0;
  for (const RoundRecord& r : e.records) {
    if (!r.kept) continue;
    ++tally[rps_winner(r.outcome_a, r.outcome_b)];
    ++kept_rounds;
  }
  std::vector<double> empirical(3, 0.0);
  if (kept_rounds)
    for (int w = 0; w < 3; ++w)
      empirical[w] = static_cast<double>(tally[w]) / static_cast<double>(kept_rounds);

  return json{{"exact", {{"keep_rate", kept_joint.keep_rate},
                         {"win_probs", win_probs_json(kept_joint.marginal(win))}}},
              {"empirical", {{"win_probs", win_probs_json(empirical)}}}};
}

inline json counterfactual_json(const CounterfactualReport& r) {
  auto dist = [](const std::vector<double>& d) {
    return json{{"rock", d[kRock]}, {"paper", d[kPaper]}, {"scissors", d[kScissors]}};
  };
  return json{{"do_plain", dist(r.do_plain)},
              {"conditioned", dist(r.conditioned)},
              {"do_constrained", dist(r.do_constrained)},
              {"do_matches_plain", r.do_matches_plain}};
}

inline json sunday_extras(const Ensemble& e) {
  const ScenarioModel sc = sunday_model();
  const NodeId alice = sc.model.id_of("alice_choice");
  const NodeId bob = sc.model.id_of("bob_choice");
  const NodeId win = sc.model.id_of("win_label");
  const ExactJoint constrained = condition(exact_joint(sc.model), sc.constraint);

  std::vector<std::uint64_t> tally(3, 0);
  for (const RoundRecord& r : e.records)
    if (r.kept) ++tally[rps_winner(r.outcome_a, r.outcome_b)];
  std::vector<double> empirical(3, 0.0);
  if (e.n_kept)
    for (int w = 0; w < 3; ++w)
      empirical[w] = static_cast<double>(tally[w]) / static_cast<double>(e.n_kept);

  // The Monday-through-Saturday and Sunday answers to "what if Alice had
  // chosen scissors", as target distributions over Bob's choice.
  const CounterfactualReport plain =
      counterfactual_compare(sc.model, alice, kScissors, bob);
  const CounterfactualReport sunday =
      counterfactual_compare(sc.model, alice, kScissors, bob, sc.constraint);

  return json{{"exact", {{"event_probability", constrained.keep_rate},
                         {"win_probs", win_probs_json(constrained.marginal(win))}}},
              {"empirical", {{"win_probs", win_probs_json(empirical)}}},
              {"counterfactual_plain", counterfactual_json(plain)},
              {"counterfactual_constrained", counterfactual_json(sunday)}};
}

inline json bell_extras(const RunConfig& cfg, const ConditionalTable& target,
                        const Ensemble& e, const char* game) {
  json extras;
  extras["game"] = game;
  extras["target"] = cfg.target_name;
  json oracle;
  oracle["nosignal_delta"] = table_nosignal_delta(target);
  if (target.n_a == 2 && target.n_b == 2) oracle["chsh_s"] = table_chsh(target);
  json e_rows = json::array();
  for (std::size_t i = 0; i < target.n_a; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < target.n_b; ++j) row.push_back(target.row(i, j).correlation());
    e_rows.push_back(row);
  }
  oracle["e_values"] = e_rows;
  extras["oracle"] = oracle;

  const EqualSettingSummary eq = equal_setting_summary(e, cfg.alice_angles, cfg.bob_angles);
  if (eq.rounds > 0) {
    extras["equal_settings"] = {
        {"rounds", eq.rounds},
        {"opposite", eq.opposite},
        {"anticorrelation_rate",
         static_cast<double>(eq.opposite) / static_cast<double>(eq.rounds)}};
  } else {
    extras["equal_settings"] = nullptr;
  }
  return extras;
}

}  // namespace rundetail

inline RunArtifacts run(const RunConfig& cfg) {
  RunOptions opt;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.store_discarded = cfg.emit_raw;
  opt.budget = cfg.budget;

  RunArtifacts art;
  json extras;

  if (cfg.scenario == "ward_c") {
    art.ensemble = run_ward_c(cfg.ward, cfg.count, opt);
    extras = rundetail::ward_c_extras(cfg, art.ensemble);
  } else if (cfg.scenario == "rps_filter") {
    art.ensemble = run_rps_filter(cfg.rps, cfg.count, opt);
    extras = rundetail::rps_extras(cfg, art.ensemble);
  } else if (cfg.scenario == "sunday_rps") {
    art.ensemble = run_sunday(cfg.count, opt);
    extras = rundetail::sunday_extras(art.ensemble);
  } else if (cfg.scenario == "wedge_qrps") {
    const ConditionalTable target = cfg.resolve_target();
    art.ensemble = run_wedge_qrps(target, cfg.settings, cfg.count, opt);
    extras = rundetail::bell_extras(cfg, target, art.ensemble, "wedge");
    extras["expected_keep_rate"] = derive_wedge_filter(target).expected_keep_rate;
  } else if (cfg.scenario == "vee_qrps") {
    const ConditionalTable target = cfg.resolve_target();
    art.ensemble = run_vee_qrps(target, cfg.settings, cfg.count, opt);
    extras = rundetail::bell_extras(cfg, target, art.ensemble, "vee");
  } else if (cfg.scenario == "black_box") {
    const BlackBoxDevice device =
        standard_black_box(cfg.alice_angles, cfg.bob_angles, cfg.knob);
    art.ensemble = run_black_box(device, cfg.settings, cfg.count, opt);
    extras = rundetail::bell_extras(cfg, device.selected(), art.ensemble, "black_box");
    extras["target"] = device.knob_names[device.current_knob];
    // Everything Charlie ever sees: the knob.
    extras["charlie_visible"] = {{"knob", device.current_knob},
                                 {"knob_name", device.knob_names[device.current_knob]}};
  } else if (cfg.scenario == "crystal_ball_signalling") {
    art.ensemble = crystal_ball_ensemble(cfg.count, opt);
    const SignallingReport sig = crystal_ball_signalling(cfg.count, opt);
    extras = json{{"crystal_ball_bits", sig.crystal_ball_bits},
                  {"black_box_bits", sig.black_box_bits}};
  } else {
    throw ConfigError("unknown scenario '" + cfg.scenario + "'");
  }

  art.report = build_report(art.ensemble);
  art.report_json = report_to_json(art.report, cfg.echo, cfg.stamp);
  extras["scenario"] = cfg.scenario;
  extras["n_kept"] = art.report.n_kept;
  extras["n_trials"] = art.report.n_trials;
  extras["association"] = art.report.association.value;
  extras["association_degenerate"] = art.report.association.degenerate;
  art.report_json["extras"] = extras;
  return art;
}

// Writes report (and raw rounds when requested) to the configured paths.
// Returns the serialized report text.
inline std::string write_artifacts(const RunConfig& cfg, const RunArtifacts& art) {
  std::string text;
  if (cfg.output_format == "json") {
    text = art.report_json.dump(2);
    text += "\n";
  } else {
    text = report_to_csv(art.report_json);
  }
  if (!cfg.output_path.empty()) {
    std::ofstream out(cfg.output_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file '" + cfg.output_path + "'");
    out << text;
  }
  if (cfg.emit_raw) {
    std::ofstream raw(cfg.raw_path, std::ios::binary);
    if (!raw) throw ConfigError("cannot write raw file '" + cfg.raw_path + "'");
    write_raw_csv(raw, art.ensemble);
  }
  return text;
}

}  // namespace qrps
