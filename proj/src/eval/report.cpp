#include "expbias/eval/report.hpp"

#include "expbias/data/csv.hpp"
#include "expbias/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace expbias::eval {

const char *to_string(Units units) { return units == Units::Original ? "original" : "transformed"; }

Units parse_units(const std::string &text) {
  if (text == "original") {
    return Units::Original;
  }
  if (text == "transformed") {
    return Units::Transformed;
  }
  raise(ErrorKind::InvalidConfiguration, "unknown units '" + text + "' (original or transformed)");
}

double HorizonReport::mean_over(std::size_t first, std::size_t last) const {
  require(first >= 1 && first <= last && last <= horizon(), ErrorKind::InvalidInput,
          "step range out of bounds for the report horizon");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t h = first; h <= last; ++h) {
    if (n_entities[h - 1] > 0) {
      sum += mae[h - 1];
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

HorizonReport horizon_mae(const std::string &label, const std::vector<models::ForecastResult> &forecasts,
                          const data::PanelDataset &truth, Units units) {
  require(!forecasts.empty(), ErrorKind::InvalidInput, "no forecasts to evaluate");
  const std::size_t horizon = forecasts.front().horizon();
  require(horizon >= 1, ErrorKind::InvalidInput, "forecasts have zero horizon");

  HorizonReport rep;
  rep.label = label;
  rep.units = units;
  rep.mae.assign(horizon, 0.0);
  rep.n_entities.assign(horizon, 0);
  const auto target = static_cast<Eigen::Index>(truth.target_index);
  std::size_t matched = 0;
  for (const auto &f : forecasts) {
    require(f.horizon() == horizon, ErrorKind::InvalidInput,
            "forecast for '" + f.entity_id + "' has a different horizon");
    const data::Entity *e = truth.find(f.entity_id);
    require(e != nullptr, ErrorKind::InvalidInput, "forecast entity '" + f.entity_id + "' is absent from truth");
    std::map<std::int64_t, Eigen::Index> row_of;
    for (std::size_t r = 0; r < e->length(); ++r) {
      row_of.emplace(e->times[r], static_cast<Eigen::Index>(r));
    }
    std::vector<double> errs(horizon, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t h = 1; h <= horizon; ++h) {
      const auto it = row_of.find(f.origin_time + static_cast<std::int64_t>(h) * truth.time_step);
      if (it == row_of.end() || std::isnan(e->values(it->second, target))) {
        continue;
      }
      const double err = std::abs(f.values[h - 1] - e->values(it->second, target));
      errs[h - 1] = err;
      rep.mae[h - 1] += err;
      ++rep.n_entities[h - 1];
      ++matched;
    }
    rep.entity_ids.push_back(f.entity_id);
    rep.abs_errors.push_back(std::move(errs));
  }
  require(matched > 0, ErrorKind::InvalidInput, "forecasts and truth share no (entity, time) points");

  double weighted = 0.0;
  for (std::size_t h = 0; h < horizon; ++h) {
    if (rep.n_entities[h] == 0) {
      rep.mae[h] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    weighted += rep.mae[h];
    rep.mae[h] /= static_cast<double>(rep.n_entities[h]);
  }
  rep.overall = weighted / static_cast<double>(matched);
  return rep;
}

Comparison compare_reports(const std::vector<HorizonReport> &reports) {
  require(!reports.empty(), ErrorKind::InvalidInput, "nothing to compare");
  const std::size_t horizon = reports.front().horizon();
  Comparison cmp;
  for (const auto &r : reports) {
    require(r.horizon() == horizon, ErrorKind::InvalidInput,
            "report '" + r.label + "' has horizon " + std::to_string(r.horizon()) + ", expected " +
                std::to_string(horizon));
    cmp.labels.push_back(r.label);
    cmp.overall.push_back(r.overall);
    const double base = reports.front().overall;
    cmp.ratio.push_back(r.overall == base ? 1.0 : r.overall / base);
  }
  for (std::size_t h = 0; h < horizon; ++h) {
    std::optional<std::size_t> best;
    bool tied = false;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].n_entities[h] == 0) {
        continue;
      }
      const double v = reports[i].mae[h];
      if (!best || v < reports[*best].mae[h]) {
        best = i;
        tied = false;
      } else if (v == reports[*best].mae[h]) {
        tied = true;
      }
    }
    cmp.step_winner.push_back(tied ? std::nullopt : best);
  }
  return cmp;
}

std::string format_table(const Comparison &cmp) {
  std::vector<std::size_t> wins(cmp.labels.size(), 0);
  for (const auto &w : cmp.step_winner) {
    if (w) {
      ++wins[*w];
    }
  }
  std::size_t width = 5;
  for (const auto &l : cmp.labels) {
    width = std::max(width, l.size());
  }
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s  %12s  %8s  %9s\n", static_cast<int>(width), "model", "overall_mae", "ratio",
                "step_wins");
  out << buf;
  for (std::size_t i = 0; i < cmp.labels.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-*s  %12.6f  %8.4f  %9zu\n", static_cast<int>(width), cmp.labels[i].c_str(),
                  cmp.overall[i], cmp.ratio[i], wins[i]);
    out << buf;
  }
  return out.str();
}

std::string file_label(const std::string &label) {
  std::string out = label;
  for (char &c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) {
      c = '_';
    }
  }
  return out.empty() ? "model" : out;
}

namespace {

nlohmann::json number_or_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

std::string csv_number(double v) { return std::isnan(v) ? std::string() : data::format_double(v); }

void write_file(const std::filesystem::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << content;
  require(out.good(), ErrorKind::Io, "failed writing '" + path.string() + "'");
}

} // namespace

nlohmann::json summary_json(const std::vector<HorizonReport> &reports) {
  const Comparison cmp = compare_reports(reports);
  nlohmann::json models = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    nlohmann::json curve = nlohmann::json::array();
    for (double v : reports[i].mae) {
      curve.push_back(number_or_null(v));
    }
    models.push_back({{"label", reports[i].label},
                      {"overall_mae", reports[i].overall},
                      {"ratio_to_baseline", cmp.ratio[i]},
                      {"mae_curve", curve}});
  }
  nlohmann::json winners = nlohmann::json::array();
  for (const auto &w : cmp.step_winner) {
    winners.push_back(w ? nlohmann::json(reports[*w].label) : nlohmann::json(nullptr));
  }
  return {{"baseline", reports.front().label},
          {"horizon", reports.front().horizon()},
          {"units", to_string(reports.front().units)},
          {"models", models},
          {"step_winner", winners}};
}

void emit_outputs(const std::vector<HorizonReport> &reports, const std::filesystem::path &out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec && std::filesystem::is_directory(out_dir), ErrorKind::Io,
          "cannot create output directory '" + out_dir.string() + "'");
  for (const auto &r : reports) {
    std::string curve = "horizon_step,mae,n_entities\n";
    for (std::size_t h = 0; h < r.horizon(); ++h) {
      curve += std::to_string(h + 1) + ',' + csv_number(r.mae[h]) + ',' + std::to_string(r.n_entities[h]) + '\n';
    }
    write_file(out_dir / ("mae_curve_" + file_label(r.label) + ".csv"), curve);

    std::string per = "entity_id,horizon_step,abs_error\n";
    for (std::size_t i = 0; i < r.entity_ids.size(); ++i) {
      for (std::size_t h = 0; h < r.horizon(); ++h) {
        if (!std::isnan(r.abs_errors[i][h])) {
          per += data::csv_field(r.entity_ids[i]) + ',' + std::to_string(h + 1) + ',' +
                 data::format_double(r.abs_errors[i][h]) + '\n';
        }
      }
    }
    write_file(out_dir / ("per_entity_" + file_label(r.label) + ".csv"), per);
  }
  write_file(out_dir / "summary.json", summary_json(reports).dump(2) + '\n');
}

} // namespace expbias::eval
