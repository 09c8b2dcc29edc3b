#include "expbias/data/csv.hpp"

#include "expbias/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

namespace expbias::data {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RawRow {
  std::int64_t time;
  std::vector<double> values;
  std::size_t line;
};

} // namespace

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string q = "\"";
  for (char ch : s) {
    q += ch;
    if (ch == '"') {
      q += '"';
    }
  }
  return q + '"';
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

PanelDataset read_panel_csv(std::istream &in, const CsvSchema &schema, const std::string &source) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Format, source + ": missing header row");
  const auto header = split_csv_line(line);
  require(header.size() >= 3, ErrorKind::Format, source + ": need entity_id, time_index and at least one feature");
  require(header[0] == "entity_id" && header[1] == "time_index", ErrorKind::Format,
          source + ": header must start with entity_id,time_index");

  PanelDataset ds;
  ds.feature_names.assign(header.begin() + 2, header.end());
  ds.time_step = schema.time_step;
  const auto target = ds.feature_index(schema.target);
  require(target.has_value(), ErrorKind::Format, source + ": target column '" + schema.target + "' not in header");
  ds.target_index = *target;

  const std::set<std::int64_t> drop(schema.drop_times.begin(), schema.drop_times.end());
  std::vector<std::string> order;
  std::map<std::string, std::vector<RawRow>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split_csv_line(line);
    const std::string where = source + " row " + std::to_string(line_no);
    require(fields.size() == header.size(), ErrorKind::Format,
            where + ": expected " + std::to_string(header.size()) + " cells, got " + std::to_string(fields.size()));
    require(!fields[0].empty(), ErrorKind::Format, where + ": empty entity_id");

    std::int64_t time = 0;
    {
      const auto &f = fields[1];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), time);
      require(res.ec == std::errc() && res.ptr == f.data() + f.size(), ErrorKind::Format,
              where + ": time_index '" + f + "' is not an integer");
    }
    RawRow raw{time, {}, line_no};
    for (std::size_t k = 2; k < fields.size(); ++k) {
      const auto &f = fields[k];
      if (f.empty()) {
        raw.values.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      require(res.ec == std::errc() && res.ptr == f.data() + f.size() && std::isfinite(v), ErrorKind::Format,
              where + ": column '" + header[k] + "' value '" + f + "' is not a finite number");
      raw.values.push_back(v);
    }
    if (drop.count(time) != 0) {
      continue;
    }
    auto [it, inserted] = rows.try_emplace(fields[0]);
    if (inserted) {
      order.push_back(fields[0]);
    }
    for (const auto &prev : it->second) {
      require(prev.time != time, ErrorKind::Format,
              where + ": duplicate (entity_id, time_index) = (" + fields[0] + ", " + std::to_string(time) +
                  "), first seen at row " + std::to_string(prev.line));
    }
    it->second.push_back(std::move(raw));
  }

  for (const auto &id : order) {
    auto &list = rows[id];
    std::sort(list.begin(), list.end(), [](const RawRow &a, const RawRow &b) { return a.time < b.time; });
    Entity e;
    e.id = id;
    e.values.resize(static_cast<Eigen::Index>(list.size()), static_cast<Eigen::Index>(ds.n_features()));
    for (std::size_t t = 0; t < list.size(); ++t) {
      e.times.push_back(list[t].time);
      for (std::size_t j = 0; j < ds.n_features(); ++j) {
        e.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = list[t].values[j];
      }
      if (schema.enforce_uniform_spacing && t > 0) {
        require(list[t].time - list[t - 1].time == schema.time_step, ErrorKind::Format,
                source + " row " + std::to_string(list[t].line) + ": entity '" + id + "' gap of " +
                    std::to_string(list[t].time - list[t - 1].time) + " violates time step " +
                    std::to_string(schema.time_step));
      }
    }
    ds.entities.push_back(std::move(e));
  }
  ds.validate();
  return ds;
}

PanelDataset load_panel_csv(const std::filesystem::path &path, const CsvSchema &schema) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  return read_panel_csv(in, schema, path.string());
}

void write_panel_csv(std::ostream &out, const PanelDataset &ds) {
  out << "entity_id,time_index";
  for (const auto &name : ds.feature_names) {
    out << ',' << csv_field(name);
  }
  out << '\n';
  for (const auto &e : ds.entities) {
    for (std::size_t t = 0; t < e.length(); ++t) {
      out << csv_field(e.id) << ',' << e.times[t];
      for (std::size_t j = 0; j < ds.n_features(); ++j) {
        out << ',';
        if (!e.missing(t, j)) {
          out << format_double(e.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
        }
      }
      out << '\n';
    }
  }
}

void save_panel_csv(const std::filesystem::path &path, const PanelDataset &ds) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  write_panel_csv(out, ds);
  require(out.good(), ErrorKind::Io, "failed writing '" + path.string() + "'");
}

} // namespace expbias::data
