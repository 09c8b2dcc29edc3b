#include "expbias/data/panel.hpp"

#include "expbias/error.hpp"

#include <algorithm>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace expbias::data {

std::size_t PanelDataset::total_rows() const {
  std::size_t n = 0;
  for (const auto &e : entities) {
    n += e.length();
  }
  return n;
}

bool PanelDataset::has_missing() const {
  return std::any_of(entities.begin(), entities.end(),
                     [](const Entity &e) { return e.values.array().isNaN().any(); });
}

std::vector<std::size_t> PanelDataset::predictor_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < n_features(); ++j) {
    if (j != target_index) {
      idx.push_back(j);
    }
  }
  return idx;
}

std::optional<std::size_t> PanelDataset::feature_index(const std::string &name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - feature_names.begin());
}

const Entity *PanelDataset::find(const std::string &id) const {
  for (const auto &e : entities) {
    if (e.id == id) {
      return &e;
    }
  }
  return nullptr;
}

void PanelDataset::validate() const {
  require(!feature_names.empty(), ErrorKind::InvalidData, "dataset has no features");
  require(target_index < n_features(), ErrorKind::InvalidData, "target index out of range");
  require(time_step >= 1, ErrorKind::InvalidData, "time step must be >= 1");
  std::unordered_set<std::string> ids;
  for (const auto &e : entities) {
    require(ids.insert(e.id).second, ErrorKind::InvalidData, "duplicate entity id '" + e.id + "'");
    require(static_cast<std::size_t>(e.values.rows()) == e.length(), ErrorKind::InvalidData,
            "entity '" + e.id + "' has mismatched time and value rows");
    require(static_cast<std::size_t>(e.values.cols()) == n_features(), ErrorKind::InvalidData,
            "entity '" + e.id + "' has the wrong feature count");
    for (std::size_t t = 1; t < e.length(); ++t) {
      require(e.times[t] > e.times[t - 1], ErrorKind::InvalidData,
              "entity '" + e.id + "' times are not strictly increasing");
    }
  }
}

PanelDataset PanelDataset::empty_like() const {
  PanelDataset out;
  out.feature_names = feature_names;
  out.target_index = target_index;
  out.time_step = time_step;
  return out;
}

PanelDataset window(const PanelDataset &ds, std::size_t from, std::size_t count) {
  PanelDataset out = ds.empty_like();
  for (const auto &e : ds.entities) {
    if (from >= e.length()) {
      continue;
    }
    const std::size_t n = std::min(count, e.length() - from);
    Entity cut;
    cut.id = e.id;
    cut.times.assign(e.times.begin() + static_cast<std::ptrdiff_t>(from),
                     e.times.begin() + static_cast<std::ptrdiff_t>(from + n));
    cut.values = e.values.middleRows(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(n));
    out.entities.push_back(std::move(cut));
  }
  return out;
}

PanelDataset head(const PanelDataset &ds, std::size_t n) { return window(ds, 0, n); }

PanelDataset select_entities(const PanelDataset &ds, const std::vector<std::string> &ids) {
  PanelDataset out = ds.empty_like();
  for (const auto &id : ids) {
    const Entity *e = ds.find(id);
    require(e != nullptr, ErrorKind::InvalidInput, "unknown entity '" + id + "'");
    out.entities.push_back(*e);
  }
  return out;
}

PanelDataset select_columns(const PanelDataset &ds, const std::vector<std::size_t> &columns) {
  require(!columns.empty(), ErrorKind::InvalidConfiguration, "column selection is empty");
  PanelDataset out;
  out.time_step = ds.time_step;
  out.target_index = 0;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    require(columns[k] < ds.n_features(), ErrorKind::InvalidConfiguration, "column index out of range");
    out.feature_names.push_back(ds.feature_names[columns[k]]);
    if (columns[k] == ds.target_index) {
      out.target_index = k;
    }
  }
  for (const auto &e : ds.entities) {
    Entity cut;
    cut.id = e.id;
    cut.times = e.times;
    cut.values.resize(e.values.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
      cut.values.col(static_cast<Eigen::Index>(k)) = e.values.col(static_cast<Eigen::Index>(columns[k]));
    }
    out.entities.push_back(std::move(cut));
  }
  return out;
}

namespace {

struct Fnv1a {
  std::uint64_t state = 1469598103934665603ULL;
  void bytes(const void *data, std::size_t n) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 1099511628211ULL;
    }
  }
  template <typename T> void value(const T &v) { bytes(&v, sizeof(T)); }
};

} // namespace

std::string content_hash(const PanelDataset &ds) {
  Fnv1a h;
  for (const auto &name : ds.feature_names) {
    h.bytes(name.data(), name.size());
    h.value('\0');
  }
  for (const auto &e : ds.entities) {
    h.bytes(e.id.data(), e.id.size());
    h.value('\0');
    for (std::size_t t = 0; t < e.length(); ++t) {
      h.value(e.times[t]);
      for (Eigen::Index j = 0; j < e.values.cols(); ++j) {
        const double v = e.values(static_cast<Eigen::Index>(t), j);
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        h.value(bits);
      }
    }
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h.state;
  return out.str();
}

} // namespace expbias::data
