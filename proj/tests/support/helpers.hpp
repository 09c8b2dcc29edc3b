#pragma once

#include "expbias/data/panel.hpp"
#include "expbias/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

namespace expbias::testutil {

template <typename Fn> ErrorKind kind_of(Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an expbias::Error";
  return ErrorKind::Io;
}

template <typename Fn> std::string message_of(Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.what();
  }
  ADD_FAILURE() << "expected an expbias::Error";
  return {};
}

inline data::Entity entity(const std::string &id, std::initializer_list<std::initializer_list<double>> rows,
                           std::int64_t first_time = 0) {
  data::Entity e;
  e.id = id;
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  const auto n_cols = static_cast<Eigen::Index>(rows.begin()->size());
  e.values.resize(n_rows, n_cols);
  Eigen::Index r = 0;
  for (const auto &row : rows) {
    Eigen::Index c = 0;
    for (double v : row) {
      e.values(r, c++) = v;
    }
    e.times.push_back(first_time + r);
    ++r;
  }
  return e;
}

inline data::PanelDataset panel(std::vector<std::string> names, std::size_t target, std::vector<data::Entity> es) {
  data::PanelDataset ds;
  ds.feature_names = std::move(names);
  ds.target_index = target;
  ds.entities = std::move(es);
  ds.validate();
  return ds;
}

inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::path(EXPBIAS_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

} // namespace expbias::testutil
