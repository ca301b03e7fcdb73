#include "esf/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "esf/rng.hpp"

namespace esf {

namespace {

using nlohmann::json;

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("could not parse number '" + s + "' in " + where);
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---- schema -----------------------------------------------------------

DatasetSchema parse_schema_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema parse error: ") + e.what());
  }
  try {
    DatasetSchema s;
    s.id_column = j.at("id_column").get<std::string>();
    s.time_column = j.at("time_column").get<std::string>();
    s.event_column = j.at("event_column").get<std::string>();
    for (const auto& m : j.at("modalities")) {
      ModalitySchema ms;
      ms.name = m.at("name").get<std::string>();
      ms.file = m.at("file").get<std::string>();
      for (const auto& c : m.at("feature_columns"))
        ms.feature_columns.push_back(c.get<std::string>());
      if (m.contains("categorical_columns"))
        for (const auto& c : m.at("categorical_columns"))
          ms.categorical_columns.push_back(c.get<std::string>());
      s.modalities.push_back(std::move(ms));
    }
    if (s.modalities.empty()) throw ConfigError("schema: no modalities");
    std::set<std::string> names;
    for (const auto& m : s.modalities)
      if (!names.insert(m.name).second)
        throw ConfigError("schema: duplicate modality name '" + m.name + "'");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema error: ") + e.what());
  }
}

DatasetSchema parse_schema_file(const std::string& path) {
  return parse_schema_text(read_file(path));
}

// ---- csv --------------------------------------------------------------

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
         s == "NULL" || s == "null";
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool any_field = false;

  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
    any_field = true;
  };
  auto end_row = [&]() {
    if (!any_field && row.empty()) return;  // blank line
    end_field();
    if (t.header.empty()) {
      t.header = row;
    } else {
      if (row.size() != t.header.size())
        throw DataError("ragged csv row in " + origin);
      t.rows.push_back(row);
    }
    row.clear();
    any_field = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        any_field = true;
    }
  }
  if (any_field || !field.empty() || !row.empty()) end_row();
  if (t.header.empty()) throw DataError("empty csv: " + origin);
  return t;
}

CsvTable read_csv(const std::string& path) {
  return parse_csv(read_file(path), path);
}

// ---- load -------------------------------------------------------------

namespace {

struct RawModality {
  const ModalitySchema* schema = nullptr;
  CsvTable table;
  std::map<std::string, std::size_t> id_to_row;
};

void build_features(const ModalitySchema& ms, const CsvTable& table,
                    const std::vector<std::size_t>& keep_rows,
                    Modality& out, ModalityEncoding& enc,
                    std::size_t& imputed_cells) {
  out.name = ms.name;
  enc.name = ms.name;
  std::set<std::string> categorical(ms.categorical_columns.begin(),
                                    ms.categorical_columns.end());
  for (const auto& cat : ms.categorical_columns) {
    if (std::find(ms.feature_columns.begin(), ms.feature_columns.end(), cat) ==
        ms.feature_columns.end())
      throw ConfigError("schema error: categorical column '" + cat +
                        "' not listed in feature_columns of modality " +
                        ms.name);
  }

  const std::size_t n = keep_rows.size();
  std::vector<std::vector<double>> columns;

  for (const auto& col_name : ms.feature_columns) {
    const int ci = table.column(col_name);
    if (ci < 0)
      throw ConfigError("schema error: missing column '" + col_name +
                        "' in file " + ms.file);
    ColumnEncoding ce;
    ce.name = col_name;
    if (categorical.count(col_name)) {
      ce.categorical = true;
      std::set<std::string> values;
      for (std::size_t r : keep_rows) values.insert(table.rows[r][ci]);
      ce.categories.assign(values.begin(), values.end());
      for (const auto& cat : ce.categories) {
        std::vector<double> col(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          col[i] = table.rows[keep_rows[i]][ci] == cat ? 1.0 : 0.0;
        columns.push_back(std::move(col));
        out.feature_names.push_back(col_name + "=" + cat);
      }
    } else {
      std::vector<double> col(n, 0.0);
      std::vector<double> present;
      std::vector<std::size_t> missing;
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& cell = table.rows[keep_rows[i]][ci];
        if (is_missing_token(cell)) {
          missing.push_back(i);
        } else {
          col[i] = parse_number(cell, ms.file + ":" + col_name);
          if (!std::isfinite(col[i]))
            throw DataError("non-finite value in " + ms.file + ":" + col_name);
          present.push_back(col[i]);
        }
      }
      if (present.empty())
        throw DataError("column '" + col_name + "' in " + ms.file +
                        " has no observed values");
      ce.median = median_of(present);
      for (std::size_t i : missing) col[i] = ce.median;
      imputed_cells += missing.size();
      columns.push_back(std::move(col));
      out.feature_names.push_back(col_name);
    }
    enc.columns.push_back(std::move(ce));
  }

  out.x = Matrix(n, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) out.x(i, j) = columns[j][i];
  enc.feature_names = out.feature_names;
}

}  // namespace

const Modality& SurvivalDataset::modality(const std::string& name) const {
  for (const auto& m : modalities)
    if (m.name == name) return m;
  throw DataError("unknown modality: " + name);
}

LoadResult load_dataset(const DatasetSchema& schema,
                        const std::string& base_dir) {
  namespace fs = std::filesystem;
  std::vector<RawModality> raw(schema.modalities.size());
  for (std::size_t m = 0; m < schema.modalities.size(); ++m) {
    raw[m].schema = &schema.modalities[m];
    const fs::path p = fs::path(base_dir) / schema.modalities[m].file;
    raw[m].table = read_csv(p.string());
    const int idc = raw[m].table.column(schema.id_column);
    if (idc < 0)
      throw ConfigError("schema error: missing column '" + schema.id_column +
                        "' in file " + schema.modalities[m].file);
    for (std::size_t r = 0; r < raw[m].table.rows.size(); ++r) {
      const std::string& id = raw[m].table.rows[r][idc];
      if (!raw[m].id_to_row.emplace(id, r).second)
        throw DataError("duplicate id '" + id + "' in " +
                        schema.modalities[m].file);
    }
  }

  // All files must describe the same ids.
  for (std::size_t m = 1; m < raw.size(); ++m) {
    std::vector<std::string> orphans;
    for (const auto& [id, _] : raw[0].id_to_row)
      if (!raw[m].id_to_row.count(id)) orphans.push_back(id);
    for (const auto& [id, _] : raw[m].id_to_row)
      if (!raw[0].id_to_row.count(id)) orphans.push_back(id);
    if (!orphans.empty()) {
      std::sort(orphans.begin(), orphans.end());
      std::string msg = "id mismatch between " + raw[0].schema->file + " and " +
                        raw[m].schema->file + "; orphan ids:";
      for (std::size_t i = 0; i < orphans.size() && i < 8; ++i)
        msg += " " + orphans[i];
      if (orphans.size() > 8)
        msg += " (+" + std::to_string(orphans.size() - 8) + " more)";
      throw DataError(msg);
    }
  }

  // time/event live in the first schema-ordered file that has both.
  int time_file = -1, time_col = -1, event_col = -1;
  for (std::size_t m = 0; m < raw.size(); ++m) {
    const int tc = raw[m].table.column(schema.time_column);
    const int ec = raw[m].table.column(schema.event_column);
    if (tc >= 0 && ec >= 0) {
      time_file = static_cast<int>(m);
      time_col = tc;
      event_col = ec;
      break;
    }
  }
  if (time_file < 0)
    throw ConfigError("schema error: no file contains both '" +
                      schema.time_column + "' and '" + schema.event_column +
                      "'");

  // Row order follows the first file; rows with missing time/event drop.
  LoadResult res;
  const int idc0 = raw[0].table.column(schema.id_column);
  std::vector<std::size_t> keep_first;
  for (std::size_t r = 0; r < raw[0].table.rows.size(); ++r) {
    const std::string& id = raw[0].table.rows[r][idc0];
    const auto& te_row =
        raw[time_file].table.rows[raw[time_file].id_to_row.at(id)];
    if (is_missing_token(te_row[time_col]) ||
        is_missing_token(te_row[event_col])) {
      ++res.dropped_rows;
      continue;
    }
    keep_first.push_back(r);
    res.ds.ids.push_back(id);
    const double t = parse_number(te_row[time_col], schema.time_column);
    if (!(t > 0.0) || !std::isfinite(t))
      throw DataError("nonpositive time for id '" + id + "'");
    const double e = parse_number(te_row[event_col], schema.event_column);
    if (e != 0.0 && e != 1.0)
      throw DataError("event indicator for id '" + id + "' must be 0 or 1");
    res.ds.time.push_back(t);
    res.ds.event.push_back(static_cast<int>(e));
  }
  if (res.ds.ids.empty()) throw DataError("no usable rows after ingestion");

  res.ds.modalities.resize(raw.size());
  res.encodings.resize(raw.size());
  for (std::size_t m = 0; m < raw.size(); ++m) {
    std::vector<std::size_t> keep_rows;
    keep_rows.reserve(res.ds.ids.size());
    for (const auto& id : res.ds.ids)
      keep_rows.push_back(raw[m].id_to_row.at(id));
    build_features(*raw[m].schema, raw[m].table, keep_rows,
                   res.ds.modalities[m], res.encodings[m], res.imputed_cells);
  }
  return res;
}

Matrix apply_encoding(const ModalityEncoding& enc, const CsvTable& table) {
  const std::size_t n = table.rows.size();
  Matrix x(n, enc.feature_names.size());
  std::size_t j = 0;
  for (const auto& ce : enc.columns) {
    const int ci = table.column(ce.name);
    if (ci < 0)
      throw ConfigError("input is missing column '" + ce.name + "'");
    if (ce.categorical) {
      for (std::size_t c = 0; c < ce.categories.size(); ++c) {
        for (std::size_t i = 0; i < n; ++i)
          x(i, j) = table.rows[i][ci] == ce.categories[c] ? 1.0 : 0.0;
        ++j;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& cell = table.rows[i][ci];
        x(i, j) = is_missing_token(cell)
                      ? ce.median
                      : parse_number(cell, "input:" + ce.name);
      }
      ++j;
    }
  }
  return x;
}

// ---- split ------------------------------------------------------------

SplitIndices split(std::size_t n, const SplitSpec& spec) {
  if (!(spec.train > 0.0 && spec.val > 0.0 && spec.test > 0.0))
    throw DataError("split: fractions must be positive");
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    throw DataError("split: fractions must sum to 1");
  if (n < 5) throw DataError("split: need at least 5 rows");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  const std::size_t n_val =
      static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw DataError("split: a part is empty");

  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  out.test.assign(order.begin() + n_train + n_val, order.end());
  return out;
}

// ---- standardization ---------------------------------------------------

Standardizer fit_standardizer(const SurvivalDataset& ds,
                              std::span<const std::size_t> train_idx) {
  if (train_idx.empty()) throw DataError("standardize: empty training set");
  Standardizer st;
  st.mean.resize(ds.modalities.size());
  st.scale.resize(ds.modalities.size());
  for (std::size_t m = 0; m < ds.modalities.size(); ++m) {
    const Matrix& x = ds.modalities[m].x;
    st.mean[m].assign(x.cols, 0.0);
    st.scale[m].assign(x.cols, 1.0);
    for (std::size_t j = 0; j < x.cols; ++j) {
      double s = 0.0;
      for (std::size_t i : train_idx) s += x(i, j);
      const double mu = s / static_cast<double>(train_idx.size());
      double v = 0.0;
      for (std::size_t i : train_idx) v += (x(i, j) - mu) * (x(i, j) - mu);
      v /= static_cast<double>(train_idx.size());
      const double sd = std::sqrt(v);
      st.mean[m][j] = mu;
      if (sd > 1e-12 * std::max(1.0, std::abs(mu))) {
        st.scale[m][j] = sd;
      } else {
        st.scale[m][j] = 1.0;  // constant feature passes through
        ++st.constant_features;
      }
    }
  }
  return st;
}

void standardize_apply(const Standardizer& st, std::size_t modality,
                       Matrix& x) {
  const auto& mean = st.mean.at(modality);
  const auto& scale = st.scale.at(modality);
  if (mean.size() != x.cols) throw DataError("standardize: width mismatch");
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      x(i, j) = (x(i, j) - mean[j]) / scale[j];
}

void standardize_undo(const Standardizer& st, std::size_t modality,
                      Matrix& x) {
  const auto& mean = st.mean.at(modality);
  const auto& scale = st.scale.at(modality);
  if (mean.size() != x.cols) throw DataError("standardize: width mismatch");
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      x(i, j) = x(i, j) * scale[j] + mean[j];
}

Matrix select_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), x.cols);
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = x(idx[i], j);
  return out;
}

// ---- synthetic cohort ---------------------------------------------------

SyntheticCohort synthesize(const SyntheticSpec& spec) {
  if (spec.n < 50) throw DomainError("synthesize: n must be >= 50");
  if (!(spec.censoring_target >= 0.0 && spec.censoring_target < 1.0))
    throw DomainError("synthesize: censoring target must lie in [0, 1)");
  if (spec.w_signal.size() != spec.d_signal)
    throw DomainError("synthesize: w_signal length must equal d_signal");

  Rng rng(spec.seed);
  SyntheticCohort out;
  SurvivalDataset& ds = out.ds;

  Modality sig, noi;
  sig.name = "signal";
  noi.name = "noise";
  sig.x = Matrix(spec.n, spec.d_signal);
  noi.x = Matrix(spec.n, spec.d_noise);
  for (std::size_t j = 0; j < spec.d_signal; ++j)
    sig.feature_names.push_back("s" + std::to_string(j));
  for (std::size_t j = 0; j < spec.d_noise; ++j)
    noi.feature_names.push_back("n" + std::to_string(j));

  double var_lin = spec.noise_modality_weight * spec.noise_modality_weight;
  for (double w : spec.w_signal) var_lin += w * w;
  const double var_t = var_lin + spec.noise_sd * spec.noise_sd;
  const bool censor = spec.censoring_target > 0.0;
  const double mu_c =
      censor ? spec.log_time_intercept -
                   std::sqrt(2.0 * var_t) * num::probit(spec.censoring_target)
             : 0.0;

  std::size_t censored = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    ds.ids.push_back("p" + std::to_string(i));
    double lin = 0.0;
    for (std::size_t j = 0; j < spec.d_signal; ++j) {
      sig.x(i, j) = rng.normal();
      lin += spec.w_signal[j] * sig.x(i, j);
    }
    for (std::size_t j = 0; j < spec.d_noise; ++j) noi.x(i, j) = rng.normal();
    if (spec.noise_modality_weight != 0.0 && spec.d_noise > 0)
      lin += spec.noise_modality_weight * noi.x(i, 0);

    const double log_t = spec.log_time_intercept + lin +
                         spec.noise_sd * rng.normal();
    const double t_true = std::exp(log_t);
    out.true_time.push_back(t_true);
    out.true_risk.push_back(-lin);

    double t_obs = t_true;
    int ev = 1;
    if (censor) {
      const double log_c = mu_c + std::sqrt(var_t) * rng.normal();
      const double c = std::exp(log_c);
      if (c < t_true) {
        t_obs = c;
        ev = 0;
        ++censored;
      }
    }
    ds.time.push_back(t_obs);
    ds.event.push_back(ev);
  }
  ds.modalities.push_back(std::move(sig));
  ds.modalities.push_back(std::move(noi));

  out.achieved_censoring =
      static_cast<double>(censored) / static_cast<double>(spec.n);
  if (std::abs(out.achieved_censoring - spec.censoring_target) > 0.05) {
    std::fprintf(stderr,
                 "warning: achieved censoring rate %.3f differs from target "
                 "%.3f\n",
                 out.achieved_censoring, spec.censoring_target);
  }
  return out;
}

void write_synthetic(const std::string& dir, const SyntheticCohort& cohort) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);

  const SurvivalDataset& ds = cohort.ds;
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw IoError("cannot write file: " + name);
    return f;
  };

  {
    auto f = open("signal.csv");
    f << "id,time,event";
    for (const auto& c : ds.modalities[0].feature_names) f << "," << c;
    f << "\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
      f << ds.ids[i] << "," << fmt_g(ds.time[i], 17) << "," << ds.event[i];
      for (std::size_t j = 0; j < ds.modalities[0].x.cols; ++j)
        f << "," << fmt_g(ds.modalities[0].x(i, j), 17);
      f << "\n";
    }
  }
  {
    auto f = open("noise.csv");
    f << "id";
    for (const auto& c : ds.modalities[1].feature_names) f << "," << c;
    f << "\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
      f << ds.ids[i];
      for (std::size_t j = 0; j < ds.modalities[1].x.cols; ++j)
        f << "," << fmt_g(ds.modalities[1].x(i, j), 17);
      f << "\n";
    }
  }
  {
    auto f = open("truth.csv");
    f << "id,true_time,true_risk\n";
    for (std::size_t i = 0; i < ds.n(); ++i)
      f << ds.ids[i] << "," << fmt_g(cohort.true_time[i], 17) << ","
        << fmt_g(cohort.true_risk[i], 17) << "\n";
  }
  {
    nlohmann::json j;
    j["id_column"] = "id";
    j["time_column"] = "time";
    j["event_column"] = "event";
    nlohmann::json mods = nlohmann::json::array();
    for (const auto& m : ds.modalities) {
      nlohmann::json jm;
      jm["name"] = m.name;
      jm["file"] = m.name + ".csv";
      jm["feature_columns"] = m.feature_names;
      mods.push_back(jm);
    }
    j["modalities"] = mods;
    auto f = open("schema.json");
    f << j.dump(2) << "\n";
  }
}

}  // namespace esf
