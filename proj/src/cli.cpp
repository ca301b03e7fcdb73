#include "esf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace esf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << text;
  if (!out) throw IoError("failed writing file: " + path);
}

std::string substitute_seed(const std::string& pattern, std::uint64_t seed) {
  const std::string key = "{seed}";
  std::string out = pattern;
  const auto pos = out.find(key);
  if (pos != std::string::npos)
    out.replace(pos, key.size(), std::to_string(seed));
  return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  cfg.digest = to_hex(fnv1a64(text));
  try {
    const fs::path base = fs::path(path).parent_path();
    cfg.schema_path = (base / j.at("schema").get<std::string>()).string();
    cfg.output_dir =
        j.contains("output_dir")
            ? (base / j.at("output_dir").get<std::string>()).string()
            : (base / "out").string();

    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.contains("train")) cfg.split.train = s.at("train");
      if (s.contains("val")) cfg.split.val = s.at("val");
      if (s.contains("test")) cfg.split.test = s.at("test");
      if (s.contains("seed")) cfg.split.seed = s.at("seed").get<std::uint64_t>();
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      if (t.contains("learning_rate")) cfg.train.learning_rate = t.at("learning_rate");
      if (t.contains("batch_size")) cfg.train.batch_size = t.at("batch_size").get<std::size_t>();
      if (t.contains("patience")) cfg.train.patience = t.at("patience").get<std::size_t>();
      if (t.contains("max_epochs")) cfg.train.max_epochs = t.at("max_epochs").get<std::size_t>();
      if (t.contains("seed")) cfg.train.seed = t.at("seed").get<std::uint64_t>();
      if (t.contains("adam_beta1")) cfg.train.adam_beta1 = t.at("adam_beta1");
      if (t.contains("adam_beta2")) cfg.train.adam_beta2 = t.at("adam_beta2");
      if (t.contains("adam_eps")) cfg.train.adam_eps = t.at("adam_eps");
    }
    if (j.contains("mode"))
      cfg.train.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      if (l.contains("lambda")) cfg.loss.lambda = l.at("lambda");
      if (l.contains("epsilon")) cfg.loss.epsilon = l.at("epsilon");
      if (l.contains("varphi")) cfg.loss.varphi = l.at("varphi");
      if (l.contains("eta")) {
        const auto& e = l.at("eta");
        if (e.is_number()) {
          cfg.eta_by_name.emplace_back("*", e.get<double>());
        } else {
          for (const auto& [name, v] : e.items())
            cfg.eta_by_name.emplace_back(name, v.get<double>());
        }
      }
    }
    if (j.contains("k")) {
      const auto& k = j.at("k");
      if (k.is_number()) {
        cfg.k_default = k.get<std::size_t>();
      } else {
        for (const auto& [name, v] : k.items())
          cfg.k_by_name.emplace_back(name, v.get<std::size_t>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
  return cfg;
}

namespace {

double eta_for(const RunConfig& cfg, const std::string& name) {
  double star = 1.0;
  for (const auto& [n, v] : cfg.eta_by_name) {
    if (n == name) return v;
    if (n == "*") star = v;
  }
  return star;
}

std::size_t k_for(const RunConfig& cfg, const std::string& name) {
  for (const auto& [n, v] : cfg.k_by_name)
    if (n == name) return v;
  return cfg.k_default;
}

void check_compatibility(const ModelFile& mf, const SurvivalDataset& ds) {
  if (mf.model.modalities.size() != ds.modalities.size())
    throw DataError("model/data modality count mismatch");
  for (std::size_t m = 0; m < ds.modalities.size(); ++m) {
    const auto& mod = mf.model.modalities[m];
    if (mod.name != ds.modalities[m].name)
      throw DataError("modality order mismatch: model has '" + mod.name +
                      "', data has '" + ds.modalities[m].name + "'");
    if (mod.d != ds.modalities[m].x.cols)
      throw DataError("modality '" + mod.name +
                      "' dimension mismatch: model expects " +
                      std::to_string(mod.d) + " features, data has " +
                      std::to_string(ds.modalities[m].x.cols));
  }
}

}  // namespace

FitArtifacts fit_run(const RunConfig& cfg, const LoadResult& data,
                     std::uint64_t seed) {
  const SurvivalDataset& ds = data.ds;
  SplitSpec sp = cfg.split;
  sp.seed = seed;
  const SplitIndices si = split(ds.n(), sp);

  std::vector<double> train_times;
  train_times.reserve(si.train.size());
  for (std::size_t i : si.train) train_times.push_back(ds.time[i]);
  const TimeTransform tt = fit_time_transform(train_times);
  const Standardizer st = fit_standardizer(ds, si.train);

  const ModelInputs train_in = make_inputs(ds, si.train, st, tt);
  const ModelInputs val_in = make_inputs(ds, si.val, st, tt);

  std::vector<double> y_train;
  y_train.reserve(train_in.obs.size());
  for (const auto& o : train_in.obs) y_train.push_back(o.y);

  MultimodalModel mm;
  for (std::size_t m = 0; m < ds.modalities.size(); ++m) {
    const std::string& name = ds.modalities[m].name;
    mm.modalities.push_back(init_unimodal(train_in.x[m], y_train,
                                          k_for(cfg, name),
                                          seed ^ fnv1a64(name), name));
  }
  mm.reliab_raw.assign(ds.modalities.size(), 0.0);
  mm.transform = tt;

  TrainConfig tc = cfg.train;
  tc.seed = seed;
  LossConfig lc = cfg.loss;
  if (lc.epsilon == 0.0) lc.epsilon = default_epsilon(tt);
  lc.eta.clear();
  for (const auto& mod : ds.modalities) lc.eta.push_back(eta_for(cfg, mod.name));

  FitArtifacts out;
  out.result = train(mm, train_in, val_in, tc, lc);
  out.model.model = std::move(mm);
  out.model.encodings = data.encodings;
  out.model.standardizer = st;
  out.model.meta.seed = seed;
  out.model.meta.config_digest = cfg.digest;
  out.model.meta.best_epoch = out.result.best_epoch;
  out.model.meta.mode = mode_name(tc.mode);

  out.val_report = evaluate_part(out.model, ds, si.val).report;
  return out;
}

Evaluation evaluate_part(const ModelFile& mf, const SurvivalDataset& ds,
                         std::span<const std::size_t> idx) {
  check_compatibility(mf, ds);
  if (idx.empty()) throw DataError("evaluate: empty part");
  const ModelInputs in = make_inputs(ds, idx, mf.standardizer,
                                     mf.model.transform);
  const std::size_t n = idx.size();

  std::vector<Grfn> fused(n);
  Evaluation ev;
  ev.predictions.reserve(n);
  std::vector<double> risk(n), time(n);
  std::vector<int> event(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FusionOutput f = fuse(mf.model, in.row(i));
    fused[i] = f.fused;
    risk[i] = -f.fused.mu;
    time[i] = ds.time[idx[i]];
    event[i] = ds.event[idx[i]];
    PredictionRow row;
    row.id = ds.ids[idx[i]];
    row.time = inverse(mf.model.transform, f.fused.mu);
    row.mu_f = f.fused.mu;
    row.sigma2_f = f.fused.sigma2;
    row.h_f = f.fused.h;
    ev.predictions.push_back(row);
  }

  EvalReport& rep = ev.report;
  rep.n_test = n;
  rep.harrell_c_index = c_index_harrell(risk, time, event);

  // S(t_i | x_j) at the observed transformed times.
  Matrix s_at(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      s_at(j, i) = surv_prob(fused[j], in.obs[i].y);
  rep.c_index = c_index_antolini(s_at, time, event);

  const std::vector<double> grid = quantile_grid(time, 100, 0.1, 0.9);
  std::vector<SurvivalCurve> curves(n);
  for (std::size_t i = 0; i < n; ++i)
    curves[i] = survival_curve_grfn(fused[i], mf.model.transform, grid);
  IpcwDiag diag;
  rep.ibs = ibs(curves, time, event, grid, &diag);
  rep.ibll = ibll(curves, time, event, grid, &diag);
  rep.ipcw_dropped = diag.dropped_terms;

  const std::vector<int> labels = stratify_median(risk);
  std::vector<double> t_hi, t_lo;
  std::vector<int> e_hi, e_lo;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      t_hi.push_back(time[i]);
      e_hi.push_back(event[i]);
    } else {
      t_lo.push_back(time[i]);
      e_lo.push_back(event[i]);
    }
  }
  if (t_hi.empty() || t_lo.empty()) {
    rep.logrank_chi2 = 0.0;
    rep.logrank_p = 1.0;
    rep.logrank_zero_variance = true;
  } else {
    const LogrankResult lr = logrank(t_hi, e_hi, t_lo, e_lo);
    rep.logrank_chi2 = lr.chi2;
    rep.logrank_p = lr.p;
    rep.logrank_zero_variance = lr.zero_variance;
  }

  const std::vector<double> rel = mf.model.reliabilities();
  for (std::size_t m = 0; m < mf.model.modalities.size(); ++m)
    rep.reliabilities.emplace_back(mf.model.modalities[m].name, rel[m]);
  return ev;
}

std::string format_eval_report(const std::string& part, const Evaluation& ev) {
  std::ostringstream os;
  const EvalReport& r = ev.report;
  os << "# esurvfusion evaluation report\n";
  os << "format: 1\n";
  os << "part: " << part << "\n";
  os << "n: " << r.n_test << "\n";
  os << "c_index_antolini: " << fmt_g(r.c_index) << "\n";
  os << "c_index_harrell: " << fmt_g(r.harrell_c_index) << "\n";
  os << "ibs: " << fmt_g(r.ibs) << "\n";
  os << "ibll: " << fmt_g(r.ibll) << "\n";
  os << "logrank_chi2: " << fmt_g(r.logrank_chi2) << "\n";
  os << "logrank_p: " << fmt_g(r.logrank_p) << "\n";
  os << "logrank_zero_variance: " << (r.logrank_zero_variance ? 1 : 0) << "\n";
  os << "ipcw_dropped_terms: " << r.ipcw_dropped << "\n";
  os << "\n[reliabilities]\n";
  os << "modality r\n";
  for (const auto& [name, rel] : r.reliabilities)
    os << name << " " << fmt_g(rel) << "\n";
  os << "\n[predictions]\n";
  os << "row id time mu_f sigma2_f h_f\n";
  for (std::size_t i = 0; i < ev.predictions.size(); ++i) {
    const PredictionRow& p = ev.predictions[i];
    os << i << " " << p.id << " " << fmt_g(p.time) << " " << fmt_g(p.mu_f)
       << " " << fmt_g(p.sigma2_f) << " " << fmt_g(p.h_f) << "\n";
  }
  return os.str();
}

namespace {

std::pair<double, double> mean_std(std::span<const double> v) {
  const double m = num::mean(v);
  if (v.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::string format_summary_report(const std::string& part,
                                  std::span<const std::uint64_t> seeds,
                                  const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << "# esurvfusion seed summary\n";
  os << "format: 1\n";
  os << "part: " << part << "\n";
  os << "n_seeds: " << seeds.size() << "\n";
  os << "\n[metrics]\n";
  os << "metric mean std\n";
  auto emit = [&](const std::string& name, auto get) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(get(r));
    const auto [m, s] = mean_std(v);
    os << name << " " << fmt_g(m) << " " << fmt_g(s) << "\n";
  };
  emit("c_index_antolini", [](const EvalReport& r) { return r.c_index; });
  emit("c_index_harrell", [](const EvalReport& r) { return r.harrell_c_index; });
  emit("ibs", [](const EvalReport& r) { return r.ibs; });
  emit("ibll", [](const EvalReport& r) { return r.ibll; });
  emit("logrank_p", [](const EvalReport& r) { return r.logrank_p; });

  os << "\n[reliabilities]\n";
  os << "modality mean std\n";
  if (!reports.empty()) {
    for (std::size_t m = 0; m < reports[0].reliabilities.size(); ++m) {
      std::vector<double> v;
      for (const auto& r : reports) v.push_back(r.reliabilities[m].second);
      const auto [mu, s] = mean_std(v);
      os << reports[0].reliabilities[m].first << " " << fmt_g(mu) << " "
         << fmt_g(s) << "\n";
    }
  }

  os << "\n[per_seed]\n";
  os << "seed c_index_antolini c_index_harrell ibs ibll logrank_p\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const EvalReport& r = reports[i];
    os << seeds[i] << " " << fmt_g(r.c_index) << " "
       << fmt_g(r.harrell_c_index) << " " << fmt_g(r.ibs) << " "
       << fmt_g(r.ibll) << " " << fmt_g(r.logrank_p) << "\n";
  }
  return os.str();
}

std::string format_train_log(const MultimodalModel& mm, const TrainResult& tr) {
  std::ostringstream os;
  for (const auto& rec : tr.log) {
    json r;
    for (std::size_t m = 0; m < mm.modalities.size(); ++m)
      r[mm.modalities[m].name] = rec.reliab[m];
    json line = {{"epoch", rec.epoch},
                 {"train_loss", rec.train_loss},
                 {"val_loss", rec.val_loss},
                 {"clamp_rate", rec.clamp_rate},
                 {"r", r}};
    os << line.dump() << "\n";
  }
  json tail = {{"best_epoch", tr.best_epoch},
               {"best_val_loss", tr.best_val_loss},
               {"epochs_run", tr.epochs_run}};
  os << tail.dump() << "\n";
  return os.str();
}

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw ConfigError("--seeds: empty list");
  return seeds;
}

std::span<const std::size_t> part_indices(const SplitIndices& si,
                                          const std::string& part) {
  if (part == "train") return si.train;
  if (part == "val") return si.val;
  if (part == "test") return si.test;
  throw ConfigError("unknown part '" + part + "' (train|val|test)");
}

int cmd_fit(const std::string& config_path, const std::string& mode_override,
            const std::string& seeds_csv) {
  RunConfig cfg = parse_run_config(config_path);
  if (!mode_override.empty()) cfg.train.mode = parse_mode(mode_override);
  std::vector<std::uint64_t> seeds;
  if (!seeds_csv.empty())
    seeds = parse_seed_list(seeds_csv);
  else
    seeds = {cfg.train.seed};

  const DatasetSchema schema = parse_schema_file(cfg.schema_path);
  const std::string base_dir = fs::path(cfg.schema_path).parent_path().string();
  const LoadResult data = load_dataset(schema, base_dir);

  const bool multi = seeds.size() > 1;
  std::vector<EvalReport> val_reports;
  for (std::uint64_t seed : seeds) {
    const FitArtifacts art = fit_run(cfg, data, seed);
    const std::string suffix = multi ? "_seed" + std::to_string(seed) : "";
    const fs::path out(cfg.output_dir);
    save_model((out / ("model" + suffix + ".json")).string(), art.model);
    write_file((out / ("train_log" + suffix + ".jsonl")).string(),
               format_train_log(art.model.model, art.result));
    SplitSpec sp = cfg.split;
    sp.seed = seed;
    const SplitIndices si = split(data.ds.n(), sp);
    const Evaluation ev = evaluate_part(art.model, data.ds, si.val);
    write_file((out / ("report_val" + suffix + ".txt")).string(),
               format_eval_report("val", ev));
    val_reports.push_back(ev.report);
    std::cout << "fit seed=" << seed << " epochs=" << art.result.epochs_run
              << " best_epoch=" << art.result.best_epoch
              << " val_loss=" << fmt_g(art.result.best_val_loss) << "\n";
  }
  if (multi) {
    const std::string summary =
        format_summary_report("val", seeds, val_reports);
    write_file((fs::path(cfg.output_dir) / "summary_val.txt").string(),
               summary);
    std::cout << summary;
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& model_pattern,
                 const std::string& config_path, const std::string& part,
                 const std::string& seeds_csv, const std::string& out_path) {
  RunConfig cfg = parse_run_config(config_path);
  const DatasetSchema schema = parse_schema_file(cfg.schema_path);
  const std::string base_dir = fs::path(cfg.schema_path).parent_path().string();
  const LoadResult data = load_dataset(schema, base_dir);

  if (seeds_csv.empty()) {
    const ModelFile mf = load_model(model_pattern);
    SplitSpec sp = cfg.split;
    sp.seed = mf.meta.seed;
    const SplitIndices si = split(data.ds.n(), sp);
    const Evaluation ev = evaluate_part(mf, data.ds, part_indices(si, part));
    const std::string text = format_eval_report(part, ev);
    if (out_path.empty())
      std::cout << text;
    else
      write_file(out_path, text);
    return kExitOk;
  }

  const std::vector<std::uint64_t> seeds = parse_seed_list(seeds_csv);
  std::vector<EvalReport> reports;
  for (std::uint64_t seed : seeds) {
    const ModelFile mf = load_model(substitute_seed(model_pattern, seed));
    SplitSpec sp = cfg.split;
    sp.seed = seed;
    const SplitIndices si = split(data.ds.n(), sp);
    reports.push_back(
        evaluate_part(mf, data.ds, part_indices(si, part)).report);
  }
  const std::string text = format_summary_report(part, seeds, reports);
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& out_path) {
  const ModelFile mf = load_model(model_path);
  const CsvTable table = read_csv(input_path);

  std::vector<Matrix> xs;
  for (std::size_t m = 0; m < mf.encodings.size(); ++m) {
    Matrix x = apply_encoding(mf.encodings[m], table);
    standardize_apply(mf.standardizer, m, x);
    xs.push_back(std::move(x));
  }
  const int id_col = table.column("id");

  std::ostringstream os;
  os << "row,id,time,mu_f,sigma2_f,h_f\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    FeatureViews views;
    for (const auto& x : xs) views.push_back(x.row(i));
    const Prediction p = predict(mf.model, views);
    const std::string id =
        id_col >= 0 ? table.rows[i][static_cast<std::size_t>(id_col)] : "";
    os << i << "," << id << "," << fmt_g(p.time) << "," << fmt_g(p.fused.mu)
       << "," << fmt_g(p.fused.sigma2) << "," << fmt_g(p.fused.h) << "\n";
  }
  if (out_path.empty())
    std::cout << os.str();
  else
    write_file(out_path, os.str());
  return kExitOk;
}

int cmd_simulate(std::size_t n, std::uint64_t seed, double censoring,
                 const std::string& out_dir) {
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.censoring_target = censoring;
  const SyntheticCohort cohort = synthesize(spec);
  write_synthetic(out_dir, cohort);
  std::cout << "simulated n=" << n << " seed=" << seed
            << " censoring=" << fmt_g(cohort.achieved_censoring) << " -> "
            << out_dir << "\n";
  return kExitOk;
}

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
};

GridSpec parse_grid(const std::string& s) {
  GridSpec g;
  char c1 = 0, c2 = 0;
  std::istringstream ss(s);
  if (!(ss >> g.lo >> c1 >> g.hi >> c2 >> g.n) || c1 != ',' || c2 != ',' ||
      g.n < 2 || !(g.hi > g.lo))
    throw ConfigError("--grid expects lo,hi,n with hi > lo and n >= 2");
  return g;
}

int cmd_inspect(const std::string& model_path, const std::string& row_arg,
                const std::string& input_path, const std::string& grid_arg,
                const std::string& out_path) {
  const ModelFile mf = load_model(model_path);
  const GridSpec grid = parse_grid(grid_arg);

  // --row is either an integer index into --input or a csv path whose first
  // data row is used.
  CsvTable table;
  std::size_t row = 0;
  bool is_index = !row_arg.empty() &&
                  row_arg.find_first_not_of("0123456789") == std::string::npos;
  if (is_index) {
    if (input_path.empty())
      throw ConfigError("inspect: --row <index> requires --input <csv>");
    table = read_csv(input_path);
    row = std::stoull(row_arg);
    if (row >= table.rows.size())
      throw DataError("inspect: row index out of range");
  } else {
    table = read_csv(row_arg);
    if (table.rows.empty()) throw DataError("inspect: csv has no data rows");
  }

  std::vector<Matrix> xs;
  for (std::size_t m = 0; m < mf.encodings.size(); ++m) {
    Matrix x = apply_encoding(mf.encodings[m], table);
    standardize_apply(mf.standardizer, m, x);
    xs.push_back(std::move(x));
  }
  FeatureViews views;
  for (const auto& x : xs) views.push_back(x.row(row));
  const FusionOutput f = fuse(mf.model, views);

  std::ostringstream os;
  os << "y contour_fused";
  for (const auto& m : mf.model.modalities) os << " contour_" << m.name;
  os << " pl_surv bel_surv mode_density\n";
  const double sigma =
      f.fused.sigma2 > 0.0 ? std::sqrt(f.fused.sigma2) : 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double y = grid.lo + (grid.hi - grid.lo) * static_cast<double>(i) /
                                   static_cast<double>(grid.n - 1);
    os << fmt_g(y) << " " << fmt_g(contour(f.fused, y));
    for (const auto& g : f.discounted) os << " " << fmt_g(contour(g, y));
    const BelPl bp = bel_pl(f.fused, RealInterval::at_least(y));
    const double dens =
        sigma > 0.0
            ? num::phi_pdf((y - f.fused.mu) / sigma) / sigma
            : 0.0;
    os << " " << fmt_g(bp.pl) << " " << fmt_g(bp.bel) << " " << fmt_g(dens)
       << "\n";
  }
  if (out_path.empty())
    std::cout << os.str();
  else
    write_file(out_path, os.str());
  return kExitOk;
}

void print_error(const char* cls, const std::exception& e) {
  json j = {{"error", cls}, {"message", e.what()}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"evidential multimodal survival analysis"};
  app.require_subcommand(1);

  std::string config_path, mode_override, seeds_csv;
  auto* fit = app.add_subcommand("fit", "fit a model from a config");
  fit->add_option("--config", config_path, "run config json")->required();
  fit->add_option("--mode", mode_override, "B | B+R | B+R+F");
  fit->add_option("--seeds", seeds_csv, "comma-separated seed list");

  std::string model_path, part = "test", out_path;
  auto* ev = app.add_subcommand("evaluate", "score a fitted model");
  ev->add_option("--model", model_path, "model file (may contain {seed})")
      ->required();
  ev->add_option("--config", config_path, "run config json")->required();
  ev->add_option("--part", part, "train | val | test");
  ev->add_option("--seeds", seeds_csv, "comma-separated seed list");
  ev->add_option("--out", out_path, "report output path");

  std::string input_path;
  auto* pr = app.add_subcommand("predict", "predict new rows");
  pr->add_option("--model", model_path, "model file")->required();
  pr->add_option("--input", input_path, "feature csv")->required();
  pr->add_option("--out", out_path, "prediction csv output path");

  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 0;
  double sim_censoring = 0.6;
  std::string sim_out = "sim";
  auto* sim = app.add_subcommand("simulate", "generate a synthetic cohort");
  sim->add_option("--n", sim_n, "cohort size");
  sim->add_option("--seed", sim_seed, "generator seed");
  sim->add_option("--censoring", sim_censoring, "target censoring rate");
  sim->add_option("--out", sim_out, "output directory")->required();

  std::string row_arg, grid_arg;
  auto* ins = app.add_subcommand("inspect", "emit evidence curves for one row");
  ins->add_option("--model", model_path, "model file")->required();
  ins->add_option("--row", row_arg, "row index (with --input) or csv path")
      ->required();
  ins->add_option("--input", input_path, "feature csv for --row <index>");
  ins->add_option("--grid", grid_arg, "lo,hi,n over transformed time")
      ->required();
  ins->add_option("--out", out_path, "output path");

  std::vector<std::string> argv_like(args.rbegin(), args.rend());
  try {
    app.parse(argv_like);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (app.got_subcommand(fit)) return cmd_fit(config_path, mode_override, seeds_csv);
    if (app.got_subcommand(ev))
      return cmd_evaluate(model_path, config_path, part, seeds_csv, out_path);
    if (app.got_subcommand(pr)) return cmd_predict(model_path, input_path, out_path);
    if (app.got_subcommand(sim))
      return cmd_simulate(sim_n, sim_seed, sim_censoring, sim_out);
    if (app.got_subcommand(ins))
      return cmd_inspect(model_path, row_arg, input_path, grid_arg, out_path);
    return kExitConfig;
  } catch (const ConfigError& e) {
    print_error("config", e);
    return kExitConfig;
  } catch (const DataError& e) {
    print_error("data", e);
    return kExitData;
  } catch (const NumericError& e) {
    print_error("numeric", e);
    return kExitNumeric;
  } catch (const DomainError& e) {
    print_error("numeric", e);
    return kExitNumeric;
  } catch (const IoError& e) {
    print_error("io", e);
    return kExitIo;
  } catch (const std::exception& e) {
    print_error("internal", e);
    return 1;
  }
}

}  // namespace esf
