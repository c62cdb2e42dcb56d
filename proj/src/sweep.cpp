#include "wdm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "wdm/plot.hpp"
#include "wdm/probe.hpp"
#include "wdm/rng.hpp"

namespace wdm {

namespace {

using nlohmann::json;

std::string objective_name(ObjectiveConfig::Kind k) {
  switch (k) {
    case ObjectiveConfig::Kind::cpc: return "cpc";
    case ObjectiveConfig::Kind::wpc: return "wpc";
    case ObjectiveConfig::Kind::wdm_dual: return "wdm_dual";
  }
  return "?";
}

ObjectiveConfig::Kind objective_from_name(const std::string& s) {
  if (s == "cpc") return ObjectiveConfig::Kind::cpc;
  if (s == "wpc") return ObjectiveConfig::Kind::wpc;
  if (s == "wdm_dual") return ObjectiveConfig::Kind::wdm_dual;
  throw std::runtime_error("sweep config: unknown objective '" + s + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr char kCsvHeader[] =
    "axis,objective,seed,mi_certificate,final_mi_estimate,mean_probe_accuracy,"
    "per_factor_accuracies,wallclock_s";

}  // namespace

void SweepConfig::validate() const {
  dataset.validate();
  if (axis_values.empty()) throw std::runtime_error("sweep config: axis_values must be nonempty");
  if (objectives.empty()) throw std::runtime_error("sweep config: objectives must be nonempty");
  if (seeds.empty()) throw std::runtime_error("sweep config: seeds must be nonempty");
  if (repr_dim < 1) throw std::runtime_error("sweep config: repr_dim must be >= 1");
  if (penalty_coeff < 0) throw std::runtime_error("sweep config: penalty_coeff must be >= 0");
  for (int v : axis_values)
    if (v < 1) throw std::runtime_error("sweep config: axis values must be >= 1");
  if (axis == Axis::batch_size)
    for (int v : axis_values)
      if (v < 2) throw std::runtime_error("sweep config: batch-size axis values must be >= 2");
  if (out_dir.empty()) throw std::runtime_error("sweep config: out_dir must be nonempty");
  train.validate();
}

SweepConfig sweep_config_from_json(const json& j) {
  SweepConfig c;
  if (j.value("family", "glyphs") != std::string("glyphs"))
    throw std::runtime_error("sweep config: only the 'glyphs' family is sweepable");
  if (!j.contains("dataset")) throw std::runtime_error("sweep config: missing 'dataset'");
  c.dataset = glyph_spec_from_json(j.at("dataset"));

  const std::string axis = j.value("axis", "n_characters");
  if (axis == "n_characters")
    c.axis = SweepConfig::Axis::n_characters;
  else if (axis == "dataset_size")
    c.axis = SweepConfig::Axis::dataset_size;
  else if (axis == "batch_size")
    c.axis = SweepConfig::Axis::batch_size;
  else
    throw std::runtime_error("sweep config: unknown axis '" + axis + "'");

  c.axis_values = j.value("axis_values", std::vector<int>{});
  for (const auto& name : j.value("objectives", std::vector<std::string>{}))
    c.objectives.push_back(objective_from_name(name));
  c.seeds = j.value("seeds", std::vector<std::uint64_t>{});

  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    const std::string arch = e.value("arch", "mlp");
    if (arch == "mlp")
      c.arch = EncoderConfig::Arch::mlp;
    else if (arch == "conv")
      c.arch = EncoderConfig::Arch::conv;
    else
      throw std::runtime_error("sweep config: unknown encoder arch '" + arch + "'");
    c.hidden = e.value("hidden", std::vector<int>{});
    c.repr_dim = e.value("repr_dim", 16);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.steps = t.value("steps", c.train.steps);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.eval_every = t.value("eval_every", c.train.eval_every);
    const std::string opt = t.value("optimizer", "adaptive_moment");
    if (opt == "plain_sgd")
      c.train.optimizer = TrainConfig::Optimizer::plain_sgd;
    else if (opt == "adaptive_moment")
      c.train.optimizer = TrainConfig::Optimizer::adaptive_moment;
    else
      throw std::runtime_error("sweep config: unknown optimizer '" + opt + "'");
  }
  c.penalty_coeff = j.value("penalty_coeff", 10.0);
  c.out_dir = j.value("out_dir", std::string("sweep_out"));
  c.validate();
  return c;
}

SweepConfig sweep_config_from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("sweep config: cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // translate the byte offset into a line number
    size_t line = 1;
    for (size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
  return sweep_config_from_json(j);
}

json sweep_config_to_json(const SweepConfig& c) {
  json j;
  j["family"] = "glyphs";
  j["dataset"] = glyph_spec_to_json(c.dataset);
  switch (c.axis) {
    case SweepConfig::Axis::n_characters: j["axis"] = "n_characters"; break;
    case SweepConfig::Axis::dataset_size: j["axis"] = "dataset_size"; break;
    case SweepConfig::Axis::batch_size: j["axis"] = "batch_size"; break;
  }
  j["axis_values"] = c.axis_values;
  std::vector<std::string> objs;
  for (auto k : c.objectives) objs.push_back(objective_name(k));
  j["objectives"] = objs;
  j["seeds"] = c.seeds;
  j["encoder"] = {{"arch", c.arch == EncoderConfig::Arch::mlp ? "mlp" : "conv"},
                  {"hidden", c.hidden},
                  {"repr_dim", c.repr_dim}};
  j["train"] = {{"steps", c.train.steps},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"eval_every", c.train.eval_every},
                {"optimizer", c.train.optimizer == TrainConfig::Optimizer::plain_sgd
                                  ? "plain_sgd"
                                  : "adaptive_moment"}};
  j["penalty_coeff"] = c.penalty_coeff;
  j["out_dir"] = c.out_dir;
  return j;
}

GlyphDatasetSpec resolve_cell_spec(const SweepConfig& config, int axis_value) {
  GlyphDatasetSpec spec = config.dataset;
  switch (config.axis) {
    case SweepConfig::Axis::n_characters:
      spec.alphabet_sizes.assign(axis_value, config.dataset.alphabet_sizes.front());
      if (spec.layout == GlyphDatasetSpec::Layout::spatial) {
        spec.grid_rows = 1;
        spec.grid_cols = axis_value;
      }
      break;
    case SweepConfig::Axis::dataset_size:
      spec.n_samples = axis_value;
      break;
    case SweepConfig::Axis::batch_size:
      break;  // dataset unchanged
  }
  spec.validate();
  return spec;
}

int resolve_cell_batch(const SweepConfig& config, int axis_value) {
  return config.axis == SweepConfig::Axis::batch_size ? axis_value
                                                      : config.train.batch_size;
}

namespace {

struct CellResult {
  bool ok = false;
  std::string row;  // full CSV line, wallclock last
  std::string error;
  double mean_accuracy = 0.0;
};

CellResult run_cell(const SweepConfig& config, const PairDataset& ds, int axis_value,
                    ObjectiveConfig::Kind kind, std::uint64_t seed) {
  CellResult res;
  try {
    EncoderConfig ecfg;
    ecfg.arch = config.arch;
    ecfg.input_shape = ds.x_shape;
    ecfg.hidden = config.hidden;
    ecfg.repr_dim = config.repr_dim;
    if (ecfg.hidden.empty())
      ecfg = config.arch == EncoderConfig::Arch::mlp
                 ? EncoderConfig::default_mlp(ds.x_shape, config.repr_dim)
                 : EncoderConfig::default_conv(ds.x_shape, config.repr_dim);

    ObjectiveConfig obj;
    obj.kind = kind;
    obj.penalty_coeff = config.penalty_coeff;
    obj.batch_size = resolve_cell_batch(config, axis_value);

    TrainConfig tc = config.train;
    tc.batch_size = obj.batch_size;
    tc.seed = seed;

    auto [state, log] = train(ds, ecfg, obj, tc);
    if (log.diverged) throw std::runtime_error("training diverged: " + log.diagnostic);
    if (log.records.empty()) throw std::runtime_error("training produced no records");

    ProbeResult probe = evaluate_model(state, ds, hash_combine(seed, 0xaccULL));

    std::string factors;
    for (size_t i = 0; i < probe.per_factor_accuracy.size(); ++i) {
      if (i) factors += ';';
      factors += fmt(probe.per_factor_accuracy[i]);
    }
    res.row = std::to_string(axis_value) + "," + objective_name(kind) + "," +
              std::to_string(seed) + "," + fmt(ds.mi_certificate) + "," +
              fmt(log.records.back().mi_estimate) + "," + fmt(probe.mean_accuracy) + "," +
              factors + "," + fmt(log.records.back().wallclock_s);
    res.mean_accuracy = probe.mean_accuracy;
    res.ok = true;
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

}  // namespace

int run_sweep(const SweepConfig& config, int n_threads) {
  config.validate();
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);

  // datasets are shared across objectives and seeds of one axis value
  std::map<int, PairDataset> datasets;
  for (int v : config.axis_values)
    if (!datasets.count(v)) {
      GlyphDatasetSpec spec = resolve_cell_spec(config, v);
      datasets.emplace(v, generate_glyph_pairs(spec));
    }

  struct Cell {
    int axis_value;
    ObjectiveConfig::Kind kind;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (int v : config.axis_values)
    for (auto kind : config.objectives)
      for (auto seed : config.seeds) cells.push_back({v, kind, seed});

  std::vector<CellResult> results(cells.size());
  std::atomic<size_t> next{0};
  if (n_threads <= 0)
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp<int>(n_threads, 1, static_cast<int>(cells.size()));

  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      results[i] = run_cell(config, datasets.at(cells[i].axis_value), cells[i].axis_value,
                            cells[i].kind, cells[i].seed);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // deterministic row order regardless of scheduling; flush per row so a
  // subsequent failure cannot lose completed work
  std::ofstream csv(out_dir / "results.csv");
  if (!csv) throw std::runtime_error("run_sweep: cannot open results.csv");
  csv << kCsvHeader << "\n";
  bool failed = false;
  json cell_status = json::array();
  for (size_t i = 0; i < cells.size(); ++i) {
    json status = {{"axis", cells[i].axis_value},
                   {"objective", objective_name(cells[i].kind)},
                   {"seed", cells[i].seed}};
    if (results[i].ok) {
      csv << results[i].row << "\n";
      csv.flush();
      status["status"] = "ok";
    } else {
      failed = true;
      status["status"] = "failed";
      status["error"] = results[i].error;
    }
    cell_status.push_back(status);
  }

  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = sweep_config_to_json(config);
  manifest["cells"] = cell_status;
  manifest["csv"] = "results.csv";
  manifest["plot"] = "sweep.png";
  {
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << "\n";
  }

  // axis vs mean accuracy, one series per objective, min-max band across seeds
  try {
    std::vector<double> xs(config.axis_values.begin(), config.axis_values.end());
    std::vector<PlotSeries> series;
    for (auto kind : config.objectives) {
      PlotSeries s;
      s.label = objective_name(kind);
      for (int v : config.axis_values) {
        double sum = 0, lo = 1e300, hi = -1e300;
        int count = 0;
        for (size_t i = 0; i < cells.size(); ++i)
          if (cells[i].axis_value == v && cells[i].kind == kind && results[i].ok) {
            sum += results[i].mean_accuracy;
            lo = std::min(lo, results[i].mean_accuracy);
            hi = std::max(hi, results[i].mean_accuracy);
            ++count;
          }
        if (count == 0) throw std::runtime_error("no completed cells to plot");
        s.mean.push_back(sum / count);
        s.lo.push_back(lo);
        s.hi.push_back(hi);
      }
      series.push_back(std::move(s));
    }
    const char* xlabel = config.axis == SweepConfig::Axis::n_characters ? "N CHARACTERS"
                         : config.axis == SweepConfig::Axis::dataset_size ? "DATASET SIZE"
                                                                          : "BATCH SIZE";
    write_line_plot(out_dir / "sweep.png", xs, series, xlabel, "MEAN ACCURACY");
  } catch (const std::exception&) {
    // the plot is a derived artifact; its absence is recoverable via report
  }

  return failed ? 1 : 0;
}

namespace {

struct CsvRow {
  double axis = 0;
  std::string objective;
  std::uint64_t seed = 0;
  double mi_certificate = 0, final_mi_estimate = 0, mean_probe_accuracy = 0;
  std::string per_factor;
  double wallclock_s = 0;
};

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("report: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("report: empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader)
    throw std::runtime_error("report: schema mismatch in " + path.string());
  std::vector<CsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() != 8)
      throw std::runtime_error("report: malformed row in " + path.string() + ": " + line);
    CsvRow r;
    r.axis = std::stod(fields[0]);
    r.objective = fields[1];
    r.seed = std::stoull(fields[2]);
    r.mi_certificate = std::stod(fields[3]);
    r.final_mi_estimate = std::stod(fields[4]);
    r.mean_probe_accuracy = std::stod(fields[5]);
    r.per_factor = fields[6];
    r.wallclock_s = std::stod(fields[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// the dataset size is not part of the CSV schema; recover it from the sibling
// manifest when present, or from the axis when the axis is the dataset size
long dataset_size_hint(const std::filesystem::path& csv_path, const std::string& axis_name,
                       double axis_value) {
  if (axis_name == "dataset_size") return static_cast<long>(axis_value);
  auto manifest_path = csv_path.parent_path() / "manifest.json";
  std::ifstream mf(manifest_path);
  if (mf) {
    try {
      json m = json::parse(mf);
      return m.at("config").at("dataset").at("n_samples").get<long>();
    } catch (...) {
    }
  }
  return -1;  // unknown
}

}  // namespace

int report(const std::vector<std::filesystem::path>& csv_paths,
           const std::filesystem::path& out_dir) {
  if (csv_paths.empty()) throw std::runtime_error("report: no CSV files given");
  std::filesystem::create_directories(out_dir);

  std::ostringstream md;
  md << "# Sweep report\n";
  for (const auto& path : csv_paths) {
    std::vector<CsvRow> rows = read_csv(path);
    std::string axis_name = "axis";
    {
      std::ifstream mf(path.parent_path() / "manifest.json");
      if (mf) {
        try {
          axis_name = json::parse(mf).at("config").at("axis").get<std::string>();
        } catch (...) {
        }
      }
    }

    // (axis value, objective) -> accuracies across seeds
    std::map<std::pair<double, std::string>, std::vector<double>> cells;
    std::map<std::pair<double, std::string>, double> certs;
    for (const auto& r : rows) {
      cells[{r.axis, r.objective}].push_back(r.mean_probe_accuracy);
      certs[{r.axis, r.objective}] = r.mi_certificate;
    }

    md << "\n## " << path.string() << "\n\n";
    md << "| " << axis_name << " | objective | mean accuracy | std | mi certificate | note |\n";
    md << "|---|---|---|---|---|---|\n";
    std::ostringstream console;
    for (const auto& [key, accs] : cells) {
      double mean = 0;
      for (double a : accs) mean += a;
      mean /= double(accs.size());
      double var = 0;
      for (double a : accs) var += (a - mean) * (a - mean);
      double sd = accs.size() > 1 ? std::sqrt(var / double(accs.size() - 1)) : 0.0;
      double cert = certs[key];
      long n = dataset_size_hint(path, axis_name, key.first);
      std::string note;
      if (n > 0 && std::exp(cert) > double(n))
        note = "exp(MI) exceeds dataset size";  // the failure-regime predictor
      char line[256];
      std::snprintf(line, sizeof line, "| %g | %s | %.4f | %.4f | %.4f | %s |\n",
                    key.first, key.second.c_str(), mean, sd, cert, note.c_str());
      md << line;
      std::snprintf(line, sizeof line, "%-12g %-8s acc %.4f +/- %.4f  MI %.4f %s\n",
                    key.first, key.second.c_str(), mean, sd, cert, note.c_str());
      console << line;
    }
    std::fputs(console.str().c_str(), stdout);

    // regenerate the plot purely from the CSV
    try {
      std::vector<double> xs;
      for (const auto& [key, accs] : cells)
        if (std::find(xs.begin(), xs.end(), key.first) == xs.end()) xs.push_back(key.first);
      std::sort(xs.begin(), xs.end());
      std::vector<std::string> objectives;
      for (const auto& [key, accs] : cells)
        if (std::find(objectives.begin(), objectives.end(), key.second) == objectives.end())
          objectives.push_back(key.second);
      std::sort(objectives.begin(), objectives.end());
      std::vector<PlotSeries> series;
      for (const auto& obj : objectives) {
        PlotSeries s;
        s.label = obj;
        for (double x : xs) {
          const auto& accs = cells.at({x, obj});
          double mean = 0;
          for (double a : accs) mean += a;
          s.mean.push_back(mean / double(accs.size()));
          s.lo.push_back(*std::min_element(accs.begin(), accs.end()));
          s.hi.push_back(*std::max_element(accs.begin(), accs.end()));
        }
        series.push_back(std::move(s));
      }
      write_line_plot(out_dir / (path.stem().string() + "_report.png"), xs, series,
                      axis_name, "MEAN ACCURACY");
    } catch (const std::exception&) {
    }
  }

  std::ofstream out(out_dir / "report.md");
  if (!out) throw std::runtime_error("report: cannot write report.md");
  out << md.str();
  return 0;
}

}  // namespace wdm
