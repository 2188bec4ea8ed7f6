#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "svh/errors.hpp"
#include "svh/eval.hpp"
#include "svh/log.hpp"
#include "svh/train.hpp"

namespace svh {

std::vector<ImagePredictions> predict_dataset(
    const std::vector<const NetParams<float>*>& members, const NetworkConfig& cfg,
    const JointSchema& schema, const std::vector<PatientRecord>& patients) {
  std::vector<ImagePredictions> out;
  for (const PatientRecord& patient : patients)
    for (const auto& [key, img] : patient.images)
      out.push_back({patient.patient_id, key,
                     ensemble_predict(members, cfg, schema, img.pixels,
                                      limb_of(key))});
  return out;
}

EvalReport evaluate_model(const NetParams<float>& params, const NetworkConfig& cfg,
                          const JointSchema& schema,
                          const std::vector<PatientRecord>& patients) {
  return evaluate(predict_dataset({&params}, cfg, schema, patients), patients,
                  schema);
}

std::vector<AblationRow> ablate(const std::vector<PatientRecord>& dataset,
                                const TrainConfig& base, const JointSchema& schema,
                                SweepParam param, const std::vector<double>& values,
                                const std::vector<uint64_t>& seeds) {
  if (values.empty() || seeds.empty())
    throw ConfigError("ablation needs at least one value and one seed");
  std::vector<AblationRow> rows;
  for (double value : values)
    for (uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      if (param == SweepParam::SmoothingP) {
        cfg.smoothing.p = value;
      } else {
        cfg.mask.r = value;  // the ignore radius stays at the base value
      }
      cfg.validate();
      log_info("ablation cell %s=%g seed %llu",
               param == SweepParam::SmoothingP ? "p" : "r", value,
               static_cast<unsigned long long>(seed));
      const FitResult fr = fit(dataset, cfg, schema, "");

      std::vector<PatientRecord> val;
      for (const PatientRecord& patient : dataset)
        if (std::find(fr.val_ids.begin(), fr.val_ids.end(),
                      patient.patient_id) != fr.val_ids.end())
          val.push_back(patient);
      const EvalReport report = evaluate_model(fr.params, cfg.net, schema, val);

      AblationRow row;
      row.param = param == SweepParam::SmoothingP ? "p" : "r";
      row.value = value;
      row.seed = seed;
      row.rmse_narrowing = report.rmse_narrowing;
      row.rmse_erosion = report.rmse_erosion;
      rows.push_back(row);
    }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot open ablation CSV for writing: " + path);
  out << "param,value,seed,rmse_narrowing,rmse_erosion\n";
  char buf[160];
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%g,%llu,%.10g,%.10g\n", r.param.c_str(),
                  r.value, static_cast<unsigned long long>(r.seed),
                  r.rmse_narrowing, r.rmse_erosion);
    out << buf;
  }
  if (!out) throw IoFailure("failed writing ablation CSV: " + path);
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Series {
  std::vector<double> x, med, lo, hi;
};

Series collect(const std::vector<AblationRow>& rows, bool erosion) {
  std::map<double, std::vector<double>> by_value;
  for (const AblationRow& r : rows)
    by_value[r.value].push_back(erosion ? r.rmse_erosion : r.rmse_narrowing);
  Series s;
  for (const auto& [value, ys] : by_value) {
    s.x.push_back(value);
    s.med.push_back(median_of(ys));
    s.lo.push_back(*std::min_element(ys.begin(), ys.end()));
    s.hi.push_back(*std::max_element(ys.begin(), ys.end()));
  }
  return s;
}

void append_panel(std::string& svg, const Series& s, double ox, double oy,
                  double pw, double ph, const std::string& title,
                  const std::string& color) {
  double xmin = s.x.front(), xmax = s.x.back();
  if (xmax == xmin) xmax = xmin + 1.0;
  double ymin = *std::min_element(s.lo.begin(), s.lo.end());
  double ymax = *std::max_element(s.hi.begin(), s.hi.end());
  const double pad = std::max(1e-9, (ymax - ymin) * 0.1);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) { return ox + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return oy + ph - (y - ymin) / (ymax - ymin) * ph; };
  char buf[256];

  std::snprintf(buf, sizeof buf,
                "<rect x='%.1f' y='%.1f' width='%.1f' height='%.1f' "
                "fill='none' stroke='#444'/>\n",
                ox, oy, pw, ph);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x='%.1f' y='%.1f' text-anchor='middle' "
                "font-size='13'>%s</text>\n",
                ox + pw / 2, oy - 8, title.c_str());
  svg += buf;

  // min-max band
  std::string band = "<polygon fill='" + color + "' fill-opacity='0.2' "
                     "stroke='none' points='";
  for (size_t i = 0; i < s.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.hi[i]));
    band += buf;
  }
  for (size_t i = s.x.size(); i-- > 0;) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.lo[i]));
    band += buf;
  }
  svg += band + "'/>\n";

  // median line with markers
  std::string line = "<polyline fill='none' stroke='" + color +
                     "' stroke-width='2' points='";
  for (size_t i = 0; i < s.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.med[i]));
    line += buf;
  }
  svg += line + "'/>\n";
  for (size_t i = 0; i < s.x.size(); ++i) {
    std::snprintf(buf, sizeof buf,
                  "<circle cx='%.2f' cy='%.2f' r='3' fill='%s'/>\n",
                  px(s.x[i]), py(s.med[i]), color.c_str());
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<text x='%.2f' y='%.1f' text-anchor='middle' "
                  "font-size='10'>%g</text>\n",
                  px(s.x[i]), oy + ph + 14, s.x[i]);
    svg += buf;
  }
  // y-axis extremes
  std::snprintf(buf, sizeof buf,
                "<text x='%.1f' y='%.1f' text-anchor='end' font-size='10'>"
                "%.3f</text>\n",
                ox - 4, py(ymax) + 4, ymax);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x='%.1f' y='%.1f' text-anchor='end' font-size='10'>"
                "%.3f</text>\n",
                ox - 4, py(ymin) + 4, ymin);
  svg += buf;
}

}  // namespace

void write_ablation_svg(const std::vector<AblationRow>& rows,
                        const std::string& path) {
  if (rows.empty()) throw ConfigError("no ablation rows to plot");
  const std::string swept = rows.front().param;
  const Series nar = collect(rows, false);
  const Series ero = collect(rows, true);

  std::string svg =
      "<svg xmlns='http://www.w3.org/2000/svg' width='720' height='300' "
      "font-family='sans-serif'>\n";
  append_panel(svg, nar, 60, 40, 260, 200,
               "narrowing RMSE vs " + swept, "#1f77b4");
  append_panel(svg, ero, 420, 40, 260, 200,
               "erosion RMSE vs " + swept, "#d62728");
  svg += "<text x='360' y='290' text-anchor='middle' font-size='11'>"
         "median over seeds, shaded min-max</text>\n</svg>\n";

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot open plot for writing: " + path);
  out << svg;
  if (!out) throw IoFailure("failed writing plot: " + path);
}

}  // namespace svh
