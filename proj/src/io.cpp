#include "noisyrd/io.hpp"

#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace noisyrd {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_comma(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

std::optional<Index> CsvTable::find(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<Index>(i);
  return std::nullopt;
}

const Vector& CsvTable::column(const std::string& name) const {
  auto idx = find(name);
  if (!idx) throw DataError("missing column: " + name);
  return columns[static_cast<size_t>(*idx)];
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  table.header = split_comma(line);
  if (table.header.empty()) throw DataError(path + ": missing header row");

  std::vector<std::vector<double>> cols(table.header.size());
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_comma(line);
    if (cells.size() != table.header.size())
      throw DataError(path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(table.header.size()));
    for (size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      auto [p, ec] =
          std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (ec != std::errc() || p != cells[c].data() + cells[c].size())
        throw DataError(path + ": line " + std::to_string(line_no) +
                        ": cannot parse '" + cells[c] + "' as a number");
      cols[c].push_back(v);
    }
  }
  table.columns.reserve(cols.size());
  for (auto& c : cols)
    table.columns.emplace_back(
        Eigen::Map<Vector>(c.data(), static_cast<Index>(c.size())));
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vector>& columns) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out.precision(17);
  for (size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  Index rows = columns.empty() ? 0 : columns.front().size();
  for (Index r = 0; r < rows; ++r)
    for (size_t c = 0; c < columns.size(); ++c)
      out << columns[c][r] << (c + 1 < columns.size() ? "," : "\n");
}

SampleBatch load_batch_csv(const std::string& path, double cutoff) {
  CsvTable table = read_csv(path);
  SampleBatch batch;
  batch.cutoff = cutoff;
  batch.z = table.column("z");
  batch.y = table.column("y");
  if (auto wi = table.find("w")) {
    batch.w = table.columns[static_cast<size_t>(*wi)];
  } else {
    batch.w.resize(batch.z.size());
    for (Index i = 0; i < batch.z.size(); ++i)
      batch.w[i] = batch.z[i] >= cutoff ? 1.0 : 0.0;
  }
  batch.validate();
  return batch;
}

RunSettings parse_config(const nlohmann::json& doc) {
  RunSettings s;
  if (doc.contains("cutoff")) s.cutoff = doc["cutoff"].get<double>();
  if (doc.contains("noise")) {
    const auto& n = doc["noise"];
    std::string type = n.at("type").get<std::string>();
    if (type == "gaussian")
      s.noise = NoiseModel::gaussian(n.at("nu").get<double>());
    else if (type == "binomial")
      s.noise = NoiseModel::binomial(n.at("trials").get<int>());
    else
      throw DataError("config: unknown noise type '" + type + "'");
  }
  if (doc.contains("target")) {
    const auto& t = doc["target"];
    std::string kind = t.value("kind", "constant");
    if (kind == "constant")
      s.target.kind = TargetSpec::Kind::ConstantEffect;
    else if (kind == "rd_param")
      s.target.kind = TargetSpec::Kind::RDParamAt;
    else if (kind == "cutoff_change")
      s.target.kind = TargetSpec::Kind::CutoffChange;
    else if (kind == "noise_change")
      s.target.kind = TargetSpec::Kind::NoiseChange;
    else
      throw DataError("config: unknown target kind '" + kind + "'");
    if (t.contains("c_prime")) s.target.c_prime = t["c_prime"].get<double>();
    if (t.contains("nu_prime")) s.target.nu_prime = t["nu_prime"].get<double>();
    if (t.contains("M")) {
      s.target.M = t["M"].get<double>();
      s.pipeline.M = s.target.M;
    }
    if (t.contains("M_prime")) {
      s.target.M_prime = t["M_prime"].get<double>();
      s.pipeline.M_prime = s.target.M_prime;
    }
  }
  if (doc.contains("M")) {
    s.target.M = doc["M"].get<double>();
    s.pipeline.M = s.target.M;
  }
  if (doc.contains("M_prime")) {
    s.target.M_prime = doc["M_prime"].get<double>();
    s.pipeline.M_prime = s.target.M_prime;
  }
  if (doc.contains("alpha")) s.pipeline.alpha = doc["alpha"].get<double>();
  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    s.pipeline.grid.z_points = g.value("z_points", s.pipeline.grid.z_points);
    s.pipeline.grid.u_points = g.value("u_points", s.pipeline.grid.u_points);
    s.pipeline.grid.u_span_nu = g.value("u_span_nu", s.pipeline.grid.u_span_nu);
  }
  if (doc.contains("window")) {
    const auto& w = doc["window"];
    s.pipeline.window = Interval{w.at("lower").get<double>(),
                                 w.at("upper").get<double>()};
  }
  if (doc.contains("sigma2")) s.pipeline.sigma2 = doc["sigma2"].get<double>();
  if (doc.contains("pilot")) {
    const auto& p = doc["pilot"];
    s.pipeline.pilot_max_iter = p.value("max_iter", s.pipeline.pilot_max_iter);
    s.pipeline.pilot_tol = p.value("tol", s.pipeline.pilot_tol);
  }
  if (doc.contains("seed")) s.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("fbar_csv")) s.fbar_csv = doc["fbar_csv"].get<std::string>();
  if (doc.contains("gamma_csv")) s.gamma_csv = doc["gamma_csv"].get<std::string>();
  if (doc.contains("jobs")) s.jobs = doc["jobs"].get<int>();
  return s;
}

nlohmann::json settings_to_json(const RunSettings& s) {
  nlohmann::json doc;
  if (s.cutoff) doc["cutoff"] = *s.cutoff;
  if (s.noise) {
    if (s.noise->is_gaussian())
      doc["noise"] = {{"type", "gaussian"}, {"nu", s.noise->nu()}};
    else
      doc["noise"] = {{"type", "binomial"}, {"trials", s.noise->trials()}};
  }
  nlohmann::json t;
  t["kind"] = TargetSpec::kind_name(s.target.kind);
  t["M"] = s.pipeline.M ? nlohmann::json(*s.pipeline.M)
                        : nlohmann::json("heuristic");
  if (s.target.kind == TargetSpec::Kind::RDParamAt ||
      s.target.kind == TargetSpec::Kind::CutoffChange)
    t["c_prime"] = s.target.c_prime;
  if (s.target.kind == TargetSpec::Kind::NoiseChange)
    t["nu_prime"] = s.target.nu_prime;
  if (!s.target.is_constant()) t["M_prime"] = s.target.M_prime;
  doc["target"] = t;
  doc["alpha"] = s.pipeline.alpha;
  doc["grid"] = {{"z_points", s.pipeline.grid.z_points},
                 {"u_points", s.pipeline.grid.u_points},
                 {"u_span_nu", s.pipeline.grid.u_span_nu}};
  if (s.pipeline.window)
    doc["window"] = {{"lower", s.pipeline.window->lower},
                     {"upper", s.pipeline.window->upper}};
  if (s.pipeline.sigma2) doc["sigma2"] = *s.pipeline.sigma2;
  doc["pilot"] = {{"max_iter", s.pipeline.pilot_max_iter},
                  {"tol", s.pipeline.pilot_tol}};
  doc["seed"] = s.seed;
  if (s.fbar_csv) doc["fbar_csv"] = *s.fbar_csv;
  if (s.gamma_csv) doc["gamma_csv"] = *s.gamma_csv;
  doc["jobs"] = s.jobs;
  return doc;
}

nlohmann::json report_to_json(const EstimateReport& rep,
                              const nlohmann::json& resolved_config) {
  nlohmann::json doc;
  doc["tau_hat"] = rep.tau_hat;
  doc["se"] = rep.se;
  doc["b_hat"] = rep.b_hat;
  doc["halfwidth"] = rep.halfwidth;
  doc["ci"] = {rep.ci.lower, rep.ci.upper};
  doc["alpha"] = rep.alpha;
  doc["target"] = TargetSpec::kind_name(rep.target.kind);

  nlohmann::json d;
  d["qp"] = {{"objective", rep.diagnostics.qp.objective},
             {"t", rep.diagnostics.qp.t},
             {"t1", rep.diagnostics.qp.t1},
             {"t2", rep.diagnostics.qp.t2},
             {"max_abs_gamma", rep.diagnostics.qp.max_abs_gamma},
             {"iterations", rep.diagnostics.qp.iterations},
             {"primal_residual", rep.diagnostics.qp.primal_residual},
             {"rel_gap", rep.diagnostics.qp.rel_gap}};
  d["lp"] = {{"iterations", rep.diagnostics.lp_iterations},
             {"rel_gap", rep.diagnostics.lp_rel_gap}};
  d["regularity"] = {
      {"max_abs_gamma_plus", rep.diagnostics.regularity.max_abs_gamma_plus},
      {"max_abs_gamma_minus", rep.diagnostics.regularity.max_abs_gamma_minus},
      {"mean_gamma_plus", rep.diagnostics.regularity.mean_gamma_plus},
      {"mean_gamma_minus", rep.diagnostics.regularity.mean_gamma_minus},
      {"ratio_plus", rep.diagnostics.regularity.ratio_plus},
      {"ratio_minus", rep.diagnostics.regularity.ratio_minus},
      {"pass", rep.diagnostics.regularity.pass}};
  d["pilot"] = {{"loglik", rep.diagnostics.pilot_loglik},
                {"iterations", rep.diagnostics.pilot_iterations}};
  d["sigma2"] = rep.diagnostics.sigma2;
  d["M"] = rep.diagnostics.m_used;
  d["M_prime"] = rep.diagnostics.m_prime_used;
  d["window"] = {rep.diagnostics.window.lower, rep.diagnostics.window.upper};
  d["z_points"] = rep.diagnostics.z_points;
  d["u_points"] = rep.diagnostics.u_points;
  d["n"] = rep.diagnostics.n;
  d["n_eff_plus"] = rep.diagnostics.n_eff_plus;
  d["n_eff_minus"] = rep.diagnostics.n_eff_minus;
  d["band_radius"] = rep.diagnostics.band_radius;
  doc["diagnostics"] = d;
  doc["warnings"] = rep.warnings;
  doc["resolved_config"] = resolved_config;
  return doc;
}

}  // namespace noisyrd
