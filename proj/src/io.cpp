#include "gmcs/io.hpp"

#include <fstream>
#include <sstream>

namespace gmcs::io {

nlohmann::json structure_to_json(const StateEstimate& state, bool include_cov) {
  state.validate();
  nlohmann::json j;
  j["n_points"] = state.n_points;
  j["mean"] = std::vector<double>(state.mean.data(),
                                  state.mean.data() + state.mean.size());
  if (include_cov) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < state.cov.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(state.cov.cols()));
      for (Eigen::Index c = 0; c < state.cov.cols(); ++c)
        row[static_cast<std::size_t>(c)] = state.cov(r, c);
      rows.push_back(row);
    }
    j["cov"] = rows;
  }
  return j;
}

StateEstimate structure_from_json(const nlohmann::json& j, double default_variance) {
  StateEstimate s;
  s.n_points = j.at("n_points").get<int>();
  const auto mean = j.at("mean").get<std::vector<double>>();
  if (static_cast<int>(mean.size()) != 3 * s.n_points)
    throw std::invalid_argument("structure: mean length does not match n_points");
  s.mean = Eigen::Map<const Vector>(mean.data(),
                                    static_cast<Eigen::Index>(mean.size()));
  if (j.contains("cov")) {
    const auto& rows = j.at("cov");
    if (static_cast<int>(rows.size()) != 3 * s.n_points)
      throw std::invalid_argument("structure: covariance dimension mismatch");
    s.cov.resize(3 * s.n_points, 3 * s.n_points);
    for (Eigen::Index r = 0; r < s.cov.rows(); ++r) {
      const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != s.cov.cols())
        throw std::invalid_argument("structure: covariance row length mismatch");
      for (Eigen::Index c = 0; c < s.cov.cols(); ++c)
        s.cov(r, c) = row[static_cast<std::size_t>(c)];
    }
  } else {
    s.cov = default_variance * Matrix::Identity(3 * s.n_points, 3 * s.n_points);
  }
  s.validate();
  return s;
}

nlohmann::json constraints_to_json(const std::vector<MixtureConstraint>& cs) {
  auto j = nlohmann::json::array();
  for (const auto& c : cs) {
    nlohmann::json jc;
    jc["i"] = c.i;
    jc["j"] = c.j;
    auto comps = nlohmann::json::array();
    for (const auto& g : c.components)
      comps.push_back({{"weight", g.weight}, {"mean", g.mean}, {"variance", g.variance}});
    jc["components"] = comps;
    j.push_back(jc);
  }
  return j;
}

std::vector<MixtureConstraint> constraints_from_json(const nlohmann::json& j) {
  std::vector<MixtureConstraint> out;
  for (const auto& jc : j) {
    MixtureConstraint c;
    c.i = jc.at("i").get<int>();
    c.j = jc.at("j").get<int>();
    for (const auto& comp : jc.at("components"))
      c.components.emplace_back(comp.at("weight").get<double>(),
                                comp.at("mean").get<double>(),
                                comp.at("variance").get<double>());
    if (c.components.empty())
      throw std::invalid_argument("constraint with no components");
    out.push_back(std::move(c));
  }
  return out;
}

nlohmann::json answer_key_to_json(const std::vector<int>& key) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t n = 0; n < key.size(); ++n) j[std::to_string(n)] = key[n];
  return j;
}

std::vector<int> answer_key_from_json(const nlohmann::json& j) {
  std::vector<int> key(j.size(), -1);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto idx = static_cast<std::size_t>(std::stoul(it.key()));
    if (idx >= key.size()) throw std::invalid_argument("answer key: index gap");
    key[idx] = it.value().get<int>();
  }
  return key;
}

std::string trace_to_csv(const ConvergenceTrace& trace) {
  std::ostringstream out;
  out << "cycle,avg_error_sd,max_error_sd,rmsd_angstrom,reheated\n";
  out.precision(17);
  for (const auto& row : trace.rows) {
    out << row.cycle << ',' << row.avg_error_sd << ',' << row.max_error_sd << ',';
    if (row.rmsd_angstrom) out << *row.rmsd_angstrom;
    out << ',' << (row.reheated ? 1 : 0) << '\n';
  }
  return out.str();
}

nlohmann::json ellipsoids_to_json(const std::vector<Ellipsoid>& ellipsoids) {
  auto j = nlohmann::json::array();
  for (const auto& e : ellipsoids) {
    nlohmann::json je;
    je["point"] = e.point;
    je["mean"] = {e.mean.x(), e.mean.y(), e.mean.z()};
    auto block = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
      block.push_back({e.cov_block(r, 0), e.cov_block(r, 1), e.cov_block(r, 2)});
    je["cov_block"] = block;
    auto axes = nlohmann::json::array();
    for (const auto& a : e.axes)
      axes.push_back({{"length", a.length},
                      {"direction", {a.direction.x(), a.direction.y(), a.direction.z()}}});
    je["axes"] = axes;
    j.push_back(je);
  }
  return j;
}

nlohmann::json stage_log_to_json(const std::vector<StageRecord>& stages) {
  auto j = nlohmann::json::array();
  for (const auto& s : stages) {
    j.push_back({{"cycle", s.cycle},
                 {"stage", s.stage},
                 {"branch_count", s.branch_count},
                 {"prior_weights", s.prior_weights},
                 {"posterior_weights", s.posterior_weights},
                 {"underflow_fallback", s.underflow_fallback},
                 {"dropped_branches", s.dropped_branches}});
  }
  return j;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for checksum: " + path.string());
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buffer[65536];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      hash ^= static_cast<unsigned char>(buffer[k]);
      hash *= 0x100000001b3ull;
    }
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << hash;
  return out.str();
}

}  // namespace gmcs::io
