#include "pinnverse/trajectory_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace pinnverse {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int line, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw IngestionError("column '" + column + "': cannot parse '" + s + "' as a number", line);
  }
  return v;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  traj.validate();
  const ObservableBasis basis(traj.n_qubits);
  out << 't';
  for (const auto& name : basis.names()) out << ',' << name;
  out << '\n' << std::setprecision(17);
  for (int c = 0; c < traj.n_times(); ++c) {
    out << traj.times[c];
    for (int r = 0; r < traj.n_observables(); ++r) out << ',' << traj.values(r, c);
    out << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_trajectory_csv(out, traj);
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  do {
    if (!std::getline(in, line)) throw IngestionError("empty trajectory file", 0);
    ++line_no;
  } while (line.find_first_not_of(" \t\r") == std::string::npos);

  const std::vector<std::string> header = split_csv(line);
  if (header.empty() || header[0] != "t") throw IngestionError("first column must be 't'", line_no);
  const int n_obs = static_cast<int>(header.size()) - 1;
  int n_qubits = 0;
  if (n_obs == 3) {
    n_qubits = 1;
  } else if (n_obs == 15) {
    n_qubits = 2;
  } else {
    throw IngestionError("expected 3 (sx,sy,sz) or 15 (S_mu_nu) observable columns, found " + std::to_string(n_obs),
                         line_no);
  }
  const ObservableBasis basis(n_qubits);
  const auto names = basis.names();
  // row_of[col] = basis row that header column col feeds
  std::vector<int> row_of(header.size(), -1);
  std::vector<bool> seen(names.size(), false);
  for (std::size_t c = 1; c < header.size(); ++c) {
    int row = -1;
    for (std::size_t a = 0; a < names.size(); ++a) {
      if (names[a] == header[c]) row = static_cast<int>(a);
    }
    if (row < 0) throw IngestionError("unknown column '" + header[c] + "'", line_no);
    if (seen[static_cast<std::size_t>(row)]) throw IngestionError("duplicate column '" + header[c] + "'", line_no);
    seen[static_cast<std::size_t>(row)] = true;
    row_of[c] = row;
  }
  for (std::size_t a = 0; a < names.size(); ++a) {
    if (!seen[a]) throw IngestionError("missing column '" + names[a] + "'", line_no);
  }

  std::vector<double> times;
  std::vector<std::vector<double>> cols;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw IngestionError("expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(fields.size()),
                           line_no);
    }
    const double t = parse_double(fields[0], line_no, "t");
    if (!times.empty() && !(t > times.back())) throw IngestionError("time is not strictly increasing", line_no);
    std::vector<double> col(names.size());
    for (std::size_t c = 1; c < fields.size(); ++c) {
      col[static_cast<std::size_t>(row_of[c])] = parse_double(fields[c], line_no, header[c]);
    }
    times.push_back(t);
    cols.push_back(std::move(col));
  }
  if (times.empty()) throw IngestionError("no data rows", line_no);

  Trajectory traj;
  traj.n_qubits = n_qubits;
  traj.times = Eigen::Map<const Eigen::VectorXd>(times.data(), static_cast<Eigen::Index>(times.size()));
  traj.values.resize(n_obs, static_cast<Eigen::Index>(times.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (int r = 0; r < n_obs; ++r) traj.values(r, static_cast<Eigen::Index>(c)) = cols[c][static_cast<std::size_t>(r)];
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path, 0);
  return read_trajectory_csv(in);
}

}  // namespace pinnverse
