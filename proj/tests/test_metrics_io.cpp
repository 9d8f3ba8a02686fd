#include "pinnverse/metrics.hpp"
#include "pinnverse/trajectory_io.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

using namespace pinnverse;

namespace {

Trajectory one_qubit(const std::vector<double>& t) {
  Trajectory tr;
  tr.n_qubits = 1;
  tr.times = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  tr.values.resize(3, tr.times.size());
  for (int c = 0; c < tr.times.size(); ++c) {
    tr.values(0, c) = std::cos(tr.times[c]);
    tr.values(1, c) = std::sin(tr.times[c]);
    tr.values(2, c) = 0.1 * c - 1.0 / 3.0;
  }
  return tr;
}

int ingestion_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_trajectory_csv(in);
  } catch (const IngestionError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST(Metrics, MapeBasics) {
  Eigen::VectorXd exact(3), pred(3);
  exact << 1.0, -2.0, 4.0;
  pred << 1.1, -1.0, 4.0;
  EXPECT_NEAR(mape(exact, pred), (0.1 + 0.5 + 0.0) / 3.0, 1e-15);
  EXPECT_EQ(mape(exact, exact), 0.0);
}

TEST(Metrics, MapeExcludesExactZeros) {
  Eigen::VectorXd exact(4), pred(4);
  exact << 0.0, 2.0, 0.0, -1.0;
  pred << 5.0, 1.0, -3.0, -1.5;
  EXPECT_EQ(mape_support(exact), 2);
  EXPECT_NEAR(mape(exact, pred), 0.5, 1e-15);
  EXPECT_THROW(mape(Eigen::VectorXd::Zero(3), pred.head(3)), UndefinedMetric);
  EXPECT_THROW(mape(exact, pred.head(2)), std::invalid_argument);
}

TEST(Metrics, GroupedMapeIsSupportWeighted) {
  Eigen::VectorXd j(5), jp(5), g(3), gp(3);
  j << 1.0, 0.0, -2.0, 3.0, 0.5;
  jp << 1.2, 0.1, -2.2, 2.0, 0.55;
  g << 0.3, 0.0, 1.0;
  gp << 0.33, 0.2, 0.9;
  Eigen::VectorXd all(8), allp(8);
  all << j, g;
  allp << jp, gp;
  const double combined = (mape_support(j) * mape(j, jp) + mape_support(g) * mape(g, gp)) /
                          static_cast<double>(mape_support(j) + mape_support(g));
  EXPECT_NEAR(mape(all, allp), combined, 1e-15);
}

TEST(Metrics, AeMaeIdenticalIsZero) {
  const Trajectory a = one_qubit({0.0, 0.5, 1.0});
  const MetricSet m = ae_mae(a, a);
  EXPECT_EQ(m.ae.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(m.mae.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Metrics, AeMaeConstantOffset) {
  const Trajectory a = one_qubit({0.0, 0.5, 1.0, 2.0});
  Trajectory b = a;
  b.values.row(1).array() += 0.1;
  const MetricSet m = ae_mae(a, b);
  EXPECT_NEAR(m.mae[1], 0.1, 1e-15);
  EXPECT_EQ(m.mae[0], 0.0);
  EXPECT_EQ(m.ae.cols(), 4);
}

TEST(Metrics, AeMaeRejectsGridMismatch) {
  EXPECT_THROW(ae_mae(one_qubit({0.0, 0.5}), one_qubit({0.0, 0.6})), std::invalid_argument);
  EXPECT_THROW(ae_mae(one_qubit({0.0, 0.5}), one_qubit({0.0, 0.5, 1.0})), std::invalid_argument);
}

TEST(Metrics, ReconstructionMape) {
  Trajectory ref = one_qubit({0.0, 1.0});
  ref.values << 1.0, -1.0, 2.0, 0.0, 0.0, 4.0;
  Trajectory model = ref;
  model.values(0, 0) = 1.5;
  EXPECT_NEAR(reconstruction_mape(ref, model), 0.5 / 8.0, 1e-15);
  ref.values.setZero();
  EXPECT_THROW(reconstruction_mape(ref, ref), UndefinedMetric);
}

TEST(TrajectoryIo, RoundTripIsExact) {
  Trajectory a = one_qubit({0.0, 0.1, 0.2, 1.0 / 3.0, 2.5});
  a.values(1, 2) = std::numbers::pi * 1e-7;
  std::ostringstream out;
  write_trajectory_csv(out, a);
  std::istringstream in(out.str());
  const Trajectory b = read_trajectory_csv(in);
  EXPECT_EQ(b.n_qubits, 1);
  EXPECT_EQ(b.times, a.times);
  EXPECT_EQ(b.values, a.values);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "t,sx,sy,sz");
}

TEST(TrajectoryIo, TwoQubitHeader) {
  Trajectory a;
  a.n_qubits = 2;
  a.times = uniform_grid(1.0, 3);
  a.values = Eigen::MatrixXd::Constant(15, 3, 0.25);
  std::ostringstream out;
  write_trajectory_csv(out, a);
  const std::string header = out.str().substr(0, out.str().find('\n'));
  EXPECT_EQ(header.rfind("t,S_0_1,S_0_2,S_0_3,S_1_0,", 0), 0u);
  EXPECT_EQ(header.substr(header.size() - 5), "S_3_3");
  std::istringstream in(out.str());
  EXPECT_EQ(read_trajectory_csv(in).values, a.values);
}

TEST(TrajectoryIo, ColumnsMatchedByName) {
  std::istringstream in("t,sz,sx,sy\n0,1,2,3\n1,4,5,6\n");
  const Trajectory t = read_trajectory_csv(in);
  EXPECT_EQ(t.values(0, 0), 2.0);
  EXPECT_EQ(t.values(2, 1), 4.0);
}

TEST(TrajectoryIo, ErrorsCarryLineNumbers) {
  EXPECT_EQ(ingestion_line("t,sx,sy\n0,1,2\n"), 1);                    // missing column
  EXPECT_EQ(ingestion_line("t,sx,sy,sq\n0,1,2,3\n"), 1);               // unknown column
  EXPECT_EQ(ingestion_line("t,sx,sx,sz\n0,1,2,3\n"), 1);               // duplicate column
  EXPECT_EQ(ingestion_line("t,sx,sy,sz\n0,1,2,3\n1,1,2\n"), 3);        // short row
  EXPECT_EQ(ingestion_line("t,sx,sy,sz\n0,1,2,3\n1,1,x,3\n"), 3);      // bad number
  EXPECT_EQ(ingestion_line("t,sx,sy,sz\n0,1,2,3\n2,1,2,3\n1,0,0,0\n"), 4);  // time goes back
  EXPECT_EQ(ingestion_line("t,sx,sy,sz\n"), 1);                        // no rows
  EXPECT_EQ(ingestion_line("x,sx,sy,sz\n0,1,2,3\n"), 1);               // first column
}
