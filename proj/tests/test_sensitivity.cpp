#include <gtest/gtest.h>

#include "support.hpp"

using namespace meshmorph;

namespace {

HyperelasticEquilibrium patch_state(double dy = -0.1) {
    const auto p = build_problem(ProblemKind::patch, default_spec(ProblemKind::patch));
    MotionSpec s;
    s.translation = {0.0, dy};
    return deform_hyperelastic(p.mesh, prescribe_motion(p, s), YeohConfig{}).state;
}

}  // namespace

TEST(InterfaceMapping, IsPaddedDiagonalSelector) {
    const auto state = patch_state();
    const auto n = build_interface_mapping(state.reference);
    ASSERT_EQ(n.rows(), static_cast<Eigen::Index>(state.reference.dof_count()));
    ASSERT_EQ(n.cols(), n.rows());
    std::vector<char> on(state.reference.node_count(), 0);
    for (int i : state.reference.interface_nodes) on[i] = 1;
    const Eigen::MatrixXd d(n);
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            EXPECT_EQ(d(i, j), (i == j && on[i / 2]) ? 1.0 : 0.0);
    EXPECT_EQ(n.nonZeros(), 2 * static_cast<Eigen::Index>(state.reference.interface_nodes.size()));
    EXPECT_THROW(build_interface_mapping(state.reference, std::vector<int>{}), MeshError);
}

TEST(SensitivityBlocks, ExactRelations) {
    const auto state = patch_state();
    const auto b = sensitivity_blocks(state);
    const Eigen::MatrixXd k(b.tangent), dx(b.dD_dx), du(b.dD_du), n(b.interface_mapping);
    EXPECT_EQ((dx + k).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((du - dx * n).cwiseAbs().maxCoeff(), 0.0);
    // Prescribed rows of tK are identity rows; free rows keep their coupling.
    std::vector<char> fixed(k.rows(), 0);
    for (const auto& p : state.prescribed) fixed[p.dof] = 1;
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        if (!fixed[i]) continue;
        for (Eigen::Index j = 0; j < k.cols(); ++j) EXPECT_EQ(k(i, j), i == j ? 1.0 : 0.0);
    }
    EXPECT_EQ(dD_dw(state, 7).cols(), 7);
    EXPECT_EQ(dD_dw(state, 7).nonZeros(), 0);
    EXPECT_THROW(dD_dw(state, -1), Error);
}

TEST(SensitivityBlocks, ResidualVanishesAtEquilibrium) {
    const auto state = patch_state();
    EXPECT_LT(residual_D(state).norm(), state.newton_tol);
    const auto still = patch_state(0.0);
    EXPECT_EQ(residual_D(still).norm(), 0.0);
    EXPECT_EQ(still.newton_iterations, 0);
}

TEST(SensitivityBlocks, RequireConvergedState) {
    auto state = patch_state();
    state.converged = false;
    EXPECT_THROW(residual_D(state), SolverError);
    EXPECT_THROW(sensitivity_blocks(state), SolverError);
}

TEST(SensitivityVerification, FiniteDifferencesAgree) {
    const auto state = patch_state();
    const auto report = verify_fd(state);
    EXPECT_TRUE(report.best("dD_dx").pass);
    EXPECT_TRUE(report.best("dD_du").pass);
    EXPECT_LT(report.best("dD_dx").relative_error, 1e-6);
    EXPECT_LT(report.best("dD_du").relative_error, 1e-5);
    EXPECT_EQ(report.rows.size(), 8u);
}

TEST(SensitivityVerification, CorruptionIsDetected) {
    const auto state = patch_state();
    VerificationOptions opt;
    opt.corruption = 1.01;
    const auto report = verify_fd(state, opt);
    EXPECT_FALSE(report.best("dD_dx_corrupted").pass);
    EXPECT_FALSE(report.best("dD_du_corrupted").pass);
    EXPECT_THROW(report.best("dD_dx"), Error);
}

TEST(SensitivityVerification, CsvLayout) {
    const auto dir = mmtest::scratch_dir("verify");
    VerificationReport r;
    r.rows.push_back({"dD_dx", 1e-6, 2.5e-10, true});
    r.write_csv((dir / "v.csv").string());
    EXPECT_EQ(mmtest::slurp(dir / "v.csv"), "block,h,relative_error,pass\ndD_dx,1e-06,2.5e-10,true\n");
}
