#pragma once

#include "holespin/device.hpp"
#include "holespin/fields.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <optional>
#include <string>
#include <vector>

namespace holespin {

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

enum class CoolingScenario { BC1, BC2, None, Imported };

const char* to_string(CoolingScenario s);

struct ElasticityConfig {
    double T_rt = 300.0;   // K
    double T_cool = 4.0;   // K
    CoolingScenario scenario = CoolingScenario::BC1;
    double lateral_extension = 40.0;  // nm, gate/oxide extension on both y sides
    int coarsen = 1;                  // elastic mesh spacing = FD spacing * coarsen
    double tol = 1e-10;
    std::string import_path;

    void validate() const;
};

/// Isotropic stiffness in GPa acting on tensor strain (xx, yy, zz, xy, xz, yz).
/// Shear diagonal is 2G so that sigma_xy = 2 G eps_xy; the engineering form is this matrix times diag(1,1,1,1/2,1/2,1/2).
Matrix6 isotropic_elasticity_matrix(double E_gpa, double nu);

/// Thermal strain alpha (T_cool - T_rt) on the normal entries.
Vector6 thermal_strain_vector(double alpha, double T_rt, double T_cool);

/// Rotates a tensor-convention stiffness into the frame whose axes are the rows of R.
Matrix6 rotate_stiffness(const Matrix6& C, const Eigen::Matrix3d& R);

/// Structured hexahedral mesh: nodes on a lattice, one material per cell.
struct ElasticMesh {
    Grid nodes;
    MaterialTable materials;
    std::vector<int> cell_material;                // (nx-1)(ny-1)(nz-1), x-major like Grid
    std::vector<std::optional<Matrix6>> custom_C;  // per material; overrides the isotropic builder
    std::vector<std::uint8_t> fixed;               // per node, all three components clamped

    std::size_t cell_index(int i, int j, int k) const {
        return (std::size_t(i) * (nodes.n[1] - 1) + j) * std::size_t(nodes.n[2] - 1) + k;
    }
    std::size_t num_cells() const {
        return std::size_t(nodes.n[0] - 1) * (nodes.n[1] - 1) * (nodes.n[2] - 1);
    }
    Matrix6 stiffness(int material) const;
};

/// Uniform single-material box mesh, mostly for tests.
ElasticMesh make_box_mesh(const Vec3& lo, const Vec3& hi, const Vec3& spacing, const MaterialRecord& m);

/// Mesh over the whole (already laterally extended) geometry; cell material sampled at cell centres.
/// Per-axis spacing is adjusted so that a whole number of cells spans the domain.
ElasticMesh make_elastic_mesh(const DeviceGeometry& geometry, const Vec3& spacing);

/// Clamps substrate bottom (BC1), plus gate nodes on the outer domain boundary (BC2).
void apply_scenario(ElasticMesh& mesh, const DeviceGeometry& geometry, CoolingScenario scenario);

struct StiffnessSystem {
    Eigen::SparseMatrix<double, Eigen::RowMajor> K;  // unconstrained, 3 dofs per node interleaved
    Eigen::VectorXd F_th;
    std::vector<std::uint8_t> fixed_dof;
};

StiffnessSystem assemble_thermoelastic(const ElasticMesh& mesh, const ElasticityConfig& config);

struct DisplacementField {
    Grid grid;
    Eigen::VectorXd u;  // nm, interleaved (ux, uy, uz) per node
    std::vector<double> residual_history;

    Vec3 at(std::size_t node) const { return u.segment<3>(3 * long(node)); }
};

/// Solves the constrained system to relative residual tol. Floating structures are rejected.
DisplacementField solve_displacement(const StiffnessSystem& system, const Grid& grid, double tol = 1e-10);

/// Central differences inside, one-sided on the boundary; shear entries are tensor (half engineering) strain.
StrainField strain_from_displacement(const DisplacementField& u);

/// sigma = C (eps - eps_th); C in GPa, result in Pa.
StressField stress_from_strain(const Matrix6& C, const StrainField& eps, const Vector6& eps_th = Vector6::Zero());

/// Per-node stress using the material that owns each node.
StressField stress_field(const ElasticMesh& mesh, const DeviceGeometry* geometry, const StrainField& eps,
                         const ElasticityConfig& config);

/// Trilinear resampling onto the FD lattice; rejects FD nodes outside the mesh.
StrainField sample_strain_to_fd(const StrainField& eps, const Grid& fd);

struct ElasticityResult {
    ElasticMesh mesh;
    DisplacementField displacement;
    StrainField strain;  // on the elastic mesh
    StressField stress;
};

/// Whole cool-down pipeline for a device: extend, mesh, constrain, assemble, solve, differentiate.
ElasticityResult run_cooldown(const DeviceGeometry& geometry, const Vec3& fd_spacing, const ElasticityConfig& config);

}  // namespace holespin
