#pragma once

#include "holespin/device.hpp"
#include "holespin/fields.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace holespin {

using cplx = std::complex<double>;
using Block6 = Eigen::Matrix<cplx, 6, 6>;
using SpMatC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct KpParameters {
    double gamma1 = 4.285, gamma2 = 0.339, gamma3 = 1.21;
    double kappa = -0.42;
    double delta0 = 0.044;  // eV

    static KpParameters from_material(const MaterialRecord& m);
    void validate() const;
    /// DKK constants in eV nm^2, all carrying the hbar^2/2m0 prefactor.
    double L() const;
    double M() const;
    double N() const;
};

/// Six-band basis. Spin-orbit states are ordered
/// |3/2,3/2>, |3/2,1/2>, |3/2,-1/2>, |3/2,-3/2>, |1/2,1/2>, |1/2,-1/2>;
/// the orbital (DKK) basis is X up, Y up, Z up, X down, Y down, Z down.
namespace basis {

/// Columns are the spin-orbit states expanded in the DKK basis.
const Block6& dkk_to_so();
/// Total angular momentum in the spin-orbit basis (block diagonal J=3/2, J=1/2).
const Block6& J(int axis);
/// Orbital angular momentum and Pauli matrices in the DKK basis.
const Block6& L_dkk(int axis);
const Block6& sigma_dkk(int axis);
/// Embeds a 3x3 orbital operator as a spin-independent DKK operator.
Block6 orbital(const Eigen::Matrix3cd& o);
/// U^dagger X U.
Block6 to_so(const Block6& dkk);
const char* label(int state);

}  // namespace basis

/// Pikus-Bir P, Q, R, S at one node, eV.
struct PikusBirPoint {
    double P = 0, Q = 0;
    cplx R{0, 0}, S{0, 0};
};

PikusBirPoint pikus_bir(const std::array<double, 6>& eps, double av, double b, double d);

/// 6x6 Luttinger-Kohn-type template in the spin-orbit basis for given P, Q, R, S and split-off offset.
Block6 lk_template(double P, double Q, cplx R, cplx S, double delta);

struct PikusBirTerms {
    std::vector<PikusBirPoint> nodes;  // one per channel node
};

/// Rows of R are the device axes expressed in crystal coordinates (v_device = R v_crystal).
struct CrystalFrame {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();

    static CrystalFrame from_axes(const Vec3& x, const Vec3& y, const Vec3& z);
    bool is_identity(double tol = 1e-14) const;
};

/// Fourth-rank coefficient tensor T^{ab}_{ij}, index ((a*3+b)*3+i)*3+j.
using Tensor4 = std::array<double, 81>;
inline int t4(int a, int b, int i, int j) { return ((a * 3 + b) * 3 + i) * 3 + j; }

/// Kinetic tensor D with H_ab = sum_ij D^{ab}_{ij} k_i k_j, rotated into the device frame.
Tensor4 kinetic_tensor(const KpParameters& p, const CrystalFrame& frame = {});
/// Deformation tensor Xi with H_ab = sum_ij Xi^{ab}_{ij} eps_ij, rotated into the device frame.
Tensor4 deformation_tensor(double av, double b, double d, const CrystalFrame& frame = {});
/// Rotates all four indices: T'_{abij} = R_aa' R_bb' R_ii' R_jj' T_{a'b'i'j'}.
Tensor4 rotate_tensor(const Tensor4& t, const Eigen::Matrix3d& R);

/// Bulk 6x6 Hamiltonian at wave vector k (1/nm) with uniform strain and field; hole-picture, eV.
Block6 bulk_hamiltonian(const KpParameters& p, const Vec3& k, const std::array<double, 6>& eps, double av,
                        double b, double d, const Vec3& B = Vec3::Zero(), const CrystalFrame& frame = {});

struct MagneticFieldSpec {
    Vec3 B = Vec3::Zero();             // T
    Vec3 gauge_origin = Vec3::Zero();  // nm
};

/// Vector potential A = -(B_z y, 0, B_y x - B_x y) about the gauge origin, T nm.
Vec3 vector_potential(const MagneticFieldSpec& spec, const Vec3& r);

/// The 19-point stencil offsets: on-site, 6 axial, 12 edge neighbours.
constexpr int kStencil = 19;
extern const std::array<std::array<int, 3>, kStencil> kOffsets;

/// Channel-node numbering and neighbour tables shared by assembled operators.
struct ChannelLayout {
    Grid grid;
    std::vector<std::size_t> nodes;                 // grid index per channel node
    std::vector<long> channel_index;                // grid index -> channel node or -1
    std::vector<std::array<int, kStencil>> neighbor;  // channel node per stencil offset or -1
    std::vector<std::array<int, kStencil>> rank;      // column-block position in the CSR row

    static std::shared_ptr<const ChannelLayout> build(const Grid& grid, const RegionMap& map);
    /// Layout from an explicit ascending list of grid indices.
    static std::shared_ptr<const ChannelLayout> from_nodes(const Grid& grid, std::vector<std::size_t> nodes);
    std::size_t size() const { return nodes.size(); }
    Vec3 position(std::size_t c) const { return grid.position(nodes[c]); }
};

class SparseHamiltonian {
public:
    std::shared_ptr<const ChannelLayout> layout;
    SpMatC matrix;
    KpParameters params;
    CrystalFrame frame;
    Tensor4 kinetic{};
    Block6 kinetic_onsite = Block6::Zero();

    std::size_t dim() const { return std::size_t(matrix.rows()); }
    Block6 block(std::size_t node, int offset) const;
    void add_block(std::size_t node, int offset, const Block6& b);
    void add_onsite(std::size_t node, const Block6& b) { add_block(node, 0, b); }

    /// max |H - H^dagger| / max |H|.
    double hermiticity_error() const;
    /// Rigorous lower bound on the spectrum when the kinetic part is positive semidefinite.
    double spectrum_lower_bound() const;
    /// Coordinate triplets "row col re im", 0-based.
    void dump_triplets(const std::string& path) const;
};

/// Kinetic + spin-orbit + potential. `potential` is in volts on the full grid (empty means zero);
/// it enters the hole energy as +phi.
SparseHamiltonian assemble_lk(const Grid& grid, const RegionMap& map, const KpParameters& params,
                              const std::vector<double>& potential, const CrystalFrame& frame = {});
SparseHamiltonian assemble_lk(std::shared_ptr<const ChannelLayout> layout, const KpParameters& params,
                              const std::vector<double>& potential, const CrystalFrame& frame = {});

/// Per-channel-node Pikus-Bir terms from a strain field on the same grid.
PikusBirTerms pikus_bir_terms(const StrainField& eps, const ChannelLayout& layout, double av, double b, double d);

void add_strain(SparseHamiltonian& H, const PikusBirTerms& pb);
/// Strain via the rotated deformation tensor; equivalent to add_strain in crystal-aligned frames.
void add_strain_tensor(SparseHamiltonian& H, const StrainField& eps, double av, double b, double d);
/// Picks the template route in crystal-aligned frames and the tensor route otherwise.
void add_strain_field(SparseHamiltonian& H, const StrainField& eps, double av, double b, double d);

/// 2 kappa muB J.B on every node.
void add_zeeman(SparseHamiltonian& H, const MagneticFieldSpec& B, double kappa);
Block6 zeeman_block(const Vec3& B, double kappa);

/// Linear Peierls terms T1 sum_ij D^{ab}_ij {A_i, k_j} with bond-midpoint A.
void add_vector_potential(SparseHamiltonian& H, const MagneticFieldSpec& B);

/// Zeeman plus vector potential.
void add_magnetic(SparseHamiltonian& H, const MagneticFieldSpec& B);

}  // namespace holespin
