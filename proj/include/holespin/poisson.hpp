#pragma once

#include "holespin/device.hpp"
#include "holespin/eigensolver.hpp"
#include "holespin/fields.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace holespin {

using PotentialField = ScalarField;

/// Charge density components in e/nm^3 on the full grid (positive for holes and ionised donors).
struct ChargeDensityField {
    Grid grid;
    std::vector<double> quantum, dopant, semiclassical;

    static ChargeDensityField zero(const Grid& g);
    double total(std::size_t node) const { return quantum[node] + dopant[node] + semiclassical[node]; }
    std::vector<double> total() const;
    /// Converts a density in e/nm^3 to C/m^3.
    static double to_si(double e_per_nm3);
};

/// rho_q = sum_n f_n sum_b |psi_nb|^2 on channel nodes. Occupations must be non-negative.
ChargeDensityField quantum_hole_density(const std::vector<SpinorState>& states, const std::vector<double>& occupations,
                                        const Grid& grid);

/// Fully ionised dopants, semiconductor nodes only.
ChargeDensityField dopant_density(const Grid& grid, const RegionMap& map);

/// Boltzmann carriers in lead-extension nodes with the Fermi level at 0 V, capped at 10x the doping.
ChargeDensityField semiclassical_density(const std::vector<double>& phi, const Grid& grid, const RegionMap& map,
                                         double temperature);

struct PoissonSolveInfo {
    int newton_iterations = 0;
    double residual = 0.0;
};

class PoissonSystem {
public:
    Grid grid;
    std::vector<double> eps_r;               // per node
    std::vector<double> control_volume;      // per node, nm^3
    std::vector<std::uint8_t> dirichlet;     // per node
    std::vector<double> dirichlet_value;     // per node, V
    std::vector<long> free_index;            // node -> unknown or -1
    std::vector<std::size_t> free_nodes;
    Eigen::SparseMatrix<double> A;           // free-free block, symmetric positive definite
    Eigen::VectorXd boundary_rhs;            // coupling of free rows to Dirichlet values
    std::vector<double> lead_doping_cm3;     // per node; non-zero only in lead extensions

    /// Overwrites all Dirichlet values from a new bias without reassembling.
    void set_bias(const BiasPoint& bias);

    /// Linear solve for a fixed charge density (e/nm^3 per node).
    PotentialField solve(const std::vector<double>& rho) const;
    /// Solve with fixed charge plus the self-consistent semiclassical lead charge.
    PotentialField solve_nonlinear(const std::vector<double>& rho_fixed, double temperature,
                                   const std::vector<double>* initial = nullptr, PoissonSolveInfo* info = nullptr) const;
    /// Relative residual of the discrete equation for a potential and total density.
    double residual(const std::vector<double>& phi, const std::vector<double>& rho) const;

    bool has_leads() const;

private:
    struct Cache;
    std::shared_ptr<Cache> cache_;
    std::vector<std::pair<std::string, std::vector<std::size_t>>> electrode_nodes_;
    friend PoissonSystem assemble_poisson(const Grid&, const RegionMap&, const DeviceGeometry&, const BiasPoint&);
};

/// Finite-volume operator with harmonic-mean face permittivity, electrode Dirichlet nodes eliminated and
/// homogeneous Neumann conditions elsewhere. Rejects configurations without any Dirichlet node.
PoissonSystem assemble_poisson(const Grid& grid, const RegionMap& map, const DeviceGeometry& geometry,
                               const BiasPoint& bias);

/// Convenience form of PoissonSystem::solve.
PotentialField solve_poisson(const PoissonSystem& op, const ChargeDensityField& rho);

}  // namespace holespin
