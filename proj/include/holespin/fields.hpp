#pragma once

#include "holespin/device.hpp"

#include <array>
#include <string>
#include <vector>

namespace holespin {

/// Six symmetric-tensor components per node, order xx, yy, zz, xy, xz, yz (tensor shear, not engineering).
struct StrainField {
    Grid grid;
    std::vector<std::array<double, 6>> values;

    static StrainField zero(const Grid& g) { return {g, std::vector<std::array<double, 6>>(g.size(), {0, 0, 0, 0, 0, 0})}; }
    static StrainField uniform(const Grid& g, const std::array<double, 6>& e) {
        return {g, std::vector<std::array<double, 6>>(g.size(), e)};
    }
    /// Trilinear interpolation of all components at p; throws if p lies outside the grid.
    std::array<double, 6> interpolate(const Vec3& p) const;
};

/// Stress in Pa, same component order as StrainField.
struct StressField {
    Grid grid;
    std::vector<std::array<double, 6>> values;
};

/// One scalar per node (potential in V, density in e/nm^3, ...).
struct ScalarField {
    Grid grid;
    std::vector<double> values;
};

/// CSV with header x_nm,y_nm,z_nm,<names...>, one node per row, z fastest.
void write_node_csv(const std::string& path, const Grid& grid, const std::vector<std::string>& names,
                    const std::vector<const double*>& columns, std::size_t stride);

void export_strain(const std::string& path, const StrainField& eps);
/// Reads a strain CSV; the grid is reconstructed from the coordinates. Throws IoError naming the line.
StrainField import_strain(const std::string& path);
/// As above, but additionally requires the file grid to match `expected`.
StrainField import_strain(const std::string& path, const Grid& expected);

void export_scalar(const std::string& path, const ScalarField& f, const std::string& column);

}  // namespace holespin
