#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace holespin {

using Vec3 = Eigen::Vector3d;

enum class MaterialRole { Semiconductor, Oxide, Metal };

struct MaterialRecord {
    std::string name;
    double young_E = 0.0;        // GPa
    double thermal_alpha = 0.0;  // 1/K
    double poisson_nu = 0.0;
    double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0;
    double delta0_SO = 0.0;  // eV
    double kappa = 0.0;
    double def_pot_av = 0.0, def_pot_b = 0.0, def_pot_d = 0.0;  // eV
    double rel_permittivity = 1.0;
    MaterialRole role = MaterialRole::Oxide;

    /// Throws InvalidInput when a record invariant is violated.
    void validate() const;
};

MaterialRecord silicon();
MaterialRecord silicon_dioxide();
MaterialRecord titanium_nitride();

/// Ordered set of materials addressed by name or index.
class MaterialTable {
public:
    MaterialTable();  // Si, SiO2, TiN defaults
    static MaterialTable empty();

    /// Adds or replaces a record with the same name.
    int set(const MaterialRecord& record);
    int index_of(const std::string& name) const;
    bool contains(const std::string& name) const;
    const MaterialRecord& at(int index) const { return records_.at(static_cast<std::size_t>(index)); }
    const MaterialRecord& at(const std::string& name) const { return at(index_of(name)); }
    std::size_t size() const { return records_.size(); }
    const std::vector<MaterialRecord>& records() const { return records_; }

private:
    std::vector<MaterialRecord> records_;
};

enum class RegionRole { Channel, Substrate, Oxide, Gate, LeadExtension };

const char* to_string(RegionRole role);
RegionRole region_role_from_string(const std::string& s);

struct BoxShape {
    Vec3 lo, hi;
};

/// Trapezoid in the y-z plane extruded along x. b_top = 0 gives a sharp apex.
struct PrismShape {
    double x0 = 0, x1 = 0;
    double y_center = 0;
    double z_base = 0;
    double height = 0;
    double base_width = 0;
    double top_width = 0;
};

using Shape = std::variant<BoxShape, PrismShape>;

bool shape_contains(const Shape& shape, const Vec3& p, double eps = 1e-9);

struct Region {
    std::string name;
    Shape shape;
    std::string material;
    double doping_cm3 = 0.0;  // net donors; negative for acceptors
    RegionRole role = RegionRole::Oxide;
    std::optional<int> priority;  // defaults to declaration order
};

enum class FaceSelect { Volume, XMin, XMax, YMin, YMax, ZMin, ZMax };

const char* to_string(FaceSelect f);
FaceSelect face_from_string(const std::string& s);

struct ElectrodeSpec {
    std::string name;    // plunger, left, right, source, drain
    std::string region;  // region providing the nodes
    FaceSelect face = FaceSelect::Volume;
};

struct DeviceGeometry {
    Vec3 domain_lo = Vec3::Zero();
    Vec3 domain_hi = Vec3::Zero();
    std::vector<Region> regions;
    std::vector<ElectrodeSpec> electrodes;
    MaterialTable materials;
    /// Nominal dot position used for summaries before a state exists.
    Vec3 dot_proxy = Vec3::Zero();

    void validate() const;
    /// Index of the owning region at p, or -1 if none. Throws on equal-priority overlap.
    int region_at(const Vec3& p) const;
    int region_index(const std::string& name) const;
};

/// Dimensions of the fin device family: two lateral gates around a plunger on an oxide-wrapped trapezoidal fin.
struct FinFetDimensions {
    double channel_length = 50.0;
    double lead_gate_length = 15.0;
    double plunger_length = 10.0;
    double gap_length = 5.0;
    double sd_length = 2.0;
    double substrate_height = 8.0;
    double fin_base = 28.0;
    double fin_top = 6.0;
    double fin_height = 15.0;
    double oxide_thickness = 4.0;
    double gate_thickness = 8.0;
    double lateral_margin = 5.0;
    double channel_doping_cm3 = -1e14;
    double sd_doping_cm3 = -1e20;
    double substrate_doping_cm3 = -1e14;
    std::string gate_material = "TiN";
};

FinFetDimensions geo1_dimensions();
/// 12 x 8 x 6 nm fin used by the fast tests.
FinFetDimensions test_fin_dimensions();

DeviceGeometry make_finfet(const FinFetDimensions& d, const MaterialTable& materials = MaterialTable());

/// Widens the domain by `extension` on both y sides, stretching every box that touches a y face.
DeviceGeometry extend_lateral(const DeviceGeometry& g, double extension);

struct Grid {
    Vec3 origin = Vec3::Zero();
    Vec3 spacing = Vec3::Constant(0.5);
    std::array<int, 3> n{1, 1, 1};

    std::size_t size() const { return std::size_t(n[0]) * n[1] * n[2]; }
    /// z fastest, then y, then x.
    std::size_t index(int i, int j, int k) const {
        return (std::size_t(i) * n[1] + j) * std::size_t(n[2]) + k;
    }
    std::array<int, 3> ijk(std::size_t idx) const {
        const int k = int(idx % n[2]);
        const std::size_t r = idx / n[2];
        return {int(r / n[1]), int(r % n[1]), k};
    }
    Vec3 position(int i, int j, int k) const {
        return origin + Vec3(i * spacing.x(), j * spacing.y(), k * spacing.z());
    }
    Vec3 position(std::size_t idx) const {
        auto c = ijk(idx);
        return position(c[0], c[1], c[2]);
    }
    bool contains(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < n[0] && j < n[1] && k < n[2];
    }
    double cell_volume() const { return spacing.prod(); }
    Vec3 extent_hi() const {
        return origin + Vec3((n[0] - 1) * spacing.x(), (n[1] - 1) * spacing.y(), (n[2] - 1) * spacing.z());
    }
    bool same_as(const Grid& o, double tol = 1e-12) const;
};

struct RegionMap {
    MaterialTable materials;
    std::vector<int> region;    // per node
    std::vector<int> material;  // per node
    std::vector<double> doping_cm3;
    std::vector<RegionRole> role;
    std::vector<std::uint8_t> channel_mask;
    std::vector<std::size_t> channel_nodes;  // grid indices of mask nodes, ascending
    std::vector<long> channel_index;         // grid index -> position in channel_nodes or -1
};

/// Rasterizes the geometry on a node lattice spanning the domain.
std::pair<Grid, RegionMap> build_grid(const DeviceGeometry& geometry, const Vec3& spacing);

/// Material of a node given as grid coordinates. Throws std::out_of_range outside the grid.
const MaterialRecord& material_lookup(const Grid& grid, const RegionMap& map, std::array<int, 3> node);

struct BiasPoint {
    double V_plunger = 0.0, V_left = 0.0, V_right = 0.0, V_source = 0.0, V_drain = 0.0;
    std::map<std::string, double> workfunction_offset;

    void validate() const;
    /// Applied voltage plus offset for a named electrode.
    double electrode_voltage(const std::string& name) const;
};

/// Convenience bundle: geometry plus its rasterization.
struct Device {
    DeviceGeometry geometry;
    Grid grid;
    RegionMap map;

    static Device build(const DeviceGeometry& g, const Vec3& spacing);
    /// Channel-mask volume in nm^3.
    double channel_volume() const;
};

}  // namespace holespin
