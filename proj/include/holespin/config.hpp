#pragma once

#include "holespin/device.hpp"
#include "holespin/elasticity.hpp"
#include "holespin/hamiltonian.hpp"
#include "holespin/metrics.hpp"
#include "holespin/scf.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace holespin {

enum class StrainMode { None, BC1, BC2, Import, Uniform };

struct StrainSpec {
    StrainMode mode = StrainMode::None;
    std::string path;                        // Import
    std::array<double, 6> uniform{};         // Uniform: xx, yy, zz, xy, xz, yz
    std::string label() const;
};

/// Parses "bc1", "bc2", "none", "uniform" or "import:<path>".
StrainSpec parse_strain_scenario(const std::string& s);

struct MagneticsConfig {
    double B = 0.1;                     // T, |B| for g extraction
    std::optional<Vec3> gauge_origin;   // nm; dot centroid when absent
    double dB = 1e-3;                   // T, finite-difference step
    bool self_consistent = true;        // B != 0 runs iterate the SCF from the B = 0 potential
    std::vector<Vec3> fields;           // extra fields solved by the solve command, T
};

enum class SweepAxis { Bias, BDirection, Geometry, Strain };

struct SweepPoint {
    std::string label;
    double V_plunger = 0.0;                 // Bias
    double theta_deg = 0.0, phi_deg = 0.0;  // BDirection
    FinFetDimensions dims;                  // Geometry
    StrainSpec strain;                      // Strain
};

struct SweepConfig {
    SweepAxis axis = SweepAxis::Bias;
    std::vector<SweepPoint> points;
};

struct RunConfig {
    std::string preset = "test_fin";  // test_fin, geo1 or custom
    FinFetDimensions dims = test_fin_dimensions();
    DeviceGeometry geometry;          // resolved geometry
    Vec3 spacing = Vec3::Constant(0.5);
    CrystalFrame frame;
    BiasPoint bias;
    ElasticityConfig elasticity;
    StrainSpec strain;
    ScfConfig scf;
    MagneticsConfig magnetics;
    RabiConfig rabi;
    std::optional<SweepConfig> sweep;
    std::string output_dir = "out";

    std::string canonical_json;  // normalised input, used for hashing
    std::string hash;            // SHA-256 of canonical_json

    /// Device rasterised with the configured spacing; `dims` overrides the configured dimensions.
    Device make_device() const;
    Device make_device(const FinFetDimensions& dims) const;
};

/// Parses a JSON document. Unknown keys and malformed values raise ConfigError with the key path.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

}  // namespace holespin
