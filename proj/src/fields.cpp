#include "holespin/fields.hpp"

#include "holespin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace holespin {

std::array<double, 6> StrainField::interpolate(const Vec3& p) const {
    std::array<int, 3> i0{};
    std::array<double, 3> t{};
    for (int d = 0; d < 3; ++d) {
        const double s = (p[d] - grid.origin[d]) / grid.spacing[d];
        if (s < -1e-9 || s > grid.n[d] - 1 + 1e-9) throw InvalidInput("point outside the strain grid");
        if (grid.n[d] == 1) {
            i0[d] = 0;
            t[d] = 0.0;
            continue;
        }
        int c = std::clamp(int(std::floor(s)), 0, grid.n[d] - 2);
        i0[d] = c;
        t[d] = std::clamp(s - c, 0.0, 1.0);
    }
    std::array<double, 6> out{};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
                const int ii = std::min(i0[0] + a, grid.n[0] - 1);
                const int jj = std::min(i0[1] + b, grid.n[1] - 1);
                const int kk = std::min(i0[2] + c, grid.n[2] - 1);
                const double w = (a ? t[0] : 1 - t[0]) * (b ? t[1] : 1 - t[1]) * (c ? t[2] : 1 - t[2]);
                if (w == 0.0) continue;
                const auto& v = values[grid.index(ii, jj, kk)];
                for (int q = 0; q < 6; ++q) out[q] += w * v[q];
            }
    return out;
}

void write_node_csv(const std::string& path, const Grid& grid, const std::vector<std::string>& names,
                    const std::vector<const double*>& columns, std::size_t stride) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    std::fputs("x_nm,y_nm,z_nm", f.get());
    for (const auto& n : names) std::fprintf(f.get(), ",%s", n.c_str());
    std::fputc('\n', f.get());
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const Vec3 p = grid.position(idx);
        std::fprintf(f.get(), "%.17g,%.17g,%.17g", p.x(), p.y(), p.z());
        for (const double* c : columns) std::fprintf(f.get(), ",%.17g", c[idx * stride]);
        std::fputc('\n', f.get());
    }
    if (std::ferror(f.get())) throw IoError("write failure on '" + path + "'");
}

void export_strain(const std::string& path, const StrainField& eps) {
    std::vector<const double*> cols;
    for (int q = 0; q < 6; ++q) cols.push_back(eps.values.empty() ? nullptr : &eps.values[0][q]);
    write_node_csv(path, eps.grid, {"exx", "eyy", "ezz", "exy", "exz", "eyz"}, cols, 6);
}

void export_scalar(const std::string& path, const ScalarField& f, const std::string& column) {
    write_node_csv(path, f.grid, {column}, {f.values.data()}, 1);
}

namespace {

Grid infer_grid(const std::vector<Vec3>& pts, const std::string& path) {
    Grid g;
    if (pts.empty()) throw IoError(path + ": no data rows");
    std::array<std::vector<double>, 3> uniq;
    for (int d = 0; d < 3; ++d) {
        std::vector<double> v;
        v.reserve(pts.size());
        for (const auto& p : pts) v.push_back(p[d]);
        std::sort(v.begin(), v.end());
        for (double x : v)
            if (uniq[d].empty() || std::abs(x - uniq[d].back()) > 1e-6) uniq[d].push_back(x);
        g.n[d] = int(uniq[d].size());
        g.origin[d] = uniq[d].front();
        g.spacing[d] = g.n[d] > 1 ? (uniq[d].back() - uniq[d].front()) / (g.n[d] - 1) : 1.0;
    }
    if (g.size() != pts.size()) throw IoError(path + ": nodes do not form a complete structured grid");
    for (std::size_t idx = 0; idx < pts.size(); ++idx) {
        if ((g.position(idx) - pts[idx]).cwiseAbs().maxCoeff() > 1e-6)
            throw IoError(path + ": line " + std::to_string(idx + 2) + " breaks the z-fastest node ordering");
    }
    return g;
}

}  // namespace

StrainField import_strain(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x_nm,y_nm,z_nm,exx,eyy,ezz,exy,exz,eyz") throw IoError(path + ": line 1: unexpected header");
    std::vector<Vec3> pts;
    StrainField out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 9> v{};
        std::size_t col = 0, pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            const std::string tok = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (col >= 9) throw IoError(path + ": line " + std::to_string(lineno) + ": expected 9 columns");
            char* end = nullptr;
            v[col] = std::strtod(tok.c_str(), &end);
            if (tok.empty() || end != tok.c_str() + tok.size())
                throw IoError(path + ": line " + std::to_string(lineno) + ": malformed number '" + tok + "'");
            ++col;
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (col != 9) throw IoError(path + ": line " + std::to_string(lineno) + ": expected 9 columns");
        pts.emplace_back(v[0], v[1], v[2]);
        out.values.push_back({v[3], v[4], v[5], v[6], v[7], v[8]});
    }
    out.grid = infer_grid(pts, path);
    return out;
}

StrainField import_strain(const std::string& path, const Grid& expected) {
    StrainField f = import_strain(path);
    if (!f.grid.same_as(expected, 1e-6)) throw InvalidInput(path + ": strain grid does not match the expected grid");
    f.grid = expected;
    return f;
}

}  // namespace holespin
