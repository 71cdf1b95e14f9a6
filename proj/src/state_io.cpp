// State container layout (little endian, native doubles):
//   char[8]  "HSQSTATE"
//   u32      version (1)
//   f64[3]   grid origin, f64[3] spacing, i32[3] node counts
//   u64      channel node count C, then u64[C] grid indices
//   f64[N]   potential (N = node count)
//   f64[5]   V_plunger, V_left, V_right, V_source, V_drain
//   u64      offset count, then per offset: u64 name length, bytes, f64 value
//   f64[3]   B, f64[3] gauge origin
//   u8       converged, i32 iterations
//   u64      state count S; per state: f64 energy, f64 residual, f64 occupation, f64[2*6*C] psi (re, im)
//   u64      trace length T, f64[T] residuals, f64[T] ground energies
#include "holespin/errors.hpp"
#include "holespin/scf.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace holespin {

namespace {

constexpr char kMagic[8] = {'H', 'S', 'Q', 'S', 'T', 'A', 'T', 'E'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
    }
    template <class T>
    void put(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void put_bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), std::streamsize(n)); }
    void finish(const std::string& path) {
        out_.flush();
        if (!out_) throw IoError("write failure on '" + path + "'");
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw IoError("cannot open '" + path + "'");
    }
    template <class T>
    T get() {
        T v;
        get_bytes(&v, sizeof(T));
        return v;
    }
    void get_bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), std::streamsize(n));
        if (!in_) throw IoError(path_ + ": truncated state file");
    }
    std::uint64_t get_count(std::uint64_t limit) {
        const auto n = get<std::uint64_t>();
        if (n > limit) throw IoError(path_ + ": corrupt state file (implausible count)");
        return n;
    }

private:
    std::ifstream in_;
    std::string path_;
};

}  // namespace

void save_state(const std::string& path, const ConvergedState& st) {
    if (st.states.empty()) throw InvalidInput("cannot save a state without eigenpairs");
    const auto& lay = *st.states.front().layout;
    const Grid& g = st.potential.grid;
    if (!lay.grid.same_as(g)) throw InvalidInput("state layout and potential grid differ");
    Writer w(path);
    w.put_bytes(kMagic, 8);
    w.put(kVersion);
    for (int d = 0; d < 3; ++d) w.put(g.origin[d]);
    for (int d = 0; d < 3; ++d) w.put(g.spacing[d]);
    for (int d = 0; d < 3; ++d) w.put(std::int32_t(g.n[d]));
    w.put(std::uint64_t(lay.nodes.size()));
    for (auto n : lay.nodes) w.put(std::uint64_t(n));
    w.put_bytes(st.potential.values.data(), st.potential.values.size() * sizeof(double));
    for (double v : {st.bias.V_plunger, st.bias.V_left, st.bias.V_right, st.bias.V_source, st.bias.V_drain}) w.put(v);
    w.put(std::uint64_t(st.bias.workfunction_offset.size()));
    for (const auto& [k, v] : st.bias.workfunction_offset) {
        w.put(std::uint64_t(k.size()));
        w.put_bytes(k.data(), k.size());
        w.put(v);
    }
    for (int d = 0; d < 3; ++d) w.put(st.field.B[d]);
    for (int d = 0; d < 3; ++d) w.put(st.field.gauge_origin[d]);
    w.put(std::uint8_t(st.converged ? 1 : 0));
    w.put(std::int32_t(st.iterations));
    w.put(std::uint64_t(st.states.size()));
    for (std::size_t s = 0; s < st.states.size(); ++s) {
        w.put(st.states[s].energy);
        w.put(st.states[s].residual);
        w.put(s < st.occupations.size() ? st.occupations[s] : 0.0);
        w.put_bytes(st.states[s].psi.data(), std::size_t(st.states[s].psi.size()) * sizeof(cplx));
    }
    w.put(std::uint64_t(st.trace.size()));
    w.put_bytes(st.trace.data(), st.trace.size() * sizeof(double));
    std::vector<double> et = st.energy_trace;
    et.resize(st.trace.size(), 0.0);
    w.put_bytes(et.data(), et.size() * sizeof(double));
    w.finish(path);
}

ConvergedState load_state(const std::string& path, const Device* expected) {
    Reader r(path);
    char magic[8];
    r.get_bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw IoError(path + ": not a state file");
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) throw IoError(path + ": unsupported state version " + std::to_string(version));
    Grid g;
    for (int d = 0; d < 3; ++d) g.origin[d] = r.get<double>();
    for (int d = 0; d < 3; ++d) g.spacing[d] = r.get<double>();
    for (int d = 0; d < 3; ++d) g.n[d] = r.get<std::int32_t>();
    for (int d = 0; d < 3; ++d)
        if (g.n[d] < 1 || g.n[d] > 100000) throw IoError(path + ": corrupt grid header");
    if (expected && !expected->grid.same_as(g, 0.0)) throw InvalidInput(path + ": state grid does not match the device grid");
    const auto C = r.get_count(g.size());
    std::vector<std::size_t> nodes(C);
    for (auto& n : nodes) n = std::size_t(r.get<std::uint64_t>());
    if (expected && nodes != expected->map.channel_nodes)
        throw InvalidInput(path + ": state channel mask does not match the device");
    auto layout = ChannelLayout::from_nodes(g, std::move(nodes));

    ConvergedState st;
    st.potential.grid = g;
    st.potential.values.resize(g.size());
    r.get_bytes(st.potential.values.data(), g.size() * sizeof(double));
    st.bias.V_plunger = r.get<double>();
    st.bias.V_left = r.get<double>();
    st.bias.V_right = r.get<double>();
    st.bias.V_source = r.get<double>();
    st.bias.V_drain = r.get<double>();
    const auto noff = r.get_count(64);
    for (std::uint64_t i = 0; i < noff; ++i) {
        std::string k(r.get_count(256), '\0');
        r.get_bytes(k.data(), k.size());
        st.bias.workfunction_offset[k] = r.get<double>();
    }
    for (int d = 0; d < 3; ++d) st.field.B[d] = r.get<double>();
    for (int d = 0; d < 3; ++d) st.field.gauge_origin[d] = r.get<double>();
    st.converged = r.get<std::uint8_t>() != 0;
    st.iterations = r.get<std::int32_t>();
    const auto S = r.get_count(1024);
    for (std::uint64_t s = 0; s < S; ++s) {
        SpinorState sp;
        sp.energy = r.get<double>();
        sp.residual = r.get<double>();
        st.occupations.push_back(r.get<double>());
        sp.psi.resize(long(6 * C));
        r.get_bytes(sp.psi.data(), 6 * C * sizeof(cplx));
        sp.layout = layout;
        st.states.push_back(std::move(sp));
    }
    const auto T = r.get_count(1u << 24);
    st.trace.resize(T);
    st.energy_trace.resize(T);
    r.get_bytes(st.trace.data(), T * sizeof(double));
    r.get_bytes(st.energy_trace.data(), T * sizeof(double));
    return st;
}

}  // namespace holespin
