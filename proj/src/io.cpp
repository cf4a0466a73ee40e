#include "vsl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vsl/error.hpp"

namespace vsl {

namespace {

constexpr char kMagic[8] = {'V', 'S', 'L', 'F', 'I', 'E', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

class Csv {
public:
    explicit Csv(std::initializer_list<const char*> header) {
        bool first = true;
        for (const char* h : header) {
            if (!first) out_ += ',';
            out_ += h;
            first = false;
        }
        out_ += '\n';
        width_ = header.size();
    }
    Csv& add(double v) { return cell(format_double(v)); }
    Csv& add(long v) { return cell(std::to_string(v)); }
    Csv& add(int v) { return cell(std::to_string(v)); }
    Csv& add(std::size_t v) { return cell(std::to_string(v)); }
    void end_row() {
        if (col_ != width_) throw Error(ErrorKind::Io, "csv row has the wrong number of columns");
        out_ += '\n';
        col_ = 0;
    }
    std::string str() const { return out_; }

private:
    Csv& cell(const std::string& s) {
        if (col_++ > 0) out_ += ',';
        out_ += s;
        return *this;
    }
    std::string out_;
    std::size_t width_ = 0;
    std::size_t col_ = 0;
};

template <class T>
void put(std::string& buf, T v) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U u;
    std::memcpy(&u, &v, sizeof u);
    for (std::size_t b = 0; b < sizeof u; ++b) buf.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
}

template <class T>
T get(const std::string& buf, std::size_t& pos) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    if (pos + sizeof(U) > buf.size()) throw Error(ErrorKind::Io, "field file truncated");
    U u = 0;
    for (std::size_t b = 0; b < sizeof u; ++b) u |= static_cast<U>(static_cast<unsigned char>(buf[pos + b])) << (8 * b);
    pos += sizeof u;
    T v;
    std::memcpy(&v, &u, sizeof v);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string diagnostics_csv(std::span<const DiagnosticsRecord> records) {
    Csv csv{"t",           "nu",          "energy",         "energy_L",        "energy_S",  "enstrophy_L",
            "enstrophy_S", "grad_u_sq",   "diss",           "sup_d1u1",        "d1u1_origin", "omegaL_inf",
            "uS_inf",      "omegaS_inf",  "grad_omegaL_l2", "grad_omegaL_inf"};
    for (const auto& r : records) {
        csv.add(r.time).add(r.nu).add(r.energy).add(r.energy_L).add(r.energy_S).add(r.enstrophy_L);
        csv.add(r.enstrophy_S).add(r.grad_u_sq).add(r.dissipation).add(r.sup_d1u1).add(r.d1u1_origin);
        csv.add(r.omegaL_inf).add(r.uS_inf).add(r.omegaS_inf).add(r.grad_omegaL_l2).add(r.grad_omegaL_inf);
        csv.end_row();
    }
    return csv.str();
}

std::string gaps_csv(std::span<const GapRecord> records) {
    Csv csv{"t", "nu", "I_L", "I_S", "II_L", "II_S"};
    for (const auto& r : records) {
        csv.add(r.time).add(r.nu).add(r.I_L).add(r.I_S).add(r.II_L).add(r.II_S);
        csv.end_row();
    }
    return csv.str();
}

std::string tracers_csv(std::span<const TracerEnsemble> snapshots) {
    Csv csv{"seed", "x1", "x2", "t", "eta1", "eta2", "D11", "D12", "D21", "D22", "det"};
    for (const auto& e : snapshots)
        for (std::size_t s = 0; s < e.size(); ++s) {
            const Matrix2& F = e.deformations[s];
            csv.add(s).add(e.seeds[s][0]).add(e.seeds[s][1]).add(e.time).add(e.positions[s][0]).add(e.positions[s][1]);
            csv.add(F[0][0]).add(F[0][1]).add(F[1][0]).add(F[1][1]).add(determinant(F));
            csv.end_row();
        }
    return csv.str();
}

std::string sweep_csv(std::span<const SweepResult> results) {
    Csv csv{"n",           "delta",      "a0_bar",         "N",          "dt",         "steps",
            "nu_n",        "t_n",        "ell_bar",        "u0_sq",      "uL0_sq",     "uS0_sq",
            "grad_u0_sq",  "mean_grad_sq", "D_n",          "S_n",        "omegaS0_sq", "enstrophy_smallscale_mean",
            "sup_d1u1",    "calE",       "amplification", "amplification_threshold", "energy_residual"};
    for (const auto& r : results) {
        csv.add(r.n).add(r.ladder.delta).add(r.ladder.a0_bar).add(r.N).add(r.dt).add(r.steps);
        csv.add(r.ladder.nu_n).add(r.ladder.t_n).add(r.ladder.ell_bar).add(r.u0_sq).add(r.uL0_sq).add(r.uS0_sq);
        csv.add(r.grad_u0_sq).add(r.mean_grad_sq).add(r.D_n).add(r.S_n).add(r.omegaS0_sq);
        csv.add(r.enstrophy_smallscale_mean).add(r.sup_d1u1_tx).add(r.calE).add(r.amplification);
        csv.add(r.amplification_threshold).add(r.energy_residual);
        csv.end_row();
    }
    return csv.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_field(const std::filesystem::path& path, const ScalarField& field, double time, FieldId id) {
    std::string buf(kMagic, sizeof kMagic);
    put(buf, kVersion);
    put(buf, static_cast<std::uint32_t>(field.grid().N()));
    put(buf, field.grid().L());
    put(buf, time);
    put(buf, static_cast<std::uint32_t>(id));
    put(buf, std::uint32_t{0});
    buf.reserve(buf.size() + 8 * field.values().size());
    for (double v : field.values()) put(buf, v);
    write_text(path, buf);
}

FieldFile read_field(const std::filesystem::path& path) {
    const std::string buf = read_text(path);
    if (buf.size() < sizeof kMagic || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
        throw Error(ErrorKind::Io, path.string() + " is not a field file");
    std::size_t pos = sizeof kMagic;
    if (get<std::uint32_t>(buf, pos) != kVersion) throw Error(ErrorKind::Io, "unsupported field file version");
    const auto n = get<std::uint32_t>(buf, pos);
    const double L = get<double>(buf, pos);
    const double time = get<double>(buf, pos);
    const auto id = static_cast<FieldId>(get<std::uint32_t>(buf, pos));
    get<std::uint32_t>(buf, pos);
    const TorusGrid grid(L, static_cast<int>(n));
    if (buf.size() != pos + 8 * grid.size()) throw Error(ErrorKind::Io, "field file size does not match its header");
    std::vector<double> values(grid.size());
    for (auto& v : values) v = get<double>(buf, pos);
    return FieldFile{id, time, ScalarField(grid, std::move(values))};
}

nlohmann::json ladder_json(const ParameterLadder& p) {
    nlohmann::json j;
    j["n"] = p.n;
    j["delta"] = p.delta;
    j["kappa"] = p.kappa;
    j["c_small"] = p.c_small;
    j["a0_bar"] = p.a0_bar;
    j["ell_bar"] = p.ell_bar;
    j["gamma"] = p.gamma;
    j["L"] = p.L;
    j["ell"] = p.ell;
    j["ell_tilde"] = p.ell_tilde;
    j["q"] = std::isfinite(p.q) ? nlohmann::json(p.q) : nlohmann::json("inf");
    j["M"] = p.M;
    j["nu_n"] = p.nu_n;
    j["t_n"] = p.t_n;
    j["delta_prime"] = p.t_n;
    j["radius_D"] = p.radius_D;
    j["radius_D_prime"] = p.radius_D_prime;
    j["omega_inf"] = p.omega_inf;
    j["gamma_clamped"] = p.gamma_clamped;
    const auto& c = p.constants;
    j["constants"] = {{"nu_prefactor", c.nu_prefactor}, {"c0", c.c0},   {"C", c.C},
                      {"C1", c.C1},                     {"C2", c.C2},   {"C3", c.C3},
                      {"c_ball", c.c_ball}};
    return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::map<std::string, std::string> parse_config(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string{};
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Usage, "config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw Error(ErrorKind::Usage, "config line " + std::to_string(lineno) + ": empty key");
        if (!out.emplace(key, value).second) throw Error(ErrorKind::Usage, "config key '" + key + "' repeated");
    }
    return out;
}

std::string content_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace vsl
