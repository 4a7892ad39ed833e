#include "nsm/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "nsm/spectral_ops.hpp"

namespace nsm {

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

SpectralField vector_potential(const SpectralField& B) {
    const Box& box = B.box();
    const double l2 = l2_norm(B);
    const double scale = std::max(1.0, l2);
    if (mean_mode_magnitude(B) > 1e-10 * scale)
        throw NonzeroMeanMode("vector_potential: B has a mean mode");
    if (divergence_l2(B) > 1e-10 * scale)
        throw NonSolenoidal("vector_potential: B is not divergence-free");
    const double fs = box.freq_scale();
    SpectralField A(box);
    for_each_mode(box, [&](std::int64_t flat, int k1, int k2, int k3) {
        const double xi2 = fs * fs * (k1 * k1 + k2 * k2 + k3 * k3);
        if (xi2 == 0.0) return;
        const double xi[3] = {fs * k1, fs * k2, fs * k3};
        const cplx b[3] = {B.at(0, flat), B.at(1, flat), B.at(2, flat)};
        // A = i xi x B / |xi|^2
        const cplx ix(0.0, 1.0 / xi2);
        A.at(0, flat) = ix * (xi[1] * b[2] - xi[2] * b[1]);
        A.at(1, flat) = ix * (xi[2] * b[0] - xi[0] * b[2]);
        A.at(2, flat) = ix * (xi[0] * b[1] - xi[1] * b[0]);
    });
    return A;
}

double magnetic_helicity(const SpectralField& B) {
    return inner_l2(vector_potential(B), B);
}

double cross_helicity(const SpectralField& v, const SpectralField& B) {
    return inner_l2(v, B);
}

double total_energy(const SimState& s) {
    const double nv = l2_norm(s.v), nb = l2_norm(s.B);
    double e = nv * nv + nb * nb;
    if (uses_maxwell(s.variant)) {
        const double ne = l2_norm(s.E);
        e += ne * ne;
    }
    return 0.5 * e;
}

double helicity_rate(const SimState& s, const PhysicalParams& p) {
    if (uses_maxwell(s.variant)) return -2.0 / p.sigma * inner_l2(s.j, s.B);
    return -2.0 / p.sigma * inner_l2(frac_laplacian(vector_potential(s.B), p.beta), s.B);
}

namespace {

std::string trim_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    std::string out = buf;
    for (char& ch : out)
        if (ch == '.' || ch == '-' || ch == '+') ch = '_';
    return out;
}

double field_norm(const SpectralField& f, const NormSpec& spec) {
    if (spec.kind == "l2") return l2_norm(f);
    if (spec.kind == "sobolev") return sobolev_norm(f, spec.index, spec.homogeneous);
    if (spec.kind == "lp") {
        const double p = (spec.index <= 0.0) ? std::numeric_limits<double>::infinity()
                                             : spec.index;
        return lp_norm_physical(f, p);
    }
    throw ConfigError("norm spec: unknown kind '" + spec.kind + "'");
}

}  // namespace

std::string NormSpec::key() const {
    if (!label.empty()) return label;
    std::string k = field + "_" + kind;
    if (kind != "l2") {
        k += "_" + trim_number(index);
        if (kind == "sobolev" && homogeneous) k += "h";
    }
    return k;
}

double evaluate_norm(const SimState& s, const NormSpec& spec) {
    std::vector<const SpectralField*> fs;
    if (spec.field == "v") fs = {&s.v};
    else if (spec.field == "E") fs = {&s.E};
    else if (spec.field == "B") fs = {&s.B};
    else if (spec.field == "j") fs = {&s.j};
    else if (spec.field == "vEB") fs = {&s.v, &s.E, &s.B};
    else if (spec.field == "vEj") fs = {&s.v, &s.E, &s.j};
    else throw ConfigError("norm spec: unknown field '" + spec.field + "'");
    if (fs.size() > 1 && spec.kind == "lp")
        throw ConfigError("norm spec: lp norms apply to single fields");
    double acc = 0.0;
    for (const SpectralField* f : fs) {
        const double n = field_norm(*f, spec);
        acc += n * n;
    }
    return std::sqrt(acc);
}

DiagnosticsRecord record(const SimState& s, const PhysicalParams& p,
                         const std::vector<NormSpec>& extra) {
    DiagnosticsRecord r;
    r.t = s.t;
    r.energy = total_energy(s);
    {
        const double nv = (p.alpha == 0.0) ? l2_norm(s.v) : sobolev_norm(s.v, p.alpha, true);
        r.dissipation_v = p.nu * nv * nv;
    }
    if (uses_maxwell(s.variant)) {
        const double nj = l2_norm(s.j);
        r.dissipation_j = nj * nj / p.sigma;
    } else {
        const double nb = (p.beta == 0.0) ? l2_norm(s.B) : sobolev_norm(s.B, p.beta, true);
        r.dissipation_j = nb * nb / p.sigma;
    }
    r.diss_v_integral = s.diss_v_integral;
    r.diss_j_integral = s.diss_j_integral;
    r.helicity = magnetic_helicity(s.B);
    r.cross_helicity = cross_helicity(s.v, s.B);
    r.helicity_rate = helicity_rate(s, p);
    r.div_v = divergence_l2(s.v);
    r.div_E = divergence_l2(s.E);
    r.div_B = divergence_l2(s.B);
    r.div_j = divergence_l2(s.j);
    r.ohm_iterations = s.last_ohm_iterations;
    for (const NormSpec& spec : extra) r.norms[spec.key()] = evaluate_norm(s, spec);
    return r;
}

double energy_balance_residual(const SimState& before, const SimState& after) {
    const double e0 = total_energy(before);
    const double e1 = total_energy(after);
    const double d = (after.diss_v_integral - before.diss_v_integral) +
                     (after.diss_j_integral - before.diss_j_integral);
    return std::abs(e1 + d - e0) / std::max(e0, 1e-300);
}

double energy_balance_residual_trapezoid(const std::vector<DiagnosticsRecord>& series) {
    if (series.size() < 2)
        throw ConfigError("energy balance: need at least two records");
    double d = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double dt = series[i].t - series[i - 1].t;
        d += 0.5 * dt *
             (series[i].dissipation_v + series[i - 1].dissipation_v +
              series[i].dissipation_j + series[i - 1].dissipation_j);
    }
    const double e0 = series.front().energy;
    return std::abs(series.back().energy + d - e0) / std::max(e0, 1e-300);
}

namespace {

const char* kCoreColumns =
    "t,energy,dissipation_v,dissipation_j,diss_v_integral,diss_j_integral,"
    "helicity,cross_helicity,helicity_rate,div_v,div_E,div_B,div_j,ohm_iterations";

void core_values(std::ostream& os, const DiagnosticsRecord& r) {
    os << format_g17(r.t) << ',' << format_g17(r.energy) << ',' << format_g17(r.dissipation_v)
       << ',' << format_g17(r.dissipation_j) << ',' << format_g17(r.diss_v_integral) << ','
       << format_g17(r.diss_j_integral) << ',' << format_g17(r.helicity) << ','
       << format_g17(r.cross_helicity) << ',' << format_g17(r.helicity_rate) << ','
       << format_g17(r.div_v) << ',' << format_g17(r.div_E) << ',' << format_g17(r.div_B) << ','
       << format_g17(r.div_j) << ',' << r.ohm_iterations;
}

void check_uniform_keys(const std::vector<DiagnosticsRecord>& series) {
    for (std::size_t i = 1; i < series.size(); ++i) {
        if (series[i].norms.size() != series[0].norms.size())
            throw ConfigError("diagnostics writer: records disagree on norm columns");
        auto a = series[0].norms.begin();
        for (auto& kv : series[i].norms) {
            if (kv.first != a->first)
                throw ConfigError("diagnostics writer: records disagree on norm columns");
            ++a;
        }
    }
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& series) {
    os << "# schema nsm-diagnostics v1\n";
    os << kCoreColumns;
    if (!series.empty()) {
        check_uniform_keys(series);
        for (auto& kv : series[0].norms) os << ',' << kv.first;
    }
    os << '\n';
    for (const DiagnosticsRecord& r : series) {
        core_values(os, r);
        for (auto& kv : r.norms) os << ',' << format_g17(kv.second);
        os << '\n';
    }
}

void write_jsonl(std::ostream& os, const std::vector<DiagnosticsRecord>& series) {
    for (const DiagnosticsRecord& r : series) {
        os << "{\"t\":" << format_g17(r.t) << ",\"energy\":" << format_g17(r.energy)
           << ",\"dissipation_v\":" << format_g17(r.dissipation_v)
           << ",\"dissipation_j\":" << format_g17(r.dissipation_j)
           << ",\"diss_v_integral\":" << format_g17(r.diss_v_integral)
           << ",\"diss_j_integral\":" << format_g17(r.diss_j_integral)
           << ",\"helicity\":" << format_g17(r.helicity)
           << ",\"cross_helicity\":" << format_g17(r.cross_helicity)
           << ",\"helicity_rate\":" << format_g17(r.helicity_rate)
           << ",\"div_v\":" << format_g17(r.div_v) << ",\"div_E\":" << format_g17(r.div_E)
           << ",\"div_B\":" << format_g17(r.div_B) << ",\"div_j\":" << format_g17(r.div_j)
           << ",\"ohm_iterations\":" << r.ohm_iterations;
        os << ",\"norms\":{";
        bool first = true;
        for (auto& kv : r.norms) {
            if (!first) os << ',';
            first = false;
            os << '"' << kv.first << "\":" << format_g17(kv.second);
        }
        os << "}}\n";
    }
}

}  // namespace nsm
