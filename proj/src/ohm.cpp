#include "nsm/ohm.hpp"

#include <cmath>

namespace nsm {

std::array<double, 3> HallMatrixPoint::apply(const std::array<double, 3>& j) const {
    return {j[0] + kappa * (j[1] * B[2] - j[2] * B[1]),
            j[1] + kappa * (j[2] * B[0] - j[0] * B[2]),
            j[2] + kappa * (j[0] * B[1] - j[1] * B[0])};
}

double HallMatrixPoint::det() const {
    const double b2 = B[0] * B[0] + B[1] * B[1] + B[2] * B[2];
    return kappa * kappa * b2 + 1.0;
}

std::array<double, 3> HallMatrixPoint::solve(const std::array<double, 3>& r) const {
    // Adjugate closed form: M^-1 r = (r - kappa (r x B) + kappa^2 (B.r) B) / det.
    const double d = det();
    const double br = B[0] * r[0] + B[1] * r[1] + B[2] * r[2];
    const double k2br = kappa * kappa * br;
    return {(r[0] - kappa * (r[1] * B[2] - r[2] * B[1]) + k2br * B[0]) / d,
            (r[1] - kappa * (r[2] * B[0] - r[0] * B[2]) + k2br * B[1]) / d,
            (r[2] - kappa * (r[0] * B[1] - r[1] * B[0]) + k2br * B[2]) / d};
}

namespace {

enum class PointOp { Apply, Solve };

SpectralField hall_pointwise(const SpectralField& jr, const SpectralField& B, double kappa,
                             PointOp op) {
    require_same_box(jr.box(), B.box(), "hall_matrix");
    SpectralField jm = jr;
    apply_dealias_mask(jm);
    SpectralField Bm = B;
    apply_dealias_mask(Bm);
    PhysicalField jp = to_physical(jm);
    PhysicalField Bp = to_physical(Bm);
    PhysicalField out(jr.box());
    const std::int64_t m = jr.size();
    for (std::int64_t i = 0; i < m; ++i) {
        HallMatrixPoint M{kappa, {Bp.comp[0][i], Bp.comp[1][i], Bp.comp[2][i]}};
        const std::array<double, 3> x{jp.comp[0][i], jp.comp[1][i], jp.comp[2][i]};
        const auto y = (op == PointOp::Apply) ? M.apply(x) : M.solve(x);
        out.comp[0][i] = y[0];
        out.comp[1][i] = y[1];
        out.comp[2][i] = y[2];
    }
    SpectralField res = to_spectral(out);
    apply_dealias_mask(res);
    return res;
}

}  // namespace

SpectralField hall_matrix_apply(const SpectralField& j, const SpectralField& B, double kappa) {
    return hall_pointwise(j, B, kappa, PointOp::Apply);
}

SpectralField hall_matrix_solve(const SpectralField& r, const SpectralField& B, double kappa) {
    return hall_pointwise(r, B, kappa, PointOp::Solve);
}

OhmSolveResult solve_ohm_implicit(const SpectralField& v, const SpectralField& E,
                                  const SpectralField& B, const PhysicalParams& p, double m,
                                  const OhmSolveOptions& opts) {
    require_same_box(v.box(), E.box(), "solve_ohm_implicit");
    require_same_box(v.box(), B.box(), "solve_ohm_implicit");

    // rhs = sigma (c E + P T_m (v x B))
    SpectralField rhs = truncate(leray_project(cross(v, B)), m);
    rhs *= p.sigma;
    {
        SpectralField Ec = E;
        Ec *= p.sigma * p.c;
        rhs += Ec;
    }
    const double rhs_norm = std::max(l2_norm(rhs), 1e-300);

    OhmSolveResult res;
    res.contraction = p.kappa * sup_magnitude(B);

    if (p.kappa == 0.0) {
        res.j = rhs;
        res.iterations = 0;
        res.residual = 0.0;
        return res;
    }

    // Seed: pointwise Hall solve of sigma (c E + v x B), then project/truncate.
    SpectralField seed_rhs = p.sigma * cross(v, B);
    {
        SpectralField Ec = E;
        Ec *= p.sigma * p.c;
        seed_rhs += Ec;
    }
    SpectralField j = truncate(leray_project(hall_matrix_solve(seed_rhs, B, p.kappa)), m);

    for (int it = 1; it <= opts.max_iterations; ++it) {
        SpectralField hall = truncate(leray_project(cross(j, B)), m);
        SpectralField r = j;
        r.axpy(p.kappa, hall);
        r -= rhs;
        const double rel = l2_norm(r) / rhs_norm;
        res.residual_history.push_back(rel);
        res.iterations = it;
        res.residual = rel;
        if (rel <= opts.tol) {
            res.j = j;
            return res;
        }
        // fixed point: j <- rhs - kappa P T_m (j x B)
        hall *= p.kappa;
        j = rhs - hall;
    }
    throw NoConvergence("solve_ohm_implicit: fixed point did not reach tolerance (contraction " +
                            std::to_string(res.contraction) + ")",
                        res.residual, res.iterations);
}

SpectralField solve_ohm_lagged(const SpectralField& v, const SpectralField& E,
                               const SpectralField& B_lagged, const SpectralField& j_lag,
                               const SpectralField& B, const PhysicalParams& p, double m) {
    SpectralField j = truncate(leray_project(cross(v, B_lagged)), m);
    j *= p.sigma;
    {
        SpectralField Ec = E;
        Ec *= p.sigma * p.c;
        j += Ec;
    }
    if (p.kappa != 0.0) {
        SpectralField hall = truncate(leray_project(cross(j_lag, B)), m);
        hall *= p.kappa;
        j -= hall;
    }
    return j;
}

SpectralField solve_ohm_plain(const SpectralField& v, const SpectralField& E,
                              const SpectralField& B, const PhysicalParams& p, double m) {
    SpectralField j = truncate(cross(v, B), m);
    j *= p.sigma;
    SpectralField Ec = E;
    Ec *= p.sigma * p.c;
    j += Ec;
    return j;
}

}  // namespace nsm
