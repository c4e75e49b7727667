"""The verification suite behind the `verify` subcommand.

Each check exercises one advertised guarantee end to end at a fixed sample
size, tolerance and seed, and reports a single pass/fail result with a
numeric detail string.  The test suite runs the same checks; keeping them
here makes the CLI summary and the tests agree by construction.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from hardpair.bodies import MassInertiaMatrix, make_disk, make_ellipse
from hardpair.geometry import (
    Beta,
    closest_approach,
    closest_approach_oracle,
    d_beta,
    e_of,
    identity_residuals,
    perp,
)
from hardpair.frames import LineField, build_frame, e_beta_gram_schmidt
from hardpair.scattering import (
    ScatteringFamily,
    apply_scattering,
    explicit_epsi_velocities,
    impulse_scatter,
    scattering_matrix,
)
from hardpair.dynamics import (
    SimOptions,
    divergence_report,
    make_state,
    next_collision_time,
    simulate,
    time_reverse_check,
)
from hardpair.kinetic import (
    angular_speed_candidate,
    invariant_residual,
    invariant_residual_table,
    standard_candidates,
)

# The frozen non-uniqueness datum: a colliding ellipse configuration whose
# pre-collision velocity has a large component in the complement plane, so
# all six families produce visibly different continuations.
NONUNIQ_X0 = [0.0, 0.0, -0.4300769504, -4.2832023206, 6.27925883, 1.4088799884]
NONUNIQ_V0 = [0.0050130786, 0.124744358, 0.2336652212, 0.7169422611,
              -0.5278013393, -0.5216380153]
NONUNIQ_T = 4.0
NONUNIQ_PHIS = (0.0, math.pi / 6, math.pi / 4, math.pi / 3)

NONUNIQ_CONFIG = {
    "body": {"kind": "ellipse", "a": 2.0, "b": 1.0},
    "Z0": NONUNIQ_X0 + NONUNIQ_V0,
    "T": NONUNIQ_T,
    "families": [
        {"family": "reflection"},
        {"family": "epsi"},
    ] + [
        {"family": "op", "line_field": {"kind": "constant", "phi": phi}}
        for phi in NONUNIQ_PHIS
    ],
    "seed": 0,
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    runtime: float


def six_families() -> list[ScatteringFamily]:
    return [
        ScatteringFamily.reflection(),
        ScatteringFamily.epsi(),
    ] + [
        ScatteringFamily.orientation_preserving(LineField.constant(phi))
        for phi in NONUNIQ_PHIS
    ]


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def check_frames(n: int = 1000, seed: int = 101) -> CheckResult:
    """Orthonormality of 1000 random frames and the dual Ebeta routes."""
    def body():
        rng = np.random.default_rng(seed)
        shapes = [make_disk(1.0), make_ellipse(2.0, 1.0)]
        worst_orth = worst_dual = 0.0
        for k in range(n):
            shape = shapes[k % 2]
            beta = Beta(*rng.uniform(0.0, 2.0 * math.pi, 3))
            fr = build_frame(shape, beta)
            worst_orth = max(worst_orth, fr.orthonormality_residual())
            dual = e_beta_gram_schmidt(beta, fr.d, fr.m, fr.J)
            worst_dual = max(worst_dual, float(np.max(np.abs(fr.Ebeta - dual))))
        return worst_orth, worst_dual

    (worst_orth, worst_dual), dt = _timed(body)
    passed = worst_orth < 1e-10 and worst_dual < 1e-10 and dt < 10.0
    return CheckResult(
        "frames",
        passed,
        f"orthonormality {worst_orth:.2e} (<1e-10), dual-route {worst_dual:.2e} (<1e-10), {dt:.1f}s (<10s)",
        dt,
    )


def check_geometry_oracle(n: int = 200, seed: int = 102) -> CheckResult:
    """Tangency solver versus the independent bisection oracle."""
    def body():
        rng = np.random.default_rng(seed)
        ell = make_ellipse(2.0, 1.0)
        disk = make_disk(1.0)
        worst = 0.0
        for _ in range(n):
            th, ps = rng.uniform(0.0, 2.0 * math.pi, 2)
            d_fast = closest_approach(ell, th, ps).d
            d_slow = closest_approach_oracle(ell, th, ps)
            worst = max(worst, abs(d_fast - d_slow))
        worst_disk = 0.0
        for _ in range(50):
            th, ps = rng.uniform(0.0, 2.0 * math.pi, 2)
            worst_disk = max(worst_disk, abs(closest_approach(disk, th, ps).d - 2.0))
        return worst, worst_disk

    (worst, worst_disk), dt = _timed(body)
    passed = worst < 1e-6 and worst_disk < 1e-10 and dt < 60.0
    return CheckResult(
        "geometry-oracle",
        passed,
        f"ellipse |solver-oracle| {worst:.2e} (<1e-6), disk |d-2r| {worst_disk:.2e} (<1e-10), {dt:.1f}s (<60s)",
        dt,
    )


def check_identities(n: int = 100, seed: int = 103, h: float = 1e-5) -> CheckResult:
    """Direction identities for the contact normal and the gap gradient."""
    def body():
        rng = np.random.default_rng(seed)
        ell = make_ellipse(2.0, 1.0)
        disk = make_disk(1.0)
        worst_e = worst_d = 0.0
        for _ in range(n):
            beta = Beta(*rng.uniform(0.0, 2.0 * math.pi, 3))
            res = identity_residuals(ell, beta, h=h)
            worst_e = max(worst_e, res["n_direction"], res["m_nu_gamma"])
            res = identity_residuals(disk, beta, h=h)
            worst_d = max(worst_d, res["n_direction"], res["m_nu_gamma"])
        return worst_e, worst_d

    (worst_e, worst_d), dt = _timed(body)
    passed = worst_e < 1e-5 and worst_d < 1e-10
    return CheckResult(
        "identities",
        passed,
        f"ellipse collinearity {worst_e:.2e} (<1e-5 at h={h:g}), disk {worst_d:.2e} (<1e-10)",
        dt,
    )


def check_scattering(n: int = 10000, seed: int = 104) -> CheckResult:
    """Involution, determinant, conservation, half-space flip, dual routes."""
    def body():
        rng = np.random.default_rng(seed)
        ell = make_ellipse(2.0, 1.0)
        m, J = ell.m, ell.J
        mim = MassInertiaMatrix.from_mass(m, J)
        fams = [
            ScatteringFamily.reflection(),
            ScatteringFamily.epsi(),
            ScatteringFamily.orientation_preserving(LineField.constant(math.pi / 4)),
        ]
        want_sign = {"reflection": -1.0, "epsi": -1.0, "op": 1.0}
        worst = {
            "involution": 0.0, "det": 0.0, "lm": 0.0, "am": 0.0, "ke": 0.0,
            "impulse": 0.0, "epsi_explicit": 0.0,
        }
        flip_ok = True
        for _ in range(n):
            beta = Beta(*rng.uniform(0.0, 2.0 * math.pi, 3))
            contact = d_beta(ell, beta)
            fr = build_frame(ell, beta)
            gam_dir = np.concatenate([
                [0.0, 0.0], m * fr.d * perp(e_of(beta.psi)), [J, J]])
            gam_dir /= np.linalg.norm(gam_dir)
            V = rng.standard_normal(6)
            proj = float(mim.apply(V) @ fr.nu)
            if abs(proj) <= 1e-9 * float(np.linalg.norm(V)):
                continue
            if proj > 0.0:
                V, proj = -V, -proj
            scale = 1.0 + float(V @ V)
            for fam in fams:
                sm = scattering_matrix(fam, fr)
                Vp = sm.s @ V
                worst["involution"] = max(
                    worst["involution"], float(np.max(np.abs(sm.s @ Vp - V))))
                det = float(np.linalg.det(sm.A))
                if det * want_sign[fam.variant] < 0.0:
                    worst["det"] = math.inf
                worst["det"] = max(worst["det"], abs(abs(det) - 1.0))
                dV = Vp - V
                worst["lm"] = max(
                    worst["lm"],
                    abs(m * float(dV[0] + dV[2])) / scale,
                    abs(m * float(dV[1] + dV[3])) / scale,
                )
                worst["am"] = max(worst["am"], abs(float(gam_dir @ dV)) / scale)
                w, wp = mim.apply(V), mim.apply(Vp)
                worst["ke"] = max(
                    worst["ke"], abs(float(wp @ wp) - float(w @ w)) / scale)
                if not float(mim.apply(Vp) @ fr.nu) > 0.0:
                    flip_ok = False
                if fam.variant == "reflection":
                    worst["impulse"] = max(worst["impulse"], float(np.max(np.abs(
                        Vp - impulse_scatter(contact, m, J, V)))))
                elif fam.variant == "epsi":
                    worst["epsi_explicit"] = max(worst["epsi_explicit"], float(np.max(np.abs(
                        Vp - explicit_epsi_velocities(beta, fr.d, m, J, V)))))
        return worst, flip_ok

    (worst, flip_ok), dt = _timed(body)
    passed = (
        worst["involution"] < 1e-10 and worst["det"] < 1e-10
        and worst["lm"] < 1e-10 and worst["am"] < 1e-10 and worst["ke"] < 1e-10
        and flip_ok and worst["impulse"] < 1e-10 and worst["epsi_explicit"] < 1e-10
    )
    return CheckResult(
        "scattering",
        passed,
        (
            f"involution {worst['involution']:.2e}, |det|-1 {worst['det']:.2e}, "
            f"LM {worst['lm']:.2e}, AM {worst['am']:.2e}, KE {worst['ke']:.2e} "
            f"(<1e-10 each), flip {'ok' if flip_ok else 'VIOLATED'}, "
            f"impulse {worst['impulse']:.2e}, epsi closed form {worst['epsi_explicit']:.2e}"
        ),
        dt,
    )


def check_disk_reduction(n: int = 1000, seed: int = 105) -> CheckResult:
    """Reflection on disks is the specular exchange; spins never change."""
    def body():
        rng = np.random.default_rng(seed)
        disk = make_disk(1.0)
        mim = MassInertiaMatrix.from_mass(disk.m, disk.J)
        fam = ScatteringFamily.reflection()
        worst = worst_spin = 0.0
        for _ in range(n):
            beta = Beta(*rng.uniform(0.0, 2.0 * math.pi, 3))
            fr = build_frame(disk, beta)
            sm = scattering_matrix(fam, fr)
            V = rng.standard_normal(6)
            if float(mim.apply(V) @ fr.nu) > 0.0:
                V = -V
            Vp = sm.s @ V
            nvec = e_of(beta.psi)
            k = float((V[0:2] - V[2:4]) @ nvec)
            expect = np.concatenate([V[0:2] - k * nvec, V[2:4] + k * nvec, V[4:6]])
            worst = max(worst, float(np.max(np.abs(Vp - expect))))
            worst_spin = max(worst_spin, float(np.max(np.abs(Vp[4:6] - V[4:6]))))
        return worst, worst_spin

    (worst, worst_spin), dt = _timed(body)
    passed = worst < 1e-12 and worst_spin < 1e-12
    return CheckResult(
        "disk-reduction",
        passed,
        f"specular exchange {worst:.2e} (<1e-12), spin change {worst_spin:.2e}",
        dt,
    )


def colliding_ellipse_data(n: int, seed: int):
    """Deterministic colliding initial data on the (2,1) ellipse pair.

    Each datum is anchored at a random contact configuration, backed off
    along the center line, and given an approach velocity with tangential
    and spin noise, so nearly every draw collides; draws that do not are
    skipped.
    """
    from hardpair.geometry import wrap_angle

    rng = np.random.default_rng(seed)
    ell = make_ellipse(2.0, 1.0)
    out = []
    attempts = 0
    while len(out) < n and attempts < 20 * n:
        attempts += 1
        th, thb, psi = rng.uniform(0.0, 2.0 * math.pi, 3)
        c = closest_approach(ell, wrap_angle(thb - th), wrap_angle(psi - th))
        margin = rng.uniform(0.6, 1.4)
        e = e_of(psi)
        x2 = (c.d + margin) * e
        v = rng.normal(0.0, 0.15, 2)
        vb = v - rng.uniform(0.5, 1.1) * e + rng.normal(0.0, 0.1, 2)
        om, omb = rng.uniform(-0.5, 0.5, 2)
        Z0 = make_state([0.0, 0.0, x2[0], x2[1], th, thb], [*v, *vb, om, omb])
        T = 4.0
        if next_collision_time(ell, Z0, T) is None:
            continue
        out.append((Z0, T))
    return ell, out


def check_dynamics(n_data: int = 50, seed: int = 106) -> CheckResult:
    """Analytic collision time, conservation ledger, gap floor, reversibility."""
    def body():
        disk = make_disk(1.0)
        Z = make_state([0, 0, 4, 0, 0, 0], [1, 0, 0, 0, 0, 0])
        t_star = next_collision_time(disk, Z, 10.0)
        t_err = abs(t_star - 2.0) if t_star is not None else math.inf

        ell, data = colliding_ellipse_data(n_data, seed)
        fams = six_families()
        worst_ledger = 0.0
        worst_gap = 0.0
        reversals = []
        for idx, (Z0, T) in enumerate(data):
            fam = fams[idx % len(fams)]
            tr = simulate(ell, Z0, fam, T)
            worst_ledger = max(worst_ledger, tr.max_ledger_jump())
            worst_gap = max(worst_gap, -tr.min_gap / ell.diameter)
            if tr.n_events() <= 5 and len(reversals) < 8:
                reversals.append(time_reverse_check(ell, Z0, fam, T))
        worst_rev = max(reversals) if reversals else math.inf
        return t_err, worst_ledger, worst_gap, worst_rev, len(data)

    (t_err, worst_ledger, worst_gap, worst_rev, n_used), dt = _timed(body)
    passed = (
        t_err < 1e-9 and worst_ledger < 1e-9 and worst_gap < 1e-9
        and worst_rev < 1e-6 and n_used == n_data
    )
    return CheckResult(
        "dynamics",
        passed,
        (
            f"head-on |t*-2| {t_err:.2e} (<1e-9), ledger {worst_ledger:.2e} (<1e-9, {n_used} data), "
            f"gap deficit {worst_gap:.2e} (<1e-9*diam), reversal {worst_rev:.2e} (<1e-6)"
        ),
        dt,
    )


def nonuniq_report(ell, Z0, families, T, opts=None) -> dict:
    """Divergence report plus the derived pass/fail quantities.

    The same function backs the nonuniq subcommand and the verification
    suite, so the numbers in both come from one pipeline.
    """
    rep = divergence_report(ell, Z0, families, T, opts)
    if rep["degenerate"]:
        return rep
    k = len(families)
    off = rep["velocity_divergence"][np.triu_indices(k, 1)]
    vnorm = float(np.linalg.norm(Z0.V))
    rep["min_pairwise_velocity_divergence"] = float(off.min())
    rep["velocity_scale"] = vnorm
    rep["distinct"] = bool(off.min() > 1e-6 * vnorm)
    return rep


def check_nonuniqueness() -> CheckResult:
    """Six families on the frozen datum: all conserve, all differ."""
    def body():
        ell = make_ellipse(2.0, 1.0)
        Z0 = make_state(NONUNIQ_X0, NONUNIQ_V0)
        return nonuniq_report(ell, Z0, six_families(), NONUNIQ_T)

    rep, dt = _timed(body)
    passed = (
        not rep["degenerate"] and rep["all_conserve"] and rep["distinct"] and dt < 30.0
    )
    detail = (
        f"degenerate datum"
        if rep["degenerate"]
        else (
            f"min pairwise velocity divergence {rep['min_pairwise_velocity_divergence']:.3e} "
            f"(>1e-6*|V|={1e-6 * rep['velocity_scale']:.1e}), "
            f"all conserve: {rep['all_conserve']}, {dt:.1f}s (<30s)"
        )
    )
    return CheckResult("non-uniqueness", passed, detail, dt)


def check_kinetic(n: int = 10000, seed: int = 107) -> CheckResult:
    """Known invariants vanish under every family; bare spin only on disks."""
    def body():
        ell = make_ellipse(2.0, 1.0)
        disk = make_disk(1.0)
        fams = [
            ScatteringFamily.reflection(),
            ScatteringFamily.epsi(),
            ScatteringFamily.orientation_preserving(LineField.constant(0.0)),
            ScatteringFamily.orientation_preserving(LineField.constant(math.pi / 4)),
        ]
        table = invariant_residual_table(ell, fams, standard_candidates(ell), n, seed)
        known = ("1", "v_x", "v_y", "m|v|^2+Jw^2", "sin(theta)")
        worst_known = max(max(table[name].values()) for name in known)
        w_ellipse = min(table["w"].values())
        w_disk = invariant_residual(
            disk, ScatteringFamily.reflection(), angular_speed_candidate(), n, seed)
        return worst_known, w_ellipse, w_disk

    (worst_known, w_ellipse, w_disk), dt = _timed(body)
    passed = worst_known < 1e-9 and w_disk < 1e-10 and w_ellipse > 1e-3
    return CheckResult(
        "kinetic",
        passed,
        (
            f"known invariants {worst_known:.2e} (<1e-9), "
            f"spin on disk {w_disk:.2e} (<1e-10), on ellipse {w_ellipse:.2e} (>1e-3)"
        ),
        dt,
    )


def run_all(quick: bool = False) -> list[CheckResult]:
    """Run every check; quick mode scales sample counts down for a smoke pass."""
    k = 10 if quick else 1
    return [
        check_frames(n=1000 // k),
        check_geometry_oracle(n=200 // k),
        check_identities(n=100 // k),
        check_scattering(n=10000 // k),
        check_disk_reduction(n=1000 // k),
        check_dynamics(n_data=50 // k),
        check_nonuniqueness(),
        check_kinetic(n=10000 // k),
    ]
