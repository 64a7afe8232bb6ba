"""Executable checks: sampled dissipation inequalities and trajectory estimates.

Every check produces a CheckReport with the worst margin observed and the
sample achieving it (margin >= -tolerance means pass).  Asymptotic claims are
checked as finite-horizon surrogates: suprema over the final portion of the
horizon with recorded slack, since a simulation cannot observe true limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .controllers import (
    SigmaModController,
    WingRockDadsController,
    _sigma_mod_terms,
    sigma_mod_control,
    sigma_mod_W_map,
    wingrock_control,
)
from .jets import SmoothMap, gradient, partial_map
from .simulate import TrajectoryLog
from .systems import eval_dynamics

# sampling box covering the benchmark experiment magnitudes
DEFAULT_BOX = {"x": 3.0, "z": 3.0, "theta": 40.0, "d": 30.0}
# samples this close to the deadzone boundary are excluded (derivative kink)
KINK_BAND = 1e-9


@dataclass(frozen=True)
class CheckReport:
    name: str
    n_samples: int
    worst_margin: float
    witness: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -self.tolerance

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: worst margin {self.worst_margin:.6g} "
            f"over {self.n_samples} samples (tol {self.tolerance:g})"
        )


def reports_to_csv(reports: Sequence[CheckReport], path_or_buf) -> None:
    lines = ["name,passed,n_samples,worst_margin,tolerance,witness"]
    for rep in reports:
        wit = ";".join(f"{v:.9g}" for v in rep.witness)
        lines.append(
            f"{rep.name},{rep.passed},{rep.n_samples},"
            f"{rep.worst_margin:.17g},{rep.tolerance:.9g},{wit}"
        )
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w") as fh:
            fh.write(text)


def summarize(reports: Sequence[CheckReport]) -> str:
    return "\n".join(rep.summary() for rep in reports)


def check_dissipation(
    V: SmoothMap,
    closed_loop_rhs: Callable,
    rhs_bound: Callable,
    sampler: Callable,
    n: int = 1000,
    tol: float = 1e-6,
    seed: int = 0,
    exclude: Callable | None = None,
    name: str = "dissipation",
) -> CheckReport:
    """Worst margin of (bound - dV/dt) over n sampled points.

    The sampler draws one sample per call; closed_loop_rhs and rhs_bound both
    receive the full sample.  The first V.arity entries of a sample are the
    coordinates of V.  Samples matching `exclude` (e.g. inside the deadzone
    kink band) are redrawn.
    """
    rng = np.random.default_rng(seed)
    worst = math.inf
    witness: tuple = ()
    used = 0
    attempts = 0
    while used < n and attempts < 10 * n:
        attempts += 1
        sample = sampler(rng)
        if exclude is not None and exclude(sample):
            continue
        coords = sample[: V.arity]
        g = gradient(V, coords)
        f = closed_loop_rhs(sample)
        lhs = float(np.dot(g, f))
        margin = float(rhs_bound(sample)) - lhs
        used += 1
        if margin < worst:
            worst = margin
            witness = tuple(float(v) for v in sample)
    return CheckReport(name, used, worst, witness, tol)


# ---------------------------------------------------------------------------
# Prebuilt dissipation checks for the wing-rock benchmark
# ---------------------------------------------------------------------------

def _box_sampler(x_dim, theta_dim, d_dim, box=DEFAULT_BOX):
    def sample(rng):
        x = rng.uniform(-box["x"], box["x"], x_dim)
        z = rng.uniform(-box["z"], box["z"])
        th = rng.standard_normal(theta_dim)
        th = th / max(np.linalg.norm(th), 1e-12) * rng.uniform(0.0, box["theta"])
        d = rng.standard_normal(d_dim)
        d = d / max(np.linalg.norm(d), 1e-12) * rng.uniform(0.0, box["d"])
        return (*x, z, *th, *d)

    return sample


def wingrock_dissipation_check(
    sys,
    ctrl: WingRockDadsController,
    n: int = 1000,
    tol: float = 1e-6,
    seed: int = 0,
    box=DEFAULT_BOX,
    control_fn: Callable | None = None,
) -> CheckReport:
    """Sampled decay inequality for the closed-form wing-rock law.

    The bound is -cV + 2(|d|^2 + ((|theta|-1-e^z)^+)^2)/(1+e^z).  control_fn
    overrides the input computation (used by mutation tests).
    """
    V = ctrl.lyapunov_map()
    u_of = control_fn or (lambda x, z: wingrock_control(x, z, ctrl))

    def rhs(sample):
        x, z = np.asarray(sample[:3]), sample[3]
        th, d = np.asarray(sample[4:8]), np.asarray(sample[8:10])
        u = u_of(x, z)
        xdot = eval_dynamics(sys, x, u, th, d)
        Vv = float(V(*x, z))
        zdot = ctrl.Gamma * math.exp(-z) * max(Vv - ctrl.eps_dz, 0.0)
        return np.append(xdot, zdot)

    def bound(sample):
        x, z = np.asarray(sample[:3]), sample[3]
        th, d = np.asarray(sample[4:8]), np.asarray(sample[8:10])
        Vv = float(V(*x, z))
        ez = math.exp(z)
        excess = max(np.linalg.norm(th) - 1.0 - ez, 0.0)
        return -ctrl.c * Vv + 2.0 * (d @ d + excess * excess) / (1.0 + ez)

    def exclude(sample):
        return abs(float(V(*sample[:4])) - ctrl.eps_dz) < KINK_BAND

    return check_dissipation(
        V, rhs, bound, _box_sampler(3, 4, 2, box), n=n, tol=tol, seed=seed,
        exclude=exclude, name="wingrock dissipation",
    )


def sigma_mod_dissipation_check(
    sys,
    ctrl: SigmaModController,
    theta: Sequence[float],
    n: int = 1000,
    tol: float = 1e-6,
    seed: int = 0,
    box=DEFAULT_BOX,
) -> CheckReport:
    """Sampled decay inequality of the leakage baseline for a fixed theta.

    The comparison function includes the parameter-estimation error, and the
    bound carries the leakage residual (sigma/2Gamma)|theta|^2.
    """
    theta = np.asarray(theta, float)
    W = sigma_mod_W_map(ctrl, theta)
    leak, Gamma, c = ctrl.sigma_leak, ctrl.Gamma, ctrl.c

    def sample7(rng):
        x = rng.uniform(-box["x"], box["x"], 3)
        th_hat = rng.standard_normal(4)
        th_hat = th_hat / max(np.linalg.norm(th_hat), 1e-12) * rng.uniform(0.0, box["theta"])
        d = rng.standard_normal(2)
        d = d / max(np.linalg.norm(d), 1e-12) * rng.uniform(0.0, box["d"])
        return (*x, *th_hat, *d)

    def rhs(sample):
        x, th_hat = np.asarray(sample[:3]), np.asarray(sample[3:7])
        d = np.asarray(sample[7:9])
        u, w = sigma_mod_control(x, th_hat, ctrl)
        xdot = eval_dynamics(sys, x, u, theta, d)
        return np.concatenate([xdot, np.asarray(w, float)])

    def bound(sample):
        x, th_hat = np.asarray(sample[:3]), np.asarray(sample[3:7])
        d = np.asarray(sample[7:9])
        zeta, chi, _ = _sigma_mod_terms(x[0], x[1], x[2], *th_hat, c=c, K=ctrl.K)
        return (
            -c * (x[0] ** 2 + zeta ** 2 + chi ** 2)
            - leak / (2.0 * Gamma) * float((th_hat - theta) @ (th_hat - theta))
            + 0.5 * float(d @ d)
            + leak / (2.0 * Gamma) * float(theta @ theta)
        )

    return check_dissipation(
        W, rhs, bound, sample7, n=n, tol=tol, seed=seed,
        name=f"sigma-mod dissipation (leak={leak:g})",
    )


def synthesized_dissipation_check(
    sys,
    V: SmoothMap,
    k: SmoothMap,
    gains,
    rate_c: float,
    gain_a: float,
    n: int = 500,
    tol: float = 1e-7,
    seed: int = 0,
    box=DEFAULT_BOX,
    name: str = "synthesized dissipation",
) -> CheckReport:
    """Decay inequality of a synthesized (V, k) pair on the full plant.

    Works for any stage: the plant is truncated to the stage's state dimension
    with the next state replaced by the stage feedback.
    """
    dim = V.arity - 1

    def rhs(sample):
        x, z = np.asarray(sample[:dim]), sample[dim]
        th = np.asarray(sample[dim + 1 : dim + 1 + sys.p])
        d = np.asarray(sample[dim + 1 + sys.p :])
        u = float(k(*x, z))
        f = np.empty(dim)
        for i in range(dim):
            head = tuple(x[: i + 1])
            nxt = x[i + 1] if i + 1 < dim else u
            phi = np.asarray(sys.phi[i](*head), float)
            al = np.asarray(sys.alpha[i](*head), float)
            f[i] = (
                float(sys.h[i](*head))
                + float(sys.g[i](*head, *th)) * nxt
                + phi @ th
                + al @ d
            )
        Vv = float(V(*x, z))
        zdot = gains.Gamma * math.exp(-z) * max(Vv - gains.eps_dz, 0.0)
        return np.append(f, zdot)

    def bound(sample):
        x, z = np.asarray(sample[:dim]), sample[dim]
        th = np.asarray(sample[dim + 1 : dim + 1 + sys.p])
        d = np.asarray(sample[dim + 1 + sys.p :])
        ez = math.exp(z)
        Vv = float(V(*x, z))
        excess = max(
            np.linalg.norm(th) - gains.b - float(gains.lam(ez)), 0.0
        )
        return -rate_c * Vv + gain_a * (
            float(d @ d) + excess * excess
        ) / (1.0 + float(gains.kappa(ez)))

    def exclude(sample):
        return abs(float(V(*sample[: dim + 1])) - gains.eps_dz) < KINK_BAND

    return check_dissipation(
        V, rhs, bound, _box_sampler(dim, sys.p, sys.l, box), n=n, tol=tol,
        seed=seed, exclude=exclude, name=name,
    )


def stage_certificate_checks(
    sys, result, gains, n: int = 200, tol: float = 1e-7, seed: int = 0, box=DEFAULT_BOX
) -> list[CheckReport]:
    """One decay-inequality report per synthesis stage."""
    reports = []
    for stage in result.stage_trace:
        reports.append(
            synthesized_dissipation_check(
                sys, stage.V, stage.k, gains, stage.rate_c, stage.effective_gain,
                n=n, tol=tol, seed=seed + stage.level, box=box,
                name=f"stage {stage.level} certificate",
            )
        )
    return reports


# ---------------------------------------------------------------------------
# Trajectory estimates
# ---------------------------------------------------------------------------

def signal_sup(profile, times) -> float:
    """Supremum of |signal(t)| over the logged grid."""
    return float(max(np.linalg.norm(np.atleast_1d(profile(t))) for t in times))


def check_trajectory_estimates(
    log: TrajectoryLog,
    c: float,
    a: float,
    b: float,
    eps_dz: float,
    d_sup: float,
    theta_sup: float,
    attractivity_radius: float | None = None,
    tail_fraction: float = 0.2,
    slack: float = 0.1,
    tol: float = 1e-6,
) -> list[CheckReport]:
    """Estimate checks along a deadzone-adapted run.

    Produces reports for (i) the exponential-plus-offset envelope on V,
    (ii) monotonicity of the adaptation state z, (iii) the tail bound
    V <= eps_dz (1 + slack), and (iv) when a radius is given, the tail output
    bound |Y| <= radius (1 + slack).  The envelope uses the supplied signal
    suprema, which should come from the actually sampled signals.
    """
    z = log.ctrl[:, 0]
    z0 = float(z[0])
    V0 = float(log.V[0])
    ez0 = math.exp(z0)
    offset = (
        a * (d_sup ** 2 + max(theta_sup - b - ez0, 0.0) ** 2) / (c * (1.0 + ez0))
    )
    envelope = np.exp(-c * log.t) * V0 + offset
    margins = envelope - log.V
    i_env = int(np.argmin(margins))
    reports = [
        CheckReport(
            "V envelope", len(log), float(margins[i_env]),
            (float(log.t[i_env]), float(log.V[i_env]), float(envelope[i_env])),
            tol,
        )
    ]

    dz = np.diff(z)
    i_z = int(np.argmin(dz)) if len(dz) else 0
    reports.append(
        CheckReport(
            "z monotonicity", len(log), float(dz[i_z]) if len(dz) else 0.0,
            (float(log.t[i_z]),), 1e-12,
        )
    )

    n_tail = max(1, int(math.ceil(tail_fraction * len(log))))
    v_tail = float(np.max(log.V[-n_tail:]))
    reports.append(
        CheckReport(
            "tail V bound", n_tail, eps_dz * (1.0 + slack) - v_tail,
            (v_tail,), tol,
        )
    )

    if attractivity_radius is not None:
        y_tail = float(np.max(log.Ynorm[-n_tail:]))
        reports.append(
            CheckReport(
                "tail output bound", n_tail,
                attractivity_radius * (1.0 + slack) - y_tail, (y_tail,), tol,
            )
        )
    return reports


def wingrock_attractivity_radius(c: float, eps: float) -> float:
    """Residual output radius of the wing-rock design: (sqrt(c^2+1)+c) sqrt(2 eps)."""
    return (math.sqrt(c * c + 1.0) + c) * math.sqrt(2.0 * eps)


def check_drift_contrast(
    dads_log: TrajectoryLog,
    sigma0_log: TrajectoryLog,
    sigma_log: TrajectoryLog,
    expect_drift: bool = True,
    tail_fraction: float = 0.2,
    plateau_rel: float = 0.01,
    drift_factor: float = 1.1,
) -> CheckReport:
    """Deadzone-vs-leakage contrast on a shared scenario.

    Passes when the deadzone gain rho = 1 + e^z plateaus (relative growth
    below plateau_rel over the tail), the leak-free estimate norm drifts by
    more than drift_factor between mid-horizon and the end (when a persistent
    disturbance makes drift expected), and the leaky estimates stay finite.
    """
    for other in (sigma0_log, sigma_log):
        if len(other) != len(dads_log) or abs(other.t[-1] - dads_log.t[-1]) > 1e-9:
            raise ValueError("logs must share the time grid")

    rho = 1.0 + np.exp(dads_log.ctrl[:, 0])
    n_tail = max(2, int(math.ceil(tail_fraction * len(dads_log))))
    growth = (rho[-1] - rho[-n_tail]) / rho[-1]
    margins = [plateau_rel - float(growth)]

    norms0 = np.linalg.norm(sigma0_log.ctrl, axis=1)
    if expect_drift:
        mid = np.searchsorted(sigma0_log.t, 0.5 * sigma0_log.t[-1])
        ref = float(norms0[min(mid, len(norms0) - 1)])
        ratio = float(norms0[-1]) / max(ref, 1e-12)
        margins.append(ratio - drift_factor)
    else:
        margins.append(1.0 if np.all(np.isfinite(norms0)) else -math.inf)

    norms_leak = np.linalg.norm(sigma_log.ctrl, axis=1)
    margins.append(1.0 if np.all(np.isfinite(norms_leak)) else -math.inf)

    worst = min(margins)
    return CheckReport(
        "drift contrast", len(dads_log), worst,
        (float(growth), float(norms0[-1]), float(norms_leak[-1])), 0.0,
    )


def check_sigma_tradeoff(
    sigma_log: TrajectoryLog,
    theta: Sequence[float],
    ctrl: SigmaModController,
    d_sup: float,
    tail_fraction: float = 0.2,
    slack: float = 0.1,
) -> CheckReport:
    """Residual-set bound of the leakage baseline grows with |theta|.

    Checks that the tail sup of x1^2 + zeta^2 + chi^2 stays below the
    Lyapunov-implied residual level (|d|^2/2 + (sigma/2Gamma)|theta|^2)/c.
    """
    theta = np.asarray(theta, float)
    bound = (
        0.5 * d_sup ** 2
        + ctrl.sigma_leak / (2.0 * ctrl.Gamma) * float(theta @ theta)
    ) / ctrl.c
    n_tail = max(1, int(math.ceil(tail_fraction * len(sigma_log))))
    worst_val = 0.0
    for x, th_hat in zip(sigma_log.x[-n_tail:], sigma_log.ctrl[-n_tail:]):
        zeta, chi, _ = _sigma_mod_terms(x[0], x[1], x[2], *th_hat, c=ctrl.c, K=ctrl.K)
        worst_val = max(worst_val, x[0] ** 2 + zeta ** 2 + chi ** 2)
    return CheckReport(
        "sigma-mod residual bound", n_tail,
        bound * (1.0 + slack) - worst_val, (worst_val, bound), 0.0,
    )
