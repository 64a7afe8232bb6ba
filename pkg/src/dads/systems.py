"""Plant classes for strict-feedback control design.

Two plant families are supported: an integrator chain cascaded with a
strict-feedback block (state (x, y), input entering the last y-equation), and
the pure strict-feedback chain with no leading integrators. Both carry the
positive majorants eta (lower bound on the controlled gain) and mu (upper
bound proportional to 1 + |theta|) that the backstepping synthesis relies on,
plus samplers for the admissible parameter set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .jets import SmoothMap


def _dot(vec_map_out, v) -> float:
    """Dot product of a SmoothMap's tuple output with a plain vector."""
    if not isinstance(vec_map_out, (tuple, list)):
        vec_map_out = (vec_map_out,)
    acc = 0.0
    for a, b in zip(vec_map_out, v):
        acc = acc + a * b
    return acc


@dataclass(frozen=True)
class ThetaDomain:
    """Admissible parameter set, represented by a sampler and a membership test."""

    dim: int
    sample: Callable[[np.random.Generator], np.ndarray] = field(repr=False)
    contains: Callable[[np.ndarray], bool] = field(repr=False)


def free_theta(dim: int, sample_radius: float = 40.0) -> ThetaDomain:
    """All of R^dim, sampled uniformly in a ball of the given radius."""

    def sample(rng: np.random.Generator) -> np.ndarray:
        v = rng.standard_normal(dim)
        n = np.linalg.norm(v)
        if n == 0.0:
            return np.zeros(dim)
        return v / n * rng.uniform(0.0, sample_radius)

    return ThetaDomain(dim, sample, lambda _v: True)


@dataclass(frozen=True)
class StrictFeedbackSystem:
    """Integrator chain x (length n) cascaded with a y-block (length m).

    x_i' = x_{i+1} (with x_{n+1} = y_1) and
    y_j' = h_j + g_j * y_{j+1} + phi_j . theta + alpha_j . d (with y_{m+1} = u).
    h_j, phi_j, alpha_j take (x, y_1..y_j); g_j additionally takes theta.
    """

    n: int
    m: int
    h: tuple[SmoothMap, ...]
    phi: tuple[SmoothMap, ...]
    alpha: tuple[SmoothMap, ...]
    g: tuple[SmoothMap, ...]
    eta: tuple[SmoothMap, ...]
    mu: tuple[SmoothMap, ...]
    p: int
    l: int
    theta_domain: ThetaDomain

    @property
    def state_dim(self) -> int:
        return self.n + self.m


@dataclass(frozen=True)
class PureStrictFeedbackSystem:
    """Strict-feedback chain x_i' = h_i + g_i x_{i+1} + phi_i . theta + alpha_i . d.

    Maps at level i take (x_1, ..., x_i); g_i additionally takes theta;
    x_{n+1} = u.
    """

    n: int
    h: tuple[SmoothMap, ...]
    phi: tuple[SmoothMap, ...]
    alpha: tuple[SmoothMap, ...]
    g: tuple[SmoothMap, ...]
    eta: tuple[SmoothMap, ...]
    mu: tuple[SmoothMap, ...]
    p: int
    l: int
    theta_domain: ThetaDomain

    @property
    def state_dim(self) -> int:
        return self.n


def eval_dynamics(sys, state, u: float, theta, d) -> np.ndarray:
    """Full state derivative of either plant family."""
    theta = np.asarray(theta, float)
    d = np.asarray(d, float)
    if theta.shape != (sys.p,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({sys.p},)")
    if d.shape != (sys.l,):
        raise ValueError(f"d has shape {d.shape}, expected ({sys.l},)")

    if isinstance(sys, PureStrictFeedbackSystem):
        x = np.asarray(state, float)
        if x.shape != (sys.n,):
            raise ValueError(f"state has shape {x.shape}, expected ({sys.n},)")
        out = np.empty(sys.n)
        for i in range(sys.n):
            head = tuple(x[: i + 1])
            nxt = x[i + 1] if i + 1 < sys.n else u
            out[i] = (
                sys.h[i](*head)
                + sys.g[i](*head, *theta) * nxt
                + _dot(sys.phi[i](*head), theta)
                + _dot(sys.alpha[i](*head), d)
            )
        return out

    x = np.asarray(state[: sys.n], float)
    y = np.asarray(state[sys.n :], float)
    if len(state) != sys.n + sys.m:
        raise ValueError(f"state has length {len(state)}, expected {sys.n + sys.m}")
    out = np.empty(sys.n + sys.m)
    out[: sys.n - 1] = x[1:]
    out[sys.n - 1] = y[0]
    for j in range(sys.m):
        head = tuple(x) + tuple(y[: j + 1])
        nxt = y[j + 1] if j + 1 < sys.m else u
        out[sys.n + j] = (
            sys.h[j](*head)
            + sys.g[j](*head, *theta) * nxt
            + _dot(sys.phi[j](*head), theta)
            + _dot(sys.alpha[j](*head), d)
        )
    return out


@dataclass
class MajorantReport:
    worst_margin_low: float
    worst_margin_high: float
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations


def validate_majorants(
    sys, n_samples: int = 500, box_radius: float = 5.0, seed: int = 0
) -> MajorantReport:
    """Sampled check of eta_j <= g_j and g_j <= mu_j (1 + |theta|)."""
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    pure = isinstance(sys, PureStrictFeedbackSystem)
    levels = sys.n if pure else sys.m
    worst_low = math.inf
    worst_high = math.inf
    violations = []
    for _ in range(n_samples):
        state = rng.uniform(-box_radius, box_radius, sys.state_dim)
        theta = sys.theta_domain.sample(rng)
        for j in range(levels):
            head = tuple(state[: j + 1]) if pure else tuple(state[: sys.n + j + 1])
            gval = sys.g[j](*head, *theta)
            low = gval - sys.eta[j](*head)
            worst_low = min(worst_low, low)
            if low < 0:
                violations.append(("eta", j + 1, tuple(state), tuple(theta), low))
            if j < levels - 1:
                high = sys.mu[j](*head) * (1.0 + np.linalg.norm(theta)) - gval
                worst_high = min(worst_high, high)
                if high < 0:
                    violations.append(("mu", j + 1, tuple(state), tuple(theta), high))
    return MajorantReport(worst_low, worst_high, violations)


@dataclass(frozen=True)
class DisturbanceProfile:
    """Deterministic disturbance signal d(t), defined for all t >= 0."""

    kind: str  # zero | sinusoid-bank | vanishing | custom-table
    dim: int
    amplitudes: tuple[float, ...] = ()
    frequencies: tuple[float, ...] = ()
    decay: float = 0.0
    table_t: tuple[float, ...] = ()
    table_v: tuple[tuple[float, ...], ...] = ()

    def __call__(self, t: float) -> np.ndarray:
        return sample_disturbance(self, t)


def zero_disturbance(dim: int) -> DisturbanceProfile:
    return DisturbanceProfile("zero", dim)


def sinusoid_bank(amplitudes: Sequence[float], frequencies: Sequence[float]) -> DisturbanceProfile:
    if len(amplitudes) != len(frequencies):
        raise ValueError("amplitudes and frequencies must have equal length")
    return DisturbanceProfile(
        "sinusoid-bank", len(amplitudes), tuple(amplitudes), tuple(frequencies)
    )


def vanishing_disturbance(
    amplitudes: Sequence[float], frequencies: Sequence[float], decay: float
) -> DisturbanceProfile:
    return DisturbanceProfile(
        "vanishing", len(amplitudes), tuple(amplitudes), tuple(frequencies), decay
    )


def custom_table(times: Sequence[float], values: Sequence[Sequence[float]]) -> DisturbanceProfile:
    values = [tuple(v) for v in values]
    return DisturbanceProfile(
        "custom-table",
        len(values[0]),
        table_t=tuple(times),
        table_v=tuple(values),
    )


def sample_disturbance(profile: DisturbanceProfile, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("disturbance signals are defined for t >= 0")
    if profile.kind == "zero":
        return np.zeros(profile.dim)
    if profile.kind == "sinusoid-bank":
        return np.array(
            [a * math.cos(w * t) for a, w in zip(profile.amplitudes, profile.frequencies)]
        )
    if profile.kind == "vanishing":
        e = math.exp(-profile.decay * t)
        return np.array(
            [a * math.cos(w * t) * e for a, w in zip(profile.amplitudes, profile.frequencies)]
        )
    if profile.kind == "custom-table":
        # out-of-range times hold the nearest tabulated value
        ts = np.asarray(profile.table_t)
        vs = np.asarray(profile.table_v)
        return np.array([np.interp(t, ts, vs[:, k]) for k in range(profile.dim)])
    raise ValueError(f"unknown disturbance kind {profile.kind!r}")


@dataclass(frozen=True)
class ParameterSignal:
    """theta(t): constant, or piecewise-linear from a table."""

    kind: str  # constant | time-varying-table
    dim: int
    value: tuple[float, ...] = ()
    table_t: tuple[float, ...] = ()
    table_v: tuple[tuple[float, ...], ...] = ()

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return np.asarray(self.value, float)
        ts = np.asarray(self.table_t)
        vs = np.asarray(self.table_v)
        return np.array([np.interp(t, ts, vs[:, k]) for k in range(self.dim)])


def constant_parameter(value: Sequence[float]) -> ParameterSignal:
    return ParameterSignal("constant", len(value), tuple(value))


# ---------------------------------------------------------------------------
# Built-in plants
# ---------------------------------------------------------------------------

def wingrock() -> PureStrictFeedbackSystem:
    """Aircraft wing-rock plant: a 3-state pure strict-feedback chain.

    x1' = x2
    x2' = th1 x1 + th2 x2 + th3 x1 x2 + th4 x2^2 + x3 + d1
    x3' = u + d2

    All controlled gains are 1, so eta = mu = 1 hold with equality.
    """
    one = SmoothMap(1, lambda *a: 1.0, name="one")

    def const(arity, value, codim=1, name=""):
        if codim == 1:
            return SmoothMap(arity, lambda *a: value, name=name)
        return SmoothMap(arity, lambda *a: (value,) * codim, codim=codim, name=name)

    h = (const(1, 0.0, name="h1"), const(2, 0.0, name="h2"), const(3, 0.0, name="h3"))
    phi = (
        const(1, 0.0, codim=4, name="phi1"),
        SmoothMap(2, lambda x1, x2: (x1, x2, x1 * x2, x2 * x2), codim=4, name="phi2"),
        const(3, 0.0, codim=4, name="phi3"),
    )
    alpha = (
        const(1, 0.0, codim=2, name="alpha1"),
        SmoothMap(2, lambda x1, x2: (1.0, 0.0), codim=2, name="alpha2"),
        SmoothMap(3, lambda x1, x2, x3: (0.0, 1.0), codim=2, name="alpha3"),
    )
    g = tuple(
        SmoothMap(i + 1 + 4, lambda *a: 1.0, name=f"g{i + 1}") for i in range(3)
    )
    eta = tuple(SmoothMap(i + 1, lambda *a: 1.0, name=f"eta{i + 1}") for i in range(3))
    mu = tuple(SmoothMap(i + 1, lambda *a: 1.0, name=f"mu{i + 1}") for i in range(2))
    return PureStrictFeedbackSystem(
        n=3, h=h, phi=phi, alpha=alpha, g=g, eta=eta, mu=mu,
        p=4, l=2, theta_domain=free_theta(4),
    )


_BUILTINS = {"wingrock": wingrock}


def get_system(name: str):
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise KeyError(
            f"unknown built-in system {name!r}; available: {sorted(_BUILTINS)}"
        ) from None
