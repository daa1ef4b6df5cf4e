"""Single-user IRS-assisted joint active/passive beamforming.

Received signal ``(h_irs^H diag(e^{j psi}) H_bs + h_d^H) f`` with unit-modulus
IRS coefficients and a BS power budget. Alternating maximisation: the matched
filter is optimal for fixed phases, and co-phasing every reflected term with
the direct term is optimal for a fixed ``f``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _cvec(v):
    if isinstance(v, dict):
        return np.asarray(v["re"], dtype=float) + 1j * np.asarray(v["im"], dtype=float)
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return v.astype(complex)
    v = v.astype(float)
    return v[..., 0::2] + 1j * v[..., 1::2]


@dataclass(frozen=True)
class IrsScenario:
    h_irs: np.ndarray
    h_d: np.ndarray
    H_bs: np.ndarray
    p_max: float = 1.0

    def __post_init__(self):
        h_irs = np.asarray(self.h_irs, dtype=complex).ravel()
        h_d = np.asarray(self.h_d, dtype=complex).ravel()
        H_bs = np.asarray(self.H_bs, dtype=complex).reshape(h_irs.size, h_d.size)
        if not self.p_max > 0:
            raise ValueError("p_max must be positive")
        object.__setattr__(self, "h_irs", h_irs)
        object.__setattr__(self, "h_d", h_d)
        object.__setattr__(self, "H_bs", H_bs)

    @property
    def n_irs(self) -> int:
        return self.h_irs.size

    @property
    def n_tx(self) -> int:
        return self.h_d.size

    @classmethod
    def from_dict(cls, d):
        """Complex arrays as ``{"re": .., "im": ..}`` or interleaved re/im (last axis)."""
        return cls(_cvec(d["h_irs"]), _cvec(d["h_d"]), _cvec(d["H_bs"]), float(d.get("p_max", 1.0)))

    @classmethod
    def random(cls, n_tx, n_irs, rng, p_max=1.0, direct_gain=1.0):
        """Rayleigh instance with unit-variance entries; ``direct_gain`` scales ``h_d``."""
        def cn(*shape):
            return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        return cls(cn(n_irs), np.sqrt(direct_gain) * cn(n_tx), cn(n_irs, n_tx), p_max)


@dataclass
class IrsSolution:
    phases: np.ndarray
    f: np.ndarray
    objective: float
    trace: list = field(default_factory=list)
    status: str = "ok"
    start_objectives: list = field(default_factory=list)


def irs_effective_channel(scenario: IrsScenario, phases) -> np.ndarray:
    """Row vector ``h_irs^H diag(e^{j psi}) H_bs + h_d^H`` (length N)."""
    phases = np.asarray(phases, dtype=float)
    if scenario.n_irs == 0:
        return scenario.h_d.conj()
    return (scenario.h_irs.conj() * np.exp(1j * phases)) @ scenario.H_bs + scenario.h_d.conj()


def _budget(scenario, literal_norm):
    # ||f|| <= sqrt(p) under the power reading, ||f|| <= p under the literal one
    return scenario.p_max if literal_norm else np.sqrt(scenario.p_max)


def matched_filter(c, radius):
    nc = np.linalg.norm(c)
    if nc == 0:
        f = np.zeros(c.size, dtype=complex)
        f[0] = radius
        return f
    return radius * c.conj() / nc


def received_power(scenario, phases, f) -> float:
    return float(np.abs(irs_effective_channel(scenario, phases) @ f) ** 2)


def _phase_step(scenario, f, phases):
    terms = scenario.h_irs.conj() * (scenario.H_bs @ f)
    direct = np.vdot(scenario.h_d, f)
    if abs(direct) > 0:
        ref = np.angle(direct)
    else:
        agg = terms @ np.exp(1j * phases)
        ref = np.angle(agg) if abs(agg) > 0 else 0.0
    new = np.where(np.abs(terms) > 0, ref - np.angle(terms), phases)
    return np.mod(new, 2 * np.pi)


def _run(scenario, phases, radius, max_iter, tol):
    c = irs_effective_channel(scenario, phases)
    f = matched_filter(c, radius)
    obj = radius**2 * float(np.vdot(c, c).real)
    trace = [obj]
    for _ in range(max_iter):
        phases = _phase_step(scenario, f, phases)
        c = irs_effective_channel(scenario, phases)
        f = matched_filter(c, radius)
        new = radius**2 * float(np.vdot(c, c).real)
        new = max(new, obj)  # co-phasing never loses; guard round-off only
        trace.append(new)
        done = new - obj <= tol * max(obj, 1e-300)
        obj = new
        if done:
            break
    return phases, f, trace


def irs_alternating(scenario: IrsScenario, max_iter: int = 100, tol: float = 1e-10, rng=None,
                    n_starts: int = 4, literal_norm: bool = False) -> IrsSolution:
    """Alternating optimisation of the BS beamformer and the IRS phases.

    Runs ``n_starts`` random phase initialisations plus one start aligned
    with the direct path (phase step against the direct-path matched filter)
    and returns the best. ``literal_norm`` switches the budget from
    ``||f||^2 <= p_max`` to ``||f|| <= p_max``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    radius = _budget(scenario, literal_norm)
    starts = [rng.uniform(0.0, 2 * np.pi, scenario.n_irs) for _ in range(n_starts)]
    if np.any(scenario.h_d):
        f_d = matched_filter(scenario.h_d.conj(), radius)
        starts.append(_phase_step(scenario, f_d, np.zeros(scenario.n_irs)))
    best = None
    start_objs = []
    for ph0 in starts:
        phases, f, trace = _run(scenario, ph0, radius, max_iter, tol)
        start_objs.append(trace[0])
        if best is None or trace[-1] > best[2][-1]:
            best = (phases, f, trace)
    phases, f, trace = best
    status = "ok" if trace[-1] > 0 else "degenerate: zero effective channel"
    return IrsSolution(phases=phases, f=f, objective=trace[-1], trace=trace, status=status,
                       start_objectives=start_objs)
