"""Band and system descriptions plus constructors for concrete problem instances.

Everything here is a plain immutable value object.  Stochastic constructors
take an explicit 64-bit seed and draw from a named generator (PCG64), so a
given (spec, seed) pair reproduces the same instance on any platform.

Units are atomic units (hbar = 1) throughout.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, ResourceLimitError

# Generator contract for every stochastic operation in the package.
RNG_NAME = "pcg64"


def make_rng(seed: int) -> np.random.Generator:
    """Return the package-wide deterministic generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class DiscreteBand:
    """Isolated level at ``e0`` plus a finite band of (energy, coupling) levels.

    Level energies are sorted ascending and couplings are real.  This is the
    input to the brute-force propagators in :mod:`levelband.discrete_oracle`.
    """

    e0: float
    energies: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        couplings = np.asarray(self.couplings, dtype=float)
        if energies.shape != couplings.shape or energies.ndim != 1:
            raise DomainError("energies and couplings must be 1-D arrays of equal length")
        if energies.size >= 2 and np.any(np.diff(energies) < 0):
            raise DomainError("band energies must be sorted ascending")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "couplings", couplings)
        energies.setflags(write=False)
        couplings.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.energies.size)

    @property
    def mean_spacing(self) -> float:
        """Mean level spacing (max - min)/(M - 1); requires M >= 2."""
        if self.size < 2:
            raise DomainError("mean spacing needs at least two band levels")
        spacing = (self.energies[-1] - self.energies[0]) / (self.size - 1)
        if spacing <= 0:
            raise DomainError("band has zero energy span")
        return float(spacing)

    @property
    def heisenberg_time(self) -> float:
        """2*pi over the mean level spacing; recurrences appear beyond it."""
        return 2.0 * np.pi / self.mean_spacing

    def to_csv(self) -> str:
        """CSV with one row per level: index, energy, coupling."""
        lines = ["index,energy,coupling"]
        for i, (e, v) in enumerate(zip(self.energies, self.couplings)):
            lines.append(f"{i},{e:.17g},{v:.17g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ContinuumEdgeParams:
    """Uniform semi-infinite band with an edge at E = 0.

    ``e0`` is the isolated-level energy (negative: a gap below the edge),
    ``g`` the band state density, ``v`` the uniform coupling and ``gamma``
    the band cutoff.  Derived quantities: ``w = g v**2`` (rate/width scale)
    and ``ebar0 = -e0 + w log(gamma)`` (gap renormalized by the cutoff log).
    """

    e0: float
    g: float
    v: float
    gamma: float

    def __post_init__(self):
        if self.e0 >= 0:
            raise DomainError("isolated level must sit below the edge (e0 < 0)")
        if self.g <= 0 or self.gamma <= 0:
            raise DomainError("state density and cutoff must be positive")
        if self.w <= 0:
            raise DomainError("w = g v^2 must be positive")
        if self.ebar0 <= 0:
            raise DomainError("renormalized gap ebar0 = -e0 + w log(gamma) must be positive")

    @property
    def w(self) -> float:
        return self.g * self.v * self.v

    @property
    def ebar0(self) -> float:
        return -self.e0 + self.w * np.log(self.gamma)

    def to_config(self) -> str:
        return _params_to_config("edge_band", {
            "e0": self.e0, "g": self.g, "v": self.v, "gamma": self.gamma,
        })

    @classmethod
    def from_config(cls, text: str) -> "ContinuumEdgeParams":
        values = _params_from_config(text, "edge_band")
        return cls(e0=values["e0"], g=values["g"], v=values["v"], gamma=values["gamma"])


@dataclass(frozen=True)
class Spoiler:
    """A band state with anomalously strong coupling, inside (0, gamma)."""

    e_s: float
    v_s: float

    def validate(self, gamma: Optional[float] = None) -> "Spoiler":
        if self.e_s <= 0:
            raise DomainError("spoiler energy must be strictly positive")
        if gamma is not None and self.e_s >= gamma:
            raise DomainError("spoiler energy must lie strictly below the cutoff")
        return self


@dataclass(frozen=True)
class SpoilerEnsembleSpec:
    """Statistical law for a batch of spoilers.

    Positions are uniform on (0, gamma); couplings uniform on [0, v_max].
    ``v_max`` defaults to 10x the uniform band coupling when drawn via
    :func:`sample_spoilers`.
    """

    count: int
    v_max: float
    seed: int

    def __post_init__(self):
        if self.count < 0:
            raise DomainError("spoiler count must be >= 0")
        if self.v_max < 0:
            raise DomainError("v_max must be >= 0")

    def to_config(self) -> str:
        return _params_to_config("spoiler_ensemble", {
            "count": self.count, "v_max": self.v_max, "seed": self.seed,
        })

    @classmethod
    def from_config(cls, text: str) -> "SpoilerEnsembleSpec":
        values = _params_from_config(text, "spoiler_ensemble")
        return cls(count=int(values["count"]), v_max=values["v_max"], seed=int(values["seed"]))


@dataclass(frozen=True)
class CouplingStatistics:
    """Coupling-strength statistics, either as moments or as a power law.

    Moment form keeps the second moment ``w = \\int g(V) V^2 dV`` and the
    fourth moment ``u = \\int g(V) V^4 dV``.  Power-law form is a density
    proportional to V**(-alpha) on [v_min, v_max] with a total level density
    ``density`` (levels per unit energy).
    """

    kind: str
    w: float = 0.0
    u: float = 0.0
    alpha: float = 0.0
    v_min: float = 0.0
    v_max: float = 0.0
    density: float = 0.0

    @classmethod
    def from_moments(cls, w: float, u: float) -> "CouplingStatistics":
        if w <= 0:
            raise DomainError("second moment w must be positive")
        if u < 0:
            raise DomainError("fourth moment u must be >= 0")
        return cls(kind="moments", w=float(w), u=float(u))

    @classmethod
    def power_law(cls, alpha: float, v_min: float, v_max: float,
                  density: float) -> "CouplingStatistics":
        if not v_max > v_min > 0:
            raise DomainError("power law needs v_max > v_min > 0 (v_min = 0 diverges)")
        if density <= 0:
            raise DomainError("total level density must be positive")
        return cls(kind="power_law", alpha=float(alpha), v_min=float(v_min),
                   v_max=float(v_max), density=float(density))

    @property
    def is_moment_form(self) -> bool:
        return self.kind == "moments"

    def moment(self, order: int) -> float:
        """Analytic moment <V**order> of the truncated power law."""
        if self.kind != "power_law":
            raise DomainError("analytic moments are defined for the power-law form")
        a, b, al = self.v_min, self.v_max, self.alpha
        num = _power_integral(a, b, order - al)
        den = _power_integral(a, b, -al)
        return num / den

    def sample_couplings(self, m: int, rng: np.random.Generator) -> np.ndarray:
        """Draw m couplings by inverse CDF of the truncated power law."""
        if self.kind != "power_law":
            raise DomainError("sampling is defined for the power-law form")
        a, b, al = self.v_min, self.v_max, self.alpha
        uni = rng.random(m)
        p = 1.0 - al
        # Logarithmic branch when the exponent integral degenerates (alpha ~ 1).
        if abs(p) < 1e-12:
            return a * (b / a) ** uni
        return (a ** p + uni * (b ** p - a ** p)) ** (1.0 / p)

    def to_config(self) -> str:
        if self.kind == "moments":
            return _params_to_config("coupling_statistics",
                                     {"kind": "moments", "w": self.w, "u": self.u})
        return _params_to_config("coupling_statistics", {
            "kind": "power_law", "alpha": self.alpha, "v_min": self.v_min,
            "v_max": self.v_max, "density": self.density,
        })


def _power_integral(a: float, b: float, exponent: float) -> float:
    """integral of V**exponent over [a, b], with the log branch at -1."""
    p = exponent + 1.0
    if abs(p) < 1e-12:
        return float(np.log(b / a))
    return float((b ** p - a ** p) / p)


@dataclass(frozen=True)
class SpinEnsembleSpec:
    """Demo spectrum generator for N two-level atoms with diagonal couplings.

    The Hamiltonian is diagonal in the computational basis: a sum of single
    atom terms ``omega * s_n`` with s_n = +-1, plus random k-body products
    ``c * s_i s_j ...`` for each requested interaction order.  Coupling
    constants are drawn uniformly from [-scale, scale] per k-subset.
    """

    n_atoms: int
    omega: float
    interaction_orders: tuple = ()
    coupling_scales: tuple = ()
    seed: int = 0

    def __post_init__(self):
        orders = tuple(int(k) for k in self.interaction_orders)
        scales = tuple(float(s) for s in self.coupling_scales)
        if len(orders) != len(scales):
            raise DomainError("one coupling scale is required per interaction order")
        if any(k not in (2, 3, 4) for k in orders):
            raise DomainError("interaction orders must be a subset of {2, 3, 4}")
        if self.n_atoms < 1:
            raise DomainError("need at least one atom")
        object.__setattr__(self, "interaction_orders", orders)
        object.__setattr__(self, "coupling_scales", scales)


def build_uniform_edge_band(params: ContinuumEdgeParams, m: int) -> DiscreteBand:
    """Discretize the uniform edge band into m equidistant levels on [0, gamma].

    The realized density m/gamma matches params.g to one part in m when the
    caller chooses m = g * gamma.
    """
    if m < 2:
        raise DomainError("uniform edge band needs at least 2 levels")
    energies = np.linspace(0.0, params.gamma, m)
    couplings = np.full(m, params.v)
    return DiscreteBand(e0=params.e0, energies=energies, couplings=couplings)


def build_renormalized_edge_band(w: float, ebar0: float, g_edge: float,
                                 e_dense: float, e_cut: float,
                                 growth: float = 1.02) -> DiscreteBand:
    """Discretize the semi-infinite edge model at fixed renormalized gap.

    The analytic edge model folds its upper cutoff into the renormalized
    gap ``ebar0``; a faithful finite comparison band therefore carries a
    dense uniform section [0, e_dense] at density ``g_edge`` plus a graded
    log-spaced tail up to ``e_cut`` whose couplings carry the local level
    weight (v_n^2 = w * spacing_n), and an isolated level placed at
    e0 = -ebar0 + w log(e_cut) so both sides share the same ebar0 up to
    O(w |eps|/e_cut).
    """
    if not (0 < e_dense < e_cut):
        raise DomainError("need 0 < e_dense < e_cut")
    if growth <= 1.0:
        raise DomainError("tail growth factor must exceed 1")
    m_dense = int(round(g_edge * e_dense))
    if m_dense < 2:
        raise DomainError("dense section must hold at least 2 levels")
    spacing = e_dense / m_dense
    dense = (np.arange(m_dense) + 0.5) * spacing
    v_dense = np.full(m_dense, np.sqrt(w * spacing))
    tail_edges = [e_dense]
    step = spacing * growth
    while tail_edges[-1] < e_cut:
        tail_edges.append(tail_edges[-1] + step)
        step *= growth
    tail_edges = np.asarray(tail_edges)
    tail_mid = 0.5 * (tail_edges[1:] + tail_edges[:-1])
    tail_dv = np.diff(tail_edges)
    energies = np.concatenate([dense, tail_mid])
    couplings = np.concatenate([v_dense, np.sqrt(w * tail_dv)])
    e0 = -ebar0 + w * np.log(tail_edges[-1])
    return DiscreteBand(e0=e0, energies=energies, couplings=couplings)


def sample_power_law_band(stats: CouplingStatistics, m: int,
                          energy_span: tuple, e0: float,
                          seed: int) -> DiscreteBand:
    """Random band: energies i.i.d. uniform on the span, power-law couplings."""
    if stats.kind != "power_law":
        raise DomainError("sample_power_law_band needs power-law statistics")
    if m < 1:
        raise DomainError("need at least one band level")
    lo, hi = float(energy_span[0]), float(energy_span[1])
    if not hi > lo:
        raise DomainError("energy span must be a nonempty interval")
    rng = make_rng(seed)
    energies = np.sort(rng.uniform(lo, hi, m))
    couplings = stats.sample_couplings(m, rng)
    return DiscreteBand(e0=e0, energies=energies, couplings=couplings)


def sample_spoilers(spec: SpoilerEnsembleSpec,
                    base: ContinuumEdgeParams) -> list:
    """Draw spec.count spoilers over the band of ``base``.

    Positions are uniform on (0, gamma) and couplings uniform on [0, v_max].
    """
    rng = make_rng(spec.seed)
    out = []
    for _ in range(spec.count):
        e_s = rng.uniform(0.0, base.gamma)
        while e_s == 0.0:
            e_s = rng.uniform(0.0, base.gamma)
        v_s = rng.uniform(0.0, spec.v_max)
        out.append(Spoiler(e_s=e_s, v_s=v_s).validate(base.gamma))
    return out


def default_spoiler_vmax(params: ContinuumEdgeParams) -> float:
    """Conventional coupling ceiling for random spoilers: 10x the band coupling."""
    return 10.0 * params.v


def spin_ensemble_terms(spec: SpinEnsembleSpec) -> list:
    """Random k-body diagonal terms for the spec: [(atom tuple, constant), ...]."""
    rng = make_rng(spec.seed)
    terms = []
    for order, scale in zip(spec.interaction_orders, spec.coupling_scales):
        for combo in combinations(range(spec.n_atoms), order):
            terms.append((combo, float(rng.uniform(-scale, scale))))
    return terms


def spin_spectrum_from_terms(n_atoms: int, omega: float, terms: Sequence):
    """Diagonal spectrum for explicit k-body terms on sigma_z values +-1.

    A single atom contributes omega * s_n with s_n = +-1, so one spin with
    no interactions has energies {-omega, +omega}.
    """
    if n_atoms > 16:
        raise ResourceLimitError("spin ensemble demo supports at most 16 atoms")
    states = np.arange(2 ** n_atoms, dtype=np.int64)
    bits = ((states[:, None] >> np.arange(n_atoms)) & 1).astype(float)
    sigma = 2.0 * bits - 1.0  # +1 excited, -1 ground
    energies = omega * sigma.sum(axis=1)
    for combo, c in terms:
        energies = energies + c * np.prod(sigma[:, list(combo)], axis=1)
    idx = np.argsort(energies, kind="stable")
    return energies[idx], bits.sum(axis=1).astype(int)[idx]


def spin_ensemble_spectrum(spec: SpinEnsembleSpec):
    """Energies of the diagonal ensemble Hamiltonian over all 2^N basis states.

    Returns (energies, excitations): both sorted by energy, ``excitations``
    giving the number of excited atoms of each basis state.
    """
    return spin_spectrum_from_terms(spec.n_atoms, spec.omega, spin_ensemble_terms(spec))


def _params_to_config(section: str, values: dict) -> str:
    parser = configparser.ConfigParser()
    parser[section] = {k: _fmt(v) for k, v in values.items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def _params_from_config(text: str, section: str) -> dict:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    if section not in parser:
        raise DomainError(f"config is missing the [{section}] section")
    out = {}
    for key, raw in parser[section].items():
        try:
            out[key] = float(raw)
        except ValueError:
            out[key] = raw
    return out


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)
