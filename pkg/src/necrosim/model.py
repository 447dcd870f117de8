"""Growth and consumption laws, model parameters and numerics settings.

Every law is an immutable dataclass that evaluates on scalars or arrays.
Each law can also ``encode()`` itself as ``(kind, params, table_x, table_y)``
so the compiled kernels in :mod:`necrosim._kernels` can evaluate it without
calling back into Python.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

IN_VITRO = "in_vitro"
IN_VIVO = "in_vivo"

# TwoLevel saturation test
SATURATION_ATOL = 1e-12

_EMPTY = np.zeros(1)


def _as_float_array(v):
    return np.asarray(v, dtype=float)


# --------------------------------------------------------------------------
# growth laws
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IgnitionConstant:
    """G = g_plus for c >= c_thresh, -g_minus below."""

    g_plus: float
    g_minus: float
    c_thresh: float

    def __post_init__(self):
        if not (self.g_plus > 0 and self.g_minus > 0):
            raise ValueError("g_plus and g_minus must be positive")
        if not self.c_thresh > 0:
            raise ValueError("c_thresh must be positive")

    def __call__(self, c):
        c = _as_float_array(c)
        out = np.where(c >= self.c_thresh, self.g_plus, -self.g_minus)
        return out if out.ndim else float(out)

    @property
    def lipschitz(self) -> float:
        return 0.0

    def at_threshold(self) -> float:
        return self.g_plus

    def sup(self, c_max: float) -> float:
        return self.g_plus

    def encode(self):
        return 0, np.array([self.g_plus, self.g_minus, self.c_thresh]), _EMPTY, _EMPTY


@dataclass(frozen=True)
class IgnitionAffine:
    """G = -g_minus below c_thresh, slope*(c - c_thresh) + intercept above."""

    g_minus: float
    slope: float
    intercept: float
    c_thresh: float

    def __post_init__(self):
        if not self.g_minus > 0:
            raise ValueError("g_minus must be positive")
        if self.slope < 0:
            raise ValueError("slope must be non-negative")
        if not self.intercept > 0:
            raise ValueError("intercept must be positive")
        if not self.c_thresh > 0:
            raise ValueError("c_thresh must be positive")

    def __call__(self, c):
        c = _as_float_array(c)
        out = np.where(c >= self.c_thresh,
                       self.slope * (c - self.c_thresh) + self.intercept,
                       -self.g_minus)
        return out if out.ndim else float(out)

    @property
    def lipschitz(self) -> float:
        return self.slope

    def at_threshold(self) -> float:
        return self.intercept

    def sup(self, c_max: float) -> float:
        return self.slope * max(c_max - self.c_thresh, 0.0) + self.intercept

    def encode(self):
        prm = np.array([self.g_minus, self.slope, self.intercept, self.c_thresh])
        return 1, prm, _EMPTY, _EMPTY


@dataclass(frozen=True)
class IgnitionGeneral:
    """Ignition law with a tabulated, non-decreasing positive branch.

    Above the table the last value is held.  ``lipschitz`` is the
    user-supplied bound on G' used by :func:`validate`.
    """

    g_minus: float
    c_thresh: float
    c_table: np.ndarray
    g_table: np.ndarray
    lipschitz: float = math.inf

    def __post_init__(self):
        ct = np.ascontiguousarray(self.c_table, dtype=float)
        gt = np.ascontiguousarray(self.g_table, dtype=float)
        object.__setattr__(self, "c_table", ct)
        object.__setattr__(self, "g_table", gt)
        if ct.ndim != 1 or ct.shape != gt.shape or ct.size < 2:
            raise ValueError("c_table and g_table must be 1-D of equal length >= 2")
        if np.any(np.diff(ct) <= 0):
            raise ValueError("c_table must be strictly increasing")
        if abs(ct[0] - self.c_thresh) > 1e-14:
            raise ValueError("c_table must start at c_thresh")
        if np.any(gt <= 0):
            raise ValueError("tabulated growth must be positive")
        if not self.g_minus > 0:
            raise ValueError("g_minus must be positive")

    @classmethod
    def from_callable(cls, g_minus, c_thresh, func: Callable, c_max: float,
                      n_samples: int = 2001, lipschitz: float = math.inf):
        ct = np.linspace(c_thresh, c_max, n_samples)
        gt = np.array([func(v) for v in ct], dtype=float)
        return cls(g_minus, c_thresh, ct, gt, lipschitz)

    def __call__(self, c):
        c = _as_float_array(c)
        out = np.where(c >= self.c_thresh,
                       np.interp(c, self.c_table, self.g_table),
                       -self.g_minus)
        return out if out.ndim else float(out)

    def at_threshold(self) -> float:
        return float(self.g_table[0])

    def sup(self, c_max: float) -> float:
        return float(np.interp(c_max, self.c_table, self.g_table))

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.g_table) >= 0))

    def encode(self):
        return 2, np.array([self.g_minus, self.c_thresh]), self.c_table, self.g_table


GrowthLaw = Union[IgnitionConstant, IgnitionAffine, IgnitionGeneral]


def eval_growth(law: GrowthLaw, c):
    """Growth rate G(c). At c == c_thresh the positive branch is used."""
    return law(c)


# --------------------------------------------------------------------------
# consumption laws
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoLevel:
    """psi = lam for saturated cells (n == 1), lam*n_c otherwise."""

    lam: float
    n_c: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not 0 < self.n_c < 1:
            raise ValueError("n_c must lie in (0, 1)")

    def __call__(self, n):
        n = _as_float_array(n)
        out = np.where(np.abs(n - 1.0) <= SATURATION_ATOL, self.lam, self.lam * self.n_c)
        return out if out.ndim else float(out)

    @property
    def lipschitz(self) -> float:
        return math.inf

    def encode(self):
        return 0, np.array([self.lam, self.n_c]), _EMPTY, _EMPTY


@dataclass(frozen=True)
class Linear:
    """psi(n) = coef * n."""

    coef: float

    def __post_init__(self):
        if not self.coef > 0:
            raise ValueError("coef must be positive")

    def __call__(self, n):
        n = _as_float_array(n)
        out = self.coef * n
        return out if out.ndim else float(out)

    @property
    def lipschitz(self) -> float:
        return self.coef

    def encode(self):
        return 1, np.array([self.coef]), _EMPTY, _EMPTY


@dataclass(frozen=True)
class GeneralMonotone:
    """Tabulated consumption on [0, 1], linearly interpolated."""

    n_table: np.ndarray
    psi_table: np.ndarray
    lipschitz: float = math.inf

    def __post_init__(self):
        nt = np.ascontiguousarray(self.n_table, dtype=float)
        pt = np.ascontiguousarray(self.psi_table, dtype=float)
        object.__setattr__(self, "n_table", nt)
        object.__setattr__(self, "psi_table", pt)
        if nt.ndim != 1 or nt.shape != pt.shape or nt.size < 2:
            raise ValueError("n_table and psi_table must be 1-D of equal length >= 2")
        if nt[0] != 0.0 or nt[-1] != 1.0 or np.any(np.diff(nt) <= 0):
            raise ValueError("n_table must increase strictly from 0 to 1")
        if np.any(pt < 0):
            raise ValueError("consumption must be non-negative")

    @classmethod
    def from_callable(cls, func: Callable, n_samples: int = 2001,
                      lipschitz: float = math.inf):
        nt = np.linspace(0.0, 1.0, n_samples)
        pt = np.array([func(v) for v in nt], dtype=float)
        return cls(nt, pt, lipschitz)

    def __call__(self, n):
        n = _as_float_array(n)
        out = np.interp(n, self.n_table, self.psi_table)
        return out if out.ndim else float(out)

    def encode(self):
        return 2, _EMPTY, self.n_table, self.psi_table


ConsumptionLaw = Union[TwoLevel, Linear, GeneralMonotone]


def eval_consumption(law: ConsumptionLaw, n):
    """Consumption rate psi(n); rejects densities outside [0, 1]."""
    arr = _as_float_array(n)
    if np.any(arr < -SATURATION_ATOL) or np.any(arr > 1.0 + SATURATION_ATOL):
        raise ValueError("density outside [0, 1]: corrupted state")
    return law(n)


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NumericsConfig:
    h: float = 2e-3
    dt: float = 1e-2
    psor_omega: float = 1.8
    psor_tol: float = 1e-8
    eps_coincidence: float = 1e-9
    L_trunc: float = 40.0
    bisect_tol: float = 1e-12
    max_iter: int = 200_000
    ode_dt: float = 5e-3

    def __post_init__(self):
        for name in ("h", "dt", "psor_tol", "eps_coincidence", "L_trunc",
                     "bisect_tol", "ode_dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.max_iter > 0:
            raise ValueError("max_iter must be positive")
        if not 0 < self.psor_omega < 2:
            raise ValueError("psor_omega must lie in (0, 2)")


@dataclass(frozen=True)
class ModelParams:
    c_B: float
    growth: GrowthLaw
    consumption: ConsumptionLaw
    nutrient_mode: str = IN_VITRO

    def __post_init__(self):
        if not self.c_B > 0:
            raise ValueError("c_B must be positive")
        if self.nutrient_mode not in (IN_VITRO, IN_VIVO):
            raise ValueError(f"unknown nutrient_mode {self.nutrient_mode!r}")

    @property
    def c_thresh(self) -> float:
        return self.growth.c_thresh

    @property
    def g_minus(self) -> float:
        return self.growth.g_minus


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

@dataclass
class ValidationReport:
    """Outcome of each standing-assumption check; ``None`` means not applicable."""

    checks: dict = field(default_factory=dict)
    smallness_value: float = math.nan

    @property
    def ok(self) -> bool:
        return all(v is not False for v in self.checks.values())

    @property
    def violations(self) -> list:
        return [k for k, v in self.checks.items() if v is False]

    def __str__(self):
        lines = [f"{k:>22}: {'n/a' if v is None else ('ok' if v else 'VIOLATED')}"
                 for k, v in self.checks.items()]
        lines.append(f"{'smallness value':>22}: {self.smallness_value:.6g}")
        return "\n".join(lines)


def _psi_lipschitz(law: ConsumptionLaw) -> float:
    if isinstance(law, GeneralMonotone) and math.isinf(law.lipschitz):
        d = np.diff(law.psi_table) / np.diff(law.n_table)
        return float(np.max(np.abs(d)))
    return law.lipschitz


def _growth_lipschitz(law: GrowthLaw) -> float:
    if isinstance(law, IgnitionGeneral) and math.isinf(law.lipschitz):
        d = np.diff(law.g_table) / np.diff(law.c_table)
        return float(np.max(np.abs(d)))
    return law.lipschitz


def validate(params: ModelParams) -> ValidationReport:
    """Check the standing assumptions on a parameter set. Never raises."""
    g, psi, c_B = params.growth, params.consumption, params.c_B
    rep = ValidationReport()
    rep.checks["c_thresh < c_B"] = g.c_thresh < c_B
    rep.checks["n_c < 1"] = (psi.n_c < 1) if isinstance(psi, TwoLevel) else None
    # the two-level law is positive at n = 0 by construction
    rep.checks["psi(0) = 0"] = None if isinstance(psi, TwoLevel) else abs(float(psi(0.0))) <= 1e-14

    if isinstance(psi, GeneralMonotone):
        psi_mono = bool(np.all(np.diff(psi.psi_table) >= 0))
    else:
        psi_mono = True
    g_mono = g.is_monotone() if isinstance(g, IgnitionGeneral) else True
    rep.checks["monotone laws"] = psi_mono and g_mono

    lp, lg = _psi_lipschitz(psi), _growth_lipschitz(g)
    if lp == 0.0 or lg == 0.0:
        value = 0.0
    else:
        value = c_B * lp * lg / (math.e * g.at_threshold())
    rep.smallness_value = value
    rep.checks["smallness"] = value < 1.0

    rep.checks["in-vivo threshold"] = g.c_thresh < c_B / (1.0 + math.sqrt(float(psi(1.0))))
    return rep
