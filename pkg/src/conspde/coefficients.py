"""Coefficient sets for conservative SPDEs and sampled assumption checks.

Coefficients are assembled from named building blocks (no user code is
loaded) so that every set round-trips through a plain dict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import roots_legendre

Scalar = Callable[[np.ndarray], np.ndarray]


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ScalarFunction:
    """A function on ``[0, inf)`` with its first two derivatives."""

    value: Scalar
    d1: Scalar
    d2: Scalar
    kind: str
    params: dict = field(default_factory=dict, hash=False)

    def __call__(self, x):
        return self.value(x)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"


def zero_function() -> ScalarFunction:
    return ScalarFunction(_zero, _zero, _zero, "zero")


def identity_function() -> ScalarFunction:
    return ScalarFunction(lambda x: np.asarray(x, dtype=float) * 1.0, _one, _zero, "identity")


def linear_function(c: float) -> ScalarFunction:
    return ScalarFunction(lambda x: c * np.asarray(x, dtype=float), lambda x: c * _one(x), _zero,
                          "linear", {"c": c})


def constant_function(c: float) -> ScalarFunction:
    return ScalarFunction(lambda x: c * _one(x), _zero, _zero, "constant", {"c": c})


def cubic_function(a: float = 1.0) -> ScalarFunction:
    """``x + a x^3``."""
    return ScalarFunction(lambda x: x + a * x**3, lambda x: 1.0 + 3.0 * a * x**2, lambda x: 6.0 * a * x,
                          "cubic", {"a": a})


def sine_function(kappa: float) -> ScalarFunction:
    return ScalarFunction(lambda x: kappa * np.sin(x), lambda x: kappa * np.cos(x),
                          lambda x: -kappa * np.sin(x), "sine", {"kappa": kappa})


def sqrt_reg_function(delta: float = 1e-2, cap: float = 8.0) -> ScalarFunction:
    """Bounded smooth stand-in for ``sqrt(x)``.

    ``s(x) = sqrt(x + delta^2) - delta`` removes the infinite slope at zero;
    ``cap * tanh(s / cap)`` makes the result bounded with bounded derivatives.
    """
    if delta <= 0 or cap <= 0:
        raise ValueError("delta and cap must be positive")
    d2 = delta * delta

    def value(x):
        x = np.asarray(x, dtype=float)
        s = np.sqrt(x + d2) - delta
        return cap * np.tanh(s / cap)

    def d1(x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(x + d2)
        th = np.tanh((r - delta) / cap)
        return (1.0 - th * th) / (2.0 * r)

    def dd(x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(x + d2)
        th = np.tanh((r - delta) / cap)
        sech2 = 1.0 - th * th
        s1 = 1.0 / (2.0 * r)
        s2 = -1.0 / (4.0 * r**3)
        return sech2 * s2 - 2.0 * th * sech2 * s1 * s1 / cap

    return ScalarFunction(value, d1, dd, "sqrt_reg", {"delta": delta, "cap": cap})


_SCALARS = {
    "zero": lambda p: zero_function(),
    "identity": lambda p: identity_function(),
    "linear": lambda p: linear_function(float(p.get("c", 1.0))),
    "constant": lambda p: constant_function(float(p.get("c", 1.0))),
    "cubic": lambda p: cubic_function(float(p.get("a", 1.0))),
    "sine": lambda p: sine_function(float(p.get("kappa", 1.0))),
    "sqrt_reg": lambda p: sqrt_reg_function(float(p.get("delta", 1e-2)), float(p.get("cap", 8.0))),
}


def scalar_from_spec(spec: dict | str) -> ScalarFunction:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec["kind"]
    if kind not in _SCALARS:
        raise ValueError(f"unknown function kind {kind!r}; choose from {sorted(_SCALARS)}")
    return _SCALARS[kind]({k: v for k, v in spec.items() if k != "kind"})


def scalar_to_spec(fn: ScalarFunction) -> dict:
    return {"kind": fn.kind, **fn.params}


@dataclass(frozen=True)
class Flux:
    """Local flux ``nu(rho) = velocity * g(rho)`` with ``g`` linear or Burgers."""

    kind: str = "zero"
    velocity: tuple[float, ...] = ()

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or not any(self.velocity)

    def profile(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return x
        if self.kind == "burgers":
            return 0.5 * x * x
        return np.zeros_like(x)

    def magnitude(self, x):
        return math.hypot(*self.velocity) * np.abs(self.profile(x)) if self.velocity else _zero(x)

    def to_spec(self) -> dict:
        return {"kind": self.kind, "velocity": list(self.velocity)}


@dataclass(frozen=True)
class ConvolutionDrift:
    """Nonlocal drift ``B(rho) = K * rho`` with ``K_a(x) = strength sin(2 pi x_a)``.

    The Lipschitz constant from ``L^1`` to ``W^{1,inf}`` is
    ``sup|K| + sup|grad K| = strength (1 + 2 pi)``.
    """

    strength: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.strength == 0.0

    @property
    def lip(self) -> float:
        return abs(self.strength) * (1.0 + 2.0 * np.pi)

    def kernel_hat(self, n: int, dim: int, axis: int) -> np.ndarray:
        """FFT of the kernel component ``axis`` sampled on an ``n^dim`` grid, times h^dim."""
        x = (np.arange(n)) / n
        grids = np.meshgrid(*([x] * dim), indexing="ij")
        kern = self.strength * np.sin(2.0 * np.pi * grids[axis])
        return np.fft.fftn(kern) / n**dim

    def to_spec(self) -> dict:
        return {"kind": "convolution", "strength": self.strength}


@dataclass(frozen=True)
class CoefficientSet:
    """All nonlinearities of the SPDE

        d rho = [Lap Phi(rho) - div(nu(rho) + B(rho)) - f(rho)] dt
                - sqrt(eps) div(sigma(rho) dW).

    ``phi_linear`` is the coefficient ``a`` for which ``Phi - a * id`` is
    globally Lipschitz with small constant; the solver then treats the
    ``a Lap rho`` part implicitly.  Zero means fully explicit.
    """

    name: str
    phi: ScalarFunction
    sigma: ScalarFunction
    f: ScalarFunction
    nu: Flux = Flux()
    B: ConvolutionDrift = ConvolutionDrift()
    f_lip: float = 0.0
    epsilon: float = 0.0
    m: float = 1.0
    phi_linear: float = 0.0
    phi_inverse: Scalar | None = None
    spec: dict = field(default_factory=dict, hash=False, compare=False)

    @property
    def B_lip(self) -> float:
        return self.B.lip

    @property
    def noiseless(self) -> bool:
        return self.epsilon == 0.0 or self.sigma.is_zero

    def contraction_rate(self) -> float:
        return self.B_lip + self.f_lip

    def with_epsilon(self, epsilon: float) -> "CoefficientSet":
        spec = dict(self.spec)
        spec["epsilon"] = epsilon
        return coefficients_from_spec(spec)

    def invert_phi(self, v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """``Phi^{-1}`` on the odd extension ``Phi(-r) = -Phi(r)``."""
        v = np.asarray(v, dtype=float)
        if self.phi_inverse is not None:
            return self.phi_inverse(v)
        return invert_monotone(self.phi, v, tol)


def invert_monotone(phi: Callable, v: np.ndarray, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Bisection inverse of an increasing ``phi`` with ``phi(0) = 0``, oddly extended."""
    v = np.asarray(v, dtype=float)
    sign = np.sign(v)
    target = np.abs(v)
    lo = np.zeros_like(target)
    hi = np.maximum(target, 1.0)
    for _ in range(200):
        short = phi(hi) < target
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise FloatingPointError("Phi inversion failed: range does not cover target")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = phi(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
            break
    out = 0.5 * (lo + hi)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("Phi inversion produced non-finite values")
    return sign * out


# ---------------------------------------------------------------------------
# Stratonovich to Ito conversion


@dataclass(frozen=True)
class ItoCorrection:
    """``g(x) = int_0^x sigma'(s)^2 ds`` tabulated on a graded grid.

    Nodes are uniform in ``v = asinh(sqrt(x) / scale)``, which resolves the
    boundary layer of ``sigma'`` near zero.  Values come from cumulative
    composite Simpson; ``error_estimate`` is the Richardson difference against
    the half-resolution rule.  Evaluation uses cubic Hermite interpolation with
    the exact slopes, and linear extrapolation past ``xi_max``.
    """

    scale: float
    hv: float
    xi_max: float
    nodes: np.ndarray
    values: np.ndarray
    slopes_v: np.ndarray
    error_estimate: float
    coefficient: float

    def g(self, x):
        x = np.asarray(x, dtype=float)
        v = np.arcsinh(np.sqrt(np.maximum(x, 0.0)) / self.scale)
        last = len(self.values) - 1
        t = v / self.hv
        idx = np.minimum(t.astype(np.int64), last - 1)
        s = t - idx
        y0 = self.values[idx]
        y1 = self.values[idx + 1]
        m0 = self.slopes_v[idx] * self.hv
        m1 = self.slopes_v[idx + 1] * self.hv
        s2 = s * s
        s3 = s2 * s
        out = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1
        beyond = x > self.xi_max
        if np.any(beyond):
            slope = self._tail_slope
            out = np.where(beyond, self.values[-1] + slope * (x - self.xi_max), out)
        return out

    @property
    def _tail_slope(self) -> float:
        # dg/dx = (dg/dv) / (dx/dv) at the last node
        v = self.hv * (len(self.values) - 1)
        dxdv = 2.0 * self.scale**2 * np.sinh(v) * np.cosh(v)
        return float(self.slopes_v[-1] / dxdv)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return x + self.coefficient * self.g(x)


def strat_to_ito(dsigma: Scalar, epsilon: float, F1: float, xi_max: float = 64.0,
                 n_nodes: int = 4001, scale: float = 1e-2) -> ItoCorrection:
    """Ito form of Stratonovich conservative noise.

    The correction is folded into the diffusion:
    ``Phi(rho) = rho + (eps F1 / 2) g(rho)`` with ``g' = (sigma')^2``, ``g(0) = 0``.
    """
    if xi_max <= 0 or epsilon < 0 or F1 < 0:
        raise ValueError("need xi_max > 0, epsilon >= 0, F1 >= 0")
    if n_nodes % 2 == 0:
        n_nodes += 1
    v_max = float(np.arcsinh(np.sqrt(xi_max) / scale))
    v = np.linspace(0.0, v_max, n_nodes)
    hv = v[1] - v[0]
    sh = np.sinh(v)
    x = (scale * sh) ** 2
    dxdv = 2.0 * scale**2 * sh * np.cosh(v)
    integrand = np.asarray(dsigma(x), dtype=float) ** 2 * dxdv
    if not np.all(np.isfinite(integrand)):
        raise ValueError("sigma' is not finite on [0, xi_max]")
    fine = cumulative_simpson(integrand, dx=hv, initial=0.0)
    coarse = cumulative_simpson(integrand[::2], dx=2 * hv, initial=0.0)
    err = float(np.max(np.abs(fine[::2] - coarse)) / 15.0)
    return ItoCorrection(scale, hv, xi_max, x, fine, integrand, err, 0.5 * epsilon * F1)


# ---------------------------------------------------------------------------
# Presets and construction from dicts


def _dk_phi(corr: ItoCorrection, sigma: ScalarFunction) -> ScalarFunction:
    c = corr.coefficient
    if c == 0.0:
        return identity_function()
    return ScalarFunction(
        corr.phi,
        lambda x: 1.0 + c * sigma.d1(x) ** 2,
        lambda x: 2.0 * c * sigma.d1(x) * sigma.d2(x),
        "ito_corrected",
    )


PRESETS = ("heat", "sine_gordon", "dean_kawasaki")


def preset(name: str, **params) -> CoefficientSet:
    """Named example problems.

    heat
        ``Phi = id``, no noise coefficient, no drift.  Satisfies every sampled
        assumption on any range inside ``(0, inf)``.
    sine_gordon
        ``Phi = id``, ``f = kappa sin``, ``sigma`` given by ``params['sigma']``
        (default: bounded regularised square root with ``delta = 0.25``).
        Passes its report on ``(0, 100)`` when ``eps F1 < 8 delta^2``.
    dean_kawasaki
        Stratonovich noise with ``sigma`` the bounded regularised square root
        (floor ``delta_reg``), converted to Ito form via :func:`strat_to_ito`.
        Needs the noise constant ``F1``.  Passes its report on ``(0, 100)``
        for ``epsilon`` in ``[0, 1]``, ``F1 <= 20`` and ``delta_reg`` in ``[1e-2, 1]``.
    """
    return coefficients_from_spec({"preset": name, **params})


def coefficients_from_spec(spec: dict) -> CoefficientSet:
    spec = dict(spec)
    name = spec.get("preset", "custom")
    eps = float(spec.get("epsilon", 0.0))
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
    dim = int(spec.get("dim", 1))

    if name == "heat":
        return CoefficientSet("heat", identity_function(), zero_function(), zero_function(),
                              epsilon=eps, phi_linear=1.0, phi_inverse=lambda v: np.asarray(v, float) * 1.0,
                              spec=spec)
    if name == "sine_gordon":
        kappa = float(spec.get("kappa", 1.0))
        sigma = scalar_from_spec(spec.get("sigma", {"kind": "sqrt_reg", "delta": 0.25, "cap": 8.0}))
        return CoefficientSet("sine_gordon", identity_function(), sigma, sine_function(kappa),
                              f_lip=abs(kappa), epsilon=eps, phi_linear=1.0,
                              phi_inverse=lambda v: np.asarray(v, float) * 1.0, spec=spec)
    if name == "dean_kawasaki":
        delta = float(spec.get("delta_reg", 1e-2))
        cap = float(spec.get("cap", 8.0))
        if "F1" not in spec:
            raise ValueError("dean_kawasaki needs the noise constant F1")
        F1 = float(spec["F1"])
        sigma = sqrt_reg_function(delta, cap)
        corr = strat_to_ito(sigma.d1, eps, F1, scale=delta)
        return CoefficientSet("dean_kawasaki", _dk_phi(corr, sigma), sigma, zero_function(),
                              epsilon=eps, phi_linear=1.0, spec=spec)
    if name != "custom":
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")

    phi = scalar_from_spec(spec.get("phi", "identity"))
    sigma = scalar_from_spec(spec.get("sigma", "zero"))
    f = scalar_from_spec(spec.get("f", "zero"))
    nu_spec = spec.get("nu", {"kind": "zero"})
    vel = tuple(float(v) for v in nu_spec.get("velocity", [0.0] * dim))
    nu = Flux(nu_spec.get("kind", "zero"), vel)
    b_spec = spec.get("B", {"kind": "none"})
    B = ConvolutionDrift(float(b_spec.get("strength", 0.0)))
    f_lip = float(spec.get("f_lip", _default_f_lip(f)))
    phi_linear = 1.0 if phi.kind == "identity" else 0.0
    inverse = (lambda v: np.asarray(v, float) * 1.0) if phi.kind == "identity" else None
    return CoefficientSet("custom", phi, sigma, f, nu, B, f_lip, eps, float(spec.get("m", 1.0)),
                          phi_linear, inverse, spec)


def _default_f_lip(f: ScalarFunction) -> float:
    if f.kind in ("linear", "constant"):
        return abs(f.params["c"]) if f.kind == "linear" else 0.0
    if f.kind == "sine":
        return abs(f.params["kappa"])
    return 0.0


# ---------------------------------------------------------------------------
# Sampled assumption checks


@dataclass
class AssumptionEntry:
    name: str
    satisfied: bool | None
    worst_point: float
    margin: float
    detail: str = ""

    @property
    def status(self) -> str:
        if self.satisfied is None:
            return "unverifiable"
        return "ok" if self.satisfied else "violated"


@dataclass
class AssumptionReport:
    entries: list[AssumptionEntry]
    coercivity_constant: float
    checked_range: tuple[float, float]
    theta_alternative: str = ""

    @property
    def satisfied(self) -> bool:
        return all(e.satisfied for e in self.entries)

    def entry(self, name: str) -> AssumptionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "coercivity_constant": self.coercivity_constant,
            "checked_range": list(self.checked_range),
            "theta_alternative": self.theta_alternative,
            "entries": [dict(name=e.name, status=e.status, worst_point=e.worst_point,
                             margin=e.margin, detail=e.detail) for e in self.entries],
        }


def sample_lattice(lo: float, hi: float, per_decade: int) -> np.ndarray:
    """Points ``10^(j / per_decade)`` inside ``[lo, hi]``.

    The lattice does not depend on the range, so a wider range samples a
    superset of points.
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    j0 = math.ceil(per_decade * math.log10(lo) - 1e-9)
    j1 = math.floor(per_decade * math.log10(hi) + 1e-9)
    return 10.0 ** (np.arange(j0, j1 + 1) / per_decade)


_GL_T, _GL_W = roots_legendre(96)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


def theta_phi(dphi: Scalar, xi: np.ndarray, p: float = 2.0) -> np.ndarray:
    """``Theta_{Phi,p}(xi) = int_0^xi s^((p-2)/2) Phi'(s)^(1/2) ds`` by Gauss-Legendre.

    Substituting ``s = xi t^2`` clusters nodes at the origin.  Each point is
    integrated independently, so values do not depend on the sample set.
    """
    xi = np.asarray(xi, dtype=float)[:, None]
    t = _GL_T[None, :]
    s = xi * t * t
    integrand = s ** ((p - 2.0) / 2.0) * np.sqrt(dphi(s)) * 2.0 * xi * t
    return integrand @ _GL_W


def verify_assumptions(cs: CoefficientSet, F1: float, xi_range: tuple[float, float] = (1e-6, 1e2),
                       n_samples: int = 100, p: float = 2.0, c_max: float = 1e9,
                       delta: float = 1e-2) -> AssumptionReport:
    """Evaluate the structural inequalities on a log lattice.

    ``n_samples`` is the lattice density per decade.  Inequalities of the form
    "there exists c with lhs <= c rhs" report the fitted constant and count as
    satisfied when it stays below ``c_max``; their margin is
    ``1 - c_fit / c_max``.  The noise enters with intensity ``eps * F1``.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    lo, hi = xi_range
    xi = sample_lattice(lo, hi, n_samples)
    F_eff = cs.epsilon * F1
    entries: list[AssumptionEntry] = []

    def finite_guard(name, *arrays):
        for arr in arrays:
            bad = ~np.isfinite(arr)
            if np.any(bad):
                entries.append(AssumptionEntry(name, None, float(xi[np.argmax(bad)]), float("nan"),
                                               "non-finite evaluation"))
                return False
        return True

    def min_entry(name, vals, detail=""):
        if not finite_guard(name, vals):
            return
        i = int(np.argmin(vals))
        entries.append(AssumptionEntry(name, bool(vals[i] > 0), float(xi[i]), float(vals[i]), detail))

    def fit_entry(name, lhs, rhs, detail=""):
        if not finite_guard(name, lhs, rhs):
            return
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = lhs / rhs
        i = int(np.argmax(ratio))
        c_fit = float(max(ratio[i], 0.0))
        entries.append(AssumptionEntry(name, bool(c_fit < c_max), float(xi[i]), 1.0 - c_fit / c_max,
                                       f"c_fit={c_fit:.6g}; {detail}".strip("; ")))

    phi, dphi, d2phi = cs.phi(xi), cs.phi.d1(xi), cs.phi.d2(xi)
    sig, dsig, d2sig = cs.sigma(xi), cs.sigma.d1(xi), cs.sigma.d2(xi)
    nu_mag = cs.nu.magnitude(xi)
    theta2 = theta_phi(cs.phi.d1, xi, 2.0)
    theta_p = theta_phi(cs.phi.d1, xi, p)

    # Assumption 2
    phi0 = float(cs.phi(np.array([0.0]))[0])
    entries.append(AssumptionEntry("Phi(0)=0", phi0 == 0.0, 0.0, -abs(phi0) if phi0 else 1.0))
    min_entry("Phi'>0", dphi)
    regular = np.isfinite(dphi) & np.isfinite(dsig) & np.isfinite(d2phi) & np.isfinite(d2sig)
    i_bad = int(np.argmin(regular))
    entries.append(AssumptionEntry("local C^1,1 regularity", bool(regular.all()), float(xi[i_bad]),
                                   1.0 if regular.all() else float("nan")))
    small = xi <= 1.0
    if small.any():
        ratio = sig[small] ** 2 / xi[small]
        if finite_guard("limsup sigma^2/xi", ratio):
            i = int(np.argmax(ratio))
            c_fit = float(ratio[i])
            entries.append(AssumptionEntry("limsup sigma^2/xi", c_fit < c_max, float(xi[small][i]),
                                           1.0 - c_fit / c_max, f"c_fit={c_fit:.6g}"))
    fit_entry("sup sigma^2 growth", np.maximum.accumulate(sig**2), 1.0 + xi + sig**2)
    fit_entry("sup |nu| growth", np.maximum.accumulate(nu_mag), 1.0 + xi + nu_mag)

    # Assumption 3
    fit_entry("Phi growth", phi, 1.0 + xi**cs.m, f"m={cs.m}")
    fit_entry("|nu|+Phi' vs Theta_p", nu_mag + dphi, 1.0 + xi + theta_p**2)
    alt_a = None
    for theta in (0.0, 0.25, 0.5):
        lhs = xi ** (-(p - 2.0) / 2.0) / np.sqrt(dphi)
        if np.all(np.isfinite(lhs)) and float(np.max(lhs / xi**theta)) < c_max:
            alt_a = theta
            break
    dxi = np.diff(xi)
    dth = np.diff(theta_p)
    with np.errstate(divide="ignore"):
        c_b = float(np.max(dxi**2 / dth**2)) if np.all(dth > 0) else float("inf")
    alt_b = c_b < c_max
    if alt_a is not None:
        which = f"first alternative (theta={alt_a})" + ("; second also holds (q=2)" if alt_b else "")
    elif alt_b:
        which = "second alternative (q=2)"
    else:
        which = "neither"
    entries.append(AssumptionEntry("Theta alternatives", alt_a is not None or alt_b, float(xi[0]),
                                   1.0 if alt_a is not None else 1.0 - c_b / c_max, which))
    fit_entry("sigma^2 vs Theta_2", sig**2, 1.0 + xi + theta2**2)
    fit_entry("xi^(p-2) sigma^2 vs Theta_p", xi ** (p - 2.0) * sig**2, 1.0 + xi + theta_p**2)
    away = xi > delta
    lhs5 = dsig**4 / dphi + (sig * dsig) ** 2 + dphi
    rhs5 = 1.0 + xi + theta_p**2
    lhs5 = np.where(away, lhs5, 0.0)
    fit_entry("sigma'^4/Phi' + (sigma sigma')^2 + Phi'", lhs5, rhs5, f"delta={delta:g}")

    # drift
    f0 = float(cs.f(np.array([0.0]))[0])
    entries.append(AssumptionEntry("drift f(0)=0", f0 == 0.0, 0.0, -abs(f0) if f0 else 1.0))
    df = cs.f.d1(xi)
    if finite_guard("drift one-sided Lipschitz", df):
        i = int(np.argmax(-df))
        slack = cs.f_lip - float(-df[i])
        entries.append(AssumptionEntry("drift one-sided Lipschitz", slack >= 0, float(xi[i]), slack))
    fv = np.abs(cs.f(xi))
    if finite_guard("drift linear growth", fv):
        slack_v = cs.f_lip * (1.0 + xi) - fv
        i = int(np.argmin(slack_v))
        entries.append(AssumptionEntry("drift linear growth", bool(slack_v[i] >= 0), float(xi[i]), float(slack_v[i])))

    # gradient-estimate assumption
    coercive = dphi - 0.5 * F_eff * dsig**2
    min_entry("stochastic coercivity", coercive, f"F1_eff={F_eff:g}")
    fit_entry("second-derivative decay", np.abs(d2sig) + np.abs(d2phi), (1.0 + phi) ** -2.0)

    c1 = float(np.min(coercive)) if np.all(np.isfinite(coercive)) else float("nan")
    return AssumptionReport(entries, c1, (float(xi[0]), float(xi[-1])), which)
