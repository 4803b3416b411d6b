"""
Joint weighted least-squares fitting of reflectivity spectra.

Every spectrum shares omega_m, gamma_m and kappa_s.  Spectra taken at the same
input power share one coupling rate, and each spectrum carries its own FSR
detuning and contrast factor.  In scaling mode the per-power couplings are
replaced by a single g0 with ``g_m = g0 * sqrt(photon_calib * P)``.

The free parameters are packed into a flat vector in the order

    omega_m, gamma_m, kappa_s, coupling..., delta[0..K-1], amp_a[0..K-1]

where ``coupling`` is ``g_m[0..J-1]`` (one per power group, sorted by power),
``g0``, or nothing, depending on the mode.  Parameters listed in
``FitProblem.fixed`` are left out of the vector.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats
from scipy.signal import savgol_coeffs, savgol_filter

from .model import DEFAULT_PHOTON_CALIB, REFERENCE_PARAMS, DomainError, reflectivity_from
from .synthesis import Spectrum, find_dips

__all__ = [
    "CouplingMode",
    "ParameterVector",
    "FitProblem",
    "FitResult",
    "LMOptions",
    "initial_guess",
    "residuals",
    "numeric_jacobian",
    "lm_solve",
    "fit",
    "estimate_g0",
    "g0_confidence_interval",
]

log = logging.getLogger(__name__)

MIN_POINTS = 16
GLOBAL_NAMES = ("omega_m", "gamma_m", "kappa_s")
RATE_STEP_FLOOR = 1e-3   # Hz
UNITLESS_STEP_FLOOR = 1e-9
OFFSET_STEP_SCALE = 100.0    # offset steps in units of rel_step * kappa_s


class CouplingMode(enum.Enum):
    FREE = "free"          # one g_m per power group
    SCALING = "scaling"    # g_m = g0 * sqrt(photon_calib * P)
    NONE = "none"          # g_m frozen at 0, off-resonance linewidth fit


@dataclass
class ParameterVector:
    omega_m: float
    gamma_m: float
    kappa_s: float
    g_m: np.ndarray          # per power group; derived from g0 in scaling mode
    delta: np.ndarray        # per dataset
    amp_a: np.ndarray        # per dataset (equal entries in global-A mode)
    g0: Optional[float] = None

    def copy(self) -> "ParameterVector":
        return ParameterVector(self.omega_m, self.gamma_m, self.kappa_s,
                               np.array(self.g_m, dtype=float), np.array(self.delta, dtype=float),
                               np.array(self.amp_a, dtype=float), self.g0)


@dataclass
class FitProblem:
    """
    Datasets plus the structure of the joint model.

    Parameters
    ----------
    datasets : list of Spectrum
    powers : sequence of float, optional
        input power of each dataset [W]; defaults to ``meta.power_in``.
        Datasets with equal power form one coupling group.
    mode : CouplingMode
    global_amp : bool
        fit one contrast factor for all spectra instead of one each
    fixed : dict
        global parameters held at the given value (``omega_m``, ``gamma_m``,
        ``kappa_s``, ``g0``)
    bounds : dict
        ``name -> (lo, hi)`` overrides; names are those of ``parameter_names``
        with the index suffix dropped, e.g. ``"delta"``
    photon_calib : float
        photons per watt, used in scaling mode
    """

    datasets: list
    powers: Optional[Sequence[float]] = None
    mode: CouplingMode = CouplingMode.FREE
    global_amp: bool = False
    fixed: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    photon_calib: float = DEFAULT_PHOTON_CALIB

    def __post_init__(self):
        if not self.datasets:
            raise DomainError("a fit problem needs at least one dataset")
        self.mode = CouplingMode(self.mode)
        if self.powers is None:
            self.powers = [s.meta.power_in for s in self.datasets]
        self.powers = np.asarray(self.powers, dtype=float)
        if self.powers.shape != (len(self.datasets),):
            raise DomainError("need exactly one power per dataset")
        self.group_powers, self.groups = np.unique(self.powers, return_inverse=True)
        self.fixed = dict(self.fixed)
        if self.mode is CouplingMode.NONE:
            # without coupling, omega_m only enters through omega_m + delta;
            # gamma_m stays free unless fixed and comes back with a huge error
            self.fixed.setdefault("omega_m", REFERENCE_PARAMS.omega_m)
        unknown = set(self.fixed) - set(GLOBAL_NAMES) - {"g0"}
        if unknown:
            raise DomainError(f"cannot fix parameters {sorted(unknown)}")
        self._omega = [np.asarray(s.omega, dtype=float) for s in self.datasets]
        self._data = [np.asarray(s.r_values, dtype=float) for s in self.datasets]
        self._weight = [1 / np.asarray(s.sigma, dtype=float) for s in self.datasets]
        self._offsets = np.cumsum([0] + [len(s) for s in self.datasets])
        self._build_layout()

    # -- layout -----------------------------------------------------------

    def _build_layout(self):
        names, kinds = [], []
        for name in GLOBAL_NAMES:
            if name not in self.fixed:
                names.append(name)
                kinds.append(name)
        if self.mode is CouplingMode.FREE:
            names += [f"g_m[{j}]" for j in range(self.n_groups)]
            kinds += ["g_m"] * self.n_groups
        elif self.mode is CouplingMode.SCALING and "g0" not in self.fixed:
            names.append("g0")
            kinds.append("g0")
        names += [f"delta[{k}]" for k in range(self.n_datasets)]
        kinds += ["delta"] * self.n_datasets
        if self.global_amp:
            names.append("amp_a")
            kinds.append("amp_a")
        else:
            names += [f"amp_a[{k}]" for k in range(self.n_datasets)]
            kinds += ["amp_a"] * self.n_datasets
        self.parameter_names = names
        self._kinds = kinds
        # datasets touched by each free parameter, for the block Jacobian
        touched = []
        for name, kind in zip(names, kinds):
            if kind == "g_m":
                j = int(name[4:-1])
                touched.append(np.flatnonzero(self.groups == j))
            elif kind in ("delta", "amp_a") and "[" in name:
                touched.append(np.array([int(name[name.index("[") + 1:-1])]))
            else:
                touched.append(np.arange(self.n_datasets))
        self._touched = touched
        lo, hi = [], []
        defaults = {
            "omega_m": (0.0, np.inf),
            "gamma_m": (1.0, np.inf),
            "kappa_s": (1.0, np.inf),
            "g_m": (0.0, np.inf),
            "g0": (0.0, np.inf),
            "delta": (-np.inf, np.inf),
            "amp_a": (0.0, 1.0),
        }
        for kind in kinds:
            b = self.bounds.get(kind, defaults[kind])
            lo.append(float(b[0]))
            hi.append(float(b[1]))
        self.lower = np.array(lo)
        self.upper = np.array(hi)

    @property
    def n_datasets(self) -> int:
        return len(self.datasets)

    @property
    def n_groups(self) -> int:
        return self.group_powers.size

    @property
    def n_points(self) -> int:
        return int(self._offsets[-1])

    @property
    def n_free(self) -> int:
        return len(self.parameter_names)

    def is_rate(self, i: int) -> bool:
        return self._kinds[i] != "amp_a"

    # -- packing ----------------------------------------------------------

    def pack(self, theta: ParameterVector) -> np.ndarray:
        x = []
        for name in GLOBAL_NAMES:
            if name not in self.fixed:
                x.append(getattr(theta, name))
        if self.mode is CouplingMode.FREE:
            x.extend(np.asarray(theta.g_m, dtype=float))
        elif self.mode is CouplingMode.SCALING and "g0" not in self.fixed:
            x.append(theta.g0)
        x.extend(np.asarray(theta.delta, dtype=float))
        if self.global_amp:
            x.append(float(np.mean(theta.amp_a)))
        else:
            x.extend(np.asarray(theta.amp_a, dtype=float))
        return np.array(x, dtype=float)

    def unpack(self, x) -> ParameterVector:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_free,):
            raise DomainError(f"expected {self.n_free} parameters, got shape {x.shape}")
        i = 0
        vals = {}
        for name in GLOBAL_NAMES:
            if name in self.fixed:
                vals[name] = float(self.fixed[name])
            else:
                vals[name] = float(x[i])
                i += 1
        g0 = None
        if self.mode is CouplingMode.FREE:
            g_m = x[i:i + self.n_groups].copy()
            i += self.n_groups
        elif self.mode is CouplingMode.SCALING:
            if "g0" in self.fixed:
                g0 = float(self.fixed["g0"])
            else:
                g0 = float(x[i])
                i += 1
            g_m = g0 * np.sqrt(self.photon_calib * self.group_powers)
        else:
            g_m = np.zeros(self.n_groups)
        delta = x[i:i + self.n_datasets].copy()
        i += self.n_datasets
        if self.global_amp:
            amp = np.full(self.n_datasets, x[i])
        else:
            amp = x[i:i + self.n_datasets].copy()
        return ParameterVector(vals["omega_m"], vals["gamma_m"], vals["kappa_s"],
                               g_m, delta, amp, g0)

    def within_bounds(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def project(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    # -- ordering ---------------------------------------------------------

    def canonical_order(self) -> np.ndarray:
        """Dataset order that depends only on content: power, then raw data."""
        keys = [(float(self.powers[k]), s.omega.tobytes(), s.r_values.tobytes(), s.sigma.tobytes())
                for k, s in enumerate(self.datasets)]
        return np.array(sorted(range(self.n_datasets), key=keys.__getitem__), dtype=int)

    def reordered(self, order):
        """Same problem with datasets permuted by ``order``.

        Returns the new problem and ``idx`` with ``x_new = x_old[idx]``.
        """
        order = np.asarray(order, dtype=int)
        sub = FitProblem([self.datasets[k] for k in order], self.powers[order], self.mode,
                         self.global_amp, self.fixed, self.bounds, self.photon_calib)
        where = {name: i for i, name in enumerate(self.parameter_names)}
        idx = []
        for name in sub.parameter_names:
            if "[" in name and not name.startswith("g_m"):
                base, k = name[:name.index("[")], int(name[name.index("[") + 1:-1])
                name = f"{base}[{order[k]}]"
            idx.append(where[name])
        return sub, np.array(idx, dtype=int)

    # -- model ------------------------------------------------------------

    def dataset_residual(self, k: int, theta: ParameterVector) -> np.ndarray:
        model = reflectivity_from(theta.omega_m, theta.gamma_m, theta.kappa_s,
                                  theta.g_m[self.groups[k]], theta.delta[k], theta.amp_a[k],
                                  self._omega[k])
        return (model - self._data[k]) * self._weight[k]

    def residual_vector(self, x, only=None) -> np.ndarray:
        theta = self.unpack(x)
        ks = range(self.n_datasets) if only is None else only
        return np.concatenate([self.dataset_residual(k, theta) for k in ks])


@dataclass
class FitResult:
    theta_hat: ParameterVector
    x: np.ndarray
    names: list
    residual_norm: float
    chi2: float
    dof: int
    covariance: np.ndarray
    stderr: np.ndarray
    iterations: int
    reason: str
    success: bool
    cost_history: list = field(default_factory=list)
    g0: Optional[float] = None
    g0_stderr: Optional[float] = None

    @property
    def redchi(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else np.nan

    def value(self, name: str) -> float:
        return float(self.x[self.names.index(name)])

    def error(self, name: str) -> float:
        return float(self.stderr[self.names.index(name)])

    def as_dict(self) -> dict:
        return {
            "parameters": {n: {"value": float(v), "stderr": float(e)}
                           for n, v, e in zip(self.names, self.x, self.stderr)},
            "residual_norm": self.residual_norm,
            "chi2": self.chi2,
            "dof": self.dof,
            "redchi": self.redchi,
            "covariance": self.covariance.tolist(),
            "iterations": self.iterations,
            "reason": self.reason,
            "success": self.success,
            "g0": self.g0,
            "g0_stderr": self.g0_stderr,
        }


@dataclass
class LMOptions:
    lambda0: float = 1e-3
    lambda_down: float = 3.0
    lambda_up: float = 5.0
    lambda_max: float = 1e16
    ftol: float = 1e-12
    gtol: float = 1e-10
    max_iter: int = 500
    rel_step: float = 1e-6
    polish_steps: int = 5
    xtol: float = 1e-8


def residuals(problem: FitProblem, theta) -> np.ndarray:
    """Weighted residuals ``(model - data) / sigma`` over all datasets, concatenated."""
    x = problem.pack(theta) if isinstance(theta, ParameterVector) else np.asarray(theta, float)
    if not problem.within_bounds(x):
        bad = [n for n, v, lo, hi in zip(problem.parameter_names, x, problem.lower, problem.upper)
               if not lo <= v <= hi]
        raise DomainError(f"parameters out of bounds: {bad}")
    return problem.residual_vector(x)


def numeric_jacobian(problem: FitProblem, theta, rel_step: float = 1e-6) -> np.ndarray:
    """
    Central-difference Jacobian of :func:`residuals`.

    Step for parameter ``j`` is ``rel_step * |x_j|`` with a floor of 1 mHz for
    rates (1e-9 for the contrast factor).  The offsets omega_m and delta use
    ``100 * rel_step * kappa_s``, which balances rounding of
    ``omega - omega_m`` against truncation error.  Near a bound the difference becomes
    one-sided.  Only datasets that depend on a parameter are re-evaluated.
    """
    if not rel_step > 0:
        raise DomainError("rel_step must be positive")
    x = problem.pack(theta) if isinstance(theta, ParameterVector) else np.asarray(theta, float)
    r0 = None
    jac = np.zeros((problem.n_points, problem.n_free))
    offs = problem._offsets
    # omega_m and delta are frequency offsets: relative to |x| their step would
    # be ~1% of a linewidth for omega_m and below rounding for delta ~ 0, so
    # both are stepped on the linewidth scale instead
    offset_step = OFFSET_STEP_SCALE * rel_step * problem.unpack(x).kappa_s
    for j in range(problem.n_free):
        floor = RATE_STEP_FLOOR if problem.is_rate(j) else UNITLESS_STEP_FLOOR
        if problem._kinds[j] in ("omega_m", "delta"):
            h = max(offset_step, floor)
        else:
            h = max(rel_step * abs(x[j]), floor)
        if x[j] + h == x[j]:
            raise DomainError(f"step underflow for {problem.parameter_names[j]}")
        ks = problem._touched[j]
        up_ok = x[j] + h <= problem.upper[j]
        dn_ok = x[j] - h >= problem.lower[j]
        xp, xm = x.copy(), x.copy()
        if up_ok and dn_ok:
            xp[j] += h
            xm[j] -= h
            denom = 2 * h
        elif up_ok:
            xp[j] += h
            denom = h
        elif dn_ok:
            xm[j] -= h
            denom = h
        else:
            raise DomainError(f"bounds of {problem.parameter_names[j]} are narrower than the step")
        thp, thm = problem.unpack(xp), problem.unpack(xm)
        for k in ks:
            sl = slice(offs[k], offs[k + 1])
            if up_ok and dn_ok:
                d = problem.dataset_residual(k, thp) - problem.dataset_residual(k, thm)
            elif up_ok:
                if r0 is None:
                    r0 = problem.residual_vector(x)
                d = problem.dataset_residual(k, thp) - r0[sl]
            else:
                if r0 is None:
                    r0 = problem.residual_vector(x)
                d = r0[sl] - problem.dataset_residual(k, thm)
            jac[sl, j] = d / denom
    return jac


def _column_scale(jac):
    d = np.sqrt(np.einsum("ij,ij->j", jac, jac))
    d[d == 0] = 1.0
    return d


def _covariance(jac, redchi):
    """``redchi * (J^T J)^-1`` via SVD of the column-scaled Jacobian.

    Singular directions are not dropped: their singular values are clamped at
    1e-10 of the largest so unidentifiable parameters get huge, finite errors.
    """
    d = _column_scale(jac)
    _, s, vt = np.linalg.svd(jac / d, full_matrices=False)
    s = np.maximum(s, 1e-10 * s.max()) if s.size and s.max() > 0 else np.ones_like(s)
    inv = (vt.T / s ** 2) @ vt
    cov = inv / np.outer(d, d) * redchi
    return (cov + cov.T) / 2


def _polish(problem, x, r, cost, opts):
    """
    Undamped Gauss-Newton steps after convergence.

    The cost is flat to rounding near the optimum, so the damped loop stops
    wherever the last resolvable decrease happened.  Gauss-Newton steps home
    in on the zero of the gradient instead, which makes the optimum
    independent of evaluation order to far below the statistical errors.
    """
    history = []
    for _ in range(opts.polish_steps):
        jac = numeric_jacobian(problem, x, opts.rel_step)
        d = _column_scale(jac)
        js = jac / d
        grad = js.T @ r
        free = ~(((x <= problem.lower) & (grad > 0)) | ((x >= problem.upper) & (grad < 0)))
        step = np.zeros_like(x)
        step[free] = np.linalg.lstsq(js[:, free], -r, rcond=None)[0] / d[free]
        x_new = problem.project(x + step)
        try:
            r_new = problem.residual_vector(x_new)
        except DomainError:
            break
        cost_new = float(r_new @ r_new)
        if not cost_new <= cost:
            break
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        if np.max(np.abs(step) / np.maximum(np.abs(x), d ** -1), initial=0.0) < opts.xtol:
            break
    return x, r, cost, history


def lm_solve(problem: FitProblem, init, opts: Optional[LMOptions] = None) -> FitResult:
    """
    Levenberg-Marquardt with Marquardt (diagonal) damping and bound projection.

    Each trial step solves ``(J^T J + lam * diag(J^T J)) dx = -J^T r`` as a
    column-scaled damped least-squares problem, is projected onto the bounds
    and is accepted only if the cost drops (``lam /= 3``), otherwise
    ``lam *= 5``.  Stops on relative cost change below ``ftol``, scaled
    gradient below ``gtol``, ``lam`` above ``lambda_max`` or ``max_iter``,
    then polishes with a few undamped Gauss-Newton steps.

    Datasets are processed in a content-defined order, so the result does not
    depend on the order they were given in.
    """
    opts = opts or LMOptions()
    x = problem.pack(init) if isinstance(init, ParameterVector) else np.array(init, float)
    if not problem.within_bounds(x):
        raise DomainError("initial parameters out of bounds")
    order = problem.canonical_order()
    if np.array_equal(order, np.arange(problem.n_datasets)):
        return _lm_core(problem, x, opts)
    sub, idx = problem.reordered(order)
    res = _lm_core(sub, x[idx], opts)
    x_out = np.empty_like(res.x)
    x_out[idx] = res.x
    cov = np.empty_like(res.covariance)
    cov[np.ix_(idx, idx)] = res.covariance
    stderr = np.empty_like(res.stderr)
    stderr[idx] = res.stderr
    res.theta_hat = problem.unpack(x_out)
    res.x, res.covariance, res.stderr = x_out, cov, stderr
    res.names = list(problem.parameter_names)
    return res


def _lm_core(problem: FitProblem, x, opts: LMOptions) -> FitResult:
    r = problem.residual_vector(x)
    cost = float(r @ r)
    history = [cost]
    lam = opts.lambda0
    reason = "max_iter"
    success = False
    it = 0
    jac = None
    p = problem.n_free
    while it < opts.max_iter:
        jac = numeric_jacobian(problem, x, opts.rel_step)
        d = _column_scale(jac)
        js = jac / d
        grad = js.T @ r
        inward = ~(((x <= problem.lower) & (grad > 0)) | ((x >= problem.upper) & (grad < 0)))
        if np.max(np.abs(grad[inward]), initial=0.0) < opts.gtol:
            reason, success = "gradient", True
            break
        it += 1
        # parameters pinned at a bound that the descent direction pushes outward
        # are held for this step, otherwise projection stalls the whole update
        free = inward
        jf = js[:, free]
        nf = jf.shape[1]
        accepted = False
        while lam <= opts.lambda_max:
            a = np.vstack([jf, np.sqrt(lam) * np.eye(nf)])
            b = np.concatenate([-r, np.zeros(nf)])
            step = np.zeros(p)
            step[free] = np.linalg.lstsq(a, b, rcond=None)[0] / d[free]
            x_new = problem.project(x + step)
            try:
                r_new = problem.residual_vector(x_new)
            except DomainError:
                r_new = None
            if r_new is not None and np.all(np.isfinite(r_new)):
                cost_new = float(r_new @ r_new)
                if cost_new < cost:
                    accepted = True
                    break
            lam *= opts.lambda_up
        if not accepted:
            reason, success = "lambda_cap", cost <= history[0]
            break
        rel_change = (cost - cost_new) / max(cost, np.finfo(float).tiny)
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        lam = max(lam / opts.lambda_down, 1e-15)
        if rel_change < opts.ftol or cost == 0.0:
            reason, success = "ftol", True
            break
    else:
        log.warning("LM reached %d iterations without converging", opts.max_iter)
    if success and cost > 0:
        x, r, cost, polished = _polish(problem, x, r, cost, opts)
        history.extend(polished)
        if polished:
            jac = None
    if jac is None or it > 0:
        jac = numeric_jacobian(problem, x, opts.rel_step)
    dof = problem.n_points - p
    redchi = cost / dof if dof > 0 else 0.0
    cov = _covariance(jac, redchi)
    stderr = np.sqrt(np.clip(np.diag(cov), 0, None))
    theta = problem.unpack(x)
    result = FitResult(theta_hat=theta, x=x, names=list(problem.parameter_names),
                       residual_norm=float(np.sqrt(cost)), chi2=cost, dof=dof,
                       covariance=cov, stderr=stderr, iterations=it, reason=reason,
                       success=success, cost_history=history)
    if problem.mode is CouplingMode.SCALING:
        result.g0 = theta.g0
        if "g0" in problem.parameter_names:
            result.g0_stderr = result.error("g0")
    return result


# -- initial guess ----------------------------------------------------------

def _smooth(r):
    """Quadratic Savitzky-Golay smoothing; also returns the noise gain of the filter."""
    n = r.size
    win = max(5, (n // 40) | 1)
    if win >= n:
        return r, 1.0
    gain = float(np.sqrt(np.sum(savgol_coeffs(win, 2) ** 2)))
    return savgol_filter(r, win, 2), gain


def _refine(x, y, i):
    """Quadratic sub-bin position of the extremum at index ``i``."""
    if i <= 0 or i >= y.size - 1:
        return float(x[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = y0 - 2 * y1 + y2
    if den == 0:
        return float(x[i])
    t = 0.5 * (y0 - y2) / den
    return float(x[i] + np.clip(t, -1, 1) * (x[i + 1] - x[i]))


def _half_width(x, y, i, level):
    """Width of the dip at index ``i`` where it crosses ``level`` (linear interpolation)."""
    lo = i
    while lo > 0 and y[lo] < level:
        lo -= 1
    hi = i
    while hi < y.size - 1 and y[hi] < level:
        hi += 1
    if y[lo] < level or y[hi] < level:
        return np.nan

    def cross(a, b):
        return x[a] + (level - y[a]) * (x[b] - x[a]) / (y[b] - y[a])

    return cross(hi - 1, hi) - cross(lo + 1, lo)


@dataclass
class _DipSummary:
    positions: list
    depths: list
    fwhm: float
    r_min: float


def _analyse(spec: Spectrum) -> _DipSummary:
    r = np.asarray(spec.r_values, dtype=float)
    sm, gain = _smooth(r)
    base = float(np.median(sm[np.argsort(sm)[-max(3, sm.size // 10):]]))
    span = base - float(sm.min())
    noise = float(np.median(spec.sigma)) * gain
    prom = max(8 * noise, 0.08 * span, 1e-6)
    idx = find_dips(sm, prom)
    if idx.size == 0 or span <= 8 * noise:
        return _DipSummary([], [], np.nan, float(sm.min()))
    order = np.argsort(sm[idx])[:2]
    idx = np.sort(idx[order])
    positions = [_refine(spec.omega, sm, i) for i in idx]
    depths = [base - sm[i] for i in idx]
    fwhm = np.nan
    if idx.size == 1:
        fwhm = _half_width(spec.omega, sm, idx[0], base - depths[0] / 2)
    return _DipSummary(positions, depths, fwhm, float(sm.min()))


def initial_guess(problem: FitProblem, default_gamma: float = 7e6,
                  default_kappa: float = 3.5e6) -> ParameterVector:
    """
    Seed parameters from dip positions in each spectrum.

    One dip: weak coupling, the dip sits at ``omega_m + delta`` and its FWHM
    estimates kappa_s.  Two dips at ``p1 < p2``: their midpoint is
    ``omega_m + delta/2`` and, with damping neglected,
    ``(p2 - p1)**2 = delta**2 + 4 g**2``.  omega_m comes from the most
    symmetric two-dip spectrum of the highest power group.
    """
    for k, s in enumerate(problem.datasets):
        if len(s) < MIN_POINTS:
            raise DomainError(f"dataset {k} has {len(s)} points, need at least {MIN_POINTS}")
    info = [_analyse(s) for s in problem.datasets]
    gp = problem.group_powers

    # omega_m
    omega_m = problem.fixed.get("omega_m")
    if omega_m is None:
        for j in range(problem.n_groups - 1, -1, -1):
            pairs = [(abs(np.log(i.depths[0] / i.depths[1])), 0.5 * sum(i.positions))
                     for k, i in enumerate(info)
                     if problem.groups[k] == j and len(i.positions) == 2 and min(i.depths) > 0]
            if pairs:
                omega_m = min(pairs)[1]
                break
    if omega_m is None:
        singles = [i.positions[0] for i in info if len(i.positions) == 1]
        if singles:
            omega_m = float(np.median(singles))
        else:
            omega_m = float(np.mean([np.mean(s.omega) for s in problem.datasets]))

    gamma_m = float(problem.fixed.get("gamma_m", default_gamma))

    # kappa_s from the narrowest single-dip spectra in the lowest group that has any
    kappa_s = problem.fixed.get("kappa_s")
    if kappa_s is None:
        for j in range(problem.n_groups):
            w = [i.fwhm for k, i in enumerate(info)
                 if problem.groups[k] == j and np.isfinite(i.fwhm) and i.fwhm > 0]
            if w:
                kappa_s = float(np.min(w))
                break
    if kappa_s is None:
        kappa_s = default_kappa

    delta = np.zeros(problem.n_datasets)
    g_est = np.full(problem.n_datasets, np.nan)
    onset = abs(kappa_s - gamma_m) / 4
    for k, i in enumerate(info):
        if len(i.positions) == 2:
            p1, p2 = i.positions
            delta[k] = p1 + p2 - 2 * omega_m
            half = np.sqrt(max((p2 - p1) ** 2 - delta[k] ** 2, 0.0)) / 2
            g_est[k] = np.hypot(half, onset)
        elif len(i.positions) == 1:
            delta[k] = i.positions[0] - omega_m
            if np.isfinite(i.fwhm) and abs(delta[k]) < kappa_s:
                # near resonance the dip broadens by ~4 g**2 / gamma_m
                g_est[k] = np.sqrt(max(i.fwhm - kappa_s, 0.0) * gamma_m / 4)

    g_floor = 0.05 * kappa_s
    g_m = np.empty(problem.n_groups)
    for j in range(problem.n_groups):
        vals = g_est[(problem.groups == j) & np.isfinite(g_est)]
        g_m[j] = max(float(np.median(vals)), g_floor) if vals.size else g_floor

    g0 = None
    if problem.mode is CouplingMode.SCALING:
        g0 = problem.fixed.get("g0")
        if g0 is None:
            photons = problem.photon_calib * gp
            usable = photons > 0
            if np.any(usable):
                # trust the highest power most: its splitting is best resolved
                jmax = int(np.flatnonzero(usable)[-1])
                g0 = float(g_m[jmax] / np.sqrt(photons[jmax]))
            else:
                g0 = REFERENCE_PARAMS.g0
        g_m = g0 * np.sqrt(problem.photon_calib * gp)
    elif problem.mode is CouplingMode.NONE:
        g_m = np.zeros(problem.n_groups)

    amp = np.array([np.clip(1 - np.sqrt(max(i.r_min, 0.0)), 0.05, 1.0) for i in info])
    theta = ParameterVector(float(omega_m), gamma_m, float(kappa_s), g_m, delta, amp, g0)
    x = problem.project(problem.pack(theta))
    return problem.unpack(x)


def fit(problem: FitProblem, init: Optional[ParameterVector] = None,
        opts: Optional[LMOptions] = None) -> FitResult:
    """:func:`initial_guess` followed by :func:`lm_solve`."""
    if init is None:
        init = initial_guess(problem)
    return lm_solve(problem, init, opts)


# -- g0 from the square-root scaling -------------------------------------------

def estimate_g0(powers, g_values, g_errors, photon_calib: float = DEFAULT_PHOTON_CALIB):
    """
    Weighted least-squares slope of ``g`` against ``sqrt(photon_calib * P)``
    through the origin.

    The standard error is scaled by the reduced chi-square, so exact data
    give zero error.

    Returns
    -------
    g0, stderr : float
    """
    p = np.asarray(powers, dtype=float)
    g = np.asarray(g_values, dtype=float)
    e = np.asarray(g_errors, dtype=float)
    if not (p.shape == g.shape == e.shape) or p.ndim != 1:
        raise DomainError("powers, g_values and g_errors must be 1-D of equal length")
    if np.unique(p).size < 2:
        raise DomainError("need at least two distinct powers")
    if np.any(e <= 0):
        raise DomainError("g errors must be positive")
    if np.any(p < 0) or photon_calib <= 0:
        raise DomainError("powers must be non-negative and photon_calib positive")
    xs = np.sqrt(photon_calib * p)
    w = 1 / e ** 2
    sxx = float(np.sum(w * xs * xs))
    slope = float(np.sum(w * xs * g)) / sxx
    chi2 = float(np.sum(w * (g - slope * xs) ** 2))
    dof = p.size - 1
    return slope, float(np.sqrt(chi2 / dof / sxx))


def g0_confidence_interval(g0: float, stderr: float, n_points: int, level: float = 0.95):
    """Student-t interval for the slope from :func:`estimate_g0`."""
    t = stats.t.ppf(0.5 + level / 2, n_points - 1)
    return g0 - t * stderr, g0 + t * stderr
