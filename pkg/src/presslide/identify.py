"""Material-parameter identification from probing and sliding measurements.

Two estimators with a scikit-learn style surface (``fit``/``predict``,
``get_params``/``set_params``, trailing-underscore fitted attributes):

* :class:`YoungModulusEstimator` recovers the combined elastic modulus from
  cyclic probing samples (load, indentation) by damped Gauss-Newton on the
  log-modulus, which keeps the estimate positive without constraints.
* :class:`FrictionModelEstimator` recovers the sliding friction coefficient
  and the moving-direction damping from (speed, normal force, friction)
  samples by iteratively reweighted least squares with a logistic weight,
  so isolated outliers do not drag the fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FitError, NotFittedError

MIN_PROBE_SAMPLES = 10
MIN_SLIDING_SAMPLES = 20


def _column(values, name, min_len):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size < min_len:
        raise FitError(f"{name} needs at least {min_len} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise FitError(f"{name} contains non-finite entries")
    return arr


def r_squared(residuals, observations) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot (mean-centered)."""
    res = np.asarray(residuals, dtype=float)
    obs = np.asarray(observations, dtype=float)
    ss_res = float(res @ res)
    centered = obs - obs.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else -np.inf
    return 1.0 - ss_res / ss_tot


@dataclass
class FitReport:
    """Summary of one identification run."""

    estimates: dict
    r_squared: float | None
    n_iter: int
    converged: bool
    weight_min: float = 1.0
    weight_mean: float = 1.0

    def to_text(self) -> str:
        lines = ["[fit_report]"]
        for key, value in self.estimates.items():
            lines.append(f"{key} = {_fmt(value)}")
        lines.append(f"r_squared = {_fmt(self.r_squared)}")
        lines.append(f"iterations = {self.n_iter}")
        lines.append(f"converged = {str(self.converged).lower()}")
        lines.append(f"robust_weight_min = {_fmt(self.weight_min)}")
        lines.append(f"robust_weight_mean = {_fmt(self.weight_mean)}")
        return "\n".join(lines)

    def to_csv_line(self) -> str:
        keys = list(self.estimates)
        header = ",".join(keys + ["r_squared", "iterations", "converged"])
        values = ",".join(_fmt(self.estimates[k]) for k in keys)
        return (f"{header}\n{values},{_fmt(self.r_squared)},"
                f"{self.n_iter},{str(self.converged).lower()}")


def _fmt(value) -> str:
    if value is None:
        return "nan"
    return f"{float(value):.17g}"


class _ParamsMixin:
    _param_names: tuple = ()

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self._param_names:
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self


class YoungModulusEstimator(_ParamsMixin):
    """Fit the combined modulus E from (load, indentation) probe samples.

    The static model d = (9 F^2 / (16 E^2 R))^(1/3) is linear in F^(2/3),
    which seeds a closed-form initial guess; damped Gauss-Newton on log(E)
    then minimizes the indentation residuals.

    Parameters
    ----------
    radius : float
        Tool tip radius [m].
    max_iter : int
        Gauss-Newton iteration budget.
    tol : float
        Convergence threshold on the log-modulus update.
    """

    _param_names = ("radius", "max_iter", "tol")

    def __init__(self, radius, max_iter: int = 50, tol: float = 1e-12):
        self.radius = radius
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, force, indentation):
        f = _column(force, "force", MIN_PROBE_SAMPLES)
        d = _column(indentation, "indentation", MIN_PROBE_SAMPLES)
        if f.shape != d.shape:
            raise FitError("force and indentation must have equal length")
        if np.any(f < 0.0) or np.any(d < 0.0):
            raise DomainError("probe samples must be non-negative")
        if not np.any(f > 0.0):
            raise FitError("all probe loads are zero; modulus unidentifiable")
        if self.radius <= 0.0:
            raise DomainError("tool radius must be positive")

        base = f ** (2.0 / 3.0)
        slope = float(base @ d) / float(base @ base)
        if slope <= 0.0:
            raise FitError("probe data is inconsistent with a positive modulus")
        k = (9.0 / (16.0 * self.radius)) ** (1.0 / 3.0)
        theta = 1.5 * np.log(k / slope)  # slope = k exp(-2 theta / 3)

        def predictions(th):
            return k * base * np.exp(-2.0 * th / 3.0)

        pred = predictions(theta)
        sse = float(np.sum((d - pred) ** 2))
        converged = False
        iterations = 0
        for iterations in range(1, self.max_iter + 1):
            resid = d - pred
            jac = (2.0 / 3.0) * pred  # d resid / d theta
            denom = float(jac @ jac)
            if denom == 0.0:
                break
            delta = -float(jac @ resid) / denom
            damping = 1.0
            while damping > 1e-8:
                trial = theta + damping * delta
                trial_pred = predictions(trial)
                trial_sse = float(np.sum((d - trial_pred) ** 2))
                if trial_sse <= sse + 1e-15:
                    theta, pred, sse = trial, trial_pred, trial_sse
                    break
                damping *= 0.5
            if abs(damping * delta) < self.tol:
                converged = True
                break

        self.young_modulus_ = float(np.exp(theta))
        self.n_iter_ = iterations
        self.converged_ = converged
        self.r_squared_ = r_squared(d - pred, d) if converged else None
        return self

    def predict(self, force):
        self._check_fitted()
        f = np.asarray(force, dtype=float)
        return np.cbrt(9.0 * f**2 / (16.0 * self.young_modulus_**2 * self.radius))

    def report(self) -> FitReport:
        self._check_fitted()
        return FitReport(estimates={"young_modulus_pa": self.young_modulus_},
                         r_squared=self.r_squared_, n_iter=self.n_iter_,
                         converged=self.converged_)

    def _check_fitted(self):
        if not hasattr(self, "young_modulus_"):
            raise NotFittedError("call fit() before predict()/report()")


class FrictionModelEstimator(_ParamsMixin):
    """Fit (mu, k_d) of the sliding-friction model from motion samples.

    The model F_fric = mu * F_z [1 + (2 nu - 1) 3 a(F_z)^2 / (10 R^2)]
    + k_d * V_e is linear in (mu, k_d) once the modulus is known, since
    a(F_z)^2 = R * d(F_z). Robustness comes from IRLS with the logistic
    weight w(e) = tanh(e/sigma)/(e/sigma) and scale sigma = 1.4826 x median
    absolute residual.

    Parameters
    ----------
    radius, poisson, young : float
        Tool radius [m], surface Poisson ratio, combined modulus [Pa].
    n_reweights : int
        IRLS iterations (the first solve is unweighted).
    max_normal_force : float or None
        Optional cap on F_z; samples above it are excluded from the fit
        window (the deformation-dominated regime).
    """

    _param_names = ("radius", "poisson", "young", "n_reweights", "max_normal_force")

    def __init__(self, radius, poisson, young, n_reweights: int = 10,
                 max_normal_force: float | None = None):
        self.radius = radius
        self.poisson = poisson
        self.young = young
        self.n_reweights = n_reweights
        self.max_normal_force = max_normal_force

    def _design(self, speed, normal_force):
        d = np.cbrt(9.0 * normal_force**2 / (16.0 * self.young**2 * self.radius))
        a_sq = self.radius * d
        phi = normal_force * (1.0 + (2.0 * self.poisson - 1.0) * 3.0 * a_sq
                              / (10.0 * self.radius**2))
        return np.column_stack([phi, speed])

    def fit(self, X, y):
        """Fit from X = (speed [m/s], normal force [N]) columns, y = friction [N]."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise FitError("X must have two columns: speed and normal force")
        speed = _column(X[:, 0], "speed", MIN_SLIDING_SAMPLES)
        fz = _column(X[:, 1], "normal force", MIN_SLIDING_SAMPLES)
        fric = _column(y, "friction", MIN_SLIDING_SAMPLES)
        if np.any(fz < 0.0) or np.any(speed < 0.0):
            raise DomainError("speeds and normal forces must be non-negative")

        if self.max_normal_force is not None:
            keep = fz <= self.max_normal_force
            if keep.sum() < MIN_SLIDING_SAMPLES:
                raise FitError("force cap leaves too few samples")
            speed, fz, fric = speed[keep], fz[keep], fric[keep]

        if np.ptp(speed) == 0.0 and np.ptp(fz) == 0.0:
            raise FitError("degenerate design: speed and normal force are both constant")

        design = self._design(speed, fz)
        col_norm = np.linalg.norm(design, axis=0)
        active = col_norm > 1e-12 * max(1.0, float(np.linalg.norm(fric)))
        if not np.any(active):
            raise FitError("degenerate design: both regressors vanish")

        coef = np.zeros(2)
        weights = np.ones_like(fric)
        D = design[:, active]
        iterations = 0
        for iterations in range(self.n_reweights + 1):
            sw = np.sqrt(weights)[:, None]
            sol, *_ = np.linalg.lstsq(D * sw, fric * sw[:, 0], rcond=None)
            coef[active] = sol
            resid = fric - design @ coef
            sigma = 1.4826 * float(np.median(np.abs(resid)))
            if sigma <= 0.0:
                weights = np.ones_like(fric)
                break
            z = resid / sigma
            weights = np.where(np.abs(z) < 1e-12, 1.0, np.tanh(z) / np.where(z == 0.0, 1.0, z))
        resid = fric - design @ coef

        self.mu_identifiable_ = bool(active[0])
        self.k_d_identifiable_ = bool(active[1])
        self.mu_ = float(coef[0]) if active[0] else float("nan")
        self.k_d_ = float(coef[1]) if active[1] else float("nan")
        self.n_iter_ = iterations
        self.converged_ = True
        self.r_squared_ = r_squared(resid, fric)
        self.weights_ = weights
        return self

    def predict(self, X):
        self._check_fitted()
        X = np.asarray(X, dtype=float)
        design = self._design(X[:, 0], X[:, 1])
        coef = np.array([self.mu_ if self.mu_identifiable_ else 0.0,
                         self.k_d_ if self.k_d_identifiable_ else 0.0])
        return design @ coef

    def report(self) -> FitReport:
        self._check_fitted()
        return FitReport(estimates={"mu": self.mu_, "k_d": self.k_d_},
                         r_squared=self.r_squared_, n_iter=self.n_iter_,
                         converged=self.converged_,
                         weight_min=float(np.min(self.weights_)),
                         weight_mean=float(np.mean(self.weights_)))

    def _check_fitted(self):
        if not hasattr(self, "mu_"):
            raise NotFittedError("call fit() before predict()/report()")


def fit_young_modulus(force, indentation, radius) -> FitReport:
    """Functional wrapper: fit the modulus and return its report."""
    est = YoungModulusEstimator(radius=radius).fit(force, indentation)
    if not est.converged_:
        raise FitError("modulus fit did not converge")
    return est.report()


def fit_friction(speed, normal_force, friction, poisson, radius, young,
                 max_normal_force=None) -> FitReport:
    """Functional wrapper: robust (mu, k_d) fit returning its report."""
    est = FrictionModelEstimator(radius=radius, poisson=poisson, young=young,
                                 max_normal_force=max_normal_force)
    est.fit(np.column_stack([speed, normal_force]), friction)
    return est.report()
