"""Material and atomic response on the imaginary frequency axis.

Everything the dispersion-force integrals need is real and smooth once
rotated to imaginary frequency xi:

* ``DrudeLorentzModel`` - multi-line permittivity
  eps(i xi) = 1 + sum_i wP_i^2 / (wT_i^2 + g_i xi + xi^2),
  the analytic continuation of the usual real-axis Lorentz oscillator
  model eps(w) = 1 + sum wP^2 / (wT^2 - i g w - w^2).
* ``kramers_kronig_imag_axis`` - turns tabulated real-frequency (n, k)
  data into eps(i xi) via
  eps(i xi) = 1 + (2/pi) int_0^inf dw  w Im eps(w) / (w^2 + xi^2).
* ``fit_drude_lorentz`` - least-squares fit of the line model to
  imaginary-axis samples, in log space since eps spans decades.
* ``PolarizabilityModel`` - ground-state atomic polarizability
  alpha(i xi) = 2 / (3 hbar (2 J0 + 1)) sum_k w0k d0k^2 / (w0k^2 + xi^2).
* ``effective_c3_layered`` - non-retarded half-space C3 when a thin film
  of another material sits on the substrate.

All frequencies are angular (rad/s), dipole moments C m, eps and alpha
dimensionless resp. C^2 m^2 / J.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .constants import CONST
from .errors import ConvergenceError, DomainError
from .quadrature import gauss_laguerre, imag_axis_quadrature


# ---------------------------------------------------------------------------
# response models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DrudeLorentzModel:
    """Permittivity resonances (omega_p, omega_t, gamma), all rad/s."""

    resonances: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        for wp, wt, g in self.resonances:
            if min(wp, wt, g) <= 0.0:
                raise DomainError("Drude-Lorentz parameters must be > 0")

    def permittivity(self, xi):
        """eps(i xi); real, > 1, monotonically decreasing toward 1."""
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0.0):
            raise DomainError("xi must be >= 0")
        eps = np.ones_like(xi)
        for wp, wt, g in self.resonances:
            eps = eps + wp**2 / (wt**2 + g * xi + xi**2)
        return eps if eps.ndim else float(eps)

    def permittivity_real_axis(self, omega):
        """Complex eps(omega) of the same oscillators on the real axis."""
        omega = np.asarray(omega, dtype=float)
        eps = np.ones_like(omega, dtype=complex)
        for wp, wt, g in self.resonances:
            eps = eps + wp**2 / (wt**2 - 1j * g * omega - omega**2)
        return eps

    def as_dict(self):
        return {"resonances": [list(r) for r in self.resonances]}


@dataclass(frozen=True)
class PolarizabilityModel:
    """Ground-state transition list (omega_0k rad/s, d_0k C m) and J0."""

    j0: float
    transitions: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for w0, d0 in self.transitions:
            if w0 <= 0.0 or d0 <= 0.0:
                raise DomainError("transition frequencies and dipoles must be > 0")

    def alpha(self, xi):
        """alpha(i xi) in C^2 m^2 / J (real, positive, decreasing)."""
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0.0):
            raise DomainError("xi must be >= 0")
        if not self.transitions:
            warnings.warn("polarizability model has no transitions; alpha = 0")
            return np.zeros_like(xi) if xi.ndim else 0.0
        pref = 2.0 / (3.0 * CONST.hbar * (2.0 * self.j0 + 1.0))
        out = np.zeros_like(xi)
        for w0, d0 in self.transitions:
            out = out + w0 * d0**2 / (w0**2 + xi**2)
        out = pref * out
        return out if out.ndim else float(out)

    @property
    def lowest_transition(self) -> float:
        return min(w0 for w0, _ in self.transitions)

    @property
    def dominant_transition(self) -> float:
        """Frequency of the line contributing most to alpha(0)."""
        return max(self.transitions, key=lambda t: t[1] ** 2 / t[0])[0]

    def as_dict(self):
        return {"j0": self.j0, "transitions": [list(t) for t in self.transitions]}


def permittivity(model: DrudeLorentzModel, xi):
    return model.permittivity(xi)


def polarizability(model: PolarizabilityModel, xi):
    return model.alpha(xi)


# default materials for the indium-beam / silica-sphere experiment -----------

_SILICA_LINES = (
    # (omega_p, omega_t, gamma) in rad/s; two-line fit to amorphous-SiO2
    # handbook optical data, IR and UV resonance groups
    (1.75e14, 1.32e14, 4.28e13),
    (2.96e16, 2.72e16, 8.09e15),
)

_INDIUM_TRANSITIONS = (
    # (omega_0k rad/s, d_0k C m), six strongest lines from the 5P_1/2 ground state
    (4.594e15, 16.092e-30),
    (6.200e15, 22.048e-30),
    (6.843e15, 4.587e-30),
    (7.360e15, 7.910e-30),
    (7.659e15, 2.518e-30),
    (7.886e15, 3.582e-30),
)

INDIUM_MASS_AMU = 114.8


def silica() -> DrudeLorentzModel:
    """Two-line model of amorphous SiO2."""
    return DrudeLorentzModel(resonances=_SILICA_LINES)


def indium() -> PolarizabilityModel:
    """Ground-state indium polarizability (J0 = 1/2)."""
    return PolarizabilityModel(j0=0.5, transitions=_INDIUM_TRANSITIONS)


# ---------------------------------------------------------------------------
# tabulated optical data and Kramers-Kronig rotation
# ---------------------------------------------------------------------------


@dataclass
class OpticalDataTable:
    """Real-frequency refractive-index table (omega rad/s, n, k)."""

    omega: np.ndarray
    n: np.ndarray
    k: np.ndarray
    narrow: bool = field(init=False, default=False)

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.n = np.asarray(self.n, dtype=float)
        self.k = np.asarray(self.k, dtype=float)
        if self.omega.size == 0:
            raise DomainError("optical data table is empty")
        if not (self.omega.size == self.n.size == self.k.size):
            raise DomainError("omega, n, k columns must have equal length")
        if np.any(np.diff(self.omega) <= 0.0) or self.omega[0] <= 0.0:
            raise DomainError("omega column must be positive and strictly increasing")
        if np.any(self.n < 0.0) or np.any(self.k < 0.0):
            raise DomainError("n and k must be non-negative")
        self.narrow = self.omega[-1] / self.omega[0] < 1.0e4

    @classmethod
    def from_file(cls, path) -> "OpticalDataTable":
        """Load a 3-column delimited text file (omega[rad/s], n, k), '#' comments."""
        data = np.loadtxt(Path(path), comments="#", ndmin=2)
        if data.shape[1] != 3:
            raise DomainError(f"expected 3 columns in {path}, got {data.shape[1]}")
        return cls(omega=data[:, 0], n=data[:, 1], k=data[:, 2])

    def im_eps(self) -> np.ndarray:
        return 2.0 * self.n * self.k


def optical_table_from_model(
    model: DrudeLorentzModel, omega: np.ndarray
) -> OpticalDataTable:
    """Synthesize an (omega, n, k) table from a line model's real-axis eps."""
    eps = model.permittivity_real_axis(omega)
    nc = np.sqrt(eps)  # principal branch; Im eps >= 0 gives n, k >= 0
    return OpticalDataTable(omega=omega, n=nc.real, k=nc.imag)


def kramers_kronig_imag_axis(table: OpticalDataTable, xi) -> float | np.ndarray:
    """eps(i xi) from tabulated (n, k) via the Kramers-Kronig rotation.

    Trapezoid over the table grid (anchored at Im eps(0) = 0) plus an
    omega^-3 power-law tail beyond the last tabulated point.
    """
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(xi_arr <= 0.0):
        raise DomainError("xi must be > 0")
    if table.narrow:
        warnings.warn(
            "optical table spans fewer than 4 decades; eps(i xi) may be inaccurate"
        )
    w = np.concatenate(([0.0], table.omega))
    f = np.concatenate(([0.0], table.omega * table.im_eps()))
    # integrand w Im eps / (w^2 + xi^2) for every xi at once
    vals = f[None, :] / (w[None, :] ** 2 + xi_arr[:, None] ** 2)
    core = np.trapezoid(vals, w, axis=1)

    w_n = table.omega[-1]
    im_n = table.im_eps()[-1]
    u = xi_arr / w_n
    # int_{w_n}^inf dw / (w^2 (w^2 + xi^2)) = (1 - arctan(u)/u) / (w_n^3 u^2)
    small = u < 1.0e-4
    with np.errstate(invalid="ignore", divide="ignore"):
        exact = (1.0 - np.arctan(u) / u) / (w_n**3 * u**2)
    series = (1.0 / 3.0 - u**2 / 5.0) / w_n**3
    tail = im_n * w_n**3 * np.where(small, series, exact)

    eps = 1.0 + (2.0 / math.pi) * (core + tail)
    return eps if np.ndim(xi) else float(eps[0])


# ---------------------------------------------------------------------------
# Drude-Lorentz fitting
# ---------------------------------------------------------------------------


@dataclass
class DrudeLorentzFit:
    model: DrudeLorentzModel
    residual_norm: float
    rel_uncertainty: np.ndarray  # per parameter, ordered (wp, wt, g) per line


def _fit_params_to_model(p: np.ndarray) -> DrudeLorentzModel:
    trip = p.reshape(-1, 3)
    return DrudeLorentzModel(resonances=tuple(tuple(row) for row in trip))


def fit_drude_lorentz(
    xi_samples, eps_samples, n_lines: int, max_nfev: int = 20_000
) -> DrudeLorentzFit:
    """Fit an n-line Drude-Lorentz model to imaginary-axis samples.

    The objective is sum (log eps_model - log eps_sample)^2, minimised with
    a trust-region Levenberg-type iteration from a small deterministic set
    of starting points.  Raises ConvergenceError (carrying the best model
    so far) if no start converges.
    """
    xi = np.asarray(xi_samples, dtype=float)
    eps = np.asarray(eps_samples, dtype=float)
    if xi.size != eps.size:
        raise DomainError("xi and eps sample arrays must have equal length")
    if xi.size < 3 * n_lines:
        raise DomainError(
            f"need at least {3 * n_lines} samples for {n_lines} lines, got {xi.size}"
        )
    if np.any(eps <= 1.0):
        raise DomainError("eps samples must be > 1")

    log_eps = np.log(eps)

    def residual(p):
        model_eps = _fit_params_to_model(np.abs(p)).permittivity(np.abs(xi))
        return np.log(model_eps) - log_eps

    xi_pos = xi[xi > 0]
    lo, hi = xi_pos.min(), xi_pos.max()
    strength = max(eps.max() - 1.0, 1.0e-12) / n_lines

    best = None
    best_cost = np.inf
    # deterministic multi-start: spread the line centers over the sample range
    for spread in (0.3, 1.0, 3.0):
        wt0 = np.geomspace(lo * spread, hi / max(spread, 1.0), n_lines + 2)[1:-1]
        p0 = np.empty(3 * n_lines)
        for i, wt in enumerate(wt0):
            p0[3 * i] = wt * math.sqrt(strength)
            p0[3 * i + 1] = wt
            p0[3 * i + 2] = wt / 3.0
        try:
            res = least_squares(
                residual, p0, method="lm", max_nfev=max_nfev, xtol=1e-14, ftol=1e-14
            )
        except Exception:
            continue
        if res.cost < best_cost:
            best, best_cost = res, res.cost

    if best is None:
        raise ConvergenceError("Drude-Lorentz fit failed from every start")
    params = np.abs(best.x)
    model = _fit_params_to_model(params)
    resid_norm = float(np.sqrt(2.0 * best.cost))

    # linearised covariance; dof-scaled so noiseless fits report ~0
    m, nump = best.fun.size, params.size
    jtj = best.jac.T @ best.jac
    try:
        cov = np.linalg.inv(jtj)
        dof = max(m - nump, 1)
        sigma = np.sqrt(np.clip(np.diag(cov), 0.0, None) * 2.0 * best.cost / dof)
        rel_unc = sigma / params
    except np.linalg.LinAlgError:
        rel_unc = np.full(nump, np.nan)

    if not best.success:
        raise ConvergenceError(
            "Drude-Lorentz fit hit its iteration cap",
            partial=DrudeLorentzFit(model, resid_norm, rel_unc),
        )
    return DrudeLorentzFit(model=model, residual_norm=resid_norm, rel_uncertainty=rel_unc)


# ---------------------------------------------------------------------------
# layered half-space C3
# ---------------------------------------------------------------------------


def effective_c3_layered(
    film: DrudeLorentzModel,
    substrate: DrudeLorentzModel,
    atom: PolarizabilityModel,
    d: float,
    z: float,
) -> float:
    """Effective non-retarded C3(z) for a film of thickness d on a half space.

    U(z) = -(hbar / 4 pi^2 eps0) int dxi alpha(i xi)
              int dq q^2 e^(-2qz) r_eff(q, i xi),
    with the electrostatic two-interface reflection
    r_eff = (r_vf + r_fs e^(-2qd)) / (1 + r_vf r_fs e^(-2qd)),
    r_ab = (eps_b - eps_a)/(eps_b + eps_a).  Returns z^3 |U(z)|, which for
    d = 0 reduces to the bare-substrate half-space C3.
    """
    if d < 0.0:
        raise DomainError("film thickness d must be >= 0")
    if z <= 0.0:
        raise DomainError("distance z must be > 0")

    u_nodes, u_weights = gauss_laguerre(64)

    def outer(xi):
        eps_f = np.asarray(film.permittivity(xi))[:, None]
        eps_s = np.asarray(substrate.permittivity(xi))[:, None]
        q = u_nodes[None, :] / (2.0 * z)
        r_vf = (eps_f - 1.0) / (eps_f + 1.0)
        r_fs = (eps_s - eps_f) / (eps_s + eps_f)
        damp = np.exp(-2.0 * q * d)
        r_eff = (r_vf + r_fs * damp) / (1.0 + r_vf * r_fs * damp)
        inner = (u_weights[None, :] * u_nodes[None, :] ** 2 * r_eff).sum(axis=1)
        return atom.alpha(xi) * inner / (2.0 * z) ** 3

    integral, _ = imag_axis_quadrature(outer, scale=atom.dominant_transition)
    u = -(CONST.hbar / (4.0 * math.pi**2 * CONST.eps0)) * integral
    return z**3 * abs(u)
