"""Matter-wave phase shifts accumulated along straight trajectories.

A beam atom passing the sphere at closest surface distance a (trajectory
offset rho = a + R from the center) picks up the eikonal/WKB phase

    dphi(a) = -(1/hbar v) int dx U(x, rho),    U(x, rho) = U(sqrt(rho^2+x^2)).

For the half-space law U = -C3 / z^3 the integral has the closed form

    dphi(a) = C3/(2 hbar v) * 1/(a^2 (2R+a)^2) * { 6R^2 + 8Ra + 4a^2
              + 3R(R+a)^2/sqrt(a(2R+a)) * [2 arctan(R/sqrt(a(2R+a))) + pi] }
            ~ C52 / a^(5/2)          for a << R,

with C52 = C3/(2 hbar v) * 3 pi sqrt(R) / (2 sqrt(2)).  The grazing-phase
thresholds pi/1000 and 4 pi define the annulus [R_i_CP, R_o_CP] that the
Fresnel solver integrates explicitly; both radii follow the power-law
form, which reproduces the threshold radii used in practice.

Also here: the WKB validity ratio, the classical capture impact
parameter (smallest grazing distance that escapes the attractive
potential), and tabulated phase profiles with log-log interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import CONST
from .errors import BracketError, ConvergenceError, DomainError
from .potential import PotentialCurve

PHI_HI_DEFAULT = 4.0 * math.pi
PHI_LO_DEFAULT = math.pi / 1000.0


@dataclass(frozen=True)
class Beam:
    """Monochromatic beam particle: mass [kg], speed [m/s]."""

    mass: float
    speed: float
    wavelength: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.mass <= 0.0 or self.speed <= 0.0:
            raise DomainError("mass and speed must be > 0")
        lam = CONST.h / (self.mass * self.speed)
        if self.wavelength is None:
            object.__setattr__(self, "wavelength", lam)
        elif abs(self.wavelength / lam - 1.0) > 1.0e-12:
            raise DomainError("wavelength inconsistent with h/(m v)")

    @property
    def kinetic_energy(self) -> float:
        return 0.5 * self.mass * self.speed**2


@dataclass
class PhaseProfile:
    """Tabulated grazing-phase profile dphi(a) with its derived constants."""

    c3: float
    c52: float
    radius: float
    a: np.ndarray
    phase: np.ndarray
    r_i_cp: float
    r_o_cp: float

    def __post_init__(self):
        self._log_a = np.log(self.a)
        self._log_p = np.log(self.phase)

    def interp(self, a):
        """Log-log interpolation (exact for power-law profiles), clamped."""
        out = np.exp(np.interp(np.log(a), self._log_a, self._log_p))
        return out if np.ndim(a) else float(out)

    def to_text(self, path):
        with open(path, "w") as fh:
            fh.write(f"# C3 = {self.c3:.9e} J m^3\n")
            fh.write(f"# C52 = {self.c52:.9e} m^(5/2)\n")
            fh.write(f"# R = {self.radius:.9e} m\n")
            fh.write(f"# R_i_CP = {self.r_i_cp:.9e} m\n")
            fh.write(f"# R_o_CP = {self.r_o_cp:.9e} m\n")
            fh.write("# a[m]  dphi[rad]\n")
            for a, p in zip(self.a, self.phase):
                fh.write(f"{a:.12e} {p:.12e}\n")


def wkb_validity(potential, beam: Beam, z: float, rel_step: float = 1.0e-4) -> float:
    """WKB validity ratio |d/dx sqrt(2m(E-U))| / (2m(E-U)/hbar) at z.

    ``potential`` is a PotentialCurve (interpolated in surface distance
    z = r - R) or a callable U(z).  Values much below 1 mean the local
    wave vector varies slowly and the eikonal phase is trustworthy.
    """
    if isinstance(potential, PotentialCurve):
        radius = potential.radius

        def u_of_z(zz):
            return potential.u_at(radius + zz)
    else:
        u_of_z = potential
    e = beam.kinetic_energy
    u0 = float(u_of_z(z))
    if e <= u0:
        raise DomainError("kinetic energy does not exceed the potential (turning point)")
    h = z * rel_step
    up = float(u_of_z(z + h))
    um = float(u_of_z(z - h))
    p0 = math.sqrt(2.0 * beam.mass * (e - u0))
    dp = (
        math.sqrt(2.0 * beam.mass * (e - up)) - math.sqrt(2.0 * beam.mass * (e - um))
    ) / (2.0 * h)
    return abs(dp) / (2.0 * beam.mass * (e - u0) / CONST.hbar)


def eikonal_phase_numeric(
    u_lateral,
    a: float,
    radius: float,
    beam: Beam,
    rel_tol: float = 1.0e-6,
) -> float:
    """Accumulated phase -(1/hbar v) int dx U(x, rho) at rho = a + R.

    ``u_lateral(x, rho)`` must accept array x.  The lateral integral is a
    trapezoid on x = x_c sinh(w) (x_c^2 = a(2R+a), the scale on which the
    surface distance doubles), refined until stable to ``rel_tol``; the
    window grows until the integrand tail is negligible.
    """
    if a <= 0.0:
        raise DomainError("grazing distance a must be > 0")
    rho = a + radius
    x_c = math.sqrt(a * (2.0 * radius + a))

    w_max = 8.0
    prev_total = None
    while True:
        n = 256
        prev = None
        while True:
            w = np.linspace(0.0, w_max, n + 1)
            x = x_c * np.sinh(w)
            g = np.asarray(u_lateral(x, rho)) * x_c * np.cosh(w)
            val = float(np.trapezoid(g, w))
            if prev is not None and abs(val - prev) <= rel_tol * abs(val):
                break
            if n > 300_000:
                raise ConvergenceError("lateral phase integral did not stabilise", partial=val)
            prev = val
            n *= 2
        # tail estimate: |g| decays at least like exp(-2w) once U ~ r^-3
        tail = abs(g[-1]) * 0.5
        if tail <= rel_tol * abs(val) * 0.1:
            break
        if w_max > 60.0:
            raise ConvergenceError("lateral integral tail does not converge", partial=val)
        w_max += 6.0
        prev_total = val
    del prev_total
    return -(2.0 / (CONST.hbar * beam.speed)) * val


def eikonal_phase_analytic(a, radius: float, c3: float, beam: Beam):
    """Closed-form half-space grazing phase (exact for U = -C3/z^3)."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise DomainError("grazing distance a must be > 0")
    r = radius
    s = np.sqrt(a * (2.0 * r + a))
    bracket = (
        6.0 * r**2
        + 8.0 * r * a
        + 4.0 * a**2
        + (3.0 * r * (r + a) ** 2 / s) * (2.0 * np.arctan(r / s) + math.pi)
    )
    out = c3 / (2.0 * CONST.hbar * beam.speed) * bracket / (a**2 * (2.0 * r + a) ** 2)
    return out if out.ndim else float(out)


def c52(radius: float, c3: float, beam: Beam) -> float:
    """Grazing-phase power-law coefficient: dphi ~ c52 / a^(5/2) for a << R."""
    if radius <= 0.0:
        raise DomainError("radius must be > 0")
    return c3 / (2.0 * CONST.hbar * beam.speed) * 3.0 * math.pi * math.sqrt(radius) / (
        2.0 * math.sqrt(2.0)
    )


def eikonal_phase_powerlaw(a, radius: float, c3: float, beam: Beam):
    """The a << R limit c52 / a^(5/2) of the analytic phase."""
    a = np.asarray(a, dtype=float)
    out = c52(radius, c3, beam) / a**2.5
    return out if out.ndim else float(out)


def annulus_radii(
    c52_value: float,
    radius: float,
    phi_hi: float = PHI_HI_DEFAULT,
    phi_lo: float = PHI_LO_DEFAULT,
) -> tuple[float, float]:
    """Axis radii where the grazing phase passes phi_hi resp. phi_lo.

    Power-law inversion a = (c52/phi)^(2/5); returns (R_i_CP, R_o_CP)
    including the sphere radius.
    """
    if not phi_hi > phi_lo > 0.0:
        raise DomainError("thresholds must satisfy phi_hi > phi_lo > 0")
    r_i = radius + (c52_value / phi_hi) ** 0.4
    r_o = radius + (c52_value / phi_lo) ** 0.4
    return r_i, r_o


def capture_impact_parameter(radius: float, c3: float, beam: Beam) -> float:
    """Smallest grazing distance that classically escapes U = -C3/(s-R)^3.

    Energy and angular-momentum conservation give a turning point iff
    E b^2 <= min_s s^2 (E - U(s)); the critical impact parameter b_c
    satisfies E b_c^2 = min_s F(s) and a_min = b_c - R.
    """
    if c3 < 0.0:
        raise DomainError("c3 must be >= 0")
    if c3 == 0.0:
        return 0.0
    e = beam.kinetic_energy

    def f_of_logz(t):
        z = math.exp(t)
        s = radius + z
        return s**2 * (e + c3 / z**3)

    lo, hi = math.log(1.0e-13), math.log(max(radius, 1.0e-7))
    res = minimize_scalar(f_of_logz, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1.0e-12})
    if not res.success:
        raise BracketError("capture barrier search failed")
    if res.x - lo < 1.0e-6 or hi - res.x < 1.0e-6:
        raise BracketError("capture barrier minimum sits at the search bracket edge")
    b_c = math.sqrt(res.fun / e)
    return b_c - radius


def phase_profile(
    radius: float,
    c3: float,
    beam: Beam,
    form: str = "powerlaw",
    n: int = 600,
    span: float = 16.0,
) -> PhaseProfile:
    """Tabulate the half-space grazing phase around the CP annulus.

    ``form`` selects the power-law C52/a^(5/2) (the form the threshold
    radii are built on) or the full closed-form expression.
    """
    c52_val = c52(radius, c3, beam)
    r_i, r_o = annulus_radii(c52_val, radius)
    a_lo = (r_i - radius) / span
    a_hi = (r_o - radius) * span
    a = np.geomspace(a_lo, a_hi, n)
    if form == "powerlaw":
        phase = eikonal_phase_powerlaw(a, radius, c3, beam)
    elif form == "analytic":
        phase = eikonal_phase_analytic(a, radius, c3, beam)
    else:
        raise DomainError(f"unknown profile form {form!r}")
    return PhaseProfile(
        c3=c3, c52=c52_val, radius=radius, a=a, phase=phase, r_i_cp=r_i, r_o_cp=r_o
    )


def phase_profile_numeric(
    curve: PotentialCurve,
    radius: float,
    c3: float,
    beam: Beam,
    a_grid,
) -> PhaseProfile:
    """Phase profile from a tabulated potential curve (full-series route)."""

    def u_lat(x, rho):
        return curve.u_at(np.sqrt(rho**2 + x**2))

    a_grid = np.asarray(a_grid, dtype=float)
    phase = np.array(
        [eikonal_phase_numeric(u_lat, a, radius, beam) for a in a_grid]
    )
    c52_val = c52(radius, c3, beam)
    r_i, r_o = annulus_radii(c52_val, radius)
    return PhaseProfile(
        c3=c3, c52=c52_val, radius=radius, a=a_grid, phase=phase, r_i_cp=r_i, r_o_cp=r_o
    )
