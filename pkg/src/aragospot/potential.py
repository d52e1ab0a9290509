"""Casimir-Polder potential of a ground-state atom outside a dielectric sphere.

The potential is the imaginary-frequency integral

    U(r) = -(hbar mu0 / 8 pi^2 c) int_0^inf dxi xi^3 alpha(i xi)
             sum_{l>=1} (2l+1) { r_TE [h_l(kr)]^2
                 + r_TM [ l(l+1) h_l^2/(kr)^2 + ([kr h_l(kr)]')^2/(kr)^2 ] }

with k = i xi / c and the sphere Mie reflection coefficients

    r_TE = - [ j(z1) [z2 j(z2)]' - [z1 j(z1)]' j(z2) ]
           / [ h(z1) [z2 j(z2)]' - [z1 h(z1)]' j(z2) ],
    r_TM = - [ eps j(z2) [z1 j(z1)]' - j(z1) [z2 j(z2)]' ]
           / [ eps [z1 h(z1)]' j(z2) - h(z1) [z2 j(z2)]' ],

z1 = i xi R / c, z2 = z1 sqrt(eps(i xi)).  Written in the fixed-sign real
kernels of :mod:`aragospot.specfun` (I, JI, K, KD) the l-summand becomes
manifestly real and sign-definite,

    S_l = (2l+1) { -(N_TE/D_TE) K_r^2
                   + (N_TM/D_TM) [ l(l+1) K_r^2 + KD_r^2 ] / x_r^2 },
    N_TE = I1 JI2 - JI1 I2          D_TE = K1 JI2 - KD1 I2   (< 0)
    N_TM = eps I2 JI1 - I1 JI2      D_TM = eps KD1 I2 - K1 JI2 (> 0)

(all its alternating (i)^l factors cancel), and every term is assembled
from mantissa/exponent pairs so the series survives l ~ 10^3.

Asymptotic companions implemented here: the robust non-retarded l-series,
the half-space (Lennard-Jones) C3, and the small-sphere potentials with
and without retardation.  ``stitched_potential`` produces the production
curve: full series far out, half-space -C3/z^3 once both agree to the
configured tolerance near the surface, where truncating the l-series is
hopeless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import CONST
from .errors import DomainError, GeometryError
from .materials import DrudeLorentzModel, PolarizabilityModel
from .quadrature import imag_axis_quadrature
from .specfun import bessel_batch, legendre_triangle

FULL_SERIES = "full-series"
HALF_SPACE = "half-space-asymptote"

# exponent beyond which a scaled series term is identically zero in doubles
_EXP_FLOOR = -30_000
_EXP_CEIL = 20_000


@dataclass(frozen=True)
class SphereSystem:
    """Sphere + atom pairing with series controls."""

    radius: float
    sphere: DrudeLorentzModel
    atom: PolarizabilityModel
    l_max: int = 800
    stitch_tol: float = 0.03

    def __post_init__(self):
        if self.radius <= 0.0:
            raise DomainError("sphere radius must be > 0")
        if self.l_max < 1:
            raise DomainError("l_max must be >= 1")
        if not 0.0 < self.stitch_tol <= 1.0:
            raise DomainError("stitch_tol must lie in (0, 1]")


@dataclass
class PotentialCurve:
    """Tabulated U(r) with a per-point method tag."""

    r: np.ndarray
    u: np.ndarray
    method: np.ndarray
    r_stitch: float | None = None
    radius: float = field(default=0.0)

    def u_at(self, r):
        """Log-log interpolation of |U| against the surface distance r - R.

        Exact for power laws in z = r - R (the near-surface form); beyond
        the tabulated ends the end-segment slope continues the power law.
        """
        r = np.asarray(r, dtype=float)
        logz = np.log(self.r - self.radius)
        logu = np.log(-self.u)
        q = np.log(r - self.radius)
        out = np.interp(q, logz, logu)
        if self.r.size >= 2:
            slo = (logu[1] - logu[0]) / (logz[1] - logz[0])
            shi = (logu[-1] - logu[-2]) / (logz[-1] - logz[-2])
            out = np.where(q < logz[0], logu[0] + slo * (q - logz[0]), out)
            out = np.where(q > logz[-1], logu[-1] + shi * (q - logz[-1]), out)
        val = -np.exp(out)
        return val if val.ndim else float(val)

    def to_text(self, path):
        with open(path, "w") as fh:
            fh.write("# r[m]  U[J]  method\n")
            fh.write(f"# radius = {float(self.radius):.12e}\n")
            if self.r_stitch is not None:
                fh.write(f"# r_stitch = {float(self.r_stitch):.12e}\n")
            for r, u, m in zip(self.r, self.u, self.method):
                fh.write(f"{r:.12e} {u:.12e} {m}\n")

    @classmethod
    def from_text(cls, path):
        rr, uu, mm = [], [], []
        r_stitch = None
        radius = 0.0
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("#"):
                    if "r_stitch" in line:
                        r_stitch = float(line.split("=")[1])
                    elif "radius" in line:
                        radius = float(line.split("=")[1])
                    continue
                if not line:
                    continue
                a, b, c = line.split()
                rr.append(float(a))
                uu.append(float(b))
                mm.append(c)
        return cls(
            r=np.array(rr),
            u=np.array(uu),
            method=np.array(mm),
            r_stitch=r_stitch,
            radius=radius,
        )


# ---------------------------------------------------------------------------
# Mie coefficients and the l-series
# ---------------------------------------------------------------------------


def _mie_pieces(l_cap: int, xi: np.ndarray, sys: SphereSystem):
    """Scaled Mie numerators/denominators for l = 1..l_cap at each node.

    The true coefficients are (-1)^l (pm) (N/D) 2^(e_plus1 - e_minus1);
    the alternating factor cancels against the outer Hankel products in
    the potential series.
    """
    c = CONST.c
    x1 = xi * sys.radius / c
    eps = np.asarray(sys.sphere.permittivity(xi), dtype=float)
    x2 = x1 * np.sqrt(eps)

    b1 = bessel_batch(l_cap, x1)
    b2 = bessel_batch(l_cap, x2)

    i1, ji1 = b1.first[1:], b1.ric_first[1:]
    k1, kd1 = b1.third[1:], b1.ric_third[1:]
    i2, ji2 = b2.first[1:], b2.ric_first[1:]

    n_te = i1 * ji2 - ji1 * i2
    d_te = k1 * ji2 - kd1 * i2
    n_tm = eps * i2 * ji1 - i1 * ji2
    d_tm = eps * kd1 * i2 - k1 * ji2
    e_ratio = b1.e_plus[1:] - b1.e_minus[1:]
    return n_te, d_te, n_tm, d_tm, e_ratio


def _series_pieces(r: float, xi: np.ndarray, sys: SphereSystem, l_cap: int):
    """Mantissa/exponent pieces of S_l for l = 1..l_cap at each node."""
    n_te, d_te, n_tm, d_tm, e_ratio = _mie_pieces(l_cap, xi, sys)
    br = bessel_batch(l_cap, xi * r / CONST.c)
    kr, kdr = br.third[1:], br.ric_third[1:]
    xr = xi * r / CONST.c
    expo = e_ratio + 2 * br.e_minus[1:]
    return n_te, d_te, n_tm, d_tm, kr, kdr, xr, expo


def _series_terms(r: float, xi: np.ndarray, sys: SphereSystem, l_cap: int) -> np.ndarray:
    """(l_cap, n) array of series terms (2l+1) S_l, l ascending from 1."""
    n_te, d_te, n_tm, d_tm, kr, kdr, xr, expo = _series_pieces(r, xi, sys, l_cap)
    lv = np.arange(1, l_cap + 1, dtype=float)[:, None]
    combo = -(n_te / d_te) * kr**2 + (n_tm / d_tm) * (
        lv * (lv + 1.0) * kr**2 + kdr**2
    ) / xr**2
    e = np.clip(expo, _EXP_FLOOR, _EXP_CEIL).astype(np.int32)
    return (2.0 * lv + 1.0) * np.ldexp(combo, e)


def _series_sum(r: float, xi: np.ndarray, sys: SphereSystem):
    """Dynamically truncated sum_{l} (2l+1) S_l per node.

    Stops once ten consecutive terms each contribute less than 1e-8 of the
    running partial sum for every node, capped at sys.l_max.
    """
    l_try = min(sys.l_max, 64)
    while True:
        terms = _series_terms(r, xi, sys, l_try)
        partial = np.cumsum(terms, axis=0)
        if l_try == sys.l_max:
            return partial[-1]
        tail = np.abs(terms[-10:])
        ref = 1.0e-8 * np.abs(partial[-1])[None, :]
        if np.all(tail <= ref):
            return partial[-1]
        l_try = min(2 * l_try, sys.l_max)


def mie_coefficients(l: int, xi: float, sys: SphereSystem):
    """Mie reflection coefficients (r_TE, r_TM) on the imaginary axis.

    Values are the literal reflection coefficients evaluated at xi (real
    numbers there); both vanish identically for eps -> 1.
    """
    if l < 1:
        raise DomainError("l must be >= 1")
    if xi <= 0.0:
        raise DomainError("xi must be > 0")
    n_te, d_te, n_tm, d_tm, e_ratio = _mie_pieces(l, np.array([float(xi)]), sys)
    idx = l - 1
    e = int(max(min(e_ratio[idx, 0], 2000), -2000))
    sign = -((-1.0) ** l)
    r_te = sign * math.ldexp(n_te[idx, 0] / d_te[idx, 0], e)
    r_tm = sign * math.ldexp(n_tm[idx, 0] / d_tm[idx, 0], e)
    return r_te, r_tm


def potential_integrand(r: float, xi, sys: SphereSystem):
    """d U / d xi at radius r: -(hbar mu0 / 8 pi^2 c) xi^3 alpha(i xi) sum_l."""
    if r <= sys.radius:
        raise GeometryError("field point must lie outside the sphere (r > R)")
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.zeros_like(xi_arr)
    # nodes whose Hankel damping e^(-2 xi z / c) underflows contribute zero
    live = 2.0 * xi_arr * (r - sys.radius) / CONST.c < 750.0
    live &= xi_arr > 0.0
    if live.any():
        xs = xi_arr[live]
        series = _series_sum(r, xs, sys)
        pref = -(CONST.hbar * CONST.mu0 / (8.0 * math.pi**2 * CONST.c))
        out[live] = pref * xs**3 * np.asarray(sys.atom.alpha(xs)) * series
    return out if np.ndim(xi) else float(out[0])


def cp_potential_full(r: float, sys: SphereSystem, rel_tol: float = 1.0e-4) -> float:
    """Full Mie-series CP potential, integrated over imaginary frequency."""
    if r <= sys.radius:
        raise GeometryError("field point must lie outside the sphere (r > R)")
    val, _ = imag_axis_quadrature(
        lambda xi: potential_integrand(r, xi, sys),
        scale=sys.atom.dominant_transition,
        rel_tol=rel_tol,
    )
    return val


def cp_potential_nonretarded(r: float, sys: SphereSystem, rel_tol: float = 1.0e-6) -> float:
    """Non-retarded l-series: no Bessel functions, robust convergence.

    U_NR(r) = -(hbar / 8 pi^2 eps0) sum_l (2l+1)(l+1) R^(2l+1)/r^(2l+4)
              int dxi alpha(i xi) (eps-1)/(eps + (l+1)/l)
    """
    if r <= sys.radius:
        raise GeometryError("field point must lie outside the sphere (r > R)")
    rho = sys.radius / r
    # geometric decay (R/r)^(2l) sets how many terms matter
    l_stop = min(sys.l_max, max(2, int(math.ceil(12.0 * math.log(10.0) / (2.0 * abs(math.log(rho))))) + 4))
    lv = np.arange(1, l_stop + 1, dtype=float)[:, None]
    geom = (2.0 * lv + 1.0) * (lv + 1.0) * rho ** (2.0 * lv + 1.0)

    def f(xi):
        eps = np.asarray(sys.sphere.permittivity(xi))[None, :]
        alpha = np.asarray(sys.atom.alpha(xi))[None, :]
        summand = geom * alpha * (eps - 1.0) / (eps + (lv + 1.0) / lv)
        return summand.sum(axis=0)

    integral, _ = imag_axis_quadrature(f, scale=sys.atom.dominant_transition, rel_tol=rel_tol)
    return -(CONST.hbar / (8.0 * math.pi**2 * CONST.eps0)) * integral / r**3


def c3_halfspace(
    sphere: DrudeLorentzModel, atom: PolarizabilityModel, rel_tol: float = 1.0e-6
) -> float:
    """Half-space (Lennard-Jones) constant C3 = z^3 |U| [J m^3]."""

    def f(xi):
        eps = np.asarray(sphere.permittivity(xi))
        return np.asarray(atom.alpha(xi)) * (eps - 1.0) / (eps + 1.0)

    integral, _ = imag_axis_quadrature(f, scale=atom.dominant_transition, rel_tol=rel_tol)
    return CONST.hbar / (16.0 * math.pi**2 * CONST.eps0) * integral


def u_halfspace(z, c3: float):
    """U_BNR(z) = -C3 / z^3 for surface distance z."""
    z = np.asarray(z, dtype=float)
    out = -c3 / z**3
    return out if out.ndim else float(out)


def asymptotic_potentials(r: float, sys: SphereSystem, rel_tol: float = 1.0e-6):
    """Small-sphere potentials (U_S, U_SNR, U_SR) at center distance r.

    U_S keeps the full retardation polynomial
    [3 + 6u + 5u^2 + 2u^3 + u^4] e^(-2u), u = xi r / c; U_SNR is its u -> 0
    limit and U_SR the far-retarded r^-7 form with static response.
    """
    if r <= sys.radius:
        raise GeometryError("field point must lie outside the sphere (r > R)")
    c = CONST.c
    pref = CONST.hbar / (4.0 * math.pi**2 * CONST.eps0) * sys.radius**3 / r**6

    def f_s(xi):
        eps = np.asarray(sys.sphere.permittivity(xi))
        u = xi * r / c
        poly = 3.0 + 6.0 * u + 5.0 * u**2 + 2.0 * u**3 + u**4
        return (
            np.asarray(sys.atom.alpha(xi))
            * (eps - 1.0)
            / (eps + 2.0)
            * np.exp(-2.0 * u)
            * poly
        )

    # map scale follows the retardation cutoff once it bites below the
    # dominant transition
    scale = min(sys.atom.dominant_transition, c / (2.0 * r))
    int_s, _ = imag_axis_quadrature(f_s, scale=scale, rel_tol=rel_tol)
    u_s = -pref * int_s

    def f_snr(xi):
        eps = np.asarray(sys.sphere.permittivity(xi))
        return np.asarray(sys.atom.alpha(xi)) * (eps - 1.0) / (eps + 2.0)

    int_snr, _ = imag_axis_quadrature(
        f_snr, scale=sys.atom.dominant_transition, rel_tol=rel_tol
    )
    u_snr = -3.0 * pref * int_snr

    eps0_stat = float(sys.sphere.permittivity(0.0))
    alpha0 = float(sys.atom.alpha(0.0))
    u_sr = (
        -23.0
        * CONST.hbar
        * c
        / (16.0 * math.pi**2 * CONST.eps0)
        * sys.radius**3
        / r**7
        * alpha0
        * (eps0_stat - 1.0)
        / (eps0_stat + 2.0)
    )
    return u_s, u_snr, u_sr


def stitched_potential(sys: SphereSystem, r_grid) -> PotentialCurve:
    """Production curve: full series outside, half-space law near the surface.

    Scanning from large r inward, the full series is used until
    |U_full / U_BNR - 1| first drops inside stitch_tol; every closer point
    takes the half-space form -C3/z^3 (where l-truncation would dominate).
    """
    r_grid = np.asarray(sorted(r_grid), dtype=float)
    if np.any(r_grid <= sys.radius):
        raise GeometryError("all grid radii must exceed the sphere radius")
    c3 = c3_halfspace(sys.sphere, sys.atom)
    u = np.empty_like(r_grid)
    method = np.empty(r_grid.size, dtype=object)
    r_stitch = None
    for i in range(r_grid.size - 1, -1, -1):
        r = r_grid[i]
        u_bnr = -c3 / (r - sys.radius) ** 3
        if r_stitch is None:
            u_full = cp_potential_full(r, sys)
            if abs(u_full / u_bnr - 1.0) <= sys.stitch_tol:
                r_stitch = r
                u[i] = u_bnr
                method[i] = HALF_SPACE
            else:
                u[i] = u_full
                method[i] = FULL_SERIES
        else:
            u[i] = u_bnr
            method[i] = HALF_SPACE
    return PotentialCurve(
        r=r_grid,
        u=u,
        method=np.array([str(m) for m in method]),
        r_stitch=r_stitch,
        radius=sys.radius,
    )


def default_r_grid(sys: SphereSystem, z_min: float, z_max: float, n: int = 60) -> np.ndarray:
    """Log-spaced grid in surface distance z = r - R."""
    return sys.radius + np.geomspace(z_min, z_max, n)


# ---------------------------------------------------------------------------
# Green's-tensor trace, compact and general (m-resolved) forms
# ---------------------------------------------------------------------------


def greens_trace(r: float, xi: float, sys: SphereSystem, l_cap: int) -> float:
    """Trace of the scattering Green's tensor, m-summed closed form.

    Tr G(r, r, i xi) = -(xi / 4 pi c) sum_l (2l+1) S_l with the S_l of the
    module docstring.
    """
    terms = _series_terms(r, np.array([float(xi)]), sys, l_cap)
    return -(xi / (4.0 * math.pi * CONST.c)) * float(terms.sum())


def greens_trace_msum(
    r: float, xi: float, sys: SphereSystem, theta: float, l_cap: int
) -> float:
    """Trace via the explicit sum over m with associated Legendre rows.

    Evaluates the general coincidence-limit trace (TE and TM vector-wave
    products resolved in m and theta) and must agree with
    :func:`greens_trace` independently of theta.
    """
    n_te, d_te, n_tm, d_tm, kr, kdr, xr, expo = _series_pieces(
        r, np.array([float(xi)]), sys, l_cap
    )
    q, dq, s = legendre_triangle(l_cap, theta)
    total = 0.0
    for l in range(1, l_cap + 1):
        m = np.arange(0, l + 1, dtype=float)
        wm = np.where(m == 0, 1.0, 2.0)
        msin2 = (m * s[l, : l + 1]) ** 2
        m1 = float(np.sum(wm * q[l, : l + 1] ** 2))
        m2 = float(np.sum(wm * (msin2 + dq[l, : l + 1] ** 2)))
        idx = l - 1
        combo = -(n_te[idx, 0] / d_te[idx, 0]) * kr[idx, 0] ** 2 * m2 + (
            n_tm[idx, 0] / d_tm[idx, 0]
        ) * (
            l**2 * (l + 1.0) ** 2 * m1 * kr[idx, 0] ** 2 + kdr[idx, 0] ** 2 * m2
        ) / xr[0] ** 2
        e = int(np.clip(expo[idx, 0], _EXP_FLOOR, _EXP_CEIL))
        total += ((2.0 * l + 1.0) / (l * (l + 1.0))) * math.ldexp(combo, e)
    return -(xi / (4.0 * math.pi * CONST.c)) * total
