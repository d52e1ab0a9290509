"""Stable special functions on the imaginary frequency axis.

Modified spherical Bessel functions
-----------------------------------
The sphere scattering series needs ``j_l`` and ``h_l^(1)`` at purely
imaginary argument ``z = i x`` together with the Riccati derivatives
``[z f(z)]'``.  On the imaginary axis every required combination is real
once the powers of ``i`` are factored out:

    I_l(x)  =  i^(-l) j_l(i x)              (> 0, decreasing in l)
    K_l(x)  =  i^(+l) h_l^(1)(i x)          (< 0 for every l)
    JI_l(x) =  i^(-l) [z j_l(z)]'  at z=ix  = (l+1) I_l + x I_{l+1}
    KD_l(x) =  i^(+l) [z h_l(z)]'  at z=ix  = -x K_{l-1} - l K_l

``I_l`` and ``K_l`` are (up to constants) the modified spherical Bessel
functions of the first and second kind.  Individually they leave the
double range long before l ~ 1000, so every value is carried as a
mantissa/exponent pair ``m * 2**e``; the Riccati derivative of order l
shares the exponent of its companion function.

Recurrence directions: first kind by downward (Miller) recurrence seeded
``(0, 1)`` above the requested order and normalised at ``I_0 =
sinh(x)/x``; third kind by upward recurrence from the closed forms at
l = 0.  Both directions only ever add terms of equal sign, so there is
no cancellation anywhere in the kernel.

The public :class:`ScaledBesselRow` stores the third kind in the
alternating convention ``i^(-l) h_l^(1)(ix) = (-1)^l K_l`` whose l = 0
member is the familiar ``-exp(-x)/x``.

Associated Legendre functions
-----------------------------
For the general (m-resolved) Green's-tensor trace we provide rows of
``P_l^m(cos theta)`` in the Condon-Shortley convention, their theta
derivatives, and the combination ``m P_l^m / sin(theta)`` evaluated by
recurrence so the theta -> 0, pi limits are finite.  Internally the
semi-normalised functions

    Q_l^m = sqrt((l-m)!/(l+m)!) P_l^m

are used; they stay bounded up to l = 1000 where the raw functions
overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, DomainError

HARD_L_CAP = 10_000

_LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# scaled modified spherical Bessel functions
# ---------------------------------------------------------------------------


@dataclass
class BesselBatch:
    """Fixed-sign scaled rows for a batch of arguments.

    Arrays have shape ``(l_max + 1, n)``.  True values are
    ``mantissa * 2**exponent``; ``ric_first`` shares ``e_plus`` with
    ``first`` and ``ric_third`` shares ``e_minus`` with ``third``.
    ``third``/``ric_third`` use the fixed-sign convention ``K_l``/``KD_l``
    from the module docstring.
    """

    l_max: int
    x: np.ndarray
    first: np.ndarray        # I_l mantissas
    ric_first: np.ndarray    # JI_l mantissas (exponent e_plus)
    e_plus: np.ndarray       # int exponents, shape (l_max+1, n)
    third: np.ndarray        # K_l mantissas (negative)
    ric_third: np.ndarray    # KD_l mantissas (positive, exponent e_minus)
    e_minus: np.ndarray


@dataclass
class ScaledBesselRow:
    """Scaled function row at a single argument, spec conventions.

    ``first_kind[l]`` is the mantissa of ``i^(-l) j_l(ix)`` and
    ``third_kind[l]`` the mantissa of ``i^(-l) h_l^(1)(ix)`` (signs
    alternate; l = 0 value is ``-exp(-x)/x``).  ``ric_first`` and
    ``ric_third`` hold ``[z f(z)]'`` at ``z = ix`` under the same
    per-order scaling, i.e. order l shares ``e_plus[l]`` resp.
    ``e_minus[l]`` with its function value.
    """

    l_max: int
    x: float
    first_kind: np.ndarray
    ric_first: np.ndarray
    e_plus: np.ndarray
    third_kind: np.ndarray
    ric_third: np.ndarray
    e_minus: np.ndarray

    def first(self, l: int) -> float:
        """Unscaled i^(-l) j_l(ix); may over/underflow for extreme orders."""
        return math.ldexp(self.first_kind[l], int(self.e_plus[l]))

    def third(self, l: int) -> float:
        """Unscaled i^(-l) h_l^(1)(ix); may over/underflow for extreme orders."""
        return math.ldexp(self.third_kind[l], int(self.e_minus[l]))


def _exp_scaled(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """exp(x) as (mantissa, power-of-two exponent), safe for any |x|."""
    t = x / _LN2
    e = np.floor(t)
    return np.exp2(t - e), e.astype(np.int64)


def _sinhc_scaled(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """sinh(x)/x as a scaled pair (overflow-free for large x)."""
    m, e = _exp_scaled(x)
    # sinh(x)/x = e^x (1 - e^(-2x)) / (2x); the correction underflows
    # harmlessly to 0 for large x.
    corr = -np.expm1(-2.0 * x)
    mant, de = np.frexp(m * corr / (2.0 * x))
    return mant, e + de


def bessel_batch(l_max: int, x: np.ndarray) -> BesselBatch:
    """Scaled I/K rows and Riccati derivatives for every order 0..l_max.

    ``x`` is a 1-d array of positive arguments; the recurrences run once
    over l operating on the whole batch.
    """
    if l_max < 0:
        raise DomainError("l_max must be non-negative")
    if l_max > HARD_L_CAP:
        raise ConfigurationError(f"l_max={l_max} exceeds hard cap {HARD_L_CAP}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DomainError("x must be scalar or 1-d")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("arguments must be finite and > 0")

    n = x.size
    n_rows = l_max + 2  # orders 0..l_max+1, the extra row feeds JI_l

    mi = np.zeros((n_rows, n))
    ei = np.zeros((n_rows, n), dtype=np.int64)

    # ---- first kind ------------------------------------------------------
    # Downward Miller recurrence; the growing-solution contamination of a
    # start order L damps like exp((l^2 - L^2)/x) for x >~ L and far faster
    # for x << L, so L^2 >= (l_max+10)^2 + 80 x keeps the seed error below
    # 1e-17 everywhere at O(min(x, sqrt(x))) extra steps.  For x far above
    # l_max^2 the upward recurrence is stable too (contamination grows only
    # as exp(l^2/x)) and costs O(l_max), so those columns switch direction.
    up = x > np.maximum(0.2 * (l_max + 2.0) ** 2, 3.0 * (l_max + 2.0) + 20.0)
    down = ~up

    if down.any():
        xd = x[down]
        l_start = np.ceil(np.sqrt((l_max + 10.0) ** 2 + 80.0 * xd)).astype(np.int64)
        l_top = int(l_start.max())

        ma = np.zeros(xd.size)                # ~ I_{l+1}
        ea = np.zeros(xd.size, dtype=np.int64)
        mb = np.zeros(xd.size)                # ~ I_l
        eb = np.zeros(xd.size, dtype=np.int64)
        mid = np.zeros((n_rows, xd.size))
        eid = np.zeros((n_rows, xd.size), dtype=np.int64)
        for l in range(l_top, -1, -1):
            seed = l_start == l
            if seed.any():
                ma[seed] = 0.0
                ea[seed] = 0
                mb[seed] = 1.0
                eb[seed] = 0
            if l <= l_max + 1:
                mid[l] = mb
                eid[l] = eb
            if l == 0:
                break
            # I_{l-1} = I_{l+1} + ((2l+1)/x) I_l, aligned to exponent of I_l
            val = ma * np.exp2((ea - eb).astype(float)) + ((2.0 * l + 1.0) / xd) * mb
            mnew, de = np.frexp(val)
            ma, ea = mb, eb
            mb, eb = mnew, eb + de

        # normalise against I_0 = sinh(x)/x
        m0, e0 = _sinhc_scaled(xd)
        ratio = m0 / mid[0]
        eshift = e0 - eid[0]
        mid *= ratio
        eid += eshift
        mm, de = np.frexp(mid)
        mi[:, down] = mm
        ei[:, down] = eid + de

    if up.any():
        xu = x[up]
        m0, e0 = _sinhc_scaled(xu)
        # I_1 = (x cosh x - sinh x)/x^2 = e^x [x - 1 + (x + 1) e^(-2x)] / (2 x^2)
        em, ee = _exp_scaled(xu)
        m1raw = em * (xu - 1.0 + (xu + 1.0) * np.exp(-2.0 * xu)) / (2.0 * xu**2)
        m1, d1 = np.frexp(m1raw)
        e1 = ee + d1
        mp_, ep_ = m0, e0
        mq_, eq_ = m1, e1
        miu = np.zeros((n_rows, xu.size))
        eiu = np.zeros((n_rows, xu.size), dtype=np.int64)
        miu[0], eiu[0] = mp_, ep_
        if n_rows > 1:
            miu[1], eiu[1] = mq_, eq_
        for l in range(1, n_rows - 1):
            # I_{l+1} = I_{l-1} - ((2l+1)/x) I_l, aligned to exponent of I_l
            val = mp_ * np.exp2((ep_ - eq_).astype(float)) - ((2.0 * l + 1.0) / xu) * mq_
            mnew, de = np.frexp(val)
            mp_, ep_ = mq_, eq_
            mq_, eq_ = mnew, eq_ + de
            miu[l + 1], eiu[l + 1] = mq_, eq_
        mi[:, up] = miu
        ei[:, up] = eiu

    # Riccati [z j_l]' -> JI_l = (l+1) I_l + x I_{l+1}, sharing e_plus[l]
    lv = np.arange(l_max + 1).reshape(-1, 1)
    mji = (lv + 1.0) * mi[: l_max + 1] + x * mi[1: l_max + 2] * np.exp2(
        (ei[1: l_max + 2] - ei[: l_max + 1]).astype(float)
    )

    # ---- third kind: upward recurrence ----------------------------------
    mk = np.zeros((l_max + 1, n))
    ek = np.zeros((l_max + 1, n), dtype=np.int64)
    mkd = np.zeros((l_max + 1, n))

    em, ee = _exp_scaled(-x)
    mc, dc = np.frexp(-em / x)            # K_0 = K_{-1} = -e^(-x)/x
    mp, ep = mc, ee + dc                  # K_{l-1}
    mq, eq = mc.copy(), (ee + dc).copy()  # K_l
    for l in range(0, l_max + 1):
        mk[l] = mq
        ek[l] = eq
        gap = np.exp2((ep - eq).astype(float))
        mkd[l] = -x * mp * gap - l * mq   # KD_l, shares e_minus[l]
        if l == l_max:
            break
        # K_{l+1} = K_{l-1} + ((2l+1)/x) K_l, aligned to exponent of K_l
        val = mp * gap + ((2.0 * l + 1.0) / x) * mq
        mnew, de = np.frexp(val)
        mp, ep = mq, eq
        mq, eq = mnew, eq + de

    return BesselBatch(
        l_max=l_max,
        x=x,
        first=mi[: l_max + 1],
        ric_first=mji,
        e_plus=ei[: l_max + 1],
        third=mk,
        ric_third=mkd,
        e_minus=ek,
    )


def modified_sph_bessel(l_max: int, x: float) -> ScaledBesselRow:
    """Scaled modified spherical Bessel row at a single argument.

    First kind by downward (Miller) recurrence normalised at l = 0, third
    kind by upward recurrence; each order carries a shared power-of-two
    exponent for the function value and its Riccati derivative.
    """
    if not np.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be finite and > 0, got {x}")
    batch = bessel_batch(l_max, np.array([float(x)]))
    sign = np.where(np.arange(l_max + 1) % 2 == 0, 1.0, -1.0)
    return ScaledBesselRow(
        l_max=l_max,
        x=float(x),
        first_kind=batch.first[:, 0].copy(),
        ric_first=batch.ric_first[:, 0].copy(),
        e_plus=batch.e_plus[:, 0].copy(),
        third_kind=sign * batch.third[:, 0],
        ric_third=sign * batch.ric_third[:, 0],
        e_minus=batch.e_minus[:, 0].copy(),
    )


def first_kind_upward(l_max: int, x: float) -> np.ndarray:
    """I_l row by upward recurrence from the l = 0, 1 closed forms.

    Only stable while l stays below ~x (the minimal solution is contaminated
    by the growing one otherwise); used as a cross-check of the downward
    pass in its common stability window.
    """
    if x <= 0:
        raise DomainError("x must be > 0")
    out = np.empty(l_max + 1)
    out[0] = math.sinh(x) / x
    if l_max >= 1:
        out[1] = (x * math.cosh(x) - math.sinh(x)) / x**2
    for l in range(1, l_max):
        out[l + 1] = out[l - 1] - ((2 * l + 1) / x) * out[l]
    return out


# ---------------------------------------------------------------------------
# associated Legendre rows
# ---------------------------------------------------------------------------


@dataclass
class LegendreRow:
    """Associated Legendre data of a single degree l at angle theta.

    ``values[m]`` are the raw ``P_l^m(cos theta)`` (Condon-Shortley),
    ``dtheta[m]`` their theta derivatives and ``m_over_sin[m]`` the
    combination ``m P_l^m / sin(theta)`` continued to theta in {0, pi}.
    Raw values overflow doubles for extreme (l, m); the semi-normalised
    ``norm_*`` companions stay bounded for l <= 1000 and are the form the
    trace oracle consumes.
    """

    l: int
    theta: float
    values: np.ndarray
    dtheta: np.ndarray
    m_over_sin: np.ndarray
    norm_values: np.ndarray
    norm_dtheta: np.ndarray
    norm_m_over_sin: np.ndarray


def legendre_triangle(l_max: int, theta: float):
    """Semi-normalised Legendre triangle Q, dQ/dtheta and m Q / sin(theta).

    Returns three ``(l_max+1, l_max+1)`` arrays indexed ``[l, m]`` (entries
    with m > l are zero).  The sin-divided array is computed by running the
    l-recurrence on ``Q/sin(theta)`` directly, so it is finite at the poles.
    """
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    ct = math.cos(theta)
    st = math.sin(theta)
    size = l_max + 1
    q = np.zeros((size, size))
    s = np.zeros((size, size))  # Q / sin(theta), column m = 0 left zero

    q[0, 0] = 1.0
    dseed = 1.0
    sseed = 0.0
    m_idx = np.arange(size, dtype=float)
    prev_q = np.zeros(size)
    cur_q = np.zeros(size)
    prev_s = np.zeros(size)
    cur_s = np.zeros(size)
    cur_q[0] = 1.0

    for l in range(0, l_max):
        # advance l -> l+1 for every column m <= l (entries beyond are 0)
        c1 = (2.0 * l + 1.0) * ct
        c2 = np.sqrt(np.maximum(l * l - m_idx * m_idx, 0.0))
        # clamp keeps the masked m > l lanes free of 0-division; the
        # m = l+1 lane is overwritten by the diagonal seed below
        c3 = np.sqrt(np.maximum((l + 1.0) ** 2 - m_idx**2, 1.0))
        new_q = np.where(m_idx <= l, (c1 * cur_q - c2 * prev_q) / c3, 0.0)
        new_s = np.where(m_idx <= l, (c1 * cur_s - c2 * prev_s) / c3, 0.0)
        # diagonal seeds for degree l+1
        dseed *= -st * math.sqrt((2.0 * l + 1.0) / (2.0 * l + 2.0))
        new_q[l + 1] = dseed
        if l == 0:
            sseed = -math.sqrt(0.5)
        else:
            sseed *= -st * math.sqrt((2.0 * l + 1.0) / (2.0 * l + 2.0))
        new_s[l + 1] = sseed
        prev_q, cur_q = cur_q, new_q
        prev_s, cur_s = cur_s, new_s
        q[l + 1] = cur_q
        s[l + 1] = cur_s
    s[:, 0] = 0.0

    # dQ_l^m/dtheta = [sqrt((l-m)(l+m+1)) Q_l^(m+1) - sqrt((l+m)(l-m+1)) Q_l^(m-1)] / 2
    dq = np.zeros((size, size))
    for l in range(0, l_max + 1):
        m = np.arange(0, l + 1, dtype=float)
        lo = np.sqrt((l + m) * (l - m + 1.0))
        hi = np.sqrt((l - m) * (l + m + 1.0))
        qm1 = np.empty(l + 1)
        qm1[1:] = q[l, : l]
        qm1[0] = -q[l, 1] if l >= 1 else 0.0  # Q_l^{-1} = -Q_l^{1}
        qp1 = np.zeros(l + 1)
        qp1[: l] = q[l, 1: l + 1]
        dq[l, : l + 1] = 0.5 * (hi * qp1 - lo * qm1)
    return q, dq, s


def assoc_legendre_row(l: int, theta: float) -> LegendreRow:
    """Associated Legendre row P_l^m, dP_l^m/dtheta, m P_l^m/sin(theta).

    Condon-Shortley phase; near the poles the sin-divided combination is
    produced by its recurrence rather than by division.
    """
    if l < 0:
        raise DomainError("l must be non-negative")
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    q, dq, s = legendre_triangle(l, theta)
    m = np.arange(l + 1, dtype=float)
    # raw = Q * sqrt((l+m)!/(l-m)!); overflows to inf beyond double range
    with np.errstate(over="ignore", invalid="ignore"):
        factor = np.exp(0.5 * (gammaln(l + m + 1.0) - gammaln(l - m + 1.0)))
        values = q[l] * factor
        dtheta = dq[l] * factor
        m_over_sin = m * s[l] * factor
    return LegendreRow(
        l=l,
        theta=theta,
        values=values,
        dtheta=dtheta,
        m_over_sin=m_over_sin,
        norm_values=q[l].copy(),
        norm_dtheta=dq[l].copy(),
        norm_m_over_sin=m * s[l],
    )
