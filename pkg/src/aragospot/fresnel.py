"""Poisson-spot (Arago spot) diffraction behind a sphere, by ray decomposition.

The detector amplitude in Fresnel approximation is

    A(P) = -(i / lambda g b) int_0^2pi dphi int_0^inf drho
           G(phi, rho) rho exp(i [phi_g(rho) + dphi_CP(a(rho))])

with the quadratic phase phi_g = (pi/lambda)(1/g + 1/b) rho^2 = kappa rho^2.
For an off-axis point P the integration origin shifts to where the
source-detector line pierces the sphere plane, a distance
c0 = rho_P g/(g+b) from the axis; the sphere disk and the CP annulus then
become circles centered at c0 along theta = 0.

The surface integral is replaced by N_theta equally spaced radial rays.
Along each ray:

* stretches outside the phase annulus are free and integrate in closed
  form, int rho e^(i kappa rho^2) drho = e^(i kappa rho^2) / (2 i kappa)
  between the circle intersections (the oscillatory boundary term at
  infinity averages to zero and is dropped);
* inside the annulus [R_i_CP, R_o_CP] a fixed-step trapezoid picks up the
  local CP phase, interpolated from the PhaseProfile at the true axis
  distance a(rho) = sqrt(rho^2 + c0^2 - 2 rho c0 cos theta) - R;
* everything inside R_i_CP (phase > 4 pi: classically deflected or
  captured) is treated as opaque together with the sphere itself.

Relative intensities are normalised by the same-scheme obstacle-free
amplitude, which cancels any common discretisation bias; with no
obstacle every ray contributes i/(2 kappa) exactly and I_rel = 1.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .eikonal import Beam, PhaseProfile
from .errors import DomainError, GeometryError
from .quadrature import _gl_nodes

_TRAPZ_CHUNK = 2_000_000


@dataclass(frozen=True)
class Scene:
    """Geometry, beam and solver knobs for one diffraction configuration."""

    radius: float                  # sphere radius R [m]
    g: float                       # source - sphere distance [m]
    b: float                       # sphere - detector distance [m]
    beam: Beam
    phase: PhaseProfile | None = None
    source_diameter: float = 20.0e-6
    n_theta: int = 19_997
    cp_step: float = 0.1e-9
    n_pixels_radial: int = 2000

    def __post_init__(self):
        if self.g <= 0.0 or self.b <= 0.0:
            raise DomainError("g and b must be > 0")
        if self.radius < 0.0:
            raise DomainError("radius must be >= 0")
        if self.n_theta < 3:
            raise DomainError("n_theta must be >= 3")
        lam = self.beam.wavelength
        if self.radius > 0.0 and not (
            lam < 1.0e-2 * self.radius and self.radius < 1.0e-2 * min(self.g, self.b)
        ):
            warnings.warn(
                "scene leaves the Fresnel regime (lambda << R << g, b)", stacklevel=2
            )
        if self.phase is not None and abs(self.phase.radius / max(self.radius, 1e-300) - 1.0) > 1e-9:
            raise GeometryError("phase profile belongs to a different sphere radius")

    @property
    def wavelength(self) -> float:
        return self.beam.wavelength

    @property
    def kappa(self) -> float:
        return math.pi / self.wavelength * (1.0 / self.g + 1.0 / self.b)

    @property
    def magnification(self) -> float:
        return self.b / self.g

    def with_b(self, b: float) -> "Scene":
        return replace(self, b=b)

    def without_phase(self) -> "Scene":
        return replace(self, phase=None)


@dataclass
class RadialProfile:
    """Relative intensity on a radial row in the detection plane."""

    rho: np.ndarray
    i_rel: np.ndarray
    b: float
    radius: float
    cp: bool
    convolved: bool = False
    corridor_factor: float = 1.0

    def at(self, rho):
        out = np.interp(rho, self.rho, self.i_rel)
        return out if np.ndim(rho) else float(out)

    def to_text(self, path):
        with open(path, "w") as fh:
            fh.write(f"# b = {self.b:.9e} m\n")
            fh.write(f"# R = {self.radius:.9e} m\n")
            fh.write(f"# cp = {'on' if self.cp else 'off'}\n")
            fh.write(f"# corridor_factor = {self.corridor_factor}\n")
            fh.write(f"# convolved = {self.convolved}\n")
            fh.write("# rho_P[m]  I_rel\n")
            for r, i in zip(self.rho, self.i_rel):
                fh.write(f"{r:.12e} {i:.12e}\n")


@dataclass
class DiffractionImage:
    """Square relative-intensity image assembled from a radial profile."""

    pixels: np.ndarray
    pitch: float
    b: float
    radius: float

    @property
    def n(self) -> int:
        return self.pixels.shape[0]


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------


def geometric_phase(rho, scene: Scene):
    """Quadratic Fresnel phase (pi/lambda)(1/g + 1/b) rho^2."""
    rho = np.asarray(rho, dtype=float)
    out = scene.kappa * rho**2
    return out if out.ndim else float(out)


def _circle_intervals(cos_t: np.ndarray, c0: float, r: float):
    """Per-ray [enter, exit] of the circle (radius r, center c0 along theta=0).

    Rays start at the shifted origin; rows with no crossing carry
    enter = exit = 0.  An origin inside the circle yields enter = 0.
    """
    disc = r * r - c0 * c0 * (1.0 - cos_t**2)
    hit = disc > 0.0
    root = np.sqrt(np.where(hit, disc, 0.0))
    mid = c0 * cos_t
    enter = mid - root
    exit_ = mid + root
    if c0 <= r:
        enter = np.zeros_like(enter)
        hit = np.ones_like(hit)
    else:
        hit = hit & (exit_ > 0.0)
        enter = np.where(hit, np.maximum(enter, 0.0), 0.0)
        exit_ = np.where(hit, exit_, 0.0)
    return enter, exit_, hit


def ray_intersections(theta: float, c0: float, r_circle: float):
    """Interval set (list of (enter, exit)) of a single ray inside a circle."""
    if c0 < 0.0:
        raise DomainError("c0 must be >= 0")
    enter, exit_, hit = _circle_intervals(
        np.array([math.cos(theta)]), c0, r_circle
    )
    if not bool(hit[0]) or exit_[0] <= enter[0]:
        return []
    return [(float(enter[0]), float(exit_[0]))]


def free_segment_amplitude(rho_start: float, scene: Scene, rho_end: float | None = None):
    """Closed-form free radial integral of rho e^(i kappa rho^2).

    ``rho_end=None`` integrates to infinity with the oscillatory boundary
    term dropped: -e^(i kappa rho_start^2) / (2 i kappa).
    """
    if rho_start < 0.0:
        raise DomainError("rho_start must be >= 0")
    k2 = 2.0j * scene.kappa
    if rho_end is None:
        return -np.exp(1j * scene.kappa * rho_start**2) / k2
    return (
        np.exp(1j * scene.kappa * rho_end**2)
        - np.exp(1j * scene.kappa * rho_start**2)
    ) / k2


# ---------------------------------------------------------------------------
# per-ray CP trapezoid
# ---------------------------------------------------------------------------


def _trapz_annulus(starts, ends, cos_t, c0, scene: Scene, profile: PhaseProfile):
    """Trapezoid of rho e^(i[kappa rho^2 + dphi(a)]) over ray segments.

    ``starts/ends/cos_t`` are flat per-segment arrays; returns the summed
    complex contribution of all segments at the scene's cp_step.
    """
    lengths = ends - starts
    keep = lengths > 0.0
    if not np.any(keep):
        return 0.0 + 0.0j
    starts, ends, cos_t = starts[keep], ends[keep], cos_t[keep]
    lengths = lengths[keep]
    n_sub = np.maximum(np.ceil(lengths / scene.cp_step).astype(np.int64), 1)
    steps = lengths / n_sub
    counts = n_sub + 1
    offsets = np.concatenate(([0], np.cumsum(counts)))
    kappa = scene.kappa
    out = 0.0 + 0.0j
    # process whole segments per chunk to keep endpoint weights intact
    seg_lo = 0
    while seg_lo < starts.size:
        seg_hi = seg_lo
        while seg_hi < starts.size and offsets[seg_hi + 1] - offsets[seg_lo] <= _TRAPZ_CHUNK:
            seg_hi += 1
        seg_hi = max(seg_hi, seg_lo + 1)
        sl = slice(seg_lo, seg_hi)
        cnt = counts[sl]
        idx = np.repeat(np.arange(seg_hi - seg_lo), cnt)
        pos = np.arange(int(cnt.sum())) - np.repeat(
            np.concatenate(([0], np.cumsum(cnt)))[:-1], cnt
        )
        rho = starts[sl][idx] + pos * steps[sl][idx]
        w = steps[sl][idx].copy()
        edge = (pos == 0) | (pos == n_sub[sl][idx])
        w[edge] *= 0.5
        d2 = rho**2 + c0 * c0 - 2.0 * rho * c0 * cos_t[sl][idx]
        a = np.sqrt(np.maximum(d2, 0.0)) - scene.radius
        if np.any(a <= 0.0):
            raise GeometryError("annulus sample with non-positive surface distance")
        phase = kappa * rho**2 + profile.interp(a)
        out += np.sum(w * rho * np.exp(1j * phase))
        seg_lo = seg_hi
    return out


def cp_segment_amplitude(theta: float, c0: float, scene: Scene):
    """Annulus contribution of the single ray at angle theta."""
    if scene.phase is None:
        raise DomainError("scene has no phase profile")
    ct = np.array([math.cos(theta)])
    starts, ends, cos_t = _annulus_segments(ct, c0, scene)
    return complex(_trapz_annulus(starts, ends, cos_t, c0, scene, scene.phase))


def _annulus_segments(cos_t: np.ndarray, c0: float, scene: Scene):
    """Flat (start, end, cos_theta) arrays of the CP segments of every ray."""
    prof = scene.phase
    i0, i1, hit_i = _circle_intervals(cos_t, c0, prof.r_i_cp)
    o0, o1, hit_o = _circle_intervals(cos_t, c0, prof.r_o_cp)
    # inner circle lies inside the outer one, so i-intervals nest in o-intervals
    s1 = np.where(hit_o, o0, 0.0)
    e1 = np.where(hit_o, np.where(hit_i, i0, o1), 0.0)
    s2 = np.where(hit_o & hit_i, i1, 0.0)
    e2 = np.where(hit_o & hit_i, o1, 0.0)
    starts = np.concatenate((s1, s2))
    ends = np.concatenate((e1, e2))
    cos_all = np.concatenate((cos_t, cos_t))
    return starts, ends, cos_all


def point_amplitude(rho_p: float, scene: Scene, include_cp: bool = True, obstacle: bool = True):
    """Complex detector amplitude at axis distance rho_P.

    ``include_cp`` switches the CP phase annulus; ``obstacle=False``
    computes the same-scheme free reference used for normalisation.
    """
    n = scene.n_theta
    theta = 2.0 * math.pi * np.arange(n) / n
    ct = np.cos(theta)
    c0 = rho_p * scene.g / (scene.g + scene.b)
    kappa = scene.kappa
    pref = -1j / (scene.wavelength * scene.g * scene.b) * (2.0 * math.pi / n)

    if not obstacle or scene.radius == 0.0:
        total = n * (1j / (2.0 * kappa))
        return pref * total

    use_cp = include_cp and scene.phase is not None
    if use_cp:
        outer0, outer1, hit_outer = _circle_intervals(ct, c0, scene.phase.r_o_cp)
    else:
        outer0, outer1, hit_outer = _circle_intervals(ct, c0, scene.radius)

    # free stretch before entering the outer circle, then the free tail
    ph_in = np.exp(1j * kappa * outer0**2)
    ph_out = np.exp(1j * kappa * outer1**2)
    head = np.where(hit_outer & (outer0 > 0.0), ph_in - 1.0, 0.0) / (2.0j * kappa)
    tail = np.where(hit_outer, -ph_out, -1.0) / (2.0j * kappa)
    total = head.sum() + tail.sum()

    if use_cp:
        starts, ends, cos_all = _annulus_segments(ct, c0, scene)
        total += _trapz_annulus(starts, ends, cos_all, c0, scene, scene.phase)
    return pref * total


def point_intensity(rho_p: float, scene: Scene, include_cp: bool = True) -> float:
    """Relative intensity I_rel(rho_P), normalised to the undisturbed wave."""
    a = point_amplitude(rho_p, scene, include_cp=include_cp)
    a_free = point_amplitude(rho_p, scene, obstacle=False)
    return abs(a) ** 2 / abs(a_free) ** 2


def _profile_worker(args):
    rho_p, scene, include_cp = args
    return point_intensity(rho_p, scene, include_cp=include_cp)


def radial_profile(scene: Scene, include_cp: bool = True, workers: int = 1) -> RadialProfile:
    """I_rel on n_pixels_radial equally spaced radii in [0, R]."""
    rho_max = scene.radius
    if rho_max == 0.0:
        # no obstacle: flat profile over a nominal span
        rho_max = max(2.0 * scene.source_diameter * scene.magnification, 1.0e-7)
    rho = np.linspace(0.0, rho_max, scene.n_pixels_radial)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            vals = list(
                pool.map(
                    _profile_worker,
                    [(float(r), scene, include_cp) for r in rho],
                    chunksize=max(1, rho.size // (8 * workers)),
                )
            )
        i_rel = np.array(vals)
    else:
        i_rel = np.array([point_intensity(float(r), scene, include_cp) for r in rho])
    return RadialProfile(
        rho=rho,
        i_rel=i_rel,
        b=scene.b,
        radius=scene.radius,
        cp=include_cp and scene.phase is not None,
    )


# ---------------------------------------------------------------------------
# source convolution, image assembly, scans
# ---------------------------------------------------------------------------


def convolve_source(profile: RadialProfile, scene: Scene) -> RadialProfile:
    """Convolve with the demagnified source disk (diameter d_src * b/g).

    Circular symmetry reduces the 2-d convolution to a 1-d integral with
    the disk-overlap arc weight; samples beyond the profile range clamp to
    the last value.
    """
    if profile.convolved:
        raise DomainError("profile is already convolved")
    r_k = 0.5 * scene.source_diameter * scene.magnification
    pitch = profile.rho[1] - profile.rho[0]
    if 2.0 * r_k < pitch:
        warnings.warn(
            "demagnified source smaller than a pixel; convolution skipped"
        )
        return replace(profile)
    # fine sample grid across the kernel support
    n_sub = 8
    out = np.empty_like(profile.i_rel)
    for j, rho in enumerate(profile.rho):
        s_lo = max(rho - r_k, 0.0)
        s_hi = rho + r_k
        n_s = max(int(math.ceil((s_hi - s_lo) / pitch)) * n_sub, 16)
        s = np.linspace(s_lo, s_hi, n_s + 1)
        i_s = np.interp(s, profile.rho, profile.i_rel)
        if rho <= 1.0e-300:
            arc = np.full_like(s, 2.0 * math.pi)
        else:
            cosw = (rho**2 + s**2 - r_k**2) / (2.0 * rho * np.maximum(s, 1e-300))
            arc = 2.0 * np.arccos(np.clip(cosw, -1.0, 1.0))
            arc = np.where(s < r_k - rho, 2.0 * math.pi, arc)
        out[j] = np.trapezoid(i_s * arc * s, s) / (math.pi * r_k**2)
    return RadialProfile(
        rho=profile.rho.copy(),
        i_rel=out,
        b=profile.b,
        radius=profile.radius,
        cp=profile.cp,
        convolved=True,
        corridor_factor=profile.corridor_factor,
    )


def assemble_image(profile: RadialProfile, n: int = 4000) -> DiffractionImage:
    """n x n image by symmetry: pixel value = profile at the pixel radius.

    Pixel centers sit at half-integer offsets so the grid maps onto itself
    under quarter turns; radii beyond the profile clamp to its last sample.
    """
    r_max = profile.rho[-1]
    pitch = 2.0 * r_max / n
    coord = (np.arange(n) + 0.5 - n / 2.0) * pitch
    rr = np.hypot(coord[:, None], coord[None, :])
    pix = np.interp(rr, profile.rho, profile.i_rel)
    return DiffractionImage(pixels=pix, pitch=pitch, b=profile.b, radius=profile.radius)


def write_pgm(image: DiffractionImage, path, i_max: float | None = None):
    """16-bit binary P5 graymap plus a sidecar header (same path + '.hdr').

    Intensities map linearly onto [0, 65535] with I = i_max at full scale
    (default: the image maximum).
    """
    if i_max is None:
        i_max = float(image.pixels.max())
    scaled = np.clip(image.pixels / i_max, 0.0, 1.0)
    data = (scaled * 65535.0).round().astype(">u2")
    n = image.n
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n} {n}\n65535\n".encode())
        fh.write(data.tobytes(order="C"))
    with open(str(path) + ".hdr", "w") as fh:
        fh.write(f"pixel_pitch_m = {image.pitch:.9e}\n")
        fh.write(f"gray_full_scale_intensity = {i_max:.9e}\n")
        fh.write(f"b_m = {image.b:.9e}\n")
        fh.write(f"radius_m = {image.radius:.9e}\n")
        fh.write("note = pixel radii clamp to the last profile sample beyond its range\n")


@dataclass
class BScanPoint:
    b: float
    with_cp: RadialProfile
    without_cp: RadialProfile


def b_scan(scene: Scene, b_values, workers: int = 1) -> list[BScanPoint]:
    """Radial profiles with and without the CP phase for each distance b."""
    out = []
    for b in b_values:
        if b <= 0.0:
            raise DomainError("all b values must be > 0")
        sc = scene.with_b(float(b))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            on = radial_profile(sc, include_cp=True, workers=workers)
            off = radial_profile(sc, include_cp=False, workers=workers)
        out.append(BScanPoint(b=float(b), with_cp=on, without_cp=off))
    return out


def fresnel_zone_width(scene: Scene) -> float:
    """Width of the Fresnel zone adjacent to the sphere edge."""
    lam = scene.wavelength
    return (
        math.sqrt(scene.radius**2 + lam * scene.g * scene.b / (scene.g + scene.b))
        - scene.radius
    )


# ---------------------------------------------------------------------------
# brute-force reference (reduced scenes)
# ---------------------------------------------------------------------------


def point_intensity_bruteforce(
    rho_p: float,
    scene: Scene,
    include_cp: bool = True,
    n_rho: int = 4000,
    n_phi: int = 1024,
) -> float:
    """Direct polar quadrature of the Fresnel integral on a reduced scene.

    Works in the unshifted (sphere-centered) frame where the aperture is
    radially symmetric, integrating A - A_free over the compact region
    G e^(i dphi) - 1 != 0 (inside R_o_CP) and adding the exact free-wave
    amplitude.  Independent of the ray decomposition; used as its oracle.
    """
    lam = scene.wavelength
    k = 2.0 * math.pi / lam
    use_cp = include_cp and scene.phase is not None
    r_out = scene.phase.r_o_cp if use_cp else scene.radius
    r_block = scene.phase.r_i_cp if use_cp else scene.radius

    # Gauss-Legendre in rho to soften the quadratic-phase oscillation
    t, w = _gl_nodes(n_rho)
    rho = r_out * t
    wr = r_out * w
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi

    xq = rho[:, None] * np.cos(phi)[None, :]
    yq = rho[:, None] * np.sin(phi)[None, :]
    phase = k * (
        (xq**2 + yq**2) / (2.0 * scene.g)
        + ((xq - rho_p) ** 2 + yq**2) / (2.0 * scene.b)
    )
    mask_open = rho > r_block
    if use_cp:
        dphi = np.zeros(rho.size)
        dphi[mask_open] = scene.phase.interp(rho[mask_open] - scene.radius)
        trans = np.where(mask_open, np.exp(1j * dphi), 0.0)
    else:
        trans = np.where(mask_open, 1.0 + 0.0j, 0.0)
    integrand = (trans[:, None] - 1.0) * np.exp(1j * phase)
    inner = integrand.sum(axis=1) * (2.0 * math.pi / n_phi)
    correction = -1j / (lam * scene.g * scene.b) * np.sum(wr * rho * inner)

    a_free = (1.0 / (scene.g + scene.b)) * np.exp(
        1j * k * rho_p**2 / (2.0 * (scene.g + scene.b))
    )
    return abs(a_free + correction) ** 2 / abs(a_free) ** 2
