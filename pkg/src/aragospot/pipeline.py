"""Run orchestration: config parsing, beam setup, staged execution, manifests.

A run is described by one YAML config (sections: material, geometry, beam,
solver, source, outputs).  ``run_pipeline`` executes
materials -> C3/potential -> phase profile -> diffraction per b and writes
every requested artifact plus a JSON manifest carrying the config hash,
the constants version, per-stage timings and the SHA-256 of every output
file.  Reruns of an identical config reproduce byte-identical numeric
outputs (no RNG anywhere in the pipeline).
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .constants import CONST
from .eikonal import Beam, capture_impact_parameter, phase_profile
from .errors import ConfigurationError, DomainError
from .fresnel import (
    Scene,
    assemble_image,
    convolve_source,
    fresnel_zone_width,
    radial_profile,
    write_pgm,
)
from .materials import (
    INDIUM_MASS_AMU,
    DrudeLorentzModel,
    OpticalDataTable,
    PolarizabilityModel,
    fit_drude_lorentz,
    indium,
    kramers_kronig_imag_axis,
    silica,
)
from .potential import SphereSystem, c3_halfspace, default_r_grid, stitched_potential

CORRIDOR_FACTORS = (0.8, 1.0, 1.8)


def beam_from_temperature(t_s: float, mass: float) -> Beam:
    """Mean thermal beam: v = sqrt(8 k_B T / (pi m)), lambda = h/(m v)."""
    if t_s <= 0.0:
        raise DomainError("source temperature must be > 0")
    v = math.sqrt(8.0 * CONST.k_B * t_s / (math.pi * mass))
    return Beam(mass=mass, speed=v)


def boltzmann_excited_fraction(atom: PolarizabilityModel, t_s: float) -> float:
    """Occupation of the lowest excited level, exp(-hbar w01 / k_B T)."""
    if not atom.transitions:
        raise DomainError("atom model has no transitions")
    if t_s <= 0.0:
        return 0.0
    return math.exp(-CONST.hbar * atom.lowest_transition / (CONST.k_B * t_s))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Parsed run configuration with experiment defaults."""

    sphere_lines: tuple = tuple(silica().resonances)
    optical_data: str | None = None
    fit_lines: int = 2
    atom_j0: float = 0.5
    atom_transitions: tuple = tuple(indium().transitions)
    radius: float = 50.0e-9
    g: float = 0.6
    b: float | None = 1.0e-4
    b_range: tuple | None = None
    temperature: float | None = 1473.15
    mass_amu: float = INDIUM_MASS_AMU
    speed: float | None = None
    l_max: int = 800
    stitch_tol: float = 0.03
    n_theta: int = 19_997
    cp_step: float = 0.1e-9
    n_pixels: int = 2000
    image_pixels: int = 4000
    workers: int = 1
    profile_form: str = "powerlaw"
    source_diameter: float = 20.0e-6
    out_dir: str = "out"
    artifacts: tuple = ("material", "potential", "phase", "profiles")
    corridor: bool = False
    no_cp: bool = False
    z_grid: tuple = (1.0e-9, 10.0, 48)  # (z_min [m], z_max in units of R, points)

    def __post_init__(self):
        if (self.temperature is None) == (self.speed is None):
            raise ConfigurationError(
                "exactly one of beam.temperature and beam.speed must be given"
            )
        if self.b is None and self.b_range is None:
            raise ConfigurationError("geometry needs b or b_range")
        if self.optical_data is not None and not Path(self.optical_data).exists():
            raise ConfigurationError(f"optical data file not found: {self.optical_data}")

    # -- yaml mapping -------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        kw = {}
        mat = raw.get("material", {})
        sphere = mat.get("sphere", {})
        if "drude_lorentz" in sphere:
            kw["sphere_lines"] = tuple(tuple(r) for r in sphere["drude_lorentz"])
        if "optical_data" in sphere:
            kw["optical_data"] = sphere["optical_data"]
            kw["fit_lines"] = int(sphere.get("fit_lines", 2))
        atom = mat.get("atom", {})
        if "j0" in atom:
            kw["atom_j0"] = float(atom["j0"])
        if "transitions" in atom:
            kw["atom_transitions"] = tuple(tuple(t) for t in atom["transitions"])
        geo = raw.get("geometry", {})
        for src, dst in (("radius", "radius"), ("g", "g")):
            if src in geo:
                kw[dst] = float(geo[src])
        if "b_range" in geo:
            lo, hi, n = geo["b_range"]
            kw["b_range"] = (float(lo), float(hi), int(n))
            kw["b"] = None
        elif "b" in geo:
            kw["b"] = float(geo["b"])
        beam = raw.get("beam", {})
        if "speed" in beam:
            kw["speed"] = float(beam["speed"])
            kw["temperature"] = None
        elif "temperature" in beam:
            kw["temperature"] = float(beam["temperature"])
        if "mass_amu" in beam:
            kw["mass_amu"] = float(beam["mass_amu"])
        sol = raw.get("solver", {})
        for src, dst, cast in (
            ("l_max", "l_max", int),
            ("stitch_tol", "stitch_tol", float),
            ("n_theta", "n_theta", int),
            ("cp_step", "cp_step", float),
            ("n_pixels", "n_pixels", int),
            ("image_pixels", "image_pixels", int),
            ("workers", "workers", int),
            ("profile_form", "profile_form", str),
        ):
            if src in sol:
                kw[dst] = cast(sol[src])
        if "diameter" in raw.get("source", {}):
            kw["source_diameter"] = float(raw["source"]["diameter"])
        outs = raw.get("outputs", {})
        if "directory" in outs:
            kw["out_dir"] = str(outs["directory"])
        if "artifacts" in outs:
            kw["artifacts"] = tuple(outs["artifacts"])
        if "corridor" in outs:
            kw["corridor"] = bool(outs["corridor"])
        if "no_cp" in outs:
            kw["no_cp"] = bool(outs["no_cp"])
        return cls(**kw)

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        sphere: dict = {"drude_lorentz": [list(r) for r in self.sphere_lines]}
        if self.optical_data is not None:
            sphere = {"optical_data": self.optical_data, "fit_lines": self.fit_lines}
        beam = (
            {"temperature": self.temperature, "mass_amu": self.mass_amu}
            if self.temperature is not None
            else {"speed": self.speed, "mass_amu": self.mass_amu}
        )
        geo: dict = {"radius": self.radius, "g": self.g}
        if self.b_range is not None:
            geo["b_range"] = list(self.b_range)
        else:
            geo["b"] = self.b
        return {
            "material": {
                "sphere": sphere,
                "atom": {
                    "j0": self.atom_j0,
                    "transitions": [list(t) for t in self.atom_transitions],
                },
            },
            "geometry": geo,
            "beam": beam,
            "solver": {
                "l_max": self.l_max,
                "stitch_tol": self.stitch_tol,
                "n_theta": self.n_theta,
                "cp_step": self.cp_step,
                "n_pixels": self.n_pixels,
                "image_pixels": self.image_pixels,
                "workers": self.workers,
                "profile_form": self.profile_form,
            },
            "source": {"diameter": self.source_diameter},
            "outputs": {
                "directory": self.out_dir,
                "artifacts": list(self.artifacts),
                "corridor": self.corridor,
                "no_cp": self.no_cp,
            },
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    # -- derived objects ----------------------------------------------------

    def sphere_model(self) -> DrudeLorentzModel:
        if self.optical_data is not None:
            table = OpticalDataTable.from_file(self.optical_data)
            xi = np.geomspace(table.omega[0], table.omega[-1], 120)
            eps = np.array([kramers_kronig_imag_axis(table, x) for x in xi])
            return fit_drude_lorentz(xi, eps, self.fit_lines).model
        return DrudeLorentzModel(resonances=self.sphere_lines)

    def atom_model(self) -> PolarizabilityModel:
        return PolarizabilityModel(j0=self.atom_j0, transitions=self.atom_transitions)

    def make_beam(self) -> Beam:
        mass = self.mass_amu * CONST.amu
        if self.speed is not None:
            return Beam(mass=mass, speed=self.speed)
        return beam_from_temperature(self.temperature, mass)

    def b_values(self) -> list[float]:
        if self.b_range is not None:
            lo, hi, n = self.b_range
            return [float(x) for x in np.linspace(lo, hi, n)]
        return [float(self.b)]


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _fmt_b(b: float) -> str:
    return f"{b * 1e3:.4f}mm"


def run_pipeline(config: RunConfig, stages: tuple = ("material", "potential", "phase", "diffract")) -> dict:
    """Execute the staged run and return the manifest (also written to disk).

    Any stage error aborts with the stage name attached; the partial
    manifest written so far still lands next to the outputs.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "config_hash": hashlib.sha256(config.to_yaml().encode()).hexdigest(),
        "constants_version": CONST.version,
        "deterministic": True,
        "stages": [],
        "outputs": [],
        "numbers": {},
    }
    written: list[Path] = []

    def note_stage(name, t0):
        manifest["stages"].append({"name": name, "seconds": round(time.time() - t0, 3)})

    def emit(path: Path):
        written.append(path)

    try:
        # ---- material stage ------------------------------------------------
        t0 = time.time()
        stage = "material"
        sphere = config.sphere_model()
        atom = config.atom_model()
        beam = config.make_beam()
        manifest["numbers"]["mean_speed_m_s"] = beam.speed
        manifest["numbers"]["wavelength_m"] = beam.wavelength
        if config.temperature is not None:
            manifest["numbers"]["excited_fraction"] = boltzmann_excited_fraction(
                atom, config.temperature
            )
        if "material" in config.artifacts and "material" in stages:
            path = out / "material.txt"
            xi = np.geomspace(1.0e12, 1.0e19, 141)
            with open(path, "w") as fh:
                fh.write("# sphere permittivity model (omega_p, omega_t, gamma) [rad/s]\n")
                for line in sphere.resonances:
                    fh.write(f"# line: {line[0]:.6e} {line[1]:.6e} {line[2]:.6e}\n")
                fh.write("# xi[rad/s]  eps(i xi)  alpha(i xi)[C^2 m^2 / J]\n")
                for x in xi:
                    fh.write(
                        f"{x:.6e} {sphere.permittivity(x):.9e} {atom.alpha(x):.9e}\n"
                    )
            emit(path)
        note_stage(stage, t0)

        # ---- potential stage -------------------------------------------------
        t0 = time.time()
        stage = "potential"
        c3 = c3_halfspace(sphere, atom)
        manifest["numbers"]["c3_J_m3"] = c3
        if config.radius > 0.0 and "potential" in config.artifacts and "potential" in stages:
            sys_ = SphereSystem(
                radius=config.radius,
                sphere=sphere,
                atom=atom,
                l_max=config.l_max,
                stitch_tol=config.stitch_tol,
            )
            z_min, z_max_r, n_pts = config.z_grid
            grid = default_r_grid(sys_, z_min, z_max_r * config.radius, int(n_pts))
            curve = stitched_potential(sys_, grid)
            path = out / "potential_curve.txt"
            curve.to_text(path)
            emit(path)
            manifest["numbers"]["r_stitch_m"] = curve.r_stitch
        note_stage(stage, t0)

        # ---- phase stage ----------------------------------------------------
        t0 = time.time()
        stage = "phase"
        prof = None
        if config.radius > 0.0:
            prof = phase_profile(config.radius, c3, beam, form=config.profile_form)
            manifest["numbers"]["c52_m52"] = prof.c52
            manifest["numbers"]["r_i_cp_m"] = prof.r_i_cp
            manifest["numbers"]["r_o_cp_m"] = prof.r_o_cp
            manifest["numbers"]["a_min_m"] = capture_impact_parameter(
                config.radius, c3, beam
            )
            if "phase" in config.artifacts and "phase" in stages:
                path = out / "phase_profile.txt"
                prof.to_text(path)
                emit(path)
        note_stage(stage, t0)

        # ---- diffraction stage -----------------------------------------------
        if "diffract" in stages and (
            "profiles" in config.artifacts or "images" in config.artifacts
        ):
            t0 = time.time()
            stage = "diffract"
            factors = CORRIDOR_FACTORS if config.corridor else (1.0,)
            for b in config.b_values():
                for factor in factors:
                    prof_f = (
                        prof
                        if factor == 1.0 or prof is None
                        else phase_profile(
                            config.radius, factor * c3, beam, form=config.profile_form
                        )
                    )
                    scene = Scene(
                        radius=config.radius,
                        g=config.g,
                        b=b,
                        beam=beam,
                        phase=None if (config.no_cp or prof_f is None) else prof_f,
                        source_diameter=config.source_diameter,
                        n_theta=config.n_theta,
                        cp_step=config.cp_step,
                        n_pixels_radial=config.n_pixels,
                    )
                    manifest["numbers"].setdefault("w_fz_m", {})[_fmt_b(b)] = (
                        fresnel_zone_width(scene)
                    )
                    runs = [(True, "on")] if scene.phase is not None else []
                    runs.append((False, "off"))
                    for include_cp, tag in runs:
                        rp = radial_profile(
                            scene, include_cp=include_cp, workers=config.workers
                        )
                        rp.corridor_factor = factor
                        suffix = f"_x{factor:g}" if factor != 1.0 else ""
                        if "profiles" in config.artifacts:
                            path = out / f"profile_b{_fmt_b(b)}_cp-{tag}{suffix}.txt"
                            rp.to_text(path)
                            emit(path)
                        conv = convolve_source(rp, scene)
                        if "profiles" in config.artifacts:
                            path = out / f"profile_b{_fmt_b(b)}_cp-{tag}{suffix}_conv.txt"
                            conv.to_text(path)
                            emit(path)
                        if "images" in config.artifacts and factor == 1.0:
                            img = assemble_image(conv, n=config.image_pixels)
                            path = out / f"image_b{_fmt_b(b)}_cp-{tag}.pgm"
                            write_pgm(img, path)
                            emit(path)
                            emit(Path(str(path) + ".hdr"))
            note_stage(stage, t0)
    except Exception as err:
        manifest["failed_stage"] = stage
        _write_manifest(out, manifest, written)
        raise RuntimeError(f"pipeline stage {stage!r} failed: {err}") from err

    _write_manifest(out, manifest, written)
    return manifest


def _write_manifest(out: Path, manifest: dict, written: list[Path]):
    manifest["outputs"] = [
        {"path": str(p.relative_to(out)), "sha256": _sha256(p)} for p in written
    ]
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
