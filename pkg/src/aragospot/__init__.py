"""Casimir-Polder interaction of an atom with a dielectric sphere and the
resulting Poisson-spot (Arago spot) matter-wave diffraction images."""

__version__ = "0.1.0"

from .constants import CONST  # noqa: F401
from .eikonal import Beam, PhaseProfile, annulus_radii, c52, phase_profile  # noqa: F401
from .fresnel import Scene, b_scan, point_intensity, radial_profile  # noqa: F401
from .materials import (  # noqa: F401
    DrudeLorentzModel,
    OpticalDataTable,
    PolarizabilityModel,
    indium,
    silica,
)
from .pipeline import RunConfig, run_pipeline  # noqa: F401
from .potential import (  # noqa: F401
    PotentialCurve,
    SphereSystem,
    c3_halfspace,
    cp_potential_full,
    stitched_potential,
)
