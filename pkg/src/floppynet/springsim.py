"""Finite-stiffness spring relaxation and derived elastic measurements.

Networks relax under overdamped dynamics with per-coordinate uniform noise;
the stretching energy of the final state gives the shear modulus under the
top-row shear protocol, and per-edge extensions under radial stretching of a
circular boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import BoundaryRowsError, IntegrationDiverged
from .networks import ROW_SPACING, Network

#: Energy at or below this many noise-variance units per edge is considered
#: indistinguishable from the noise floor.
NOISE_FLOOR_FACTOR = 100.0


@dataclass
class SimConfig:
    stiffness: float = 1.0          # spring constant k
    l0: float = 1.0                 # reference rest length in the energy prefactor
    dt: float = 0.05                # time step (drag coefficient is 1)
    steps: int = 20000
    noise_amplitude: float = 1e-4   # uniform displacement noise, per coordinate
    seed: int = 0
    boundary_protocol: str = "none"  # none | shear_top_row | radial_stretch
    strain: float = 0.08            # shear strain gamma

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be >= 0")


@dataclass
class SimResult:
    positions: np.ndarray
    energy: float
    per_edge_extension: np.ndarray
    scaled_extension: np.ndarray
    shear_modulus: float | None = None
    noise_floor_flagged: bool = False
    energy_trace: np.ndarray | None = None


def stretching_energy(positions: np.ndarray, network: Network,
                      config: SimConfig) -> float:
    a, b, rest = network.edge_arrays()
    if len(a) == 0:
        return 0.0
    lengths = np.linalg.norm(positions[a] - positions[b], axis=1)
    return float(0.5 * config.stiffness / config.l0 * ((lengths - rest) ** 2).sum())


def forces(positions: np.ndarray, network: Network, config: SimConfig) -> np.ndarray:
    """Negative gradient of the stretching energy, per node."""
    n = network.n_nodes
    a, b, rest = network.edge_arrays()
    out = np.zeros((n, 2))
    if len(a) == 0:
        return out
    d = positions[a] - positions[b]
    lengths = np.linalg.norm(d, axis=1)
    coef = -(config.stiffness / config.l0) * (lengths - rest) / lengths
    pair = coef[:, None] * d
    for axis in (0, 1):
        out[:, axis] = (np.bincount(a, weights=pair[:, axis], minlength=n)
                        - np.bincount(b, weights=pair[:, axis], minlength=n))
    return out


def relax(network: Network, config: SimConfig, record_energy: bool = False,
          diameter: float | None = None) -> SimResult:
    """Run the overdamped integration; fixed nodes are held exactly.

    The reported energy is evaluated on the final positions as-is, with no
    extra noise applied in the measurement.
    """
    x = network.positions.copy()
    free = ~network.fixed
    n_free = int(free.sum())
    a_idx, b_idx, rest = network.edge_arrays()
    n = network.n_nodes
    k_over_l0 = config.stiffness / config.l0
    rng = np.random.default_rng(config.seed)
    trace = np.empty(config.steps) if record_energy else None

    # overflow during a blow-up is expected; divergence is caught explicitly
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(config.steps):
            if len(a_idx):
                d = x[a_idx] - x[b_idx]
                lengths = np.sqrt((d * d).sum(axis=1))
                coef = -k_over_l0 * (lengths - rest) / lengths
                pair = coef[:, None] * d
                fx = np.bincount(a_idx, weights=pair[:, 0], minlength=n) \
                    - np.bincount(b_idx, weights=pair[:, 0], minlength=n)
                fy = np.bincount(a_idx, weights=pair[:, 1], minlength=n) \
                    - np.bincount(b_idx, weights=pair[:, 1], minlength=n)
                x[free, 0] += config.dt * fx[free]
                x[free, 1] += config.dt * fy[free]
            if config.noise_amplitude > 0 and n_free:
                x[free] += rng.uniform(-config.noise_amplitude,
                                       config.noise_amplitude, (n_free, 2))
            if record_energy:
                trace[step] = stretching_energy(x, network, config)
            if step % 500 == 499 and not np.isfinite(x).all():
                raise IntegrationDiverged(
                    f"positions diverged at dt={config.dt}")
    if not np.isfinite(x).all():
        raise IntegrationDiverged(f"positions diverged at dt={config.dt}")

    energy = stretching_energy(x, network, config)
    if len(a_idx):
        extension = np.linalg.norm(x[a_idx] - x[b_idx], axis=1) - rest
    else:
        extension = np.zeros(0)
    if diameter is None:
        diameter = network.diameter()
    scaled = extension / diameter if diameter > 0 else extension.copy()
    floor = NOISE_FLOOR_FACTOR * len(a_idx) * k_over_l0 * config.noise_amplitude ** 2
    return SimResult(x, energy, extension, scaled,
                     noise_floor_flagged=bool(energy <= floor),
                     energy_trace=trace)


def _lattice_dims(network: Network) -> tuple[int, int]:
    meta = network.metadata
    if "nx" in meta and "ny" in meta:
        return int(meta["nx"]), int(meta["ny"])
    ys = np.unique(np.round(network.positions[:, 1] / ROW_SPACING).astype(int))
    ny = len(ys)
    nx = int((network.positions[:, 1] < 0.5 * ROW_SPACING).sum())
    return nx, ny


def _row_nodes(network: Network, row_y: float) -> np.ndarray:
    return np.flatnonzero(np.abs(network.positions[:, 1] - row_y) < 0.25 * ROW_SPACING)


def shear_modulus(network: Network, config: SimConfig) -> SimResult:
    """Shear the top lattice row sideways, relax, and report G = (2/A) E/g^2.

    Top-row nodes are displaced rightwards by ``strain`` times the lattice
    height and held there together with the bottom row; A is the undeformed
    bounding area of the lattice.
    """
    nx, ny = _lattice_dims(network)
    if nx < 2 or ny < 2:
        raise BoundaryRowsError("network has no identifiable rows")
    y0 = float(network.positions[:, 1].min())
    y1 = float(network.positions[:, 1].max())
    bottom = _row_nodes(network, y0)
    top = _row_nodes(network, y1)
    if len(bottom) == 0 or len(top) == 0 or y1 - y0 < 0.5 * ROW_SPACING:
        raise BoundaryRowsError("network has no identifiable top/bottom rows")

    height = (ny - 1) * config.l0 * ROW_SPACING
    sheared = network.copy()
    sheared.positions[top, 0] += config.strain * height
    sheared.fixed[top] = True
    sheared.fixed[bottom] = True

    result = relax(sheared, config)
    area = (nx - 1) * config.l0 * height
    g = 2.0 / area * result.energy / config.strain ** 2
    result.shear_modulus = float(g)
    return result


def radial_stretch(network: Network, config: SimConfig,
                   stretch: float = 0.10) -> SimResult:
    """Displace the fixed boundary radially outward and relax the interior.

    Extensions are also reported scaled by the pre-stretch boundary diameter.
    """
    boundary = np.flatnonzero(network.fixed)
    if len(boundary) == 0:
        raise BoundaryRowsError("network has no fixed boundary nodes")
    centre = network.positions[boundary].mean(axis=0)
    radii = np.linalg.norm(network.positions[boundary] - centre, axis=1)
    diameter = 2.0 * float(radii.max())

    stretched = network.copy()
    stretched.positions[boundary] = (
        centre + (1.0 + stretch) * (network.positions[boundary] - centre))
    return relax(stretched, config, diameter=diameter)
