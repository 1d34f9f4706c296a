"""Simulation configuration: JSON loading, validation, and built-in presets.

The config file is a single JSON object; see README.md for the schema. Two
presets, ``paper-test-1`` (equal masses) and ``paper-test-2`` (mass ratio 2),
encode the standard two-species relaxation benchmarks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .kinetics import SpeciesSet, SpeciesSpec
from .mixture import kappa_from_scalar, validate_kappa

__all__ = ["SpeciesInit", "SimConfig", "PRESETS", "load_config", "config_from_dict", "get_config"]


@dataclass(frozen=True)
class SpeciesInit:
    mass: float
    charge: float
    density: float
    u0: float
    T0: float


@dataclass(frozen=True)
class SimConfig:
    name: str
    species: tuple[SpeciesInit, ...]
    kappa: np.ndarray
    v_max: float = 4.0
    n_cells: int = 80
    dt: float = 0.2
    t_end: float = 20.0
    mode: str = "grid"
    eps0: float = 1.0
    coulomb_log: np.ndarray | float = 1.0
    gst_tol: float = 1e-12
    gst_max_iter: int = 200
    drift_threshold: float = 1e-4
    dt_ref: float = 1e-3
    csv_path: str | None = None
    plot_path: str | None = None
    stride: int = 1

    @property
    def n_species(self) -> int:
        return len(self.species)

    def species_set(self) -> SpeciesSet:
        return SpeciesSet(
            species=tuple(
                SpeciesSpec(mass=s.mass, charge=s.charge, density=s.density)
                for s in self.species
            ),
            eps0=self.eps0,
            coulomb_log=self.coulomb_log,
        )

    @property
    def u0(self) -> np.ndarray:
        return np.array([s.u0 for s in self.species])

    @property
    def T0(self) -> np.ndarray:
        return np.array([s.T0 for s in self.species])

    def with_overrides(
        self,
        mode: str | None = None,
        dt: float | None = None,
        t_end: float | None = None,
    ) -> "SimConfig":
        cfg = self
        if mode is not None:
            if mode not in ("grid", "moments"):
                raise ConfigError(f"mode must be 'grid' or 'moments', got '{mode}'")
            cfg = replace(cfg, mode=mode)
        if dt is not None:
            if dt <= 0:
                raise ConfigError(f"dt must be positive, got {dt}")
            cfg = replace(cfg, dt=float(dt))
        if t_end is not None:
            if t_end <= 0:
                raise ConfigError(f"t_end must be positive, got {t_end}")
            cfg = replace(cfg, t_end=float(t_end))
        return cfg


_TOP_KEYS = {
    "name", "species", "kappa", "eps0", "coulomb_log", "grid", "time",
    "mode", "solver", "output",
}
_SPECIES_KEYS = {"mass", "charge", "density", "u0", "T0", "theta0"}


def _require_positive(value, key: str, source: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: '{key}' must be a number, got {value!r}") from None
    if not value > 0.0:
        raise ConfigError(f"{source}: '{key}' must be positive, got {value}")
    return value


def _parse_species(entries, source: str) -> tuple[SpeciesInit, ...]:
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{source}: 'species' must be a non-empty list")
    out = []
    for idx, entry in enumerate(entries, start=1):
        where = f"{source}: species[{idx}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where} must be an object")
        unknown = set(entry) - _SPECIES_KEYS
        if unknown:
            raise ConfigError(f"{where} has unknown keys {sorted(unknown)}")
        for key in ("mass", "density"):
            if key not in entry:
                raise ConfigError(f"{where} is missing required key '{key}'")
        mass = _require_positive(entry["mass"], "mass", where)
        density = _require_positive(entry["density"], "density", where)
        charge = float(entry.get("charge", 1.0))
        if "u0" not in entry:
            raise ConfigError(f"{where} is missing required key 'u0'")
        u0 = float(entry["u0"])
        has_T = "T0" in entry
        has_theta = "theta0" in entry
        if has_T == has_theta:
            raise ConfigError(f"{where} must give exactly one of 'T0' or 'theta0'")
        if has_T:
            T0 = _require_positive(entry["T0"], "T0", where)
        else:
            T0 = _require_positive(entry["theta0"], "theta0", where) * mass
        out.append(SpeciesInit(mass=mass, charge=charge, density=density, u0=u0, T0=T0))
    return tuple(out)


def config_from_dict(data: dict, *, name: str = "config", source: str = "<dict>") -> SimConfig:
    """Validate a raw config mapping and construct a SimConfig.

    Error messages name the offending key and the violated constraint.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown top-level keys {sorted(unknown)}")
    species = _parse_species(data.get("species"), source)
    masses = np.array([s.mass for s in species])
    N = masses.size

    raw_kappa = data.get("kappa", 2.0)
    if isinstance(raw_kappa, (int, float)):
        if raw_kappa < 1.0:
            raise ConfigError(
                f"{source}: scalar 'kappa' multiplier must be >= 1, got {raw_kappa}"
            )
        kappa = kappa_from_scalar(float(raw_kappa), masses)
    else:
        kappa = np.asarray(raw_kappa, dtype=float)
        if kappa.shape != (N, N):
            raise ConfigError(
                f"{source}: 'kappa' table must be {N}x{N}, got shape {kappa.shape}"
            )
    try:
        validate_kappa(kappa, masses)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    grid = data.get("grid", {})
    time_block = data.get("time", {})
    solver = data.get("solver", {})
    output = data.get("output", {})
    for block, keys, where in (
        (grid, {"v_max", "n_cells"}, "grid"),
        (time_block, {"dt", "t_end"}, "time"),
        (solver, {"gst_tol", "gst_max_iter", "drift_threshold", "dt_ref"}, "solver"),
        (output, {"csv", "plot", "stride"}, "output"),
    ):
        if not isinstance(block, dict):
            raise ConfigError(f"{source}: '{where}' must be an object")
        unknown = set(block) - keys
        if unknown:
            raise ConfigError(f"{source}: '{where}' has unknown keys {sorted(unknown)}")

    mode = data.get("mode", "grid")
    if mode not in ("grid", "moments"):
        raise ConfigError(f"{source}: mode must be 'grid' or 'moments', got '{mode}'")

    n_cells = int(grid.get("n_cells", 80))
    if n_cells < 4:
        raise ConfigError(f"{source}: grid.n_cells must be at least 4, got {n_cells}")
    stride = int(output.get("stride", 1))
    if stride < 1:
        raise ConfigError(f"{source}: output.stride must be at least 1, got {stride}")
    gst_max_iter = int(solver.get("gst_max_iter", 200))
    if gst_max_iter < 1:
        raise ConfigError(
            f"{source}: solver.gst_max_iter must be at least 1, got {gst_max_iter}"
        )
    eps0 = _require_positive(data.get("eps0", 1.0), "eps0", source)
    coulomb_log = data.get("coulomb_log", 1.0)
    if not isinstance(coulomb_log, (int, float)):
        coulomb_log = np.asarray(coulomb_log, dtype=float)

    cfg = SimConfig(
        name=str(data.get("name", name)),
        species=species,
        kappa=kappa,
        v_max=_require_positive(grid.get("v_max", 4.0), "grid.v_max", source),
        n_cells=n_cells,
        dt=_require_positive(time_block.get("dt", 0.2), "time.dt", source),
        t_end=_require_positive(time_block.get("t_end", 20.0), "time.t_end", source),
        mode=mode,
        eps0=eps0,
        coulomb_log=coulomb_log,
        gst_tol=_require_positive(solver.get("gst_tol", 1e-12), "solver.gst_tol", source),
        gst_max_iter=gst_max_iter,
        drift_threshold=_require_positive(
            solver.get("drift_threshold", 1e-4), "solver.drift_threshold", source
        ),
        dt_ref=_require_positive(solver.get("dt_ref", 1e-3), "solver.dt_ref", source),
        csv_path=output.get("csv"),
        plot_path=output.get("plot"),
        stride=stride,
    )
    try:
        cfg.species_set()
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def load_config(path: str | Path) -> SimConfig:
    """Load and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})"
        ) from None
    return config_from_dict(data, name=path.stem, source=str(path))


def _preset(name: str, masses, T0, u0=(0.5, -0.25)) -> SimConfig:
    species = tuple(
        SpeciesInit(mass=m, charge=1.0, density=1.0, u0=u, T0=T)
        for m, u, T in zip(masses, u0, T0)
    )
    kappa = kappa_from_scalar(2.0, np.array(masses))
    return SimConfig(name=name, species=species, kappa=kappa)


# The two reference relaxation cases. Both use the scalar multiplier c = 2,
# i.e. kappa = 2 max mu over all ordered pairs: kappa = 2 for equal masses
# and kappa = 3 for the mass-ratio-2 case.
PRESETS: dict[str, SimConfig] = {
    "paper-test-1": _preset("paper-test-1", (1.0, 1.0), (0.25, 0.125)),
    "paper-test-2": _preset("paper-test-2", (2.0, 1.0), (0.5, 0.125)),
}


def get_config(name_or_path: str) -> SimConfig:
    """Resolve a preset name or a config file path."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]
    path = Path(name_or_path)
    if path.exists():
        return load_config(path)
    raise ConfigError(
        f"'{name_or_path}' is neither a preset ({', '.join(sorted(PRESETS))}) "
        "nor an existing config file"
    )
