"""Plain-text experiment configuration.

One ``section.key = value`` pair per line; ``#`` starts a comment.  Vectors
are comma separated, matrices use ``;`` between rows (a scalar stands for a
multiple of the identity).  Potentials are written as ``;``-separated
``coefficient@exponents`` terms, e.g. ``2@2; 1@3; 0.1@4`` in 1-D or
``1@2,0; 1@0,2`` in 2-D.

Recognised keys and defaults are listed in ``DEFAULTS``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import MultiIndex, PacketParams
from .dynamics import ModelConfig
from .integrators import IntegratorSpec, Method
from .potentials import PolynomialPotential

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULTS", "parse_config", "load_config",
           "parse_potential", "parse_matrix", "parse_vector"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


DEFAULTS: dict[str, str] = {
    "model.hbar": "0.05",
    "model.mass": "1",
    "model.n": "5",
    "model.potential": "2@2; 1@3; 0.1@4",
    "model.corrections": "true",
    "initial.q": "0.25",
    "initial.p": "1",
    "initial.A": "0",
    "initial.B": "1",
    "initial.phi": "0",
    "initial.delta": "",
    "initial.normalize": "true",
    "integrator.method": "variational_splitting",
    "integrator.dt": "0.01",
    "integrator.t_final": "3.39",
    "egorov.samples": "100000",
    "egorov.seed": "0",
    "egorov.scheme": "absolute",
    "output.dir": "out",
    "output.plots": "false",
    "packet.points": "1024",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_vector(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",") if v.strip()])


def parse_matrix(text: str, d: int) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    if len(rows) == 1 and len(rows[0].split(",")) == 1:
        return float(rows[0]) * np.eye(d)
    M = np.array([parse_vector(r) for r in rows])
    if M.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got shape {M.shape}")
    return M


def parse_potential(text: str) -> PolynomialPotential:
    terms = []
    for term in text.split(";"):
        term = term.strip()
        if not term:
            continue
        coef, sep, exps = term.partition("@")
        if not sep:
            raise ValueError(f"term {term!r} is not of the form coefficient@exponents")
        terms.append((float(coef), tuple(int(e) for e in exps.split(","))))
    return PolynomialPotential(terms)


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise ValueError(f"must be positive, got {v}")
    return v


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    initial: PacketParams
    integrator: IntegratorSpec
    samples: int
    seed: int
    scheme: str
    out_dir: Path
    plots: bool
    packet_points: int

    def with_overrides(self, out_dir=None, seed=None, plots=None) -> "ExperimentConfig":
        kw = {}
        if out_dir is not None:
            kw["out_dir"] = Path(out_dir)
        if seed is not None:
            kw["seed"] = int(seed)
        if plots:
            kw["plots"] = True
        return replace(self, **kw)


def _read_pairs(text: str) -> tuple[dict[str, str], dict[str, int]]:
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()
        lines[key] = lineno
    return values, lines


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; errors name the offending line and key."""
    given, lines = _read_pairs(text)
    raw = {**DEFAULTS, **given}

    def where(key):
        return f"line {lines[key]}: " if key in lines else "default "

    def get(key, conv):
        try:
            return conv(raw[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where(key)}key {key!r}: {exc}") from None

    n = get("model.n", lambda s: MultiIndex(tuple(int(v) for v in s.split(","))))
    d = n.d
    potential = get("model.potential", parse_potential)
    hbar, mass = get("model.hbar", _positive), get("model.mass", _positive)
    corrections = get("model.corrections", _parse_bool)
    try:
        model = ModelConfig(hbar, mass, n, potential, corrections)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None

    q = get("initial.q", parse_vector)
    p = get("initial.p", parse_vector)
    for key, v in (("initial.q", q), ("initial.p", p)):
        if v.shape != (d,):
            raise ConfigError(f"{where(key)}key {key!r}: expected {d} entries, got {v.size}")
    A = get("initial.A", lambda s: parse_matrix(s, d))
    B = get("initial.B", lambda s: parse_matrix(s, d))
    normalize = get("initial.normalize", _parse_bool)
    delta = None
    if raw["initial.delta"]:
        if normalize and "initial.normalize" in lines:
            raise ConfigError(f"{where('initial.delta')}key 'initial.delta' conflicts with "
                              "initial.normalize = true")
        delta = get("initial.delta", float)
    elif not normalize:
        raise ConfigError("initial.delta is required when initial.normalize = false")
    phi = get("initial.phi", float)
    try:
        initial = PacketParams.create(q, p, A, B, phi=phi, delta=delta,
                                      hbar=model.hbar)
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from None

    method = get("integrator.method", Method)
    dt, t_final = get("integrator.dt", _positive), get("integrator.t_final", float)
    try:
        integ = IntegratorSpec(method, dt, t_final)
    except ValueError as exc:
        raise ConfigError(f"integrator: {exc}") from None

    samples = get("egorov.samples", int)
    if samples < 1:
        raise ConfigError(f"{where('egorov.samples')}key 'egorov.samples': must be at least 1")
    seed = get("egorov.seed", int)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(f"{where('egorov.seed')}key 'egorov.seed': must fit in an unsigned 64-bit integer")
    scheme = raw["egorov.scheme"]
    if scheme not in ("absolute", "envelope"):
        raise ConfigError(f"{where('egorov.scheme')}key 'egorov.scheme': unknown scheme {scheme!r}")
    points = get("packet.points", int)
    if points < 2:
        raise ConfigError(f"{where('packet.points')}key 'packet.points': must be at least 2")
    return ExperimentConfig(model, initial, integ, samples, seed, scheme,
                            Path(raw["output.dir"]), get("output.plots", _parse_bool), points)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
