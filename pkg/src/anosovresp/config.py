"""Flat key-value run configuration.

The grammar is one `key = value` assignment per line, `#` comments, blank
lines ignored.  Multi-number values are space separated; the `trig` key may
repeat, one perturbing term per line, as
`trig = component kind amplitude j1 j2 [phase]`.
"""
from __future__ import annotations

import dataclasses

from .errors import ConfigError
from .maps import TorusMapSpec, TrigTerm, builtin_map
from .response import ObjectiveSpec
from .spectral import SpectralConfig

_SCALAR_KEYS = {
    "map", "map_delta", "A", "observable", "obs_p1", "obs_p2", "obs_sigma",
    "obs_path", "n", "N", "gamma", "delta", "deltas", "trials", "seed",
    "out", "quiver",
}

DEFAULT_DELTAS = (1e-3, 2e-3, 4e-3)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a command needs: the map, the observable, and knobs."""

    map_spec: TorusMapSpec
    objective: ObjectiveSpec
    spectral: SpectralConfig
    delta: float = 0.01
    deltas: tuple[float, ...] = DEFAULT_DELTAS
    trials: int = 100
    seed: int = 0
    out: str | None = None
    quiver: int = 24


def default_config() -> RunConfig:
    """The cat-map study with the cosine observable and stock resolution."""
    return RunConfig(
        map_spec=builtin_map("cat"),
        objective=ObjectiveSpec(kind="cosine_sum"),
        spectral=SpectralConfig(n=32, N=128, gamma=0.02),
    )


def _floats(value: str, line_no: int, source: str, count: int | None = None) -> tuple[float, ...]:
    try:
        parts = tuple(float(part) for part in value.split())
    except ValueError:
        raise ConfigError(f"{source}:{line_no}: expected numbers, got '{value}'") from None
    if count is not None and len(parts) != count:
        raise ConfigError(f"{source}:{line_no}: expected {count} numbers, got {len(parts)}")
    return parts


def _parse_trig(value: str, line_no: int, source: str) -> TrigTerm:
    parts = value.split()
    if len(parts) not in (5, 6):
        raise ConfigError(
            f"{source}:{line_no}: trig needs 'component kind amplitude j1 j2 [phase]', "
            f"got {len(parts)} fields"
        )
    try:
        return TrigTerm(
            component=int(parts[0]),
            kind=parts[1],
            amplitude=float(parts[2]),
            j1=int(parts[3]),
            j2=int(parts[4]),
            phase=float(parts[5]) if len(parts) == 6 else 0.0,
        )
    except ValueError as exc:
        raise ConfigError(f"{source}:{line_no}: bad trig term: {exc}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, str] = {}
    positions: dict[str, int] = {}
    terms: list[TrigTerm] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value', got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "trig":
            terms.append(_parse_trig(value, line_no, source))
            continue
        if key not in _SCALAR_KEYS:
            raise ConfigError(f"{source}:{line_no}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{source}:{line_no}: duplicate key '{key}'")
        values[key] = value
        positions[key] = line_no

    def where(key: str) -> str:
        return f"{source}:{positions[key]}"

    def number(key: str, cast, fallback):
        if key not in values:
            return fallback
        try:
            return cast(values[key])
        except ValueError:
            raise ConfigError(f"{where(key)}: bad value for {key}: '{values[key]}'") from None

    map_name = values.get("map", "cat")
    map_delta = number("map_delta", float, 0.01)
    if map_name == "custom":
        if "A" not in values:
            raise ConfigError(f"{source}: map = custom needs an A line")
        entries = _floats(values["A"], positions["A"], source, count=4)
        if any(entry != int(entry) for entry in entries):
            raise ConfigError(f"{where('A')}: linear part must be integer, got {values['A']}")
        linear = ((int(entries[0]), int(entries[1])), (int(entries[2]), int(entries[3])))
        map_spec = TorusMapSpec(linear=linear, terms=tuple(terms), name="custom")
    else:
        if "A" in values or terms:
            raise ConfigError(f"{source}: A and trig lines are only valid with map = custom")
        try:
            map_spec = builtin_map(map_name, delta_param=map_delta)
        except ConfigError:
            raise ConfigError(f"{where('map')}: unknown map '{map_name}'") from None

    kind = values.get("observable", "cosine_sum")
    p1 = p2 = None
    if "obs_p1" in values:
        p1 = _floats(values["obs_p1"], positions["obs_p1"], source, count=2)
    if "obs_p2" in values:
        p2 = _floats(values["obs_p2"], positions["obs_p2"], source, count=2)
    objective = ObjectiveSpec(
        kind=kind,
        p1=p1,
        p2=p2,
        sigma=number("obs_sigma", float, 0.1),
        path=values.get("obs_path"),
    )

    spectral = SpectralConfig(
        n=number("n", int, 32),
        N=number("N", int, 128),
        gamma=number("gamma", float, 0.02),
    )

    deltas = DEFAULT_DELTAS
    if "deltas" in values:
        deltas = _floats(values["deltas"], positions["deltas"], source)
        if not deltas or any(delta <= 0 for delta in deltas):
            raise ConfigError(f"{where('deltas')}: deltas must be positive, got '{values['deltas']}'")

    return RunConfig(
        map_spec=map_spec,
        objective=objective,
        spectral=spectral,
        delta=number("delta", float, 0.01),
        deltas=tuple(deltas),
        trials=number("trials", int, 100),
        seed=number("seed", int, 0),
        out=values.get("out"),
        quiver=number("quiver", int, 24),
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=path)
