"""Experiment descriptions and their construction from flags and config files.

Config files are plain ``key = value`` lines; ``#`` starts a comment.
Keys are the long CLI flag names without dashes (``--k-o`` may be written
``ko`` or ``k_o``). Command-line flags override file values.
"""

from __future__ import annotations

import argparse
import enum
import itertools
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from reluam.model import Variant

COMMANDS = ("train", "phase", "losscurve", "twohidden")
ALGOS = ("am", "gd")
INIT_KINDS = ("zero", "perturbed", "random", "identity", "tensor")


class ConfigError(ValueError):
    pass


class ExperimentKind(str, enum.Enum):
    SINGLE_NEURON_PHASE = "single_phase"
    ONE_HIDDEN_PHASE = "onehidden_phase"
    LOSS_CURVE = "losscurve"
    SKIPPED_PHASE = "skipped_phase"
    TWO_HIDDEN_PHASE = "twohidden_phase"
    TWO_HIDDEN_LOSS = "twohidden_loss"

    @property
    def is_loss(self) -> bool:
        return self in (ExperimentKind.LOSS_CURVE, ExperimentKind.TWO_HIDDEN_LOSS)


_PHASE_KIND = {
    Variant.SINGLE_NEURON: ExperimentKind.SINGLE_NEURON_PHASE,
    Variant.ONE_HIDDEN: ExperimentKind.ONE_HIDDEN_PHASE,
    Variant.SKIPPED: ExperimentKind.SKIPPED_PHASE,
    Variant.TWO_HIDDEN: ExperimentKind.TWO_HIDDEN_PHASE,
}


def experiment_kind(command: str, arch: Variant) -> ExperimentKind:
    if command == "phase":
        return _PHASE_KIND[arch]
    if command == "twohidden":
        if arch is not Variant.TWO_HIDDEN:
            raise ConfigError("the twohidden command requires arch = twohidden")
        return ExperimentKind.TWO_HIDDEN_PHASE
    # train and losscurve both record per-iteration traces
    if arch is Variant.TWO_HIDDEN:
        return ExperimentKind.TWO_HIDDEN_LOSS
    return ExperimentKind.LOSS_CURVE


@dataclass(frozen=True)
class InitSpec:
    kind: str
    delta: float = 0.9
    norm: str = "fro"
    scale: float = 1e-4
    c_mult: float = 3.0

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ConfigError(f"unknown init {self.kind!r}; choose from {', '.join(INIT_KINDS)}")
        if not 0 <= self.delta < 1:
            raise ConfigError(f"delta must lie in [0, 1), got {self.delta}")
        if self.norm not in ("fro", "spectral"):
            raise ConfigError(f"perturbation norm must be fro or spectral, got {self.norm!r}")
        if not self.scale > 0:
            raise ConfigError(f"scale must be positive, got {self.scale}")
        if not self.c_mult > 2:
            raise ConfigError(f"c_mult must exceed 2, got {self.c_mult}")


class GridPoint(NamedTuple):
    algo: str
    init: str
    d: int
    k: int
    k_o: int
    n: int


@dataclass(frozen=True)
class ExperimentSpec:
    command: str
    arch: Variant
    seed: int
    algos: Tuple[str, ...] = ("am",)
    inits: Tuple[InitSpec, ...] = (InitSpec("zero"),)
    d: Tuple[int, ...] = (20,)
    k: Tuple[int, ...] = (1,)
    k_o: Tuple[int, ...] = (0,)
    n: Tuple[int, ...] = (1000,)
    trials: int = 10
    T: Optional[int] = None
    threshold: float = 0.01
    eta: Optional[float] = None
    gamma: float = 3.0
    kappa: float = 1.8
    rcond: Optional[float] = None
    jobs: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "arch", Variant(self.arch))
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown experiment {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for name in ("d", "k", "k_o", "n"):
            if not getattr(self, name):
                raise ConfigError(f"grid axis {name} is empty")
        for a in self.algos:
            if a not in ALGOS:
                raise ConfigError(f"unknown algo {a!r}")
        if "gd" in self.algos:
            if self.eta is None:
                raise ConfigError("gd runs need a step size: missing --eta")
            if not self.eta > 0:
                raise ConfigError("eta must be positive")
            if self.arch is Variant.TWO_HIDDEN:
                raise ConfigError("gd is only implemented for one-hidden-layer architectures")
        if self.T is not None and self.T < 1:
            raise ConfigError("T must be >= 1")
        if min(self.d) < 1 or min(self.n) < 1 or min(self.k) < 1:
            raise ConfigError("d, k and n must be >= 1")
        if self.arch is Variant.SINGLE_NEURON and set(self.k) != {1}:
            raise ConfigError("single-neuron experiments have k = 1")
        if self.arch is Variant.TWO_HIDDEN and min(self.k_o) < 1:
            raise ConfigError("two-hidden experiments need k_o >= 1")
        if self.arch is not Variant.TWO_HIDDEN and set(self.k_o) != {0}:
            raise ConfigError("k_o only applies to arch = twohidden")
        if self.arch is not Variant.TWO_HIDDEN and max(self.k) > min(self.d):
            raise ConfigError("need k <= d at every grid point")
        for init in self.inits:
            if init.kind == "identity" and self.arch is not Variant.SKIPPED:
                raise ConfigError("identity init only applies to arch = skipped")
            if init.kind == "tensor" and self.arch is Variant.TWO_HIDDEN:
                raise ConfigError("tensor init is for one-hidden-layer networks")
        if self.command == "train" and (self.grid_size() != 1):
            raise ConfigError("train runs a single configuration; give scalar grid values")
        experiment_kind(self.command, self.arch)

    @property
    def kind(self) -> ExperimentKind:
        return experiment_kind(self.command, self.arch)

    def grid_size(self) -> int:
        return len(self.algos) * len(self.inits) * len(self.d) * len(self.k) * len(self.k_o) * len(self.n)

    def points(self) -> Iterator[GridPoint]:
        for algo, init, d, k, k_o, n in itertools.product(
            self.algos, self.inits, self.d, self.k, self.k_o, self.n
        ):
            yield GridPoint(algo, init.kind, d, k, k_o, n)

    def init_spec(self, kind: str) -> InitSpec:
        for init in self.inits:
            if init.kind == kind:
                return init
        raise KeyError(kind)

    def iterations(self, algo: str) -> int:
        if self.T is not None:
            return self.T
        if algo == "gd":
            return 200
        return 10 if self.arch is Variant.TWO_HIDDEN else 50

    def to_dict(self) -> dict:
        out = asdict(self)
        out["arch"] = self.arch.value
        out["kind"] = self.kind.value
        return out


# ---------------------------------------------------------------- parsing


def parse_int_list(text: str) -> Tuple[int, ...]:
    """``"5"``, ``"3,4,6"`` or ``"25:200:25"`` (inclusive stop); pieces may be mixed."""
    values: List[int] = []
    for piece in str(text).split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            if ":" in piece:
                parts = [int(p) for p in piece.split(":")]
                if len(parts) == 2:
                    parts.append(1)
                if len(parts) != 3 or parts[2] <= 0:
                    raise ValueError
                start, stop, step = parts
                values.extend(range(start, stop + 1, step))
            else:
                values.append(int(piece))
        except ValueError:
            raise ConfigError(f"malformed integer range {piece!r}") from None
    if not values:
        raise ConfigError(f"empty grid specification {text!r}")
    return tuple(values)


def _names(text: str) -> Tuple[str, ...]:
    return tuple(p.strip() for p in str(text).split(",") if p.strip())


# key -> (type, help); "list" values accept comma/range syntax
FIELDS: Dict[str, Tuple[str, str]] = {
    "experiment": ("str", "train | phase | losscurve | twohidden"),
    "arch": ("str", "single | onehidden | skipped | twohidden"),
    "algo": ("str", "am, gd, or a comma list"),
    "init": ("str", "zero | perturbed | random | identity | tensor (comma list allowed)"),
    "delta": ("float", "relative perturbation of the truth for perturbed init"),
    "norm": ("str", "fro | spectral: norm used for the perturbation"),
    "scale": ("float", "standard deviation of the scaled random init"),
    "cmult": ("float", "shift multiple C / ||P|| for tensor init"),
    "eta": ("float", "gradient-descent step size (required for gd)"),
    "gamma": ("float", "scale of the residual weights in skipped teachers"),
    "kappa": ("float", "condition number of dense one-hidden teachers"),
    "d": ("list", "input dimension(s)"),
    "k": ("list", "hidden width(s)"),
    "ko": ("list", "second hidden width(s), twohidden only"),
    "n": ("list", "sample count(s)"),
    "trials": ("int", "Monte-Carlo trials per grid point"),
    "T": ("int", "maximum iterations"),
    "threshold": ("float", "recovery threshold on relative error"),
    "seed": ("int", "root seed"),
    "rcond": ("float", "relative singular-value cut-off of the least-squares solver"),
    "jobs": ("int", "parallel worker processes"),
    "out": ("str", "CSV output path"),
}
_ALIASES = {"k_o": "ko", "c_mult": "cmult", "t": "T", "algos": "algo", "inits": "init", "command": "experiment"}

DEFAULT_INIT = {
    Variant.SINGLE_NEURON: "zero",
    Variant.ONE_HIDDEN: "random",
    Variant.SKIPPED: "identity",
    Variant.TWO_HIDDEN: "perturbed",
}


def read_config_file(path) -> Dict[str, str]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, _ALIASES.get(key.lower(), key))
        if key not in FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="reluam",
        description="Alternating minimization vs gradient descent for ReLU teacher networks.",
    )
    p.add_argument("experiment", nargs="?", choices=COMMANDS, default=None)
    p.add_argument("--config", default=None, help="key = value file; flags override it")
    for key, (kind, help_) in FIELDS.items():
        if key == "experiment":
            continue
        flags = [f"--{key}"]
        if key == "ko":
            flags.append("--k-o")
        if key == "cmult":
            flags.append("--c-mult")
        p.add_argument(*flags, dest=key, default=None, help=help_)
    return p


def _convert(key: str, value: str):
    kind = FIELDS[key][0]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"malformed value for {key}: {value!r}") from None
    if kind == "list":
        return parse_int_list(value)
    return value


@dataclass
class ParsedConfig:
    spec: ExperimentSpec
    out: Optional[str] = None
    overrides: List[str] = field(default_factory=list)
    config_file: Optional[str] = None


def parse_config(argv: Optional[Sequence[str]] = None, file=None) -> ParsedConfig:
    """Build an :class:`ExperimentSpec` from CLI arguments and an optional config file.

    ``file`` is used when ``--config`` is not among ``argv``. Keys present in
    both with different values are listed in ``overrides`` (the flag wins).
    """
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    config_path = args.config if args.config is not None else file
    merged: Dict[str, str] = dict(read_config_file(config_path)) if config_path else {}
    overrides = []
    for key in FIELDS:
        value = getattr(args, key, None)
        if value is None:
            continue
        if key in merged and str(merged[key]) != str(value):
            overrides.append(key)
        merged[key] = value
    return ParsedConfig(
        spec=spec_from_mapping(merged),
        out=merged.get("out"),
        overrides=overrides,
        config_file=str(config_path) if config_path else None,
    )


def spec_from_mapping(values: Dict[str, str]) -> ExperimentSpec:
    values = {_ALIASES.get(k, k): v for k, v in values.items()}
    unknown = set(values) - set(FIELDS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    for required in ("experiment", "seed"):
        if values.get(required) in (None, ""):
            raise ConfigError(f"missing required key: {required}")
    v = {k: _convert(k, val) for k, val in values.items() if val is not None}

    command = v["experiment"]
    if command not in COMMANDS:
        raise ConfigError(f"unknown experiment {command!r}; choose from {', '.join(COMMANDS)}")
    default_arch = "twohidden" if command == "twohidden" else "onehidden"
    try:
        arch = Variant(v.get("arch", default_arch))
    except ValueError:
        raise ConfigError(f"unknown arch {v.get('arch')!r}") from None
    algos = _names(v.get("algo", "am"))
    if "gd" in algos and "eta" not in v:
        raise ConfigError("gd runs need a step size: missing --eta")

    two = arch is Variant.TWO_HIDDEN
    init_kw = {
        "delta": v.get("delta", 0.2 if two else 0.9),
        "norm": v.get("norm", "spectral" if two else "fro"),
        "scale": v.get("scale", 1e-4),
        "c_mult": v.get("cmult", 3.0),
    }
    inits = tuple(InitSpec(kind, **init_kw) for kind in _names(v.get("init", DEFAULT_INIT[arch])))

    default_k = (1,) if arch is Variant.SINGLE_NEURON else (3,)
    return ExperimentSpec(
        command=command,
        arch=arch,
        seed=v["seed"],
        algos=algos,
        inits=inits,
        d=v.get("d", (20,)),
        k=v.get("k", default_k),
        k_o=v.get("ko", (2,) if two else (0,)),
        n=v.get("n", (1000,)),
        trials=v.get("trials", 1 if command == "train" else 10),
        T=v.get("T"),
        threshold=v.get("threshold", 0.01),
        eta=v.get("eta"),
        gamma=v.get("gamma", 3.0),
        kappa=v.get("kappa", 1.8),
        rcond=v.get("rcond"),
        jobs=v.get("jobs"),
    )
