"""Flat ``key = value`` experiment configuration with dotted keys."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .kernels import KernelSpec
from .problems import DEFAULT_JITTER, PROBLEM_NAMES, NoiseSpec
from .projnewton import PntOptions

SOLVER_NAMES = ("proj-newton", "proj-newton-md", "full-newton")

# Every key the parser accepts, with its coercion.
_BOOL = {"true": True, "false": False, "on": True, "off": False, "1": True, "0": False}

_KNOWN_KEYS = {
    "problem": str,
    "problem.n": int,
    "problem.side": int,
    "problem.psf_radius": int,
    "problem.psf_sigma": float,
    "noise.level": float,
    "noise.kind": str,
    "noise.seed": int,
    "kernel": str,
    "kernel.kind": str,
    "kernel.l": float,
    "kernel.nu": float,
    "kernel.jitter": float,
    "tau": float,
    "solvers": str,
    "solver.lambda0": float,
    "solver.c": float,
    "solver.eta": float,
    "solver.tol": float,
    "solver.dp_tol": float,
    "solver.max_iters": int,
    "solver.min_step": float,
    "solver.k0": int,
    "solver.reorthogonalize": str,
    "oracles": str,
    "output": str,
}


@dataclass
class ExperimentConfig:
    """Resolved experiment description."""

    problem: str
    n: int = 200
    side: int = 32
    psf_radius: int = 4
    psf_sigma: float = 1.5
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(level=5e-2))
    kernel: KernelSpec | None = None
    jitter: float = DEFAULT_JITTER
    tau: float = 1.001
    solvers: tuple[str, ...] = ("proj-newton",)
    options: PntOptions = field(default_factory=PntOptions)
    oracles: str = "auto"  # auto | on | off
    output: str = "out"

    def problem_kwargs(self, n: int | None = None) -> dict:
        kwargs = dict(noise=self.noise, kernel=self.kernel, jitter=self.jitter, tau=self.tau)
        if self.problem == "blur":
            kwargs.update(side=self.side, psf_sigma=self.psf_sigma, psf_radius=self.psf_radius)
        else:
            kwargs.update(n=self.n if n is None else n)
        return kwargs

    def echo(self) -> str:
        """Resolved configuration as config-file text, for provenance."""
        lines = [f"problem = {self.problem}"]
        if self.problem == "blur":
            lines += [
                f"problem.side = {self.side}",
                f"problem.psf_radius = {self.psf_radius}",
                f"problem.psf_sigma = {self.psf_sigma:g}",
            ]
        else:
            lines.append(f"problem.n = {self.n}")
        lines += [
            f"noise.level = {self.noise.level:g}",
            f"noise.kind = {self.noise.kind}",
            f"noise.seed = {self.noise.seed}",
            f"kernel = {self.kernel.label()}" if self.kernel else "kernel = <problem default>",
            f"kernel.jitter = {self.jitter:g}",
            f"tau = {self.tau:g}",
            f"solvers = {', '.join(self.solvers)}",
            f"solver.lambda0 = {self.options.lambda0:g}",
            f"solver.c = {self.options.c:g}",
            f"solver.eta = {self.options.eta:g}",
            f"solver.dp_tol = {self.options.dp_tol:g}",
            f"solver.max_iters = {self.options.max_iters}",
            f"solver.min_step = {self.options.min_step:g}",
            f"solver.k0 = {self.options.k0}",
            f"solver.reorthogonalize = {str(self.options.reorthogonalize).lower()}",
            f"oracles = {self.oracles}",
            f"output = {self.output}",
        ]
        if self.options.tol is not None:
            lines.append(f"solver.tol = {self.options.tol:g}")
        return "\n".join(lines) + "\n"


def _parse_pairs(text: str, source: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        pairs[key] = value
    return pairs


def _coerce(key: str, value: str):
    kind = _KNOWN_KEYS[key]
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def _as_bool(key: str, value: str) -> bool:
    try:
        return _BOOL[value.lower()]
    except KeyError as exc:
        raise ConfigError(f"bad boolean for {key!r}: {value!r}") from exc


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    pairs = _parse_pairs(text, source)
    if "problem" not in pairs:
        raise ConfigError(f"{source}: missing required key 'problem'")
    problem = pairs.pop("problem")
    if problem not in PROBLEM_NAMES:
        raise ConfigError(f"{source}: unknown problem {problem!r}")

    values = {key: _coerce(key, raw) for key, raw in pairs.items()}

    kernel = None
    if "kernel" in values and any(k.startswith("kernel.") and k != "kernel.jitter" for k in values):
        raise ConfigError(f"{source}: give either 'kernel = ...' or kernel.kind/l/nu, not both")
    if "kernel" in values:
        kernel = KernelSpec.parse(values["kernel"])
    elif "kernel.kind" in values:
        if "kernel.l" not in values:
            raise ConfigError(f"{source}: kernel.kind requires kernel.l")
        kernel = KernelSpec(values["kernel.kind"], values["kernel.l"], values.get("kernel.nu"))
    elif "kernel.l" in values or "kernel.nu" in values:
        raise ConfigError(f"{source}: kernel.l/kernel.nu require kernel.kind")

    noise = NoiseSpec(
        level=values.get("noise.level", 5e-2),
        kind=values.get("noise.kind", "white"),
        seed=values.get("noise.seed", 0),
    )

    solvers = tuple(
        token.strip()
        for token in values.get("solvers", "proj-newton").split(",")
        if token.strip()
    )
    for name in solvers:
        if name not in SOLVER_NAMES:
            raise ConfigError(f"{source}: unknown solver {name!r}; choose from {SOLVER_NAMES}")
    if not solvers:
        raise ConfigError(f"{source}: no solvers selected")

    options = PntOptions(
        tau=values.get("tau", 1.001),
        lambda0=values.get("solver.lambda0", 0.1),
        c=values.get("solver.c", 1e-4),
        eta=values.get("solver.eta", 0.9),
        tol=values.get("solver.tol"),
        dp_tol=values.get("solver.dp_tol", 1e-8),
        max_iters=values.get("solver.max_iters", 200),
        min_step=values.get("solver.min_step", 1e-16),
        k0=values.get("solver.k0", 1),
        reorthogonalize=_as_bool(
            "solver.reorthogonalize", values.get("solver.reorthogonalize", "true")
        ),
    )
    options.validate()

    oracles = values.get("oracles", "auto")
    if oracles not in ("auto", "on", "off"):
        raise ConfigError(f"{source}: oracles must be auto/on/off")

    if "proj-newton-md" in solvers and options.k0 < 2:
        raise ConfigError(f"{source}: proj-newton-md requires solver.k0 >= 2")

    return ExperimentConfig(
        problem=problem,
        n=values.get("problem.n", 200),
        side=values.get("problem.side", 32),
        psf_radius=values.get("problem.psf_radius", 4),
        psf_sigma=values.get("problem.psf_sigma", 1.5),
        noise=noise,
        kernel=kernel,
        jitter=values.get("kernel.jitter", DEFAULT_JITTER),
        tau=values.get("tau", 1.001),
        solvers=solvers,
        options=options,
        oracles=oracles,
        output=values.get("output", "out"),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))
